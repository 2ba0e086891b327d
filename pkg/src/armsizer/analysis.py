"""Agreement metrics between the fast serial path and the constraint-
consistent path: per-joint Pearson correlation, RMSE and bias.

Population statistics over the full cycle. A flat trace has no defined
correlation; it is reported as None (never NaN) and the pass/fail gate
falls back to the RMSE criterion alone for such joints.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .dynamics import TorqueProfile

FLAT_TRACE_STD = 1e-12


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class JointMetrics:
    joint: str
    correlation: float | None  # None when either trace is flat
    rmse: float
    bias: float  # mean(first - second)


@dataclass(frozen=True)
class ComparisonMetrics:
    joints: tuple[JointMetrics, ...]
    first_path: str
    second_path: str


def compare_profiles(demo: TorqueProfile, pro: TorqueProfile) -> ComparisonMetrics:
    """Per-joint agreement of two torque traces on the same grid."""
    if demo.tau.shape != pro.tau.shape:
        raise AnalysisError(
            f"profiles have different shapes: {demo.tau.shape} vs {pro.tau.shape}")
    if len(demo.t) != len(pro.t) or np.max(np.abs(demo.t - pro.t)) > 1e-12:
        raise AnalysisError("profiles are on different time grids")
    joints = []
    for j in range(demo.tau.shape[1]):
        d = demo.tau[:, j]
        p = pro.tau[:, j]
        err = d - p
        rmse = float(np.sqrt(np.mean(err**2)))
        bias = float(np.mean(err))
        sd_d = float(np.std(d))
        sd_p = float(np.std(p))
        if sd_d < FLAT_TRACE_STD or sd_p < FLAT_TRACE_STD:
            corr = None
        else:
            corr = float(np.mean((d - d.mean()) * (p - p.mean())) / (sd_d * sd_p))
        joints.append(JointMetrics(joint=f"J{j+1}", correlation=corr, rmse=rmse, bias=bias))
    return ComparisonMetrics(joints=tuple(joints), first_path=demo.path, second_path=pro.path)


@dataclass(frozen=True)
class GateResult:
    joint: str
    passed: bool
    reasons: tuple[str, ...]


def agreement_gate(metrics: ComparisonMetrics, threshold_corr: float = 0.99,
                   threshold_rmse: float = 5.0) -> tuple[GateResult, ...]:
    """Per-joint diagnostic: may the fast path stand in for the reference?"""
    out = []
    for m in metrics.joints:
        reasons = []
        if m.correlation is None:
            if m.rmse > threshold_rmse:
                reasons.append(f"rmse {m.rmse:.3f} > {threshold_rmse:.3f} (flat trace, rmse-only rule)")
        else:
            if m.correlation < threshold_corr:
                reasons.append(f"correlation {m.correlation:.4f} < {threshold_corr:.4f}")
            if m.rmse > threshold_rmse:
                reasons.append(f"rmse {m.rmse:.3f} > {threshold_rmse:.3f}")
        out.append(GateResult(joint=m.joint, passed=not reasons, reasons=tuple(reasons)))
    return tuple(out)


def metrics_to_csv(metrics: ComparisonMetrics) -> str:
    """CSV layout joint,correlation,rmse_Nm,bias_Nm (correlation blank when undefined)."""
    buf = io.StringIO()
    buf.write("joint,correlation,rmse_Nm,bias_Nm\n")
    for m in metrics.joints:
        corr = "" if m.correlation is None else f"{m.correlation:.4f}"
        buf.write(f"{m.joint},{corr},{m.rmse:.3f},{m.bias:.3f}\n")
    return buf.getvalue()


def metrics_to_document(metrics: ComparisonMetrics) -> dict:
    return {
        "first_path": metrics.first_path,
        "second_path": metrics.second_path,
        "joints": [
            {"joint": m.joint, "correlation": m.correlation, "rmse_Nm": m.rmse, "bias_Nm": m.bias}
            for m in metrics.joints
        ],
    }


def plot_data_document(demo: TorqueProfile, pro: TorqueProfile) -> dict:
    """Per-joint time/torque pairs for plotting clients."""
    return {
        "t": [float(v) for v in pro.t],
        "demo": [[float(v) for v in demo.tau[:, j]] for j in range(demo.tau.shape[1])],
        "pro": [[float(v) for v in pro.tau[:, j]] for j in range(pro.tau.shape[1])],
    }
