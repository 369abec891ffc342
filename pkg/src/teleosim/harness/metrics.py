"""Pure trace post-processing: aggregates and stiffness-binned error."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import ScenarioTrace

DEFAULT_BINS = (80.0, 300.0, 500.0, 700.0, 900.0, 1100.0, 1320.0)


@dataclass(frozen=True)
class StiffnessBin:
    lo: float
    hi: float
    mean_error: float
    std_error: float
    count: int


@dataclass(frozen=True)
class MetricsReport:
    mean_error: float
    max_error: float
    mean_error_xy: float
    peak_acceleration: float
    peak_contact_force: float
    balloon_ruptured: bool | None
    contact_duration: float
    bins: tuple[StiffnessBin, ...]


def compute_metrics(
    trace: ScenarioTrace,
    bins=DEFAULT_BINS,
    rupture_force: float | None = None,
) -> MetricsReport:
    """Aggregate a trace; empty stiffness bins are omitted, never zeroed."""
    if len(trace) == 0:
        raise ValueError("trace is empty")
    dt = float(trace.t[1] - trace.t[0]) if len(trace) > 1 else 1.0
    err = trace.error
    err_xy = np.linalg.norm(trace.x[:, :2] - trace.x_l[:, :2], axis=1)

    # peak follower acceleration from a central difference of position
    if len(trace) > 2:
        acc = (trace.x[2:] - 2.0 * trace.x[1:-1] + trace.x[:-2]) / dt**2
        peak_acc = float(np.abs(acc).max())
    else:
        peak_acc = 0.0

    f_mag = np.linalg.norm(trace.f_env, axis=1)
    peak_force = float(f_mag.max())
    contact_ticks = int(np.count_nonzero(f_mag > 0.0))
    ruptured = None if rupture_force is None else bool(peak_force >= rupture_force)

    l1 = trace.l1[:, 0]
    out_bins = []
    for lo, hi in zip(bins[:-1], bins[1:]):
        mask = (l1 >= lo) & (l1 < hi)
        if not mask.any():
            continue
        out_bins.append(
            StiffnessBin(lo, hi, float(err[mask].mean()), float(err[mask].std()), int(mask.sum()))
        )
    return MetricsReport(
        mean_error=float(err.mean()),
        max_error=float(err.max()),
        mean_error_xy=float(err_xy.mean()),
        peak_acceleration=peak_acc,
        peak_contact_force=peak_force,
        balloon_ruptured=ruptured,
        contact_duration=contact_ticks * dt,
        bins=tuple(out_bins),
    )


def mean_error_above(trace: ScenarioTrace, l1_floor: float) -> float:
    """Mean error restricted to ticks with stiffness above a floor."""
    mask = trace.l1[:, 0] > l1_floor
    if not mask.any():
        raise ValueError(f"no ticks with L1 > {l1_floor}")
    return float(trace.error[mask].mean())
