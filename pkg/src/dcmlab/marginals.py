"""Subsystem states from sample paths.

Two routes to the state of subsystem A:

* the kernel route: double sum of ``X_i(t) conj(X_j(t')) K_B(t, t')`` over the
  micro grid, where ``K_B(t, t') = <Y(t')|Y(t)>``; this is a rearrangement of
  ``Tr_B`` applied to the uncentered macro covariance.
* the intrinsic route: ensemble mean of the micro autocorrelation
  ``|X(t)><X(t)|``.

They agree when the reference kernel is an orthonormal block kernel with
equal block weights (e.g. Bell schedules); diagnostics report the
delta-correlation conditions that make them agree in general.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, HypothesisViolationError
from .estimator import Centering, macro_covariance, normalize, window_samples
from .formats import matrix_to_json
from .hilbert import partial_trace_b, trace_distance
from .processes import SchmidtSchedule, TrajectoryPair

ENERGY_TOL = 1e-6
MAX_LAG = 32


def stochastic_kernel(traj: TrajectoryPair) -> np.ndarray:
    """``K[i, j] = <Y(t_j)|Y(t_i)>`` on the micro grid."""
    return traj.y_path @ traj.y_path.conj().T


def partial_trace_via_kernel(trajs: list[TrajectoryPair]) -> np.ndarray:
    """Ensemble mean of the quadrature double sum ``sum q_t q_t' X(t) X(t')^* K(t, t')``."""
    if not trajs:
        raise ValueError("need at least one trajectory")
    acc = 0
    for traj in trajs:
        xq = traj.quadrature()[:, None] * traj.x_path
        acc = acc + xq.T @ stochastic_kernel(traj) @ xq.conj()
    return acc / len(trajs)


def intrinsic_accumulation(trajs: list[TrajectoryPair]) -> np.ndarray:
    """Un-normalized ``E[(1/|window|) integral |X(t)><X(t)| dt]``."""
    if not trajs:
        raise ValueError("need at least one trajectory")
    acc = 0
    for traj in trajs:
        xq = traj.quadrature()[:, None] * traj.x_path
        acc = acc + xq.T @ traj.x_path.conj()
    return acc / len(trajs)


def intrinsic_state(trajs: list[TrajectoryPair], energy_tol: float = ENERGY_TOL) -> np.ndarray:
    """Trace-normalized intrinsic state of subsystem A.

    Warns when the mean power ``E[||X||^2]`` is not 1, since the unnormalized
    accumulation is then not itself a density operator.
    """
    acc = intrinsic_accumulation(trajs)
    acc = (acc + acc.conj().T) / 2
    tr = float(np.trace(acc).real)
    if not tr > 0:
        raise DegenerateInputError("all X paths are zero")
    if abs(tr - 1.0) > energy_tol:
        warnings.warn(f"mean power E[||X||^2] = {tr:.6g} is not 1; trace-normalizing", stacklevel=2)
    return acc / tr


@dataclass
class DiagnosticsReport:
    mean_power_x: float
    mean_power_y: float
    isotropy_defect: float
    localization_profile: np.ndarray
    unit_power_tol: float = 1e-6

    @property
    def unit_power_y(self) -> bool:
        return abs(self.mean_power_y - 1.0) <= self.unit_power_tol

    def to_dict(self) -> dict:
        return {
            "mean_power_x": self.mean_power_x,
            "mean_power_y": self.mean_power_y,
            "unit_power_y": self.unit_power_y,
            "isotropy_defect": self.isotropy_defect,
            "localization_profile": [float(v) for v in self.localization_profile],
        }


def _lag_profile(y: np.ndarray, n_lags: int) -> np.ndarray:
    """``mean_i |<Y(t_i)|Y(t_{i+lag})>|`` for ``lag = 0 .. n_lags - 1``."""
    n = len(y)
    out = np.zeros(n_lags)
    for lag in range(n_lags):
        out[lag] = np.abs(np.sum(y[lag:] * y[:n - lag].conj(), axis=1)).mean()
    return out


def diagnostics(trajs: list[TrajectoryPair], max_lag: int = MAX_LAG) -> DiagnosticsReport:
    """Empirical versions of the delta-correlation conditions.

    Expectations run over windows and (quadrature-weighted) grid points. The
    localization profile is the mean ``|K(t_i, t_{i+lag})|`` per lag, relative
    to lag 0, for lags below ``max_lag``; it needs all windows on grids of the
    same size.
    """
    if not trajs:
        raise ValueError("need at least one trajectory")
    px = py = 0.0
    d_a = trajs[0].x_path.shape[1]
    xx = np.zeros((d_a, d_a), dtype=complex)
    xx_py = np.zeros((d_a, d_a), dtype=complex)
    n = trajs[0].n_points
    same_grid = all(t.n_points == n for t in trajs)
    n_lags = min(n, max_lag)
    profile = np.zeros(n_lags)
    for traj in trajs:
        q = traj.quadrature()
        power_x = np.sum(np.abs(traj.x_path) ** 2, axis=1)
        power_y = np.sum(np.abs(traj.y_path) ** 2, axis=1)
        px += q @ power_x
        py += q @ power_y
        xq = q[:, None] * traj.x_path
        xx += xq.T @ traj.x_path.conj()
        xx_py += (xq * power_y[:, None]).T @ traj.x_path.conj()
        if same_grid:
            profile += _lag_profile(traj.y_path, n_lags)
    m = len(trajs)
    px, py, xx, xx_py = px / m, py / m, xx / m, xx_py / m
    defect = float(np.max(np.abs(xx_py - xx * py)))
    if same_grid and profile[0] > 0:
        profile = profile / profile[0]
    elif not same_grid:
        profile = np.zeros(0)
    return DiagnosticsReport(float(px), float(py), defect, profile)


@dataclass
class MarginalReport:
    delta: float
    intrinsic: np.ndarray
    partial_trace: np.ndarray
    diagnostics: DiagnosticsReport

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "intrinsic": matrix_to_json(self.intrinsic),
            "partial_trace": matrix_to_json(self.partial_trace),
            "diagnostics": self.diagnostics.to_dict(),
        }


def check_marginal_consistency(trajs: list[TrajectoryPair]) -> MarginalReport:
    """Trace distance between the intrinsic state and ``Tr_B`` of the uncentered estimate."""
    shape = trajs[0].shape
    est = macro_covariance(window_samples(trajs), Centering.none())
    reduced = partial_trace_b(normalize(est), shape)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        intrinsic = intrinsic_state(trajs)
    return MarginalReport(trace_distance(intrinsic, reduced), intrinsic, reduced, diagnostics(trajs))


def block_kernel_closed_form(schedule: SchmidtSchedule, normalized: bool = False,
                             tol: float = 1e-10) -> np.ndarray:
    """``sum_k w_k^2 |u_k><u_k|`` for a schedule with orthonormal ``b``-vectors.

    This is the kernel-route partial trace of the schedule's deterministic
    path. ``normalized=True`` divides by its trace.
    """
    b = schedule.b_vectors
    gram = b.conj() @ b.T
    if np.max(np.abs(gram - np.eye(len(b)))) > tol:
        raise HypothesisViolationError("block-kernel form requires orthonormal b-vectors")
    u = schedule.a_vectors
    out = np.einsum("k,ki,kj->ij", schedule.weights ** 2, u, u.conj())
    if normalized:
        out = out / np.trace(out).real
    return out
