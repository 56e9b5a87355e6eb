"""Two-scale covariance estimation.

One composite vector per macro window (the window average of
``X(t) (x) Y(t)``), centered across windows, then averaged as outer products
into the macro covariance. Dividing by its trace gives the density operator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEstimateError, ShapeError
from .formats import matrix_to_json, read_time_series, split_windows
from .hilbert import BipartiteShape, hs_inner, matricize, trace_distance
from .processes import TrajectoryPair

TRACE_EPS = 1e-12


@dataclass(frozen=True)
class MicroWindowSample:
    window_index: int
    c_vector: np.ndarray


@dataclass(frozen=True)
class Centering:
    """How the window vectors are centered before the outer product.

    ``mode`` is ``"empirical"`` (subtract the sample mean), ``"true_mean"``
    (subtract the known expectation ``mean``) or ``"none"``.
    """

    mode: str = "empirical"
    mean: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("empirical", "true_mean", "none"):
            raise ValueError(f"unknown centering mode {self.mode!r}")
        if self.mode == "true_mean":
            if self.mean is None:
                raise ValueError("true_mean centering needs a mean vector")
            object.__setattr__(self, "mean", np.asarray(self.mean, dtype=complex))

    @classmethod
    def empirical(cls) -> "Centering":
        return cls("empirical")

    @classmethod
    def true_mean(cls, mean) -> "Centering":
        return cls("true_mean", mean)

    @classmethod
    def zero_mean(cls, dim: int) -> "Centering":
        return cls("true_mean", np.zeros(dim, dtype=complex))

    @classmethod
    def none(cls) -> "Centering":
        return cls("none")

    def describe(self):
        if self.mode != "true_mean":
            return self.mode
        if not np.any(self.mean):
            return "true_mean_zero"
        return {"true_mean": matrix_to_json(self.mean)}


@dataclass(frozen=True)
class MacroEstimate:
    c_hat: np.ndarray
    n_windows: int
    centering: Centering
    trace: float

    @property
    def dim(self) -> int:
        return self.c_hat.shape[0]


def micro_cross_covariance(traj: TrajectoryPair, grid=None) -> MicroWindowSample:
    """Window average of ``X(t_i) (x) Y(t_i)`` as a composite vector.

    Component ``(a, b)`` is ``sum_i q_i X_a(t_i) Y_b(t_i)`` with quadrature
    weights ``q_i`` (``1/n`` on a uniform grid). ``grid`` is accepted for
    symmetry with the generators; the trajectory already carries its times.
    """
    n = traj.n_points
    if n == 0:
        raise ShapeError("empty window")
    prods = (traj.x_path[:, :, None] * traj.y_path[:, None, :]).reshape(n, -1)
    if traj.weights is None:
        c = prods.sum(axis=0) / n
    else:
        c = np.asarray(traj.weights, dtype=float) @ prods
    return MicroWindowSample(traj.window_index, c)


def center(samples: list[MicroWindowSample], mode: Centering | None = None) -> list[MicroWindowSample]:
    if not samples:
        raise ValueError("cannot center an empty sample list")
    mode = mode or Centering.empirical()
    if mode.mode == "none":
        return list(samples)
    if mode.mode == "empirical":
        mean = np.mean([s.c_vector for s in samples], axis=0)
    else:
        mean = mode.mean
        if mean.shape != samples[0].c_vector.shape:
            raise ShapeError(f"true mean has shape {mean.shape}, samples have {samples[0].c_vector.shape}")
    return [MicroWindowSample(s.window_index, s.c_vector - mean) for s in samples]


def macro_covariance(centered: list[MicroWindowSample], centering: Centering | None = None) -> MacroEstimate:
    """``C = (1/N) sum_j |Z_j><Z_j|``, symmetrized to be exactly Hermitian."""
    if not centered:
        raise ValueError("macro covariance needs at least one window")
    z = np.array([s.c_vector for s in centered], dtype=complex)
    c = z.T @ z.conj() / len(centered)
    c = (c + c.conj().T) / 2
    return MacroEstimate(c, len(centered), centering or Centering.none(), float(np.trace(c).real))


def normalize(est: MacroEstimate, eps: float | None = None) -> np.ndarray:
    """``rho = C / Tr C``; raises when the trace is below ``eps`` (default ``1e-12 * dim``)."""
    eps = TRACE_EPS * est.dim if eps is None else eps
    if not est.trace > eps:
        raise DegenerateEstimateError(
            f"macro covariance has trace {est.trace:.3g} <= {eps:.3g}; the data are zero or fully centered out"
        )
    return est.c_hat / est.trace


def superop_quadratic_form(samples: list[MicroWindowSample], v1, v2, shape) -> complex:
    """Empirical ``E[<v1|S><S|v2>]`` with ``S`` the operator of each sample.

    ``v1`` and ``v2`` are operators ``H_B -> H_A``. Computed with Hilbert-Schmidt
    products on the matricized samples, independently of :func:`macro_covariance`.
    """
    shape = BipartiteShape.of(shape)
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    if v1.shape != (shape.dim_a, shape.dim_b) or v2.shape != v1.shape:
        raise ShapeError(f"operators must have shape ({shape.dim_a}, {shape.dim_b})")
    if not samples:
        raise ValueError("need at least one sample")
    total = 0j
    for s in samples:
        op = matricize(s.c_vector, shape)
        total += hs_inner(v1, op) * hs_inner(op, v2)
    return total / len(samples)


def window_samples(trajs: list[TrajectoryPair]) -> list[MicroWindowSample]:
    return [micro_cross_covariance(t) for t in trajs]


def estimate(trajs: list[TrajectoryPair], centering: Centering | None = None) -> MacroEstimate:
    centering = centering or Centering.empirical()
    return macro_covariance(center(window_samples(trajs), centering), centering)


def ingest_trajectories(path, shape, window_length: float, n_windows=None) -> list[TrajectoryPair]:
    return split_windows(read_time_series(path, shape), window_length, n_windows)


def ingest_time_series(path, shape, window_length: float, n_windows=None) -> list[MicroWindowSample]:
    """Window samples from a time-series CSV.

    Each window is averaged with its own row count as divisor, or with the
    file's ``weight`` column when present.
    """
    return window_samples(ingest_trajectories(path, shape, window_length, n_windows))


def estimate_report(est: MacroEstimate, target=None) -> dict:
    rho = normalize(est)
    report = {
        "rho": matrix_to_json(rho),
        "trace": est.trace,
        "n_windows": est.n_windows,
        "centering": est.centering.describe(),
        "min_eigenvalue": float(np.linalg.eigvalsh(rho)[0]),
    }
    if target is not None:
        report["trace_distance_to_target"] = trace_distance(rho, target)
    return report
