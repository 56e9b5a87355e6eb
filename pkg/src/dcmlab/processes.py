"""Two-scale sample-path generators.

Each macro window is simulated on a micro grid. Within a window the pair
``(X(t), Y(t))`` is piecewise constant: a Schmidt schedule allocates a fixed
subinterval to every vector pair, a jump schedule switches pairs at Poisson
jump times. Macro randomness enters through the randomizer draws
``(xi_a, xi_b)``.

Reproducibility: window ``k`` of a run with master seed ``s`` draws from its
own stream keyed by ``(s, k)``; the mixture selector uses a separate stream
family so that the selected index is independent of the trajectory draws.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DegenerateInputError, ResolutionError, ShapeError
from .hilbert import BipartiteShape, ket, schmidt_decompose

WINDOW_STREAM = 0
SELECTOR_STREAM = 1

RANDOMIZER_LAWS = ("signed", "gaussian")
COEFFICIENT_LAWS = ("unit", "macro", "phase")
BELL_STATES = ("PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus")


def window_rng(seed: int, window: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(WINDOW_STREAM, window)))


def selector_rng(seed: int, window: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(SELECTOR_STREAM, window)))


@dataclass(frozen=True)
class MicroGrid:
    window_length: float = 1.0
    n_points: int = 64

    def __post_init__(self):
        if not self.window_length > 0:
            raise ValueError(f"window_length must be positive, got {self.window_length}")
        if int(self.n_points) < 1:
            raise ValueError(f"n_points must be >= 1, got {self.n_points}")

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.n_points) + 0.5) * (self.window_length / self.n_points)


@dataclass(frozen=True)
class MacroRandomizer:
    """Law of the macro variables ``(xi_a, xi_b)``.

    Both laws draw ``xi_a`` and ``xi_b`` independently with zero mean and
    ``E[xi^2] = sqrt(target_fourth_moment)``, so ``E[xi_a xi_b] = 0`` and
    ``E[xi_a^2 xi_b^2] = target_fourth_moment``. Under ``"signed"`` each draw is
    ``+-magnitude`` and the fourth-moment condition holds for every draw.
    """

    target_fourth_moment: float = 1.0
    law: str = "signed"

    def __post_init__(self):
        if self.law not in RANDOMIZER_LAWS:
            raise ValueError(f"unknown randomizer law {self.law!r}")
        if not self.target_fourth_moment > 0:
            raise ValueError("target_fourth_moment must be positive")

    @property
    def magnitude(self) -> float:
        return float(self.target_fourth_moment) ** 0.25

    def draw(self, rng: np.random.Generator) -> tuple[float, float]:
        m = self.magnitude
        if self.law == "signed":
            signs = rng.integers(0, 2, size=2) * 2 - 1
            return float(m * signs[0]), float(m * signs[1])
        xa, xb = rng.standard_normal(2)
        return float(m * xa), float(m * xb)


def _as_pairs(a_vectors, b_vectors):
    a = np.atleast_2d(np.asarray(a_vectors, dtype=complex))
    b = np.atleast_2d(np.asarray(b_vectors, dtype=complex))
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"got {a.shape[0]} a-vectors but {b.shape[0]} b-vectors")
    return a, b


def _probability_vector(p, name: str, tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > tol:
        raise ValueError(f"{name} must be a nonnegative vector summing to 1, got {p}")
    return p


@dataclass(frozen=True)
class SchmidtSchedule:
    """Blueprint for the fixed-partition construction.

    Subinterval ``l`` covers a fraction ``weights[l]`` of the window, on which
    ``X = xi_a * a_vectors[l]`` and ``Y = xi_b * b_vectors[l]``.
    """

    weights: np.ndarray
    a_vectors: np.ndarray
    b_vectors: np.ndarray
    randomizer: MacroRandomizer = field(default_factory=MacroRandomizer)

    def __post_init__(self):
        a, b = _as_pairs(self.a_vectors, self.b_vectors)
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (a.shape[0],) or np.any(w <= 0):
            raise ValueError(f"weights must be positive with one entry per pair, got {w}")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got sum {w.sum()!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "a_vectors", a)
        object.__setattr__(self, "b_vectors", b)

    @property
    def shape(self) -> BipartiteShape:
        return BipartiteShape(self.a_vectors.shape[1], self.b_vectors.shape[1])

    @property
    def rank(self) -> int:
        return len(self.weights)

    def state(self) -> np.ndarray:
        """Normalized composite vector ``sum_l w_l a_l (x) b_l`` this schedule encodes."""
        psi = np.einsum("l,la,lb->ab", self.weights, self.a_vectors, self.b_vectors).reshape(-1)
        return psi / np.linalg.norm(psi)


@dataclass(frozen=True)
class JumpSchedule:
    """Blueprint for the jump-process construction.

    ``coefficients`` picks the law of the per-interval scalars ``(x_j, y_j)``:
    ``"unit"`` (both 1), ``"macro"`` (the window's ``(xi_a, xi_b)`` from
    ``randomizer``), or ``"phase"`` (``x_j = e^{i theta_j}``,
    ``y_j = e^{-i theta_j}`` with uniform ``theta_j``).
    """

    jump_rate: float
    selector_weights: np.ndarray
    a_vectors: np.ndarray
    b_vectors: np.ndarray
    coefficients: str = "unit"
    randomizer: MacroRandomizer = field(default_factory=MacroRandomizer)

    def __post_init__(self):
        if not (self.jump_rate > 0 and np.isfinite(self.jump_rate)):
            raise ValueError(f"jump_rate must be positive and finite, got {self.jump_rate}")
        if self.coefficients not in COEFFICIENT_LAWS:
            raise ValueError(f"unknown coefficient law {self.coefficients!r}")
        a, b = _as_pairs(self.a_vectors, self.b_vectors)
        p = _probability_vector(self.selector_weights, "selector_weights")
        if p.size != a.shape[0]:
            raise ShapeError("selector_weights must have one entry per vector pair")
        object.__setattr__(self, "selector_weights", p)
        object.__setattr__(self, "a_vectors", a)
        object.__setattr__(self, "b_vectors", b)

    @property
    def shape(self) -> BipartiteShape:
        return BipartiteShape(self.a_vectors.shape[1], self.b_vectors.shape[1])

    def state(self) -> np.ndarray:
        """State with Schmidt weights proportional to expected occupation."""
        psi = np.einsum("l,la,lb->ab", self.selector_weights, self.a_vectors, self.b_vectors).reshape(-1)
        return psi / np.linalg.norm(psi)


@dataclass(frozen=True)
class MixedScheme:
    lambdas: np.ndarray
    schedules: tuple

    def __post_init__(self):
        lam = _probability_vector(self.lambdas, "lambdas")
        if lam.size != len(self.schedules):
            raise ValueError("need one schedule per mixture weight")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "schedules", tuple(self.schedules))

    @property
    def shape(self) -> BipartiteShape:
        return self.schedules[0].shape


@dataclass
class TrajectoryPair:
    """Sampled micro paths of one macro window.

    ``weights`` are quadrature fractions of the window carried by each grid
    point; ``None`` means the uniform ``1/n``.
    """

    times: np.ndarray
    x_path: np.ndarray
    y_path: np.ndarray
    segment_labels: np.ndarray
    xi_a: float = 1.0
    xi_b: float = 1.0
    weights: np.ndarray | None = None
    window_index: int = 0
    window_length: float = 1.0
    jump_times: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.times)
        if n == 0:
            raise ShapeError("a trajectory needs at least one grid point")
        if self.x_path.shape[0] != n or self.y_path.shape[0] != n or len(self.segment_labels) != n:
            raise ShapeError("path lengths must equal the number of grid points")
        if self.weights is not None and len(self.weights) != n:
            raise ShapeError("weights must have one entry per grid point")

    @property
    def n_points(self) -> int:
        return len(self.times)

    @property
    def shape(self) -> BipartiteShape:
        return BipartiteShape(self.x_path.shape[1], self.y_path.shape[1])

    def quadrature(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.n_points, 1.0 / self.n_points)
        return self.weights


def allocate_points(weights, n_points: int) -> np.ndarray:
    """Largest-remainder allocation of ``n_points`` grid points to subintervals.

    Ties in the remainder go to the lower index.
    """
    w = np.asarray(weights, dtype=float)
    quota = w * n_points
    if quota.min() < 1.0 - 1e-12:
        raise ResolutionError(
            f"{n_points} grid points cannot resolve a subinterval of weight {w.min():.3g}; "
            f"need n_points >= {int(np.ceil(1.0 / w.min()))}"
        )
    counts = np.floor(quota + 1e-12).astype(int)
    remainder = quota - counts
    leftover = n_points - counts.sum()
    order = np.argsort(-remainder, kind="stable")
    counts[order[:leftover]] += 1
    if np.any(counts == 0):
        raise ResolutionError(f"allocation {counts} leaves a subinterval without grid points")
    return counts


def place_points(weights, grid: MicroGrid):
    """Grid times, labels and quadrature weights for a fixed partition.

    When every subinterval holds exactly ``w_l * n`` points this is the
    uniform midpoint grid with uniform weights. Otherwise the points of
    subinterval ``l`` sit at the midpoints of ``n_l`` equal cells of that
    subinterval and carry weight ``w_l / n_l``, so that integrals of
    piecewise-constant paths stay exact.
    """
    w = np.asarray(weights, dtype=float)
    n = grid.n_points
    counts = allocate_points(w, n)
    labels = np.repeat(np.arange(len(w)), counts)
    if np.all(np.abs(w * n - counts) <= 1e-12 * n):
        return grid.times, labels, None, counts
    starts = np.concatenate([[0.0], np.cumsum(w)[:-1]])
    offsets = np.concatenate([(np.arange(c) + 0.5) / c for c in counts])
    frac = starts[labels] + offsets * w[labels]
    quad = (w / counts)[labels]
    return frac * grid.window_length, labels, quad, counts


def build_bell_schedule(which: str = "PhiPlus", law: str = "signed") -> SchmidtSchedule:
    """Two half-window subintervals carrying the Schmidt pairs of a Bell state.

    The minus states put the sign on the second ``b``-vector.
    """
    e0, e1 = ket(0), ket(1)
    pairs = {
        "PhiPlus": ([e0, e1], [e0, e1]),
        "PhiMinus": ([e0, e1], [e0, -e1]),
        "PsiPlus": ([e0, e1], [e1, e0]),
        "PsiMinus": ([e0, e1], [e1, -e0]),
    }
    if which not in pairs:
        raise ValueError(f"unknown Bell state {which!r}; expected one of {BELL_STATES}")
    a, b = pairs[which]
    return SchmidtSchedule(
        weights=np.array([0.5, 0.5]),
        a_vectors=np.array(a),
        b_vectors=np.array(b),
        randomizer=MacroRandomizer(2.0, law),
    )


def build_pure_schedule(psi, shape, law: str = "signed", cutoff: float = 1e-12) -> SchmidtSchedule:
    """Schedule whose micro cross-covariance is proportional to ``psi``."""
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise DegenerateInputError("cannot build a schedule for the zero vector")
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"psi must be normalized, got norm {norm!r}")
    form = schmidt_decompose(psi, shape, cutoff)
    total = form.coefficients.sum()
    return SchmidtSchedule(
        weights=form.coefficients / total,
        a_vectors=form.a_vectors,
        b_vectors=form.b_vectors,
        randomizer=MacroRandomizer(float(total) ** 2, law),
    )


def _schmidt_paths(schedule: SchmidtSchedule, grid: MicroGrid, xi_a: float, xi_b: float, window: int):
    times, labels, quad, _ = place_points(schedule.weights, grid)
    return TrajectoryPair(
        times=times,
        x_path=xi_a * schedule.a_vectors[labels],
        y_path=xi_b * schedule.b_vectors[labels],
        segment_labels=labels,
        xi_a=xi_a,
        xi_b=xi_b,
        weights=quad,
        window_index=window,
        window_length=grid.window_length,
    )


def sample_trajectory(schedule: SchmidtSchedule, grid: MicroGrid, rng: np.random.Generator,
                      window: int = 0) -> TrajectoryPair:
    xi_a, xi_b = schedule.randomizer.draw(rng)
    return _schmidt_paths(schedule, grid, xi_a, xi_b, window)


def deterministic_trajectory(schedule: SchmidtSchedule, grid: MicroGrid) -> TrajectoryPair:
    """The schedule's path with ``xi_a = xi_b = 1``."""
    return _schmidt_paths(schedule, grid, 1.0, 1.0, 0)


def sample_mixed_trajectory(lambdas, schedules: Sequence[SchmidtSchedule], grid: MicroGrid,
                            rng: np.random.Generator, selector: np.random.Generator,
                            window: int = 0):
    """Pick schedule ``k`` with probability ``lambdas[k]`` and sample it.

    ``selector`` must be a stream independent of ``rng``.
    """
    lam = _probability_vector(lambdas, "lambdas")
    if lam.size != len(schedules):
        raise ValueError("need one schedule per mixture weight")
    k = int(selector.choice(lam.size, p=lam))
    return k, sample_trajectory(schedules[k], grid, rng, window)


def sample_jump_trajectory(schedule: JumpSchedule, grid: MicroGrid, rng: np.random.Generator,
                           window: int = 0) -> TrajectoryPair:
    """Jump-process path sampled on the uniform micro grid.

    ``N ~ Poisson(rate * |window|)`` jump instants split the window into
    ``N + 1`` intervals; each interval draws one selector value shared by
    both paths.
    """
    length = grid.window_length
    n_jumps = int(rng.poisson(schedule.jump_rate * length))
    jumps = np.sort(rng.uniform(0.0, length, size=n_jumps))
    r = len(schedule.selector_weights)
    sigma = rng.choice(r, size=n_jumps + 1, p=schedule.selector_weights)
    xi_a = xi_b = 1.0
    if schedule.coefficients == "macro":
        xi_a, xi_b = schedule.randomizer.draw(rng)
        x_coef = np.full(n_jumps + 1, xi_a, dtype=complex)
        y_coef = np.full(n_jumps + 1, xi_b, dtype=complex)
    elif schedule.coefficients == "phase":
        theta = rng.uniform(0.0, 2 * np.pi, size=n_jumps + 1)
        x_coef = np.exp(1j * theta)
        y_coef = np.exp(-1j * theta)
    else:
        x_coef = y_coef = np.ones(n_jumps + 1, dtype=complex)
    times = grid.times
    seg = np.searchsorted(jumps, times, side="right")
    labels = sigma[seg]
    return TrajectoryPair(
        times=times,
        x_path=x_coef[seg, None] * schedule.a_vectors[labels],
        y_path=y_coef[seg, None] * schedule.b_vectors[labels],
        segment_labels=labels,
        xi_a=xi_a,
        xi_b=xi_b,
        window_index=window,
        window_length=length,
        jump_times=jumps,
    )


Scheme = Union[SchmidtSchedule, JumpSchedule, MixedScheme]


def sample_window(scheme: Scheme, grid: MicroGrid, seed: int, window: int):
    """Sample window ``window`` of a run; returns ``(selected_index, trajectory)``.

    ``selected_index`` is the mixture component, or 0 for unmixed schemes.
    """
    rng = window_rng(seed, window)
    if isinstance(scheme, MixedScheme):
        return sample_mixed_trajectory(scheme.lambdas, scheme.schedules, grid, rng,
                                       selector_rng(seed, window), window)
    if isinstance(scheme, JumpSchedule):
        return 0, sample_jump_trajectory(scheme, grid, rng, window)
    return 0, sample_trajectory(scheme, grid, rng, window)


def generate(scheme: Scheme, grid: MicroGrid, n_windows: int, seed: int, threads: int = 1):
    """Sample ``n_windows`` windows, returned in window order.

    Output does not depend on ``threads``.
    """
    if n_windows < 1:
        raise ValueError("n_windows must be >= 1")
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    windows = range(n_windows)
    if threads <= 1:
        results = [sample_window(scheme, grid, seed, k) for k in windows]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda k: sample_window(scheme, grid, seed, k), windows))
    selected = np.array([k for k, _ in results], dtype=int)
    return selected, [t for _, t in results]


# -- micro-time consistency -------------------------------------------------

@dataclass(frozen=True)
class ConsistencySet:
    """Allowed pairs ``(x, y)`` at a single micro instant.

    ``batch``, when set, evaluates the same test row-wise on stacked paths.
    """

    predicate: Callable[[np.ndarray, np.ndarray], bool]
    description: str = ""
    batch: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __contains__(self, pair) -> bool:
        x, y = pair
        return bool(self.predicate(x, y))


@dataclass(frozen=True)
class ConsistencyReport:
    holds: bool
    violating_indices: list


def _proportional_rows(xs: np.ndarray, u: np.ndarray, tol: float) -> np.ndarray:
    u = u / np.linalg.norm(u)
    residual = xs - np.outer(xs @ u.conj(), u)
    bound = tol * np.maximum(1.0, np.linalg.norm(xs, axis=1))
    return np.linalg.norm(residual, axis=1) <= bound


def pair_consistency_set(a_vectors, b_vectors, tol: float = 1e-9) -> ConsistencySet:
    """Pairs with ``x`` proportional to some ``a_l`` and ``y`` to the same ``b_l``.

    Zero multiples are allowed on either side.
    """
    a, b = _as_pairs(a_vectors, b_vectors)

    def batch(xs, ys):
        xs = np.atleast_2d(np.asarray(xs, dtype=complex))
        ys = np.atleast_2d(np.asarray(ys, dtype=complex))
        ok = np.zeros(len(xs), dtype=bool)
        for u, v in zip(a, b):
            ok |= _proportional_rows(xs, u, tol) & _proportional_rows(ys, v, tol)
        return ok

    def predicate(x, y):
        return bool(batch(x, y)[0])

    return ConsistencySet(predicate, f"x ~ a_l and y ~ b_l for a common l (r={len(a)})", batch)


def bell_consistency_set(which: str = "PhiPlus") -> ConsistencySet:
    s = build_bell_schedule(which)
    cset = pair_consistency_set(s.a_vectors, s.b_vectors)
    if which.startswith("Phi"):
        return ConsistencySet(cset.predicate, "x and y proportional to the same basis vector", cset.batch)
    return ConsistencySet(cset.predicate, "x and y proportional to complementary basis vectors", cset.batch)


def schedule_consistency_set(schedule: Scheme, tol: float = 1e-9) -> ConsistencySet:
    """Consistency set induced by the vector pairs of a scheme."""
    if isinstance(schedule, MixedScheme):
        sets = [schedule_consistency_set(s, tol) for s in schedule.schedules]
        def batch(xs, ys):
            return np.logical_or.reduce([c.batch(xs, ys) for c in sets])

        return ConsistencySet(lambda x, y: any(c.predicate(x, y) for c in sets),
                              "union of the component consistency sets", batch)
    return pair_consistency_set(schedule.a_vectors, schedule.b_vectors, tol)


def check_consistency(traj: TrajectoryPair, cset: ConsistencySet) -> ConsistencyReport:
    if cset.batch is not None:
        bad = np.flatnonzero(~cset.batch(traj.x_path, traj.y_path)).tolist()
    else:
        bad = [i for i in range(traj.n_points) if not cset.predicate(traj.x_path[i], traj.y_path[i])]
    return ConsistencyReport(holds=not bad, violating_indices=bad)
