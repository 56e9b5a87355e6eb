import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import loop_cross_covariance
from dcmlab.errors import DegenerateEstimateError, ShapeError
from dcmlab.estimator import (
    Centering,
    MacroEstimate,
    MicroWindowSample,
    center,
    estimate,
    macro_covariance,
    micro_cross_covariance,
    normalize,
    superop_quadratic_form,
    window_samples,
)
from dcmlab.hilbert import (
    bell_state,
    check_density,
    ket,
    matricize,
    projector,
    random_state,
    trace_distance,
)
from dcmlab.processes import (
    JumpSchedule,
    MicroGrid,
    MixedScheme,
    TrajectoryPair,
    build_bell_schedule,
    build_pure_schedule,
    generate,
    sample_trajectory,
)

PHI_PLUS = projector(bell_state("PhiPlus"))
PHI_MINUS = projector(bell_state("PhiMinus"))

# Expected trace distance to |Phi+><Phi+| for unit-coefficient Bell-pair jump paths:
# s / (1 + s) with s = E[2 / (N + 2)], N ~ Poisson(rate * window); series summed offline.
JUMP_BIAS = {10.0: 0.15254302499130784, 100.0: 0.01941557168072246}


def _traj(x, y, weights=None):
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    n = len(x)
    return TrajectoryPair(np.arange(n) + 0.5, x, y, np.zeros(n, dtype=int), weights=weights)


def test_bell_window_vector(rng):
    traj = sample_trajectory(build_bell_schedule(), MicroGrid(1.0, 4), rng)
    c = micro_cross_covariance(traj).c_vector
    np.testing.assert_allclose(c, traj.xi_a * traj.xi_b * bell_state() / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(c, traj.xi_a * traj.xi_b * (ket(0, 0) + ket(1, 1)) / 2, atol=1e-15)


def test_constant_product_window():
    traj = _traj([ket(0)] * 3, [ket(0)] * 3)
    np.testing.assert_array_equal(micro_cross_covariance(traj).c_vector, ket(0, 0))


def test_window_vector_matches_loop_oracle(rng):
    x = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    y = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    c = micro_cross_covariance(_traj(x, y)).c_vector
    np.testing.assert_allclose(c, loop_cross_covariance(x, y), atol=1e-14)
    w = np.array([0.2, 0.5, 0.3])
    c = micro_cross_covariance(_traj(x, y, w)).c_vector
    np.testing.assert_allclose(c, loop_cross_covariance(x, y, w), atol=1e-14)


def test_empirical_centering_removes_mean(rng):
    samples = [MicroWindowSample(k, rng.standard_normal(4) + 1j * rng.standard_normal(4)) for k in range(7)]
    centered = center(samples, Centering.empirical())
    assert np.linalg.norm(np.mean([s.c_vector for s in centered], axis=0)) < 1e-15
    recentered = center(centered, Centering.empirical())
    for a, b in zip(centered, recentered):
        np.testing.assert_allclose(a.c_vector, b.c_vector, atol=1e-15)


def test_true_zero_mean_leaves_bell_samples_unchanged(rng):
    _, trajs = generate(build_bell_schedule(), MicroGrid(1.0, 2), 10, seed=1)
    samples = window_samples(trajs)
    for a, b in zip(samples, center(samples, Centering.zero_mean(4))):
        np.testing.assert_array_equal(a.c_vector, b.c_vector)


def test_symmetric_pair_empirical_centering_unchanged():
    v = np.array([1, 2j, 0, -1])
    out = center([MicroWindowSample(0, v), MicroWindowSample(1, -v)], Centering.empirical())
    np.testing.assert_array_equal(out[0].c_vector, v)
    np.testing.assert_array_equal(out[1].c_vector, -v)


def test_center_errors():
    with pytest.raises(ValueError):
        center([], Centering.empirical())
    with pytest.raises(ShapeError):
        center([MicroWindowSample(0, np.ones(4))], Centering.true_mean(np.zeros(3)))


@pytest.mark.parametrize("n", [1, 2, 17, 300])
def test_bell_exact_mode(n):
    _, trajs = generate(build_bell_schedule(), MicroGrid(1.0, 2), n, seed=n)
    est = estimate(trajs, Centering.zero_mean(4))
    np.testing.assert_allclose(est.c_hat, PHI_PLUS, atol=1e-15)


def test_single_sample_rank_one():
    v = np.array([1.0, 1j, 0.5, 0])
    est = macro_covariance([MicroWindowSample(0, v)])
    np.testing.assert_allclose(est.c_hat, np.outer(v, v.conj()), atol=1e-15)


def test_pure_scheme_exact_in_true_mean_mode(rng):
    for shape in [(2, 3), (3, 3), (4, 2)]:
        psi = random_state(shape[0] * shape[1], rng)
        schedule = build_pure_schedule(psi, shape)
        n_points = max(32, int(np.ceil(1 / schedule.weights.min())))
        _, trajs = generate(schedule, MicroGrid(1.0, n_points), 25, seed=4)
        est = estimate(trajs, Centering.zero_mean(psi.size))
        np.testing.assert_allclose(est.c_hat, projector(psi), atol=1e-12)


def test_macro_covariance_empty():
    with pytest.raises(ValueError):
        macro_covariance([])


def test_normalize_scaling():
    est = MacroEstimate(2 * PHI_PLUS, 1, Centering.none(), 2.0)
    np.testing.assert_allclose(normalize(est), PHI_PLUS)


def test_normalize_zero_trace():
    with pytest.raises(DegenerateEstimateError):
        normalize(MacroEstimate(np.zeros((4, 4)), 3, Centering.none(), 0.0))


def test_all_equal_samples_centered_out_is_degenerate():
    samples = [MicroWindowSample(k, ket(0, 0)) for k in range(5)]
    est = macro_covariance(center(samples, Centering.empirical()))
    with pytest.raises(DegenerateEstimateError):
        normalize(est)


@pytest.mark.parametrize("mode", ["empirical", "none"])
def test_normalized_estimate_is_density(mode):
    psi = random_state(6, np.random.default_rng(8))
    schedule = build_pure_schedule(psi, (3, 2), law="gaussian")
    _, trajs = generate(schedule, MicroGrid(1.0, 400), 50, seed=8)
    rho = normalize(estimate(trajs, Centering(mode)))
    assert abs(np.trace(rho) - 1) < 1e-12
    assert check_density(rho, 1e-9).passed


def test_superop_single_sample():
    v1 = np.array([[1.0, 2j], [0.5, -1]])
    samples = [MicroWindowSample(0, v1.reshape(-1))]
    val = superop_quadratic_form(samples, v1, v1, (2, 2))
    assert abs(val - np.vdot(v1, v1) ** 2) < 1e-12


def test_superop_matches_matrix_form(rng):
    for _ in range(20):
        samples = [MicroWindowSample(k, rng.standard_normal(6) + 1j * rng.standard_normal(6)) for k in range(5)]
        v1 = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        v2 = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        c = macro_covariance(samples).c_hat
        matrix_form = np.vdot(v1.reshape(-1), c @ v2.reshape(-1))
        assert abs(superop_quadratic_form(samples, v1, v2, (2, 3)) - matrix_form) <= 1e-12


def test_superop_bell_exact():
    _, trajs = generate(build_bell_schedule(), MicroGrid(1.0, 2), 40, seed=3)
    v = matricize(bell_state(), (2, 2))
    val = superop_quadratic_form(window_samples(trajs), v, v, (2, 2))
    assert abs(val - 1) < 1e-14


def test_superop_shape_mismatch():
    with pytest.raises(ShapeError):
        superop_quadratic_form([MicroWindowSample(0, np.ones(4))], np.eye(2), np.eye(3), (2, 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_property_psd_and_rank_bound(n, da, db, seed):
    rng = np.random.default_rng(seed)
    samples = [MicroWindowSample(k, rng.standard_normal(da * db) + 1j * rng.standard_normal(da * db))
               for k in range(n)]
    for mode in (Centering.empirical(), Centering.none()):
        est = macro_covariance(center(samples, mode), mode)
        assert np.array_equal(est.c_hat, est.c_hat.conj().T)
        eig = np.linalg.eigvalsh(est.c_hat)
        assert eig[0] >= -1e-10 * max(est.trace, 1e-300)
        assert np.linalg.matrix_rank(est.c_hat, tol=1e-9 * max(1.0, est.trace)) <= n


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 63 - 1), st.integers(1, 40), st.sampled_from([(2, 2), (2, 3), (3, 4), (4, 4)]))
def test_property_exactness_any_seed(seed, n, shape):
    psi = random_state(shape[0] * shape[1], np.random.default_rng(seed))
    schedule = build_pure_schedule(psi, shape)
    n_points = max(16, int(np.ceil(1 / schedule.weights.min())))
    _, trajs = generate(schedule, MicroGrid(1.0, n_points), n, seed=seed)
    rho = normalize(estimate(trajs, Centering.zero_mean(psi.size)))
    assert trace_distance(rho, projector(psi)) <= 1e-10


def test_empirical_centering_bias_bell():
    for n in (10, 100, 1000):
        _, trajs = generate(build_bell_schedule(), MicroGrid(1.0, 2), n, seed=11)
        rho = normalize(estimate(trajs, Centering.empirical()))
        assert trace_distance(rho, PHI_PLUS) <= 1 / n


def test_empirical_centering_bias_gaussian_shrinks():
    # Gaussian randomizer: per-sample exactness is lost, but the direction is fixed,
    # so empirical centering still only rescales the estimate.
    psi = random_state(4, np.random.default_rng(0))
    schedule = build_pure_schedule(psi, (2, 2), law="gaussian")
    n_points = max(16, int(np.ceil(1 / schedule.weights.min())))
    _, trajs = generate(schedule, MicroGrid(1.0, n_points), 200, seed=0)
    rho = normalize(estimate(trajs, Centering.empirical()))
    assert trace_distance(rho, projector(psi)) <= 1e-10


def test_mixture_converges_to_spectral_form():
    n = 10_000
    scheme = MixedScheme([0.5, 0.5], (build_bell_schedule("PhiPlus"), build_bell_schedule("PhiMinus")))
    _, trajs = generate(scheme, MicroGrid(1.0, 2), n, seed=17)
    rho = normalize(estimate(trajs, Centering.empirical()))
    assert trace_distance(rho, (PHI_PLUS + PHI_MINUS) / 2) <= 0.05


def test_bell_minus_reconstruction():
    _, trajs = generate(build_bell_schedule("PhiMinus"), MicroGrid(1.0, 2), 1000, seed=2)
    rho = normalize(estimate(trajs, Centering.empirical()))
    assert np.real(np.vdot(bell_state("PhiMinus"), rho @ bell_state("PhiMinus"))) >= 0.99


@pytest.mark.parametrize("window, n_points, tol", [(1.0, 1000, 0.01), (10.0, 2000, 0.005)])
def test_jump_process_matches_occupation_oracle(window, n_points, tol):
    rate = 10.0
    schedule = JumpSchedule(rate, [0.5, 0.5], [ket(0), ket(1)], [ket(0), ket(1)])
    _, trajs = generate(schedule, MicroGrid(window, n_points), 10_000, seed=31)
    rho = normalize(estimate(trajs, Centering.none()))
    d = trace_distance(rho, PHI_PLUS)
    assert abs(d - JUMP_BIAS[rate * window]) <= tol


def test_jump_process_long_window_within_005():
    schedule = JumpSchedule(10.0, [0.5, 0.5], [ket(0), ket(1)], [ket(0), ket(1)])
    _, trajs = generate(schedule, MicroGrid(10.0, 2000), 10_000, seed=5)
    rho = normalize(estimate(trajs, Centering.none()))
    assert trace_distance(rho, PHI_PLUS) <= 0.05


def test_jump_macro_coefficients_are_centered():
    schedule = JumpSchedule(10.0, [0.5, 0.5], [ket(0), ket(1)], [ket(0), ket(1)], coefficients="macro")
    _, trajs = generate(schedule, MicroGrid(10.0, 2000), 5_000, seed=6)
    rho = normalize(estimate(trajs, Centering.empirical()))
    assert trace_distance(rho, PHI_PLUS) <= 0.05
