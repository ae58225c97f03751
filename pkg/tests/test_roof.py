import json
import math

import numpy as np
import pytest

from segrescope.errors import DomainError, IsometryError, RankError, ResourceError, ShapeError
from segrescope.measures import CONCURRENCE, FMEASURE, MeasureKind, MeasureSpec, pure_measure
from segrescope.roof import (
    _smoothed_roof,
    convex_roof_upper_bound,
    decomposition_from_isometry,
    ensemble_average,
    roof_scan,
    wootters_mixed,
)
from segrescope.segre import swap_classes
from segrescope.states import (
    DensityMatrix,
    Ensemble,
    basis_state,
    bell_state,
    density_from_pure,
    ghz_state,
    random_density,
    random_pure,
    w_state,
    werner,
)

import oracles


def _rho(ens):
    return ens.density_matrix().entries


def test_ensemble_average_examples():
    assert ensemble_average(Ensemble([(1.0, bell_state())])) == pytest.approx(1.0, abs=1e-15)
    prod = Ensemble([(0.5, basis_state((2, 2), (1, 1))), (0.5, basis_state((2, 2), (2, 2)))])
    assert ensemble_average(prod) == 0.0
    bells = Ensemble([(0.5, bell_state()), (0.5, bell_state(-1))])
    assert ensemble_average(bells) == pytest.approx(1.0, abs=1e-15)


def test_decomposition_identity_is_spectral():
    rho = random_density((2, 2), np.random.default_rng(0), rank=3)
    ens = decomposition_from_isometry(rho, np.eye(3))
    lam = np.sort(np.linalg.eigvalsh(rho.entries))[::-1][:3]
    np.testing.assert_allclose(ens.probabilities, lam, atol=1e-12)
    np.testing.assert_allclose(_rho(ens), rho.entries, atol=1e-12)


def test_decomposition_of_pure_state():
    psi = random_pure((2, 3), np.random.default_rng(1))
    rho = density_from_pure(psi)
    U = np.array([[0.6], [0.8j], [0.0]])
    ens = decomposition_from_isometry(rho, U)
    assert len(ens.members) == 2
    for _, phi in ens:
        assert abs(abs(np.vdot(phi.amplitudes, psi.amplitudes)) - 1) < 1e-12


def test_decomposition_hadamard_on_qubit():
    rho = DensityMatrix((2,), np.eye(2) / 2)
    H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    ens = decomposition_from_isometry(rho, H)
    np.testing.assert_allclose(ens.probabilities, [0.5, 0.5], atol=1e-15)
    plus = np.array([1, 1]) / math.sqrt(2)
    minus = np.array([1, -1]) / math.sqrt(2)
    overlaps = sorted(abs(np.vdot(phi.amplitudes, plus)) for _, phi in ens)
    np.testing.assert_allclose(overlaps, [0, 1], atol=1e-12)
    overlaps = sorted(abs(np.vdot(phi.amplitudes, minus)) for _, phi in ens)
    np.testing.assert_allclose(overlaps, [0, 1], atol=1e-12)
    np.testing.assert_allclose(_rho(ens), rho.entries, atol=1e-15)


def test_decomposition_errors():
    rho = random_density((2, 2), np.random.default_rng(2), rank=2)
    with pytest.raises(RankError):
        decomposition_from_isometry(rho, np.eye(3))
    with pytest.raises(IsometryError):
        decomposition_from_isometry(rho, np.ones((3, 2)))


def test_wootters_mixed_examples():
    assert wootters_mixed(density_from_pure(bell_state())) == pytest.approx(1.0, abs=1e-12)
    assert wootters_mixed(DensityMatrix((2, 2), np.eye(4) / 4)) == 0.0
    rho = werner(0.8)
    assert wootters_mixed(rho) == pytest.approx(oracles.wootters_eig(rho.entries), abs=1e-10)
    assert oracles.wootters_eig(rho.entries) == pytest.approx(0.7, abs=1e-10)
    with pytest.raises(ShapeError):
        wootters_mixed(DensityMatrix((2, 3), np.eye(6) / 6))


def test_wootters_mixed_matches_eigen_oracle():
    rng = np.random.default_rng(3)
    for rank in (1, 2, 3, 4):
        rho = random_density((2, 2), rng, rank=rank)
        assert abs(wootters_mixed(rho) - oracles.wootters_eig(rho.entries)) <= 1e-7


@pytest.mark.parametrize("spec", [CONCURRENCE, FMEASURE, MeasureSpec(MeasureKind.CONCURRENCE, 3.0)])
@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (2, 2, 2)])
def test_rank_one_roof_is_pure_value(spec, dims):
    psi = random_pure(dims, np.random.default_rng(len(dims)))
    res = convex_roof_upper_bound(density_from_pure(psi), spec, restarts=2)
    assert abs(res.value - pure_measure(psi, spec)) <= 1e-10


def test_werner_family():
    assert convex_roof_upper_bound(werner(1.0), L=8).value == pytest.approx(1.0, abs=1e-3)
    assert convex_roof_upper_bound(werner(1 / 3), restarts=5).value <= 1e-3


def test_roof_invariants_on_random_states():
    rng = np.random.default_rng(4)
    for rank in (2, 3, 4):
        rho = random_density((2, 2), rng, rank=rank)
        res = convex_roof_upper_bound(rho, restarts=5, seed=1)
        target = wootters_mixed(rho)
        assert res.value >= target - 1e-9
        assert res.value - target <= 1e-3
        assert abs(res.value - ensemble_average(res.best_ensemble)) <= 1e-10
        np.testing.assert_allclose(_rho(res.best_ensemble), rho.entries, atol=1e-8)
        assert res.value <= min(res.history) + 1e-12
        assert len(res.history) == res.restarts_used


def test_monotone_in_L():
    rho = random_density((2, 2), np.random.default_rng(5), rank=2)
    results = roof_scan(rho, CONCURRENCE, [2, 3, 4], restarts=3)
    values = [r.value for r in results]
    assert [r.L for r in results] == [2, 3, 4]
    for a, b in zip(values, values[1:]):
        assert b <= a + 1e-12


def test_multipartite_roof_bounded_by_spectral_average():
    rng = np.random.default_rng(6)
    for spec in (CONCURRENCE, FMEASURE):
        rho = random_density((2, 2, 2), rng, rank=2)
        res = convex_roof_upper_bound(rho, spec, restarts=3)
        spectral = ensemble_average(decomposition_from_isometry(rho, np.eye(2)), spec)
        assert res.value <= spectral + 1e-12
        np.testing.assert_allclose(_rho(res.best_ensemble), rho.entries, atol=1e-8)
    ghz = density_from_pure(ghz_state(3))
    assert convex_roof_upper_bound(ghz, FMEASURE, restarts=1).value == pytest.approx(
        pure_measure(ghz_state(3), FMEASURE), abs=1e-10)
    w = density_from_pure(w_state(3))
    assert convex_roof_upper_bound(w, FMEASURE, restarts=1).value == pytest.approx(
        pure_measure(w_state(3), FMEASURE), abs=1e-10)


def test_smoothed_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    rho = random_density((2, 2), rng, rank=3)
    w, v = np.linalg.eigh(rho.entries)
    B = np.sqrt(w[1:])[::-1, None] * v[:, 1:][:, ::-1].T
    classes = tuple(swap_classes(2, "SEGRE"))
    fun = _smoothed_roof(B, (2, 2), classes, (5, 3), 1e-2, 1.0)
    x = rng.standard_normal(30)
    f0, g = fun(x)
    d = rng.standard_normal(30)
    h = 1e-6
    fd = (fun(x + h * d)[0] - fun(x - h * d)[0]) / (2 * h)
    assert fd == pytest.approx(g @ d, rel=1e-6)


def test_seeded_runs_are_identical():
    rho = random_density((2, 2), np.random.default_rng(8), rank=3)
    a = convex_roof_upper_bound(rho, restarts=3, seed=4).to_json_obj()
    b = convex_roof_upper_bound(rho, restarts=3, seed=4).to_json_obj()
    assert json.dumps(a) == json.dumps(b)


def test_roof_guards():
    rho = random_density((2, 2), np.random.default_rng(9), rank=3)
    with pytest.raises(DomainError):
        convex_roof_upper_bound(rho, L=2)
    assert convex_roof_upper_bound(rho, L=50, restarts=1).L == 9
    big = DensityMatrix((5, 5, 3), np.eye(75) / 75, check=False)
    with pytest.raises(ResourceError):
        convex_roof_upper_bound(big)
    with pytest.raises(ShapeError):
        convex_roof_upper_bound(DensityMatrix((4,), np.eye(4) / 4))
