import numpy as np
import pytest

import oracles
from superlase import steady
from superlase.errors import NotRelaxed
from superlase.symmetric import TripleBasis

GRID = [(N, c, p) for N in (1, 3, 5, 8) for c in (0.5, 1.0, 2.0, 5.0) for p in (0.0, 0.1, 0.5, 1.0)]


@pytest.mark.parametrize("N,c,p", GRID)
def test_generator_invariants(N, c, p):
    gen = steady.assemble_generator(N, c, p)
    assert gen.column_trace_defect() <= 1e-12
    assert gen.hermiticity_defect() == 0.0
    assert gen.dimension == len(TripleBasis(N))


def _embed(rho, pos, n):
    full = np.zeros((n, n))
    for (l, m, r), v in rho.items():
        full[pos[(l, m)], pos[(r, m)]] = v
    return full


@pytest.mark.parametrize("N,c,p", [(1, 2.0, 0.4), (3, 0.5, 0.2), (4, 2.0, 0.7)])
def test_generator_action_matches_dense_master_equation(N, c, p):
    gen = steady.assemble_generator(N, c, p)
    sts, pos, L = oracles.dense_liouvillian(N, c, p)
    n = len(sts)
    rng = np.random.default_rng(7)
    vals = rng.standard_normal(gen.dimension)
    vals = 0.5 * (vals + vals[steady.swap_permutation(gen.basis)])
    rho = steady.DensityMatrix(N, vals)
    out = (L @ _embed(rho, pos, n).ravel()).reshape(n, n)
    np.testing.assert_allclose(_embed(gen.apply(rho), pos, n), out, atol=1e-12)
    # the master equation never leaves the block ansatz
    mask = _embed(steady.DensityMatrix(N, np.ones(gen.dimension)), pos, n) != 0
    assert np.all(out[~mask] == 0)


def test_first_order_action_on_ground_state():
    N, c, p = 5, 2.0, 0.01
    gen = steady.assemble_generator(N, c, p)
    out = gen.apply(steady.DensityMatrix.ground(N))
    # drives the |2^1><0| coherence negative, as in the first-order expansion
    amp = -p * N * np.sqrt(c) * np.sqrt(N)
    assert out[1, 0, 0] == pytest.approx(amp, rel=1e-14)
    assert out[0, 0, 1] == pytest.approx(amp, rel=1e-14)
    assert out[0, 0, 0] == 0.0


def test_coefficient_diff_verdict():
    diff = steady.coefficient_diff(4, 2.0, 0.3)
    assert diff.adopted == "derived"
    assert diff.literal_trace_defect > 1.0
    assert diff.derived_trace_defect <= 1e-12 and diff.corrected_trace_defect <= 1e-12
    assert diff.gauge_residual <= 1e-12
    k = diff.counts()
    assert k.get("other", 0) == 0 and k["decay-diagonal"] > 0 and k["pump-sign"] > 0
    assert "adopted=derived" in diff.verdict()


@pytest.mark.parametrize("N", [1, 4, 9])
def test_zero_pump_gives_ground_state(N):
    rho = steady.stationary_state(N, 2.0, 0.0)
    obs = steady.observables(rho)
    assert (obs.S00, obs.S11, obs.S22) == (N, 0, 0)
    assert (obs.var00, obs.var11, obs.var22) == (0, 0, 0)


def test_n2_matches_dense_eigen_oracle():
    N, c, p = 2, 2.0, 0.3
    rho = steady.stationary_state(N, c, p)
    sts, pos, L = oracles.dense_liouvillian(N, c, p)
    n = len(sts)
    w, V = np.linalg.eig(L)
    k = int(np.argmin(np.abs(w)))
    full = np.real(V[:, k]).reshape(n, n)
    full /= np.trace(full)
    np.testing.assert_allclose(_embed(rho, pos, n), full, atol=1e-10)


@pytest.mark.parametrize("N,c,p", [(3, 0.5, 0.4), (6, 2.0, 0.3), (8, 5.0, 1.0), (8, 1.0, 0.1)])
def test_stationary_state_invariants(N, c, p):
    rho = steady.stationary_state(N, c, p)
    assert rho.trace() == pytest.approx(1.0, abs=1e-13)
    assert rho.symmetry_defect() <= 1e-12
    assert rho.min_eigenvalue() >= -1e-10
    assert steady.observables(rho).total == pytest.approx(N, rel=1e-12)


def test_small_pump_matches_perturbation():
    S11 = steady.observables(steady.stationary_state(6, 2.0, 1e-3)).S11
    assert S11 == pytest.approx(3.6e-5, rel=0.05)


def test_oracle_example_n8():
    rho = steady.stationary_state(8, 2.0, 0.5)
    orc = steady.evolve_oracle(8, 2.0, 0.5, horizon=1000.0, stop_when_relaxed=True)
    assert np.max(np.abs(rho.values - orc.rho.values)) <= 1e-8
    assert orc.off_ansatz <= 1e-12
    assert orc.max_trace_drift <= 1e-9


def test_oracle_example_n4_fixed_horizon():
    rho = steady.stationary_state(4, 2.0, 0.3)
    orc = steady.evolve_oracle(4, 2.0, 0.3, horizon=200.0)
    assert np.max(np.abs(rho.values - orc.rho.values)) <= 1e-8


def test_oracle_ground_state_is_fixed_point():
    orc = steady.evolve_oracle(3, 2.0, 0.0, horizon=50.0)
    np.testing.assert_array_equal(orc.rho.values, steady.DensityMatrix.ground(3).values)


def test_oracle_not_relaxed():
    with pytest.raises(NotRelaxed):
        steady.evolve_oracle(4, 2.0, 0.3, horizon=0.5)


def test_family_matches_direct_assembly():
    fam = steady.GeneratorFamily(5, 2.0)
    for p in (0.0, 0.37, 1.0):
        diff = fam(p).matrix - steady.assemble_generator(5, 2.0, p).matrix
        assert abs(diff).max() <= 1e-13 if diff.nnz else True


def test_sweep_smeared_transition():
    N = 10
    rows = steady.sweep_pump(N, 2.0, [0.0, 1 / (2 * N), 1 / N, 0.5, 1.0])
    S22 = [r.quantum.S22 for r in rows]
    assert S22[0] == 0.0
    assert S22[2] > 0.25 * N / 3
    assert all(a < b for a, b in zip(S22[:4], S22[1:4]))
    assert rows[-1].quantum.S11 < N
    for r in rows:
        assert r.quantum.total == pytest.approx(N, abs=1e-10)


def test_sweep_threads_are_deterministic():
    grid = np.linspace(0, 1, 9)
    a = steady.sweep_pump(6, 2.0, grid, workers=1)
    b = steady.sweep_pump(6, 2.0, grid, workers=4)
    assert a == b


def test_fluctuations_vanish_at_small_pump():
    v = [steady.observables(steady.stationary_state(6, 2.0, p)).var22 for p in (1e-2, 1e-3, 1e-4)]
    # leading behaviour ~ p^2
    assert v[0] / v[1] == pytest.approx(100, rel=0.02)
    assert v[1] / v[2] == pytest.approx(100, rel=0.002)


@pytest.mark.parametrize("args", [(0, 2.0, 0.1), (3, -1.0, 0.1), (3, 2.0, -0.1)])
def test_invalid_inputs(args):
    with pytest.raises(ValueError):
        steady.assemble_generator(*args)


def test_sweep_rejects_out_of_range_pump():
    with pytest.raises(ValueError):
        steady.sweep_pump(3, 2.0, [0.5, 1.5])
