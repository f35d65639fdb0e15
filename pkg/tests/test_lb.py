import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellbound import bell, lb, nonstandard, qcore, states, ub

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _cvxpy_bob_step(ops):
    """Independent solve of max sum tr(ops[s, o] B_so) over Bob's POVMs."""
    m_b, n_b, d = ops.shape[:3]
    elems = [[cp.Variable((d, d), hermitian=True) for _ in range(n_b)] for _ in range(m_b)]
    cons = []
    for s in range(m_b):
        cons += [e >> 0 for e in elems[s]]
        cons.append(sum(elems[s]) == np.eye(d))
    obj = sum(cp.real(cp.trace(ops[s, o] @ elems[s][o])) for s in range(m_b) for o in range(n_b))
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver="CLARABEL")
    return prob.value


def _random_alice(rng, scen, d):
    return lb.random_measurements(scen, (d, d), rng).alice


@given(seeds)
def test_two_outcome_step_matches_helstrom_formula(seed):
    rng = np.random.default_rng(seed)
    ineq = bell.named("i3322")
    rho = qcore.random_density_matrix((2, 2), rng)
    alice = _random_alice(rng, ineq.scenario, 2)
    ops = lb.reduced_operators(rho, ineq, alice)
    _, value = lb.optimize_bob_two_outcome(rho, ineq, alice)
    helstrom = sum(0.5 * qcore.trace_norm(ops[s, 0] - ops[s, 1])
                   + 0.5 * np.trace(ops[s, 0] + ops[s, 1]).real for s in range(ops.shape[0]))
    assert value == pytest.approx(helstrom, abs=1e-10)


@given(seeds)
def test_two_outcome_step_matches_cvxpy(seed):
    rng = np.random.default_rng(seed)
    ineq = bell.named("ch")
    rho = qcore.random_density_matrix((3, 3), rng)
    alice = _random_alice(rng, ineq.scenario, 3)
    _, value = lb.optimize_bob_two_outcome(rho, ineq, alice)
    assert value == pytest.approx(_cvxpy_bob_step(lb.reduced_operators(rho, ineq, alice)),
                                  abs=1e-6)


@given(seeds)
def test_sdp_step_matches_cvxpy(seed):
    rng = np.random.default_rng(seed)
    ineq = bell.named("cglmp", n=3)
    rho = qcore.random_density_matrix((3, 3), rng)
    alice = _random_alice(rng, ineq.scenario, 3)
    bob, value = lb.optimize_bob_sdp(rho, ineq, alice)
    assert value == pytest.approx(_cvxpy_bob_step(lb.reduced_operators(rho, ineq, alice)),
                                  abs=1e-6)
    assert bell.MeasurementAssignment(alice, bob).is_valid()


def test_sdp_step_agrees_with_two_outcome_step(rng):
    ineq = bell.named("i3322")
    rho = qcore.random_density_matrix((2, 2), rng)
    alice = _random_alice(rng, ineq.scenario, 2)
    _, exact = lb.optimize_bob_two_outcome(rho, ineq, alice)
    _, via_sdp = lb.optimize_bob_sdp(rho, ineq, alice)
    assert via_sdp == pytest.approx(exact, abs=1e-7)


@given(seeds)
def test_reduced_operators_reproduce_bell_value(seed):
    rng = np.random.default_rng(seed)
    ineq = bell.named("cglmp", n=3)
    rho = qcore.random_density_matrix((3, 2), rng)
    meas = lb.random_measurements(ineq.scenario, (3, 2), rng)
    ops = lb.reduced_operators(rho, ineq, meas.alice)
    total = sum(np.trace(ops[s, o] @ e).real for s, elems in enumerate(meas.bob)
                for o, e in enumerate(elems))
    assert total == pytest.approx(np.trace(rho.matrix @ bell.bell_operator(ineq, meas)).real,
                                  abs=1e-10)


@given(seeds)
def test_swap_state_exchanges_marginals(seed):
    rho = qcore.random_density_matrix((2, 3), np.random.default_rng(seed))
    swapped = lb.swap_state(rho)
    assert swapped.split == (3, 2)
    np.testing.assert_allclose(qcore.partial_trace(swapped.matrix, (3, 2), "B"),
                               qcore.partial_trace(rho.matrix, (2, 3), "A"), atol=1e-12)


@given(st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=5), seeds,
       st.sampled_from([lb.GENERIC_POVM, lb.PROJECTIVE]))
def test_random_povm_is_valid(d, n, seed, mode):
    elems = lb.random_povm(d, n, np.random.default_rng(seed), mode)
    assert len(elems) == n
    meas = bell.MeasurementAssignment([elems], [[np.eye(1)]])
    assert meas.is_valid()
    if mode == lb.GENERIC_POVM:
        assert all(np.linalg.eigvalsh(e)[0] > 0 for e in elems)


def test_singlet_chsh_reaches_tsirelson():
    result = lb.seesaw(states.singlet(), bell.named("chsh"), lb.SeesawConfig(rng_seed=3))
    assert result.value == pytest.approx(2 * np.sqrt(2), abs=1e-6)
    assert result.measurements.is_valid()


def test_cglmp_on_maximally_entangled_qutrits():
    result = lb.seesaw(states.max_entangled(3).density_matrix(), bell.named("cglmp", n=3),
                       lb.SeesawConfig(restarts=5, rng_seed=1))
    assert result.value == pytest.approx(nonstandard.cglmp_me_value(3), abs=1e-5)


@given(seeds)
def test_history_is_monotone_per_half_sweep(seed):
    rng = np.random.default_rng(seed)
    rho = qcore.random_density_matrix((2, 2), rng)
    result = lb.seesaw(rho, bell.named("i3322"), lb.SeesawConfig(restarts=1, rng_seed=seed))
    assert np.all(np.diff(result.history) >= -1e-9)


def test_history_is_monotone_with_sdp_steps(rng):
    rho = qcore.random_density_matrix((3, 3), rng)
    result = lb.seesaw(rho, bell.named("cglmp", n=3), lb.SeesawConfig(restarts=1))
    assert np.all(np.diff(result.history) >= -1e-12)


def test_same_seed_gives_same_result():
    rho = states.werner(2, 0.8)
    config = lb.SeesawConfig(restarts=4, rng_seed=11)
    first = lb.seesaw(rho, bell.named("ch"), config)
    second = lb.seesaw(rho, bell.named("ch"), config)
    threaded = lb.seesaw(rho, bell.named("ch"), lb.SeesawConfig(restarts=4, rng_seed=11,
                                                                 threads=3))
    assert first.value == second.value == threaded.value
    assert first.restart_values == threaded.restart_values


def test_best_restart_ties_go_to_lowest_index():
    rho = states.singlet()
    result = lb.seesaw(rho, bell.named("chsh"), lb.SeesawConfig(restarts=6))
    values = result.restart_values + [result.classical_value]
    assert result.best_restart == min(i for i, v in enumerate(values) if v == max(values))


def test_classical_start_reaches_classical_bound_on_maximally_mixed_state():
    rho = qcore.DensityMatrix(np.eye(4) / 4, (2, 2))
    for tag in ("ch", "chsh", "i3322"):
        ineq = bell.named(tag)
        result = lb.seesaw(rho, ineq, lb.SeesawConfig(restarts=2))
        assert result.classical_value == pytest.approx(bell.classical_bound(ineq), abs=1e-9)
        assert result.value == pytest.approx(bell.classical_bound(ineq), abs=1e-9)


@given(seeds)
def test_value_never_below_classical_bound(seed):
    rho = qcore.random_density_matrix((2, 2), np.random.default_rng(seed))
    result = lb.seesaw(rho, bell.named("ch"), lb.SeesawConfig(restarts=1, rng_seed=seed))
    assert result.value >= -1e-9


def test_classical_start_can_be_disabled():
    config = lb.SeesawConfig(restarts=2, classical_start=False)
    result = lb.seesaw(states.singlet(), bell.named("ch"), config)
    assert result.classical_value is None
    assert len(result.restart_values) == 2


def test_werner_ch_value_matches_closed_form():
    p = 0.8
    result = lb.seesaw(states.werner(2, p), bell.named("ch"), lb.SeesawConfig(rng_seed=7))
    assert result.value == pytest.approx(0.5 * (np.sqrt(2 * p * p) - 1), abs=1e-6)


def test_initial_alice_is_used():
    ineq = bell.named("ch")
    alice = [bell.projective_from_observable(qcore.PAULI_Z),
             bell.projective_from_observable(qcore.PAULI_X)]
    result = lb.seesaw(states.singlet(), ineq, lb.SeesawConfig(restarts=1), initial_alice=alice)
    assert result.value == pytest.approx((np.sqrt(2) - 1) / 2, abs=1e-6)


def test_config_validation():
    with pytest.raises(ValueError):
        lb.SeesawConfig(convergence_tol=0)
    with pytest.raises(ValueError):
        lb.SeesawConfig(restarts=0)
    with pytest.raises(ValueError):
        lb.SeesawConfig(init_mode="spiral")


@pytest.mark.parametrize("p", [0.3, 0.7, 0.9])
def test_horodecki_values_for_werner(p):
    # T = -p I for the two-qubit Werner state
    np.testing.assert_allclose(lb.horodecki_T(states.werner(2, p)), -p * np.eye(3), atol=1e-12)
    values = lb.horodecki_values(states.werner(2, p))
    assert values.violates == (2 * p * p > 1)
    assert values.sqm_ch == pytest.approx(max(0.0, 0.5 * (np.sqrt(2) * p - 1)))


def test_horodecki_rejects_qutrits():
    with pytest.raises(ValueError):
        lb.horodecki_T(states.isotropic(3, 0.5))


@given(seeds)
def test_lower_bound_below_upper_bound(seed):
    rng = np.random.default_rng(seed)
    rho = qcore.random_density_matrix((2, 2), rng)
    ineq = bell.named("i3322")
    low = lb.seesaw(rho, ineq, lb.SeesawConfig(restarts=2, rng_seed=seed)).value
    high = ub.ub_state_independent(ineq, rho).value
    assert low <= high + 1e-6
