import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellbound import bell, lb, qcore, states

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _brute_force_bound(ineq):
    """Maximum over all deterministic probability tables, scored by ``evaluate``."""
    s = ineq.scenario
    best = -np.inf
    for a in itertools.product(range(s.n_a), repeat=s.m_a):
        for b in itertools.product(range(s.n_b), repeat=s.m_b):
            p_a = np.zeros((s.m_a, s.n_a))
            p_b = np.zeros((s.m_b, s.n_b))
            p_a[np.arange(s.m_a), a] = 1
            p_b[np.arange(s.m_b), b] = 1
            p_ab = np.einsum("xp,yq->xypq", p_a, p_b)
            best = max(best, ineq.evaluate(p_a, p_b, p_ab))
    return best


def _brute_force_correlation_bound(cineq):
    best = -np.inf
    m = cineq.coeffs.shape
    for outs in itertools.product(*[list(itertools.product((1, -1), repeat=k)) for k in m]):
        val = cineq.constant + np.einsum(cineq.coeffs, list(range(len(m))),
                                         *itertools.chain(*[(np.array(o), [k])
                                                            for k, o in enumerate(outs)]))
        if len(m) == 2:
            val += cineq.marg_a @ np.array(outs[0]) + cineq.marg_b @ np.array(outs[1])
        best = max(best, val)
    return best


def _random_inequality(rng, m_a, n_a, m_b, n_b):
    ints = lambda *shape: rng.integers(-3, 4, size=shape).astype(float)  # noqa: E731
    return bell.BellInequality(ints(), ints(m_a, n_a), ints(m_b, n_b),
                               ints(m_a, m_b, n_a, n_b))


scenario = st.tuples(*[st.integers(min_value=1, max_value=3)] * 4)


@pytest.mark.parametrize("tag", ["ch", "i3322", "i4422_1", "i4422_3", "imm22", "i22nn",
                                 "cglmp"])
def test_enumeration_matches_brute_force_on_named(tag):
    ineq = bell.named(tag)
    assert ineq.bound == pytest.approx(_brute_force_bound(ineq))


@given(scenario, seeds)
def test_enumeration_matches_brute_force_on_random(shape, seed):
    m_a, n_a, m_b, n_b = shape
    ineq = _random_inequality(np.random.default_rng(seed), m_a, n_a, m_b, n_b)
    assert bell.classical_bound(ineq) == pytest.approx(_brute_force_bound(ineq))
    strategy, value = bell.best_deterministic_strategy(ineq)
    assert bell.deterministic_value(ineq, strategy) == pytest.approx(value)


@pytest.mark.parametrize("tag", ["chsh", "as4", "d4", "i3322_corr"])
def test_correlation_enumeration_matches_brute_force(tag):
    ineq = bell.named(tag)
    assert ineq.bound == pytest.approx(_brute_force_correlation_bound(ineq))


def test_mermin_bound_matches_brute_force():
    for n in (2, 3, 4):
        ineq = bell.mermin(n)
        assert ineq.bound == pytest.approx(_brute_force_correlation_bound(ineq))


def test_mermin_three_on_ghz_reaches_two():
    # settings X and Y on every qubit
    psi = states.ghz(3).amplitudes
    obs = [qcore.PAULI_X, qcore.PAULI_Y]
    f = bell.mermin(3).coeffs
    best = 0.0
    for choice in itertools.product([0, 1], repeat=3):
        val = 0.0
        for idx in itertools.product([0, 1], repeat=3):
            op = qcore.kron(*[obs[i ^ c] for i, c in zip(idx, choice)])
            val += f[idx] * np.vdot(psi, op @ psi).real
        best = max(best, abs(val))
    assert best == pytest.approx(2.0)


@given(scenario, seeds)
def test_classical_bound_is_relabeling_invariant(shape, seed):
    m_a, n_a, m_b, n_b = shape
    rng = np.random.default_rng(seed)
    ineq = _random_inequality(rng, m_a, n_a, m_b, n_b)
    base = ineq.bound
    assert bell.swap_parties(ineq).bound == pytest.approx(base)
    perm = rng.permutation(m_a)
    assert bell.relabel(ineq, "permute-settings", "A", perm).bound == pytest.approx(base)
    perm = rng.permutation(n_b)
    setting = int(rng.integers(m_b))
    moved = bell.relabel(ineq, "permute-outcomes", "B", perm, setting)
    assert moved.bound == pytest.approx(base)
    back = bell.relabel(moved, "permute-outcomes", "B", bell.inverse_permutation(perm), setting)
    assert back.coefficients_equal(ineq)


def test_swap_parties_is_an_involution(rng):
    ineq = _random_inequality(rng, 2, 3, 3, 2)
    assert bell.swap_parties(bell.swap_parties(ineq)).coefficients_equal(ineq)


def test_relabel_rejects_non_permutations():
    with pytest.raises(ValueError):
        bell.relabel(bell.named("ch"), "permute-settings", "A", [0, 0])
    with pytest.raises(ValueError):
        bell.relabel(bell.named("ch"), "rotate", "A", [0, 1])


def test_display_and_json_round_trip():
    ineq = bell.named("i3322")
    back = bell.from_display(ineq.to_display(), 3, 2, 3, 2)
    assert back.coefficients_equal(ineq)
    again = bell.BellInequality.from_json(json.dumps(ineq.to_json()))
    assert again.coefficients_equal(ineq)
    bad = ineq.to_json()
    bad["m_a"] = 4
    with pytest.raises(ValueError):
        bell.BellInequality.from_json(bad)


def test_i22nn_with_two_outcomes_is_ch():
    assert bell.i22nn(2).coefficients_equal(bell.named("ch"))


def test_i2233_alias():
    assert bell.named("i2233").coefficients_equal(bell.i22nn(3))


def _agree_on_quantum_behaviours(first, second, offset=0.0, scale=1.0, trials=20):
    rng = np.random.default_rng(99)
    d = 3
    for _ in range(trials):
        rho = qcore.random_density_matrix((d, d), rng)
        meas = lb.random_measurements(first.scenario, (d, d), rng)
        p = bell.quantum_probabilities(rho, meas)
        assert first.evaluate(*p) == pytest.approx(scale * second.evaluate(*p) + offset,
                                                   abs=1e-10)


def test_imm22_is_swapped_i3322():
    _agree_on_quantum_behaviours(bell.swap_parties(bell.imm22(3)), bell.named("i3322"))
    _agree_on_quantum_behaviours(bell.swap_parties(bell.imm22(4)), bell.named("i4422"))


def test_ch_and_chsh_are_related_by_conversion():
    # CHSH = 4 CH + 2 on every behaviour
    chsh = bell.correlation_to_probability(bell.named("chsh"))
    ch = bell.named("ch")
    rng = np.random.default_rng(5)
    rho = qcore.random_density_matrix((2, 2), rng)
    meas = lb.random_measurements(ch.scenario, (2, 2), rng)
    p = bell.quantum_probabilities(rho, meas)
    assert chsh.evaluate(*p) == pytest.approx(4 * ch.evaluate(*p) + 2)


@given(seeds)
def test_correlation_and_probability_forms_agree(seed):
    rng = np.random.default_rng(seed)
    coeffs = rng.integers(-2, 3, size=(2, 3)).astype(float)
    cineq = bell.CorrelationInequality(coeffs, rng.normal(size=2), rng.normal(size=3), 0.5)
    rho = qcore.random_density_matrix((2, 2), rng)
    obs_a = [np.real_if_close(qcore.positive_eigenspace_projector(qcore.random_hermitian(2, rng)))
             for _ in range(2)]
    obs_a = [2 * p - np.eye(2) for p in obs_a]
    obs_b = [2 * qcore.positive_eigenspace_projector(qcore.random_hermitian(2, rng)) - np.eye(2)
             for _ in range(3)]
    direct = np.trace(rho.matrix @ bell.correlation_operator(cineq, obs_a, obs_b)).real
    meas = bell.MeasurementAssignment([bell.projective_from_observable(o) for o in obs_a],
                                      [bell.projective_from_observable(o) for o in obs_b])
    prob_form = bell.correlation_to_probability(cineq)
    assert prob_form.evaluate(*bell.quantum_probabilities(rho, meas)) == pytest.approx(direct)
    back = bell.probability_to_correlation(prob_form)
    np.testing.assert_allclose(back.coeffs, cineq.coeffs, atol=1e-12)
    np.testing.assert_allclose(back.marg_a, cineq.marg_a, atol=1e-12)
    assert back.constant == pytest.approx(cineq.constant)


@given(st.sampled_from([(2, 2, 2, 2), (3, 2, 3, 2), (2, 3, 2, 3), (2, 4, 3, 2)]), seeds)
def test_bell_operator_matches_probability_evaluation(shape, seed):
    m_a, n_a, m_b, n_b = shape
    rng = np.random.default_rng(seed)
    ineq = _random_inequality(rng, m_a, n_a, m_b, n_b)
    dims = (int(rng.integers(2, 4)), int(rng.integers(2, 4)))
    rho = qcore.random_density_matrix(dims, rng)
    meas = lb.random_measurements(ineq.scenario, dims, rng)
    op = bell.bell_operator(ineq, meas)
    assert np.trace(rho.matrix @ op).real == pytest.approx(
        ineq.evaluate(*bell.quantum_probabilities(rho, meas)), abs=1e-10)


@given(st.sampled_from([(2, 2, 2, 2), (3, 3, 2, 4)]), seeds)
def test_quantum_probabilities_are_no_signaling(shape, seed):
    m_a, n_a, m_b, n_b = shape
    rng = np.random.default_rng(seed)
    scen = bell.BellScenario(m_a, n_a, m_b, n_b)
    rho = qcore.random_density_matrix((3, 2), rng)
    meas = lb.random_measurements(scen, (3, 2), rng)
    p_a, p_b, p_ab = bell.quantum_probabilities(rho, meas)
    assert np.all(p_ab >= -1e-12)
    np.testing.assert_allclose(p_ab.sum(axis=3), np.broadcast_to(p_a[:, None], p_ab.shape[:3]),
                               atol=1e-12)
    np.testing.assert_allclose(p_ab.sum(axis=2).transpose(1, 0, 2),
                               np.broadcast_to(p_b[:, None], (m_b, m_a, n_b)), atol=1e-12)


def test_deterministic_measurements_reproduce_strategy_value():
    ineq = bell.named("i3322")
    strategy, value = bell.best_deterministic_strategy(ineq)
    meas = bell.deterministic_measurements(strategy, ineq.scenario, (2, 2))
    rho = states.singlet().density_matrix()
    assert np.trace(rho.matrix @ bell.bell_operator(ineq, meas)).real == pytest.approx(value)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_cglmp_conversion_matches_scaled_i22nn(n):
    conv = bell.cglmp_to_i22nn(n)
    assert conv.matches
    assert float(conv.scale) == pytest.approx(2 * n / (n - 1))
    assert len(conv.stages) == 5


def test_cglmp_two_outcomes_is_chsh():
    chsh = bell.correlation_to_probability(bell.named("chsh"))
    _agree_on_quantum_behaviours(bell.cglmp(2), chsh)


@pytest.mark.parametrize("n", [2, 3, 4])
@given(seed=seeds)
def test_operator_relation_holds(n, seed):
    rng = np.random.default_rng(seed)
    scen = bell.BellScenario(2, n, 2, n)
    rho = qcore.random_density_matrix((n, n), rng)
    meas = lb.random_measurements(scen, (n, n), rng)
    assert bell.operator_relation_residual(rho, n, meas) <= 1e-8


def test_measurement_assignment_validation_and_json(rng):
    meas = lb.random_measurements(bell.BellScenario(2, 3, 2, 2), (2, 3), rng)
    assert meas.is_valid()
    back = bell.MeasurementAssignment.from_json(json.loads(json.dumps(meas.to_json())))
    for s, t in zip(meas.alice, back.alice):
        for e, f in zip(s, t):
            np.testing.assert_allclose(e, f)
    broken = bell.MeasurementAssignment([[np.eye(2), np.eye(2)]], [[np.eye(2), np.zeros((2, 2))]])
    assert not broken.is_valid()
    with pytest.raises(ValueError):
        bell.MeasurementAssignment.from_json(broken.to_json())


def test_bell_operator_rejects_mismatched_measurements(rng):
    meas = lb.random_measurements(bell.BellScenario(2, 2, 2, 2), (2, 2), rng)
    with pytest.raises(ValueError):
        bell.bell_operator(bell.named("i3322"), meas)


def test_unknown_tag_raises():
    with pytest.raises(ValueError):
        bell.named("nope")


def test_enumeration_cap(monkeypatch):
    from bellbound import config
    monkeypatch.setattr(bell, "TOL", config.Tolerances(enumeration_cap=10))
    with pytest.raises(ValueError):
        bell.classical_bound(bell.named("i4422_1"))


def test_imm22_with_two_settings_is_ch():
    assert bell.imm22(2).coefficients_equal(bell.named("ch"))
