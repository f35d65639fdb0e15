import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellbound import qcore, sdp

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _random_sym(n, rng, complex_=False):
    g = rng.normal(size=(n, n))
    if complex_:
        g = g + 1j * rng.normal(size=(n, n))
    return (g + g.conj().T) / 2


def _feasible_standard(n, m, rng, complex_=False):
    """Random instance with strictly feasible primal and dual."""
    fs = [_random_sym(n, rng, complex_) for _ in range(m)]
    g = rng.normal(size=(n, n)) + (1j * rng.normal(size=(n, n)) if complex_ else 0)
    z0 = g @ g.conj().T + np.eye(n)
    c = np.array([np.trace(f @ z0).real for f in fs])
    y0 = rng.normal(size=m)
    f0 = -sum(yi * fi for yi, fi in zip(y0, fs)) + np.eye(n)
    return f0, fs, c


def _cvxpy_standard(f0, fs, c):
    n = f0.shape[0]
    if np.iscomplexobj(f0) or any(np.iscomplexobj(f) for f in fs):
        z = cp.Variable((n, n), hermitian=True)

        def lin(f):
            return cp.real(cp.trace(f @ z))
    else:
        z = cp.Variable((n, n), symmetric=True)

        def lin(f):
            return cp.trace(f @ z)
    cons = [z >> 0] + [lin(f) == ci for f, ci in zip(fs, c)]
    prob = cp.Problem(cp.Maximize(-lin(f0)), cons)
    prob.solve(solver="CLARABEL")
    return prob.value


@given(st.integers(min_value=2, max_value=6), st.integers(min_value=1, max_value=6), seeds)
def test_standard_form_matches_cvxpy_real(n, m, seed):
    f0, fs, c = _feasible_standard(n, m, np.random.default_rng(seed))
    sol = sdp.solve_standard(sdp.SdpStandard(f0, fs, c))
    assert sol.ok
    assert sol.value == pytest.approx(_cvxpy_standard(f0, fs, c), abs=1e-6)


@given(st.integers(min_value=2, max_value=5), st.integers(min_value=1, max_value=5), seeds)
def test_standard_form_matches_cvxpy_complex(n, m, seed):
    f0, fs, c = _feasible_standard(n, m, np.random.default_rng(seed), complex_=True)
    sol = sdp.solve_standard(sdp.SdpStandard(f0, fs, c))
    assert sol.ok
    assert sol.value == pytest.approx(_cvxpy_standard(f0, fs, c), abs=1e-6)
    z = sol.primal
    assert qcore.is_psd(z, tol=1e-7)
    for f, ci in zip(fs, c):
        assert np.trace(f @ z).real == pytest.approx(ci, abs=1e-6)


@given(st.integers(min_value=2, max_value=5), st.integers(min_value=1, max_value=5), seeds,
       st.booleans())
def test_returned_dual_certifies_weak_duality(n, m, seed, complex_):
    # -tr(F0 Z) = -c.y - tr(S Z) <= -c.y for every feasible Z when S >= 0;
    # the returned Z is feasible only to the solver's feasibility tolerance
    f0, fs, c = _feasible_standard(n, m, np.random.default_rng(seed), complex_)
    sol = sdp.solve_standard(sdp.SdpStandard(f0, fs, c))
    slack = f0 - sum(yi * f for yi, f in zip(sol.x, fs))
    assert np.linalg.eigvalsh(slack)[0] >= -1e-7
    assert sol.dual_objective == pytest.approx(-c @ sol.x, abs=1e-9)
    assert sol.dual_objective >= sol.primal_objective - 1e-7
    assert -np.trace(f0 @ sol.primal).real == pytest.approx(
        sol.dual_objective - np.trace(slack @ sol.primal).real, abs=1e-6)


@given(st.integers(min_value=1, max_value=6), seeds)
def test_largest_eigenvalue_by_standard_form(n, seed):
    h = qcore.random_hermitian(n, np.random.default_rng(seed))
    sol = sdp.solve_standard(sdp.SdpStandard(-h, [np.eye(n)], np.array([1.0])))
    assert sol.value == pytest.approx(np.linalg.eigvalsh(h)[-1], abs=1e-7)


@given(st.integers(min_value=1, max_value=6), seeds)
def test_largest_eigenvalue_by_inequality_form(n, seed):
    h = qcore.random_hermitian(n, np.random.default_rng(seed))
    sol = sdp.solve_inequality(sdp.SdpInequality(np.array([1.0]), -h, [np.eye(n)]))
    assert sol.ok
    assert sol.value == pytest.approx(np.linalg.eigvalsh(h)[-1], abs=1e-7)
    assert sol.x[0] == pytest.approx(sol.value)


@given(seeds)
def test_block_diagonal_problem_matches_separate_solves(seed):
    rng = np.random.default_rng(seed)
    h1, h2 = qcore.random_hermitian(3, rng), qcore.random_hermitian(2, rng)
    # max tr(h1 Z1) + tr(h2 Z2) with unit trace on each block
    problem = sdp.SdpStandard([-h1, -h2], [[np.eye(3), np.zeros((2, 2))],
                                          [np.zeros((3, 3)), np.eye(2)]], np.array([1.0, 1.0]))
    sol = sdp.solve_standard(problem)
    expected = np.linalg.eigvalsh(h1)[-1] + np.linalg.eigvalsh(h2)[-1]
    assert sol.value == pytest.approx(expected, abs=1e-7)
    assert isinstance(sol.primal, list) and len(sol.primal) == 2


def test_two_by_two_inequality():
    # min x s.t. [[x, 1], [1, 1]] >= 0 gives x = 1
    g0 = np.array([[0.0, 1.0], [1.0, 1.0]])
    g1 = np.array([[1.0, 0.0], [0.0, 0.0]])
    sol = sdp.solve_inequality(sdp.SdpInequality(np.array([1.0]), g0, [g1]))
    assert sol.value == pytest.approx(1.0, abs=1e-7)


def test_infeasible_primal_is_reported():
    sol = sdp.solve_standard(sdp.SdpStandard(np.eye(2), [np.eye(2)], np.array([-1.0])))
    assert sol.status == sdp.INFEASIBLE
    with pytest.raises(sdp.SdpError):
        raise sdp.SdpError(sol)


def test_unbounded_primal_is_reported():
    e11 = np.diag([1.0, 0.0])
    e22 = np.diag([0.0, 1.0])
    sol = sdp.solve_standard(sdp.SdpStandard(-e22, [e11], np.array([1.0])))
    assert sol.status == sdp.DUAL_INFEASIBLE


def test_non_hermitian_data_is_rejected():
    with pytest.raises(ValueError):
        sdp.solve_standard(sdp.SdpStandard(np.array([[0, 1], [0, 0]]), [np.eye(2)],
                                           np.array([1.0])))


def test_dimension_cap():
    opts = sdp.SolverOptions(max_dim=3)
    with pytest.raises(ValueError):
        sdp.solve_standard(sdp.SdpStandard(np.eye(4), [np.eye(4)], np.array([1.0])), opts)


def test_real_embedding_preserves_spectrum(rng):
    h = qcore.random_hermitian(3, rng)
    w = np.linalg.eigvalsh(h)
    we = np.linalg.eigvalsh(sdp.real_embedding(h))
    np.testing.assert_allclose(we, np.sort(np.repeat(w, 2)), atol=1e-12)


def test_dump_json_round_trip(tmp_path):
    problem = sdp.SdpStandard(np.eye(2), [np.eye(2)], np.array([1.0]))
    path = tmp_path / "p.json"
    sdp.dump_json(problem, path)
    assert path.read_text().startswith("{")
