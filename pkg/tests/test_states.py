import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellbound import qcore, states

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _swap(d):
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1
    return s


def _pt_eigmin(rho):
    return np.linalg.eigvalsh(qcore.partial_transpose(rho.matrix, rho.split, "A"))[0]


@pytest.mark.parametrize("d", [2, 3, 4])
def test_werner_matches_swap_operator_form(d):
    # 2 Pi_- = I - V with V the swap operator
    p = 0.37
    expected = p * (np.eye(d * d) - _swap(d)) / (d * (d - 1)) + (1 - p) * np.eye(d * d) / d ** 2
    np.testing.assert_allclose(states.werner(d, p).matrix, expected, atol=1e-14)


@pytest.mark.parametrize("d", [2, 3])
@given(seed=seeds)
def test_werner_is_uu_invariant(d, seed):
    u = qcore.haar_unitary(d, np.random.default_rng(seed))
    rho = states.werner(d, 0.6).matrix
    uu = np.kron(u, u)
    np.testing.assert_allclose(uu @ rho @ uu.conj().T, rho, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
@given(seed=seeds)
def test_isotropic_is_u_ubar_invariant(d, seed):
    u = qcore.haar_unitary(d, np.random.default_rng(seed))
    rho = states.isotropic(d, 0.6).matrix
    uu = np.kron(u, u.conj())
    np.testing.assert_allclose(uu @ rho @ uu.conj().T, rho, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("family", ["werner", "isotropic"])
def test_ppt_flips_at_separability_threshold(family, d):
    make = getattr(states, family)
    p_sep = states.thresholds(family, d).p_sep
    assert p_sep == pytest.approx(1 / (d + 1))
    assert qcore.is_ppt(make(d, p_sep - 1e-6))
    assert not qcore.is_ppt(make(d, p_sep + 1e-6))
    assert abs(_pt_eigmin(make(d, p_sep))) < 1e-12


def test_singlet_and_max_entangled_two():
    singlet = states.singlet().density_matrix()
    assert np.trace(singlet.matrix @ np.kron(qcore.PAULI_Z, qcore.PAULI_Z)).real == \
        pytest.approx(-1)
    phi = states.max_entangled(2).amplitudes
    np.testing.assert_allclose(phi, np.array([1, 0, 0, 1]) / np.sqrt(2))


def test_werner_two_qubit_is_singlet_mixture():
    p = 0.8
    expected = p * states.singlet().density_matrix().matrix + (1 - p) * np.eye(4) / 4
    np.testing.assert_allclose(states.werner(2, p).matrix, expected, atol=1e-14)


def test_negative_werner_parameter_is_flagged():
    rho = states.werner(3, -0.2)
    assert rho.meta["negative_p"]
    with pytest.raises(ValueError):
        states.werner(3, -0.6)


@pytest.mark.parametrize("alpha", [2.0, 2.5, 3.0, 3.5, 4.0])
def test_choi_horodecki_is_ppt_up_to_four(alpha):
    assert qcore.is_ppt(states.choi_horodecki(alpha))


@pytest.mark.parametrize("alpha", [4.2, 4.6, 5.0])
def test_choi_horodecki_is_npt_above_four(alpha):
    assert not qcore.is_ppt(states.choi_horodecki(alpha))


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_horodecki_h3_is_ppt(p):
    assert qcore.is_ppt(states.horodecki_h3(p))


def test_dur_state_ppt_single_qubit_but_not_two_qubit_cut():
    rho = states.dur(4)
    assert qcore.is_ppt(rho)
    # transpose qubits 1 and 2 together: split (4, 4)
    pt = qcore.partial_transpose(rho.matrix, (4, 4), "A")
    assert np.linalg.eigvalsh(pt)[0] < -1e-6


@pytest.mark.parametrize("p", [0.0, 0.5, 1.0])
def test_toth_acin_is_a_state(p):
    rho = states.toth_acin(p)
    assert rho.split == (2, 4)
    assert np.trace(rho.matrix).real == pytest.approx(1)


def test_ghz_split_and_amplitudes():
    psi = states.ghz(3, alpha=np.pi / 2)
    assert psi.split == (2, 4)
    assert psi.amplitudes[-1] == pytest.approx(1j / np.sqrt(2))


@pytest.mark.parametrize("theta", [0.2, 0.35, 0.6])
def test_gisin_entanglement_threshold(theta):
    th = states.gisin_thresholds(theta)
    assert th.pE < th.pL_filtered < th.pL
    assert qcore.is_ppt(states.gisin(th.pE - 1e-6, theta))
    assert not qcore.is_ppt(states.gisin(th.pE + 1e-6, theta))


def test_collins_gisin_mixture():
    rho = states.collins_gisin(0.85)
    assert rho.matrix[0, 0].real == pytest.approx(0.85 * 4 / 5)
    assert rho.matrix[1, 1].real == pytest.approx(0.15)


@pytest.mark.parametrize("d, p_sep, p_proj, p_povm", [
    (2, 0.33333, 0.50000, 0.41667),
    (3, 0.25000, 0.41667, 0.29630),
    (4, 0.20000, 0.36111, 0.23203),
    (5, 0.16667, 0.32083, 0.19115),
    (10, 0.09091, 0.21433, 0.10214),
    (25, 0.03846, 0.11733, 0.04274),
    (50, 0.01961, 0.07141, 0.02171),
])
def test_isotropic_lhv_thresholds_table(d, p_sep, p_proj, p_povm):
    th = states.thresholds("isotropic", d)
    assert th.p_sep == pytest.approx(p_sep, abs=1e-5)
    assert th.p_proj_lhv == pytest.approx(p_proj, abs=1e-5)
    assert th.p_povm_lhv == pytest.approx(p_povm, abs=1e-5)


@given(seed=seeds)
def test_state_json_round_trip(seed):
    rho = qcore.random_density_matrix((2, 3), np.random.default_rng(seed))
    text = json.dumps(states.state_to_json(rho))
    back = states.state_from_json(text)
    assert back.split == (2, 3)
    np.testing.assert_allclose(back.matrix, rho.matrix, atol=1e-15)


def test_state_json_rejects_wrong_shape():
    with pytest.raises(ValueError):
        states.state_from_json({"d_a": 2, "d_b": 2, "entries": [[1, 0]] * 4})


def test_make_state_by_name():
    assert states.make_state("werner", d="3", p="0.5").split == (3, 3)
    assert states.make_state("singlet").split == (2, 2)
    with pytest.raises(ValueError):
        states.make_state("werner", d=3)
    with pytest.raises(ValueError):
        states.make_state("no_such_state")


@pytest.mark.parametrize("tag", states.NAMED_STATES)
def test_every_named_state_is_constructible(tag):
    params = {"werner": dict(d=2, p=0.5), "isotropic": dict(d=2, p=0.5),
              "max_entangled": dict(d=3), "ghz": dict(n=3), "gisin": dict(p=0.7, theta=0.3),
              "collins_gisin": dict(p=0.5), "horodecki_h3": dict(p=0.5),
              "choi_horodecki": dict(alpha=3.0), "dur": dict(n=3), "toth_acin": dict(p=0.5),
              "pure_schmidt": dict(c=[2, 1]), "two_qubit_pure": dict(phi=0.4)}.get(tag, {})
    rho = states.make_state(tag, **params)
    assert qcore.is_psd(rho.matrix)
