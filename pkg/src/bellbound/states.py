"""Named quantum states and closed-form separability and LHV thresholds.

Multipartite qubit states (GHZ, Dur, Toth-Acin) are returned with the split
``(2, 2**(n-1))``: the first qubit against the rest.
"""

import dataclasses
import json

import numpy as np

from .qcore import (PAULIS, DensityMatrix, PureState, kron, ket, projector)


def _antisymmetric_projector(d):
    swap = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            swap[j * d + i, i * d + j] = 1
    return (np.eye(d * d) - swap) / 2


def max_entangled(d):
    """(1/sqrt d) sum_i |i>|i>."""
    v = np.zeros(d * d, dtype=complex)
    v[[i * d + i for i in range(d)]] = 1 / np.sqrt(d)
    return PureState(v, (d, d))


def singlet():
    """(|01> - |10>)/sqrt2."""
    return PureState(np.array([0, 1, -1, 0]) / np.sqrt(2), (2, 2))


def werner(d, p):
    """p 2 Pi_- / (d(d-1)) + (1-p) I/d^2, for (1-d)/(d+1) <= p <= 1.

    Negative p is accepted and flagged in ``meta['negative_p']``.
    """
    if d < 2:
        raise ValueError("werner states need d >= 2")
    lo = 1 - 2 * d / (d + 1)
    if not lo - 1e-12 <= p <= 1 + 1e-12:
        raise ValueError(f"werner parameter p={p} outside [{lo}, 1]")
    anti = _antisymmetric_projector(d)
    m = p * 2 * anti / (d * (d - 1)) + (1 - p) * np.eye(d * d) / d ** 2
    return DensityMatrix(m, (d, d), {"family": "werner", "d": d, "p": p,
                                     "negative_p": p < 0})


def isotropic(d, p):
    """p |Phi_d+><Phi_d+| + (1-p) I/d^2, for 0 <= p <= 1."""
    if d < 2:
        raise ValueError("isotropic states need d >= 2")
    if not -1e-12 <= p <= 1 + 1e-12:
        raise ValueError(f"isotropic parameter p={p} outside [0, 1]")
    phi = max_entangled(d).amplitudes
    m = p * projector(phi) + (1 - p) * np.eye(d * d) / d ** 2
    return DensityMatrix(m, (d, d), {"family": "isotropic", "d": d, "p": p})


def pure_schmidt(c, normalize=False):
    """sum_i c_i |i>|i> with the given Schmidt coefficients."""
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise ValueError("Schmidt coefficients must be nonnegative")
    if normalize:
        c = c / np.linalg.norm(c)
    d = c.size
    v = np.zeros(d * d, dtype=complex)
    v[[i * d + i for i in range(d)]] = c
    return PureState(v, (d, d))


def two_qubit_pure(phi):
    """cos(phi)|00> + sin(phi)|11>."""
    return PureState(np.array([np.cos(phi), 0, 0, np.sin(phi)]), (2, 2))


def ghz(n, alpha=0.0):
    """(|0...0> + e^{i alpha}|1...1>)/sqrt2 on n qubits."""
    if n < 2:
        raise ValueError("GHZ states need n >= 2")
    v = np.zeros(2 ** n, dtype=complex)
    v[0] = 1 / np.sqrt(2)
    v[-1] = np.exp(1j * alpha) / np.sqrt(2)
    return PureState(v, (2, 2 ** (n - 1)))


def gisin(p, theta):
    """p |Phi_theta><Phi_theta| + (1-p)/2 (|01><01| + |10><10|).

    ``|Phi_theta> = cos(theta)|00> + sin(theta)|11>``.
    """
    if not 0 <= p <= 1:
        raise ValueError("gisin parameter p must lie in [0, 1]")
    phi = two_qubit_pure(theta).amplitudes
    m = p * projector(phi) + (1 - p) / 2 * (projector(ket(4, 1)) + projector(ket(4, 2)))
    return DensityMatrix(m, (2, 2), {"family": "gisin", "p": p, "theta": theta})


def collins_gisin(p):
    """p |Psi_{2:1}><Psi_{2:1}| + (1-p)|0><0| x |1><1|, Psi = (2|00>+|11>)/sqrt5."""
    if not 0 <= p <= 1:
        raise ValueError("collins_gisin parameter p must lie in [0, 1]")
    psi = np.array([2, 0, 0, 1]) / np.sqrt(5)
    m = p * projector(psi) + (1 - p) * projector(ket(4, 1))
    return DensityMatrix(m, (2, 2), {"family": "collins_gisin", "p": p})


def horodecki_h3(p):
    """Two-qutrit PPT entangled family, 0 < p < 1."""
    if not 0 < p < 1:
        raise ValueError("horodecki_h3 parameter p must lie in (0, 1)")
    ent = np.zeros((9, 9), dtype=complex)
    for i in range(3):
        for j in range(3):
            if i != j:
                ent += kron(projector(ket(3, i)), projector(ket(3, j))) / 8
    ent -= kron(projector(ket(3, 2)), projector(ket(3, 0))) / 8
    ent += 3 / 8 * max_entangled(3).density_matrix().matrix
    psi = np.kron(ket(3, 2), np.sqrt((1 + p) / 2) * ket(3, 0) + np.sqrt((1 - p) / 2) * ket(3, 2))
    m = 8 * p / (8 * p + 1) * ent + projector(psi) / (8 * p + 1)
    return DensityMatrix(m, (3, 3), {"family": "horodecki_h3", "p": p})


def choi_horodecki(alpha):
    """2/7 Phi_3+ + alpha/7 sigma_+ + (5-alpha)/7 sigma_-, 2 <= alpha <= 5."""
    if not 2 <= alpha <= 5:
        raise ValueError("choi_horodecki parameter alpha must lie in [2, 5]")

    def sigma(shift):
        return sum(kron(projector(ket(3, j)), projector(ket(3, (j + shift) % 3)))
                   for j in range(3)) / 3

    m = (2 / 7 * max_entangled(3).density_matrix().matrix + alpha / 7 * sigma(1)
         + (5 - alpha) / 7 * sigma(-1))
    return DensityMatrix(m, (3, 3), {"family": "choi_horodecki", "alpha": alpha})


def dur(n, alpha=0.0):
    """n-qubit mixture of GHZ with the 2n product states Phi_{k,0}, Phi_{k,1}."""
    if n < 2:
        raise ValueError("dur states need n >= 2")
    m = ghz(n, alpha).density_matrix().matrix.copy()
    for k in range(n):
        zeros = [0] * n
        zeros[k] = 1
        ones = [1] * n
        ones[k] = 0
        for bits in (zeros, ones):
            idx = int("".join(map(str, bits)), 2)
            m += projector(ket(2 ** n, idx)) / 2
    return DensityMatrix(m / (n + 1), (2, 2 ** (n - 1)), {"family": "dur", "n": n})


def toth_acin(p):
    """Three-qubit family 1/8 III + 1/24 sum_k I s_k s_k - p/16 sum_k (s_k I s_k + s_k s_k I).

    The constant term is read as (1/8) I x I x I and the sum over k covers
    the p-weighted terms, the only reading that gives a unit-trace state.
    """
    if not 0 <= p <= 1:
        raise ValueError("toth_acin parameter p must lie in [0, 1]")
    eye = np.eye(2)
    m = kron(eye, eye, eye) / 8
    for s in PAULIS:
        m = m + kron(eye, s, s) / 24 - p / 16 * (kron(s, eye, s) + kron(s, s, eye))
    return DensityMatrix(m, (2, 4), {"family": "toth_acin", "p": p})


NAMED_STATES = ("werner", "isotropic", "max_entangled", "singlet", "ghz", "gisin",
                "collins_gisin", "horodecki_h3", "choi_horodecki", "dur", "toth_acin",
                "pure_schmidt", "two_qubit_pure")


def make_state(tag, **params):
    """Density matrix for a named state; pure states are converted."""
    factories = {
        "werner": lambda: werner(int(params["d"]), float(params["p"])),
        "isotropic": lambda: isotropic(int(params["d"]), float(params["p"])),
        "max_entangled": lambda: max_entangled(int(params["d"])),
        "singlet": singlet,
        "ghz": lambda: ghz(int(params["n"]), float(params.get("alpha", 0.0))),
        "gisin": lambda: gisin(float(params["p"]), float(params["theta"])),
        "collins_gisin": lambda: collins_gisin(float(params["p"])),
        "horodecki_h3": lambda: horodecki_h3(float(params["p"])),
        "choi_horodecki": lambda: choi_horodecki(float(params["alpha"])),
        "dur": lambda: dur(int(params["n"])),
        "toth_acin": lambda: toth_acin(float(params["p"])),
        "pure_schmidt": lambda: pure_schmidt(params["c"], normalize=True),
        "two_qubit_pure": lambda: two_qubit_pure(float(params["phi"])),
    }
    if tag not in factories:
        raise ValueError(f"unknown state {tag!r}")
    try:
        state = factories[tag]()
    except KeyError as err:
        raise ValueError(f"state {tag!r} needs parameter {err.args[0]!r}") from None
    if isinstance(state, PureState):
        state = state.density_matrix()
    return state


def state_to_json(rho):
    """``{"d_a", "d_b", "entries": [[re, im], ...]}`` with entries row-major."""
    m = rho.matrix
    return {"d_a": rho.split[0], "d_b": rho.split[1],
            "entries": [[float(v.real), float(v.imag)] for v in m.reshape(-1)]}


def state_from_json(data):
    if isinstance(data, str):
        data = json.loads(data)
    d_a, d_b = int(data["d_a"]), int(data["d_b"])
    entries = np.asarray(data["entries"], dtype=float)
    dim = d_a * d_b
    if entries.shape != (dim * dim, 2):
        raise ValueError("state file entries do not match d_a * d_b")
    m = (entries[:, 0] + 1j * entries[:, 1]).reshape(dim, dim)
    return DensityMatrix(m, (d_a, d_b))


@dataclasses.dataclass(frozen=True)
class Thresholds:
    p_sep: float
    p_proj_lhv: float
    p_povm_lhv: float


def _povm_lhv(d):
    return (3 * d - 1) / (d ** 2 - 1) * (1 - 1 / d) ** d


def thresholds(family, d):
    """Separability and LHV-model thresholds of Werner and isotropic states."""
    if d < 2:
        raise ValueError("thresholds need d >= 2")
    p_sep = 1 / (d + 1)
    if family == "werner":
        return Thresholds(p_sep, 1 - 1 / d, _povm_lhv(d))
    if family == "isotropic":
        proj = sum(1 / k for k in range(2, d + 1)) / (d - 1)
        return Thresholds(p_sep, proj, _povm_lhv(d))
    raise ValueError(f"unknown family {family!r}")


@dataclasses.dataclass(frozen=True)
class GisinThresholds:
    p0: float
    pE: float
    pL: float
    pL_filtered: float


def gisin_thresholds(theta):
    """Thresholds of the Gisin family.

    p0 is the lower end of the family's range, the state is entangled above
    pE, violates CHSH above pL, and violates CHSH after local filtering above
    pL_filtered.
    """
    s = np.sin(2 * theta)
    return GisinThresholds(1 / (2 - s), 1 / (1 + s), 4 / (4 + s ** 2),
                           1 / (1 + (np.sqrt(2) - 1) * s))

