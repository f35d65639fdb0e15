"""Closed-form violations, collective measurements and local filtering.

The pure-state CH scheme pairs the Schmidt vectors in descending order of
their coefficients and measures every pair as a two-qubit system; an odd
dimension leaves one unpaired vector that is handled by a corner element.
"""

import dataclasses
from math import comb

import numpy as np

from .bell import MeasurementAssignment
from .qcore import DensityMatrix, PAULI_X, PAULI_Z, PureState, as_matrix, hermitize, kron

# ---------------------------------------------------------------------------
# collective measurements


@dataclasses.dataclass(frozen=True)
class CollectiveSplit:
    """Site regrouping ``(A1 B1 ... AN BN) -> (A1 ... AN)(B1 ... BN)``.

    ``permutation[k]`` is the tensor factor of the interleaved ordering that
    lands in position k of the grouped ordering.
    """

    base: tuple
    copies: int

    @property
    def permutation(self):
        n = self.copies
        return tuple([2 * i for i in range(n)] + [2 * i + 1 for i in range(n)])

    @property
    def split(self):
        d_a, d_b = self.base
        return d_a ** self.copies, d_b ** self.copies


def _regroup_vector(v, split, n):
    d_a, d_b = split
    perm = CollectiveSplit(split, n).permutation
    t = v.reshape([d_a, d_b] * n).transpose(perm)
    return t.reshape(-1)


def tensor_power(state, n):
    """``state`` to the n-th tensor power with Alice's factors grouped first.

    Accepts a DensityMatrix or a PureState and returns the same kind.
    """
    if n < 1:
        raise ValueError("number of copies must be at least 1")
    d_a, d_b = state.split
    target = CollectiveSplit((d_a, d_b), n)
    if isinstance(state, PureState):
        v = state.amplitudes
        full = v
        for _ in range(n - 1):
            full = np.kron(full, v)
        return PureState(_regroup_vector(full, (d_a, d_b), n), target.split)
    m = as_matrix(state)
    full = m
    for _ in range(n - 1):
        full = np.kron(full, m)
    perm = target.permutation
    dims = [d_a, d_b] * n
    t = full.reshape(dims + dims).transpose(list(perm) + [2 * n + p for p in perm])
    dim = (d_a * d_b) ** n
    return DensityMatrix(t.reshape(dim, dim), target.split, dict(getattr(state, "meta", {})))


def power_coefficients(c, n):
    """Schmidt coefficients of n copies of a state with coefficients c."""
    c = np.asarray(c, dtype=float)
    out = np.ones(1)
    for _ in range(n):
        out = np.kron(out, c)
    return out


# ---------------------------------------------------------------------------
# pure states


def _sorted_coefficients(c, d=None):
    c = np.asarray(c, dtype=float)
    if d is not None:
        if c.size > d:
            raise ValueError("more Schmidt coefficients than the dimension")
        c = np.concatenate([c, np.zeros(d - c.size)])
    if np.any(c < 0):
        raise ValueError("Schmidt coefficients must be nonnegative")
    norm = np.linalg.norm(c)
    if abs(norm - 1) > 1e-9:
        raise ValueError("Schmidt coefficients must be normalized")
    order = np.argsort(-c, kind="stable")
    return c[order], order


def pure_ch_value(c, d=None):
    """CH value of the paired-subspace scheme on ``sum_i c_i |ii>``.

    ``1/2 sum_n sqrt((c_{2n-1}^2 + c_{2n}^2)^2 + 4 c_{2n-1}^2 c_{2n}^2)
    + xi c_d^2 / 2 - 1/2`` with xi = d mod 2, after a descending sort.
    """
    c, _ = _sorted_coefficients(c, d)
    sq = c ** 2
    half = c.size // 2
    odd, even = sq[0:2 * half:2], sq[1:2 * half:2]
    total = 0.5 * np.sum(np.sqrt((odd + even) ** 2 + 4 * odd * even))
    if c.size % 2:
        total += 0.5 * sq[-1]
    return float(total - 0.5)


def _block_sum(block, d):
    out = np.zeros((d, d), dtype=complex)
    for i in range(d // 2):
        out[2 * i:2 * i + 2, 2 * i:2 * i + 2] = block
    return out


def _xi(d):
    out = np.zeros((d, d), dtype=complex)
    out[d - 1, d - 1] = d % 2
    return out


def _bob_projector(c, d, sign):
    """Positive-eigenspace projector of Bob's setting (sign +1 or -1)."""
    proj = np.zeros((d, d), dtype=complex)
    for n in range(d // 2):
        a, b = c[2 * n], c[2 * n + 1]
        s = a * a + b * b
        kappa = np.sqrt(s * s + 4 * a * a * b * b)
        if a * b == 0:
            # decoupled pair: the positive eigenvector is the first basis vector
            v = np.zeros(2)
            v[0] = 1.0
        else:
            v = np.array([s + kappa, sign * 2 * a * b])
            # unit norm fixes the printed constant to eta_{n,-} for the + vector
            v = v / np.sqrt(2 * kappa * (kappa + s))
        proj[2 * n:2 * n + 2, 2 * n:2 * n + 2] = np.outer(v, v)
    return proj + _xi(d)


def pure_ch_measurements(c, d=None):
    """Alice's paired Z/X measurements and Bob's matching optimal POVMs.

    The POVMs act on the basis in which the state reads ``sum_i c_i |ii>``
    with ``c`` in the given (possibly unsorted) order. Outcome 0 is '+'.
    """
    c_sorted, order = _sorted_coefficients(c, d)
    dim = c_sorted.size
    eye = np.eye(dim)
    z = _block_sum(PAULI_Z, dim) + _xi(dim)
    x = _block_sum(PAULI_X, dim) + _xi(dim)
    alice = [[(eye + z) / 2, (eye - z) / 2], [(eye + x) / 2, (eye - x) / 2]]
    bob = []
    for sign in (1, -1):
        plus = _bob_projector(c_sorted, dim, sign)
        bob.append([plus, eye - plus])
    # sorted position k holds original index order[k]
    perm = np.zeros((dim, dim))
    perm[order, np.arange(dim)] = 1

    def back(op):
        return hermitize(perm @ op @ perm.T)

    return MeasurementAssignment([[back(e) for e in s] for s in alice],
                                 [[back(e) for e in s] for s in bob])


def me_ch_value(d):
    """CH value of the scheme on the d-dimensional maximally entangled state."""
    if d < 1:
        raise ValueError("dimension must be positive")
    if d % 2 == 0:
        return 1 / np.sqrt(2) - 0.5
    return (np.sqrt(2) * (d - 1) + 1) / (2 * d) - 0.5


def paired_probability(phi, n):
    """Weight of the perfectly correlated pairs in n copies of cos|00> + sin|11>."""
    phi = _fold_angle(phi)
    total = sum(np.tan(phi) ** (2 * m) * (1 - (-1) ** comb(n - 1, m)) for m in range(n))
    return 1 - 0.5 * np.cos(phi) ** (2 * (n - 1)) * total


def _fold_angle(phi):
    if not 0 <= phi <= np.pi / 2:
        raise ValueError("phi must lie in [0, pi/2]")
    return np.pi / 2 - phi if phi > np.pi / 4 else phi


def ncopy_two_qubit_value(phi, n):
    """CH value of the scheme on n copies of ``cos(phi)|00> + sin(phi)|11>``."""
    if n < 1:
        raise ValueError("number of copies must be at least 1")
    phi = _fold_angle(phi)
    p = paired_probability(phi, n)
    return float(p / np.sqrt(2) + (1 - p) / 2 * np.sqrt(1 + np.sin(2 * phi) ** 2) - 0.5)


def ncopy_value(c, n):
    """CH value of the scheme on n copies of a pure state with coefficients c."""
    return pure_ch_value(power_coefficients(c, n))


# ---------------------------------------------------------------------------
# I22dd on maximally entangled and isotropic states


def _q(k, d):
    return 1 / (2 * d ** 3 * np.sin(np.pi * (k + 0.25) / d) ** 2)


def cglmp_me_value(d):
    """Best known CGLMP value ``4d sum_k (1 - 2k/(d-1)) (q_k - q_{-(k+1)})``."""
    if d < 2:
        raise ValueError("d must be at least 2")
    ks = np.arange(d // 2)
    weights = 1 - 2 * ks / (d - 1)
    return float(4 * d * np.sum(weights * (_q(ks, d) - _q(-(ks + 1), d))))


def i22dd_me_value(d):
    """Best known I22dd value of the d-dimensional maximally entangled state.

    Obtained from the CGLMP value through ``(d-1)/(2d) (I_d - 2)``.
    """
    return float((d - 1) / (2 * d) * (cglmp_me_value(d) - 2))


def i22dd_isotropic_value(d, p):
    """``p V_d + (1 - p)(-1 + 1/d)``, linear in the isotropic weight."""
    return float(p * i22dd_me_value(d) + (1 - p) * (-1 + 1 / d))


def i22dd_isotropic_threshold(d):
    """Weight p at which the isotropic I22dd value crosses zero."""
    noise = 1 - 1 / d
    return float(noise / (i22dd_me_value(d) + noise))


# ---------------------------------------------------------------------------
# local filtering


@dataclasses.dataclass(frozen=True, eq=False)
class FilterPair:
    """Local filters ``F_A x F_B``; scaled so the largest singular value is <= 1."""

    f_a: np.ndarray
    f_b: np.ndarray

    def __post_init__(self):
        f_a = np.array(self.f_a, dtype=complex)
        f_b = np.array(self.f_b, dtype=complex)
        if f_a.ndim != 2 or f_b.ndim != 2:
            raise ValueError("filters must be matrices")
        if not (np.all(np.isfinite(f_a)) and np.all(np.isfinite(f_b))):
            raise ValueError("filters have non-finite entries")
        for f in (f_a, f_b):
            top = np.linalg.norm(f, 2)
            if top > 1 + 1e-9:
                f /= top
        object.__setattr__(self, "f_a", f_a)
        object.__setattr__(self, "f_b", f_b)

    @property
    def operator(self):
        return np.kron(self.f_a, self.f_b)


def apply_filter(rho, filters):
    """Apply ``sum_k (F_A x F_B) rho (F_A x F_B)^dag`` and renormalize.

    Args:
        filters: a FilterPair or a list of them.
    Returns:
        (filtered DensityMatrix, success probability)
    """
    if isinstance(filters, FilterPair):
        filters = [filters]
    m = as_matrix(rho)
    d_a, d_b = rho.split
    out = None
    split = None
    for f in filters:
        if f.f_a.shape[1] != d_a or f.f_b.shape[1] != d_b:
            raise ValueError("filter input dimensions do not match the state")
        op = f.operator
        term = op @ m @ op.conj().T
        out = term if out is None else out + term
        split = (f.f_a.shape[0], f.f_b.shape[0])
    prob = float(np.trace(out).real)
    if prob <= 1e-14:
        raise ValueError("the filter annihilates the state")
    return DensityMatrix(hermitize(out) / prob, split, dict(rho.meta)), prob


def gisin_filters(theta):
    """``F_A = F_B = diag(sqrt(tan theta), 1)`` for 0 < theta <= pi/4."""
    if not 0 < theta <= np.pi / 4:
        raise ValueError("theta must lie in (0, pi/4]")
    f = np.diag([np.sqrt(np.tan(theta)), 1.0])
    return FilterPair(f, f)


def gisin_success_probability(p, theta):
    return float(np.tan(theta) * (1 - p * (1 - np.sin(2 * theta))))


def gisin_filtered_state(p, theta):
    """Closed form of the filtered Gisin state."""
    phi_plus = np.array([1, 0, 0, 1]) / np.sqrt(2)
    prod = np.diag([0, 1, 1, 0]).astype(complex)
    m = (np.tan(theta) / gisin_success_probability(p, theta)
         * (p * np.sin(2 * theta) * np.outer(phi_plus, phi_plus) + (1 - p) / 2 * prod))
    return DensityMatrix(m, (2, 2), {"family": "gisin_filtered", "p": p, "theta": theta})


def popescu_projection(d, i=0, j=1):
    """Projection ``|i><i| + |j><j|`` onto a 2-dimensional subspace, as a 2 x d map."""
    if not (0 <= i < d and 0 <= j < d and i != j):
        raise ValueError("need two distinct basis indices")
    f = np.zeros((2, d))
    f[0, i] = f[1, j] = 1
    return FilterPair(f, f)


def popescu_chsh_value(d):
    """CHSH value ``(d/(d+2)) 2 sqrt2`` after the 2-dimensional projection."""
    return d / (d + 2) * 2 * np.sqrt(2)


def popescu_success_probability(d):
    return (2 * d + 4) / d ** 3


# ---------------------------------------------------------------------------
# filtered CHSH witness


@dataclasses.dataclass(frozen=True, eq=False)
class HThetaWitness:
    """``H = I x I - cos(theta) X x X - sin(theta) Z x Z``, 0 <= theta <= pi/4."""

    theta: float

    def __post_init__(self):
        if not -1e-12 <= self.theta <= np.pi / 4 + 1e-12:
            raise ValueError("theta must lie in [0, pi/4]")

    @property
    def matrix(self):
        return (np.eye(4) - np.cos(self.theta) * kron(PAULI_X, PAULI_X)
                - np.sin(self.theta) * kron(PAULI_Z, PAULI_Z))


def h_theta(theta):
    return HThetaWitness(theta)


def witness_value(rho, f_a, f_b, theta):
    """``tr[rho (F_A x F_B)^dag H (F_A x F_B)]``; negative certifies a filtered violation."""
    op = np.kron(np.asarray(f_a, dtype=complex), np.asarray(f_b, dtype=complex))
    h = h_theta(theta).matrix
    return float(np.trace(as_matrix(rho) @ op.conj().T @ h @ op).real)
