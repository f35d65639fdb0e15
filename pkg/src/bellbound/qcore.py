"""Dense linear algebra and quantum-information primitives.

Matrices are plain complex ``numpy`` arrays. States carry their bipartite
split ``(d_A, d_B)`` so that partial operations never have to guess it.
"""

import dataclasses

import numpy as np
from scipy.stats import unitary_group

from .config import TOL

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


def hermiticity_error(m):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return np.inf
    return float(np.max(np.abs(m - m.conj().T), initial=0.0))


def is_hermitian(m, tol=None):
    tol = TOL.hermitian if tol is None else tol
    return hermiticity_error(m) <= tol


def hermitize(m):
    """Return the Hermitian part of ``m``."""
    m = np.asarray(m, dtype=complex)
    return (m + m.conj().T) / 2


def _check_split(dim, split):
    d_a, d_b = (int(x) for x in split)
    if d_a < 1 or d_b < 1 or d_a * d_b != dim:
        raise ValueError(f"split {split} does not factor dimension {dim}")
    return d_a, d_b


@dataclasses.dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Bipartite density matrix with its local dimensions."""

    matrix: np.ndarray
    split: tuple
    meta: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix has non-finite entries")
        split = _check_split(m.shape[0], self.split)
        if hermiticity_error(m) > TOL.hermitian:
            raise ValueError("density matrix is not Hermitian")
        m = hermitize(m)
        if abs(np.trace(m).real - 1) > TOL.trace:
            raise ValueError(f"density matrix trace {np.trace(m).real} is not 1")
        if np.linalg.eigvalsh(m)[0] < -TOL.psd:
            raise ValueError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "split", split)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, state):
        v = state.amplitudes
        return cls(np.outer(v, v.conj()), state.split)

    @classmethod
    def from_unnormalized(cls, m, split, meta=None):
        m = hermitize(m)
        return cls(m / np.trace(m).real, split, meta or {})


@dataclasses.dataclass(frozen=True, eq=False)
class PureState:
    """Normalized bipartite state vector with its local dimensions."""

    amplitudes: np.ndarray
    split: tuple

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        split = _check_split(v.size, self.split)
        if abs(np.linalg.norm(v) - 1) > TOL.norm:
            raise ValueError("state vector is not normalized")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "split", split)

    def density_matrix(self):
        return DensityMatrix.from_pure(self)


@dataclasses.dataclass(frozen=True, eq=False)
class HermitianBasis:
    """Orthonormal Hermitian operator basis, ``elements[0]`` proportional to I."""

    dim: int
    elements: np.ndarray

    def coefficients(self, h):
        """Expansion coefficients ``tr(h sigma_n)``."""
        return np.einsum("nij,ji->n", self.elements, np.asarray(h)).real

    def combine(self, coeffs):
        return np.einsum("n,nij->ij", np.asarray(coeffs, dtype=float), self.elements)


def as_matrix(rho):
    """Return the raw array of a state-like argument."""
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    if isinstance(rho, PureState):
        return np.outer(rho.amplitudes, rho.amplitudes.conj())
    return np.asarray(rho, dtype=complex)


def kron(*ops):
    """Kronecker product of any number of matrices."""
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def _subsystem_index(subsystem):
    if subsystem in ("A", "a", 0):
        return 0
    if subsystem in ("B", "b", 1):
        return 1
    raise ValueError(f"unknown subsystem {subsystem!r}")


def partial_trace(m, split, subsystem):
    """Trace out ``subsystem`` ('A' or 'B') of a bipartite operator."""
    m = np.asarray(m)
    d_a, d_b = _check_split(m.shape[0], split)
    if m.shape != (d_a * d_b, d_a * d_b):
        raise ValueError("operator shape does not match split")
    t = m.reshape(d_a, d_b, d_a, d_b)
    if _subsystem_index(subsystem) == 0:
        return np.einsum("ijil->jl", t)
    return np.einsum("ijkj->ik", t)


def partial_transpose(m, split, subsystem="A"):
    """Transpose ``subsystem`` of a bipartite operator."""
    m = np.asarray(m)
    d_a, d_b = _check_split(m.shape[0], split)
    if m.shape != (d_a * d_b, d_a * d_b):
        raise ValueError("operator shape does not match split")
    t = m.reshape(d_a, d_b, d_a, d_b)
    if _subsystem_index(subsystem) == 0:
        t = t.transpose(2, 1, 0, 3)
    else:
        t = t.transpose(0, 3, 2, 1)
    return t.reshape(d_a * d_b, d_a * d_b)


def herm_eig(h):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending."""
    h = np.asarray(h)
    if hermiticity_error(h) > max(TOL.hermitian, 1e-12 * np.max(np.abs(h), initial=1.0)):
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigh(hermitize(h))


def singular_values(m):
    """Singular values in descending order."""
    return np.linalg.svd(np.asarray(m), compute_uv=False)


def trace_norm(h):
    return float(np.sum(np.abs(herm_eig(h)[0])))


def positive_eigenspace_projector(h, tol=None):
    """Projector onto eigenvectors with eigenvalue strictly above ``tol``.

    Near-zero eigenvalues go to the non-positive side; both choices give the
    same value of ``tr(h P)``.
    """
    tol = TOL.zero_eig if tol is None else tol
    w, v = herm_eig(h)
    keep = v[:, w > tol]
    return keep @ keep.conj().T


def schmidt(state, tol=1e-14):
    """Schmidt decomposition of a pure state.

    Returns:
        (coefficients, basis_a, basis_b) with coefficients descending and
        positive; column ``i`` of each basis pairs with ``coefficients[i]``.
    """
    d_a, d_b = state.split
    u, s, vh = np.linalg.svd(state.amplitudes.reshape(d_a, d_b))
    k = int(np.sum(s > tol * max(s[0], 1.0)))
    return s[:k], u[:, :k], vh[:k].T


def hermitian_basis(d):
    """Orthonormal basis of d x d Hermitian matrices.

    Ordering: ``I/sqrt(d)``; then for each pair j < k (lexicographic) the
    symmetric element ``(E_jk + E_kj)/sqrt2`` followed by the antisymmetric
    element ``(-i E_jk + i E_kj)/sqrt2``; then the diagonal elements
    ``(sum_{i<l} E_ii - l E_ll)/sqrt(l(l+1))`` for l = 1..d-1.
    For d = 2 this is (I, X, Y, Z)/sqrt2.
    """
    d = int(d)
    if d < 1:
        raise ValueError("dimension must be positive")
    elements = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k] = -1j / np.sqrt(2)
            anti[k, j] = 1j / np.sqrt(2)
            elements += [sym, anti]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        elements.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return HermitianBasis(d, np.array(elements))


def correlation_tensor(rho, basis_a=None, basis_b=None):
    """Full coefficient matrix ``T[i, j] = tr(rho sigma_i x sigma_j)``."""
    m = as_matrix(rho)
    d_a, d_b = rho.split if hasattr(rho, "split") else _square_split(m)
    basis_a = basis_a or hermitian_basis(d_a)
    basis_b = basis_b or hermitian_basis(d_b)
    t = m.reshape(d_a, d_b, d_a, d_b)
    return np.einsum("ajbk,nba,lkj->nl", t, basis_a.elements, basis_b.elements).real


def _square_split(m):
    d = int(round(np.sqrt(m.shape[0])))
    if d * d != m.shape[0]:
        raise ValueError("cannot infer split, pass a DensityMatrix")
    return d, d


def coherence_decomposition(rho):
    """Coherence vectors and traceless correlation block of a state.

    Returns:
        (r_a, r_b, r_prime) with ``r_a[i] = tr(rho sigma_i x sigma_0)``,
        ``r_b[j] = tr(rho sigma_0 x sigma_j)`` and
        ``r_prime[i, j] = tr(rho sigma_i x sigma_j)`` for i, j >= 1.
    """
    t = correlation_tensor(rho)
    return t[1:, 0].copy(), t[0, 1:].copy(), t[1:, 1:].copy()


def is_ppt(rho, tol=None):
    tol = TOL.psd if tol is None else tol
    m = as_matrix(rho)
    pt = partial_transpose(m, rho.split, "A")
    return bool(np.linalg.eigvalsh(hermitize(pt))[0] >= -tol)


def ket(d, i):
    v = np.zeros(d, dtype=complex)
    v[i] = 1
    return v


def projector(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def is_psd(m, tol=None):
    tol = TOL.psd if tol is None else tol
    return bool(np.linalg.eigvalsh(hermitize(m))[0] >= -tol)


def haar_unitary(d, rng):
    if d == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(d, random_state=rng)


def random_pure_state(split, rng):
    d = split[0] * split[1]
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return PureState(v / np.linalg.norm(v), split)


def random_density_matrix(split, rng, rank=None):
    """Random state from the induced measure (Hilbert-Schmidt for full rank)."""
    d = split[0] * split[1]
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    return DensityMatrix.from_unnormalized(g @ g.conj().T, split)


def random_hermitian(d, rng):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return hermitize(g)
