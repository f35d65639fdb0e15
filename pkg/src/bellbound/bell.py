"""Bell inequalities, classical bounds, named families and Bell operators.

A bipartite inequality for probabilities is stored with full-size blocks:

* ``b00``: constant,
* ``marg_a[s_a, o_a]``: coefficient of p_A(o_a | s_a),
* ``marg_b[s_b, o_b]``: coefficient of p_B(o_b | s_b),
* ``joint[s_a, s_b, o_a, o_b]``: coefficient of p_AB(o_a, o_b | s_a, s_b),

and reads ``value(p) <= bound``. The compact display with the last outcome
of every setting dropped is supported for input and output only.
"""

import dataclasses
import functools
import itertools
import json
from fractions import Fraction

import numpy as np

from .config import TOL
from .qcore import as_matrix, hermitize, is_psd


@dataclasses.dataclass(frozen=True)
class BellScenario:
    m_a: int
    n_a: int
    m_b: int
    n_b: int

    def __post_init__(self):
        if min(self.m_a, self.n_a, self.m_b, self.n_b) < 1:
            raise ValueError("scenario entries must be positive")


@dataclasses.dataclass(frozen=True)
class DeterministicStrategy:
    a: tuple
    b: tuple


def _frozen(x):
    x = np.array(x, dtype=float)
    x.setflags(write=False)
    return x


@dataclasses.dataclass(frozen=True, eq=False)
class BellInequality:
    """Linear Bell expression on probabilities, ``value(p) <= bound``."""

    b00: float
    marg_a: np.ndarray
    marg_b: np.ndarray
    joint: np.ndarray
    name: str = ""

    def __post_init__(self):
        joint = _frozen(self.joint)
        if joint.ndim != 4:
            raise ValueError("joint coefficients must have shape (m_a, m_b, n_a, n_b)")
        m_a, m_b, n_a, n_b = joint.shape
        marg_a, marg_b = _frozen(self.marg_a), _frozen(self.marg_b)
        if marg_a.shape != (m_a, n_a) or marg_b.shape != (m_b, n_b):
            raise ValueError("marginal blocks do not match the joint block")
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "marg_a", marg_a)
        object.__setattr__(self, "marg_b", marg_b)
        object.__setattr__(self, "b00", float(self.b00))

    @property
    def scenario(self):
        m_a, m_b, n_a, n_b = self.joint.shape
        return BellScenario(m_a, n_a, m_b, n_b)

    @functools.cached_property
    def bound(self):
        """Classical bound from enumeration of deterministic strategies."""
        return classical_bound(self)

    def evaluate(self, p_a, p_b, p_ab):
        """Value of the expression on marginal and joint probability arrays."""
        return float(self.b00 + np.sum(self.marg_a * p_a) + np.sum(self.marg_b * p_b)
                     + np.sum(self.joint * p_ab))

    def scaled(self, factor):
        return BellInequality(factor * self.b00, factor * self.marg_a, factor * self.marg_b,
                              factor * self.joint, self.name)

    def coefficients_equal(self, other, tol=0.0):
        return (self.joint.shape == other.joint.shape
                and abs(self.b00 - other.b00) <= tol
                and np.max(np.abs(self.marg_a - other.marg_a), initial=0) <= tol
                and np.max(np.abs(self.marg_b - other.marg_b), initial=0) <= tol
                and np.max(np.abs(self.joint - other.joint), initial=0) <= tol)

    def to_display(self):
        """Compact matrix with the last outcome of every setting dropped."""
        return _to_display(self.b00, self.marg_a, self.marg_b, self.joint)

    def to_json(self):
        s = self.scenario
        return {"m_a": s.m_a, "m_b": s.m_b, "n_a": s.n_a, "n_b": s.n_b,
                "b00": self.b00, "marg_a": self.marg_a.tolist(),
                "marg_b": self.marg_b.tolist(), "joint": self.joint.tolist(),
                "name": self.name}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        ineq = cls(data["b00"], data["marg_a"], data["marg_b"], data["joint"],
                   data.get("name", ""))
        s = ineq.scenario
        expected = (data["m_a"], data["n_a"], data["m_b"], data["n_b"])
        if (s.m_a, s.n_a, s.m_b, s.n_b) != tuple(expected):
            raise ValueError("declared scenario does not match the coefficient blocks")
        return ineq


def _to_display(b00, marg_a, marg_b, joint):
    m_a, m_b, n_a, n_b = joint.shape
    ra, rb = n_a - 1, n_b - 1
    out = np.zeros((1 + m_a * ra, 1 + m_b * rb), dtype=joint.dtype)
    out[0, 0] = b00
    for sb in range(m_b):
        out[0, 1 + sb * rb:1 + (sb + 1) * rb] = marg_b[sb, :rb]
    for sa in range(m_a):
        out[1 + sa * ra:1 + (sa + 1) * ra, 0] = marg_a[sa, :ra]
        for sb in range(m_b):
            out[1 + sa * ra:1 + (sa + 1) * ra, 1 + sb * rb:1 + (sb + 1) * rb] = \
                joint[sa, sb, :ra, :rb]
    return out


def from_display(matrix, m_a, n_a, m_b, n_b, name=""):
    """Build an inequality from its compact matrix (last outcomes omitted)."""
    mat = np.asarray(matrix, dtype=float)
    ra, rb = n_a - 1, n_b - 1
    if mat.shape != (1 + m_a * ra, 1 + m_b * rb):
        raise ValueError("display matrix shape does not match the scenario")
    marg_a = np.zeros((m_a, n_a))
    marg_b = np.zeros((m_b, n_b))
    joint = np.zeros((m_a, m_b, n_a, n_b))
    for sb in range(m_b):
        marg_b[sb, :rb] = mat[0, 1 + sb * rb:1 + (sb + 1) * rb]
    for sa in range(m_a):
        marg_a[sa, :ra] = mat[1 + sa * ra:1 + (sa + 1) * ra, 0]
        for sb in range(m_b):
            joint[sa, sb, :ra, :rb] = mat[1 + sa * ra:1 + (sa + 1) * ra,
                                          1 + sb * rb:1 + (sb + 1) * rb]
    return BellInequality(mat[0, 0], marg_a, marg_b, joint, name)


@dataclasses.dataclass(frozen=True, eq=False)
class CorrelationInequality:
    """Expression in correlation functions of +-1 valued observables.

    ``coeffs`` has one axis per party (two for the bipartite case); the
    optional ``marg_a``/``marg_b`` weight the single-party expectations.
    The expression reads ``constant + sum coeffs E + marginals <= bound``.
    """

    coeffs: np.ndarray
    marg_a: np.ndarray = None
    marg_b: np.ndarray = None
    constant: float = 0.0
    name: str = ""

    def __post_init__(self):
        coeffs = _frozen(self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.ndim == 2:
            m_a, m_b = coeffs.shape
            ma = np.zeros(m_a) if self.marg_a is None else self.marg_a
            mb = np.zeros(m_b) if self.marg_b is None else self.marg_b
            object.__setattr__(self, "marg_a", _frozen(ma))
            object.__setattr__(self, "marg_b", _frozen(mb))
            if self.marg_a.shape != (m_a,) or self.marg_b.shape != (m_b,):
                raise ValueError("marginal vectors do not match the coefficient matrix")
        elif self.marg_a is not None or self.marg_b is not None:
            raise ValueError("marginals are supported for two parties only")
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def parties(self):
        return self.coeffs.ndim

    @property
    def has_marginals(self):
        return self.parties == 2 and (np.any(self.marg_a) or np.any(self.marg_b))

    @functools.cached_property
    def bound(self):
        return classical_bound(self)


# ---------------------------------------------------------------------------
# classical bounds


def _check_enumeration_size(count):
    if count > TOL.enumeration_cap:
        raise ValueError(f"{count} deterministic strategies exceed the enumeration cap")


def deterministic_value(ineq, strategy):
    """Value of the expression for one deterministic strategy."""
    if isinstance(ineq, CorrelationInequality):
        outs = [np.asarray(o, dtype=float) for o in strategy]
        value = ineq.constant + np.einsum(ineq.coeffs, list(range(ineq.parties)),
                                          *itertools.chain(*[(o, [k]) for k, o in enumerate(outs)]))
        if ineq.parties == 2:
            value += ineq.marg_a @ outs[0] + ineq.marg_b @ outs[1]
        return float(value)
    a, b = strategy.a, strategy.b
    value = ineq.b00
    value += sum(ineq.marg_a[sa, oa] for sa, oa in enumerate(a))
    value += sum(ineq.marg_b[sb, ob] for sb, ob in enumerate(b))
    value += sum(ineq.joint[sa, sb, a[sa], b[sb]]
                 for sa in range(len(a)) for sb in range(len(b)))
    return float(value)


def best_deterministic_strategy(ineq):
    """Maximizing deterministic strategy and its value.

    Every strategy of one party is enumerated; for each, the other party's
    best response is exact because it decomposes setting by setting.
    """
    if isinstance(ineq, CorrelationInequality):
        return _best_correlation_strategy(ineq)
    s = ineq.scenario
    _check_enumeration_size(s.n_a ** s.m_a * s.n_b ** s.m_b)
    swap = s.n_a ** s.m_a > s.n_b ** s.m_b
    work = swap_parties(ineq) if swap else ineq
    m_a, m_b, n_a, n_b = work.joint.shape
    strategies = np.array(list(itertools.product(range(n_a), repeat=m_a)), dtype=int)
    # per Alice strategy: Bob response table (m_b, n_b)
    rows = np.arange(m_a)
    best_val, best = -np.inf, None
    chunk = 65536
    for start in range(0, len(strategies), chunk):
        st = strategies[start:start + chunk]
        base = work.b00 + work.marg_a[rows, st].sum(axis=1)
        resp = work.marg_b[None] + work.joint[rows, :, st, :].sum(axis=1)
        vals = base + resp.max(axis=2).sum(axis=1)
        i = int(np.argmax(vals))
        if vals[i] > best_val + 1e-12:
            best_val = float(vals[i])
            best = (tuple(int(v) for v in st[i]), tuple(int(v) for v in resp[i].argmax(axis=1)))
    a, b = best
    strategy = DeterministicStrategy(b, a) if swap else DeterministicStrategy(a, b)
    return strategy, best_val


def _best_correlation_strategy(ineq):
    n = ineq.parties
    m = ineq.coeffs.shape
    _check_enumeration_size(2 ** sum(m))
    if n == 2:
        m_a, m_b = m
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=m_a)))
        corr = signs @ ineq.coeffs + ineq.marg_b[None]
        vals = ineq.constant + signs @ ineq.marg_a + np.abs(corr).sum(axis=1)
        i = int(np.argmax(vals))
        b = tuple(1.0 if c >= 0 else -1.0 for c in corr[i])
        return (tuple(signs[i]), b), float(vals[i])
    best_val, best = -np.inf, None
    for outs in itertools.product(*[list(itertools.product((1.0, -1.0), repeat=mk)) for mk in m]):
        val = deterministic_value(ineq, outs)
        if val > best_val + 1e-12:
            best_val, best = val, outs
    return best, best_val


def classical_bound(ineq):
    return best_deterministic_strategy(ineq)[1]


# ---------------------------------------------------------------------------
# relabeling


def swap_parties(ineq):
    return BellInequality(ineq.b00, ineq.marg_b, ineq.marg_a,
                          ineq.joint.transpose(1, 0, 3, 2), ineq.name)


def relabel(ineq, kind, party="A", perm=None, setting=None):
    """Relabel parties, settings or outcomes.

    Args:
        kind: 'swap-parties', 'permute-settings' or 'permute-outcomes'.
        party: 'A' or 'B'.
        perm: new index i takes the coefficients of old index ``perm[i]``.
        setting: setting whose outcomes are permuted.
    """
    if kind == "swap-parties":
        return swap_parties(ineq)
    if party not in ("A", "B"):
        raise ValueError("party must be 'A' or 'B'")
    work = ineq if party == "A" else swap_parties(ineq)
    marg_a, joint = work.marg_a.copy(), work.joint.copy()
    perm = np.asarray(perm, dtype=int)
    if kind == "permute-settings":
        if sorted(perm) != list(range(marg_a.shape[0])):
            raise ValueError("not a permutation of the settings")
        marg_a, joint = marg_a[perm], joint[perm]
    elif kind == "permute-outcomes":
        if sorted(perm) != list(range(marg_a.shape[1])):
            raise ValueError("not a permutation of the outcomes")
        marg_a[setting] = marg_a[setting, perm]
        joint[setting] = joint[setting][:, perm, :]
    else:
        raise ValueError(f"unknown relabeling {kind!r}")
    out = BellInequality(work.b00, marg_a, work.marg_b, joint, ineq.name)
    return out if party == "A" else swap_parties(out)


def inverse_permutation(perm):
    return np.argsort(np.asarray(perm, dtype=int))


# ---------------------------------------------------------------------------
# conversions between correlation and probability forms


def correlation_to_probability(cineq):
    """Two-outcome probability form, outcome 0 is '+1'.

    Uses E(A,B) = 1 - 2 pA(+) - 2 pB(+) + 4 pAB(++), E(A) = 2 pA(+) - 1.
    """
    if cineq.parties != 2:
        raise ValueError("bipartite correlation inequality expected")
    b = cineq.coeffs
    m_a, m_b = b.shape
    joint = np.zeros((m_a, m_b, 2, 2))
    joint[:, :, 0, 0] = 4 * b
    marg_a = np.zeros((m_a, 2))
    marg_b = np.zeros((m_b, 2))
    marg_a[:, 0] = -2 * b.sum(axis=1) + 2 * cineq.marg_a
    marg_b[:, 0] = -2 * b.sum(axis=0) + 2 * cineq.marg_b
    b00 = cineq.constant + b.sum() - cineq.marg_a.sum() - cineq.marg_b.sum()
    return BellInequality(b00, marg_a, marg_b, joint, cineq.name)


def probability_to_correlation(ineq):
    """Correlation form of a two-outcome inequality, outcome 0 is '+1'."""
    s = ineq.scenario
    if s.n_a != 2 or s.n_b != 2:
        raise ValueError("two-outcome inequality expected")
    sign = np.array([1.0, -1.0])
    # p(oa, ob) = (1 + sa E_A + sb E_B + sa sb E_AB) / 4, p(oa) = (1 + sa E_A) / 2
    coeffs = np.einsum("xyab,a,b->xy", ineq.joint, sign, sign) / 4
    marg_a = (np.einsum("xyab,a->x", ineq.joint, sign) / 4
              + ineq.marg_a @ sign / 2)
    marg_b = (np.einsum("xyab,b->y", ineq.joint, sign) / 4
              + ineq.marg_b @ sign / 2)
    constant = ineq.b00 + ineq.joint.sum() / 4 + ineq.marg_a.sum() / 2 + ineq.marg_b.sum() / 2
    return CorrelationInequality(coeffs, marg_a, marg_b, constant, ineq.name)


# ---------------------------------------------------------------------------
# named inequalities

_DISPLAYS = {
    "ch": ((2, 2, 2, 2), [[0, -1, 0],
                          [-1, 1, 1],
                          [0, 1, -1]]),
    "i3322": ((3, 2, 3, 2), [[0, -2, -1, 0],
                             [-1, 1, 1, 1],
                             [0, 1, 1, -1],
                             [0, 1, -1, 0]]),
    "i4422_1": ((4, 2, 4, 2), [[0, 0, -1, -1, -1],
                               [-1, -1, 1, 0, 2],
                               [0, 0, 1, -1, -1],
                               [-1, 1, -1, 1, 1],
                               [-1, -1, 1, 2, -1]]),
    "i4422_2": ((4, 2, 4, 2), [[0, 0, 0, -1, -1],
                               [0, 1, 1, 1, 0],
                               [-1, 1, -1, 0, 1],
                               [-1, -1, 1, 1, 1],
                               [0, 0, -1, 1, 0]]),
    "i4422_3": ((4, 2, 4, 2), [[0, -3, -2, -1, 0],
                               [-1, 1, 1, 1, 1],
                               [0, 1, 1, 1, -1],
                               [0, 1, 1, -1, 0],
                               [0, 1, -1, 0, 0]]),
    "i4422_4": ((4, 2, 4, 2), [[0, 0, -1, -1, -1],
                               [-2, -1, 1, 0, 2],
                               [-1, 0, 1, -1, -1],
                               [-1, 1, -1, 1, 1],
                               [0, -1, 1, 2, -1]]),
}

_ALIASES = {"i4422": "i4422_3", "a5": "i4422_4", "i2233": "i22nn"}

_CORRELATIONS = {
    "chsh": ([[1, 1], [1, -1]], None, None),
    "i3322_corr": ([[1, 1, 1], [1, 1, -1], [1, -1, 0]], [-1, -1, 0], [1, 1, 0]),
    "as4": ([[1, 1, 1, 1], [1, 1, 1, -1], [1, 1, -2, 0], [1, -1, 0, 0]], None, None),
    "d4": ([[2, 1, 1, 2], [1, 1, 2, -2], [1, 2, -2, -1], [2, -2, -1, -1]], None, None),
}

NAMED_TAGS = ("ch", "chsh", "i3322", "i4422_1", "i4422_2", "i4422_3", "i4422_4", "imm22",
              "i22nn", "cglmp", "i3322_corr", "as4", "d4", "mermin") + tuple(_ALIASES)


def imm22(m):
    """I_mm22 family; m = 3 and m = 4 are I3322 and I4422 with parties swapped."""
    if m < 2:
        raise ValueError("imm22 needs m >= 2")
    joint = np.zeros((m, m, 2, 2))
    for sa in range(1, m + 1):
        for sb in range(1, m + 1):
            if sa + sb <= m + 1:
                joint[sa - 1, sb - 1, 0, 0] = 1
            elif sa + sb == m + 2:
                joint[sa - 1, sb - 1, 0, 0] = -1
    marg_a = np.zeros((m, 2))
    marg_a[:, 0] = -(m - 1 - np.arange(m))
    marg_b = np.zeros((m, 2))
    marg_b[0, 0] = -1
    return BellInequality(0.0, marg_a, marg_b, joint, f"imm22({m})")


def i22nn(n, exact=False):
    """I_22nn family; outcomes indexed 0..n-1 (printed 1..n)."""
    if n < 2:
        raise ValueError("i22nn needs n >= 2")
    joint = np.zeros((2, 2, n, n), dtype=object if exact else float)
    joint[...] = Fraction(0) if exact else 0.0
    for oa in range(1, n):
        for ob in range(1, n - oa + 1):
            joint[0, 0, oa - 1, ob - 1] = 1
        for ob in range(n - oa, n):
            joint[0, 1, oa - 1, ob - 1] = 1
            joint[1, 0, oa - 1, ob - 1] = 1
            joint[1, 1, oa - 1, ob - 1] = -1
    marg_a = np.zeros((2, n), dtype=joint.dtype)
    marg_b = np.zeros((2, n), dtype=joint.dtype)
    marg_a[0, :n - 1] = -1
    marg_b[0, :n - 1] = -1
    if exact:
        return _ExactBlocks(Fraction(0), marg_a, marg_b, joint)
    return BellInequality(0.0, marg_a, marg_b, joint, f"i22nn({n})")


def cglmp(n, exact=False, shifted=False):
    """CGLMP inequality with n outcomes in the '<= 2' form (``shifted`` moves
    the constant to the left so that the bound is 0)."""
    if n < 2:
        raise ValueError("cglmp needs n >= 2")
    joint = np.empty((2, 2, n, n), dtype=object)
    joint[...] = Fraction(0)
    for k in range(n // 2):
        w = 1 - Fraction(2 * k, n - 1)
        for ob in range(n):
            terms = [
                (0, 0, ob - k, +1), (0, 0, ob + k + 1, -1),
                (0, 1, ob + k, +1), (0, 1, ob - k - 1, -1),
                (1, 0, ob + k, +1), (1, 0, ob - k - 1, -1),
                (1, 1, ob - k - 1, +1), (1, 1, ob + k, -1),
            ]
            for sa, sb, oa, sgn in terms:
                joint[sa, sb, oa % n, ob] += sgn * w
    zero_a = np.empty((2, n), dtype=object)
    zero_a[...] = Fraction(0)
    b00 = Fraction(-2) if shifted else Fraction(0)
    exact_blocks = _ExactBlocks(b00, zero_a, zero_a.copy(), joint)
    if exact:
        return exact_blocks
    return exact_blocks.to_inequality(f"cglmp({n})")


def mermin(n):
    """n-partite Mermin expression from the recursion F_n, bound 1.

    F_1 = o_1; F_k = (o^k_1 + o^k_2)/2 F_{k-1} + (o^k_1 - o^k_2)/2 F'_{k-1},
    where F' swaps the two settings of every earlier party.
    """
    if n < 2:
        raise ValueError("mermin needs n >= 2")
    f = np.array([1.0, 0.0])
    for _ in range(2, n + 1):
        fp = f[(slice(None, None, -1),) * f.ndim]
        plus = np.array([0.5, 0.5])
        minus = np.array([0.5, -0.5])
        f = np.multiply.outer(f, plus) + np.multiply.outer(fp, minus)
    return CorrelationInequality(f, name=f"mermin({n})")


def named(tag, m=None, n=None):
    """Named inequality by tag; ``m``/``n`` size the parametric families."""
    tag = tag.lower()
    if tag == "i2233":
        return i22nn(3)
    tag = _ALIASES.get(tag, tag)
    if tag in _DISPLAYS:
        (m_a, n_a, m_b, n_b), mat = _DISPLAYS[tag]
        return from_display(mat, m_a, n_a, m_b, n_b, name=tag)
    if tag in _CORRELATIONS:
        coeffs, ma, mb = _CORRELATIONS[tag]
        return CorrelationInequality(coeffs, ma, mb, name=tag)
    if tag == "imm22":
        return imm22(3 if m is None else m)
    if tag == "i22nn":
        return i22nn(3 if n is None else n)
    if tag == "cglmp":
        return cglmp(3 if n is None else n)
    if tag == "mermin":
        return mermin(3 if n is None else n)
    raise ValueError(f"unknown inequality {tag!r}")


# ---------------------------------------------------------------------------
# CGLMP -> I22nn


@dataclasses.dataclass
class _ExactBlocks:
    """Coefficient blocks with rational entries (object arrays of Fraction)."""

    b00: Fraction
    marg_a: np.ndarray
    marg_b: np.ndarray
    joint: np.ndarray

    def copy(self):
        return _ExactBlocks(self.b00, self.marg_a.copy(), self.marg_b.copy(), self.joint.copy())

    def to_inequality(self, name=""):
        return BellInequality(float(self.b00), self.marg_a.astype(float),
                              self.marg_b.astype(float), self.joint.astype(float), name)

    def full_display(self):
        """Matrix with full-size blocks (no outcome dropped)."""
        m_a, m_b, n_a, n_b = self.joint.shape
        out = np.empty((1 + m_a * n_a, 1 + m_b * n_b), dtype=object)
        out[...] = Fraction(0)
        out[0, 0] = self.b00
        for sb in range(m_b):
            out[0, 1 + sb * n_b:1 + (sb + 1) * n_b] = self.marg_b[sb]
        for sa in range(m_a):
            out[1 + sa * n_a:1 + (sa + 1) * n_a, 0] = self.marg_a[sa]
            for sb in range(m_b):
                out[1 + sa * n_a:1 + (sa + 1) * n_a, 1 + sb * n_b:1 + (sb + 1) * n_b] = \
                    self.joint[sa, sb]
        return out

    def equals(self, other, scale=Fraction(1)):
        return (self.b00 == scale * other.b00
                and np.all(self.marg_a == scale * other.marg_a)
                and np.all(self.marg_b == scale * other.marg_b)
                and np.all(self.joint == scale * other.joint))


@dataclasses.dataclass
class CglmpConversion:
    """Record of the equivalence moves taking CGLMP(n) to a multiple of I22nn.

    ``stages`` holds the coefficients after each move, in order:
    drop Alice's last outcome, drop Bob's last outcome, normalize Bob's
    marginals, relabel Bob's outcomes. ``bob_outcome_perm[i]`` is the old
    outcome that new outcome ``i`` takes its coefficients from.
    """

    n: int
    moves: list
    stages: list
    bob_outcome_perm: np.ndarray
    scale: Fraction
    matches: bool


def _eliminate_alice_last(bl):
    out = bl.copy()
    n = out.joint.shape[2]
    m_a, m_b = out.joint.shape[:2]
    for sa in range(m_a):
        for sb in range(m_b):
            for ob in range(out.joint.shape[3]):
                e = out.joint[sa, sb, n - 1, ob]
                out.marg_b[sb, ob] += e
                out.joint[sa, sb, :, ob] -= e
    return out


def _eliminate_bob_last(bl):
    out = bl.copy()
    n = out.joint.shape[3]
    m_a, m_b = out.joint.shape[:2]
    for sa in range(m_a):
        for sb in range(m_b):
            for oa in range(out.joint.shape[2]):
                e = out.joint[sa, sb, oa, n - 1]
                out.marg_a[sa, oa] += e
                out.joint[sa, sb, oa, :] -= e
    return out


def _normalize_marginals(bl):
    out = bl.copy()
    for marg in (out.marg_b, out.marg_a):
        for s in range(marg.shape[0]):
            e = marg[s, -1]
            out.b00 += e
            marg[s, :] -= e
    return out


def _permute_bob_outcomes(bl, perm):
    out = bl.copy()
    out.marg_b = out.marg_b[:, perm]
    out.joint = out.joint[:, :, :, perm]
    return out


def cglmp_to_i22nn(n):
    """Apply the equivalence moves to CGLMP(n) (shifted '<= 0' form).

    The final coefficients equal ``2n/(n-1)`` times those of I22nn(n),
    checked in exact rational arithmetic.
    """
    start = cglmp(n, exact=True, shifted=True)
    b1 = _eliminate_alice_last(start)
    b2 = _eliminate_bob_last(b1)
    b3 = _normalize_marginals(b2)
    perm = np.array([n - 2 - o for o in range(n - 1)] + [n - 1], dtype=int)
    b4 = _permute_bob_outcomes(b3, perm)
    target = i22nn(n, exact=True)
    scale = Fraction(2 * n, n - 1)
    moves = [
        "no-signaling: remove Alice's last outcome from every joint block",
        "no-signaling: remove Bob's last outcome from every joint block",
        "normalization: remove the last outcome from every marginal block",
        f"relabel Bob's outcomes by {perm.tolist()} (0-indexed)",
    ]
    return CglmpConversion(n, moves, [start, b1, b2, b3, b4], perm, scale,
                           bool(b4.equals(target, scale)))


# ---------------------------------------------------------------------------
# measurements and operators


@dataclasses.dataclass(frozen=True, eq=False)
class MeasurementAssignment:
    """POVM elements ``alice[s_a][o_a]`` and ``bob[s_b][o_b]``."""

    alice: tuple
    bob: tuple

    def __post_init__(self):
        alice = tuple(tuple(np.asarray(e, dtype=complex) for e in s) for s in self.alice)
        bob = tuple(tuple(np.asarray(e, dtype=complex) for e in s) for s in self.bob)
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)

    @property
    def dims(self):
        return self.alice[0][0].shape[0], self.bob[0][0].shape[0]

    def validate(self, tol=None):
        """Raise ValueError unless every setting is a valid POVM."""
        tol = TOL.povm_sum if tol is None else tol
        for party, settings in (("alice", self.alice), ("bob", self.bob)):
            for s, elems in enumerate(settings):
                d = elems[0].shape[0]
                for e in elems:
                    if not is_psd(e) or np.max(np.abs(e - e.conj().T)) > tol:
                        raise ValueError(f"{party} setting {s}: element is not PSD Hermitian")
                if np.max(np.abs(sum(elems) - np.eye(d))) > tol:
                    raise ValueError(f"{party} setting {s}: elements do not sum to identity")
        return self

    def is_valid(self, tol=None):
        try:
            self.validate(tol)
        except ValueError:
            return False
        return True

    def swapped(self):
        return MeasurementAssignment(self.bob, self.alice)

    def to_json(self):
        def enc(settings):
            return [[[[[complex(v).real, complex(v).imag] for v in row] for row in e]
                     for e in s] for s in settings]
        return {"alice": enc(self.alice), "bob": enc(self.bob)}

    @classmethod
    def from_json(cls, data):
        def dec(settings):
            return [[np.array([[complex(*v) for v in row] for row in e]) for e in s]
                    for s in settings]
        return cls(dec(data["alice"]), dec(data["bob"])).validate()


def projective_from_observable(o):
    """Two-outcome projectors (I + O)/2, (I - O)/2 of a +-1 observable."""
    o = np.asarray(o, dtype=complex)
    eye = np.eye(o.shape[0])
    return ((eye + o) / 2, (eye - o) / 2)


def observable_from_povm(elems):
    """Correlation observable E_+ - E_- of a two-outcome POVM."""
    return elems[0] - elems[1]


def bell_operator(ineq, meas):
    """Hermitian operator B with tr(rho B) equal to the Bell expression."""
    s = ineq.scenario
    if len(meas.alice) != s.m_a or len(meas.bob) != s.m_b:
        raise ValueError("measurement settings do not match the scenario")
    if any(len(e) != s.n_a for e in meas.alice) or any(len(e) != s.n_b for e in meas.bob):
        raise ValueError("measurement outcomes do not match the scenario")
    d_a, d_b = meas.dims
    eye_a, eye_b = np.eye(d_a), np.eye(d_b)
    # partner[s_a, o_a] = sum_{s_b, o_b} b B, paired with A_{s_a}^{o_a}
    bob_ops = np.array([[e for e in s_] for s_ in meas.bob])  # (m_b, n_b, d_b, d_b)
    alice_ops = np.array([[e for e in s_] for s_ in meas.alice])
    partner = np.einsum("xyab,ybij->xaij", ineq.joint, bob_ops)
    op = np.einsum("xaij,xakl->ikjl", alice_ops, partner).reshape(d_a * d_b, d_a * d_b)
    op += np.kron(np.einsum("xa,xaij->ij", ineq.marg_a, alice_ops), eye_b)
    op += np.kron(eye_a, np.einsum("yb,ybij->ij", ineq.marg_b, bob_ops))
    op += ineq.b00 * np.eye(d_a * d_b)
    return hermitize(op)


def correlation_operator(cineq, obs_a, obs_b):
    """Operator sum b E(A,B) + marginal terms for given observables."""
    if cineq.parties != 2:
        raise ValueError("bipartite correlation inequality expected")
    obs_a = np.array(obs_a, dtype=complex)
    obs_b = np.array(obs_b, dtype=complex)
    d_a, d_b = obs_a.shape[1], obs_b.shape[1]
    partner = np.einsum("xy,yij->xij", cineq.coeffs, obs_b)
    op = np.einsum("xij,xkl->ikjl", obs_a, partner).reshape(d_a * d_b, d_a * d_b)
    op += np.kron(np.einsum("x,xij->ij", cineq.marg_a, obs_a), np.eye(d_b))
    op += np.kron(np.eye(d_a), np.einsum("y,yij->ij", cineq.marg_b, obs_b))
    op += cineq.constant * np.eye(d_a * d_b)
    return hermitize(op)


def quantum_probabilities(rho, meas):
    """Marginal and joint outcome probabilities induced by ``meas`` on ``rho``.

    Returns:
        (p_a[s_a, o_a], p_b[s_b, o_b], p_ab[s_a, s_b, o_a, o_b]).
    """
    m = as_matrix(rho)
    d_a, d_b = meas.dims
    t = m.reshape(d_a, d_b, d_a, d_b)
    alice = np.array([list(s) for s in meas.alice])
    bob = np.array([list(s) for s in meas.bob])
    p_ab = np.einsum("ajbk,xpba,yqkj->xypq", t, alice, bob).real
    rho_a = np.einsum("ajbj->ab", t)
    rho_b = np.einsum("ajak->jk", t)
    p_a = np.einsum("xpba,ab->xp", alice, rho_a).real
    p_b = np.einsum("yqkj,jk->yq", bob, rho_b).real
    return p_a, p_b, p_ab


def deterministic_measurements(strategy, scenario, dims):
    """Trivial POVMs A = delta I realizing a deterministic strategy."""
    d_a, d_b = dims

    def povms(choice, n, d):
        out = []
        for o in choice:
            elems = [np.zeros((d, d), dtype=complex) for _ in range(n)]
            elems[o] = np.eye(d, dtype=complex)
            out.append(elems)
        return out

    return MeasurementAssignment(povms(strategy.a, scenario.n_a, d_a),
                                 povms(strategy.b, scenario.n_b, d_b))


def operator_relation_residual(rho, n, meas):
    """|tr(rho B_In) - (2n/(n-1)) tr(rho B_I22nn) - 2| for shared POVMs.

    Bob's outcomes on the I22nn side are relabeled as recorded by
    :func:`cglmp_to_i22nn`, so both operators see the same physical POVMs.
    """
    conv = cglmp_to_i22nn(n)
    m = as_matrix(rho)
    b_cglmp = bell_operator(cglmp(n), meas)
    perm = conv.bob_outcome_perm
    relabeled = MeasurementAssignment(meas.alice, [[s[i] for i in perm] for s in meas.bob])
    b_i22nn = bell_operator(i22nn(n), relabeled)
    lhs = np.trace(m @ b_cglmp).real
    rhs = float(conv.scale) * np.trace(m @ b_i22nn).real + 2
    return abs(lhs - rhs)
