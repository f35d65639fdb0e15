"""Upper bounds on the maximal quantum value of a Bell expression.

Each observable is expanded in the orthonormal Hermitian basis,
``O_m = sum_n y_mn sigma_n``, so the Bell value becomes a real quadratic
``y^T Q y + l^T y + c`` and the operator constraints (``O^2 = I`` for
dichotomic observables, ``O^2 = O`` for projectors) become real quadratic
equalities. The lowest-order Lagrange dual of this program is an SDP whose
optimum bounds the Bell value from above.
"""

import dataclasses
import itertools

import numpy as np

from . import sdp
from .bell import BellInequality, CorrelationInequality
from .qcore import as_matrix, correlation_tensor, hermitian_basis, singular_values

CORRELATION = "correlation"
PROBABILITY = "probability"

STATE_INDEPENDENT = "state_independent"
FIXED_TRACE = "fixed_trace"
SEMIANALYTIC = "semianalytic"


@dataclasses.dataclass
class UbResult:
    value: float
    mode: str
    profile_values: dict = dataclasses.field(default_factory=dict)
    best_profile: tuple = None
    diagnostics: dict = dataclasses.field(default_factory=dict)


@dataclasses.dataclass(frozen=True)
class TraceProfile:
    """Fixed traces ``z_m = tr(O_m)``, Alice's observables first.

    Dichotomic observables take ``z`` in ``{-d, -d+2, ..., d}``; projectors
    take ``z`` in ``{0, 1, ..., d}``.
    """

    z: tuple
    kind: str
    d: int

    def __post_init__(self):
        grid = profile_grid(self.kind, self.d)
        if any(v not in grid for v in self.z):
            raise ValueError(f"profile {self.z} is off the {self.kind} grid for d={self.d}")
        object.__setattr__(self, "z", tuple(int(v) for v in self.z))


def profile_grid(kind, d):
    if kind == CORRELATION:
        return tuple(range(-d, d + 1, 2))
    if kind == PROBABILITY:
        return tuple(range(d + 1))
    raise ValueError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# coefficients


@dataclasses.dataclass(frozen=True)
class _Coefficients:
    """value = constant + a . <A> + b . <B> + sum joint <A x B>."""

    kind: str
    constant: float
    a: np.ndarray
    b: np.ndarray
    joint: np.ndarray

    @property
    def m_a(self):
        return self.joint.shape[0]

    @property
    def m_b(self):
        return self.joint.shape[1]


def _coefficients(ineq):
    """Expectation-value coefficients of a two-outcome inequality.

    Correlation inequalities use +-1 observables. Probability inequalities
    use the projector onto outcome 0 of every setting; outcome 1 is
    eliminated through ``p(1) = 1 - p(0)``.
    """
    if isinstance(ineq, CorrelationInequality):
        if ineq.parties != 2:
            raise ValueError("bipartite correlation inequality expected")
        return _Coefficients(CORRELATION, ineq.constant, np.array(ineq.marg_a),
                             np.array(ineq.marg_b), np.array(ineq.coeffs))
    if not isinstance(ineq, BellInequality):
        raise TypeError("expected a BellInequality or CorrelationInequality")
    s = ineq.scenario
    if s.n_a != 2 or s.n_b != 2:
        raise ValueError("upper bounds need two outcomes per setting")
    j = ineq.joint
    joint = j[:, :, 0, 0] - j[:, :, 0, 1] - j[:, :, 1, 0] + j[:, :, 1, 1]
    a = (j[:, :, 0, 1] - j[:, :, 1, 1]).sum(axis=1) + ineq.marg_a[:, 0] - ineq.marg_a[:, 1]
    b = (j[:, :, 1, 0] - j[:, :, 1, 1]).sum(axis=0) + ineq.marg_b[:, 0] - ineq.marg_b[:, 1]
    constant = ineq.b00 + j[:, :, 1, 1].sum() + ineq.marg_a[:, 1].sum() + ineq.marg_b[:, 1].sum()
    return _Coefficients(PROBABILITY, constant, a, b, joint)


# ---------------------------------------------------------------------------
# real quadratic model


@dataclasses.dataclass
class _Quadratic:
    """Real quadratic ``y^T q y + l . y + c`` with equality constraints."""

    q: np.ndarray
    l: np.ndarray
    c: float
    # each constraint is (P, p, e) meaning y^T P y + p . y + e = 0
    constraints: list


def _objective(coef, t, d):
    """Objective blocks for the full real tensor ``t[n, l] = tr(rho s_n x s_l)``."""
    dd = d * d
    m_a, m_b = coef.m_a, coef.m_b
    n = (m_a + m_b) * dd
    q = np.zeros((n, n))
    lin = np.zeros(n)
    for x in range(m_a):
        for y in range(m_b):
            blk = coef.joint[x, y] * t / 2
            bx, by = x * dd, (m_a + y) * dd
            q[bx:bx + dd, by:by + dd] += blk
            q[by:by + dd, bx:bx + dd] += blk.T
    root = np.sqrt(d)
    for x in range(m_a):
        lin[x * dd:(x + 1) * dd] += coef.a[x] * root * t[:, 0]
    for y in range(m_b):
        lin[(m_a + y) * dd:(m_a + y + 1) * dd] += coef.b[y] * root * t[0, :]
    return q, lin, float(coef.constant)


def _product_tensor(d):
    """``P[k, i, j] = Re tr(s_k {s_i, s_j}) / 2``."""
    s = hermitian_basis(d).elements
    prod = np.einsum("kab,ibc,jca->kij", s, s, s)
    return np.real(prod + prod.transpose(0, 2, 1)) / 2


def _constraints(kind, n_obs, d):
    dd = d * d
    n = n_obs * dd
    ptens = _product_tensor(d)
    out = []
    for m in range(n_obs):
        sl = slice(m * dd, (m + 1) * dd)
        for k in range(dd):
            big = np.zeros((n, n))
            big[sl, sl] = ptens[k]
            lin = np.zeros(n)
            const = 0.0
            if kind == CORRELATION:
                # tr(s_k O^2) = tr(s_k) = sqrt(d) delta_k0
                const = -np.sqrt(d) if k == 0 else 0.0
            else:
                # tr(s_k O^2) = tr(s_k O) = y_mk
                lin[m * dd + k] = -1.0
            out.append((big, lin, const, m))
    return out


def _model(coef, t, d):
    q, lin, c = _objective(coef, t, d)
    cons = _constraints(coef.kind, coef.m_a + coef.m_b, d)
    return _Quadratic(q, lin, c, [x[:3] for x in cons]), [x[3] for x in cons]


def _restrict(model, owners, fixed, d):
    """Substitute fixed components ``y[i] = v`` for ``(i, v)`` in ``fixed``.

    Constraints of observables whose components are all fixed are dropped.
    Returns the model in the remaining free variables.
    """
    n = model.q.shape[0]
    dd = d * d
    y0 = np.zeros(n)
    free = np.ones(n, dtype=bool)
    for i, v in fixed.items():
        y0[i] = v
        free[i] = False
    sel = np.flatnonzero(free)
    q = model.q[np.ix_(sel, sel)]
    lin = (2 * model.q @ y0 + model.l)[sel]
    c = float(y0 @ model.q @ y0 + model.l @ y0 + model.c)
    cons = []
    for (p_mat, p_lin, e), m in zip(model.constraints, owners):
        if not np.any(free[m * dd:(m + 1) * dd]):
            continue
        cons.append((p_mat[np.ix_(sel, sel)], (2 * p_mat @ y0 + p_lin)[sel],
                     float(y0 @ p_mat @ y0 + p_lin @ y0 + e)))
    return _Quadratic(q, lin, c, cons)


def _dual_matrices(model):
    """Constant and per-multiplier matrices of the dual LMI.

    The LMI reads ``[[g - c + sum lam e, -(l - sum lam p)^T / 2],
    [-(l - sum lam p) / 2, sum lam P - Q]] >= 0``; ``g`` is the bound.
    """
    n = model.q.shape[0]
    g0 = np.zeros((n + 1, n + 1))
    g0[0, 0] = -model.c
    g0[0, 1:] = g0[1:, 0] = -model.l / 2
    g0[1:, 1:] = -model.q
    gs = []
    for p_mat, p_lin, e in model.constraints:
        g = np.zeros((n + 1, n + 1))
        g[0, 0] = e
        g[0, 1:] = g[1:, 0] = p_lin / 2
        g[1:, 1:] = p_mat
        gs.append(g)
    return g0, gs


def _is_constant(model, tol=1e-12):
    return (np.max(np.abs(model.q), initial=0) <= tol
            and np.max(np.abs(model.l), initial=0) <= tol)


def _solve_dual(model, opts=None):
    """Minimal Lagrange-dual bound of a quadratic model."""
    if model.q.shape[0] == 0 or _is_constant(model):
        return model.c, {"status": "constant"}
    g0, gs = _dual_matrices(model)
    e00 = np.zeros_like(g0)
    e00[0, 0] = 1
    cost = np.zeros(len(gs) + 1)
    cost[0] = 1
    sol = sdp.solve_inequality(sdp.SdpInequality(cost, g0, [e00] + gs), opts)
    if not sol.ok:
        raise sdp.SdpError(sol)
    return sol.value, {"status": sol.status, "iterations": sol.iterations, "gap": sol.gap}


# ---------------------------------------------------------------------------
# public bounds


def _state_tensor(rho):
    d_a, d_b = rho.split
    if d_a != d_b:
        raise ValueError("upper bounds are implemented for equal local dimensions")
    return correlation_tensor(rho), d_a


def ub_state_independent(ineq, rho, opts=None):
    """Lowest-order Lagrange-dual bound with unrestricted observables.

    Args:
        ineq: CorrelationInequality (dichotomic observables) or two-outcome
            BellInequality (projectors onto outcome 0).
        rho: two-qudit DensityMatrix with equal local dimensions.
    """
    coef = _coefficients(ineq)
    t, d = _state_tensor(rho)
    model, _ = _model(coef, t, d)
    value, diag = _solve_dual(model, opts)
    return UbResult(value, STATE_INDEPENDENT, diagnostics=diag)


def _profile_fixing(coef, profile, d):
    """Fixed components ``y_m0 = z_m/sqrt d``, or the whole O_m when forced."""
    dd = d * d
    fixed = {}
    for m, z in enumerate(profile.z):
        fixed[m * dd] = z / np.sqrt(d)
        if _forced(coef, z, d):
            for n in range(1, dd):
                fixed[m * dd + n] = 0.0
    return fixed


def _forced(coef, z, d):
    return abs(z) == d if coef.kind == CORRELATION else z in (0, d)


def is_classical_profile(coef, z, d):
    """True when a party with two settings has a trace-forced observable.

    That party then measures only one nontrivial observable, which admits a
    local model, so the value cannot exceed the classical bound.
    """
    alice, bob = z[:coef.m_a], z[coef.m_a:]
    return any(len(side) == 2 and any(_forced(coef, v, d) for v in side)
               for side in (alice, bob))


def _profile_bound(coef, model, owners, z, d, classical, opts):
    if is_classical_profile(coef, z, d):
        return classical, {"status": "classical"}
    reduced = _restrict(model, owners, _profile_fixing(coef, TraceProfile(z, coef.kind, d), d), d)
    return _solve_dual(reduced, opts)


def ub_fixed_trace(ineq, rho, profile, opts=None):
    """Dual bound restricted to observables with the traces in ``profile``.

    Profiles that force an observable of a two-setting party to a multiple
    of the identity return the classical bound.
    """
    coef = _coefficients(ineq)
    t, d = _state_tensor(rho)
    if not isinstance(profile, TraceProfile):
        profile = TraceProfile(tuple(profile), coef.kind, d)
    if len(profile.z) != coef.m_a + coef.m_b or profile.kind != coef.kind or profile.d != d:
        raise ValueError("profile does not match the inequality and state")
    model, owners = _model(coef, t, d)
    value, diag = _profile_bound(coef, model, owners, profile.z, d, ineq.bound, opts)
    return UbResult(value, FIXED_TRACE, {profile.z: value}, profile.z, diag)


def _flip_prunable(coef):
    return coef.kind == CORRELATION and not np.any(coef.a) and not np.any(coef.b)


def enumerate_profiles(coef, d, prune=True):
    """All trace profiles; with pruning, one representative per global flip.

    Flipping every observable, O -> -O, leaves a marginal-free correlation
    expression unchanged, so z and -z give the same bound.
    """
    grid = profile_grid(coef.kind, d)
    profiles = list(itertools.product(grid, repeat=coef.m_a + coef.m_b))
    if not (prune and _flip_prunable(coef)):
        return profiles
    return [z for z in profiles if z >= tuple(-v for v in z)]


def ub_enumerate_profiles(ineq, rho, prune=True, opts=None):
    """Maximum of the fixed-trace bound over every trace profile.

    Ties resolve to the lexicographically smallest profile.
    """
    coef = _coefficients(ineq)
    t, d = _state_tensor(rho)
    model, owners = _model(coef, t, d)
    values = {}
    for z in enumerate_profiles(coef, d, prune):
        values[z], _ = _profile_bound(coef, model, owners, z, d, ineq.bound, opts)
    best = max(sorted(values), key=lambda z: values[z])
    return UbResult(values[best], FIXED_TRACE, values, best,
                    {"profiles": len(values), "pruned": prune and _flip_prunable(coef)})


def _profile_threshold(m0, m1, level, opts):
    """Largest p in [0, 1] with the dual bound of ``m0 + p (m1 - m0)`` <= level.

    The bound is convex in p, so the feasible set is an interval.
    """
    if _is_constant(m0) and _is_constant(m1):
        c0, c1 = m0.c, m1.c
        if c1 <= level + 1e-12:
            return 1.0
        return float(np.clip((level - c0) / (c1 - c0), 0.0, 1.0))
    g0, gs = _dual_matrices(m0)
    h0, hs = _dual_matrices(m1)
    g0 = g0.copy()
    g0[0, 0] += level
    gp = h0 - _dual_matrices(m0)[0]
    n = len(gs)

    def pad(mat, tail):
        return [mat, np.array([[tail]])]

    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    problem = sdp.SdpInequality(cost, pad(g0, 1.0),
                                [pad(g, 0.0) for g in gs] + [pad(gp, -1.0)])
    sol = sdp.solve_inequality(problem, opts)
    if sol.status == sdp.INFEASIBLE:
        return 0.0
    if not sol.ok:
        raise sdp.SdpError(sol)
    return float(np.clip(sol.x[-1], 0.0, 1.0))


def ub_threshold(ineq, family, d, level=None, prune=True, opts=None):
    """Largest p below which the enumerated fixed-trace bound stays <= level.

    Args:
        family: callable ``p -> DensityMatrix`` affine in p on [0, 1].
        level: defaults to the classical bound of ``ineq``.
    Returns:
        (threshold, per-profile thresholds)
    """
    coef = _coefficients(ineq)
    level = ineq.bound if level is None else level
    t0, _ = _state_tensor(family(0.0))
    t1, _ = _state_tensor(family(1.0))
    base0, owners = _model(coef, t0, d)
    base1, _ = _model(coef, t1, d)
    per = {}
    classical = ineq.bound
    for z in enumerate_profiles(coef, d, prune):
        if is_classical_profile(coef, z, d):
            per[z] = 1.0 if classical <= level else 0.0
            continue
        fixing = _profile_fixing(coef, TraceProfile(z, coef.kind, d), d)
        m0 = _restrict(base0, owners, fixing, d)
        m1 = _restrict(base1, owners, fixing, d)
        per[z] = _profile_threshold(m0, m1, level, opts)
    return min(per.values()), per


# ---------------------------------------------------------------------------
# semianalytic CHSH bound


def _largest_singular_value(rho, d):
    t = correlation_tensor(rho)
    return float(singular_values(t[1:, 1:])[0]), t


def _semianalytic_terms(coeffs, d):
    """Grid arrays (A_z, B_z) with bound = s1 A_z + B_z."""
    grid = np.array(profile_grid(CORRELATION, d), dtype=float)
    z1, z2, z3, z4 = np.meshgrid(grid, grid, grid, grid, indexing="ij")
    prod = (2 * d * d - z1 ** 2 - z2 ** 2) * (2 * d * d - z3 ** 2 - z4 ** 2) / (2 * d * d) ** 2
    slope = 2 * np.sqrt(2) * d * np.sqrt(np.clip(prod, 0, None))
    forced = np.max(np.abs([z1, z2, z3, z4]), axis=0) == d
    b = coeffs
    offset = (b[0, 0] * z1 * z3 + b[0, 1] * z1 * z4 + b[1, 0] * z2 * z3
              + b[1, 1] * z2 * z4) / d ** 2
    return slope, offset, forced


def _chsh_coeffs(ineq):
    if ineq is None:
        return np.array([[1.0, 1.0], [1.0, -1.0]])
    coef = _coefficients(ineq)
    if (coef.kind != CORRELATION or coef.joint.shape != (2, 2)
            or np.any(coef.a) or np.any(coef.b) or coef.constant):
        raise ValueError("the semianalytic bound covers 2x2 correlation expressions")
    return coef.joint


def chsh_semianalytic(rho, ineq=None, tol=1e-8):
    """Closed-form bound for states whose coherence vectors vanish.

    ``max_z 2 sqrt2 s1 d sqrt(prod (2d^2 - z^2 - z'^2)/(2d^2)) + sum b z z'/d^2``
    with s1 the largest singular value of the traceless correlation block.
    Profiles with some ``z = +-d`` fix that observable to +-I and contribute
    the classical bound 2 instead.
    """
    d = rho.split[0]
    if rho.split[1] != d:
        raise ValueError("equal local dimensions expected")
    s1, t = _largest_singular_value(rho, d)
    if max(np.linalg.norm(t[1:, 0]), np.linalg.norm(t[0, 1:])) > tol:
        raise ValueError("coherence vectors do not vanish")
    slope, offset, forced = _semianalytic_terms(_chsh_coeffs(ineq), d)
    values = np.where(forced, 2.0, s1 * slope + offset)
    idx = np.unravel_index(np.argmax(values), values.shape)
    grid = profile_grid(CORRELATION, d)
    return UbResult(float(values[idx]), SEMIANALYTIC, best_profile=tuple(grid[i] for i in idx),
                    diagnostics={"s1": s1})


def semianalytic_threshold(family, d, ineq=None, level=2.0):
    """Largest p with the semianalytic bound <= level.

    ``family`` must give states with vanishing coherence vectors whose
    traceless correlation block is linear in p, so s1(p) = p s1(1).
    """
    s1, _ = _largest_singular_value(family(1.0), d)
    slope, offset, forced = _semianalytic_terms(_chsh_coeffs(ineq), d)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(forced | (slope * s1 <= 0), np.inf, (level - offset) / (slope * s1))
    return float(np.clip(np.min(p), 0.0, 1.0))


# ---------------------------------------------------------------------------
# vectorized QCQP form


@dataclasses.dataclass(frozen=True, eq=False)
class QcqpInstance:
    """Vectorized form of the Bell value.

    ``r`` satisfies ``tr(rho A x B) = vec(A)^dag r vec(B)`` with column
    stacking; the correlation part of the value is ``-w^dag omega0 w`` for
    ``w`` the stacked vectorized observables, Alice's first.
    """

    kind: str
    b: np.ndarray
    r: np.ndarray
    r_a: np.ndarray
    r_b: np.ndarray
    a: np.ndarray
    b_marg: np.ndarray
    constant: float
    d: int

    @property
    def omega0(self):
        m_a, m_b = self.b.shape
        dd = self.d * self.d
        off = np.kron(self.b, self.r)
        out = np.zeros(((m_a + m_b) * dd, (m_a + m_b) * dd), dtype=complex)
        out[:m_a * dd, m_a * dd:] = off
        out[m_a * dd:, :m_a * dd] = off.conj().T
        return -out / 2

    def value(self, obs_a, obs_b):
        """Bell value for observables (dichotomic) or projectors onto outcome 0."""
        w = np.concatenate([_vec(o) for o in list(obs_a) + list(obs_b)])
        quad = -np.vdot(w, self.omega0 @ w).real
        lin = (sum(a * np.vdot(_vec(o), self.r_a).real for a, o in zip(self.a, obs_a))
               + sum(b * np.vdot(_vec(o), self.r_b).real for b, o in zip(self.b_marg, obs_b)))
        return float(self.constant + quad + lin)


def _vec(o):
    return np.asarray(o, dtype=complex).reshape(-1, order="F")


def build_qcqp(ineq, rho):
    """Vectorized QCQP data of an inequality on a two-qudit state."""
    coef = _coefficients(ineq)
    m = as_matrix(rho)
    d = rho.split[0]
    if rho.split[1] != d:
        raise ValueError("equal local dimensions expected")
    t = m.reshape(d, d, d, d)
    # r[(c, r), (c', r')] = <r, c'| rho |c, r'>
    r = t.transpose(2, 0, 1, 3).reshape(d * d, d * d)
    # tr(rho_A A) = vec(A)^dag vec(rho_A) for Hermitian A
    r_a = _vec(np.einsum("ajbj->ab", t))
    r_b = _vec(np.einsum("jajb->ab", t))
    return QcqpInstance(coef.kind, coef.joint, r, r_a, r_b, coef.a, coef.b, coef.constant, d)
