"""Small dense semidefinite-program solver.

Two user-facing forms are supported, both with Hermitian data that may be
block diagonal:

* standard form: maximize ``-tr(F0 Z)`` s.t. ``tr(F_i Z) = c_i``, ``Z >= 0``;
* inequality form: minimize ``c' . x`` s.t. ``G0 + sum_i x_i G_i >= 0``.

Both are mapped onto the real conic pair

    primal: min <C, X>  s.t.  A(X) = b,  X >= 0
    dual:   max b.y     s.t.  C - A*(y) = S >= 0

which is solved by a primal-dual interior-point method on the homogeneous
self-dual embedding (variables tau, kappa) with the HKM search direction and
a Mehrotra predictor-corrector. Complex Hermitian blocks are replaced by
their real symmetric embedding ``[[Re, -Im], [Im, Re]] / 2`` so that the
trace pairing is preserved.
"""

import dataclasses
import json

import numpy as np
import scipy.linalg

from .config import TOL

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
MAX_ITER = "max_iter"
NUMERICAL_FAILURE = "numerical_failure"


class SdpError(RuntimeError):
    """Raised when a solve does not reach an optimal status."""

    def __init__(self, solution):
        super().__init__(f"SDP solve ended with status {solution.status!r}")
        self.solution = solution


def _as_blocks(m):
    if isinstance(m, (list, tuple)):
        return [np.atleast_2d(np.asarray(b)) for b in m]
    return [np.atleast_2d(np.asarray(m))]


@dataclasses.dataclass
class SdpStandard:
    """maximize -tr(F0 Z) subject to tr(F_i Z) = c_i, Z >= 0.

    Each matrix is an array or a list of diagonal blocks.
    """

    f0: object
    constraints: list
    c: np.ndarray


@dataclasses.dataclass
class SdpInequality:
    """minimize c' . x subject to G0 + sum_i x_i G_i >= 0."""

    cost: np.ndarray
    g0: object
    gs: list


@dataclasses.dataclass
class SdpSolution:
    status: str
    value: float
    primal: object
    x: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    primal_infeasibility: float
    dual_infeasibility: float
    iterations: int

    @property
    def ok(self):
        return self.status == OPTIMAL


@dataclasses.dataclass
class SolverOptions:
    feas_tol: float = TOL.sdp_feas
    gap_tol: float = TOL.sdp_gap
    max_iter: int = TOL.sdp_max_iter
    max_dim: int = TOL.sdp_max_dim
    step_fraction: float = 0.95


def real_embedding(h):
    """Real symmetric embedding ``[[Re H, -Im H], [Im H, Re H]]``."""
    h = np.asarray(h)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def _is_complex(blocks_per_matrix, k, tol=1e-14):
    return any(np.iscomplexobj(m[k]) and np.max(np.abs(np.imag(m[k])), initial=0) > tol
               for m in blocks_per_matrix)


class _Blocks:
    """Real block-diagonal conic data with vectorized constraint rows."""

    def __init__(self, c_blocks, a_blocks, b, max_dim):
        self.m = len(a_blocks)
        all_mats = [c_blocks] + a_blocks
        nblk = len(c_blocks)
        for blocks in a_blocks:
            if len(blocks) != nblk:
                raise ValueError("all matrices must share the block structure")
        self.complex = [_is_complex(all_mats, k) for k in range(nblk)]
        self.orig_sizes = [blk.shape[0] for blk in c_blocks]

        def embed(mat, k):
            mat = np.asarray(mat)
            if self.complex[k]:
                return real_embedding(mat) / 2
            return np.real(mat).astype(float)

        self.c = [embed(c_blocks[k], k) for k in range(nblk)]
        self.sizes = [blk.shape[0] for blk in self.c]
        if sum(self.sizes) > max_dim:
            raise ValueError(f"SDP dimension {sum(self.sizes)} exceeds cap {max_dim}")
        for k, blk in enumerate(self.c):
            for mat in all_mats:
                if mat[k].shape != (self.orig_sizes[k],) * 2:
                    raise ValueError("inconsistent block dimensions")
                if np.max(np.abs(mat[k] - np.conj(mat[k]).T), initial=0) > 1e-9 * max(
                        1.0, np.max(np.abs(mat[k]), initial=0)):
                    raise ValueError("SDP data must be Hermitian")
        # avec[k] has shape (m, n_k * n_k)
        self.avec = []
        for k, n in enumerate(self.sizes):
            rows = [embed(a[k], k) for a in a_blocks]
            rows = [(r + r.T) / 2 for r in rows]
            self.avec.append(np.array(rows).reshape(self.m, n * n) if rows
                             else np.zeros((0, n * n)))
        self.c = [(blk + blk.T) / 2 for blk in self.c]
        self.b = np.asarray(b, dtype=float).reshape(-1)
        if self.b.size != self.m:
            raise ValueError("constraint count does not match right-hand side")
        self.nu = sum(self.sizes)

    def op(self, xs):
        out = np.zeros(self.m)
        for a, x in zip(self.avec, xs):
            out += a @ x.reshape(-1)
        return out

    def adj(self, y):
        return [(a.T @ y).reshape(n, n) for a, n in zip(self.avec, self.sizes)]

    def unembed(self, xs):
        out = []
        for k, x in enumerate(xs):
            if self.complex[k]:
                n = self.orig_sizes[k]
                re = (x[:n, :n] + x[n:, n:]) / 2
                im = (x[n:, :n] - x[:n, n:]) / 2
                out.append(re + 1j * im)
            else:
                out.append(x)
        return out


def _inner(xs, ys):
    return float(sum(np.vdot(x, y).real for x, y in zip(xs, ys)))


def _fro(xs):
    return float(np.sqrt(sum(np.sum(x * x) for x in xs)))


def _sym(x):
    return (x + x.T) / 2


def _max_step(xs, dxs, chols):
    """Largest alpha with X + alpha dX >= 0 blockwise (inf if unbounded)."""
    alpha = np.inf
    for dx, chol in zip(dxs, chols):
        li = scipy.linalg.solve_triangular(chol, np.eye(chol.shape[0]), lower=True)
        w = np.linalg.eigvalsh(_sym(li @ dx @ li.T))
        if w[0] < 0:
            alpha = min(alpha, -1.0 / w[0])
    return alpha


def _is_pd(m):
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


def _scalar_step(v, dv):
    return -v / dv if dv < 0 else np.inf


def _solve_spd(m, rhs):
    try:
        factor = scipy.linalg.cho_factor(m, lower=True)
        return scipy.linalg.cho_solve(factor, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(m, rhs, rcond=None)[0]


def _solve_conic(data, opts):
    """Interior point on the homogeneous self-dual embedding."""
    nblk = len(data.sizes)
    x = [np.eye(n) for n in data.sizes]
    s = [np.eye(n) for n in data.sizes]
    y = np.zeros(data.m)
    tau, kappa = 1.0, 1.0
    bnorm = np.linalg.norm(data.b)
    cnorm = _fro(data.c)
    status = MAX_ITER
    it = 0
    stats = {}

    gram = sum(a @ a.T for a in data.avec) if data.m else None
    try:
        gram_factor = scipy.linalg.cho_factor(gram, lower=True) if data.m else None
    except np.linalg.LinAlgError:
        gram_factor = None

    for it in range(1, opts.max_iter + 1):
        ax = data.op(x)
        aty = data.adj(y)
        r_p = data.b * tau - ax
        r_d = [aty[k] + s[k] - data.c[k] * tau for k in range(nblk)]
        cx = _inner(data.c, x)
        by = float(data.b @ y)
        r_g = kappa + cx - by
        mu = (_inner(x, s) + tau * kappa) / (data.nu + 1)

        pinf = np.linalg.norm(r_p) / tau / (1 + bnorm)
        dinf = _fro(r_d) / tau / (1 + cnorm)
        pobj, dobj = cx / tau, by / tau
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        stats = dict(pinf=pinf, dinf=dinf, pobj=pobj, dobj=dobj, gap=gap)
        if pinf <= opts.feas_tol and dinf <= opts.feas_tol and gap <= opts.gap_tol:
            status = OPTIMAL
            break
        if by > 0 and _fro([aty[k] + s[k] for k in range(nblk)]) / by <= opts.feas_tol:
            status = INFEASIBLE
            break
        if cx < 0 and np.linalg.norm(ax) / -cx <= opts.feas_tol:
            status = DUAL_INFEASIBLE
            break

        try:
            chol_x = [np.linalg.cholesky(xk) for xk in x]
            chol_s = [np.linalg.cholesky(sk) for sk in s]
        except np.linalg.LinAlgError:
            status = NUMERICAL_FAILURE
            break
        s_inv = [scipy.linalg.cho_solve((c, True), np.eye(c.shape[0])) for c in chol_s]

        # Schur complement M_ij = tr(A_i X A_j S^-1) and u_i = tr(A_i X C S^-1)
        schur = np.zeros((data.m, data.m))
        u = np.zeros(data.m)
        g = 0.0
        for k, n in enumerate(data.sizes):
            a = data.avec[k].reshape(data.m, n, n)
            p = np.einsum("ab,jbc,cd->jad", x[k], a, s_inv[k], optimize=True)
            schur += data.avec[k] @ p.transpose(0, 2, 1).reshape(data.m, n * n).T
            xcs = x[k] @ data.c[k] @ s_inv[k]
            u += data.avec[k] @ xcs.T.reshape(-1)
            g += float(np.sum(data.c[k] * xcs.T))
        schur = (schur + schur.T) / 2

        def direction(sigma, eta, corr, corr_tau):
            target = sigma * mu
            # W = sigma mu S^-1 - X - corr S^-1 + eta X r_d S^-1
            w = []
            for k in range(nblk):
                wk = target * s_inv[k] - x[k] + eta * x[k] @ r_d[k] @ s_inv[k]
                if corr is not None:
                    wk = wk - corr[k] @ s_inv[k]
                w.append(_sym(wk))
            r_k = target - tau * kappa - corr_tau
            r1 = eta * r_p - data.op(w)
            r3 = eta * r_g + _inner(data.c, w) + r_k / tau
            sol = _solve_spd(schur, np.column_stack([r1, u + data.b]))
            dy1, dy2 = sol[:, 0], sol[:, 1]
            denom = float((data.b - u) @ dy2) + g + kappa / tau
            dtau = (r3 - float((data.b - u) @ dy1)) / denom
            dy = dy1 + dy2 * dtau
            atdy = data.adj(dy)
            ds = [-atdy[k] + data.c[k] * dtau - eta * r_d[k] for k in range(nblk)]
            dx = []
            for k in range(nblk):
                rhs = target * np.eye(data.sizes[k]) - x[k] @ s[k] - x[k] @ ds[k]
                if corr is not None:
                    rhs = rhs - corr[k]
                dx.append(_sym(rhs @ s_inv[k]))
            # restore A(dX) - b dtau = eta r_p, lost to rounding when S is ill conditioned
            miss = eta * r_p - data.op(dx) + data.b * dtau
            if gram_factor is not None and np.linalg.norm(miss) > 0:
                fix = data.adj(scipy.linalg.cho_solve(gram_factor, miss))
                dx = [dx[k] + _sym(fix[k]) for k in range(nblk)]
            dkappa = (r_k - kappa * dtau) / tau
            return dx, dy, ds, dtau, dkappa

        def step_length(dx, ds, dtau, dkappa):
            return min(_max_step(x, dx, chol_x), _max_step(s, ds, chol_s),
                       _scalar_step(tau, dtau), _scalar_step(kappa, dkappa))

        dx, dy, ds, dtau, dkappa = direction(0.0, 1.0, None, 0.0)
        alpha = min(1.0, step_length(dx, ds, dtau, dkappa))
        mu_aff = (_inner([x[k] + alpha * dx[k] for k in range(nblk)],
                         [s[k] + alpha * ds[k] for k in range(nblk)])
                  + (tau + alpha * dtau) * (kappa + alpha * dkappa)) / (data.nu + 1)
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3
        corr = [dx[k] @ ds[k] for k in range(nblk)]
        dx, dy, ds, dtau, dkappa = direction(sigma, 1.0 - sigma, corr, dtau * dkappa)
        alpha = min(1.0, opts.step_fraction * step_length(dx, ds, dtau, dkappa))
        if not np.isfinite(alpha) or alpha <= 1e-14:
            status = NUMERICAL_FAILURE
            break
        # backtrack until both iterates factor; rounding can defeat the ratio test
        for _ in range(30):
            x_new = [_sym(x[k] + alpha * dx[k]) for k in range(nblk)]
            s_new = [_sym(s[k] + alpha * ds[k]) for k in range(nblk)]
            if all(_is_pd(m) for m in x_new + s_new):
                break
            alpha *= 0.5
        else:
            status = NUMERICAL_FAILURE
            break
        x, s = x_new, s_new
        y = y + alpha * dy
        tau += alpha * dtau
        kappa += alpha * dkappa

    if status == OPTIMAL or status in (MAX_ITER, NUMERICAL_FAILURE):
        scale = tau if tau > 0 else 1.0
        x = [xk / scale for xk in x]
        s = [sk / scale for sk in s]
        y = y / scale
    return status, x, y, s, it, stats


def solve_standard(problem, opts=None):
    """Solve ``max -tr(F0 Z)`` s.t. ``tr(F_i Z) = c_i``, ``Z >= 0``.

    Returns:
        SdpSolution with ``primal`` the optimal Z (array, or list of blocks
        when the input was block structured) and ``value`` the maximum.
    """
    opts = opts or SolverOptions()
    blocked = isinstance(problem.f0, (list, tuple))
    data = _Blocks(_as_blocks(problem.f0), [_as_blocks(f) for f in problem.constraints],
                   problem.c, opts.max_dim)
    status, x, y, _, it, st = _solve_conic(data, opts)
    z = data.unembed(x)
    return SdpSolution(
        status=status,
        value=-st.get("pobj", np.nan),
        primal=z if blocked else z[0],
        x=y,
        primal_objective=-st.get("pobj", np.nan),
        dual_objective=-st.get("dobj", np.nan),
        gap=st.get("gap", np.nan),
        primal_infeasibility=st.get("pinf", np.nan),
        dual_infeasibility=st.get("dinf", np.nan),
        iterations=it,
    )


def solve_inequality(problem, opts=None):
    """Solve ``min c'.x`` s.t. ``G0 + sum_i x_i G_i >= 0``.

    Returns:
        SdpSolution with ``x`` the optimal vector and ``value`` the minimum.
    """
    opts = opts or SolverOptions()
    g0 = _as_blocks(problem.g0)
    gs = [[-blk for blk in _as_blocks(g)] for g in problem.gs]
    cost = np.asarray(problem.cost, dtype=float)
    data = _Blocks(g0, gs, -cost, opts.max_dim)
    status, x, y, s, it, st = _solve_conic(data, opts)
    if status == INFEASIBLE:
        status = DUAL_INFEASIBLE
    elif status == DUAL_INFEASIBLE:
        status = INFEASIBLE
    value = float(cost @ y)
    return SdpSolution(
        status=status,
        value=value,
        primal=data.unembed(s),
        x=y,
        primal_objective=value,
        dual_objective=-st.get("pobj", np.nan),
        gap=st.get("gap", np.nan),
        primal_infeasibility=st.get("dinf", np.nan),
        dual_infeasibility=st.get("pinf", np.nan),
        iterations=it,
    )


def _jsonable(m):
    return [_as_list(b) for b in _as_blocks(m)]


def _as_list(b):
    b = np.asarray(b, dtype=complex)
    return [[[v.real, v.imag] for v in row] for row in b]


def dump_json(problem, path):
    """Write an instance in a plain JSON form for external cross-checks."""
    if isinstance(problem, SdpStandard):
        payload = {"form": "standard", "f0": _jsonable(problem.f0),
                   "f": [_jsonable(f) for f in problem.constraints],
                   "c": np.asarray(problem.c, dtype=float).tolist()}
    else:
        payload = {"form": "inequality", "cost": np.asarray(problem.cost, dtype=float).tolist(),
                   "g0": _jsonable(problem.g0), "g": [_jsonable(g) for g in problem.gs]}
    with open(path, "w") as fh:
        json.dump(payload, fh)
