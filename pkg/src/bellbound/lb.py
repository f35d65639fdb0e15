"""Lower bounds on the maximal quantum value of a Bell expression.

The see-saw fixes one party's POVMs, which turns the Bell value into a linear
function of the other party's POVMs. That function is maximized exactly,
by an eigenspace projection for two outcomes or by an SDP otherwise, and the
roles are alternated until the value stops improving.
"""

import concurrent.futures
import dataclasses
import itertools

import numpy as np

from . import sdp
from .bell import (CorrelationInequality, MeasurementAssignment, best_deterministic_strategy,
                   correlation_to_probability, deterministic_measurements, swap_parties)
from .config import TOL
from .qcore import (PAULIS, DensityMatrix, PureState, as_matrix, haar_unitary,
                    hermitian_basis, hermitize, positive_eigenspace_projector,
                    singular_values)

GENERIC_POVM = "generic-povm"
PROJECTIVE = "projective-rank-list"


@dataclasses.dataclass
class SeesawConfig:
    convergence_tol: float = TOL.seesaw_convergence
    max_sweeps: int = TOL.seesaw_max_sweeps
    restarts: int = TOL.seesaw_restarts
    rng_seed: int = 0
    init_mode: str = GENERIC_POVM
    threads: int = 1
    generic_mix: float = 0.1
    classical_start: bool = True

    def __post_init__(self):
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if self.restarts < 1 or self.max_sweeps < 1:
            raise ValueError("restarts and max_sweeps must be at least 1")
        if self.init_mode not in (GENERIC_POVM, PROJECTIVE):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")


@dataclasses.dataclass
class LbResult:
    value: float
    measurements: MeasurementAssignment
    sweeps: int
    restart_values: list
    history: list
    best_restart: int
    classical_value: float = None


def _as_probability_form(ineq):
    if isinstance(ineq, CorrelationInequality):
        return correlation_to_probability(ineq)
    return ineq


def _swap_state(m, split):
    d_a, d_b = split
    t = m.reshape(d_a, d_b, d_a, d_b).transpose(1, 0, 3, 2)
    return t.reshape(d_a * d_b, d_a * d_b), (d_b, d_a)


def reduced_operators(rho, ineq, alice_meas):
    """Operators rho_B[s_b, o_b] with sum tr(rho_B B) = tr(rho Bell operator).

    ``alice_meas`` is the list of Alice's POVMs per setting. The constant and
    Alice-marginal terms are spread evenly over Bob's settings as multiples of
    his reduced state; they add a constant per setting because Bob's elements
    sum to the identity.
    """
    ineq = _as_probability_form(ineq)
    m = as_matrix(rho)
    d_a, d_b = rho.split
    t = m.reshape(d_a, d_b, d_a, d_b)
    alice = np.array([list(s) for s in alice_meas])  # (m_a, n_a, d_a, d_a)
    cond = np.einsum("ajbk,xpba->xpjk", t, alice)  # tr_A[rho (A x I)]
    rho_b = np.einsum("ajak->jk", t)
    ops = np.einsum("xypq,xpjk->yqjk", ineq.joint, cond)
    ops += ineq.marg_b[:, :, None, None] * rho_b
    p_a = np.einsum("xpjj->xp", cond).real
    constant = ineq.b00 + float(np.sum(ineq.marg_a * p_a))
    ops += constant / ineq.scenario.m_b * rho_b
    return (ops + ops.conj().transpose(0, 1, 3, 2)) / 2


def _value(ops, bob_meas):
    return float(sum(np.vdot(ops[s, o].conj().T, e).real
                     for s, elems in enumerate(bob_meas) for o, e in enumerate(elems)))


def optimize_bob_two_outcome(rho, ineq, alice_meas):
    """Best two-outcome Bob POVMs for fixed Alice POVMs.

    Returns:
        (bob_meas, value) with value = 1/2 sum ||rho_B+ - rho_B-||_1 + 1/2 sum tr rho_B.
    """
    ops = reduced_operators(rho, ineq, alice_meas)
    if ops.shape[1] != 2:
        raise ValueError("two-outcome step needs n_B = 2")
    d = ops.shape[-1]
    bob = []
    for s in range(ops.shape[0]):
        plus = positive_eigenspace_projector(ops[s, 0] - ops[s, 1])
        bob.append([plus, np.eye(d) - plus])
    return bob, _value(ops, bob)


def _repair_povm(elems):
    """Hermitize, clip tiny negative eigenvalues and renormalize to sum I."""
    fixed = []
    for e in elems:
        w, v = np.linalg.eigh(hermitize(e))
        fixed.append((v * np.clip(w, 0, None)) @ v.conj().T)
    total = sum(fixed)
    w, v = np.linalg.eigh(hermitize(total))
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return [hermitize(inv_sqrt @ e @ inv_sqrt) for e in fixed]


def optimize_bob_sdp(rho, ineq, alice_meas, opts=None):
    """Best Bob POVMs for fixed Alice POVMs via a standard-form SDP.

    Z is block diagonal with one block per Bob element; the objective matrix
    is minus the reduced operators and each setting's elements are forced to
    sum to the identity through its Hermitian-basis components.
    """
    ops = reduced_operators(rho, ineq, alice_meas)
    m_b, n_b, d = ops.shape[:3]
    basis = hermitian_basis(d).elements
    zero = np.zeros((d, d))
    f0 = [-ops[s, o] for s in range(m_b) for o in range(n_b)]
    constraints, c = [], []
    for s in range(m_b):
        for k, sigma in enumerate(basis):
            constraints.append([sigma if sb == s else zero
                                for sb in range(m_b) for _ in range(n_b)])
            c.append(np.sqrt(d) if k == 0 else 0.0)
    sol = sdp.solve_standard(sdp.SdpStandard(f0, constraints, np.array(c)), opts)
    if not sol.ok:
        raise sdp.SdpError(sol)
    blocks = sol.primal
    bob = [_repair_povm(blocks[s * n_b:(s + 1) * n_b]) for s in range(m_b)]
    return bob, _value(ops, bob)


def optimize_bob(rho, ineq, alice_meas, incumbent=None):
    """Best Bob POVMs for fixed Alice POVMs.

    ``incumbent`` is Bob's current assignment; it is returned instead when the
    solver's answer scores lower, which only happens within SDP tolerance.
    """
    ineq = _as_probability_form(ineq)
    if ineq.scenario.n_b == 2:
        bob, value = optimize_bob_two_outcome(rho, ineq, alice_meas)
    else:
        bob, value = optimize_bob_sdp(rho, ineq, alice_meas)
    if incumbent is not None:
        kept = _value(reduced_operators(rho, ineq, alice_meas), incumbent)
        if kept > value:
            return incumbent, kept
    return bob, value


def swap_state(rho):
    """The same state with its two subsystems exchanged."""
    m, split = _swap_state(as_matrix(rho), rho.split)
    return DensityMatrix(m, split, dict(rho.meta))


def optimize_alice(rho, ineq, bob_meas, incumbent=None):
    """Best Alice POVMs for fixed Bob POVMs (party-swapped Bob step)."""
    return optimize_bob(swap_state(rho), swap_parties(_as_probability_form(ineq)), bob_meas,
                        incumbent)


def _compositions(total, parts, positive):
    lo = 1 if positive else 0
    out = []
    for cut in itertools.product(range(lo, total + 1), repeat=parts - 1):
        last = total - sum(cut)
        if last >= lo:
            out.append(tuple(cut) + (last,))
    return out


def random_povm(d, n, rng, mode=GENERIC_POVM, mix=0.1):
    """Random POVM with n outcomes on C^d.

    A Haar unitary's columns are split into groups whose sizes are a uniformly
    drawn composition of d (zero parts allowed only when n > d). In
    generic mode each projector is mixed as (1-mix) P + mix I/n, which keeps
    the sum equal to I and makes every element full rank.
    """
    u = haar_unitary(d, rng)
    sizes = _compositions(d, n, positive=n <= d)
    sizes = sizes[rng.integers(len(sizes))]
    elems, start = [], 0
    for size in sizes:
        cols = u[:, start:start + size]
        elems.append(cols @ cols.conj().T)
        start += size
    if mode == GENERIC_POVM:
        elems = [(1 - mix) * e + mix * np.eye(d) / n for e in elems]
    return [hermitize(e) for e in elems]


def random_measurements(scenario, dims, rng, mode=GENERIC_POVM, mix=0.1):
    alice = [random_povm(dims[0], scenario.n_a, rng, mode, mix) for _ in range(scenario.m_a)]
    bob = [random_povm(dims[1], scenario.n_b, rng, mode, mix) for _ in range(scenario.m_b)]
    return MeasurementAssignment(alice, bob)


def _run_restart(rho, ineq, config, index, initial_alice=None):
    rng = np.random.default_rng([config.rng_seed, index])
    if initial_alice is None:
        alice = random_measurements(ineq.scenario, rho.split, rng, config.init_mode,
                                    config.generic_mix).alice
    else:
        alice = initial_alice
    history = []
    best = -np.inf
    bob = None
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        bob, val_b = optimize_bob(rho, ineq, alice, bob)
        alice, val_a = optimize_alice(rho, ineq, bob, alice)
        history += [val_b, val_a]
        gain = val_a - best
        best = max(best, val_a)
        if gain < config.convergence_tol:
            break
    meas = MeasurementAssignment(alice, bob)
    return best, meas, sweeps, history


def seesaw(rho, ineq, config=None, initial_alice=None):
    """See-saw lower bound on the maximal quantum value of ``ineq`` on ``rho``.

    Args:
        rho: DensityMatrix or PureState.
        ineq: BellInequality or bipartite CorrelationInequality.
        config: SeesawConfig.
        initial_alice: optional starting POVMs for Alice, used by every restart.
    Returns:
        LbResult; the best restart wins, ties go to the lowest index. With
        ``config.classical_start`` one extra run, index ``config.restarts``,
        starts Alice on the trivial POVMs of the best deterministic strategy,
        so the result never falls below the classical bound; its value is
        also reported as ``classical_value``.
    """
    config = config or SeesawConfig()
    ineq = _as_probability_form(ineq)
    if isinstance(rho, PureState):
        rho = rho.density_matrix()
    starts = [initial_alice] * config.restarts
    if config.classical_start and initial_alice is None:
        strategy, _ = best_deterministic_strategy(ineq)
        starts.append(deterministic_measurements(strategy, ineq.scenario, rho.split).alice)

    def job(i):
        return _run_restart(rho, ineq, config, i, starts[i])

    if config.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(config.threads) as pool:
            results = list(pool.map(job, range(len(starts))))
    else:
        results = [job(i) for i in range(len(starts))]
    values = [r[0] for r in results]
    best = int(np.argmax(values))
    value, meas, sweeps, history = results[best]
    classical = values[config.restarts] if len(values) > config.restarts else None
    return LbResult(value, meas, sweeps, values[:config.restarts], history, best, classical)


# ---------------------------------------------------------------------------
# two-qubit closed forms


def horodecki_T(rho):
    """Correlation matrix T_ij = tr(rho sigma_i x sigma_j) of a two-qubit state."""
    if tuple(rho.split) != (2, 2):
        raise ValueError("two-qubit state expected")
    m = as_matrix(rho)
    return np.array([[np.trace(m @ np.kron(si, sj)).real for sj in PAULIS] for si in PAULIS])


@dataclasses.dataclass(frozen=True)
class HorodeckiValues:
    sqm_ch: float
    sqm_chsh: float
    violates: bool
    singular_sum: float


def horodecki_values(rho):
    """Maximal CH and CHSH values of a two-qubit state.

    With s1, s2 the two largest singular values of T, the CH maximum is
    max(0, (sqrt(s1^2 + s2^2) - 1)/2) and CHSH is violated iff s1^2 + s2^2 > 1.
    """
    sv = singular_values(horodecki_T(rho))
    total = float(sv[0] ** 2 + sv[1] ** 2)
    sqm_ch = max(0.0, 0.5 * (np.sqrt(total) - 1))
    return HorodeckiValues(sqm_ch, 4 * (sqm_ch + 0.5), total > 1, total)
