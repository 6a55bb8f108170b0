"""Sparse recovery: quadratically constrained basis pursuit and OMP.

The basis-pursuit solver minimizes the complex l1 norm subject to
||A z - y||_2 <= eta via a first-order primal-dual iteration
(Chambolle-Pock) with fixed step ratio, relative-gap stopping, and an
optional support polish that never increases the objective.  Orthogonal
matching pursuit is the standard greedy with complex correlations.
Phase-transition grids sweep (m, s) cells with independent per-trial
random streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import patterns as pat
from .optimize import OptimizerConfig, multistart_pattern_search
from .patterns import S2, SO3, SamplingPattern, equispaced_elevation
from .sensing import SensingMatrix, basis_dimension, build_matrix

DEFAULT_SUCCESS_THRESHOLD = 1e-3


class InfeasibleProblemError(ValueError):
    """No coefficient vector satisfies the residual constraint."""


@dataclass
class QCBPOptions:
    max_iter: int = 20000
    gap_tol: float = 1e-9
    feas_tol: float = 1e-8
    check_every: int = 25
    polish: bool = True
    support_tol: float = 1e-6
    # caller-supplied ||A||_2 saves an SVD when one matrix is reused
    opnorm: float | None = None
    # infeasibility certificate costs a least-squares solve; synthetic
    # noiseless problems are feasible by construction and may skip it
    check_feasibility: bool = True


@dataclass
class RecoveryProblem:
    """Measurements y = A g + noise with residual bound eta.

    The caller applies any sqrt(m)-eps scaling before constructing the
    problem; the solver sees a plain scalar bound.
    """

    a: np.ndarray
    y: np.ndarray
    eta: float = 0.0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=complex)
        self.y = np.asarray(self.y, dtype=complex)
        if self.a.ndim != 2 or self.y.shape != (self.a.shape[0],):
            raise ValueError("matrix/measurement shapes inconsistent")
        if self.eta < 0.0:
            raise ValueError("noise bound eta must be >= 0")

    @classmethod
    def from_matrix(cls, matrix: SensingMatrix, y, eta: float = 0.0):
        return cls(a=matrix.entries, y=y, eta=eta)


@dataclass
class RecoveryResult:
    z: np.ndarray
    residual: float
    iterations: int
    support: np.ndarray
    converged: bool

    @property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.z)))


@dataclass
class SparseSignalSpec:
    """Recipe for a planted sparse coefficient vector."""

    n: int
    s: int
    distribution: str = "complex_gaussian"
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.s <= self.n:
            raise ValueError("need 0 <= s <= n")
        if self.distribution not in ("complex_gaussian", "real_gaussian"):
            raise ValueError(f"unknown distribution {self.distribution!r}")

    def generate(self) -> np.ndarray:
        """Exactly s-sparse vector; support uniform, amplitudes Gaussian."""
        rng = np.random.Generator(np.random.Philox(key=int(self.seed)))
        z = np.zeros(self.n, dtype=complex)
        if self.s == 0:
            return z
        support = rng.choice(self.n, size=self.s, replace=False)
        if self.distribution == "complex_gaussian":
            vals = (rng.standard_normal(self.s) + 1j * rng.standard_normal(self.s)) / math.sqrt(2.0)
        else:
            vals = rng.standard_normal(self.s).astype(complex)
        z[support] = vals
        return z


def _soft_threshold(z: np.ndarray, tau: float) -> np.ndarray:
    mag = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mag > tau, 1.0 - tau / np.where(mag > 0, mag, 1.0), 0.0)
    return z * scale


def _support_of(z: np.ndarray, tol: float) -> np.ndarray:
    mag = np.abs(z)
    top = mag.max() if mag.size else 0.0
    if top == 0.0:
        return np.array([], dtype=int)
    return np.flatnonzero(mag > tol * top)


def _polish(a, y, eta, z, l1_now, support_tol):
    """Least-squares refit on the detected support.

    Kept only when it stays feasible and does not increase the l1
    objective, so qcbp semantics are preserved.
    """
    supp = _support_of(z, support_tol)
    if supp.size == 0 or supp.size > a.shape[0]:
        return z
    sub = a[:, supp]
    zs, *_ = np.linalg.lstsq(sub, y, rcond=None)
    cand = np.zeros_like(z)
    cand[supp] = zs
    res = np.linalg.norm(a @ cand - y)
    feas_slack = 1e-12 * max(1.0, np.linalg.norm(y))
    if res <= eta + max(feas_slack, 1e-10) and np.sum(np.abs(cand)) <= l1_now + 1e-12:
        return cand
    return z


def qcbp_solve(prob: RecoveryProblem, opts: QCBPOptions | None = None) -> RecoveryResult:
    """min ||z||_1 subject to ||A z - y||_2 <= eta, complex throughout.

    Chambolle-Pock primal-dual iteration: the dual ascent projects onto
    the eta-ball around y, the primal descent soft-thresholds complex
    moduli.  Steps tau = sigma = 0.99 / ||A||.  Stops when the iterate is
    feasible and the scaled duality gap falls below gap_tol.  Raises
    InfeasibleProblemError when even the least-squares residual exceeds
    eta (certificate, not a heuristic).
    """
    opts = opts or QCBPOptions()
    a, y, eta = prob.a, prob.y, prob.eta
    m, n = a.shape
    ynorm = np.linalg.norm(y)
    if ynorm <= eta:
        return RecoveryResult(
            z=np.zeros(n, dtype=complex), residual=float(ynorm),
            iterations=0, support=np.array([], dtype=int), converged=True,
        )
    if opts.check_feasibility:
        min_res = np.linalg.norm(a @ np.linalg.lstsq(a, y, rcond=None)[0] - y)
        if min_res > eta + opts.feas_tol * max(1.0, ynorm) + 1e-9:
            raise InfeasibleProblemError(
                f"least-squares residual {min_res:.3e} exceeds eta={eta:.3e}"
            )

    opnorm = opts.opnorm if opts.opnorm is not None else np.linalg.norm(a, 2)
    step = 0.99 / opnorm
    tau = sigma = step
    z = np.zeros(n, dtype=complex)
    zbar = z.copy()
    u = np.zeros(m, dtype=complex)
    ah = a.conj().T
    feas_slack = opts.feas_tol * max(1.0, ynorm)
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        v = u + sigma * (a @ zbar)
        # prox of the conjugate of the eta-ball indicator around y
        w = v / sigma
        diff = w - y
        dn = np.linalg.norm(diff)
        proj = y + (diff * (eta / dn) if dn > eta else diff)
        u = v - sigma * proj
        z_new = _soft_threshold(z - tau * (ah @ u), tau)
        zbar = 2.0 * z_new - z
        z = z_new
        if it % opts.check_every == 0 or it == opts.max_iter:
            res = np.linalg.norm(a @ z - y)
            if res <= eta + feas_slack:
                scale = max(1.0, float(np.max(np.abs(ah @ u))))
                uf = u / scale
                dual = -np.real(np.vdot(uf, y)) - eta * np.linalg.norm(uf)
                primal = float(np.sum(np.abs(z)))
                gap = abs(primal - dual) / max(1.0, abs(dual))
                if gap <= opts.gap_tol:
                    converged = True
                    break
    if opts.polish:
        z = _polish(a, y, eta, z, float(np.sum(np.abs(z))), opts.support_tol)
    residual = float(np.linalg.norm(a @ z - y))
    return RecoveryResult(
        z=z,
        residual=residual,
        iterations=it,
        support=_support_of(z, opts.support_tol),
        converged=converged and residual <= eta + feas_slack,
    )


def omp_solve(a, y, s: int | None = None, eta: float = 0.0, support_tol: float = 1e-8) -> RecoveryResult:
    """Orthogonal matching pursuit with complex correlations.

    Greedily selects argmax |a_q^H r| / ||a_q||, refits by least squares
    on the accumulated support, and stops at s atoms or when the residual
    drops to eta.  A rank-deficient selected submatrix is solved in the
    minimum-norm sense and flagged by converged=False.
    """
    a = np.asarray(a, dtype=complex)
    y = np.asarray(y, dtype=complex)
    m, n = a.shape
    if s is None:
        s = m
    if s > min(m, n):
        raise ValueError("target sparsity exceeds min(m, N)")
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("zero column in OMP dictionary")
    resid = y.copy()
    support: list[int] = []
    z = np.zeros(n, dtype=complex)
    rank_ok = True
    it = 0
    for it in range(1, s + 1):
        scores = np.abs(a.conj().T @ resid) / norms
        scores[support] = -1.0
        q = int(np.argmax(scores))
        support.append(q)
        sub = a[:, support]
        sol, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
        if rank < len(support):
            rank_ok = False
        resid = y - sub @ sol
        if np.linalg.norm(resid) <= max(eta, support_tol * max(1.0, np.linalg.norm(y))):
            break
    z[support] = sol
    return RecoveryResult(
        z=z,
        residual=float(np.linalg.norm(resid)),
        iterations=it,
        support=np.array(sorted(support), dtype=int),
        converged=rank_ok,
    )


# --- phase transition experiments ------------------------------------------

RANDOM_FAMILIES = ("uniform", "tan13")


def make_pattern(family: str, m: int, domain: str, bandwidth: int, seed: int,
                 optimizer: OptimizerConfig | None = None,
                 restarts: int | None = None) -> SamplingPattern:
    """Pattern factory shared by experiments.

    ``proposed`` is the equispaced-elevation pattern with coherence-
    minimized azimuths (and polarizations); regular families are the
    deterministic constructions; ``uniform``/``tan13`` are the random
    ensembles (these are the families that get preconditioned in
    recovery experiments).
    """
    if family == "proposed":
        cfg = optimizer or OptimizerConfig()
        cfg = OptimizerConfig(
            delta0=cfg.delta0, decay=cfg.decay, max_iter=cfg.max_iter,
            tol=cfg.tol, seed=seed, min_delta=cfg.min_delta,
        )
        from .optimize import DEFAULT_RESTARTS

        trace = multistart_pattern_search(
            equispaced_elevation(m), domain, bandwidth, cfg,
            restarts=restarts or DEFAULT_RESTARTS,
        )
        return trace.final_pattern
    if family in pat.REGULAR_KINDS:
        return pat.regular_pattern(family, m, domain)
    if family in RANDOM_FAMILIES:
        return pat.random_pattern(family, m, domain, seed)
    raise ValueError(f"unknown pattern family {family!r}")


def _trial_seed(seed: int, m: int, s: int, trial: int) -> int:
    return (seed * 1000003 + m * 10007 + s * 101 + trial) % (2**63)


@dataclass
class PhaseTransitionGrid:
    family: str
    domain: str
    bandwidth: int
    m_grid: list
    s_grid: list
    trials: int
    successes: np.ndarray
    failures_errored: np.ndarray = field(default=None)

    @property
    def rates(self) -> np.ndarray:
        return self.successes / float(self.trials)

    def boundary(self, level: float = 0.5) -> list:
        """Largest s per m with success rate >= level (-1 if none)."""
        out = []
        for i, _ in enumerate(self.m_grid):
            good = [s for j, s in enumerate(self.s_grid) if self.rates[i, j] >= level]
            out.append(max(good) if good else -1)
        return out

    def csv_lines(self):
        yield "# schema: m,s,trials,successes,rate"
        for i, m in enumerate(self.m_grid):
            for j, s in enumerate(self.s_grid):
                yield f"{m},{s},{self.trials},{int(self.successes[i, j])},{self.rates[i, j]:.6g}"


def phase_transition(
    domain: str,
    bandwidth: int,
    family: str,
    m_grid,
    s_grid,
    trials: int = 50,
    seed: int = 0,
    solver: str = "qcbp",
    success_threshold: float = DEFAULT_SUCCESS_THRESHOLD,
    qcbp_opts: QCBPOptions | None = None,
    optimizer: OptimizerConfig | None = None,
    restarts: int | None = None,
) -> PhaseTransitionGrid:
    """Success-rate grid over (m, s) cells for one pattern family.

    Per cell: generate the pattern (random families preconditioned per
    the random-sampling recovery guarantee), plant s-sparse Gaussian
    coefficients, solve noiseless, and score success as relative l2
    error <= threshold.  Solver errors count as failed trials.  Fully
    deterministic: trial streams derive from (seed, m, s, trial).
    """
    if solver not in ("qcbp", "omp"):
        raise ValueError(f"unknown solver {solver!r}")
    m_grid = [int(m) for m in m_grid]
    s_grid = [int(s) for s in s_grid]
    if not m_grid or not s_grid or trials < 1:
        raise ValueError("grids must be nonempty and trials >= 1")
    n = basis_dimension(domain, bandwidth)
    successes = np.zeros((len(m_grid), len(s_grid)))
    errored = np.zeros((len(m_grid), len(s_grid)))
    base_opts = qcbp_opts or QCBPOptions(max_iter=4000, gap_tol=1e-7, check_every=25)
    for i, m in enumerate(m_grid):
        pattern = make_pattern(family, m, domain, bandwidth, seed, optimizer, restarts)
        precondition = family in RANDOM_FAMILIES
        matrix = build_matrix(pattern, bandwidth, precondition=precondition)
        raw = build_matrix(pattern, bandwidth, precondition=False) if precondition else matrix
        opts = QCBPOptions(
            max_iter=base_opts.max_iter, gap_tol=base_opts.gap_tol,
            feas_tol=base_opts.feas_tol, check_every=base_opts.check_every,
            polish=base_opts.polish, support_tol=base_opts.support_tol,
            opnorm=float(np.linalg.norm(matrix.entries, 2)),
            check_feasibility=False,
        )
        for j, s in enumerate(s_grid):
            for trial in range(trials):
                spec = SparseSignalSpec(n=n, s=s, seed=_trial_seed(seed, m, s, trial))
                g = spec.generate()
                y = raw.entries @ g
                if precondition:
                    y = y * np.sqrt(np.sin(pattern.thetas))
                try:
                    if solver == "qcbp":
                        res = qcbp_solve(RecoveryProblem(matrix.entries, y, 0.0), opts)
                    else:
                        res = omp_solve(matrix.entries, y, s=min(max(s, 1), min(m, n)))
                except (InfeasibleProblemError, np.linalg.LinAlgError):
                    errored[i, j] += 1
                    continue
                gn = np.linalg.norm(g)
                err = np.linalg.norm(res.z - g) / gn if gn > 0 else np.linalg.norm(res.z)
                if err <= success_threshold:
                    successes[i, j] += 1
    return PhaseTransitionGrid(
        family=family,
        domain=domain,
        bandwidth=bandwidth,
        m_grid=m_grid,
        s_grid=s_grid,
        trials=trials,
        successes=successes,
        failures_errored=errored,
    )
