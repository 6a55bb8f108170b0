"""Coherence minimization by derivative-free pattern search.

Elevations stay fixed; the search walks the azimuths (and polarizations
on the rotation group) through +/- delta coordinate probes, accepting the
first improving candidate in a fixed scan order and shrinking delta when
a full scan fails.  The stopping target is the elevation-only coherence
lower bound, which the azimuth choice cannot beat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .coherence import coherence_from_gram, elevation_lower_bound
from .patterns import S2, SO3, SamplingPattern
from .sensing import build_matrix, enumerate_basis

TWO_PI = 2.0 * math.pi

DEFAULT_RESTARTS = 4
_REFRESH_EVERY = 128


@dataclass(frozen=True)
class OptimizerConfig:
    """Pattern-search hyperparameters.

    ``delta0`` is the initial probe step, shrunk by ``decay`` on every
    failed scan; the run stops when the coherence is within ``tol`` of
    the elevation lower bound, when ``max_iter`` is reached, or when the
    step falls below ``min_delta`` (further probes would be below angular
    resolution; set 0 to disable).
    """

    delta0: float = math.pi / 8.0
    decay: float = 0.5
    max_iter: int = 5000
    tol: float = 1e-4
    seed: int = 0
    min_delta: float = 1e-6

    def __post_init__(self):
        if not self.delta0 > 0.0:
            raise ValueError("delta0 must be positive")
        if not 0.0 < self.decay < 1.0:
            raise ValueError("decay must lie in (0, 1)")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    mu: float
    delta: float
    accepted: bool


@dataclass
class OptimizerTrace:
    """Per-iteration history plus the final pattern and coherence."""

    records: list
    final_pattern: SamplingPattern
    final_mu: float
    stop_reason: str
    mu_lower_bound: float

    def csv_lines(self):
        yield "# schema: iter,mu,delta,accepted"
        for r in self.records:
            yield f"{r.iteration},{r.mu:.17g},{r.delta:.17g},{int(r.accepted)}"


class _CoherenceObjective:
    """Incremental coherence of a matrix with fixed elevations.

    The matrix factorizes as A[p,q] = R[p,q] * exp(i (cphi[q] phi_p +
    cchi[q] chi_p)) with R real and depending on theta only, so column
    norms never change and a single-coordinate move is a rank-one Gram
    update.  ``refresh`` recomputes everything to cap drift.
    """

    def __init__(self, thetas: np.ndarray, domain: str, bandwidth: int):
        self.domain = domain
        self.m = len(thetas)
        enum = enumerate_basis(domain, bandwidth)
        if domain == S2:
            table = specfun._legendre_norm_table(bandwidth, np.cos(thetas))
            radial = np.empty((self.m, enum.size))
            for q in range(enum.size):
                l, k, _ = enum.triple(q)
                radial[:, q] = table[l, abs(k)]
                if k < 0 and (k & 1):
                    radial[:, q] = -radial[:, q]
            self.cphi = enum.ks.astype(float)
            self.cchi = np.zeros(enum.size)
        else:
            table = specfun._wigner_d_norm_table(bandwidth, thetas)
            B = bandwidth
            radial = np.empty((self.m, enum.size))
            for q in range(enum.size):
                l, k, n = enum.triple(q)
                radial[:, q] = table[l, k + B - 1, n + B - 1]
            self.cphi = -enum.ks.astype(float)
            self.cchi = -enum.ns.astype(float)
        self.radial = radial
        norms = np.linalg.norm(radial, axis=0)
        if np.any(norms == 0.0):
            raise ValueError("zero basis column on these elevations")
        w = 1.0 / np.outer(norms, norms)
        np.fill_diagonal(w, 0.0)
        self.w2 = w * w
        self.angles = None
        self.a = None
        self.gram = None

    def _row(self, p: int, phi: float, chi: float) -> np.ndarray:
        return self.radial[p] * np.exp(1j * (self.cphi * phi + self.cchi * chi))

    def _angles_of(self, p: int):
        if self.domain == S2:
            return self.angles[p], 0.0
        return self.angles[p], self.angles[self.m + p]

    def set_angles(self, angles: np.ndarray) -> float:
        self.angles = np.array(angles, dtype=float)
        return self.refresh()

    def refresh(self) -> float:
        phis = self.angles[: self.m]
        chis = self.angles[self.m:] if self.domain == SO3 else np.zeros(self.m)
        phase = np.exp(1j * (np.outer(phis, self.cphi) + np.outer(chis, self.cchi)))
        self.a = self.radial * phase
        self.gram = self.a.conj().T @ self.a
        return self._mu_of(self.gram)

    def _mu_of(self, gram: np.ndarray) -> float:
        mag2 = gram.real**2 + gram.imag**2
        return math.sqrt(float(np.max(mag2 * self.w2)))

    def coordinate_base(self, coord: int):
        """Gram minus the contribution of the row touched by a coordinate."""
        p = coord % self.m
        old = self.a[p]
        return p, self.gram - np.outer(np.conj(old), old)

    def candidate(self, coord: int, p: int, base: np.ndarray, value: float):
        """Coherence after moving one coordinate to ``value``."""
        phi, chi = self._angles_of(p)
        if coord < self.m:
            phi = value
        else:
            chi = value
        r_new = self._row(p, phi, chi)
        gram_new = base + np.outer(np.conj(r_new), r_new)
        return self._mu_of(gram_new), r_new, gram_new

    def commit(self, coord: int, p: int, value: float, r_new: np.ndarray, gram_new: np.ndarray):
        self.angles[coord] = value
        self.a[p] = r_new
        self.gram = gram_new


def evaluate_candidate(thetas, phichi, domain: str, bandwidth: int) -> float:
    """Coherence of the matrix built from fixed elevations and angles.

    Full rebuild through the sensing module; the optimizer's incremental
    updates must agree with this within 1e-12.
    """
    thetas = np.asarray(thetas, dtype=float)
    phichi = np.asarray(phichi, dtype=float)
    m = len(thetas)
    if domain == S2:
        if phichi.shape != (m,):
            raise ValueError(f"expected {m} azimuths, got shape {phichi.shape}")
        pts = np.column_stack([thetas, np.mod(phichi, TWO_PI)])
    elif domain == SO3:
        if phichi.shape != (2 * m,):
            raise ValueError(f"expected {2 * m} angles (phi then chi), got {phichi.shape}")
        pts = np.column_stack([
            thetas,
            np.mod(phichi[:m], TWO_PI),
            np.mod(phichi[m:], TWO_PI),
        ])
    else:
        raise ValueError(f"unknown domain {domain!r}")
    pat = SamplingPattern(domain=domain, points=pts, provenance={"generator": "manual"})
    a = build_matrix(pat, bandwidth).entries
    mu, _ = coherence_from_gram(a.conj().T @ a)
    return mu


def pattern_search(thetas, domain: str, bandwidth: int, config: OptimizerConfig | None = None) -> OptimizerTrace:
    """Minimize coherence over azimuths (and polarizations) by probing.

    Starts from seeded uniform-random angles, scans candidates
    angle +/- delta coordinate-wise (ascending index, + before -, phi
    block before chi block) and accepts the first strict improvement;
    a scan with no improvement shrinks delta by the decay factor.
    Deterministic for fixed (thetas, config).
    """
    config = config or OptimizerConfig()
    thetas = np.asarray(thetas, dtype=float)
    m = len(thetas)
    if m < 2:
        raise ValueError("need at least two sample points")
    mu_lb = elevation_lower_bound(thetas, bandwidth, domain)
    rng = np.random.Generator(np.random.Philox(key=int(config.seed)))
    dim = m if domain == S2 else 2 * m
    angles = rng.uniform(0.0, TWO_PI, size=dim)

    obj = _CoherenceObjective(thetas, domain, bandwidth)
    mu = obj.set_angles(angles)

    records = []
    delta = config.delta0
    stop_reason = "k_max"
    commits_since_refresh = 0
    for it in range(config.max_iter):
        if abs(mu - mu_lb) <= config.tol:
            stop_reason = "tolerance"
            break
        if config.min_delta > 0.0 and delta < config.min_delta:
            stop_reason = "delta_floor"
            break
        if commits_since_refresh >= _REFRESH_EVERY:
            obj.refresh()
            commits_since_refresh = 0
        accepted = False
        for coord in range(dim):
            p, base = obj.coordinate_base(coord)
            for sign in (1.0, -1.0):
                value = math.fmod(obj.angles[coord] + sign * delta, TWO_PI)
                if value < 0.0:
                    value += TWO_PI
                mu_c, r_new, gram_new = obj.candidate(coord, p, base, value)
                if mu_c < mu:
                    obj.commit(coord, p, value, r_new, gram_new)
                    mu = mu_c
                    commits_since_refresh += 1
                    accepted = True
                    break
            if accepted:
                break
        if not accepted:
            delta *= config.decay
        records.append(IterationRecord(iteration=it, mu=mu, delta=delta, accepted=accepted))

    final_mu = obj.refresh()
    phis = np.mod(obj.angles[:m], TWO_PI)
    provenance = {
        "generator": "optimized",
        "domain": domain,
        "bandwidth": bandwidth,
        "m": m,
        "thetas": [float(t) for t in thetas],
        "config": {
            "delta0": config.delta0,
            "decay": config.decay,
            "max_iter": config.max_iter,
            "tol": config.tol,
            "seed": config.seed,
            "min_delta": config.min_delta,
        },
    }
    if domain == S2:
        pts = np.column_stack([thetas, phis])
    else:
        pts = np.column_stack([thetas, phis, np.mod(obj.angles[m:], TWO_PI)])
    pattern = SamplingPattern(domain=domain, points=pts, provenance=provenance)
    return OptimizerTrace(
        records=records,
        final_pattern=pattern,
        final_mu=final_mu,
        stop_reason=stop_reason,
        mu_lower_bound=mu_lb,
    )


def multistart_pattern_search(
    thetas,
    domain: str,
    bandwidth: int,
    config: OptimizerConfig | None = None,
    restarts: int = DEFAULT_RESTARTS,
) -> OptimizerTrace:
    """Best-of pattern search over restart seeds config.seed + j.

    The probes have no global-optimality guarantee, so several seeded
    starts are run and the lowest final coherence wins.  Stops early if
    a restart reaches the lower-bound tolerance.
    """
    config = config or OptimizerConfig()
    best = None
    for j in range(max(1, restarts)):
        cfg = OptimizerConfig(
            delta0=config.delta0,
            decay=config.decay,
            max_iter=config.max_iter,
            tol=config.tol,
            seed=config.seed + j,
            min_delta=config.min_delta,
        )
        trace = pattern_search(thetas, domain, bandwidth, cfg)
        if best is None or trace.final_mu < best.final_mu:
            best = trace
        if best.stop_reason == "tolerance":
            break
    best.final_pattern.provenance["restarts"] = max(1, restarts)
    return best


def regenerate_optimized(provenance: dict) -> SamplingPattern:
    """Re-run the deterministic search recorded in a pattern provenance."""
    cfg = OptimizerConfig(**provenance["config"])
    thetas = np.asarray(provenance["thetas"], dtype=float)
    restarts = provenance.get("restarts")
    if restarts:
        trace = multistart_pattern_search(
            thetas, provenance["domain"], provenance["bandwidth"], cfg, restarts
        )
    else:
        trace = pattern_search(thetas, provenance["domain"], provenance["bandwidth"], cfg)
    return trace.final_pattern
