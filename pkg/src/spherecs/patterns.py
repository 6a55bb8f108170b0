"""Sampling pattern generators for the sphere and the rotation group.

Provides the regular patterns compared in the coherence and recovery
experiments (equiangular, spiral, Fibonacci, Hammersley), the equispaced
elevation grid, two random ensembles (uniform and the |tan theta|^(1/3)
density), and the cosine-symmetry predicate.

Randomness comes from numpy's Philox counter-based generator keyed by the
caller's seed, so every pattern is reproducible bit-for-bit across
platforms from its provenance alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

S2 = "S2"
SO3 = "SO3"

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
# Fractional golden-angle increment 1 - 1/phi, shared by the Fibonacci
# azimuth and our SO3 polarization extension.
_GOLDEN_FRAC = 1.0 - 1.0 / _GOLDEN

REGULAR_KINDS = ("equiangular", "spiral", "fibonacci", "hammersley")


@dataclass(frozen=True)
class SamplePoint:
    """One sample location; chi is present only on the rotation group."""

    theta: float
    phi: float
    chi: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta out of [0, pi]: {self.theta}")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise ValueError(f"phi out of [0, 2 pi): {self.phi}")
        if self.chi is not None and not 0.0 <= self.chi < 2.0 * math.pi:
            raise ValueError(f"chi out of [0, 2 pi): {self.chi}")


@dataclass
class SamplingPattern:
    """Ordered point set with domain tag and regeneration provenance.

    ``points`` has shape (m, 2) on S2 (columns theta, phi) and (m, 3) on
    SO3 (theta, phi, chi).  ``provenance`` holds the generator name and
    every parameter needed to rebuild the identical point list.
    """

    domain: str
    points: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.domain not in (S2, SO3):
            raise ValueError(f"unknown domain {self.domain!r}")
        want = 2 if self.domain == S2 else 3
        if self.points.ndim != 2 or self.points.shape[1] != want:
            raise ValueError(
                f"{self.domain} pattern needs shape (m, {want}), got {self.points.shape}"
            )
        if self.points.shape[0] < 1:
            raise ValueError("pattern needs at least one point")

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def thetas(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def phis(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def chis(self) -> np.ndarray:
        if self.domain != SO3:
            raise ValueError("chi is defined only on SO3")
        return self.points[:, 2]

    def sample_points(self):
        for row in self.points:
            if self.domain == S2:
                yield SamplePoint(row[0], row[1])
            else:
                yield SamplePoint(row[0], row[1], row[2])


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


def equispaced_elevation(m: int) -> np.ndarray:
    """Elevations with cos(theta_p) = (2p - m - 1)/(m - 1), p = 1..m.

    The cosines run -1, ..., 1 with gap exactly 2/(m-1) and are symmetric
    about 0, so theta_1 = pi and theta_m = 0.
    """
    if m < 2:
        raise ValueError(f"need m >= 2 elevations, got {m}")
    p = np.arange(1, m + 1)
    cosines = (2.0 * p - m - 1.0) / (m - 1.0)
    return np.arccos(np.clip(cosines, -1.0, 1.0))


def is_cosine_symmetric(thetas, tol: float = 1e-12) -> bool:
    """True iff the multiset {cos theta_p} equals its negation within tol."""
    t = np.asarray(thetas, dtype=float)
    if t.size == 0:
        raise ValueError("empty elevation list")
    c = np.sort(np.cos(t))
    return bool(np.all(np.abs(c + c[::-1]) <= tol))


def _radical_inverse_base2(i: int) -> float:
    """van der Corput radical inverse of i in base 2."""
    inv = 0.0
    f = 0.5
    while i > 0:
        if i & 1:
            inv += f
        i >>= 1
        f *= 0.5
    return inv


def _wrap(angles: np.ndarray) -> np.ndarray:
    w = np.mod(angles, 2.0 * math.pi)
    # mod can return the period itself through rounding; fold it back.
    w[w >= 2.0 * math.pi] = 0.0
    return w


def _golden_chi(m: int) -> np.ndarray:
    p = np.arange(1, m + 1)
    return _wrap(2.0 * math.pi * p * _GOLDEN_FRAC)


def regular_pattern(kind: str, m: int, domain: str = S2) -> SamplingPattern:
    """Deterministic m-point pattern of the requested construction.

    equiangular: theta_p = pi (p-1)/(m-1), phi_p = 2 pi (p-1)/(m-1) with
        the endpoint 2 pi stored as 0 (wrapped; the duplicate azimuth is
        retained on purpose).
    spiral (Saff-Kuijlaars): h_p = -1 + 2(p-1)/(m-1), theta = arccos h,
        phi_1 = phi_m = 0, phi_p = phi_{p-1} + 3.6 / sqrt(m (1-h_p^2)).
    fibonacci: cos theta_p = 1 - (2p-1)/m, phi_p = 2 pi p (1 - 1/phi).
    hammersley: cos theta_p = 1 - (2p-1)/m, phi_p from the base-2 radical
        inverse of p-1.

    On SO3, chi is a golden-angle sequence for spiral/fibonacci/hammersley
    (our extension; the constructions are S2 constructions) and
    equiangular for the equiangular pattern.
    """
    if kind not in REGULAR_KINDS:
        raise ValueError(f"unsupported pattern kind {kind!r}")
    if m < 2:
        raise ValueError(f"need m >= 2 points, got {m}")
    p = np.arange(1, m + 1)
    if kind == "equiangular":
        thetas = math.pi * (p - 1) / (m - 1)
        phis = _wrap(2.0 * math.pi * (p - 1) / (m - 1))
    elif kind == "spiral":
        h = -1.0 + 2.0 * (p - 1) / (m - 1.0)
        thetas = np.arccos(np.clip(h, -1.0, 1.0))
        phis = np.zeros(m)
        for i in range(1, m - 1):
            phis[i] = phis[i - 1] + 3.6 / math.sqrt(m * (1.0 - h[i] ** 2))
        phis = _wrap(phis)
        phis[m - 1] = 0.0
    else:
        cosines = 1.0 - (2.0 * p - 1.0) / m
        thetas = np.arccos(np.clip(cosines, -1.0, 1.0))
        if kind == "fibonacci":
            phis = _wrap(2.0 * math.pi * p * _GOLDEN_FRAC)
        else:
            phis = 2.0 * math.pi * np.array(
                [_radical_inverse_base2(i) for i in range(m)]
            )
    provenance = {"generator": kind, "m": m, "domain": domain}
    if domain == S2:
        pts = np.column_stack([thetas, phis])
    else:
        if kind == "equiangular":
            chis = _wrap(2.0 * math.pi * (p - 1) / (m - 1))
        else:
            chis = _golden_chi(m)
        pts = np.column_stack([thetas, phis, chis])
    return SamplingPattern(domain=domain, points=pts, provenance=provenance)


# --- |tan theta|^(1/3) sampling -------------------------------------------

_TAN13_KNOTS = 16384

_tan13_cache: dict = {}


def _tan13_g(w: np.ndarray) -> np.ndarray:
    """Integrand after the singularity-removing substitution.

    With delta = |pi/2 - theta| and delta = w^(3/2), the elevation density
    |tan theta|^(1/3) d(theta) becomes g(w) dw with
    g(w) = (3/2) w^(1/2) cot(w^(3/2))^(1/3), smooth on [0, (pi/2)^(2/3)]
    and g(0) = 3/2.  The 1/3 exponent keeps the pi/2 singularity
    integrable; this substitution removes it entirely.
    """
    g = np.full_like(w, 1.5)
    nz = w > 0.0
    d = w[nz] ** 1.5
    g[nz] = 1.5 * np.sqrt(w[nz]) * (np.cos(d) / np.sin(d)) ** (1.0 / 3.0)
    return g


_GL5_NODES = np.array([
    -0.9061798459386640, -0.5384693101056831, 0.0,
    0.5384693101056831, 0.9061798459386640,
])
_GL5_WEIGHTS = np.array([
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
    0.4786286704993665, 0.2369268850561891,
])


def _gl5_segments(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """5-point Gauss-Legendre integrals of _tan13_g over segments [a, b]."""
    mid = 0.5 * (a + b)
    rad = 0.5 * (b - a)
    nodes = mid[:, None] + rad[:, None] * _GL5_NODES[None, :]
    vals = _tan13_g(np.clip(nodes, 0.0, None))
    return rad * (vals @ _GL5_WEIGHTS)


def _tan13_table():
    """Equispaced-knot CDF table of the |tan theta|^(1/3) density.

    Each knot interval is integrated in the substituted coordinate
    w = |pi/2 - theta|^(2/3) where the integrand is smooth; intervals
    straddling pi/2 are split there.  Results are cached after the first
    call and read-only afterwards.
    """
    if "knots" in _tan13_cache:
        return _tan13_cache["knots"], _tan13_cache["cdf"]
    half = math.pi / 2.0
    knots = np.linspace(0.0, math.pi, _TAN13_KNOTS)
    lo = knots[:-1]
    hi = knots[1:]
    mass = np.zeros(lo.shape)
    below = lo < half
    if np.any(below):
        a = lo[below]
        b = np.minimum(hi[below], half)
        # w decreases as theta rises toward pi/2; swap bounds for sign
        mass[below] += _gl5_segments((half - b) ** (2.0 / 3.0), (half - a) ** (2.0 / 3.0))
    above = hi > half
    if np.any(above):
        a = np.maximum(lo[above], half)
        b = hi[above]
        mass[above] += _gl5_segments((a - half) ** (2.0 / 3.0), (b - half) ** (2.0 / 3.0))
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    cdf /= cdf[-1]
    _tan13_cache["knots"] = knots
    _tan13_cache["cdf"] = cdf
    return knots, cdf


def _tan13_sampler():
    """Inverse-CDF interpolator (monotone cubic) for the tan13 density."""
    if "inv" not in _tan13_cache:
        knots, cdf = _tan13_table()
        u, idx = np.unique(cdf, return_index=True)
        _tan13_cache["inv"] = PchipInterpolator(u, knots[idx])
    return _tan13_cache["inv"]


def tan13_cdf(thetas) -> np.ndarray:
    """Normalized CDF of the |tan theta|^(1/3) density at given points."""
    knots, cdf = _tan13_table()
    interp = PchipInterpolator(knots, cdf)
    return np.asarray(interp(np.asarray(thetas, dtype=float)))


def random_pattern(measure: str, m: int, domain: str = S2, seed: int = 0) -> SamplingPattern:
    """Random m-point pattern drawn i.i.d. from the named measure.

    ``uniform`` draws theta, phi (and chi) independently uniform on
    [0, pi] and [0, 2 pi); ``tan13`` draws theta from the density
    proportional to |tan theta|^(1/3) via a tabulated inverse CDF, with
    uniform azimuth (and polarization).  Reproducible from the seed
    (Philox counter-based generator).
    """
    if measure not in ("uniform", "tan13"):
        raise ValueError(f"unknown measure {measure!r}")
    if m < 1:
        raise ValueError("need m >= 1 points")
    rng = _rng(seed)
    if measure == "uniform":
        thetas = rng.uniform(0.0, math.pi, size=m)
    else:
        thetas = np.asarray(_tan13_sampler()(rng.uniform(0.0, 1.0, size=m)))
        thetas = np.clip(thetas, 0.0, math.pi)
    phis = rng.uniform(0.0, 2.0 * math.pi, size=m)
    provenance = {"generator": measure, "m": m, "domain": domain, "seed": int(seed)}
    if domain == S2:
        pts = np.column_stack([thetas, phis])
    else:
        chis = rng.uniform(0.0, 2.0 * math.pi, size=m)
        pts = np.column_stack([thetas, phis, chis])
    return SamplingPattern(domain=domain, points=pts, provenance=provenance)


def regenerate(provenance: dict) -> SamplingPattern:
    """Rebuild a pattern bit-identically from its provenance record."""
    gen = provenance["generator"]
    if gen in REGULAR_KINDS:
        return regular_pattern(gen, provenance["m"], provenance["domain"])
    if gen in ("uniform", "tan13"):
        return random_pattern(gen, provenance["m"], provenance["domain"], provenance["seed"])
    if gen == "optimized":
        from . import optimize

        return optimize.regenerate_optimized(provenance)
    raise ValueError(f"cannot regenerate pattern of kind {gen!r}")


def save_pattern(pattern: SamplingPattern, path) -> None:
    """Write a pattern file: provenance headers plus one point per line.

    Lines carry whitespace-separated radians with 17 significant digits,
    ``theta phi`` on S2 and ``theta phi chi`` on SO3.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# domain: {pattern.domain}\n")
        fh.write(f"# provenance: {json.dumps(pattern.provenance, sort_keys=True)}\n")
        for row in pattern.points:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_pattern(path) -> SamplingPattern:
    """Read a pattern file written by :func:`save_pattern`."""
    domain = None
    provenance: dict = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("domain:"):
                    domain = body.split(":", 1)[1].strip()
                elif body.startswith("provenance:"):
                    provenance = json.loads(body.split(":", 1)[1])
                continue
            rows.append([float(tok) for tok in line.split()])
    pts = np.asarray(rows, dtype=float)
    if domain is None:
        domain = S2 if pts.shape[1] == 2 else SO3
    return SamplingPattern(domain=domain, points=pts, provenance=provenance)
