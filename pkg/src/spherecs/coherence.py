"""Mutual coherence analysis of sensing matrices.

Computes the exact mutual coherence from the dense Gram matrix, the
elevation-only lower bound that holds for every azimuth/polarization
choice, the Welch bound, a Wigner-3j decomposition of Gram entries that
serves as an independent oracle, and the modular-symmetry test that
certifies full coherence for symmetric azimuth/polarization grids.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import specfun
from .patterns import S2, SO3, SamplingPattern
from .sensing import SensingMatrix

DEFAULT_CONGRUENCE_TOL = 1e-9
DEFAULT_ORTHOGONALITY_TOL = 1e-10


@dataclass
class CoherenceReport:
    """Coherence value with its argmax pair and the two lower bounds."""

    mu: float
    argmax_pair: tuple[int, int]
    elevation_lower_bound: float
    welch_bound: float
    gram_time: float

    def csv_row(self, matrix: SensingMatrix, pattern_name: str = "") -> str:
        """Flat CSV row: m,N,B,domain,pattern,mu,q,r,lb_elev,welch."""
        name = pattern_name or matrix.pattern.provenance.get("generator", "")
        return ",".join([
            str(matrix.m),
            str(matrix.n_cols),
            str(matrix.bandwidth),
            matrix.pattern.domain,
            name,
            f"{self.mu:.17g}",
            str(self.argmax_pair[0]),
            str(self.argmax_pair[1]),
            f"{self.elevation_lower_bound:.17g}",
            f"{self.welch_bound:.17g}",
        ])


def welch_bound(m: int, n: int) -> float:
    """Universal coherence lower bound sqrt((N-m)/(m(N-1))), floored at 0."""
    if m < 1 or n < 2:
        raise ValueError("need m >= 1 rows and N >= 2 columns")
    return max(0.0, math.sqrt((n - m) / (m * (n - 1.0))))


def coherence_from_gram(gram: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Maximum normalized off-diagonal modulus of a Gram matrix."""
    norms = np.sqrt(np.real(np.diag(gram)))
    if np.any(norms <= 0.0):
        raise ValueError("zero column: normalized coherence undefined")
    scaled = np.abs(gram) / np.outer(norms, norms)
    np.fill_diagonal(scaled, 0.0)
    flat = int(np.argmax(scaled))
    q, r = divmod(flat, scaled.shape[1])
    if q > r:
        q, r = r, q
    return float(scaled[q, r]), (q, r)


def mutual_coherence(matrix: SensingMatrix) -> CoherenceReport:
    """Exact mutual coherence over all column pairs of the matrix.

    Builds the dense Gram A^H A and maximizes |<a_q, a_r>| / (|a_q||a_r|)
    over the upper triangle; no approximate shortcuts.  Also populates
    the Welch bound and the elevation-only lower bound of the pattern.
    """
    a = matrix.entries
    if a.shape[0] < 1 or a.shape[1] < 2:
        raise ValueError("need m >= 1 and N >= 2")
    t0 = time.perf_counter()
    gram = a.conj().T @ a
    mu, pair = coherence_from_gram(gram)
    elapsed = time.perf_counter() - t0
    lb = elevation_lower_bound(
        matrix.pattern.thetas, matrix.bandwidth, matrix.pattern.domain
    )
    return CoherenceReport(
        mu=mu,
        argmax_pair=pair,
        elevation_lower_bound=lb,
        welch_bound=welch_bound(matrix.m, matrix.n_cols),
        gram_time=elapsed,
    )


def _equal_order_max(vectors: np.ndarray, ls: list[int]) -> tuple[float, tuple]:
    """Max normalized |inner product| over distinct-degree vector pairs.

    ``vectors`` has shape (len(ls), m).  Pairs involving a numerically
    zero vector are skipped; the caller decides whether none-left is an
    error.
    """
    norms = np.linalg.norm(vectors, axis=1)
    ok = norms > 0.0
    best = -1.0
    best_pair = None
    idx = np.flatnonzero(ok)
    if len(idx) >= 2:
        v = vectors[idx] / norms[idx, None]
        g = np.abs(v @ v.T)
        np.fill_diagonal(g, -1.0)
        flat = int(np.argmax(g))
        i, j = divmod(flat, g.shape[1])
        best = float(g[i, j])
        best_pair = (ls[idx[i]], ls[idx[j]])
    return best, best_pair


def elevation_lower_bound(thetas, bandwidth: int, domain: str = S2) -> float:
    """Coherence lower bound from the elevations alone.

    Once the elevations are fixed, every equal-order column pair has an
    azimuth/polarization-independent normalized inner product; the max
    over those pairs bounds the coherence of any matrix built on these
    elevations.  Degenerate all-zero sample vectors are skipped; if no
    valid pair remains the bound is undefined and an error is raised.
    """
    t = np.asarray(thetas, dtype=float)
    if bandwidth < 2:
        raise ValueError("lower bound needs bandwidth >= 2")
    x = np.cos(t)
    found_any = False
    best = -1.0
    if domain == S2:
        table = specfun._legendre_norm_table(bandwidth, x)
        for k in range(bandwidth - 1):
            ls = list(range(k, bandwidth))
            if len(ls) < 2:
                continue
            val, pair = _equal_order_max(table[ls, k, :], ls)
            if pair is not None:
                found_any = True
                best = max(best, val)
    elif domain == SO3:
        B = bandwidth
        table = specfun._wigner_d_norm_table(B, t)
        for k in range(-(B - 1), B):
            for n in range(-(B - 1), B):
                lmin = max(abs(k), abs(n))
                ls = list(range(lmin, B))
                if len(ls) < 2:
                    continue
                val, pair = _equal_order_max(table[ls, k + B - 1, n + B - 1, :], ls)
                if pair is not None:
                    found_any = True
                    best = max(best, val)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    if not found_any:
        raise ValueError("all equal-order sample vectors degenerate; bound undefined")
    return best


def legendre_pair_bound(thetas, bandwidth: int) -> float:
    """The (B-1, B-3) Legendre specialization of the elevation bound.

    Cosine-symmetric elevations force the (B-1, B-2) product sum to
    vanish, which is why the reported specialization skips to degree B-3.
    """
    if bandwidth < 3:
        raise ValueError("specialization needs bandwidth >= 3")
    t = np.asarray(thetas, dtype=float)
    x = np.cos(t)
    table = specfun._legendre_norm_table(bandwidth, x)
    va = table[bandwidth - 1, 0, :]
    vb = table[bandwidth - 3, 0, :]
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("degenerate zero-norm Legendre sample vector")
    return float(abs(np.dot(va, vb)) / (na * nb))


def gram_via_3j(idx1, idx2, pattern: SamplingPattern):
    """Gram entry sum_p conj(f1(p)) f2(p) via the Wigner-3j expansion.

    Expands the product of two basis functions into single functions of
    degree l_hat = |l2-l1| .. l1+l2 weighted by two 3j symbols, then sums
    the single functions over the pattern.  Independent of the direct
    column inner product, which makes it an oracle for the Gram matrix.
    """
    i1 = specfun._as_index(idx1)
    i2 = specfun._as_index(idx2)
    l1, k1, n1 = i1.l, i1.k, i1.n
    l2, k2, n2 = i2.l, i2.k, i2.n
    khat = k2 - k1
    nhat = n2 - n1
    total = 0.0 + 0.0j
    if pattern.domain == SO3:
        phase = (-1.0) ** ((k2 + n2) & 1)
        for lh in range(abs(l2 - l1), l1 + l2 + 1):
            if abs(khat) > lh or abs(nhat) > lh:
                continue
            w1 = specfun.wigner3j(l1, l2, lh, -n1, n2, -nhat)
            if w1 == 0.0:
                continue
            w2 = specfun.wigner3j(l1, l2, lh, -k1, k2, -khat)
            if w2 == 0.0:
                continue
            scale = math.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * lh + 1) / (8.0 * math.pi**2))
            ssum = np.sum(specfun.wigner_D((lh, khat, nhat), pattern.thetas, pattern.phis, pattern.chis))
            total += scale * w1 * w2 * ssum
        return complex(phase * total)
    if pattern.domain == S2:
        if n1 != 0 or n2 != 0:
            raise ValueError("S2 basis indices must have n = 0")
        phase = (-1.0) ** (k2 & 1)
        for lh in range(abs(l2 - l1), l1 + l2 + 1):
            if abs(khat) > lh:
                continue
            w0 = specfun.wigner3j(l1, l2, lh, 0, 0, 0)
            if w0 == 0.0:
                continue
            w2 = specfun.wigner3j(l1, l2, lh, -k1, k2, -khat)
            if w2 == 0.0:
                continue
            scale = math.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * lh + 1) / (4.0 * math.pi))
            ssum = np.sum(specfun.spherical_harmonic(lh, khat, pattern.thetas, pattern.phis))
            total += scale * w0 * w2 * ssum
        return complex(phase * total)
    raise ValueError(f"unknown domain {pattern.domain!r}")


def _circular_spread(angles: np.ndarray) -> float:
    """Length of the shortest arc containing all angles (mod 2 pi)."""
    a = np.sort(np.mod(angles, 2.0 * math.pi))
    gaps = np.diff(np.concatenate([a, [a[0] + 2.0 * math.pi]]))
    return float(2.0 * math.pi - np.max(gaps))


def detect_modular_symmetry(
    pattern: SamplingPattern,
    bandwidth: int,
    tol: float = DEFAULT_CONGRUENCE_TOL,
    orders=None,
):
    """Orders whose doubled-angle congruence holds across all samples.

    On S2 returns the orders k in 1..B-1 with 2 k phi_i = 2 k phi_j
    (mod 2 pi) for every sample pair, within tol; on SO3 returns the
    order pairs (k, n) with 2 k phi_i + 2 n chi_i congruent across all
    samples.  Either family of columns (l, k[, n]) and (l, -k[, -n]) is
    then proportional, so a nonempty result certifies coherence 1 (up to
    tol).  Antipodal pairs are reported once, with k > 0 or (k = 0,
    n > 0).  ``orders`` restricts the scan (iterable of k on S2, of
    (k, n) pairs on SO3).
    """
    if pattern.m < 1:
        raise ValueError("empty pattern")
    hits = []
    if pattern.domain == S2:
        ks = range(1, bandwidth) if orders is None else orders
        for k in ks:
            if _circular_spread(2.0 * k * pattern.phis) <= tol:
                hits.append(int(k))
        return hits
    if orders is None:
        scan = [
            (k, n)
            for k in range(0, bandwidth)
            for n in range(-(bandwidth - 1), bandwidth)
            if (k > 0 or (k == 0 and n > 0))
        ]
    else:
        scan = orders
    for k, n in scan:
        if _circular_spread(2.0 * (k * pattern.phis + n * pattern.chis)) <= tol:
            hits.append((int(k), int(n)))
    return hits
