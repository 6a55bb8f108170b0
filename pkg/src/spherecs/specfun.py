"""Special functions on the sphere and the rotation group.

Associated Legendre and Jacobi polynomials, Wigner d- and D-functions,
spherical harmonics, and Wigner 3j symbols.  Angles are radians with the
elevation (colatitude) theta in [0, pi] and azimuth phi / polarization chi
in [0, 2*pi).

Conventions
-----------
* Associated Legendre polynomials include the Condon-Shortley phase
  (-1)**k.  Many external tables omit it; compare with care.
* ``spherical_harmonic`` carries the full orthonormalization factor
  sqrt((2l+1)/(4 pi) * (l-k)!/(l+k)!), giving unit L2 norm on the sphere
  under the measure sin(theta) dtheta dphi (the 1/sqrt(4 pi) is inside).
* ``wigner_D`` carries sqrt((2l+1)/(8 pi^2)) and has unit L2 norm on the
  rotation group under sin(theta) dtheta dphi dchi.
* Negative orders come from the conjugate symmetries
  Y_l^{-k} = (-1)^k conj(Y_l^k) and d_l^{k,n} = (-1)^{n-k} d_l^{-k,-n}.

Everything here is a pure function: scalar angles in, scalar out; numpy
arrays in, arrays out.  The log-factorial table is filled once at import
and read-only afterwards, so concurrent callers never share mutable state.
Integer degrees/orders only (no half-integer angular momenta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_SQRT_4PI = math.sqrt(4.0 * math.pi)

# log(n!) for n = 0 .. _NFACT-1; enough for 3j symbols up to l ~ 120.
_NFACT = 512
_LOG_FACT = np.zeros(_NFACT)
for _n in range(2, _NFACT):
    _LOG_FACT[_n] = _LOG_FACT[_n - 1] + math.log(_n)


@dataclass(frozen=True)
class BasisIndex:
    """Degree/order triple (l, k, n) naming one basis function.

    ``n`` stays 0 on the sphere; on the rotation group it is the second
    order of the Wigner D-function.
    """

    l: int
    k: int
    n: int = 0

    def __post_init__(self):
        if self.l < 0:
            raise ValueError(f"degree l must be >= 0, got {self.l}")
        if abs(self.k) > self.l or abs(self.n) > self.l:
            raise ValueError(
                f"orders must satisfy |k|,|n| <= l, got (l,k,n)=({self.l},{self.k},{self.n})"
            )


@dataclass(frozen=True)
class JacobiParams:
    """Jacobi-polynomial parameters of a Wigner d-function.

    For index (l, k, n): xi = |k-n|, lam = |k+n|, alpha = l - (xi+lam)/2,
    gamma = alpha!(alpha+xi+lam)! / ((alpha+xi)!(alpha+lam)!), and omega is
    +1 for n >= k, (-1)**(n-k) otherwise.
    """

    alpha: int
    xi: int
    lam: int
    gamma: float
    omega: int

    @classmethod
    def from_index(cls, idx: BasisIndex) -> "JacobiParams":
        xi = abs(idx.k - idx.n)
        lam = abs(idx.k + idx.n)
        alpha = idx.l - (xi + lam) // 2
        gamma = math.exp(
            _log_fact(alpha) + _log_fact(alpha + xi + lam)
            - _log_fact(alpha + xi) - _log_fact(alpha + lam)
        )
        omega = 1 if idx.n >= idx.k else (-1) ** ((idx.n - idx.k) & 1)
        return cls(alpha=alpha, xi=xi, lam=lam, gamma=gamma, omega=omega)


def _log_fact(n: int) -> float:
    if n < 0:
        raise ValueError(f"factorial of negative integer {n}")
    if n < _NFACT:
        return float(_LOG_FACT[n])
    return math.lgamma(n + 1.0)


def _as_index(idx) -> BasisIndex:
    if isinstance(idx, BasisIndex):
        return idx
    return BasisIndex(*idx)


def _check_theta(theta):
    t = np.asarray(theta, dtype=float)
    if np.any(t < 0.0) or np.any(t > np.pi):
        raise ValueError("theta must lie in [0, pi]")
    return t


def assoc_legendre(l: int, k: int, x):
    """Associated Legendre polynomial P_l^k(x) with Condon-Shortley phase.

    Requires 0 <= k <= l and |x| <= 1; negative orders are the caller's
    business via the order-symmetry relation.  Evaluated by the ascending
    degree recurrence, renormalized in powers of two so intermediate
    sectoral values up to l = 200 do not overflow.
    """
    if l < 0 or k < 0 or k > l:
        raise ValueError(f"need 0 <= k <= l, got l={l}, k={k}")
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0):
        raise ValueError("argument x must lie in [-1, 1]")
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)

    s = np.sqrt(1.0 - xa * xa)
    # Sectoral start P_k^k = (-1)^k (2k-1)!! s^k, tracked as mantissa * 2^ex.
    p = np.ones_like(xa)
    ex = np.zeros_like(xa, dtype=np.int64)
    for j in range(1, k + 1):
        p = p * (-(2 * j - 1)) * s
        p, e = np.frexp(p)
        ex += e
    if l > k:
        # P_{k+1}^k = x (2k+1) P_k^k
        p_prev, p = p, xa * (2 * k + 1) * p
        for ll in range(k + 2, l + 1):
            p_prev, p = p, (xa * (2 * ll - 1) * p - (ll + k - 1) * p_prev) / (ll - k)
            m, e = np.frexp(p)
            big = np.abs(e) > 256
            if np.any(big):
                shift = np.where(big, e, 0)
                p = np.ldexp(p, -shift)
                p_prev = np.ldexp(p_prev, -shift)
                ex += shift
    out = np.ldexp(p, ex)
    return float(out[0]) if scalar else out


def _jacobi_all(alpha_max: int, xi: int, lam: int, x: np.ndarray) -> np.ndarray:
    """Jacobi polynomials P_a^{(xi,lam)}(x) for all a = 0..alpha_max.

    Returns array of shape (alpha_max+1,) + x.shape.
    """
    out = np.empty((alpha_max + 1,) + x.shape)
    out[0] = 1.0
    if alpha_max == 0:
        return out
    out[1] = 0.5 * (xi - lam) + 0.5 * (xi + lam + 2) * x
    for a in range(2, alpha_max + 1):
        c = 2 * a + xi + lam
        a1 = 2 * a * (a + xi + lam) * (c - 2)
        a2 = (c - 1) * (xi * xi - lam * lam)
        a3 = (c - 1) * c * (c - 2)
        a4 = 2 * (a + xi - 1) * (a + lam - 1) * c
        out[a] = ((a2 + a3 * x) * out[a - 1] - a4 * out[a - 2]) / a1
    return out


def jacobi(alpha: int, xi: int, lam: int, x):
    """Jacobi polynomial P_alpha^{(xi,lam)}(x) by three-term recurrence."""
    if alpha < 0 or xi < 0 or lam < 0:
        raise ValueError("alpha, xi, lam must be non-negative integers")
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0):
        raise ValueError("argument x must lie in [-1, 1]")
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    val = _jacobi_all(alpha, xi, lam, xa)[alpha]
    return float(val[0]) if scalar else val


def _half_angle(theta: np.ndarray):
    """sin(theta/2), cos(theta/2) with exact zeros at the interval ends.

    Guarantees 0**0 = 1 cases in the Wigner-d prefactors resolve without
    NaN: sin is exactly 0 at theta=0 already, cos is forced to 0 at
    theta=pi (cos(pi/2) rounds to ~6e-17 otherwise).
    """
    half = 0.5 * theta
    s = np.sin(half)
    c = np.where(theta == np.pi, 0.0, np.cos(half))
    return s, c


def _wigner_d_values(l_list, k: int, n: int, theta: np.ndarray) -> np.ndarray:
    """d_l^{k,n}(cos theta) for every l in l_list (shared orders k, n)."""
    xi = abs(k - n)
    lam = abs(k + n)
    omega = 1 if n >= k else (-1) ** ((n - k) & 1)
    s, c = _half_angle(theta)
    pref = omega * s**xi * c**lam
    x = np.cos(theta)
    alpha_max = max(l_list) - (xi + lam) // 2
    jac = _jacobi_all(alpha_max, xi, lam, x)
    out = np.empty((len(l_list),) + theta.shape)
    for i, l in enumerate(l_list):
        alpha = l - (xi + lam) // 2
        gamma = math.exp(
            _log_fact(alpha) + _log_fact(alpha + xi + lam)
            - _log_fact(alpha + xi) - _log_fact(alpha + lam)
        )
        out[i] = math.sqrt(gamma) * pref * jac[alpha]
    return out


def wigner_d(idx, theta):
    """Wigner d-function d_l^{k,n}(cos theta), real valued.

    Composes the Jacobi parameters (xi, lam, alpha, gamma, omega) of the
    index with the Jacobi recurrence; exact at theta in {0, pi}.
    """
    ix = _as_index(idx)
    t = _check_theta(theta)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    val = _wigner_d_values([ix.l], ix.k, ix.n, t)[0]
    return float(val[0]) if scalar else val


def _legendre_norm_table(bandwidth: int, x: np.ndarray) -> np.ndarray:
    """Orthonormal associated Legendre values N_l^k P_l^k(x), k >= 0.

    Returns array of shape (bandwidth, bandwidth) + x.shape indexed
    [l, k]; entries with k > l are zero.  N_l^k is the spherical-harmonic
    normalization sqrt((2l+1)/(4 pi) (l-k)!/(l+k)!), so every value is
    bounded by sqrt((2l+1)/(4 pi)) and the recurrence is overflow-free
    for any practical bandwidth.
    """
    B = bandwidth
    out = np.zeros((B, B) + x.shape)
    s = np.sqrt(1.0 - x * x)
    qkk = np.full(x.shape, 1.0 / _SQRT_4PI)
    for k in range(B):
        if k > 0:
            qkk = -math.sqrt((2 * k + 1) / (2.0 * k)) * s * qkk
        out[k, k] = qkk
        if k + 1 < B:
            out[k + 1, k] = math.sqrt(2 * k + 3.0) * x * qkk
        for l in range(k + 2, B):
            a = math.sqrt((2 * l + 1) * (2 * l - 1) / ((l - k) * float(l + k)))
            b = math.sqrt(
                (2 * l + 1) * (l - 1 - k) * (l - 1 + k)
                / ((l - k) * float(l + k) * (2 * l - 3))
            )
            out[l, k] = a * x * out[l - 1, k] - b * out[l - 2, k]
    return out


def spherical_harmonic(l: int, k: int, theta, phi):
    """Spherical harmonic Y_l^k(theta, phi), orthonormal on the sphere.

    Negative orders use Y_l^{-k} = (-1)^k conj(Y_l^k) rather than a
    negative-order Rodrigues form.
    """
    if abs(k) > l:
        raise ValueError(f"need |k| <= l, got l={l}, k={k}")
    t = _check_theta(theta)
    p = np.asarray(phi, dtype=float)
    scalar = t.ndim == 0 and p.ndim == 0
    t, p = np.atleast_1d(t), np.atleast_1d(p)
    ka = abs(k)
    x = np.cos(t)
    qlk = _legendre_norm_table(l + 1, x)[l, ka]
    val = qlk * np.exp(1j * ka * p)
    if k < 0:
        val = (-1) ** (ka & 1) * np.conj(val)
    return complex(val[0]) if scalar else val


def wigner_D(idx, theta, phi, chi):
    """Wigner D-function D_l^{k,n}(theta, phi, chi), orthonormal on SO(3).

    D = sqrt((2l+1)/(8 pi^2)) * exp(-i k phi) * d_l^{k,n}(cos theta)
        * exp(-i n chi).
    """
    ix = _as_index(idx)
    t = _check_theta(theta)
    p = np.asarray(phi, dtype=float)
    c = np.asarray(chi, dtype=float)
    scalar = t.ndim == 0 and p.ndim == 0 and c.ndim == 0
    t, p, c = np.atleast_1d(t), np.atleast_1d(p), np.atleast_1d(c)
    nl = math.sqrt((2 * ix.l + 1) / (8.0 * math.pi**2))
    dval = _wigner_d_values([ix.l], ix.k, ix.n, t)[0]
    val = nl * dval * np.exp(-1j * (ix.k * p + ix.n * c))
    return complex(val[0]) if scalar else val


def _wigner_d_norm_table(bandwidth: int, theta: np.ndarray) -> np.ndarray:
    """N_l d_l^{k,n}(cos theta) for all l < bandwidth, |k|,|n| <= l.

    Returns array of shape (B, 2B-1, 2B-1) + theta.shape indexed
    [l, k + B - 1, n + B - 1]; invalid (l,k,n) slots are zero.  N_l is
    the Wigner-D normalization sqrt((2l+1)/(8 pi^2)).
    """
    B = bandwidth
    out = np.zeros((B, 2 * B - 1, 2 * B - 1) + theta.shape)
    for k in range(-(B - 1), B):
        for n in range(-(B - 1), B):
            lmin = max(abs(k), abs(n))
            ls = list(range(lmin, B))
            vals = _wigner_d_values(ls, k, n, theta)
            for i, l in enumerate(ls):
                nl = math.sqrt((2 * l + 1) / (8.0 * math.pi**2))
                out[l, k + B - 1, n + B - 1] = nl * vals[i]
    return out


def _triangle_ok(l1: int, l2: int, l3: int) -> bool:
    return abs(l1 - l2) <= l3 <= l1 + l2


@lru_cache(maxsize=65536)
def _wigner3j_cached(l1, l2, l3, k1, k2, k3) -> float:
    # Racah single-sum closed form with log-factorial accumulation.
    tmin = max(0, l2 - l3 - k1, l1 - l3 + k2)
    tmax = min(l1 + l2 - l3, l1 - k1, l2 + k2)
    if tmin > tmax:
        return 0.0
    log_delta = (
        _log_fact(l1 + l2 - l3) + _log_fact(l1 - l2 + l3)
        + _log_fact(-l1 + l2 + l3) - _log_fact(l1 + l2 + l3 + 1)
    )
    log_norm = 0.5 * (
        log_delta
        + _log_fact(l1 + k1) + _log_fact(l1 - k1)
        + _log_fact(l2 + k2) + _log_fact(l2 - k2)
        + _log_fact(l3 + k3) + _log_fact(l3 - k3)
    )
    logs = []
    signs = []
    for t in range(tmin, tmax + 1):
        logs.append(-(
            _log_fact(t) + _log_fact(l1 + l2 - l3 - t)
            + _log_fact(l1 - k1 - t) + _log_fact(l2 + k2 - t)
            + _log_fact(l3 - l2 + k1 + t) + _log_fact(l3 - l1 - k2 + t)
        ))
        signs.append((-1) ** (t & 1))
    logs = np.array(logs)
    top = logs.max()
    total = float(np.sum(np.array(signs) * np.exp(logs - top)))
    phase = (-1) ** ((l1 - l2 - k3) & 1)
    return phase * total * math.exp(top + log_norm)


def wigner3j(l1: int, l2: int, l3: int, k1: int, k2: int, k3: int) -> float:
    """Wigner 3j symbol (l1 l2 l3 / k1 k2 k3) for integer arguments.

    Returns exactly 0.0 whenever a selection rule fails: |k_i| > l_i,
    k1+k2+k3 != 0, triangle inequality violated, or all-zero orders with
    odd l1+l2+l3.  Rule violations are values, not errors.
    """
    args = (l1, l2, l3, k1, k2, k3)
    if any(int(a) != a for a in args):
        raise ValueError("3j arguments must be integers")
    l1, l2, l3, k1, k2, k3 = (int(a) for a in args)
    if min(l1, l2, l3) < 0:
        return 0.0
    if abs(k1) > l1 or abs(k2) > l2 or abs(k3) > l3:
        return 0.0
    if k1 + k2 + k3 != 0:
        return 0.0
    if not _triangle_ok(l1, l2, l3):
        return 0.0
    if k1 == 0 and k2 == 0 and k3 == 0 and (l1 + l2 + l3) % 2 == 1:
        return 0.0
    return _wigner3j_cached(l1, l2, l3, k1, k2, k3)
