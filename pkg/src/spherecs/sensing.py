"""Sensing matrices from sampled basis functions.

Enumerates the band-limited basis, evaluates it on a sampling pattern to
form the dense complex measurement matrix, and applies the sin(theta)^(1/2)
row preconditioner used by the random-sampling recovery guarantees.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .patterns import S2, SO3, SamplingPattern

_MATRIX_MAGIC = b"SPHCSMAT"


@dataclass(frozen=True)
class BasisEnumeration:
    """Bijection between column index q and degree/orders (l, k, n).

    Ordering is l-major lexicographic ascending in (l, k, n); n is fixed
    at 0 on S2.  The ordering is part of the file/serialization contract
    and must stay stable across versions.
    """

    domain: str
    bandwidth: int
    ls: np.ndarray
    ks: np.ndarray
    ns: np.ndarray

    @property
    def size(self) -> int:
        return len(self.ls)

    def index_of(self, l: int, k: int, n: int = 0) -> int:
        hits = np.flatnonzero((self.ls == l) & (self.ks == k) & (self.ns == n))
        if len(hits) != 1:
            raise KeyError(f"no basis element (l,k,n)=({l},{k},{n})")
        return int(hits[0])

    def triple(self, q: int) -> tuple[int, int, int]:
        return int(self.ls[q]), int(self.ks[q]), int(self.ns[q])


def basis_dimension(domain: str, bandwidth: int) -> int:
    """Number of basis functions of degree below the bandwidth."""
    if bandwidth < 1:
        raise ValueError("bandwidth must be >= 1")
    if domain == S2:
        return bandwidth * bandwidth
    if domain == SO3:
        return bandwidth * (2 * bandwidth - 1) * (2 * bandwidth + 1) // 3
    raise ValueError(f"unknown domain {domain!r}")


def enumerate_basis(domain: str, bandwidth: int) -> BasisEnumeration:
    """All (l, k[, n]) with l < bandwidth in l-major lexicographic order."""
    if bandwidth < 1:
        raise ValueError("bandwidth must be >= 1")
    ls, ks, ns = [], [], []
    for l in range(bandwidth):
        for k in range(-l, l + 1):
            if domain == S2:
                ls.append(l)
                ks.append(k)
                ns.append(0)
            elif domain == SO3:
                for n in range(-l, l + 1):
                    ls.append(l)
                    ks.append(k)
                    ns.append(n)
            else:
                raise ValueError(f"unknown domain {domain!r}")
    enum = BasisEnumeration(
        domain=domain,
        bandwidth=bandwidth,
        ls=np.array(ls, dtype=int),
        ks=np.array(ks, dtype=int),
        ns=np.array(ns, dtype=int),
    )
    assert enum.size == basis_dimension(domain, bandwidth)
    return enum


@dataclass
class SensingMatrix:
    """Dense complex m x N matrix of basis samples plus its provenance."""

    entries: np.ndarray
    pattern: SamplingPattern
    enumeration: BasisEnumeration
    preconditioned: bool = False
    warnings: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cols(self) -> int:
        return self.entries.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.enumeration.bandwidth


def build_matrix(pattern: SamplingPattern, bandwidth: int, precondition: bool = False) -> SensingMatrix:
    """Sample every basis function of degree < bandwidth on the pattern.

    Entry (p, q) is Y_{l(q)}^{k(q)}(theta_p, phi_p) on S2 and
    D_{l(q)}^{k(q),n(q)}(theta_p, phi_p, chi_p) on SO3, evaluated through
    the same public specfun routines as scalar calls.  With
    ``precondition`` every row p is scaled by sin(theta_p)^(1/2); rows at
    the poles then vanish and a warning is recorded, since they carry no
    information.
    """
    if bandwidth < 1:
        raise ValueError("bandwidth must be >= 1")
    enum = enumerate_basis(pattern.domain, bandwidth)
    m, n = pattern.m, enum.size
    entries = np.empty((m, n), dtype=complex)
    thetas = pattern.thetas
    phis = pattern.phis
    chis = pattern.chis if pattern.domain == SO3 else None
    for q in range(n):
        l, k, nn = enum.triple(q)
        if pattern.domain == S2:
            entries[:, q] = specfun.spherical_harmonic(l, k, thetas, phis)
        else:
            entries[:, q] = specfun.wigner_D((l, k, nn), thetas, phis, chis)
    warnings = []
    if precondition:
        scale = np.sqrt(np.sin(thetas))
        entries *= scale[:, None]
        dead = np.flatnonzero(scale == 0.0)
        if dead.size:
            warnings.append(
                f"preconditioning zeroed rows {dead.tolist()} (theta at a pole)"
            )
    return SensingMatrix(
        entries=entries,
        pattern=pattern,
        enumeration=enum,
        preconditioned=precondition,
        warnings=warnings,
    )


def precondition_rhs(y, thetas):
    """Scale measurements y_p by sin(theta_p)^(1/2) to match a
    preconditioned matrix."""
    y = np.asarray(y)
    t = np.asarray(thetas, dtype=float)
    if y.shape != t.shape:
        raise ValueError(f"length mismatch: y has {y.shape}, thetas {t.shape}")
    return y * np.sqrt(np.sin(t))


def save_matrix(matrix: SensingMatrix, path) -> None:
    """Write entries as little-endian float64 (re, im) pairs, row-major.

    Layout: 8-byte magic ``SPHCSMAT``, uint64 row count, uint64 column
    count, then m*N*2 float64 values.  Everything little-endian, for
    cross-checking against other implementations.
    """
    a = matrix.entries
    with open(path, "wb") as fh:
        fh.write(_MATRIX_MAGIC)
        fh.write(struct.pack("<QQ", a.shape[0], a.shape[1]))
        inter = np.empty((a.shape[0], a.shape[1], 2), dtype="<f8")
        inter[:, :, 0] = a.real
        inter[:, :, 1] = a.imag
        fh.write(inter.tobytes())


def load_matrix_entries(path) -> np.ndarray:
    """Read back the complex entries written by :func:`save_matrix`."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MATRIX_MAGIC:
            raise ValueError(f"bad magic {magic!r}; not a sensing-matrix file")
        m, n = struct.unpack("<QQ", fh.read(16))
        raw = np.frombuffer(fh.read(), dtype="<f8").reshape(m, n, 2)
    return raw[:, :, 0] + 1j * raw[:, :, 1]
