"""Config-driven experiment runner and command-line interface.

Each experiment kind reproduces one study from the coherence/recovery
comparison: coherence versus sample count, optimizer traces with timing,
phase-transition grids, a synthetic rotation-group forward model, and a
geomagnetic-style field reconstruction.  Outputs are CSV files with
``#``-header schema lines (plots consume the schema, not positions), all
written atomically.

Config files are flat ``key = value`` text; see ``ExperimentConfig``.
Exit codes: 0 success, 2 config error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import specfun
from .coherence import detect_modular_symmetry, mutual_coherence
from .optimize import DEFAULT_RESTARTS, OptimizerConfig, multistart_pattern_search
from .patterns import S2, SO3, SamplingPattern, equispaced_elevation, save_pattern
from .recover import (
    QCBPOptions,
    RecoveryProblem,
    make_pattern,
    omp_solve,
    phase_transition,
    qcbp_solve,
)
from .sensing import build_matrix, enumerate_basis

EXPERIMENTS = (
    "coherence_compare",
    "optimize_pattern",
    "phase_transition",
    "igrf_demo",
    "wigner_forward_demo",
)

THREADS_ENV = "SPHERECS_THREADS"


class ConfigError(ValueError):
    """Config file failed to parse or validate."""


@dataclass
class ExperimentConfig:
    """Everything one experiment run needs, loadable from flat text.

    Lists are comma separated; integer grids also accept start:stop:step
    (inclusive).  ``to_text``/``from_text`` round-trip losslessly.
    """

    experiment: str = "coherence_compare"
    domain: str = S2
    bandwidth: int = 10
    m_grid: list = field(default_factory=lambda: [20, 30, 40, 50, 60, 70, 80, 90, 100])
    s_grid: list = field(default_factory=lambda: [2, 5, 8, 11, 14, 17, 20, 23, 26, 29])
    patterns: list = field(default_factory=lambda: ["proposed", "spiral", "fibonacci", "hammersley", "equiangular"])
    trials: int = 50
    seed: int = 0
    out_dir: str = "out"
    solver: str = "qcbp"
    success_threshold: float = 1e-3
    sparsity: int = 15
    restarts: int = DEFAULT_RESTARTS
    opt_delta0: float = math.pi / 8.0
    opt_decay: float = 0.5
    opt_max_iter: int = 5000
    opt_tol: float = 1e-4
    opt_min_delta: float = 1e-6
    threads: int = 1

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            delta0=self.opt_delta0,
            decay=self.opt_decay,
            max_iter=self.opt_max_iter,
            tol=self.opt_tol,
            seed=self.seed,
            min_delta=self.opt_min_delta,
        )

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.domain not in (S2, SO3):
            raise ConfigError(f"unknown domain {self.domain!r}")
        if self.bandwidth < 1:
            raise ConfigError("bandwidth must be >= 1")
        if not self.m_grid:
            raise ConfigError("m_grid must be nonempty")
        if self.experiment == "phase_transition" and not self.s_grid:
            raise ConfigError("phase_transition needs a nonempty s_grid")
        if self.solver not in ("qcbp", "omp"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        cfg = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in known:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                setattr(cfg, key, _parse_value(known[key], value))
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def _parse_int_list(value: str) -> list:
    value = value.strip()
    if not value:
        return []
    if ":" in value and "," not in value:
        parts = [int(x) for x in value.split(":")]
        if len(parts) == 2:
            start, stop, step = parts[0], parts[1], 1
        elif len(parts) == 3:
            start, stop, step = parts
        else:
            raise ValueError("range syntax is start:stop[:step]")
        return list(range(start, stop + 1, step))
    return [int(x) for x in value.split(",") if x.strip()]


def _parse_value(fld, value: str):
    t = fld.type
    if t in ("list", list) or fld.name in ("m_grid", "s_grid", "patterns"):
        if fld.name == "patterns":
            return [x.strip() for x in value.split(",") if x.strip()]
        return _parse_int_list(value)
    if t in ("int", int):
        return int(value)
    if t in ("float", float):
        return float(value)
    return value


# --- atomic output handling -------------------------------------------------


class _OutputSink:
    """Collects experiment files, writes atomically, cleans up on failure."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.written: list[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def write_lines(self, name: str, lines) -> str:
        path = os.path.join(self.out_dir, name)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line if line.endswith("\n") else line + "\n")
        os.replace(tmp, path)
        self.written.append(path)
        return path

    def discard_all(self) -> None:
        for path in self.written:
            try:
                os.remove(path)
            except OSError:
                pass
        self.written.clear()


def _headers(config: ExperimentConfig, schema: str):
    yield f"# generated: {time.strftime('%Y-%m-%dT%H:%M:%S')}"
    yield f"# experiment: {config.experiment} domain={config.domain} B={config.bandwidth} seed={config.seed}"
    yield f"# schema: {schema}"


# --- Gauss coefficient tables (geomagnetic-style fields) ---------------------


@dataclass
class GaussCoefficientTable:
    """Real spherical-harmonic coefficients g_l^k, h_l^k of a scalar field.

    Degrees run 1 <= l < bandwidth (no monopole term) with orders
    0 <= k <= l; h_l^0 is identically zero.  ``radius_ref`` is the
    reference sphere radius a, ``radius_eval`` the evaluation radius r.
    The associated Legendre functions are normalized by the factor
    (-1)^k sqrt(2 (l-k)!/(l+k)!).
    """

    bandwidth: int
    g: np.ndarray
    h: np.ndarray
    radius_ref: float = 6371.2
    radius_eval: float = 6371.2
    epoch: str = "synthetic"

    def __post_init__(self):
        B = self.bandwidth
        if B < 2:
            raise ValueError("table needs bandwidth >= 2")
        if self.g.shape != (B, B) or self.h.shape != (B, B):
            raise ValueError(f"coefficient arrays must be ({B},{B})")

    @classmethod
    def zeros(cls, bandwidth: int, **kw) -> "GaussCoefficientTable":
        return cls(
            bandwidth=bandwidth,
            g=np.zeros((bandwidth, bandwidth)),
            h=np.zeros((bandwidth, bandwidth)),
            **kw,
        )

    @classmethod
    def synthetic(cls, bandwidth: int, s: int, seed: int = 0, scale: float = 100.0, **kw):
        """Exactly s nonzero coefficients at random (g/h, l, k) slots."""
        table = cls.zeros(bandwidth, **kw)
        slots = []
        for l in range(1, bandwidth):
            for k in range(0, l + 1):
                slots.append(("g", l, k))
                if k > 0:
                    slots.append(("h", l, k))
        rng = np.random.Generator(np.random.Philox(key=int(seed)))
        chosen = rng.choice(len(slots), size=s, replace=False)
        for idx in chosen:
            which, l, k = slots[int(idx)]
            value = scale * rng.standard_normal()
            (table.g if which == "g" else table.h)[l, k] = value
        return table

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.g) + np.count_nonzero(self.h))

    # -- real design vector layout: g_l^0, then (g_l^k, h_l^k) for k=1..l --

    def coefficient_vector(self) -> np.ndarray:
        out = []
        for l in range(1, self.bandwidth):
            out.append(self.g[l, 0])
            for k in range(1, l + 1):
                out.append(self.g[l, k])
                out.append(self.h[l, k])
        return np.array(out)

    @classmethod
    def from_vector(cls, bandwidth: int, vec: np.ndarray, **kw) -> "GaussCoefficientTable":
        table = cls.zeros(bandwidth, **kw)
        i = 0
        for l in range(1, bandwidth):
            table.g[l, 0] = vec[i]
            i += 1
            for k in range(1, l + 1):
                table.g[l, k] = vec[i]
                table.h[l, k] = vec[i + 1]
                i += 2
        if i != len(vec):
            raise ValueError("coefficient vector length mismatch")
        return table


def gauss_vector_size(bandwidth: int) -> int:
    return bandwidth * bandwidth - 1


def _schmidt_factor(l: int, k: int) -> float:
    return (-1.0) ** (k & 1) * math.sqrt(
        2.0 * math.exp(specfun._log_fact(l - k) - specfun._log_fact(l + k))
    )


def gauss_design_matrix(bandwidth: int, thetas, phis, radius_ref: float, radius_eval: float) -> np.ndarray:
    """Real matrix mapping the coefficient vector to field samples.

    Column order matches ``GaussCoefficientTable.coefficient_vector``.
    """
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    x = np.cos(thetas)
    cols = []
    for l in range(1, bandwidth):
        radial = radius_ref * (radius_ref / radius_eval) ** (l + 1)
        for k in range(0, l + 1):
            plk = specfun.assoc_legendre(l, k, x) * _schmidt_factor(l, k) * radial
            cols.append(plk * np.cos(k * phis))
            if k > 0:
                cols.append(plk * np.sin(k * phis))
    return np.column_stack(cols)


def synthesize_gauss_field(table: GaussCoefficientTable, thetas, phis) -> np.ndarray:
    m = gauss_design_matrix(
        table.bandwidth, thetas, phis, table.radius_ref, table.radius_eval
    )
    return m @ table.coefficient_vector()


def gauss_to_complex(table: GaussCoefficientTable) -> np.ndarray:
    """Complex coefficients over enumerate_basis(S2, B) of the same field.

    Exact linear map; ``complex_to_gauss`` inverts it to round-trip
    within 1e-12.
    """
    B = table.bandwidth
    enum = enumerate_basis(S2, B)
    coeffs = np.zeros(enum.size, dtype=complex)
    for l in range(1, B):
        radial = table.radius_ref * (table.radius_ref / table.radius_eval) ** (l + 1)
        for k in range(0, l + 1):
            c = radial * _schmidt_factor(l, k)
            nlk = math.sqrt(
                (2 * l + 1) / (4.0 * math.pi)
                * math.exp(specfun._log_fact(l - k) - specfun._log_fact(l + k))
            )
            if k == 0:
                coeffs[enum.index_of(l, 0)] += c * table.g[l, 0] / nlk
            else:
                gh = table.g[l, k] - 1j * table.h[l, k]
                coeffs[enum.index_of(l, k)] += c * gh / (2.0 * nlk)
                coeffs[enum.index_of(l, -k)] += (
                    c * np.conj(gh) * (-1.0) ** (k & 1) / (2.0 * nlk)
                )
    return coeffs


def complex_to_gauss(coeffs: np.ndarray, bandwidth: int, radius_ref: float = 6371.2,
                     radius_eval: float = 6371.2, epoch: str = "synthetic") -> GaussCoefficientTable:
    table = GaussCoefficientTable.zeros(
        bandwidth, radius_ref=radius_ref, radius_eval=radius_eval, epoch=epoch
    )
    enum = enumerate_basis(S2, bandwidth)
    for l in range(1, bandwidth):
        radial = radius_ref * (radius_ref / radius_eval) ** (l + 1)
        for k in range(0, l + 1):
            c = radial * _schmidt_factor(l, k)
            nlk = math.sqrt(
                (2 * l + 1) / (4.0 * math.pi)
                * math.exp(specfun._log_fact(l - k) - specfun._log_fact(l + k))
            )
            if k == 0:
                table.g[l, 0] = float(np.real(coeffs[enum.index_of(l, 0)] * nlk / c))
            else:
                gh = coeffs[enum.index_of(l, k)] * 2.0 * nlk / c
                table.g[l, k] = float(np.real(gh))
                table.h[l, k] = float(-np.imag(gh))
    return table


def save_gauss_table(table: GaussCoefficientTable, path) -> None:
    """Whitespace table ``g/h l k value``, one coefficient per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# epoch: {table.epoch} bandwidth: {table.bandwidth} "
                 f"a: {table.radius_ref:.17g} r: {table.radius_eval:.17g}\n")
        for l in range(1, table.bandwidth):
            for k in range(0, l + 1):
                fh.write(f"g {l} {k} {table.g[l, k]:.17g}\n")
                if k > 0:
                    fh.write(f"h {l} {k} {table.h[l, k]:.17g}\n")


def load_gauss_table(path, bandwidth: int | None = None, **kw) -> GaussCoefficientTable:
    """Read a ``g/h l k value`` whitespace table (highest l sets B)."""
    rows = []
    lmax = 0
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 4 or parts[0] not in ("g", "h"):
                raise ValueError(f"bad Gauss table line: {raw!r}")
            which, l, k, value = parts[0], int(parts[1]), int(parts[2]), float(parts[3])
            rows.append((which, l, k, value))
            lmax = max(lmax, l)
    B = bandwidth or (lmax + 1)
    table = GaussCoefficientTable.zeros(B, **kw)
    for which, l, k, value in rows:
        if l >= B:
            continue
        (table.g if which == "g" else table.h)[l, k] = value
    return table


@dataclass
class IgrfReport:
    family: str
    m: int
    rel_grid_error: float
    coeff_error: float
    residual: float
    recovered: GaussCoefficientTable


def igrf_reconstruct(table: GaussCoefficientTable, pattern: SamplingPattern,
                     solver: str = "qcbp", qcbp_opts: QCBPOptions | None = None,
                     grid_shape=(91, 180)) -> IgrfReport:
    """Sample the field on the pattern, recover coefficients, grade on a grid.

    Works internally in colatitude; the fine projection grid is built
    over latitude in [-pi/2, pi/2] and converted at this boundary.
    Sampling is on the reference sphere r = a unless the table says
    otherwise.
    """
    if pattern.domain != S2:
        raise ValueError("field reconstruction needs an S2 pattern")
    B = table.bandwidth
    design = gauss_design_matrix(B, pattern.thetas, pattern.phis,
                                 table.radius_ref, table.radius_eval)
    truth = table.coefficient_vector()
    y = design @ truth
    if solver == "qcbp":
        opts = qcbp_opts or QCBPOptions(max_iter=30000, gap_tol=1e-9)
        res = qcbp_solve(RecoveryProblem(design.astype(complex), y.astype(complex), 0.0), opts)
        vec = np.real(res.z)
        residual = res.residual
    elif solver == "omp":
        res = omp_solve(design.astype(complex), y.astype(complex),
                        s=min(design.shape) // 2, eta=1e-10)
        vec = np.real(res.z)
        residual = res.residual
    else:
        raise ValueError(f"unknown solver {solver!r}")
    recovered = GaussCoefficientTable.from_vector(
        B, vec, radius_ref=table.radius_ref, radius_eval=table.radius_eval,
        epoch=table.epoch,
    )
    lat = np.linspace(-math.pi / 2.0, math.pi / 2.0, grid_shape[0])
    lon = np.linspace(0.0, 2.0 * math.pi, grid_shape[1], endpoint=False)
    glat, glon = np.meshgrid(lat, lon, indexing="ij")
    colat = (math.pi / 2.0 - glat).ravel()
    f_true = synthesize_gauss_field(table, colat, glon.ravel())
    f_rec = synthesize_gauss_field(recovered, colat, glon.ravel())
    denom = np.linalg.norm(f_true)
    rel = float(np.linalg.norm(f_rec - f_true) / denom) if denom > 0 else float(np.linalg.norm(f_rec))
    tden = np.linalg.norm(truth)
    cerr = float(np.linalg.norm(vec - truth) / tden) if tden > 0 else float(np.linalg.norm(vec))
    return IgrfReport(
        family=pattern.provenance.get("generator", "custom"),
        m=pattern.m,
        rel_grid_error=rel,
        coeff_error=cerr,
        residual=float(residual),
        recovered=recovered,
    )


# --- synthetic Wigner-D forward model ---------------------------------------


def restricted_wigner_basis(bandwidth: int, orders=(-1, 1)) -> list:
    """(l, k, n) triples with n restricted, as in polarization probing."""
    out = []
    for l in range(1, bandwidth):
        for k in range(-l, l + 1):
            for n in orders:
                if abs(n) <= l:
                    out.append((l, k, n))
    return out


def make_compressible_coeffs(count: int, ratio: float, seed: int = 0) -> np.ndarray:
    """Geometric-decay coefficients |c_(i)| = ratio^i in random positions."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("decay ratio must lie in (0, 1)")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    mags = ratio ** np.arange(count)
    phases = np.exp(2j * math.pi * rng.uniform(size=count))
    perm = rng.permutation(count)
    out = np.zeros(count, dtype=complex)
    out[perm] = mags * phases
    return out


def polarization_probe_pattern(base: SamplingPattern) -> SamplingPattern:
    """SO3 pattern with chi alternating between 0 and pi/2.

    Emulates co-/cross-polarization probing: the (theta, phi) locations
    come from the base pattern and chi toggles between the two probe
    angles.
    """
    thetas = base.thetas
    phis = base.phis
    chis = (np.arange(base.m) % 2) * (math.pi / 2.0)
    prov = dict(base.provenance)
    prov["chi"] = "alternating-0-pi/2"
    return SamplingPattern(domain=SO3, points=np.column_stack([thetas, phis, chis]),
                           provenance=prov)


@dataclass
class WignerForwardReport:
    family: str
    m: int
    coherence_alarm: bool
    flagged_orders: list
    coeff_error: float
    resynth_error: float
    sigma_s_curve: list


def wigner_forward_demo(coeffs: np.ndarray, pattern: SamplingPattern,
                        bandwidth: int, solver: str = "qcbp",
                        qcbp_opts: QCBPOptions | None = None,
                        s_grid=(1, 2, 4, 8, 16), probe_points: int = 400,
                        seed: int = 12345) -> WignerForwardReport:
    """Synthetic forward model with order restriction n in {-1, +1}.

    Synthesizes samples of the restricted Wigner-D expansion on the
    pattern, but first screens the pattern with the modular-symmetry
    full-coherence test restricted to the basis orders: a hit flags the
    recovery as failed before any solving.  Otherwise recovers the
    coefficients and reports the coefficient error plus a re-synthesis
    error on an independent random probe set, along with the best
    s-term approximation curve sigma_s(T)_1 / sqrt(s).
    """
    if pattern.domain != SO3:
        raise ValueError("forward model needs an SO3 pattern")
    basis = restricted_wigner_basis(bandwidth)
    if len(coeffs) != len(basis):
        raise ValueError(f"need {len(basis)} coefficients, got {len(coeffs)}")
    scan = [(k, 1) for k in range(-(bandwidth - 1), bandwidth)]
    flagged = detect_modular_symmetry(pattern, bandwidth, orders=scan)
    sigma = []
    mags = np.sort(np.abs(coeffs))[::-1]
    for s in s_grid:
        tail = float(np.sum(mags[s:]))
        sigma.append((int(s), tail / math.sqrt(s)))
    if flagged:
        return WignerForwardReport(
            family=pattern.provenance.get("generator", "custom"),
            m=pattern.m,
            coherence_alarm=True,
            flagged_orders=flagged,
            coeff_error=float("nan"),
            resynth_error=float("nan"),
            sigma_s_curve=sigma,
        )
    a = np.column_stack([
        specfun.wigner_D(idx, pattern.thetas, pattern.phis, pattern.chis)
        for idx in basis
    ])
    y = a @ coeffs
    opts = qcbp_opts or QCBPOptions(max_iter=20000, gap_tol=1e-9)
    res = qcbp_solve(RecoveryProblem(a, y, 0.0), opts)
    cden = np.linalg.norm(coeffs)
    cerr = float(np.linalg.norm(res.z - coeffs) / cden) if cden > 0 else 0.0
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    pt = np.column_stack([
        rng.uniform(0.0, math.pi, probe_points),
        rng.uniform(0.0, 2.0 * math.pi, probe_points),
        rng.uniform(0.0, 2.0 * math.pi, probe_points),
    ])
    probe = np.column_stack([
        specfun.wigner_D(idx, pt[:, 0], pt[:, 1], pt[:, 2]) for idx in basis
    ])
    ft = probe @ coeffs
    fr = probe @ res.z
    fden = np.linalg.norm(ft)
    rerr = float(np.linalg.norm(fr - ft) / fden) if fden > 0 else 0.0
    return WignerForwardReport(
        family=pattern.provenance.get("generator", "custom"),
        m=pattern.m,
        coherence_alarm=False,
        flagged_orders=[],
        coeff_error=cerr,
        resynth_error=rerr,
        sigma_s_curve=sigma,
    )


# --- experiment dispatch -----------------------------------------------------


def _stage(summary: dict, name: str, t0: float) -> float:
    now = time.perf_counter()
    summary["stages"][name] = summary["stages"].get(name, 0.0) + (now - t0)
    return now


def run_experiment(config: ExperimentConfig):
    """Run one experiment; returns (summary dict, list of output files).

    Deterministic for a fixed config (modulo the timestamp header line);
    partial outputs are removed if the run fails.
    """
    config.validate()
    sink = _OutputSink(config.out_dir)
    summary = {"experiment": config.experiment, "stages": {}, "outputs": []}
    try:
        if config.experiment == "coherence_compare":
            _run_coherence_compare(config, sink, summary)
        elif config.experiment == "optimize_pattern":
            _run_optimize_pattern(config, sink, summary)
        elif config.experiment == "phase_transition":
            _run_phase_transition(config, sink, summary)
        elif config.experiment == "igrf_demo":
            _run_igrf_demo(config, sink, summary)
        else:
            _run_wigner_forward_demo(config, sink, summary)
    except ConfigError:
        sink.discard_all()
        raise
    except Exception:
        sink.discard_all()
        raise
    summary["outputs"] = list(sink.written)
    return summary, sink.written


def _proposed_pattern(config: ExperimentConfig, m: int):
    return make_pattern(
        "proposed", m, config.domain, config.bandwidth, config.seed,
        optimizer=config.optimizer_config(), restarts=config.restarts,
    )


def _run_coherence_compare(config, sink, summary):
    lines = list(_headers(config, "m,N,B,domain,pattern,mu,q,r,lb_elev,welch"))
    for family in config.patterns:
        t0 = time.perf_counter()
        for m in config.m_grid:
            pattern = make_pattern(
                family, m, config.domain, config.bandwidth, config.seed,
                optimizer=config.optimizer_config(), restarts=config.restarts,
            )
            matrix = build_matrix(pattern, config.bandwidth)
            report = mutual_coherence(matrix)
            lines.append(report.csv_row(matrix, family))
        _stage(summary, f"coherence[{family}]", t0)
    sink.write_lines("coherence_compare.csv", lines)


def _run_optimize_pattern(config, sink, summary):
    timing = list(_headers(config, "m,seconds,final_mu,lower_bound,stop_reason"))
    for m in config.m_grid:
        t0 = time.perf_counter()
        trace = multistart_pattern_search(
            equispaced_elevation(m), config.domain, config.bandwidth,
            config.optimizer_config(), restarts=config.restarts,
        )
        dt = _stage(summary, f"optimize[m={m}]", t0) - t0
        timing.append(
            f"{m},{dt:.6g},{trace.final_mu:.17g},{trace.mu_lower_bound:.17g},{trace.stop_reason}"
        )
        sink.write_lines(f"trace_m{m}.csv", list(_headers(config, "iter,mu,delta,accepted"))
                         + list(trace.csv_lines())[1:])
        ppath = os.path.join(config.out_dir, f"pattern_m{m}.txt")
        save_pattern(trace.final_pattern, ppath)
        sink.written.append(ppath)
    sink.write_lines("optimize_timing.csv", timing)


def _run_phase_transition(config, sink, summary):
    for family in config.patterns:
        t0 = time.perf_counter()
        grid = phase_transition(
            config.domain, config.bandwidth, family,
            config.m_grid, config.s_grid, trials=config.trials,
            seed=config.seed, solver=config.solver,
            success_threshold=config.success_threshold,
            optimizer=config.optimizer_config(), restarts=config.restarts,
        )
        _stage(summary, f"phase[{family}]", t0)
        lines = list(_headers(config, "m,s,trials,successes,rate")) + list(grid.csv_lines())[1:]
        sink.write_lines(f"phase_{family}.csv", lines)
        summary[f"boundary[{family}]"] = grid.boundary()


def _run_igrf_demo(config, sink, summary):
    table = GaussCoefficientTable.synthetic(
        config.bandwidth, config.sparsity, seed=config.seed
    )
    tpath = os.path.join(config.out_dir, "igrf_truth.txt")
    save_gauss_table(table, tpath)
    sink.written.append(tpath)
    lines = list(_headers(config, "pattern,m,rel_grid_error,coeff_error,residual"))
    for family in config.patterns:
        for m in config.m_grid:
            t0 = time.perf_counter()
            pattern = make_pattern(
                family, m, S2, config.bandwidth, config.seed,
                optimizer=config.optimizer_config(), restarts=config.restarts,
            )
            report = igrf_reconstruct(table, pattern, solver=config.solver)
            _stage(summary, f"igrf[{family},m={m}]", t0)
            lines.append(
                f"{family},{m},{report.rel_grid_error:.6g},{report.coeff_error:.6g},{report.residual:.6g}"
            )
            rpath = os.path.join(config.out_dir, f"igrf_recovered_{family}_m{m}.txt")
            save_gauss_table(report.recovered, rpath)
            sink.written.append(rpath)
    sink.write_lines("igrf_error.csv", lines)


def _run_wigner_forward_demo(config, sink, summary):
    basis_size = len(restricted_wigner_basis(config.bandwidth))
    coeffs = np.zeros(basis_size, dtype=complex)
    spec_rng = np.random.Generator(np.random.Philox(key=int(config.seed)))
    support = spec_rng.choice(basis_size, size=min(config.sparsity, basis_size), replace=False)
    vals = spec_rng.standard_normal(len(support)) + 1j * spec_rng.standard_normal(len(support))
    coeffs[support] = vals / math.sqrt(2.0)
    lines = list(_headers(config, "pattern,m,flagged,coeff_error,resynth_error"))
    for family in config.patterns:
        for m in config.m_grid:
            t0 = time.perf_counter()
            if family in ("proposed", "uniform", "tan13"):
                base = make_pattern(
                    family, m, SO3, config.bandwidth, config.seed,
                    optimizer=config.optimizer_config(), restarts=config.restarts,
                )
                pattern = base
            else:
                s2 = make_pattern(family, m, S2, config.bandwidth, config.seed)
                pattern = polarization_probe_pattern(s2)
                if family == "equiangular":
                    # the equiangular (phi, chi) grid, the classical setup
                    pattern = make_pattern(family, m, SO3, config.bandwidth, config.seed)
            report = wigner_forward_demo(coeffs, pattern, config.bandwidth,
                                         solver=config.solver)
            _stage(summary, f"wigner[{family},m={m}]", t0)
            lines.append(
                f"{family},{m},{int(report.coherence_alarm)},"
                f"{report.coeff_error:.6g},{report.resynth_error:.6g}"
            )
    sink.write_lines("wigner_demo.csv", lines)


# --- command line ------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spherecs",
        description="Sampling-pattern design and sparse recovery experiments "
                    "on the sphere and the rotation group.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="flat key=value config file")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="seed override; all randomness flows from it")
    parser.add_argument("--threads", type=int, help=f"worker threads (or env {THREADS_ENV})")
    args = parser.parse_args(argv)
    try:
        config = ExperimentConfig.from_file(args.config)
        config.experiment = args.experiment
        if args.out is not None:
            config.out_dir = args.out
        if args.seed is not None:
            config.seed = args.seed
        env_threads = os.environ.get(THREADS_ENV)
        if args.threads is not None:
            config.threads = args.threads
        elif env_threads:
            config.threads = int(env_threads)
        config.validate()
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        summary, outputs = run_experiment(config)
    except Exception as exc:  # runtime failure after config validation
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 3
    for stage, seconds in summary["stages"].items():
        print(f"{stage}: {seconds:.2f}s")
    for path in outputs:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
