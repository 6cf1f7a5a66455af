"""Experiment harness: signal model, method pipelines, MSE and timing sweeps, CSV output."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
import warnings
from dataclasses import dataclass, field, fields
from functools import cached_property
from pathlib import Path
from typing import Any, Callable

import numpy as np
from threadpoolctl import threadpool_limits

from . import baselines as bl
from .design import select_by_design
from .errors import ParameterError, SSSError
from .graph import Graph, GraphFamily, build_laplacian, generate
from .proposed import heat_kernel_for_selection, select_proposed
from .reconstruction import (
    ReconConfig,
    band_from_cutoff,
    estimate_cutoff,
    recon_bandlimited,
    recon_locop,
    recon_localized,
    recon_regularized,
)
from .rng import make_rng, sub_seed
from .sampleset import SampleSet
from .spectral import EigenSystem, ExactDense, PolySparse, eigendecompose, estimate_lambda_max, localization_matrix

log = logging.getLogger(__name__)

DEFAULT_METHODS = ("proposed", "entropy", "mi", "maxcutoff", "minspec", "minfrob", "maxfrob", "maxpvol", "randsamp")
TIMING_METHODS = ("proposed", "maxcutoff", "minspec", "minfrob", "maxfrob", "maxpvol")
ALL_METHODS = DEFAULT_METHODS + ("mintrac", "design-a", "design-d", "design-e", "design-t")
RANDOM_METHODS = ("randsamp",)


# ---------------------------------------------------------------------------
# signal model


@dataclass(frozen=True)
class SignalModel:
    band_size: int = 100
    coeff_variance: float = 0.2
    noise_variance: float = 5e-3

    def __post_init__(self):
        if self.coeff_variance < 0 or self.noise_variance < 0:
            raise ParameterError("variances must be >= 0")
        if self.band_size < 0:
            raise ParameterError("band size must be >= 0")


def draw_coefficients(n: int, model: SignalModel, rng: np.random.Generator, count: int | None = None):
    """Clean in-band coefficients (zero-padded) and white spectral noise."""
    if model.band_size > n:
        raise ParameterError(f"band size {model.band_size} exceeds n={n}")
    shape = (n,) if count is None else (n, count)
    clean = np.zeros(shape)
    clean[: model.band_size] = rng.normal(0.0, math.sqrt(model.coeff_variance), size=(model.band_size,) + shape[1:])
    noise = rng.normal(0.0, math.sqrt(model.noise_variance), size=shape)
    return clean, noise


def generate_signal_pair(es: EigenSystem, model: SignalModel, seed: int = 0, *labels) -> tuple[np.ndarray, np.ndarray]:
    """(noisy signal, clean bandlimited part); the noise is white in the spectral domain."""
    rng = make_rng(seed, "signal", *labels)
    clean, noise = draw_coefficients(es.n, model, rng)
    U = es.eigenvectors
    return U @ (clean + noise), U @ clean


def generate_signal(es: EigenSystem, model: SignalModel, seed: int = 0) -> np.ndarray:
    return generate_signal_pair(es, model, seed)[0]


# ---------------------------------------------------------------------------
# experiment description


@dataclass
class ExperimentSpec:
    family: str = "random_sensor"
    n: int = 500
    graph_params: dict[str, Any] = field(default_factory=dict)
    methods: tuple[str, ...] = DEFAULT_METHODS
    sample_sizes: tuple[int, ...] = (110, 150, 200)
    trials: int = 100
    seed: int = 0
    band_size: int = 100
    coeff_variance: float = 0.2
    noise_variance: float = 5e-3
    nu: float = 220.0
    cheb_order: int = 12
    drop_tol: float = 1e-10
    k_recon: int = 12
    k_cutoff: int = 14
    k_gp: int = 6
    delta: float = 0.01
    gamma: float = 1.0
    ridge: float = 1e-8
    proposed_recon: str = "cutoff"
    experiment: str = "mse"
    timing_sizes: tuple[int, ...] = (500, 1000)
    timing_reps: int = 10
    timeout: float = 600.0
    budget_ratio: float = 0.1

    def validate(self) -> "ExperimentSpec":
        GraphFamily.parse(self.family)
        unknown = [m for m in self.methods if m not in ALL_METHODS]
        if unknown:
            raise ParameterError(f"unknown methods {unknown}; expected names from {ALL_METHODS}")
        if self.experiment not in ("mse", "timing", "both"):
            raise ParameterError("experiment must be mse, timing or both")
        if self.experiment in ("mse", "both"):
            if not self.methods:
                raise ParameterError("no methods selected")
            if self.trials < 1:
                raise ParameterError("trials must be >= 1")
            bad = [s for s in self.sample_sizes if not 1 <= s <= self.n]
            if bad:
                raise ParameterError(f"sample sizes {bad} outside [1, {self.n}]")
            if self.band_size > self.n:
                raise ParameterError(f"band size {self.band_size} exceeds n={self.n}")
        if self.proposed_recon not in ("cutoff", "bandlimited", "locop"):
            raise ParameterError("proposed_recon must be cutoff, bandlimited or locop")
        if self.proposed_recon == "cutoff" and self.k_recon % 2:
            raise ParameterError("cutoff reconstruction needs an even k_recon")
        return self

    @property
    def signal_model(self) -> SignalModel:
        return SignalModel(self.band_size, self.coeff_variance, self.noise_variance)


def _parse_scalar(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text.strip("\"'")


_TUPLE_KEYS = {"methods", "sample_sizes", "timing_sizes"}


def parse_config(text: str) -> ExperimentSpec:
    """Flat ``key = value`` lines; ``graph.<name> = value`` sets a generator parameter."""
    known = {f.name: f for f in fields(ExperimentSpec)}
    values: dict[str, Any] = {}
    graph_params: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("graph."):
            graph_params[key[len("graph."):]] = _parse_scalar(value)
            continue
        if key not in known or key == "graph_params":
            raise ParameterError(f"config line {lineno}: unknown key {key!r}")
        if key in _TUPLE_KEYS:
            items = [v.strip() for v in value.replace(";", ",").split(",") if v.strip()]
            values[key] = tuple(_parse_scalar(v) for v in items)
        else:
            values[key] = _parse_scalar(value)
    spec = ExperimentSpec(**values, graph_params=graph_params)
    return spec.validate()


def load_config(path: str | Path) -> ExperimentSpec:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# method pipelines


class GraphContext:
    """Lazily computed per-graph quantities shared by all methods."""

    def __init__(self, graph: Graph, spec: ExperimentSpec):
        self.graph = graph
        self.spec = spec
        self.L = build_laplacian(graph)

    @cached_property
    def es(self) -> EigenSystem:
        return eigendecompose(self.L)

    @cached_property
    def lambda_max(self) -> float:
        return estimate_lambda_max(self.L)

    @cached_property
    def cov(self) -> bl.CovarianceModel:
        return bl.covariance_model(self.L, self.spec.delta)


@dataclass
class Selection:
    sample_set: SampleSet
    omega: float | None = None


def select_with(method: str, ctx: GraphContext, size: int, seed: int) -> Selection:
    """Run one selection method from the Laplacian onwards."""
    sp_ = ctx.spec
    band = min(sp_.band_size, ctx.graph.n)
    if method == "proposed":
        kernel = heat_kernel_for_selection(ctx.graph, size, band, sp_.nu, lambda_max=ctx.lambda_max)
        T = localization_matrix(ctx.L, kernel, PolySparse(sp_.cheb_order, sp_.drop_tol, ctx.lambda_max))
        return Selection(select_proposed(T, size))
    if method == "entropy":
        return Selection(bl.select_entropy(ctx.cov, size))
    if method == "mi":
        return Selection(bl.select_mi(ctx.cov, size))
    if method == "maxcutoff":
        S, omega = bl.select_maxcutoff(ctx.L, size, sp_.k_cutoff)
        return Selection(S, omega)
    if method == "minspec":
        return Selection(bl.select_minspec(ctx.es, band, size))
    if method == "mintrac":
        return Selection(bl.select_mintrac(ctx.es, band, size, sp_.ridge))
    if method == "minfrob":
        return Selection(bl.select_minfrob(ctx.es, band, size))
    if method == "maxfrob":
        return Selection(bl.select_maxfrob(ctx.es, band, size))
    if method == "maxpvol":
        return Selection(bl.select_maxpvol(ctx.es, band, size))
    if method == "randsamp":
        return Selection(bl.select_randsamp(bl.randsamp_distribution(ctx.es, band), size, seed))
    if method.startswith("design-"):
        kernel = heat_kernel_for_selection(ctx.graph, size, band, sp_.nu, lambda_max=ctx.lambda_max)
        T = localization_matrix(ctx.L, kernel, ExactDense(ctx.es))
        k = sp_.k_recon + (sp_.k_recon % 2 if method == "design-e" else 0)
        return Selection(select_by_design(method[-1], T, k, size))
    raise ParameterError(f"unknown method {method!r}")


def reconstruct_with(method: str, ctx: GraphContext, sel: Selection, f: np.ndarray) -> np.ndarray:
    """The reconstruction each method is evaluated with."""
    sp_ = ctx.spec
    S = sel.sample_set
    f_S = f[S.indices]
    band = min(sp_.band_size, ctx.graph.n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if method in ("entropy", "mi"):
            omega = estimate_cutoff(ctx.L, S, sp_.k_gp)
            return recon_bandlimited(ctx.es, band_from_cutoff(ctx.es, omega), S, f_S)
        if method == "maxcutoff":
            omega = sel.omega if sel.omega is not None else estimate_cutoff(ctx.L, S, sp_.k_cutoff)
            return recon_bandlimited(ctx.es, band_from_cutoff(ctx.es, omega), S, f_S)
        if method in ("minspec", "mintrac"):
            return recon_bandlimited(ctx.es, band, S, f_S)
        if method in ("minfrob", "maxfrob", "maxpvol"):
            padded = np.zeros(ctx.graph.n)
            padded[S.indices] = f_S
            return recon_localized(ctx.es, band, S, padded)
        if method == "randsamp":
            return recon_regularized(ctx.L, S, f_S, ReconConfig(k=sp_.k_recon, gamma=sp_.gamma))
        if method == "proposed" or method.startswith("design-"):
            if sp_.proposed_recon == "locop":
                kernel = heat_kernel_for_selection(ctx.graph, len(S), band, sp_.nu, lambda_max=ctx.lambda_max)
                T = localization_matrix(ctx.L, kernel, ExactDense(ctx.es))
                return recon_locop(T, sp_.k_recon, S, f_S)
            if sp_.proposed_recon == "cutoff":
                omega = estimate_cutoff(ctx.L, S, sp_.k_recon)
                return recon_bandlimited(ctx.es, band_from_cutoff(ctx.es, omega), S, f_S)
            return recon_bandlimited(ctx.es, band, S, f_S)
    raise ParameterError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# result tables

RESULT_FIELDS = ("graph", "method", "n", "sample_size", "trial", "mse", "select_seconds", "recon_seconds", "seed")
TIMING_FIELDS = ("graph", "method", "n", "sample_size", "reps", "mean_seconds", "speedup", "status")
TIME_COLUMNS = ("select_seconds", "recon_seconds", "mean_seconds", "speedup")


@dataclass
class ResultRow:
    graph: str
    method: str
    n: int
    sample_size: int
    trial: int
    mse: float
    select_seconds: float
    recon_seconds: float
    seed: int


@dataclass
class TimingRow:
    graph: str
    method: str
    n: int
    sample_size: int
    reps: int
    mean_seconds: float
    speedup: float
    status: str = "ok"


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else format(value, ".17g")
    return str(value)


def rows_to_csv(rows, columns: tuple[str, ...], exclude: tuple[str, ...] = ()) -> str:
    cols = [c for c in columns if c not in exclude]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in cols])
    return buf.getvalue()


def write_csv(rows, columns, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows, columns))


# ---------------------------------------------------------------------------
# experiments


def build_graph(spec: ExperimentSpec) -> Graph:
    return generate(spec.family, spec.n, spec.graph_params, seed=sub_seed(spec.seed, "graph", spec.family, spec.n))


def run_mse_experiment(spec: ExperimentSpec, graph: Graph | None = None, progress: Callable[[str], None] | None = None):
    """MSE of each method's reconstruction against the clean bandlimited signal.

    All methods see the same signals for a given trial. Deterministic methods
    select once per sample size; their selection time is repeated on every row.
    """
    spec.validate()
    graph = graph or build_graph(spec)
    ctx = GraphContext(graph, spec)
    family = GraphFamily.parse(spec.family).value
    model = spec.signal_model
    es = ctx.es
    signals = [generate_signal_pair(es, model, spec.seed, family, spec.n, t) for t in range(spec.trials)]
    rows: list[ResultRow] = []
    for method in spec.methods:
        for size in spec.sample_sizes:
            cached: tuple[Selection | None, float] | None = None
            for trial in range(spec.trials):
                row_seed = sub_seed(spec.seed, family, method, size, trial)
                noisy, clean = signals[trial]
                if cached is None or method in RANDOM_METHODS:
                    t0 = time.perf_counter()
                    try:
                        cached = (select_with(method, ctx, size, row_seed), time.perf_counter() - t0)
                    except (SSSError, np.linalg.LinAlgError) as exc:
                        log.warning("%s selection of %d vertices failed: %s", method, size, exc)
                        cached = (None, float("nan"))
                sel, t_sel = cached
                mse = t_rec = float("nan")
                if sel is not None:
                    t0 = time.perf_counter()
                    try:
                        fhat = reconstruct_with(method, ctx, sel, noisy)
                        t_rec = time.perf_counter() - t0
                        mse = float(np.mean((fhat - clean) ** 2))
                    except (SSSError, np.linalg.LinAlgError) as exc:
                        log.warning("%s |S|=%d trial %d reconstruction failed: %s", method, size, trial, exc)
                rows.append(ResultRow(family, method, graph.n, size, trial, mse, t_sel, t_rec, row_seed))
            if progress:
                vals = np.array([r.mse for r in rows[-spec.trials:]])
                mean = float(np.mean(vals[~np.isnan(vals)])) if np.any(~np.isnan(vals)) else float("nan")
                progress(f"{family} {method} |S|={size}: mean MSE {mean:.4g}")
    return rows


def run_timing_experiment(
    sizes,
    family: str = "random_sensor",
    methods=TIMING_METHODS,
    budget_ratio: float = 0.1,
    band_size: int = 100,
    reps: int = 10,
    timeout: float = 600.0,
    seed: int = 0,
    spec: ExperimentSpec | None = None,
    progress: Callable[[str], None] | None = None,
) -> list[TimingRow]:
    """Average wall-clock time of each selection pipeline, starting from the Laplacian.

    Everything a method needs (eigendecomposition, lambda_max, kernel,
    operator) is recomputed on every repetition. A method whose repetitions
    exceed ``timeout`` seconds at one size is marked and skipped at larger sizes.
    """
    if "proposed" not in methods:
        methods = ("proposed",) + tuple(methods)
    spec = spec or ExperimentSpec(family=family, band_size=band_size, seed=seed)
    timed_out: set[str] = set()
    rows: list[TimingRow] = []
    for n in sizes:
        g = generate(family, n, spec.graph_params, seed=sub_seed(seed, "timing-graph", family, n))
        size = max(1, int(round(budget_ratio * n)))
        local = ExperimentSpec(**{**spec.__dict__, "family": family, "n": n, "band_size": min(band_size, n)})
        means: dict[str, float] = {}
        for method in methods:
            if method in timed_out:
                rows.append(TimingRow(GraphFamily.parse(family).value, method, n, size, 0, float("nan"), float("nan"), "skipped"))
                continue
            elapsed = []
            status = "ok"
            for r in range(reps):
                ctx = GraphContext(g, local)
                t0 = time.perf_counter()
                select_with(method, ctx, size, sub_seed(seed, "timing", method, n, r))
                elapsed.append(time.perf_counter() - t0)
                if sum(elapsed) > timeout:
                    status = "timed-out"
                    timed_out.add(method)
                    break
            means[method] = float(np.mean(elapsed))
            rows.append(TimingRow(GraphFamily.parse(family).value, method, n, size, len(elapsed), means[method], float("nan"), status))
            if progress:
                progress(f"timing n={n} {method}: {means[method]:.4g} s over {len(elapsed)} runs ({status})")
        base = means.get("proposed")
        for row in rows:
            if row.n == n and row.method in means and base:
                row.speedup = means[row.method] / base
    return rows


def run_from_config(spec: ExperimentSpec, out_dir: str | Path, progress=None) -> dict[str, Path]:
    """Run what the config asks for and write CSVs and plots into ``out_dir``."""
    from .plots import emit_plots, emit_timing_plot

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    if spec.experiment in ("mse", "both"):
        rows = run_mse_experiment(spec, progress=progress)
        path = out / "results.csv"
        write_csv(rows, RESULT_FIELDS, path)
        written["results"] = path
        written.update(emit_plots(rows, out))
    if spec.experiment in ("timing", "both"):
        methods = tuple(m for m in spec.methods if m in TIMING_METHODS + ("mintrac", "entropy", "mi", "randsamp"))
        trows = run_timing_experiment(
            spec.timing_sizes,
            spec.family,
            methods or TIMING_METHODS,
            spec.budget_ratio,
            spec.band_size,
            spec.timing_reps,
            spec.timeout,
            spec.seed,
            spec,
            progress,
        )
        path = out / "timing.csv"
        write_csv(trows, TIMING_FIELDS, path)
        written["timing"] = path
        written["timing_plot"] = emit_timing_plot(trows, out)
    return written
