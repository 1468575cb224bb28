"""Benchmark harness: BUILD, MEMORY, LATENCY and UPDATE per (graph, model).

A scenario is a list of generator parameter sets crossed with a list of
recommender configurations and repeated ``repetitions`` times. Each cell
loads its graph file, builds a model, samples users for latency and
applies the first ``update_batch_size`` holdout ratings.
"""

from __future__ import annotations

import csv
import gc
import hashlib
import logging
import math
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import NamedTuple

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from recgraph.datamodel import RatingDataModel
from recgraph.generator import Bigraph, GeneratorParams, generate
from recgraph.graphio import read_graph, write_graph
from recgraph.recommenders import (
    AlgorithmKind,
    RecommenderConfig,
    build,
    warm_kernels,
)
from recgraph.similarity import SimilarityKind
from recgraph.stats import SUMMARY_COLUMNS, GraphSummary, summarize

log = logging.getLogger(__name__)

PAPER_T = 10_000
DESK_SCALE = 0.2


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    graphs: list[GeneratorParams]
    configs: list[RecommenderConfig]
    latency_sample_size: int = 500
    update_batch_size: int = 100
    repetitions: int = 3
    warmup: int = 0
    seed: int = 42
    # aggregate / plot layout
    x_variable: str = "T"
    series_variable: str | None = None
    log_scale: bool = False

    def validate(self):
        if not self.graphs:
            raise ScenarioError(f"{self.name}: no graphs")
        if not self.configs:
            raise ScenarioError(f"{self.name}: no recommender configs")
        if self.repetitions < 1:
            raise ScenarioError(f"{self.name}: repetitions must be >= 1")
        if self.latency_sample_size < 0 or self.update_batch_size < 0 or self.warmup < 0:
            raise ScenarioError(f"{self.name}: sizes must be non-negative")

    @property
    def n_cells(self) -> int:
        return len(self.graphs) * len(self.configs) * self.repetitions


@dataclass
class BenchRecord:
    suite: str
    graph: str
    params: GeneratorParams
    summary: GraphSummary | None
    config: RecommenderConfig
    repetition: int
    build_ms: float = math.nan
    memory_bytes: int = 0
    latency_ms_mean: float = math.nan
    latency_ms_p50: float = math.nan
    latency_ms_p90: float = math.nan
    latency_ms_p99: float = math.nan
    latency_sample: int = 0
    update_ms: float = math.nan
    update_accepted: int = 0
    error: str = ""

    def as_row(self) -> dict:
        row = {"suite": self.suite, "graph": self.graph}
        p = self.params.to_dict()
        for name in PARAM_COLUMNS:
            row[name] = p[name]
        summary = self.summary.as_row() if self.summary else {}
        for name in SUMMARY_COLUMNS:
            row[name] = summary.get(name, "")
        c = self.config
        row.update(
            algorithm=c.algorithm.value,
            similarity=c.similarity.value,
            neighborhood_size=c.neighborhood_size,
            threshold="" if c.threshold is None else c.threshold,
            knn_k=c.k,
            factors=c.factors,
            iterations=c.training_iterations,
            top_n=c.top_n,
            repetition=self.repetition,
        )
        for name in METRIC_COLUMNS:
            row[name] = getattr(self, name)
        row["error"] = self.error
        return row


PARAM_COLUMNS = [f.name for f in fields(GeneratorParams) if f.name != "rating_values"]
CONFIG_COLUMNS = [
    "algorithm", "similarity", "neighborhood_size", "threshold", "knn_k",
    "factors", "iterations", "top_n",
]
METRIC_COLUMNS = [
    "build_ms", "memory_bytes", "latency_ms_mean", "latency_ms_p50", "latency_ms_p90",
    "latency_ms_p99", "latency_sample", "update_ms", "update_accepted",
]
TIMING_COLUMNS = [
    "build_ms", "latency_ms_mean", "latency_ms_p50", "latency_ms_p90", "latency_ms_p99",
    "update_ms",
]
RECORD_COLUMNS = (
    ["suite", "graph"] + PARAM_COLUMNS + SUMMARY_COLUMNS + CONFIG_COLUMNS
    + ["repetition"] + METRIC_COLUMNS + ["error"]
)


def _ms_since(start_ns: int) -> float:
    return (time.perf_counter_ns() - start_ns) / 1e6


def params_key(params: GeneratorParams) -> str:
    return hashlib.sha256(params.to_json().encode()).hexdigest()[:16]


def cached_graph(params: GeneratorParams, cache_dir: Path) -> Path:
    """Path of the graph file for ``params``, generating it if missing."""
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"{params_key(params)}.tsv"
    if not path.exists():
        write_graph(generate(params), path)
    return path


def measure_build(config: RecommenderConfig, graph_file) -> tuple:
    """Load the graph file and train; returns ``(model, build_ms)``."""
    gc.collect()
    start = time.perf_counter_ns()
    graph = read_graph(graph_file)
    model = build(config, RatingDataModel.from_graph(graph))
    return model, _ms_since(start)


class LatencyStats(NamedTuple):
    mean: float
    p50: float
    p90: float
    p99: float
    n: int


def sample_users(users, sample_size: int, rng: random.Random) -> list[int]:
    users = sorted(users)
    if sample_size >= len(users):
        return users
    return rng.sample(users, sample_size)


def measure_latency(model, users, sample_size: int, rng: random.Random, warmup: int = 0) -> LatencyStats:
    """Time ``recommend`` for a uniform sample of ``users`` (without
    replacement). Calls that return nothing still count."""
    sample = sample_users(users, sample_size, rng)
    for user in sample[:warmup]:
        model.recommend(user)
    times = []
    for user in sample:
        start = time.perf_counter_ns()
        model.recommend(user)
        times.append(_ms_since(start))
    if not times:
        return LatencyStats(0.0, 0.0, 0.0, 0.0, 0)
    p50, p90, p99 = np.percentile(times, [50, 90, 99])
    return LatencyStats(float(np.mean(times)), float(p50), float(p90), float(p99), len(times))


def measure_update(model, holdout, batch_size: int) -> tuple[float, int]:
    """Time one ``update`` with the first ``batch_size`` holdout ratings;
    returns ``(update_ms, accepted)``."""
    if len(holdout) < batch_size:
        raise ScenarioError(f"need {batch_size} holdout ratings, graph has {len(holdout)}")
    batch = list(holdout[:batch_size])
    start = time.perf_counter_ns()
    result = model.update(batch)
    return _ms_since(start), result.accepted


@dataclass
class _GraphEntry:
    name: str
    params: GeneratorParams
    path: Path
    graph: Bigraph
    summary: GraphSummary
    latency_seed: int


def _prepare_graphs(scenario: Scenario, cache_dir: Path) -> list[_GraphEntry]:
    entries = []
    for index, params in enumerate(scenario.graphs):
        path = cached_graph(params, cache_dir)
        graph = read_graph(path)
        if len(graph.holdout_edges) < scenario.update_batch_size:
            raise ScenarioError(
                f"{scenario.name}: graph {index} has {len(graph.holdout_edges)} holdout edges, "
                f"update_batch_size is {scenario.update_batch_size}"
            )
        entries.append(
            _GraphEntry(
                name=f"g{index:02d}-{params_key(params)[:8]}",
                params=params,
                path=path,
                graph=graph,
                summary=summarize(graph),
                latency_seed=scenario.seed * 1_000_003 + index,
            )
        )
    return entries


def _run_cell(scenario: Scenario, entry: _GraphEntry, config: RecommenderConfig, rep: int) -> BenchRecord:
    record = BenchRecord(scenario.name, entry.name, entry.params, entry.summary, config, rep)
    try:
        model, record.build_ms = measure_build(config, entry.path)
        record.memory_bytes = model.footprint()
        stats = measure_latency(
            model,
            entry.graph.users,
            scenario.latency_sample_size,
            random.Random(entry.latency_seed),
            scenario.warmup,
        )
        record.latency_ms_mean, record.latency_ms_p50, record.latency_ms_p90, record.latency_ms_p99 = stats[:4]
        record.latency_sample = stats.n
        record.update_ms, record.update_accepted = measure_update(
            model, entry.graph.holdout_edges, scenario.update_batch_size
        )
    except Exception as exc:  # noqa: BLE001 - one failed cell must not end the run
        log.exception("cell %s/%s/%s failed", entry.name, config.label, rep)
        record.error = f"{type(exc).__name__}: {exc}"
    return record


def run_scenario(
    scenario: Scenario,
    out_dir=None,
    sequential: bool = False,
    workers: int | None = None,
) -> list[BenchRecord]:
    """Run every (graph, config, repetition) cell.

    Graphs are cached under ``out_dir/graphs``. Records come back in cell
    order whatever the execution mode.
    """
    scenario.validate()
    warm_kernels()
    out_dir = Path(out_dir) if out_dir is not None else Path("bench-out")
    entries = _prepare_graphs(scenario, out_dir / "graphs")
    cells = [
        (entry, config, rep)
        for entry in entries
        for config in scenario.configs
        for rep in range(scenario.repetitions)
    ]
    results: list[BenchRecord | None] = [None] * len(cells)
    lock = threading.Lock()

    def work(index):
        record = _run_cell(scenario, *cells[index])
        with lock:
            results[index] = record

    if sequential:
        for index in range(len(cells)):
            work(index)
    else:
        with ThreadPoolExecutor(max_workers=workers or os.cpu_count() or 1) as pool:
            list(pool.map(work, range(len(cells))))
    return results


# suites -------------------------------------------------------------


def _all_algorithms(threshold: float = 0.0, knn_k: int = 20) -> list[RecommenderConfig]:
    return [
        RecommenderConfig(algorithm=kind, threshold=threshold if kind is AlgorithmKind.USER_THRESHOLD else None, k=knn_k)
        for kind in AlgorithmKind
    ]


BASE = dict(m=100, p=0.5, u=7, v=7, alpha=0.5, beta=0.5, b=0.3)
DENSITY_PAIRS = (
    [(k, k) for k in (3, 6, 12, 24)]
    + [(3, v) for v in (4, 6, 9, 12, 15)]
    + [(u, 3) for u in (4, 6, 9, 12, 15)]
)
SHAPE_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
NEIGHBORHOOD_LEVELS = (50, 100, 200, 400)


def builtin_suites(scale: float = DESK_SCALE, seed: int = 42) -> dict[str, Scenario]:
    """The seven experiment suites; ``T`` is ``round(10 000 * scale)``."""
    if scale <= 0:
        raise ScenarioError("scale must be positive")
    T = max(1, round(PAPER_T * scale))

    def params(index, **overrides):
        d = dict(BASE, T=T, seed=seed + index)
        d.update(overrides)
        return GeneratorParams(**d)

    suites = {}
    suites["scalability"] = Scenario(
        "scalability",
        [params(k, T=max(1, round(T * k / 8))) for k in range(1, 14)],
        _all_algorithms(),
        x_variable="T",
        log_scale=True,
    )
    suites["density"] = Scenario(
        "density",
        [params(k, u=u, v=v) for k, (u, v) in enumerate(DENSITY_PAIRS)],
        _all_algorithms(),
        x_variable="n_edges",
    )
    suites["proportion"] = Scenario(
        "proportion",
        [params(k, p=round(0.1 * (k + 1), 1)) for k in range(9)],
        _all_algorithms(),
        x_variable="p",
    )
    suites["clustering"] = Scenario(
        "clustering",
        [params(k, u=12, v=12, alpha=0.8, beta=0.8, b=round(0.1 * k, 1)) for k in range(11)],
        _all_algorithms(),
        x_variable="b",
    )
    suites["shapes"] = Scenario(
        "shapes",
        [
            params(k, alpha=a, beta=bt)
            for k, (a, bt) in enumerate((a, bt) for bt in SHAPE_GRID for a in SHAPE_GRID)
        ],
        _all_algorithms(),
        x_variable="alpha",
        series_variable="beta",
    )
    first_density = [params(k, u=u, v=v) for k, (u, v) in enumerate(DENSITY_PAIRS[:4])]
    suites["similarity"] = Scenario(
        "similarity",
        first_density,
        [RecommenderConfig(similarity=kind) for kind in SimilarityKind],
        x_variable="n_edges",
        series_variable="similarity",
    )
    suites["neighborhood"] = Scenario(
        "neighborhood",
        first_density,
        [RecommenderConfig(neighborhood_size=n) for n in NEIGHBORHOOD_LEVELS],
        x_variable="n_edges",
        series_variable="neighborhood_size",
    )
    return suites


# scenario files -----------------------------------------------------

SCENARIO_KEYS = (
    "name", "latency_sample_size", "update_batch_size", "repetitions", "warmup",
    "seed", "x_variable", "series_variable", "log_scale",
)
# scenario-file key -> RecommenderConfig field; same names as the CLI flags
RECOMMENDER_KEYS = {
    "algo": "algorithm",
    "similarity": "similarity",
    "neighborhood": "neighborhood_size",
    "threshold": "threshold",
    "knn-k": "k",
    "factors": "factors",
    "iterations": "training_iterations",
    "top-n": "top_n",
    "seed": "seed",
}


def config_from_options(options: dict) -> RecommenderConfig:
    unknown = sorted(set(options) - set(RECOMMENDER_KEYS))
    if unknown:
        raise ScenarioError(f"unknown recommender keys: {', '.join(unknown)}")
    return RecommenderConfig(**{RECOMMENDER_KEYS[k]: v for k, v in options.items()})


def scenario_from_dict(doc: dict) -> Scenario:
    """Build a Scenario from a parsed scenario file.

    Layout: a ``[scenario]`` table with Scenario fields, ``[[graphs]]``
    tables with GeneratorParams fields and ``[[recommenders]]`` tables
    with the CLI flag names (``algo``, ``knn-k``, ``top-n``...).
    """
    unknown = sorted(set(doc) - {"scenario", "graphs", "recommenders"})
    if unknown:
        raise ScenarioError(f"unknown tables: {', '.join(unknown)}")
    head = dict(doc.get("scenario", {}))
    bad = sorted(set(head) - set(SCENARIO_KEYS))
    if bad:
        raise ScenarioError(f"unknown scenario keys: {', '.join(bad)}")
    graphs = [GeneratorParams.from_dict(entry) for entry in doc.get("graphs", [])]
    configs = [config_from_options(entry) for entry in doc.get("recommenders", [])]
    head.setdefault("name", "custom")
    scenario = Scenario(graphs=graphs, configs=configs, **head)
    scenario.validate()
    return scenario


def load_scenario(path) -> Scenario:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError(f"{path}: {exc}") from exc
    return scenario_from_dict(doc)


# export -------------------------------------------------------------


def _fmt(value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return value


def write_records(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RECORD_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for record in records:
            row = record.as_row() if isinstance(record, BenchRecord) else record
            writer.writerow({k: _fmt(row[k]) for k in RECORD_COLUMNS})


def read_records(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RECORD_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return list(reader)


AGGREGATE_METRICS = [
    "build_ms", "memory_bytes", "latency_ms_mean", "latency_ms_p50", "latency_ms_p90",
    "latency_ms_p99", "update_ms",
]


def aggregate(records, scenario: Scenario | None = None) -> list[dict]:
    """Mean over repetitions per (graph, config); failed cells are left out
    of the means."""
    x_var = scenario.x_variable if scenario else "T"
    series_var = scenario.series_variable if scenario else None
    groups: dict[tuple, list[dict]] = {}
    for record in records:
        row = record.as_row() if isinstance(record, BenchRecord) else record
        key = (row["graph"],) + tuple(str(row[c]) for c in CONFIG_COLUMNS)
        groups.setdefault(key, []).append(row)
    out = []
    for rows in groups.values():
        first = rows[0]
        ok = [r for r in rows if not r["error"]]
        agg = {
            "x": first[x_var],
            "x_variable": x_var,
            "series": first[series_var] if series_var else "",
            "graph": first["graph"],
        }
        for name in CONFIG_COLUMNS + PARAM_COLUMNS + ["n_users", "n_items", "n_edges", "mean_blcc"]:
            agg[name] = first[name]
        for name in AGGREGATE_METRICS:
            values = [float(r[name]) for r in ok]
            agg[name] = sum(values) / len(values) if values else math.nan
        agg["repetitions"] = len(ok)
        agg["failures"] = len(rows) - len(ok)
        agg["log_scale"] = int(bool(scenario and scenario.log_scale))
        out.append(agg)
    out.sort(key=lambda a: (a["algorithm"], str(a["series"]), float(a["x"]), a["graph"], a["similarity"], int(a["neighborhood_size"])))
    return out


AGGREGATE_COLUMNS = (
    ["x", "x_variable", "series", "graph"] + CONFIG_COLUMNS + PARAM_COLUMNS
    + ["n_users", "n_items", "n_edges", "mean_blcc"] + AGGREGATE_METRICS
    + ["repetitions", "failures", "log_scale"]
)


def write_aggregate(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=AGGREGATE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in AGGREGATE_COLUMNS})


def export(records, out_dir, scenario: Scenario | None = None, figures: bool = True) -> dict[str, Path]:
    """Write ``records.csv``, ``aggregate_<suite>.csv``, ``failures.log`` and
    (optionally) one PNG per metric. Returns the written paths."""
    records = list(records)
    if not records:
        raise ValueError("nothing to export")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    suite = scenario.name if scenario else records[0].suite
    paths = {"records": out_dir / "records.csv", "aggregate": out_dir / f"aggregate_{suite}.csv"}
    write_records(records, paths["records"])
    rows = aggregate(records, scenario)
    write_aggregate(rows, paths["aggregate"])
    paths["failures"] = out_dir / "failures.log"
    with open(paths["failures"], "w") as fh:
        for r in records:
            if r.error:
                fh.write(f"{r.suite}\t{r.graph}\t{r.config.label}\t{r.repetition}\t{r.error}\n")
    if figures:
        from recgraph.plotting import render_aggregate

        for metric, path in render_aggregate(rows, out_dir, suite).items():
            paths[f"figure_{metric}"] = path
    return paths


def non_timing_view(path) -> list[list[str]]:
    """Rows of a records CSV with the timing columns dropped."""
    keep = [c for c in RECORD_COLUMNS if c not in TIMING_COLUMNS]
    return [[row[c] for c in keep] for row in read_records(path)]
