"""Config-driven experiment runs that write reproducible result bundles.

Two experiment kinds are supported. The device reproduction builds a
lossy single-loop interferometer fed by identical squeezers, enumerates
its low-order detection statistics, extracts the sampled graph, and
races seeded subgraph searches against uniform sampling. The loss sweep
plants dense subgraphs in random host graphs, encodes them with varying
brightness and uniform loss, and tracks how distribution quality and
search performance degrade.

Every random quantity inside a run is drawn from a stream derived from
the master seed and a fixed role key, so a (config, seed) pair pins
down every output byte. Bundles are a directory of CSV files plus a
``meta.json`` that embeds the config hash, code version, and all
derived sub-seeds.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import tomli

from . import __version__
from .distributions import (
    PatternDistribution,
    distribution_to_csv,
    enumerate_distribution,
    ideal_graph_distribution,
    tvd,
)
from .encoding import encode_graph, rescale_for_mean_photons, takagi
from .errors import ConfigError
from .gaussian import (
    GaussianState,
    SqueezerSpec,
    apply_channel,
    kernel_matrix,
    squeezed_vacuum_state,
    uniform_loss,
)
from .graphs import WeightedGraph, densest_subgraph_bruteforce, graph_from_kernel, planted_graph
from .search import (
    SearchConfig,
    crossing_budget,
    density_at_budget,
    geometric_budgets,
    random_search,
    samples_at_density_fraction,
)
from .timebin import SingleLoopSpec, single_loop_transfer

_LOSS_STAGES = ("coupling", "switching", "delay", "detection")
_BUDGET_GRIDS = ("dense", "geometric")
_MISSING = object()


# ---------------------------------------------------------------------------
# config schema


class _Table:
    """Mapping view that tracks consumed keys and rejects leftovers."""

    def __init__(self, mapping, name: str):
        if not isinstance(mapping, dict):
            raise ConfigError(f"{name or 'config'} must be a table")
        self._map = dict(mapping)
        self._name = name

    def _dotted(self, key: str) -> str:
        return f"{self._name}.{key}" if self._name else key

    def has(self, key: str) -> bool:
        return key in self._map

    def child(self, key: str) -> "_Table":
        value = self._map.pop(key, _MISSING)
        if value is _MISSING:
            raise ConfigError(f"missing table {self._dotted(key)}")
        return _Table(value, self._dotted(key))

    def take(self, key: str, caster, default=_MISSING):
        if key not in self._map:
            if default is _MISSING:
                raise ConfigError(f"missing key {self._dotted(key)}")
            return default
        raw = self._map.pop(key)
        try:
            return caster(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {self._dotted(key)}: {exc}") from exc

    def done(self):
        if self._map:
            names = ", ".join(sorted(self._map))
            raise ConfigError(f"unknown keys in {self._name or 'config'}: {names}")


def _as_int(raw) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ValueError(f"expected an integer, got {raw!r}")
    return int(raw)


def _as_pos_int(raw) -> int:
    value = _as_int(raw)
    if value < 1:
        raise ValueError(f"expected a positive integer, got {value}")
    return value


def _as_seed(raw) -> int:
    value = _as_int(raw)
    if value < 0:
        raise ValueError(f"seed must be non-negative, got {value}")
    return value


def _as_float(raw) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ValueError(f"expected a number, got {raw!r}")
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {value!r}")
    return value


def _as_transmission(raw) -> float:
    value = _as_float(raw)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"transmission must lie in [0, 1], got {value}")
    return value


def _as_open_unit(raw) -> float:
    value = _as_float(raw)
    if not 0.0 < value < 1.0:
        raise ValueError(f"expected a value in (0, 1), got {value}")
    return value


def _as_probability(raw) -> float:
    value = _as_float(raw)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {value}")
    return value


def _as_str(raw) -> str:
    if not isinstance(raw, str):
        raise ValueError(f"expected a string, got {raw!r}")
    return raw


def _list_of(item_caster):
    def cast(raw):
        if not isinstance(raw, list) or not raw:
            raise ValueError(f"expected a non-empty list, got {raw!r}")
        return tuple(item_caster(item) for item in raw)

    return cast


def _distinct(values: Sequence, label: str):
    if len(set(values)) != len(values):
        raise ConfigError(f"{label} must not repeat values")


@dataclass(frozen=True)
class LossSection:
    """Per-stage power transmissions and where each stage acts.

    Stages named in ``in_loop`` are paid once per loop circulation and
    shape the transfer matrix; the rest commute with the interferometer
    and are applied as a single uniform factor at the output.
    """

    coupling: float
    switching: float
    delay: float
    detection: float
    in_loop: Tuple[str, ...]

    def in_loop_transmission(self) -> float:
        product = 1.0
        for name in self.in_loop:
            product *= getattr(self, name)
        return product

    def uniform_transmission(self) -> float:
        product = 1.0
        for name in _LOSS_STAGES:
            if name not in self.in_loop:
                product *= getattr(self, name)
        return product


@dataclass(frozen=True)
class DeviceSection:
    num_bins: int
    occupied_bins: int
    transmissivity: float
    phase: float
    loss: LossSection


@dataclass(frozen=True)
class SourceSection:
    tanh_values: Tuple[float, ...]
    reference_tanh: float
    pump_phase: float


@dataclass(frozen=True)
class DeviceAnalysisSection:
    photon_counts: Tuple[int, ...]
    subgraph_sizes: Tuple[int, ...]
    node_window: int
    max_budget: int
    budget_grid: str
    budget_points: int
    repeats: int
    density_fraction: float
    density_budget: int
    bootstrap_resamples: int


@dataclass(frozen=True)
class GraphSection:
    instances: int
    small_nodes: int
    small_edge_prob: float
    large_nodes: int
    large_edge_prob: float
    attach_count: int
    attach_mode: str


@dataclass(frozen=True)
class SweepSection:
    transmissions: Tuple[float, ...]
    mean_photons_per_mode: Tuple[float, ...]
    photons: int


@dataclass(frozen=True)
class SweepAnalysisSection:
    subgraph_size: int
    repeats: int
    max_budget: int
    budget_grid: str
    budget_points: int
    threshold_fraction: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed and validated experiment description.

    Only the sections matching ``experiment`` are populated. ``raw``
    echoes the parsed file for embedding in result metadata and
    ``raw_text`` preserves the exact bytes that the config hash covers.
    """

    experiment: str
    master_seed: int
    device: Optional[DeviceSection] = None
    source: Optional[SourceSection] = None
    device_analysis: Optional[DeviceAnalysisSection] = None
    graph: Optional[GraphSection] = None
    sweep: Optional[SweepSection] = None
    sweep_analysis: Optional[SweepAnalysisSection] = None
    raw: dict = field(default_factory=dict)
    raw_text: str = ""

    @property
    def config_sha256(self) -> str:
        return hashlib.sha256(self.raw_text.encode("utf-8")).hexdigest()


def _parse_loss(table: _Table) -> LossSection:
    stages = {name: table.take(name, _as_transmission, default=1.0) for name in _LOSS_STAGES}
    in_loop = table.take("in_loop", _list_of(_as_str), default=())
    table.done()
    seen = set()
    for name in in_loop:
        if name not in _LOSS_STAGES:
            raise ConfigError(f"unknown loss stage {name!r} in device.loss.in_loop")
        if name in seen:
            raise ConfigError(f"loss stage {name!r} listed twice in device.loss.in_loop")
        seen.add(name)
    return LossSection(in_loop=tuple(in_loop), **stages)


def _parse_device(table: _Table) -> DeviceSection:
    loss = _parse_loss(table.child("loss")) if table.has("loss") else LossSection(1.0, 1.0, 1.0, 1.0, ())
    section = DeviceSection(
        num_bins=table.take("num_bins", _as_pos_int),
        occupied_bins=table.take("occupied_bins", _as_pos_int),
        transmissivity=table.take("transmissivity", _as_transmission),
        phase=table.take("phase", _as_float, default=0.0),
        loss=loss,
    )
    table.done()
    if section.occupied_bins > section.num_bins:
        raise ConfigError(
            f"device.occupied_bins = {section.occupied_bins} exceeds num_bins = {section.num_bins}"
        )
    return section


def _parse_source(table: _Table) -> SourceSection:
    section = SourceSection(
        tanh_values=table.take("tanh_values", _list_of(_as_open_unit)),
        reference_tanh=table.take("reference_tanh", _as_open_unit),
        pump_phase=table.take("pump_phase", _as_float, default=0.0),
    )
    table.done()
    _distinct(section.tanh_values, "source.tanh_values")
    return section


def _parse_device_analysis(table: _Table) -> DeviceAnalysisSection:
    section = DeviceAnalysisSection(
        photon_counts=table.take("photon_counts", _list_of(_as_pos_int)),
        subgraph_sizes=table.take("subgraph_sizes", _list_of(_as_pos_int)),
        node_window=table.take("node_window", _as_pos_int),
        max_budget=table.take("max_budget", _as_pos_int),
        budget_grid=table.take("budget_grid", _as_str, default="dense"),
        budget_points=table.take("budget_points", _as_pos_int, default=60),
        repeats=table.take("repeats", _as_pos_int),
        density_fraction=table.take("density_fraction", _as_float, default=0.95),
        density_budget=table.take("density_budget", _as_pos_int, default=50),
        bootstrap_resamples=table.take("bootstrap_resamples", _as_pos_int, default=1000),
    )
    table.done()
    _distinct(section.photon_counts, "analysis.photon_counts")
    _distinct(section.subgraph_sizes, "analysis.subgraph_sizes")
    if section.budget_grid not in _BUDGET_GRIDS:
        raise ConfigError(f"analysis.budget_grid must be one of {_BUDGET_GRIDS}")
    if not 0.0 < section.density_fraction <= 1.0:
        raise ConfigError("analysis.density_fraction must lie in (0, 1]")
    if section.repeats < 2:
        raise ConfigError("analysis.repeats must be at least 2 for error estimates")
    if any(k < 2 for k in section.subgraph_sizes):
        raise ConfigError("analysis.subgraph_sizes entries must be at least 2")
    if section.density_budget > section.max_budget:
        raise ConfigError("analysis.density_budget exceeds max_budget")
    return section


def _parse_graph(table: _Table) -> GraphSection:
    section = GraphSection(
        instances=table.take("instances", _as_pos_int),
        small_nodes=table.take("small_nodes", _as_pos_int),
        small_edge_prob=table.take("small_edge_prob", _as_probability),
        large_nodes=table.take("large_nodes", _as_pos_int),
        large_edge_prob=table.take("large_edge_prob", _as_probability),
        attach_count=table.take("attach_count", _as_pos_int),
        attach_mode=table.take("attach_mode", _as_str, default="global"),
    )
    table.done()
    if section.attach_mode not in ("global", "per_node"):
        raise ConfigError("graph.attach_mode must be 'global' or 'per_node'")
    return section


def _parse_sweep(table: _Table) -> SweepSection:
    section = SweepSection(
        transmissions=table.take("transmissions", _list_of(_as_transmission)),
        mean_photons_per_mode=table.take("mean_photons_per_mode", _list_of(_as_float)),
        photons=table.take("photons", _as_pos_int),
    )
    table.done()
    _distinct(section.transmissions, "sweep.transmissions")
    _distinct(section.mean_photons_per_mode, "sweep.mean_photons_per_mode")
    if any(eta <= 0.0 for eta in section.transmissions):
        raise ConfigError("sweep.transmissions must be positive")
    if any(mean <= 0.0 for mean in section.mean_photons_per_mode):
        raise ConfigError("sweep.mean_photons_per_mode must be positive")
    if section.photons < 2 or section.photons % 2:
        # The lossless reference mass is computed in closed form from the
        # even-sector graph distribution; odd counts have no such anchor.
        raise ConfigError("sweep.photons must be an even number of at least 2")
    return section


def _parse_sweep_analysis(table: _Table) -> SweepAnalysisSection:
    section = SweepAnalysisSection(
        subgraph_size=table.take("subgraph_size", _as_pos_int),
        repeats=table.take("repeats", _as_pos_int),
        max_budget=table.take("max_budget", _as_pos_int),
        budget_grid=table.take("budget_grid", _as_str, default="geometric"),
        budget_points=table.take("budget_points", _as_pos_int, default=60),
        threshold_fraction=table.take("threshold_fraction", _as_float, default=0.75),
    )
    table.done()
    if section.budget_grid not in _BUDGET_GRIDS:
        raise ConfigError(f"analysis.budget_grid must be one of {_BUDGET_GRIDS}")
    if not 0.0 < section.threshold_fraction <= 1.0:
        raise ConfigError("analysis.threshold_fraction must lie in (0, 1]")
    if section.repeats < 2:
        raise ConfigError("analysis.repeats must be at least 2 for error estimates")
    return section


def load_config_text(text: str) -> ExperimentConfig:
    """Parse and validate a TOML experiment config from a string."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    root = _Table(data, "")
    experiment = root.take("experiment", _as_str)
    run = root.child("run")
    master_seed = run.take("master_seed", _as_seed)
    run.done()
    if experiment == "device-reproduction":
        device = _parse_device(root.child("device"))
        source = _parse_source(root.child("source"))
        analysis = _parse_device_analysis(root.child("analysis"))
        root.done()
        if analysis.node_window > device.num_bins:
            raise ConfigError("analysis.node_window exceeds device.num_bins")
        if max(analysis.subgraph_sizes) > analysis.node_window:
            raise ConfigError("analysis.subgraph_sizes exceed the node window")
        if max(analysis.photon_counts) > 2 * device.num_bins:
            raise ConfigError("analysis.photon_counts are too large for the device")
        return ExperimentConfig(
            experiment=experiment,
            master_seed=master_seed,
            device=device,
            source=source,
            device_analysis=analysis,
            raw=data,
            raw_text=text,
        )
    if experiment == "loss-sweep":
        graph = _parse_graph(root.child("graph"))
        sweep = _parse_sweep(root.child("sweep"))
        analysis = _parse_sweep_analysis(root.child("analysis"))
        root.done()
        if analysis.subgraph_size != sweep.photons:
            raise ConfigError(
                "analysis.subgraph_size must equal sweep.photons: "
                "each accepted sample seeds one subset of that size"
            )
        num_nodes = graph.small_nodes + graph.large_nodes
        if analysis.subgraph_size > num_nodes:
            raise ConfigError("analysis.subgraph_size exceeds the planted graph size")
        return ExperimentConfig(
            experiment=experiment,
            master_seed=master_seed,
            graph=graph,
            sweep=sweep,
            sweep_analysis=analysis,
            raw=data,
            raw_text=text,
        )
    raise ConfigError(f"unknown experiment kind {experiment!r}")


def load_config(path) -> ExperimentConfig:
    """Read an experiment config file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return load_config_text(text)


# ---------------------------------------------------------------------------
# run plumbing


@contextmanager
def stage(name: str):
    """Tag any failure with the pipeline stage that raised it."""
    try:
        yield
    except Exception as exc:
        if exc.args and isinstance(exc.args[0], str):
            exc.args = (f"[{name}] {exc.args[0]}",) + exc.args[1:]
        else:
            exc.args = (f"[{name}]",) + exc.args
        raise


def derive_seed(master_seed: int, *key: int) -> int:
    """Deterministic 64-bit stream seed for a labeled role under one master."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(part) for part in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _effective_seed(cfg: ExperimentConfig, master_seed: Optional[int]) -> int:
    if master_seed is None:
        return cfg.master_seed
    try:
        return _as_seed(master_seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad master seed override: {exc}") from exc


def _validate_threads(threads) -> int:
    try:
        value = _as_pos_int(threads)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad thread count: {exc}") from exc
    return value


def build_device_state(device: DeviceSection, tanh_value: float, pump_phase: float) -> GaussianState:
    """Output state of the single-loop device for one source setting."""
    if not 0.0 < tanh_value < 1.0:
        raise ConfigError(f"tanh value must lie in (0, 1), got {tanh_value}")
    spec = SingleLoopSpec(
        num_bins=device.num_bins,
        transmissivity=device.transmissivity,
        phase=device.phase,
        loop_transmission=device.loss.in_loop_transmission(),
    )
    r = float(np.arctanh(tanh_value))
    squeezers = [SqueezerSpec(r, pump_phase)] * device.occupied_bins
    squeezers += [SqueezerSpec(0.0)] * (device.num_bins - device.occupied_bins)
    state = apply_channel(squeezed_vacuum_state(squeezers), single_loop_transfer(spec))
    return uniform_loss(state, device.loss.uniform_transmission())


def _budget_grid(grid: str, max_budget: int, points: int) -> Tuple[int, ...]:
    if grid == "dense":
        return tuple(range(1, max_budget + 1))
    return geometric_budgets(max_budget, points)


def _fmt(value: float) -> str:
    return repr(float(value))


def _csv_text(comments: Sequence[Tuple[str, str]], header: str, rows: Iterable[Sequence[str]]) -> str:
    lines = [f"# {key}={value}" for key, value in comments]
    lines.append(header)
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def _write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _write_meta(path: str, payload: dict):
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _crossing_or_none(curve, d_max: float, threshold: float) -> Optional[int]:
    try:
        samples, _ = crossing_budget(curve, d_max, 1.0, threshold_fraction=threshold)
    except ValueError:
        return None
    return int(samples)


# ---------------------------------------------------------------------------
# device reproduction


def _seed_source_rows(source: SourceSection) -> List[Tuple[str, str, Optional[float]]]:
    rows: List[Tuple[str, str, Optional[float]]] = [("ideal", "ideal", None)]
    for lam in source.tanh_values:
        rows.append((f"gbs-{lam:g}", "gbs-model", lam))
    rows.append(("uniform", "uniform", None))
    return rows


def run_device_reproduction(cfg: ExperimentConfig, out_dir, master_seed=None, threads=1) -> dict:
    """Reproduce the reference-device study and write its result bundle.

    The bundle holds the N-fold detection distributions of the reference
    source setting, the extracted device graph, density-vs-budget curves
    for every seed source and subgraph size, and a summary table of
    samples-to-95%-density and density-at-fixed-budget metrics.
    """
    if cfg.experiment != "device-reproduction":
        raise ConfigError(f"config describes {cfg.experiment!r}, not a device reproduction")
    threads = _validate_threads(threads)
    seed0 = _effective_seed(cfg, master_seed)
    device, source, analysis = cfg.device, cfg.source, cfg.device_analysis

    with stage("device"):
        states = {lam: build_device_state(device, lam, source.pump_phase) for lam in source.tanh_values}
        if source.reference_tanh in states:
            reference = states[source.reference_tanh]
        else:
            reference = build_device_state(device, source.reference_tanh, source.pump_phase)

    with stage("distributions"):
        nfold = {
            count: enumerate_distribution(reference, count, collision_free=False)
            for count in analysis.photon_counts
        }

    with stage("graph"):
        full_graph, self_loops = graph_from_kernel(kernel_matrix(reference))
        window = analysis.node_window
        window_graph = WeightedGraph.from_adjacency(
            full_graph.adjacency[:window, :window], full_graph.node_labels[:window]
        )

    with stage("search"):
        budgets = _budget_grid(analysis.budget_grid, analysis.max_budget, analysis.budget_points)
        rows_spec = _seed_source_rows(source)
        curves: Dict[int, Dict[str, object]] = {}
        d_max: Dict[int, float] = {}
        sub_seeds: Dict[str, Dict[str, int]] = {}
        for k in analysis.subgraph_sizes:
            _, d_max[k] = densest_subgraph_bruteforce(window_graph, k)
            per_source = {}
            seeds_k = {}
            for slot, (label, kind, lam) in enumerate(rows_spec):
                seed = derive_seed(seed0, k, slot)
                seeds_k[label] = seed
                if kind == "ideal":
                    dist = ideal_graph_distribution(window_graph.adjacency, k)
                elif kind == "gbs-model":
                    dist = enumerate_distribution(
                        states[lam], k, collision_free=True, mode_subset=range(window)
                    )
                else:
                    dist = None
                search_cfg = SearchConfig(k, budgets, analysis.repeats, kind, seed)
                per_source[label] = random_search(window_graph, search_cfg, distribution=dist)
            curves[k] = per_source
            sub_seeds[str(k)] = seeds_k

    with stage("summary"):
        summary = []
        for k in analysis.subgraph_sizes:
            for label, _, _ in rows_spec:
                curve = curves[k][label]
                estimate = samples_at_density_fraction(
                    curve, analysis.density_fraction, d_max[k], resamples=analysis.bootstrap_resamples
                )
                dens, dens_err = density_at_budget(curve, analysis.density_budget)
                summary.append(
                    {
                        "k": k,
                        "source": label,
                        "d_max": d_max[k],
                        "samples_value": estimate.value,
                        "samples_err": estimate.uncertainty,
                        "samples_exceeded": estimate.exceeded,
                        "density_value": dens,
                        "density_err": dens_err,
                    }
                )

    with stage("write"):
        os.makedirs(out_dir, exist_ok=True)
        config_hash = cfg.config_sha256
        dist_files = {}
        for count, dist in nfold.items():
            name = f"nfold_{count}.csv"
            dist_files[str(count)] = name
            _write_text(os.path.join(out_dir, name), distribution_to_csv(dist, device_hash=config_hash))
        _write_text(os.path.join(out_dir, "graph.json"), full_graph.to_json())

        curve_rows = []
        for k in analysis.subgraph_sizes:
            for label, _, _ in rows_spec:
                curve = curves[k][label]
                for budget, mean, err in zip(curve.budgets, curve.mean_density, curve.stderr):
                    curve_rows.append((str(k), label, str(int(budget)), _fmt(mean), _fmt(err)))
        _write_text(
            os.path.join(out_dir, "search_curves.csv"),
            _csv_text(
                [
                    ("config", config_hash),
                    ("graph", window_graph.digest()),
                    ("repeats", str(analysis.repeats)),
                    ("uncertainty", "standard error over repeats"),
                ],
                "k,source,budget,mean_density,stderr",
                curve_rows,
            ),
        )

        summary_rows = [
            (
                str(row["k"]),
                row["source"],
                _fmt(row["d_max"]),
                str(int(row["samples_value"])),
                _fmt(row["samples_err"]),
                "true" if row["samples_exceeded"] else "false",
                _fmt(row["density_value"]),
                _fmt(row["density_err"]),
            )
            for row in summary
        ]
        _write_text(
            os.path.join(out_dir, "summary.csv"),
            _csv_text(
                [
                    ("config", config_hash),
                    ("density_fraction", _fmt(analysis.density_fraction)),
                    ("density_budget", str(analysis.density_budget)),
                    ("max_budget", str(analysis.max_budget)),
                    ("uncertainty", "bootstrap over repeats"),
                ],
                "k,source,d_max,samples_value,samples_err,samples_exceeded,density_value,density_err",
                summary_rows,
            ),
        )

        files = {
            "distributions": dist_files,
            "graph": "graph.json",
            "search_curves": "search_curves.csv",
            "summary": "summary.csv",
        }
        meta = {
            "schema": "device-reproduction/1",
            "version": __version__,
            "config_sha256": config_hash,
            "master_seed": seed0,
            "threads": threads,
            "config": cfg.raw,
            "sub_seeds": {"search": sub_seeds},
            "graph_digest": full_graph.digest(),
            "window_digest": window_graph.digest(),
            "d_max": {str(k): d_max[k] for k in analysis.subgraph_sizes},
            "kernel_self_loops": [float(value) for value in self_loops],
            "files": files,
        }
        _write_meta(os.path.join(out_dir, "meta.json"), meta)

    return {"out_dir": str(out_dir), "files": files, "d_max": d_max, "summary": summary}


# ---------------------------------------------------------------------------
# loss sweep


def lossless_runs_per_sample(values: np.ndarray, scale: float, photons: int, graph_norm: float) -> float:
    """Expected device runs per accepted sample for the lossless encoding.

    The collision-free sector mass factors into the vacuum probability,
    the encoding scale raised to the photon count, and the norm of the
    graph-side distribution, so no state enumeration is needed.
    """
    scaled = scale * np.asarray(values, dtype=float)
    vacuum = float(np.prod(np.sqrt(1.0 - scaled**2)))
    mass = vacuum * scale**photons * graph_norm
    if mass <= 0.0:
        raise ConfigError("lossless sample mass vanished; check the encoding scale")
    return 1.0 / mass


def run_loss_sweep(cfg: ExperimentConfig, out_dir, master_seed=None, threads=1) -> dict:
    """Run the planted-graph loss and brightness sweep bundle.

    For every planted instance the bundle records, per (transmission,
    brightness) grid point, the distance of the lossy sixfold
    distribution from the lossless one, the expected runs per accepted
    sample, the seeded search curve, and its crossing budget against a
    density threshold, plus one uniform-seeded baseline per instance.
    """
    if cfg.experiment != "loss-sweep":
        raise ConfigError(f"config describes {cfg.experiment!r}, not a loss sweep")
    threads = _validate_threads(threads)
    seed0 = _effective_seed(cfg, master_seed)
    graph_cfg, sweep, analysis = cfg.graph, cfg.sweep, cfg.sweep_analysis

    budgets = _budget_grid(analysis.budget_grid, analysis.max_budget, analysis.budget_points)
    k = analysis.subgraph_size
    photons = sweep.photons
    pad = max(2, len(str(graph_cfg.instances - 1)))

    rows_tvd = []
    rows_curves = []
    rows_crossings = []
    graph_meta = {}
    graph_files = {}
    os.makedirs(out_dir, exist_ok=True)
    config_hash = cfg.config_sha256

    for index in range(graph_cfg.instances):
        tag = f"{index:0{pad}d}"
        with stage(f"plant-{tag}"):
            graph_seed = derive_seed(seed0, index, 0)
            graph = planted_graph(
                graph_seed,
                n_small=graph_cfg.small_nodes,
                p_small=graph_cfg.small_edge_prob,
                n_large=graph_cfg.large_nodes,
                p_large=graph_cfg.large_edge_prob,
                k_attach=graph_cfg.attach_count,
                attach_mode=graph_cfg.attach_mode,
            )
            densest, d_max = densest_subgraph_bruteforce(graph, k)
            values = takagi(graph.adjacency).values
            lossless = ideal_graph_distribution(graph.adjacency, photons)
            name = f"graph_{tag}.json"
            _write_text(os.path.join(out_dir, name), graph.to_json())
            graph_files[str(index)] = name

        with stage(f"uniform-{tag}"):
            uniform_seed = derive_seed(seed0, index, 1)
            uniform_curve = random_search(
                graph, SearchConfig(k, budgets, analysis.repeats, "uniform", uniform_seed)
            )
            uniform_cross = _crossing_or_none(uniform_curve, d_max, analysis.threshold_fraction)
            for budget, mean, err in zip(
                uniform_curve.budgets, uniform_curve.mean_density, uniform_curve.stderr
            ):
                rows_curves.append((str(index), "", "", "uniform", str(int(budget)), _fmt(mean), _fmt(err)))
            rows_crossings.append(
                (
                    str(index),
                    "",
                    "",
                    "uniform",
                    str(uniform_cross if uniform_cross is not None else analysis.max_budget),
                    "",
                    "false" if uniform_cross is not None else "true",
                )
            )

        grid_seeds = []
        row_index = 0
        for eta in sweep.transmissions:
            for mean_photons in sweep.mean_photons_per_mode:
                with stage(f"grid-{tag}-eta{eta:g}-n{mean_photons:g}"):
                    params = rescale_for_mean_photons(values, mean_photons * graph.num_nodes)
                    if eta == 1.0:
                        dist = lossless
                        distance = 0.0
                        runs = lossless_runs_per_sample(values, params.c, photons, lossless.norm)
                    else:
                        squeezers, transfer = encode_graph(graph.adjacency, params)
                        lossy = uniform_loss(
                            apply_channel(squeezed_vacuum_state(squeezers), transfer), eta
                        )
                        dist = enumerate_distribution(lossy, photons, collision_free=True)
                        distance = tvd(lossless, dist)
                        runs = 1.0 / dist.norm
                    search_seed = derive_seed(seed0, index, 2 + row_index)
                    grid_seeds.append(search_seed)
                    curve = random_search(
                        graph,
                        SearchConfig(k, budgets, analysis.repeats, "gbs-model", search_seed),
                        distribution=dist,
                    )
                    cross = _crossing_or_none(curve, d_max, analysis.threshold_fraction)
                    eta_text = _fmt(eta)
                    mean_text = _fmt(mean_photons)
                    rows_tvd.append((str(index), eta_text, mean_text, _fmt(distance), _fmt(runs)))
                    for budget, mean, err in zip(curve.budgets, curve.mean_density, curve.stderr):
                        rows_curves.append(
                            (str(index), eta_text, mean_text, "gbs-model", str(int(budget)), _fmt(mean), _fmt(err))
                        )
                    rows_crossings.append(
                        (
                            str(index),
                            eta_text,
                            mean_text,
                            "gbs-model",
                            str(cross if cross is not None else analysis.max_budget),
                            _fmt(cross * runs) if cross is not None else "",
                            "false" if cross is not None else "true",
                        )
                    )
                row_index += 1

        graph_meta[str(index)] = {
            "seed": graph_seed,
            "digest": graph.digest(),
            "d_max": d_max,
            "densest_subset": [int(node) for node in densest],
            "uniform_seed": uniform_seed,
            "grid_seeds": grid_seeds,
        }

    with stage("write"):
        _write_text(
            os.path.join(out_dir, "fig7a.csv"),
            _csv_text(
                [("config", config_hash), ("photons", str(photons))],
                "graph,eta,mean_photons,tvd,runs_per_sample",
                rows_tvd,
            ),
        )
        _write_text(
            os.path.join(out_dir, "fig7b.csv"),
            _csv_text(
                [
                    ("config", config_hash),
                    ("repeats", str(analysis.repeats)),
                    ("uncertainty", "standard error over repeats"),
                ],
                "graph,eta,mean_photons,source,budget,mean_density,stderr",
                rows_curves,
            ),
        )
        _write_text(
            os.path.join(out_dir, "fig7c.csv"),
            _csv_text(
                [
                    ("config", config_hash),
                    ("threshold_fraction", _fmt(analysis.threshold_fraction)),
                    ("max_budget", str(analysis.max_budget)),
                ],
                "graph,eta,mean_photons,source,crossing_samples,crossing_runs,exceeded",
                rows_crossings,
            ),
        )
        files = {
            "tvd": "fig7a.csv",
            "curves": "fig7b.csv",
            "crossings": "fig7c.csv",
            "graphs": graph_files,
        }
        meta = {
            "schema": "loss-sweep/1",
            "version": __version__,
            "config_sha256": config_hash,
            "master_seed": seed0,
            "threads": threads,
            "config": cfg.raw,
            "graphs": graph_meta,
            "grid": {
                "transmissions": [float(eta) for eta in sweep.transmissions],
                "mean_photons_per_mode": [float(m) for m in sweep.mean_photons_per_mode],
            },
            "files": files,
        }
        _write_meta(os.path.join(out_dir, "meta.json"), meta)

    return {"out_dir": str(out_dir), "files": files, "graphs": graph_meta}


# ---------------------------------------------------------------------------
# model fitting


def fit_squeezing(
    observed: PatternDistribution,
    device: DeviceSection,
    pump_phase: float,
    candidates: Sequence[float],
) -> Tuple[float, float, List[Tuple[float, float]]]:
    """Infer the source squeezing that best explains observed statistics.

    Scans candidate tanh values, builds the device model for each, and
    scores the total variation distance to the observed distribution on
    the same detection sector. Returns the best candidate, its distance,
    and the full scan. Ties keep the earliest candidate.
    """
    scan = []
    for candidate in candidates:
        lam = float(candidate)
        state = build_device_state(device, lam, pump_phase)
        model = enumerate_distribution(
            state, observed.photons, collision_free=observed.collision_free
        )
        scan.append((lam, tvd(observed, model)))
    if not scan:
        raise ConfigError("no squeezing candidates to scan")
    best_lam, best_tvd = min(scan, key=lambda item: item[1])
    return best_lam, best_tvd, scan
