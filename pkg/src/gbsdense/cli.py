"""Command-line entry points.

Exit codes: 0 on success, 2 for configuration problems (including
malformed flags and unreadable inputs), 3 when a numerical guard trips.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

import numpy as np

from . import __version__
from .distributions import distribution_from_csv
from .encoding import encode_graph, params_from_scale, rescale_for_mean_photons, takagi
from .errors import ConfigError, GuardError
from .experiments import fit_squeezing, load_config, run_device_reproduction, run_loss_sweep
from .graphs import WeightedGraph
from .hafnian import hafnian
from .search import SearchConfig, geometric_budgets, random_search, seed_pool_from_text
from .timebin import compile_reck


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _write_or_print(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {out}: {exc}") from exc


def _matrix_from_json(path: str) -> np.ndarray:
    """Load a matrix given as nested JSON lists; entries may be [re, im] pairs."""
    try:
        payload = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid matrix file {path}: {exc}") from exc
    if isinstance(payload, dict):
        payload = payload.get("matrix")
    if not isinstance(payload, list) or not payload:
        raise ConfigError(f"matrix file {path} must hold a non-empty nested list")

    def entry(value) -> complex:
        if isinstance(value, (int, float)):
            return complex(value)
        if isinstance(value, list) and len(value) == 2 and all(isinstance(part, (int, float)) for part in value):
            return complex(value[0], value[1])
        raise ConfigError(f"matrix entries must be numbers or [re, im] pairs, got {value!r}")

    rows = []
    for row in payload:
        if not isinstance(row, list):
            raise ConfigError("matrix rows must be lists")
        rows.append([entry(value) for value in row])
    if any(len(row) != len(rows) for row in rows):
        raise ConfigError("matrix must be square")
    return np.array(rows, dtype=np.complex128)


def _complex_parts(matrix: np.ndarray) -> dict:
    return {
        "re": [[float(value) for value in row] for row in matrix.real],
        "im": [[float(value) for value in row] for row in matrix.imag],
    }


def _load_experiment_config(args, expected: str):
    if args.config is None:
        raise ConfigError(f"{expected} requires --config")
    cfg = load_config(args.config)
    if cfg.experiment != expected:
        raise ConfigError(f"config describes {cfg.experiment!r}, expected {expected!r}")
    return cfg


def _cmd_device_repro(args) -> int:
    cfg = _load_experiment_config(args, "device-reproduction")
    result = run_device_reproduction(cfg, args.out, master_seed=args.seed, threads=args.threads)
    sys.stdout.write(f"wrote {result['out_dir']}\n")
    return 0


def _cmd_loss_sweep(args) -> int:
    cfg = _load_experiment_config(args, "loss-sweep")
    result = run_loss_sweep(cfg, args.out, master_seed=args.seed, threads=args.threads)
    sys.stdout.write(f"wrote {result['out_dir']}\n")
    return 0


def _cmd_hafnian(args) -> int:
    matrix = _matrix_from_json(args.matrix)
    try:
        value = hafnian(matrix)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.format == "json":
        _write_or_print(
            json.dumps({"hafnian": {"re": value.real, "im": value.imag}}, sort_keys=True), args.out
        )
        return 0
    if abs(value.imag) <= 1e-12 * max(1.0, abs(value.real)):
        _write_or_print("%g" % value.real, args.out)
    else:
        _write_or_print("%g%+gj" % (value.real, value.imag), args.out)
    return 0


def _cmd_encode(args) -> int:
    graph = WeightedGraph.from_json(_read_text(args.graph))
    factorization = takagi(graph.adjacency)
    if args.scale is not None and args.mean_photons is not None:
        raise ConfigError("give either --scale or --mean-photons, not both")
    if args.scale is not None:
        params = params_from_scale(factorization.values, args.scale)
    elif args.mean_photons is not None:
        params = rescale_for_mean_photons(factorization.values, args.mean_photons)
    else:
        raise ConfigError("encode requires --scale or --mean-photons")
    squeezers, transfer = encode_graph(graph.adjacency, params)
    schedule = compile_reck(transfer.matrix)
    payload = {
        "scale": params.c,
        "mean_photons": params.mean_photons,
        "tanh_values": [float(np.tanh(spec.r)) for spec in squeezers],
        "squeezers": [{"r": spec.r, "phase": spec.theta} for spec in squeezers],
        "transfer": _complex_parts(transfer.matrix),
        "schedule": json.loads(schedule.to_json()),
    }
    if args.format == "csv":
        raise ConfigError("encode emits structured output; use --format json")
    _write_or_print(json.dumps(payload, sort_keys=True, indent=2), args.out)
    return 0


def _cmd_search(args) -> int:
    graph = WeightedGraph.from_json(_read_text(args.graph))
    pool = seed_pool_from_text(_read_text(args.pool))
    try:
        if args.budget_grid == "dense":
            budgets = tuple(range(1, args.max_budget + 1))
        else:
            budgets = geometric_budgets(args.max_budget, args.budget_points)
        cfg = SearchConfig(args.k, budgets, args.repeats, "file", args.seed or 0)
        curve = random_search(graph, cfg, pool=pool)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _write_or_print(curve.to_json() if args.format == "json" else curve.to_csv(), args.out)
    return 0


def _cmd_fit_squeezing(args) -> int:
    cfg = _load_experiment_config(args, "device-reproduction")
    observed, _ = distribution_from_csv(_read_text(args.observed))
    try:
        lo, hi, count = args.grid.split(":")
        candidates = np.linspace(float(lo), float(hi), int(count))
    except ValueError as exc:
        raise ConfigError(f"bad --grid {args.grid!r}: expected lo:hi:count") from exc
    best, distance, scan = fit_squeezing(observed, cfg.device, cfg.source.pump_phase, candidates)
    if args.format == "json":
        payload = {
            "best_tanh": best,
            "tvd": distance,
            "scan": [{"tanh": lam, "tvd": value} for lam, value in scan],
        }
        _write_or_print(json.dumps(payload, sort_keys=True, indent=2), args.out)
        return 0
    lines = [f"# best_tanh={best!r}", f"# tvd={distance!r}", "tanh,tvd"]
    lines += [f"{lam!r},{value!r}" for lam, value in scan]
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def _add_common(parser: argparse.ArgumentParser, bundle: bool):
    parser.add_argument("--seed", type=int, default=None, help="override the config master seed")
    parser.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="output format for printed results"
    )
    if bundle:
        parser.add_argument("--config", required=True, help="experiment config (TOML)")
        parser.add_argument("--out", required=True, help="result bundle directory")
        parser.add_argument("--threads", type=int, default=1, help="worker count (results do not depend on it)")
    else:
        parser.add_argument("--out", default=None, help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gbsdense",
        description="Gaussian boson sampling on loop interferometers and dense-subgraph search",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    device = commands.add_parser("device-repro", help="run the reference-device reproduction")
    _add_common(device, bundle=True)
    device.set_defaults(func=_cmd_device_repro)

    sweep = commands.add_parser("loss-sweep", help="run the planted-graph loss sweep")
    _add_common(sweep, bundle=True)
    sweep.set_defaults(func=_cmd_loss_sweep)

    haf = commands.add_parser("hafnian", help="evaluate the hafnian of a matrix file")
    haf.add_argument("--matrix", required=True, help="JSON file with nested lists or [re, im] pairs")
    _add_common(haf, bundle=False)
    haf.set_defaults(func=_cmd_hafnian)

    encode = commands.add_parser("encode", help="turn a graph into device parameters")
    encode.add_argument("--graph", required=True, help="graph JSON file")
    encode.add_argument("--scale", type=float, default=None, help="encoding scale c")
    encode.add_argument("--mean-photons", type=float, default=None, help="target total mean photons")
    _add_common(encode, bundle=False)
    encode.set_defaults(func=_cmd_encode, format="json")

    search = commands.add_parser("search", help="run a seeded search from a sample file")
    search.add_argument("--graph", required=True, help="graph JSON file")
    search.add_argument("--pool", required=True, help="seed pool file, one dash-joined pattern per line")
    search.add_argument("--k", type=int, required=True, help="subgraph size")
    search.add_argument("--max-budget", type=int, default=100)
    search.add_argument("--budget-grid", choices=("dense", "geometric"), default="dense")
    search.add_argument("--budget-points", type=int, default=60)
    search.add_argument("--repeats", type=int, default=400)
    _add_common(search, bundle=False)
    search.set_defaults(func=_cmd_search)

    fit = commands.add_parser("fit-squeezing", help="fit the source squeezing to observed statistics")
    fit.add_argument("--config", required=True, help="device-reproduction config (TOML)")
    fit.add_argument("--observed", required=True, help="observed distribution CSV")
    fit.add_argument("--grid", default="0.1:0.5:41", help="candidate grid lo:hi:count")
    _add_common(fit, bundle=False)
    fit.set_defaults(func=_cmd_fit_squeezing)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage; fold --help's exit 0 through
        return int(exc.code or 0)
    if args.seed is not None and args.seed < 0:
        sys.stderr.write("config error: --seed must be non-negative\n")
        return 2
    try:
        return int(args.func(args) or 0)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except GuardError as exc:
        sys.stderr.write(f"numerical guard: {exc}\n")
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
