#!/usr/bin/env python3
"""Render figures from a result bundle directory.

Reads only the bundle's CSV and meta.json files; every number shown
comes from the files as written, so the images are a pure function of
the bundle content and the dpi.  Usage:

    python3 plots/render.py --bundle <dir> --out <dir> --dpi <n>

Exit codes: 0 on success, 2 when the bundle does not match the expected
schema (missing or malformed files, unknown schema tag, digest
mismatches, empty data files).
"""

import argparse
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

KNOWN_SCHEMAS = ("device-reproduction/1", "loss-sweep/1")

# Fixed style so reruns are pixel-identical: no rcParams left to the
# environment beyond the matplotlib defaults pinned here.
STYLE = {
    "figure.figsize": (8.0, 4.5),
    "font.family": "DejaVu Sans",
    "font.size": 9.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8.0,
    "savefig.bbox": "tight",
}

SOURCE_COLORS = {
    "ideal": "#2a7fbf",
    "uniform": "#777777",
    "gbs-model": "#c03a2b",
}
EXTRA_COLORS = ("#c03a2b", "#d98032", "#7a4fa3", "#3a9a5c", "#b0308a")


class BundleError(Exception):
    """The directory does not hold a bundle this renderer understands."""


def _fail(message):
    raise BundleError(message)


def read_csv(path):
    """Parse a bundle CSV into (comments dict, list of row dicts)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(f"cannot read {path}: {exc}")
    comments, header, rows = {}, None, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            comments[key] = value
        elif header is None:
            header = line.split(",")
        else:
            values = line.split(",")
            if len(values) != len(header):
                _fail(f"{path}: row has {len(values)} fields, header has {len(header)}")
            rows.append(dict(zip(header, values)))
    if header is None:
        _fail(f"{path}: no header row")
    if not rows:
        _fail(f"{path}: no data rows")
    return comments, rows


def _walk_files(node):
    if isinstance(node, str):
        yield node
    elif isinstance(node, dict):
        for value in node.values():
            yield from _walk_files(value)
    else:
        _fail(f"meta.json files entry has unexpected type {type(node).__name__}")


def load_bundle(bundle_dir):
    """Validate the bundle layout and return (schema, meta, dir path)."""
    root = Path(bundle_dir)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        _fail(f"{root}: no meta.json, not a result bundle")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"{meta_path}: {exc}")
    schema = meta.get("schema")
    if schema not in KNOWN_SCHEMAS:
        _fail(f"{root}: unknown schema {schema!r}, expected one of {KNOWN_SCHEMAS}")
    for key in ("config_sha256", "files"):
        if key not in meta:
            _fail(f"{root}: meta.json lacks {key!r}")
    for name in _walk_files(meta["files"]):
        if not (root / name).is_file():
            _fail(f"{root}: meta.json references missing file {name}")
    return schema, meta, root


def checked_csv(root, meta, name):
    """Read a CSV and verify it carries the bundle's config digest."""
    comments, rows = read_csv(root / name)
    digest = comments.get("config") or comments.get("device")
    if digest != meta["config_sha256"]:
        _fail(f"{name}: config digest {digest!r} does not match meta.json")
    return comments, rows


def source_color(source, fallback_index):
    if source in SOURCE_COLORS:
        return SOURCE_COLORS[source]
    return EXTRA_COLORS[fallback_index % len(EXTRA_COLORS)]


def save(fig, out_dir, name, dpi):
    path = Path(out_dir) / name
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return name


def plot_distributions(root, meta, out_dir, dpi):
    """Bar chart per photon number, patterns on a lexicographic axis."""
    written = []
    for count, name in sorted(meta["files"].get("distributions", {}).items(), key=lambda kv: int(kv[0])):
        comments, rows = checked_csv(root, meta, name)
        labels = [row["pattern"] for row in rows]
        probs = [float(row["probability"]) for row in rows]
        fig, ax = plt.subplots()
        ax.bar(range(len(probs)), probs, width=0.9, color="#2a7fbf")
        ax.set_xlim(-1, len(probs))
        ax.set_ylabel("probability")
        ax.set_xlabel(f"{count}-photon pattern (ascending)")
        ax.set_title(f"{count}-fold detection patterns, sector mass {comments.get('norm', '?')}")
        if len(labels) <= 40:
            ax.set_xticks(range(len(labels)))
            ax.set_xticklabels(labels, rotation=90)
        else:
            ax.set_xticks([])
        written.append(save(fig, out_dir, f"distributions_{count}.png", dpi))
    return written


def plot_search_curves(root, meta, out_dir, dpi):
    """Mean density vs budget per seed source, one figure per subgraph size."""
    _, rows = checked_csv(root, meta, meta["files"]["search_curves"])
    _, summary = checked_csv(root, meta, meta["files"]["summary"])
    d_max = {row["k"]: float(row["d_max"]) for row in summary}
    written = []
    for k in sorted({row["k"] for row in rows}):
        fig, ax = plt.subplots()
        sources = []
        for row in rows:
            if row["k"] == k and row["source"] not in sources:
                sources.append(row["source"])
        for index, source in enumerate(sources):
            picked = [row for row in rows if row["k"] == k and row["source"] == source]
            budgets = [int(row["budget"]) for row in picked]
            mean = [float(row["mean_density"]) for row in picked]
            err = [float(row["stderr"]) for row in picked]
            color = source_color(source, index)
            ax.plot(budgets, mean, color=color, label=source)
            ax.fill_between(
                budgets,
                [m - e for m, e in zip(mean, err)],
                [m + e for m, e in zip(mean, err)],
                color=color,
                alpha=0.25,
                linewidth=0,
            )
        if k in d_max:
            ax.axhline(d_max[k], color="black", linestyle="--", linewidth=1, label="densest")
        ax.set_xlabel("sample budget")
        ax.set_ylabel("mean best density")
        ax.set_title(f"seeded search, subgraphs of size {k}")
        ax.legend()
        written.append(save(fig, out_dir, f"search_curves_k{k}.png", dpi))
    return written


def plot_summary_table(root, meta, out_dir, dpi):
    """Summary CSV rendered as a table image."""
    _, rows = checked_csv(root, meta, meta["files"]["summary"])
    columns = ("k", "source", "samples to 95%", "density at budget")
    cells = []
    for row in rows:
        if row["samples_exceeded"] == "true":
            samples = f">{row['samples_value']}"
        else:
            samples = f"{row['samples_value']} ({float(row['samples_err']):.3g})"
        density = f"{float(row['density_value']):.4f} ({float(row['density_err']):.2g})"
        cells.append((row["k"], row["source"], samples, density))
    fig, ax = plt.subplots(figsize=(6.0, 0.3 * (len(cells) + 2)))
    ax.axis("off")
    table = ax.table(cellText=cells, colLabels=columns, loc="center")
    table.auto_set_font_size(False)
    table.set_fontsize(8)
    table.scale(1.0, 1.2)
    return [save(fig, out_dir, "summary_table.png", dpi)]


def _sweep_series(rows, value_column):
    """Group rows into {mean_photons: {graph: [(eta, value), ...]}}."""
    series = {}
    for row in rows:
        mean = float(row["mean_photons"])
        eta = float(row["eta"])
        per_graph = series.setdefault(mean, {}).setdefault(row["graph"], [])
        per_graph.append((eta, float(row[value_column])))
    for per_mean in series.values():
        for points in per_mean.values():
            points.sort(key=lambda pair: -pair[0])
    return series


def _plot_sweep_panel(ax, series, ylabel):
    for index, mean in enumerate(sorted(series)):
        color = EXTRA_COLORS[index % len(EXTRA_COLORS)]
        for graph_index, graph in enumerate(sorted(series[mean])):
            points = series[mean][graph]
            ax.plot(
                [eta for eta, _ in points],
                [value for _, value in points],
                color=color,
                alpha=0.6,
                linewidth=1,
                marker="o",
                markersize=2.5,
                label=f"mean photons {mean:g}" if graph_index == 0 else None,
            )
    ax.invert_xaxis()  # loss grows to the right
    ax.set_xlabel("transmission")
    ax.set_ylabel(ylabel)
    ax.legend()


def plot_sweep(root, meta, out_dir, dpi):
    """Distance, run cost, and crossing budgets against transmission."""
    _, tvd_rows = checked_csv(root, meta, meta["files"]["tvd"])
    _, crossing_rows = checked_csv(root, meta, meta["files"]["crossings"])
    written = []

    fig, ax = plt.subplots()
    _plot_sweep_panel(ax, _sweep_series(tvd_rows, "tvd"), "distance to lossless distribution")
    ax.set_title("loss pushes the sampler away from the encoded graph")
    written.append(save(fig, out_dir, "tvd_vs_loss.png", dpi))

    fig, ax = plt.subplots()
    _plot_sweep_panel(ax, _sweep_series(tvd_rows, "runs_per_sample"), "device runs per sample")
    ax.set_yscale("log")
    ax.set_title("acceptance cost of a collision-free sample")
    written.append(save(fig, out_dir, "runs_vs_loss.png", dpi))

    model_rows = [row for row in crossing_rows if row["source"] == "gbs-model"]
    uniform_rows = [row for row in crossing_rows if row["source"] == "uniform"]
    fig, ax = plt.subplots()
    _plot_sweep_panel(
        ax, _sweep_series(model_rows, "crossing_samples"), "samples to 75% of planted density"
    )
    for index, row in enumerate(uniform_rows):
        value = float(row["crossing_samples"])
        ax.axhline(
            value,
            color="#777777",
            linestyle="--",
            linewidth=0.8,
            label="uniform baseline" if index == 0 else None,
        )
    ax.set_yscale("log")
    ax.set_title("seeded search crossings vs uniform")
    ax.legend()
    written.append(save(fig, out_dir, "crossings_vs_loss.png", dpi))
    return written


def render_bundle(bundle_dir, out_dir, dpi):
    """Render every figure the bundle supports; returns written names."""
    schema, meta, root = load_bundle(bundle_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        if schema == "device-reproduction/1":
            written = plot_distributions(root, meta, out, dpi)
            written += plot_search_curves(root, meta, out, dpi)
            written += plot_summary_table(root, meta, out, dpi)
        else:
            written = plot_sweep(root, meta, out, dpi)
    return written


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--bundle", required=True, help="result bundle directory")
    parser.add_argument("--out", required=True, help="directory for the images")
    parser.add_argument("--dpi", type=int, default=150, help="raster resolution")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.dpi < 1:
        print("dpi must be positive", file=sys.stderr)
        return 2
    try:
        written = render_bundle(args.bundle, args.out, args.dpi)
    except BundleError as exc:
        print(f"bundle error: {exc}", file=sys.stderr)
        return 2
    for name in written:
        print(f"wrote {Path(args.out) / name}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
