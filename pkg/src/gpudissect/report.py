"""Render result files into aligned text tables and plot-description files.

Rendering is deterministic: identical inputs produce byte-identical output,
so reports can be diffed across runs.
"""

from __future__ import annotations

from pathlib import Path

from gpudissect.errors import ResultsUnreadable
from gpudissect.sweep import load_results


def _fmt_cell(value: object) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.5g}"
    return str(value)


def _aligned(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out += [line(r) for r in rows]
    return "\n".join(out) + "\n"


def _workload_label(row: dict) -> str:
    label = row.get("workload", "?")
    if row.get("variant"):
        label = f"{label}:{row['variant']}"
    if row.get("mma_format"):
        label = f"{label}:{row['mma_format']}"
    return label


def render_table(results_paths: list[Path | str], out_dir: Path | str) -> list[Path]:
    """Latency/power summary table: one line per (device, workload, point kind).

    True and completion latency render as the familiar "true/completion"
    pair; power and throughput columns appear when present.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    merged: dict[tuple, dict] = {}
    for path in results_paths:
        data = load_results(path)
        for row in data["rows"]:
            key = (row.get("chip"), _workload_label(row))
            slot = merged.setdefault(key, {
                "chip": row.get("chip"),
                "workload": _workload_label(row),
                "true": None, "completion": None,
                "throughput": None, "power": None,
            })
            # deepest chain / highest ILP points win: they match the
            # published per-workload summary numbers
            if row.get("true_latency_cycles") is not None:
                if slot["true"] is None or (row.get("chain_len") or 0) >= (
                        slot.get("_chain") or 0):
                    slot["true"] = row["true_latency_cycles"]
                    slot["_chain"] = row.get("chain_len") or 0
            if row.get("completion_latency_cycles") is not None and (
                    row.get("ilp") or 1) > 1:
                slot["completion"] = row["completion_latency_cycles"]
            if row.get("throughput_ipc_sm") is not None:
                slot["throughput"] = max(
                    slot["throughput"] or 0.0, row["throughput_ipc_sm"])
            if row.get("avg_power_w") is not None:
                slot["power"] = row["avg_power_w"]

    headers = ["chip", "workload", "true/completion", "peak ipc/sm", "power W"]
    lines = []
    for key in sorted(merged, key=lambda k: (str(k[0]), str(k[1]))):
        slot = merged[key]
        pair = f"{_fmt_cell(slot['true'])}/{_fmt_cell(slot['completion'])}"
        lines.append([
            _fmt_cell(slot["chip"]), slot["workload"], pair,
            _fmt_cell(slot["throughput"]), _fmt_cell(slot["power"]),
        ])

    txt_path = out_dir / "table.txt"
    txt_path.write_text(_aligned(headers, lines), encoding="utf-8")
    csv_path = out_dir / "table.csv"
    csv_lines = [",".join(headers)]
    csv_lines += [",".join(cell.replace(",", ";") for cell in row) for row in lines]
    csv_path.write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    return [txt_path, csv_path]


def render_plotdata(
    results_paths: list[Path | str],
    out_dir: Path | str,
    *,
    x_field: str = "working_set_bytes",
    y_field: str = "true_latency_cycles",
    name: str = "comparison",
) -> list[Path]:
    """One data series per results file (one per device fixture)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    blocks = []
    titles = []
    for path in results_paths:
        data = load_results(path)
        device = data.get("device", {}).get("chip", str(path))
        points = []
        for row in data["rows"]:
            x, y = row.get(x_field), row.get(y_field)
            if x is None or y is None:
                continue
            points.append((float(x), float(y)))
        if not points:
            raise ResultsUnreadable(
                f"{path} has no ({x_field}, {y_field}) points to plot"
            )
        titles.append(device)
        lines = [f"# series: {device}"]
        lines += [f"{x!r} {y!r}" for x, y in sorted(points)]
        blocks.append("\n".join(lines))

    dat_path = out_dir / f"{name}.dat"
    dat_path.write_text("\n\n\n".join(blocks) + "\n", encoding="utf-8")
    plot_cmds = ", \\\n    ".join(
        f"'{dat_path.name}' index {i} using 1:2 with linespoints title '{t}'"
        for i, t in enumerate(titles)
    )
    gp_path = out_dir / f"{name}.gp"
    gp_path.write_text(
        "\n".join([
            f"# gnuplot script: {name}",
            f"set xlabel '{x_field}'",
            f"set ylabel '{y_field}'",
            "set logscale x 2",
            f"plot {plot_cmds}",
        ]) + "\n",
        encoding="utf-8",
    )
    return [dat_path, gp_path]
