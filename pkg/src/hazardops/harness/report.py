"""Comparison tables, metric CSVs and time-history plot data.

``emit_report`` writes

``table.txt``                 fixed-width table, one row per model
``metrics.csv``               every numeric summary field, one row per model
``per_sample_<model>.csv``    per-sample MSE and relative L2
``trace_<model>_s<i>_f<k>.csv`` and ``.svg``
                              truth, prediction and log10 absolute error
                              for sample ``i`` and floor ``k``
"""

import csv
import math
import re
from pathlib import Path

import numpy as np

TABLE_COLUMNS = (("Overall MSE", "overall_mse"), ("Best MSE", "best_mse"),
                 ("Worst MSE", "worst_mse"), ("Rel. L2", "rel_l2"))
ERR_FLOOR = 1e-16


def _slug(name):
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", name).strip("-") or "model"


def format_table(reports):
    name_w = max([len("Model")] + [len(r.name) for r in reports])
    head = "Model".ljust(name_w) + "".join(f"  {c:>12}" for c, _ in TABLE_COLUMNS)
    lines = [head, "-" * len(head)]
    for r in reports:
        lines.append(r.name.ljust(name_w) + "".join(f"  {getattr(r, k):>12.4e}" for _, k in TABLE_COLUMNS))
    floors = sorted({r.floor for r in reports})
    lines.append(f"(floor {', '.join(map(str, floors))}; {reports[0].n_samples} samples)" if reports else "")
    return "\n".join(lines) + "\n"


def write_metrics_csv(path, reports):
    rows = [r.summary() for r in reports]
    keys = list(rows[0]) if rows else ["name"]
    for row in rows[1:]:
        keys += [k for k in row if k not in keys]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def read_metrics_csv(path):
    """Inverse of :func:`write_metrics_csv`: a list of dicts with numbers parsed."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                if k == "name" or v == "":
                    parsed[k] = v
                elif re.fullmatch(r"-?\d+", v):
                    parsed[k] = int(v)
                else:
                    parsed[k] = float(v)
            out.append(parsed)
    return out


def select_samples(report, selection):
    """Dataset indices for tokens ``best``, ``worst`` or integer indices."""
    out = []
    for token in selection:
        token = str(token).strip()
        if token == "best":
            idx = report.best_sample
        elif token == "worst":
            idx = report.worst_sample
        else:
            idx = int(token)
            if idx not in set(report.sample_indices.tolist()):
                raise ValueError(f"sample {idx} is not in the evaluated split")
        if idx not in out:
            out.append(idx)
    return out


def _svg_path(xs, ys, x0, x1, y0, y1, box):
    left, top, w, h = box
    sx = w / (x1 - x0) if x1 > x0 else 1.0
    sy = h / (y1 - y0) if y1 > y0 else 1.0
    pts = " ".join(f"{left + (x - x0) * sx:.2f},{top + h - (y - y0) * sy:.2f}" for x, y in zip(xs, ys))
    return pts


def trace_svg(t, truth, pred, title):
    """Standalone two-panel SVG: response traces above, log10 error below."""
    err = np.log10(np.maximum(np.abs(truth - pred), ERR_FLOOR))
    width, height = 800, 500
    top_box, bot_box = (60, 30, 720, 250), (60, 330, 720, 130)
    lo, hi = float(min(truth.min(), pred.min())), float(max(truth.max(), pred.max()))
    elo, ehi = float(math.floor(err.min())), float(math.ceil(err.max()))
    t0, t1 = float(t[0]), float(t[-1])
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
             '<rect width="100%" height="100%" fill="white"/>',
             f'<text x="{width / 2}" y="18" text-anchor="middle">{title}</text>']
    for box in (top_box, bot_box):
        parts.append(f'<rect x="{box[0]}" y="{box[1]}" width="{box[2]}" height="{box[3]}" fill="none" stroke="#888"/>')
    parts.append(f'<polyline fill="none" stroke="black" stroke-width="1" points="{_svg_path(t, truth, t0, t1, lo, hi, top_box)}"/>')
    parts.append(f'<polyline fill="none" stroke="#d62728" stroke-width="1" stroke-dasharray="4,2" '
                 f'points="{_svg_path(t, pred, t0, t1, lo, hi, top_box)}"/>')
    parts.append(f'<polyline fill="none" stroke="#1f77b4" stroke-width="1" points="{_svg_path(t, err, t0, t1, elo, ehi, bot_box)}"/>')
    parts += [f'<text x="55" y="{top_box[1] + 10}" text-anchor="end">{hi:.3g}</text>',
              f'<text x="55" y="{top_box[1] + top_box[3]}" text-anchor="end">{lo:.3g}</text>',
              f'<text x="55" y="{bot_box[1] + 10}" text-anchor="end">1e{ehi:.0f}</text>',
              f'<text x="55" y="{bot_box[1] + bot_box[3]}" text-anchor="end">1e{elo:.0f}</text>',
              f'<text x="60" y="{height - 15}">{t0:.2f} s</text>',
              f'<text x="780" y="{height - 15}" text-anchor="end">{t1:.2f} s</text>',
              '<text x="700" y="48" fill="black">truth</text>',
              '<text x="700" y="64" fill="#d62728">prediction</text>',
              f'<text x="640" y="{bot_box[1] + 16}" fill="#1f77b4">log10 |error|</text>',
              "</svg>"]
    return "\n".join(parts) + "\n"


def emit_report(reports, out_dir, formats=("text", "csv", "svg"), samples=()):
    """Write the requested files for a list of reports; returns their paths.

    ``samples`` selects traces (``best``, ``worst`` or dataset indices); an
    empty selection emits no trace files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "text" in formats:
        p = out_dir / "table.txt"
        p.write_text(format_table(reports))
        written.append(p)
    if "csv" in formats:
        p = out_dir / "metrics.csv"
        write_metrics_csv(p, reports)
        written.append(p)
        for r in reports:
            p = out_dir / f"per_sample_{_slug(r.name)}.csv"
            data = np.column_stack([r.sample_indices, r.per_sample_mse, r.per_sample_rel_l2])
            np.savetxt(p, data, delimiter=",", header="sample,mse,rel_l2", comments="", fmt=["%d", "%.17g", "%.17g"])
            written.append(p)
    if "svg" in formats and samples:
        for r in reports:
            for idx in select_samples(r, samples):
                t, y, yh = r.trace(idx)
                stem = out_dir / f"trace_{_slug(r.name)}_s{idx}_f{r.floor}"
                err = np.abs(y - yh)
                data = np.column_stack([t, y, yh, np.log10(np.maximum(err, ERR_FLOOR))])
                np.savetxt(stem.with_suffix(".csv"), data, delimiter=",",
                           header="time,truth,prediction,log10_abs_err", comments="", fmt="%.17g")
                stem.with_suffix(".svg").write_text(trace_svg(t, y, yh, f"{r.name}: sample {idx}, floor {r.floor}"))
                written += [stem.with_suffix(".csv"), stem.with_suffix(".svg")]
    return written
