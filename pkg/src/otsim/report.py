"""Delimited reports, human-readable tables, and figure rendering.

TSV outputs are the machine interface: full-precision floats, stable column
order, no timestamps, so identical inputs give byte-identical files.  Tables
round to two decimals for reading.  Figures are written as PNG files next to
the delimited output when a figures directory is requested.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import EvalReport, PairScore


def fmt_full(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# Delimited output
# ---------------------------------------------------------------------------

def compute_tsv(scores: Sequence[PairScore], measure: str) -> str:
    """Per-pair distance table; fused results add the decomposition columns."""
    fused = measure == "wsmd"
    header = ["id_a", "id_b", "distance"]
    if fused:
        header += ["wmd_lambda", "k_smd_lambda", "k"]
    lines = ["\t".join(header)]
    for s in scores:
        row = [s.id_a, s.id_b, fmt_full(s.distance)]
        if fused:
            res = s.fgw
            row += [
                fmt_full(res.wmd_component),
                fmt_full(res.k * res.smd_component),
                fmt_full(res.k),
            ]
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


_REPORT_HEADER = ["metric", "value", "n_pairs", "measure", "weights", "cost", "lambda", "sam"]


def report_tsv(reports: Sequence[EvalReport], best: EvalReport | None = None) -> str:
    """One record per configuration; a trailing column marks the selection."""
    header = list(_REPORT_HEADER)
    if best is not None:
        header.append("selected")
    lines = ["\t".join(header)]
    for rep in reports:
        cfg = rep.config
        row = [
            rep.metric,
            fmt_full(rep.value),
            str(rep.n_pairs),
            cfg.measure,
            cfg.weights,
            cfg.cost,
            "" if cfg.lam is None else fmt_full(cfg.lam),
            cfg.sam_id or "",
        ]
        if best is not None:
            row.append("1" if rep == best else "0")
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Human-readable tables (two decimals, like the per-pair summary tables)
# ---------------------------------------------------------------------------

def render_table(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    cells = [[_render_cell(c) for c in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h) for i, h in enumerate(header)]
    out = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    out.append("  ".join("-" * w for w in widths))
    for row in cells:
        out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(out)


def _render_cell(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def compute_table(scores: Sequence[PairScore], measure: str) -> str:
    fused = measure == "wsmd"
    header = ["id_a", "id_b", measure]
    if fused:
        header += ["wmd_lambda", "k_smd_lambda", "k"]
    rows = []
    for s in scores:
        row: list[object] = [s.id_a, s.id_b, s.distance]
        if fused:
            row += [s.fgw.wmd_component, s.fgw.k * s.fgw.smd_component, s.fgw.k]
        rows.append(row)
    return render_table(header, rows)


def report_table(reports: Sequence[EvalReport]) -> str:
    rows = []
    for rep in reports:
        cfg = rep.config
        rows.append(
            [
                cfg.measure,
                cfg.weights,
                cfg.cost,
                "-" if cfg.lam is None else f"{cfg.lam:.2f}",
                cfg.sam_id or "-",
                rep.metric,
                rep.value,
                rep.n_pairs,
            ]
        )
    return render_table(["measure", "weights", "cost", "lambda", "sam", "metric", "value", "pairs"], rows)


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def roc_points(distances: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ROC curve of similarity = -distance; tied scores move diagonally."""
    order = np.argsort(distances, kind="stable")  # most similar first
    d = distances[order]
    y = labels[order]
    n_pos = max(int(y.sum()), 1)
    n_neg = max(int((1 - y).sum()), 1)
    fpr = [0.0]
    tpr = [0.0]
    tp = fp = 0
    i = 0
    while i < d.size:
        j = i
        while j + 1 < d.size and d[j + 1] == d[i]:
            j += 1
        tp += int(y[i : j + 1].sum())
        fp += (j - i + 1) - int(y[i : j + 1].sum())
        tpr.append(tp / n_pos)
        fpr.append(fp / n_neg)
        i = j + 1
    return np.array(fpr), np.array(tpr)


def save_roc_figure(scores: Sequence[PairScore], golds: Sequence[float], path: str | Path, title: str) -> None:
    d = np.array([s.distance for s in scores])
    y = np.array(golds, dtype=float)
    fpr, tpr = roc_points(d, y)
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(fpr, tpr, lw=1.5)
    ax.plot([0, 1], [0, 1], ls="--", lw=0.8, color="gray")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(title)
    _save(fig, Path(path))


def save_score_scatter(scores: Sequence[PairScore], golds: Sequence[float], path: str | Path, title: str) -> None:
    d = np.array([s.distance for s in scores])
    g = np.array(golds, dtype=float)
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.scatter(g, -d, s=12, alpha=0.7)
    ax.set_xlabel("gold score")
    ax.set_ylabel("similarity (-distance)")
    ax.set_title(title)
    _save(fig, Path(path))


def save_grid_heatmap(reports: Sequence[EvalReport], path: str | Path, title: str) -> None:
    """Dev metric over the (attention source, lambda) grid."""
    sams = sorted({r.config.sam_id or "-" for r in reports})
    lams = sorted({r.config.lam for r in reports})
    grid = np.full((len(sams), len(lams)), np.nan)
    for r in reports:
        grid[sams.index(r.config.sam_id or "-"), lams.index(r.config.lam)] = r.value
    fig, ax = plt.subplots(figsize=(1.2 + 0.6 * len(lams), 1.0 + 0.5 * len(sams)))
    im = ax.imshow(grid, aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(lams)), [f"{l:.2f}" for l in lams])
    ax.set_yticks(range(len(sams)), sams)
    ax.set_xlabel("lambda")
    ax.set_ylabel("attention source")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.8)
    _save(fig, Path(path))


def save_plan_heatmap(score: PairScore, tokens_a: Sequence[str], tokens_b: Sequence[str], path: str | Path, title: str) -> None:
    """Transport plan for one pair, annotated with the two token sequences."""
    plan = score.transport_plan()
    if plan is None:
        return
    fig, ax = plt.subplots(figsize=(1.5 + 0.45 * len(tokens_b), 1.2 + 0.45 * len(tokens_a)))
    im = ax.imshow(plan, cmap="Blues")
    ax.set_xticks(range(len(tokens_b)), tokens_b, rotation=60, ha="right", fontsize=8)
    ax.set_yticks(range(len(tokens_a)), tokens_a, fontsize=8)
    ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, shrink=0.8)
    _save(fig, Path(path))
