"""Command-line interface: compute per-pair distances, evaluate against gold
labels, and grid-search hyperparameters.

Outputs are deterministic: identical configuration and input files produce
byte-identical TSV.  Files are written atomically (temp + rename), so a
failing run never leaves a partial output.  Logs go to standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .bundles import BundleFile, compute_idf, read_bundles, read_pairs, resolve_pairs
from .errors import OtsimError
from .evaluation import (
    MEASURES,
    MeasureConfig,
    evaluate_pairs,
    grid_search,
    score_pairs,
)
from .measures import SentenceBundle, WeightScheme
from .whitening import apply_whitening, fit_whitening
from . import report

logger = logging.getLogger("otsim")

DEFAULT_GRID = tuple(round(0.1 * i, 1) for i in range(11))

_MEASURE_DEFAULTS = {
    # measure -> (weights, cost)
    "bow": ("uniform", "euclidean"),
    "sentemb": ("uniform", "euclidean"),
    "wmd": ("uniform", "euclidean"),
    "wrd": ("norm", "cosine"),
    "smd": ("uniform", "euclidean"),
    "wsmd": ("uniform", "euclidean"),
}


class UsageError(OtsimError):
    pass


@dataclass
class RunConfig:
    command: str
    bundles: str
    pairs: str
    measure: str
    weights: str
    cost: str
    lam: float | None
    sam_bundles: list[str] = field(default_factory=list)
    whiten: bool = False
    out: str | None = None
    grid: list[float] = field(default_factory=lambda: list(DEFAULT_GRID))
    best_config: str | None = None
    figures: str | None = None
    threads: int = 1

    def validate(self) -> None:
        if self.measure not in MEASURES:
            raise UsageError(f"unknown measure {self.measure!r}; choose from {', '.join(MEASURES)}")
        needs_sam = self.measure in ("smd", "wsmd")
        if self.measure == "wsmd" and self.lam is None and self.command != "grid-search":
            raise UsageError("measure wsmd requires --lambda")
        if needs_sam and not self.sam_bundles:
            raise UsageError(f"measure {self.measure} requires an attention source (--sam-bundles)")
        if not needs_sam and self.sam_bundles:
            logger.warning("measure %s ignores attention matrices; --sam-bundles has no effect", self.measure)
        if self.lam is not None and not 0.0 <= self.lam <= 1.0:
            raise UsageError(f"--lambda must be in [0, 1], got {self.lam}")
        if self.command in ("compute", "evaluate") and len(self.sam_bundles) > 1:
            raise UsageError(f"{self.command} takes exactly one --sam-bundles file; got {len(self.sam_bundles)}")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otsim",
        description="Sentence similarity via optimal transport over embeddings and attention structure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("compute", "write a per-pair distance table"),
        ("evaluate", "score a measure against gold labels (AUC or Spearman)"),
        ("grid-search", "evaluate every (attention source, lambda) on a dev set"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file with defaults for any long option")
        p.add_argument("--bundles", help="bundle file (embeddings + attention)")
        p.add_argument("--pairs", help="pairs TSV with #mode=binary|score header")
        p.add_argument("--measure", choices=MEASURES, help="distance/similarity measure")
        p.add_argument("--weights", choices=("uniform", "idf", "norm"), help="token weight scheme")
        p.add_argument("--cost", choices=("euclidean", "cosine"), help="ground cost between embeddings")
        p.add_argument("--lambda", dest="lam", type=float, help="structure mixing ratio in [0, 1]")
        p.add_argument(
            "--sam-bundles",
            nargs="+",
            help="bundle file(s) whose attention matrices override --bundles",
        )
        p.add_argument("--whiten", action="store_true", default=None, help="whiten embeddings before scoring")
        p.add_argument("--out", help="output TSV path (default: stdout)")
        p.add_argument("--figures", help="directory for rendered figures")
        p.add_argument("--threads", type=int, help="pair-level parallelism (default 1)")
        if name == "grid-search":
            p.add_argument("--grid", help="comma-separated lambda grid (default 0,0.1,...,1)")
            p.add_argument("--best-config", help="where to write the selected config as JSON")
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    """Layer: built-in defaults < --config file < explicit flags."""
    file_cfg = {}
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read --config {args.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise UsageError(f"--config {args.config} must contain a JSON object")

    def pick(key: str, default=None):
        cli_val = getattr(args, key.replace("-", "_"), None)
        if cli_val is not None:
            return cli_val
        if key in file_cfg and file_cfg[key] is not None:
            return file_cfg[key]
        return default

    measure = pick("measure")
    if measure is None:
        raise UsageError("--measure is required (flag or config file)")
    w_default, c_default = _MEASURE_DEFAULTS.get(measure, ("uniform", "euclidean"))

    grid_raw = pick("grid")
    if grid_raw is None:
        grid = list(DEFAULT_GRID)
    elif isinstance(grid_raw, str):
        try:
            grid = [float(tok) for tok in grid_raw.split(",") if tok.strip()]
        except ValueError as exc:
            raise UsageError(f"cannot parse --grid {grid_raw!r}: {exc}") from exc
    else:
        grid = [float(x) for x in grid_raw]

    bundles = pick("bundles")
    pairs = pick("pairs")
    if bundles is None or pairs is None:
        raise UsageError("--bundles and --pairs are required (flag or config file)")

    sam_bundles = pick("sam_bundles") or pick("sam-bundles") or []
    if isinstance(sam_bundles, str):
        sam_bundles = [sam_bundles]

    cfg = RunConfig(
        command=args.command,
        bundles=str(bundles),
        pairs=str(pairs),
        measure=measure,
        weights=pick("weights", w_default),
        cost=pick("cost", c_default),
        lam=None if pick("lam", pick("lambda")) is None else float(pick("lam", pick("lambda"))),
        sam_bundles=[str(s) for s in sam_bundles],
        whiten=bool(pick("whiten", False)),
        out=pick("out"),
        grid=grid,
        best_config=pick("best_config", pick("best-config")),
        figures=pick("figures"),
        threads=int(pick("threads", 1)),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Data loading
# ---------------------------------------------------------------------------

def _load_inputs(cfg: RunConfig):
    base = read_bundles(cfg.bundles)
    pairs_file = read_pairs(cfg.pairs)

    if cfg.whiten:
        import numpy as np

        rows = np.vstack([rec.embeddings for rec in base.records])
        transform = fit_whitening(rows)
        if transform.regularized:
            logger.warning("whitening covariance was rank-deficient; eigenvalues floored")
        base = BundleFile(path=base.path, records=[apply_whitening(r, transform) for r in base.records])

    bundles = base.by_id()
    resolve_pairs(pairs_file, bundles)

    bundles_by_sam: dict[str, dict[str, SentenceBundle]] = {}
    for sam_path in cfg.sam_bundles:
        sam_id = Path(sam_path).stem
        sam_records = read_bundles(sam_path).by_id()
        merged = {}
        for rid, rec in bundles.items():
            if rid not in sam_records:
                raise OtsimError(f"attention source {sam_path}: missing record {rid!r}")
            sam_rec = sam_records[rid]
            if sam_rec.n != rec.n:
                raise OtsimError(
                    f"attention source {sam_path}: record {rid!r} has {sam_rec.n} tokens, expected {rec.n}"
                )
            merged[rid] = SentenceBundle(
                id=rec.id,
                tokens=list(rec.tokens),
                embeddings=rec.embeddings,
                sam=sam_rec.sam,
                norm_weights=rec.norm_weights,
            )
        bundles_by_sam[sam_id] = merged

    return base, pairs_file, bundles, bundles_by_sam


def _make_scheme(cfg: RunConfig, base: BundleFile) -> WeightScheme:
    if cfg.weights == "idf":
        return WeightScheme.idf(compute_idf(base))
    return WeightScheme(cfg.weights)


def _pick_bundles(cfg: RunConfig, bundles, bundles_by_sam) -> tuple[str | None, dict]:
    """The single scoring corpus for compute/evaluate."""
    if cfg.measure in ("smd", "wsmd"):
        sam_id = sorted(bundles_by_sam)[0]
        return sam_id, bundles_by_sam[sam_id]
    return None, bundles


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _emit(text: str, out: str | None) -> None:
    """Atomic write to a file, or straight to stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_compute(cfg: RunConfig) -> int:
    base, pairs_file, bundles, bundles_by_sam = _load_inputs(cfg)
    scheme = _make_scheme(cfg, base)
    sam_id, corpus = _pick_bundles(cfg, bundles, bundles_by_sam)
    mc = MeasureConfig(cfg.measure, weights=cfg.weights, cost=cfg.cost, lam=cfg.lam, sam_id=sam_id)
    scores = score_pairs(pairs_file.pairs, corpus, mc, scheme, threads=cfg.threads)
    _emit(report.compute_tsv(scores, cfg.measure), cfg.out)
    if cfg.out is not None:
        print(report.compute_table(scores, cfg.measure), file=sys.stderr)
    if cfg.figures:
        for s in scores:
            if s.transport_plan() is None:
                continue
            a, b = corpus[s.id_a], corpus[s.id_b]
            report.save_plan_heatmap(
                s,
                a.tokens,
                b.tokens,
                Path(cfg.figures) / f"plan_{s.id_a}__{s.id_b}.png",
                f"{cfg.measure} = {s.distance:.2f}",
            )
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    base, pairs_file, bundles, bundles_by_sam = _load_inputs(cfg)
    scheme = _make_scheme(cfg, base)
    sam_id, corpus = _pick_bundles(cfg, bundles, bundles_by_sam)
    mc = MeasureConfig(cfg.measure, weights=cfg.weights, cost=cfg.cost, lam=cfg.lam, sam_id=sam_id)
    rep, scores = evaluate_pairs(pairs_file, corpus, mc, scheme, threads=cfg.threads)
    _emit(report.report_tsv([rep]), cfg.out)
    print(report.report_table([rep]), file=sys.stderr)
    if cfg.figures:
        golds = [p.gold for p in pairs_file.pairs]
        title = f"{cfg.measure}: {rep.metric} = {rep.value:.3f}"
        fig_dir = Path(cfg.figures)
        if rep.metric == "auc":
            report.save_roc_figure(scores, golds, fig_dir / f"roc_{cfg.measure}.png", title)
        else:
            report.save_score_scatter(scores, golds, fig_dir / f"scatter_{cfg.measure}.png", title)
    return 0


def cmd_grid_search(cfg: RunConfig) -> int:
    base, pairs_file, bundles, bundles_by_sam = _load_inputs(cfg)
    scheme = _make_scheme(cfg, base)
    if not bundles_by_sam:
        raise UsageError("grid-search requires at least one --sam-bundles file")
    mc = MeasureConfig(cfg.measure, weights=cfg.weights, cost=cfg.cost)
    result = grid_search(pairs_file, bundles_by_sam, cfg.grid, mc, scheme, threads=cfg.threads)
    _emit(report.report_tsv(result.reports, best=result.best), cfg.out)
    print(report.report_table(result.reports), file=sys.stderr)
    best = result.best
    print(
        f"selected: sam={best.config.sam_id} lambda={best.config.lam} "
        f"({best.metric}={best.value:.4f})",
        file=sys.stderr,
    )

    best_path = cfg.best_config
    if best_path is None and cfg.out is not None:
        best_path = str(Path(cfg.out).with_suffix(".best.json"))
    if best_path is not None:
        chosen = {
            "measure": best.config.measure,
            "weights": best.config.weights,
            "cost": best.config.cost,
            "lambda": best.config.lam,
            "sam_bundles": [s for s in cfg.sam_bundles if Path(s).stem == best.config.sam_id],
            "bundles": cfg.bundles,
            "whiten": cfg.whiten,
        }
        _emit(json.dumps(chosen, indent=2, sort_keys=True) + "\n", best_path)
    else:
        logger.warning("no --best-config/--out path given; selected config not persisted")

    if cfg.figures:
        report.save_grid_heatmap(
            result.reports,
            Path(cfg.figures) / "grid.png",
            f"dev {result.best.metric} over (attention source, lambda)",
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        handler = {
            "compute": cmd_compute,
            "evaluate": cmd_evaluate,
            "grid-search": cmd_grid_search,
        }[cfg.command]
        return handler(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OtsimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
