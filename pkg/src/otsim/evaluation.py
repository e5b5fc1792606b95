"""Scoring distances against gold labels, and hyperparameter grid search.

Orientation convention, fixed once: metrics consume similarity = -distance.
Smaller distances should mean more similar sentences, so AUC is the
probability that a paraphrase pair gets a smaller distance than a
non-paraphrase pair, and Spearman correlates -distance with the gold score.
Baseline measures that natively produce similarities are negated before they
reach this module.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import FgwResult, SolverOptions
from .errors import EvalError
from .measures import (
    CostKind,
    SentenceBundle,
    WeightScheme,
    bow_similarity,
    sent_emb_similarity,
    smd,
    wmd,
    wsmd,
)

logger = logging.getLogger(__name__)

MEASURES = ("bow", "sentemb", "wmd", "wrd", "smd", "wsmd")


def _midranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their rank range."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    xs = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores: Sequence[tuple[float, float]]) -> float:
    """Rank-based AUC of similarity = -distance against binary labels.

    Equals the probability that a random positive (label 1) pair has smaller
    distance than a random negative pair, ties counted one half.
    """
    if not scores:
        raise EvalError("auc needs at least one pair")
    d = np.array([s[0] for s in scores], dtype=float)
    y = np.array([s[1] for s in scores], dtype=float)
    if not set(np.unique(y)) <= {0.0, 1.0}:
        raise EvalError("auc labels must be binary (0/1)")
    n_pos = int((y == 1.0).sum())
    n_neg = int((y == 0.0).sum())
    if n_pos == 0 or n_neg == 0:
        raise EvalError("auc needs both classes present")
    ranks = _midranks(-d)
    return float((ranks[y == 1.0].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def spearman(scores: Sequence[tuple[float, float]]) -> float:
    """Spearman rank correlation between -distance and the gold score."""
    if len(scores) < 3:
        raise EvalError(f"spearman needs at least 3 pairs, got {len(scores)}")
    d = np.array([s[0] for s in scores], dtype=float)
    g = np.array([s[1] for s in scores], dtype=float)
    if np.all(d == d[0]):
        raise EvalError("spearman undefined for constant distances")
    if np.all(g == g[0]):
        raise EvalError("spearman undefined for constant gold scores")
    rd = _midranks(-d)
    rg = _midranks(g)
    rd -= rd.mean()
    rg -= rg.mean()
    return float((rd @ rg) / np.sqrt((rd @ rd) * (rg @ rg)))


@dataclass(frozen=True)
class MeasureConfig:
    """One scoring configuration; ``sam_id`` identifies the attention source."""

    measure: str
    weights: str = "uniform"
    cost: str = "euclidean"
    lam: float | None = None
    sam_id: str | None = None

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}, expected one of {MEASURES}")


@dataclass(frozen=True)
class PairScore:
    id_a: str
    id_b: str
    distance: float
    fgw: FgwResult | None = None
    plan: np.ndarray | None = None  # transport plan for the OT measures

    def transport_plan(self) -> np.ndarray | None:
        if self.fgw is not None:
            return self.fgw.plan.plan
        return self.plan


@dataclass(frozen=True)
class EvalReport:
    metric: str  # "auc" | "spearman"
    value: float
    n_pairs: int
    config: MeasureConfig

    def __post_init__(self):
        lo = 0.0 if self.metric == "auc" else -1.0
        if not lo - 1e-12 <= self.value <= 1.0 + 1e-12:
            raise ValueError(f"{self.metric} value {self.value} outside [{lo}, 1]")


def score_pair(
    a: SentenceBundle,
    b: SentenceBundle,
    config: MeasureConfig,
    scheme: WeightScheme,
    opts: SolverOptions | None = None,
) -> PairScore:
    """Distance for one pair under the configured measure.

    Similarity baselines (bow, sentemb) are negated so that smaller is always
    more similar.
    """
    measure = config.measure
    if measure == "bow":
        return PairScore(a.id, b.id, -bow_similarity(a, b))
    if measure == "sentemb":
        return PairScore(a.id, b.id, -sent_emb_similarity(a, b))
    if measure in ("wmd", "wrd"):
        sol = wmd(a, b, scheme=scheme, kind=CostKind(config.cost))
        return PairScore(a.id, b.id, sol.value, plan=sol.plan.plan)
    if measure == "smd":
        sol = smd(a, b, scheme=scheme, opts=opts)
        return PairScore(a.id, b.id, sol.value, plan=sol.plan.plan)
    # wsmd
    if config.lam is None:
        raise ValueError("wsmd requires a mixing ratio (lam)")
    res = wsmd(a, b, scheme=scheme, kind=CostKind(config.cost), lam=config.lam, opts=opts)
    return PairScore(a.id, b.id, res.distance, fgw=res)


def score_pairs(
    pairs: Sequence,
    bundles: dict[str, SentenceBundle],
    config: MeasureConfig,
    scheme: WeightScheme,
    opts: SolverOptions | None = None,
    threads: int = 1,
) -> list[PairScore]:
    """Score every pair; output order follows input order regardless of threads."""

    def one(pair) -> PairScore:
        return score_pair(bundles[pair.id_a], bundles[pair.id_b], config, scheme, opts)

    if threads <= 1:
        return [one(p) for p in pairs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, pairs))


def evaluate_pairs(
    pairs_file,
    bundles: dict[str, SentenceBundle],
    config: MeasureConfig,
    scheme: WeightScheme,
    opts: SolverOptions | None = None,
    threads: int = 1,
) -> tuple[EvalReport, list[PairScore]]:
    """Run the configured measure over a pairs file and score it with the
    metric matching the file's mode (binary -> AUC, score -> Spearman)."""
    scores = score_pairs(pairs_file.pairs, bundles, config, scheme, opts, threads)
    data = [(s.distance, p.gold) for s, p in zip(scores, pairs_file.pairs)]
    if pairs_file.mode == "binary":
        value = auc(data)
        metric = "auc"
    else:
        value = spearman(data)
        metric = "spearman"
    return EvalReport(metric=metric, value=value, n_pairs=len(data), config=config), scores


@dataclass(frozen=True)
class GridSearchResult:
    best: EvalReport
    reports: list[EvalReport]


def grid_search(
    pairs_file,
    bundles_by_sam: dict[str, dict[str, SentenceBundle]],
    lambdas: Sequence[float],
    config: MeasureConfig,
    scheme: WeightScheme,
    opts: SolverOptions | None = None,
    threads: int = 1,
) -> GridSearchResult:
    """Evaluate every (attention source, lambda) pair on a dev set.

    Returns all reports plus the argmax of the dev metric; ties break toward
    smaller lambda, then lexicographically smaller attention id.
    """
    if not pairs_file.pairs:
        raise EvalError("grid search needs a non-empty dev set")
    if not bundles_by_sam:
        raise EvalError("grid search needs at least one attention-matrix source")
    if not lambdas:
        raise EvalError("grid search needs a non-empty lambda grid")

    reports: list[EvalReport] = []
    best: EvalReport | None = None
    for sam_id in sorted(bundles_by_sam):
        bundles = bundles_by_sam[sam_id]
        for lam in sorted(lambdas):
            cfg = replace(config, lam=float(lam), sam_id=sam_id)
            report, _ = evaluate_pairs(pairs_file, bundles, cfg, scheme, opts, threads)
            reports.append(report)
            if best is None or _better(report, best):
                best = report
    return GridSearchResult(best=best, reports=reports)


def _better(candidate: EvalReport, incumbent: EvalReport) -> bool:
    if candidate.value != incumbent.value:
        return candidate.value > incumbent.value
    return (candidate.config.lam, candidate.config.sam_id) < (
        incumbent.config.lam,
        incumbent.config.sam_id,
    )
