"""Sentence-level transport distances and baselines.

Distances:

* ``wmd``  — linear optimal transport over word embeddings.  Uniform weights
  with Euclidean cost is the classic word mover's distance; norm weights with
  cosine cost is the word rotator's variant.
* ``smd``  — structure mover's distance: quadratic (Gromov-Wasserstein style)
  transport between the two sentences' self-attention matrices.
* ``wsmd`` — fused distance mixing both terms with ratio ``lam`` and scale
  ``k`` that puts the structure term on the cost scale.

Baselines ``bow_similarity`` and ``sent_emb_similarity`` return cosine
similarities (higher = more similar), unlike the distances above.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    FgwResult,
    OtSolution,
    ProbVector,
    SolverOptions,
    StructureMatrix,
    gw_objective,
    solve_exact_ot,
    solve_fgw,
)
from .errors import DegenerateStructure, DimensionMismatch, NonFiniteInput

logger = logging.getLogger(__name__)

SAM_ROW_SUM_TOL = 1e-6
DEGENERATE_STRUCTURE_TOL = 1e-15


class CostKind(str, Enum):
    """Ground cost between word embeddings."""

    EUCLIDEAN = "euclidean"
    COSINE = "cosine"


@dataclass(frozen=True)
class WeightScheme:
    """How token mass is assigned: uniform, idf-weighted, or embedding-norm."""

    kind: str
    idf_table: dict[str, float] | None = None

    _KINDS = ("uniform", "idf", "norm")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown weight scheme {self.kind!r}, expected one of {self._KINDS}")
        if self.kind == "idf":
            if not self.idf_table:
                raise ValueError("idf weight scheme requires an idf table")
            if any(val <= 0 for val in self.idf_table.values()):
                raise ValueError("idf values must be strictly positive")

    @classmethod
    def uniform(cls) -> "WeightScheme":
        return cls("uniform")

    @classmethod
    def idf(cls, table: dict[str, float]) -> "WeightScheme":
        return cls("idf", idf_table=table)

    @classmethod
    def norm(cls) -> "WeightScheme":
        return cls("norm")


@dataclass
class SentenceBundle:
    """Tokens, embeddings, self-attention matrix, and optional norm weights
    for one sentence.

    Invariants: n >= 1 tokens; embeddings have n rows; the attention matrix is
    n x n with rows summing to 1 (deviations up to 1e-6 are renormalized away
    on construction).
    """

    id: str
    tokens: list[str]
    embeddings: np.ndarray
    sam: np.ndarray
    norm_weights: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.tokens)
        if n < 1:
            raise ValueError(f"bundle {self.id!r}: need at least one token")
        emb = np.asarray(self.embeddings, dtype=float)
        if emb.ndim != 2 or emb.shape[0] != n:
            raise DimensionMismatch(
                f"bundle {self.id!r}: embeddings shape {emb.shape} does not match {n} tokens"
            )
        sam = np.asarray(getattr(self.sam, "values", self.sam), dtype=float)
        if sam.shape != (n, n):
            raise DimensionMismatch(
                f"bundle {self.id!r}: sam shape {sam.shape} does not match {n} tokens"
            )
        if not (np.all(np.isfinite(emb)) and np.all(np.isfinite(sam))):
            raise NonFiniteInput(f"bundle {self.id!r}: NaN/Inf entries")
        if np.any(sam < 0):
            raise ValueError(f"bundle {self.id!r}: sam entries must be nonnegative")
        sums = sam.sum(axis=1)
        dev = np.abs(sums - 1.0).max()
        if dev > SAM_ROW_SUM_TOL:
            raise ValueError(
                f"bundle {self.id!r}: sam row sums deviate from 1 by {dev:.3g} (> {SAM_ROW_SUM_TOL})"
            )
        if dev > 1e-12:
            sam = sam / sums[:, None]
        if self.norm_weights is not None:
            nw = np.asarray(self.norm_weights, dtype=float)
            if nw.shape != (n,):
                raise DimensionMismatch(
                    f"bundle {self.id!r}: norm_weights shape {nw.shape} != ({n},)"
                )
            self.norm_weights = nw
        self.embeddings = emb
        self.sam = sam

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def structure(self) -> StructureMatrix:
        return StructureMatrix(self.sam, row_normalized=True)


def build_cost(a: SentenceBundle, b: SentenceBundle, kind: CostKind | str = CostKind.EUCLIDEAN) -> np.ndarray:
    """Pairwise ground costs between the two bundles' embedding rows.

    Euclidean: L2 distance.  Cosine: 1 - cosine similarity, clamped to [0, 2];
    zero-norm rows are rejected because their direction is undefined.
    """
    kind = CostKind(kind)
    if a.dim != b.dim:
        raise DimensionMismatch(
            f"embedding dimensions differ: {a.id!r} has d={a.dim}, {b.id!r} has d={b.dim}"
        )
    x, y = a.embeddings, b.embeddings
    if kind is CostKind.EUCLIDEAN:
        diff = x[:, None, :] - y[None, :, :]
        cost = np.sqrt(np.maximum(np.einsum("ijk,ijk->ij", diff, diff), 0.0))
    else:
        for bundle, rows in ((a, x), (b, y)):
            norms = np.linalg.norm(rows, axis=1)
            bad = np.nonzero(norms == 0.0)[0]
            if bad.size:
                raise ValueError(
                    f"bundle {bundle.id!r}: zero-norm embedding at token index {bad[0]} "
                    f"({bundle.tokens[bad[0]]!r}) cannot be used with cosine cost"
                )
        xn = x / np.linalg.norm(x, axis=1, keepdims=True)
        yn = y / np.linalg.norm(y, axis=1, keepdims=True)
        cost = np.clip(1.0 - xn @ yn.T, 0.0, 2.0)
    return cost


def build_weights(bundle: SentenceBundle, scheme: WeightScheme) -> ProbVector:
    """Token mass distribution for one sentence under the given scheme.

    idf falls back to the table's maximum value for out-of-vocabulary tokens
    (rare-word prior); norm uses the L2 norms of the embedding rows.
    """
    n = bundle.n
    if scheme.kind == "uniform":
        return ProbVector(np.full(n, 1.0 / n))
    if scheme.kind == "idf":
        table = scheme.idf_table
        fallback = max(table.values())
        raw = np.array([table.get(tok, fallback) for tok in bundle.tokens])
    else:  # norm
        if bundle.norm_weights is not None:
            raw = bundle.norm_weights.astype(float)
        else:
            raw = np.linalg.norm(bundle.embeddings, axis=1)
    total = raw.sum()
    if total <= 0:
        raise ValueError(f"bundle {bundle.id!r}: total weight mass is zero under scheme {scheme.kind!r}")
    return ProbVector(raw / total)


def wmd(
    a: SentenceBundle,
    b: SentenceBundle,
    scheme: WeightScheme | None = None,
    kind: CostKind | str = CostKind.EUCLIDEAN,
) -> OtSolution:
    """Linear transport distance between two sentences.

    Defaults (uniform weights, Euclidean cost) give the classic word mover's
    distance; ``scheme=norm, kind=cosine`` gives the word rotator's variant.
    """
    scheme = scheme or WeightScheme.uniform()
    cost = build_cost(a, b, kind)
    u = build_weights(a, scheme)
    v = build_weights(b, scheme)
    return solve_exact_ot(cost, u, v)


def smd(
    a: SentenceBundle,
    b: SentenceBundle,
    scheme: WeightScheme | None = None,
    opts: SolverOptions | None = None,
) -> OtSolution:
    """Structure mover's distance between the two attention matrices.

    Pure quadratic transport (mixing ratio 1, unit scale, zero linear cost).
    The value is the structure cost at the stationary plan found; like all
    quadratic transport values it is a local, not certified global, optimum.
    """
    scheme = scheme or WeightScheme.uniform()
    u = build_weights(a, scheme)
    v = build_weights(b, scheme)
    zero_cost = np.zeros((a.n, b.n))
    res = solve_fgw(zero_cost, a.sam, b.sam, u, v, lam=1.0, k=1.0, opts=opts)
    return OtSolution(value=res.smd_component, plan=res.plan)


def normalization_factor(C, A, B) -> float:
    """Scale k that puts the structure term on the linear-cost scale.

    k = (mean linear cost) / (mean squared structure difference), both means
    taken at the uniform product coupling.  Raises DegenerateStructure when
    the structure matrices are indistinguishable (mean squared difference
    below 1e-15), since no finite scale exists.
    """
    c = np.asarray(getattr(C, "costs", C), dtype=float)
    a = np.asarray(getattr(A, "values", A), dtype=float)
    b = np.asarray(getattr(B, "values", B), dtype=float)
    n, m = a.shape[0], b.shape[0]
    if c.shape != (n, m):
        raise DimensionMismatch(f"cost shape {c.shape} does not match structures ({n}, {m})")
    c_mean = float(c.mean())
    a_mse = float((a * a).mean() + (b * b).mean() - 2.0 * a.mean() * b.mean())
    if a_mse < DEGENERATE_STRUCTURE_TOL:
        raise DegenerateStructure(
            f"structure matrices are indistinguishable (mean squared difference {a_mse:.3g})"
        )
    return c_mean / a_mse


def wsmd(
    a: SentenceBundle,
    b: SentenceBundle,
    scheme: WeightScheme | None = None,
    kind: CostKind | str = CostKind.EUCLIDEAN,
    lam: float = 0.5,
    opts: SolverOptions | None = None,
) -> FgwResult:
    """Fused word + structure transport distance.

    ``wmd_component`` and ``smd_component`` of the result are the linear and
    structure costs at the fused optimal plan, so the distance decomposes as
    (1-lam) * wmd_component + lam * k * smd_component.

    If the two attention matrices are indistinguishable (1-token sentences
    force this), the structure term carries no information: the result falls
    back to the pure linear distance with ``structure_fallback`` set and
    ``lam`` reported as 0 to keep the decomposition identity exact.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must be in [0, 1], got {lam}")
    scheme = scheme or WeightScheme.uniform()
    cost = build_cost(a, b, kind)
    u = build_weights(a, scheme)
    v = build_weights(b, scheme)
    try:
        k = normalization_factor(cost, a.sam, b.sam)
    except DegenerateStructure:
        logger.warning(
            "degenerate structure for pair (%s, %s): falling back to pure linear distance",
            a.id,
            b.id,
        )
        sol = solve_exact_ot(cost, u, v)
        return FgwResult(
            distance=sol.value,
            plan=sol.plan,
            wmd_component=sol.value,
            smd_component=gw_objective(a.sam, b.sam, sol.plan.plan),
            k=0.0,
            lam=0.0,
            iterations=0,
            converged=True,
            structure_fallback=True,
        )
    return solve_fgw(cost, a.sam, b.sam, u, v, lam=lam, k=k, opts=opts)


def bow_similarity(a: SentenceBundle, b: SentenceBundle) -> float:
    """Cosine similarity of token-frequency vectors over the union vocabulary."""
    vocab = sorted(set(a.tokens) | set(b.tokens))
    index = {tok: i for i, tok in enumerate(vocab)}
    fa = np.zeros(len(vocab))
    fb = np.zeros(len(vocab))
    for tok in a.tokens:
        fa[index[tok]] += 1.0
    for tok in b.tokens:
        fb[index[tok]] += 1.0
    return _cosine(fa, fb, f"bow({a.id!r}, {b.id!r})")


def sent_emb_similarity(a: SentenceBundle, b: SentenceBundle) -> float:
    """Cosine similarity of the two sentences' mean embedding vectors."""
    if a.dim != b.dim:
        raise DimensionMismatch(
            f"embedding dimensions differ: {a.id!r} has d={a.dim}, {b.id!r} has d={b.dim}"
        )
    return _cosine(a.embeddings.mean(axis=0), b.embeddings.mean(axis=0), f"sentemb({a.id!r}, {b.id!r})")


def _cosine(x: np.ndarray, y: np.ndarray, label: str) -> float:
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        logger.warning("%s: zero vector, similarity reported as 0 by convention", label)
        return 0.0
    return float(x @ y / (nx * ny))
