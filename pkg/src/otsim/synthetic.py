"""Synthetic order-sensitivity benchmark.

Every pair shares its word multiset, so set-based measures see near-identical
sentences.  Positive pairs keep the attention structure aligned with the word
identities; negative pairs scramble the structure by a derangement, the way a
word-order change flips meaning while keeping the bag of words fixed.  A
structure-aware distance separates the classes; a words-only distance cannot.
"""

from __future__ import annotations

import numpy as np

from .bundles import BundleFile, DatasetPair, PairsFile
from .measures import SentenceBundle


def _random_sam(rng: np.random.Generator, n: int, sharpness: float = 3.0) -> np.ndarray:
    logits = rng.normal(size=(n, n)) * sharpness
    expd = np.exp(logits - logits.max(axis=1, keepdims=True))
    return expd / expd.sum(axis=1, keepdims=True)


def _derangement(rng: np.random.Generator, n: int) -> np.ndarray:
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == np.arange(n)):
            return perm


def make_order_sensitivity_dataset(
    n_pairs: int = 200,
    n_tokens: int = 6,
    dim: int = 8,
    seed: int = 0,
    noise: float = 1e-3,
) -> tuple[BundleFile, PairsFile]:
    """Build a binary dataset where only structure separates the classes.

    Each pair consists of a base sentence and a twin with the same tokens and
    near-identical embeddings (plus ``noise``).  Twins of positive pairs reuse
    the base attention matrix; twins of negative pairs use the base attention
    matrix conjugated by a derangement, i.e. the structure of a reordered
    sentence.  Labels alternate deterministically.
    """
    if n_tokens < 2:
        raise ValueError("need at least 2 tokens to permute structure")
    rng = np.random.default_rng(seed)
    records = []
    pairs = []
    for t in range(n_pairs):
        emb = rng.normal(size=(n_tokens, dim))
        sam = _random_sam(rng, n_tokens)
        tokens = [f"w{t}_{i}" for i in range(n_tokens)]
        label = 1 - (t % 2)
        if label == 1:
            twin_sam = sam
        else:
            perm = _derangement(rng, n_tokens)
            twin_sam = sam[np.ix_(perm, perm)]
        id_a, id_b = f"a{t:04d}", f"b{t:04d}"
        records.append(SentenceBundle(id=id_a, tokens=tokens, embeddings=emb, sam=sam))
        records.append(
            SentenceBundle(
                id=id_b,
                tokens=list(tokens),
                embeddings=emb + rng.normal(size=(n_tokens, dim)) * noise,
                sam=twin_sam,
            )
        )
        pairs.append(DatasetPair(id_a=id_a, id_b=id_b, gold=float(label)))
    bundle_file = BundleFile(path="<synthetic>", records=records)
    pairs_file = PairsFile(mode="binary", pairs=pairs)
    return bundle_file, pairs_file


def _main(argv=None) -> int:
    """Write a demo dataset: python3 -m otsim.synthetic OUTDIR [N_PAIRS] [SEED]"""
    import sys
    from pathlib import Path

    from .bundles import write_bundles, write_pairs

    args = sys.argv[1:] if argv is None else argv
    if not 1 <= len(args) <= 3:
        print("usage: python3 -m otsim.synthetic OUTDIR [N_PAIRS] [SEED]", file=sys.stderr)
        return 2
    out = Path(args[0])
    n_pairs = int(args[1]) if len(args) > 1 else 200
    seed = int(args[2]) if len(args) > 2 else 0
    out.mkdir(parents=True, exist_ok=True)
    bundles, pairs = make_order_sensitivity_dataset(n_pairs=n_pairs, seed=seed)
    write_bundles(bundles, out / "bundles.jsonl")
    write_pairs(pairs, out / "pairs.tsv")
    print(out / "bundles.jsonl")
    print(out / "pairs.tsv")
    return 0


if __name__ == "__main__":
    raise SystemExit(_main())
