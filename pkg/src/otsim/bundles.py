"""Bundle and dataset-pair file formats, plus corpus idf.

Bundle files are UTF-8 JSON Lines: one object per line with fields
``id`` (string), ``tokens`` (list of strings), ``embeddings`` (n x d nested
arrays, row-major), ``sam`` (n x n nested arrays), and optionally
``norm_weights`` (length n).  Floats are serialized with 17 significant
digits, so write(read(path)) reproduces the canonical bytes exactly.

Pairs files are TSV with a first-line mode comment ``#mode=binary`` or
``#mode=score`` followed by a header row ``id_a<TAB>id_b<TAB>gold``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BundleFormatError
from .measures import SentenceBundle

logger = logging.getLogger(__name__)

RENORM_WARN_TOL = 1e-3
_RENORM_SKIP_TOL = 1e-12


@dataclass
class BundleFile:
    """An ordered collection of sentence bundles sharing one embedding dim."""

    path: str
    records: list[SentenceBundle]

    def __post_init__(self):
        seen: set[str] = set()
        dim = None
        for rec in self.records:
            if rec.id in seen:
                raise BundleFormatError(f"{self.path}: duplicate bundle id {rec.id!r}")
            seen.add(rec.id)
            if dim is None:
                dim = rec.dim
            elif rec.dim != dim:
                raise BundleFormatError(
                    f"{self.path}: bundle {rec.id!r} has embedding dim {rec.dim}, expected {dim}"
                )

    def by_id(self) -> dict[str, SentenceBundle]:
        return {rec.id: rec for rec in self.records}


@dataclass(frozen=True)
class DatasetPair:
    """Two sentence ids with a gold label (binary mode) or score (score mode)."""

    id_a: str
    id_b: str
    gold: float


@dataclass
class PairsFile:
    """Parsed pairs file: ``mode`` is 'binary' (gold in {0,1}) or 'score'."""

    mode: str
    pairs: list[DatasetPair]


def _fmt(x: float) -> str:
    out = format(float(x), ".17g")
    if "." not in out and "e" not in out and "E" not in out:
        out += ".0"  # force JSON float: bare "-0" would reparse as int 0
    return out


def _fmt_matrix(mat: np.ndarray) -> str:
    rows = ",".join("[" + ",".join(_fmt(v) for v in row) + "]" for row in mat)
    return "[" + rows + "]"


def _record_line(rec: SentenceBundle) -> str:
    parts = [
        f'"id":{json.dumps(rec.id, ensure_ascii=False)}',
        f'"tokens":{json.dumps(rec.tokens, ensure_ascii=False, separators=(",", ":"))}',
        f'"embeddings":{_fmt_matrix(rec.embeddings)}',
        f'"sam":{_fmt_matrix(rec.sam)}',
    ]
    if rec.norm_weights is not None:
        parts.append('"norm_weights":[' + ",".join(_fmt(v) for v in rec.norm_weights) + "]")
    return "{" + ",".join(parts) + "}"


def write_bundles(bundle_file: BundleFile, path: str | Path) -> None:
    """Write records in canonical one-object-per-line form."""
    path = Path(path)
    text = "".join(_record_line(rec) + "\n" for rec in bundle_file.records)
    path.write_text(text, encoding="utf-8")


def read_bundles(path: str | Path) -> BundleFile:
    """Parse a bundle file, renormalizing attention rows on the way in.

    Rows whose sums deviate from 1 by more than 1e-3 trigger a warning; rows
    already exact (within 1e-12) are left untouched so the canonical form is
    byte-stable under re-serialization.  Structural problems (bad JSON, shape
    mismatches, NaN, nonpositive rows) raise BundleFormatError naming the
    line and record.
    """
    path = Path(path)
    records: list[SentenceBundle] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BundleFormatError(f"{path}:{lineno}: malformed record: {exc}") from exc
            records.append(_parse_record(obj, path, lineno))
    return BundleFile(path=str(path), records=records)


def _parse_record(obj, path: Path, lineno: int) -> SentenceBundle:
    def fail(msg: str):
        rid = obj.get("id", "<missing id>") if isinstance(obj, dict) else "<not an object>"
        raise BundleFormatError(f"{path}:{lineno}: record {rid!r}: {msg}")

    if not isinstance(obj, dict):
        fail("expected a JSON object")
    for key in ("id", "tokens", "embeddings", "sam"):
        if key not in obj:
            fail(f"missing field {key!r}")
    rid = obj["id"]
    tokens = obj["tokens"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        fail("tokens must be a list of strings")
    n = len(tokens)
    try:
        emb = np.array(obj["embeddings"], dtype=float)
        sam = np.array(obj["sam"], dtype=float)
    except (TypeError, ValueError) as exc:
        fail(f"non-numeric array entry: {exc}")
    if emb.ndim != 2 or emb.shape[0] != n:
        fail(f"embeddings shape {emb.shape} does not match {n} tokens")
    if sam.shape != (n, n):
        fail(f"sam shape {sam.shape} does not match {n} tokens")
    if not (np.all(np.isfinite(emb)) and np.all(np.isfinite(sam))):
        fail("NaN/Inf entries")
    if np.any(sam < 0):
        fail("sam entries must be nonnegative")

    sums = sam.sum(axis=1)
    if np.any(sums <= 0):
        fail("sam row sums to zero, cannot renormalize")
    dev = float(np.abs(sums - 1.0).max())
    if dev > RENORM_WARN_TOL:
        logger.warning(
            "%s:%d: record %r: sam row sums deviate from 1 by %.3g; renormalizing",
            path,
            lineno,
            rid,
            dev,
        )
    if dev > _RENORM_SKIP_TOL:
        sam = sam / sums[:, None]

    norm_weights = None
    if "norm_weights" in obj and obj["norm_weights"] is not None:
        nw = np.array(obj["norm_weights"], dtype=float)
        if nw.shape != (n,):
            fail(f"norm_weights shape {nw.shape} != ({n},)")
        norm_weights = nw

    try:
        return SentenceBundle(id=rid, tokens=tokens, embeddings=emb, sam=sam, norm_weights=norm_weights)
    except ValueError as exc:
        fail(str(exc))


def read_pairs(path: str | Path) -> PairsFile:
    """Parse a TSV pairs file; the first line must declare the gold mode."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#mode="):
        raise BundleFormatError(f"{path}:1: expected mode comment '#mode=binary' or '#mode=score'")
    mode = lines[0][len("#mode="):].strip()
    if mode not in ("binary", "score"):
        raise BundleFormatError(f"{path}:1: unknown mode {mode!r}")
    if len(lines) < 2 or lines[1].split("\t") != ["id_a", "id_b", "gold"]:
        raise BundleFormatError(f"{path}:2: expected header 'id_a\\tid_b\\tgold'")
    pairs: list[DatasetPair] = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != 3:
            raise BundleFormatError(f"{path}:{lineno}: expected 3 tab-separated columns, got {len(cells)}")
        id_a, id_b, gold_raw = cells
        try:
            gold = float(gold_raw)
        except ValueError:
            raise BundleFormatError(f"{path}:{lineno}: non-numeric gold value {gold_raw!r}") from None
        if mode == "binary" and gold not in (0.0, 1.0):
            raise BundleFormatError(f"{path}:{lineno}: binary gold must be 0 or 1, got {gold_raw!r}")
        pairs.append(DatasetPair(id_a=id_a, id_b=id_b, gold=gold))
    return PairsFile(mode=mode, pairs=pairs)


def write_pairs(pairs_file: PairsFile, path: str | Path) -> None:
    path = Path(path)
    lines = [f"#mode={pairs_file.mode}", "id_a\tid_b\tgold"]
    for p in pairs_file.pairs:
        gold = str(int(p.gold)) if pairs_file.mode == "binary" else _fmt(p.gold)
        lines.append(f"{p.id_a}\t{p.id_b}\t{gold}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def resolve_pairs(pairs_file: PairsFile, bundles: dict[str, SentenceBundle]) -> None:
    """Check that every pair id is present in the bundle mapping."""
    for p in pairs_file.pairs:
        for rid in (p.id_a, p.id_b):
            if rid not in bundles:
                raise BundleFormatError(f"pair ({p.id_a}, {p.id_b}): unresolvable id {rid!r}")


def compute_idf(bundle_file: BundleFile) -> dict[str, float]:
    """Smoothed inverse sentence frequency: ln((1+N)/(1+df)) + 1, always > 0."""
    if not bundle_file.records:
        raise ValueError("cannot compute idf over an empty bundle file")
    n_docs = len(bundle_file.records)
    df: dict[str, int] = {}
    for rec in bundle_file.records:
        for tok in set(rec.tokens):
            df[tok] = df.get(tok, 0) + 1
    return {tok: float(np.log((1 + n_docs) / (1 + count)) + 1.0) for tok, count in sorted(df.items())}
