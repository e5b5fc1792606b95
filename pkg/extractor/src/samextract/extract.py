"""Export token embeddings and self-attention matrices into bundle files.

For every sentence the model is run once; the requested hidden-state layers
become embedding bundles and the requested (attention layer, head) pairs
become attention bundles.  Rows/columns belonging to removed tokens
(stopwords and the [CLS]/[SEP] specials) are deleted from each attention
matrix and the remaining rows renormalized to sum 1.

Indexing is zero-based everywhere: embedding layer 0 is the embedding-module
output (before the first encoder layer), and attention layer L / head H index
the encoder layers and heads from 0.  Under one-based counting, attention
(6, 1) is "the second head of the seventh layer".

Output files use the bundle interchange format: UTF-8 JSON Lines with fields
id / tokens / embeddings / sam, floats at 17 significant digits.  Embedding
bundles carry a structureless uniform attention placeholder; attention
bundles carry the first requested embedding layer so each file is usable on
its own.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .stopwords import load_stopwords

logger = logging.getLogger(__name__)

MAX_EMBEDDING_LAYER = 12
MAX_ATTENTION_LAYER = 11
MAX_HEAD = 11

TABLE1_SENTENCES = (
    ("a", "obama speaks to the media in illinois."),
    ("b", "the president greets the press in chicago."),
    ("c", "the press greets the president in chicago."),
)
TABLE1_PAIRS = (("a", "b", 1), ("a", "c", 0))
TABLE1_EMBEDDING_LAYER = 0
TABLE1_ATTENTION = (6, 1)  # zero-based; "7th layer, 2nd head" one-based


@dataclass(frozen=True)
class ExtractionConfig:
    """What to export and from where."""

    model: str = "bert-base-uncased"
    layers: tuple[int, ...] = (0, 12)
    sams: tuple[tuple[int, int], ...] = ((6, 1),)
    stopword_list: str = "english-v1"
    lowercase: bool = True
    output_dir: str = "bundles"

    def __post_init__(self):
        for layer in self.layers:
            if not 0 <= layer <= MAX_EMBEDDING_LAYER:
                raise ValueError(f"embedding layer {layer} outside 0..{MAX_EMBEDDING_LAYER}")
        for layer, head in self.sams:
            if not 0 <= layer <= MAX_ATTENTION_LAYER:
                raise ValueError(f"attention layer {layer} outside 0..{MAX_ATTENTION_LAYER}")
            if not 0 <= head <= MAX_HEAD:
                raise ValueError(f"attention head {head} outside 0..{MAX_HEAD}")
        if not self.layers and not self.sams:
            raise ValueError("nothing to export: no layers and no attention heads requested")


@dataclass
class SentenceRecord:
    id: str
    tokens: list[str]
    embeddings_by_layer: dict[int, np.ndarray]
    sams_by_pair: dict[tuple[int, int], np.ndarray]


@dataclass
class ExtractionResult:
    files: list[str]
    skipped: list[str] = field(default_factory=list)
    manifest_path: str | None = None


# ---------------------------------------------------------------------------
# Bundle serialization (interchange format; floats at 17 significant digits)
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    out = format(float(x), ".17g")
    if "." not in out and "e" not in out and "E" not in out:
        out += ".0"  # force JSON float: bare "-0" would reparse as int 0
    return out


def _fmt_matrix(mat: np.ndarray) -> str:
    return "[" + ",".join("[" + ",".join(_fmt(v) for v in row) + "]" for row in mat) + "]"


def bundle_line(rid: str, tokens: list[str], embeddings: np.ndarray, sam: np.ndarray) -> str:
    return (
        "{"
        + f'"id":{json.dumps(rid, ensure_ascii=False)},'
        + f'"tokens":{json.dumps(tokens, ensure_ascii=False, separators=(",", ":"))},'
        + f'"embeddings":{_fmt_matrix(embeddings)},'
        + f'"sam":{_fmt_matrix(sam)}'
        + "}"
    )


# ---------------------------------------------------------------------------
# Model plumbing
# ---------------------------------------------------------------------------

def _load_model(model_id: str):
    import torch
    from transformers import AutoModel, AutoTokenizer

    torch.set_num_threads(1)  # fixed reduction order keeps outputs byte-stable
    tokenizer = AutoTokenizer.from_pretrained(model_id)
    # eager attention: fused kernels do not materialize the attention weights
    model = AutoModel.from_pretrained(model_id, attn_implementation="eager")
    model.eval()
    return tokenizer, model


def _run_sentence(
    sid: str,
    text: str,
    tokenizer,
    model,
    config: ExtractionConfig,
    stopwords: frozenset[str],
) -> SentenceRecord | None:
    import torch

    if config.lowercase:
        text = text.lower()
    encoded = tokenizer(text, return_tensors="pt")
    with torch.no_grad():
        out = model(**encoded, output_hidden_states=True, output_attentions=True)

    n_states = len(out.hidden_states)
    n_attn = len(out.attentions)
    for layer in config.layers:
        if layer >= n_states:
            raise ValueError(f"model has {n_states} hidden states; layer {layer} unavailable")
    for layer, head in config.sams:
        if layer >= n_attn:
            raise ValueError(f"model has {n_attn} attention layers; layer {layer} unavailable")
        if head >= out.attentions[layer].shape[1]:
            raise ValueError(f"model has {out.attentions[layer].shape[1]} heads; head {head} unavailable")

    wordpieces = tokenizer.convert_ids_to_tokens(encoded["input_ids"][0])
    drop = {tokenizer.cls_token, tokenizer.sep_token, tokenizer.pad_token}
    keep = [
        i
        for i, piece in enumerate(wordpieces)
        if piece not in drop and piece.lower() not in stopwords
    ]
    if not keep:
        logger.warning("sentence %r empty after stopword/special removal; skipped", sid)
        return None

    tokens = [wordpieces[i] for i in keep]
    embeddings = {
        layer: out.hidden_states[layer][0, keep, :].numpy().astype(np.float64)
        for layer in config.layers
    }
    sams = {}
    for layer, head in config.sams:
        full = out.attentions[layer][0, head].numpy().astype(np.float64)
        sub = full[np.ix_(keep, keep)]
        sams[(layer, head)] = sub / sub.sum(axis=1, keepdims=True)
    return SentenceRecord(id=sid, tokens=tokens, embeddings_by_layer=embeddings, sams_by_pair=sams)


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------

def extract(sentences: list[tuple[str, str]], config: ExtractionConfig) -> ExtractionResult:
    """Run the model over (id, text) pairs and write one bundle file per
    requested embedding layer and per requested (layer, head) attention pair,
    plus a manifest describing exactly what was exported."""
    tokenizer, model = _load_model(config.model)
    stopwords = load_stopwords(config.stopword_list)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records: list[SentenceRecord] = []
    skipped: list[str] = []
    for sid, text in sentences:
        rec = _run_sentence(sid, text, tokenizer, model, config, stopwords)
        if rec is None:
            skipped.append(sid)
        else:
            records.append(rec)
    if not records:
        raise ValueError("no sentences left after filtering")

    uniform_sam = {
        rec.id: np.full((len(rec.tokens), len(rec.tokens)), 1.0 / len(rec.tokens)) for rec in records
    }
    base_layer = config.layers[0] if config.layers else None

    files: list[str] = []
    for layer in config.layers:
        path = out_dir / f"emb_L{layer}.jsonl"
        lines = [
            bundle_line(rec.id, rec.tokens, rec.embeddings_by_layer[layer], uniform_sam[rec.id])
            for rec in records
        ]
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        files.append(path.name)

    for layer, head in config.sams:
        path = out_dir / f"sam_L{layer}H{head}.jsonl"
        lines = []
        for rec in records:
            emb = (
                rec.embeddings_by_layer[base_layer]
                if base_layer is not None
                else np.zeros((len(rec.tokens), 1))
            )
            lines.append(bundle_line(rec.id, rec.tokens, emb, rec.sams_by_pair[(layer, head)]))
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        files.append(path.name)

    manifest = {
        "model": config.model,
        "stopword_list": config.stopword_list,
        "lowercase": config.lowercase,
        "embedding_layers": list(config.layers),
        "attention_pairs": [list(p) for p in config.sams],
        "indexing": "zero-based; attention (6, 1) equals one-based 'layer 7, head 2'",
        "sam_rows_renormalized": True,
        "embedding_bundle_sam": "uniform placeholder (no structure information)",
        "attention_bundle_embeddings": f"hidden-state layer {base_layer}" if base_layer is not None else "zeros",
        "records": [rec.id for rec in records],
        "skipped": skipped,
        "files": files,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return ExtractionResult(files=files, skipped=skipped, manifest_path=str(manifest_path))


def export_table1_fixtures(output_dir: str, model: str = "bert-base-uncased") -> ExtractionResult:
    """Write the three illustration sentences as one self-contained fixture set:
    layer-0 embeddings with the attention matrix from zero-based (6, 1), plus
    the two labeled pairs.  Stable ids a/b/c across runs."""
    config = ExtractionConfig(
        model=model,
        layers=(TABLE1_EMBEDDING_LAYER,),
        sams=(TABLE1_ATTENTION,),
        output_dir=output_dir,
    )
    tokenizer, loaded = _load_model(model)
    stopwords = load_stopwords(config.stopword_list)
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = []
    for sid, text in TABLE1_SENTENCES:
        rec = _run_sentence(sid, text, tokenizer, loaded, config, stopwords)
        if rec is None:
            raise ValueError(f"fixture sentence {sid!r} vanished after filtering")
        records.append(rec)

    bundle_path = out_dir / "bundles.jsonl"
    lines = [
        bundle_line(
            rec.id,
            rec.tokens,
            rec.embeddings_by_layer[TABLE1_EMBEDDING_LAYER],
            rec.sams_by_pair[TABLE1_ATTENTION],
        )
        for rec in records
    ]
    bundle_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    pairs_path = out_dir / "pairs.tsv"
    pair_lines = ["#mode=binary", "id_a\tid_b\tgold"]
    pair_lines += [f"{a}\t{b}\t{gold}" for a, b, gold in TABLE1_PAIRS]
    pairs_path.write_text("\n".join(pair_lines) + "\n", encoding="utf-8")

    manifest = {
        "model": model,
        "embedding_layer": TABLE1_EMBEDDING_LAYER,
        "attention_pair": list(TABLE1_ATTENTION),
        "indexing": "zero-based; attention (6, 1) equals one-based 'layer 7, head 2'",
        "stopword_list": config.stopword_list,
        "sam_rows_renormalized": True,
        "sentences": {sid: text for sid, text in TABLE1_SENTENCES},
        "files": [bundle_path.name, pairs_path.name],
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return ExtractionResult(files=[bundle_path.name, pairs_path.name], manifest_path=str(manifest_path))
