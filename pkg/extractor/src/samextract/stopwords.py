"""Vendored stopword lists, addressed by versioned identifier."""

from __future__ import annotations

from importlib import resources

_LISTS = {
    "english-v1": "stopwords_english_v1.txt",
}


def load_stopwords(list_id: str = "english-v1") -> frozenset[str]:
    if list_id not in _LISTS:
        raise ValueError(f"unknown stopword list {list_id!r}; available: {sorted(_LISTS)}")
    text = resources.files("samextract.data").joinpath(_LISTS[list_id]).read_text(encoding="utf-8")
    return frozenset(tok for tok in text.split() if tok)
