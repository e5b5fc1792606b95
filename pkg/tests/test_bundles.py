"""Bundle/pairs file formats: canonical round trips, validation, idf."""

import logging
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otsim import SentenceBundle
from otsim.bundles import (
    BundleFile,
    DatasetPair,
    PairsFile,
    compute_idf,
    read_bundles,
    read_pairs,
    resolve_pairs,
    write_bundles,
    write_pairs,
)
from otsim.errors import BundleFormatError

from oracles import random_row_stochastic


def make_file(rng, n_records=3, n=2, d=3):
    records = []
    for r in range(n_records):
        records.append(
            SentenceBundle(
                id=f"s{r}",
                tokens=[f"tok{r}_{i}" for i in range(n)],
                embeddings=rng.normal(size=(n, d)),
                sam=random_row_stochastic(rng, n),
            )
        )
    return BundleFile(path="<mem>", records=records)


class TestBundleRoundTrip:
    def test_write_read_write_is_byte_identical(self, rng, tmp_path):
        bf = make_file(rng)
        p1 = tmp_path / "one.jsonl"
        p2 = tmp_path / "two.jsonl"
        write_bundles(bf, p1)
        write_bundles(read_bundles(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_values_survive_round_trip_exactly(self, rng, tmp_path):
        bf = make_file(rng, n_records=1, n=2, d=3)
        path = tmp_path / "b.jsonl"
        write_bundles(bf, path)
        back = read_bundles(path)
        assert np.array_equal(back.records[0].embeddings, bf.records[0].embeddings)
        assert np.array_equal(back.records[0].sam, bf.records[0].sam)
        assert back.records[0].tokens == bf.records[0].tokens

    @settings(max_examples=50, deadline=None)
    @given(bits=st.lists(st.integers(0, 2**64 - 1), min_size=4, max_size=4))
    def test_float_codec_bit_exact_for_any_finite_value(self, bits):
        # embeddings may carry extreme magnitudes, subnormals, negative zero;
        # the 17-significant-digit canonical form must round-trip all of them
        from otsim.bundles import _fmt

        for pattern in bits:
            value = struct.unpack("<d", struct.pack("<Q", pattern))[0]
            if not np.isfinite(value):
                continue
            text = _fmt(value)
            back = float(text)
            assert back == value or (np.isnan(back) and np.isnan(value))
            assert np.signbit(back) == np.signbit(value)
            assert _fmt(back) == text  # idempotent: canonical form is stable

    def test_extreme_embedding_values_round_trip(self, rng, tmp_path):
        emb = np.array([[1e300, -1e-300, 5e-324], [-0.0, 1 / 3, np.pi]])
        rec = SentenceBundle("s0", ["a", "b"], emb, np.full((2, 2), 0.5))
        path = tmp_path / "b.jsonl"
        write_bundles(BundleFile("<mem>", [rec]), path)
        back = read_bundles(path)
        assert np.array_equal(back.records[0].embeddings, emb)
        assert np.signbit(back.records[0].embeddings[1, 0])

    def test_norm_weights_optional_field(self, rng, tmp_path):
        rec = SentenceBundle(
            "s0", ["a", "b"], rng.normal(size=(2, 3)), np.full((2, 2), 0.5), norm_weights=np.array([0.25, 4.0])
        )
        path = tmp_path / "b.jsonl"
        write_bundles(BundleFile("<mem>", [rec]), path)
        back = read_bundles(path)
        assert np.array_equal(back.records[0].norm_weights, [0.25, 4.0])


class TestBundleValidation:
    def test_denormalized_row_renormalized_with_warning(self, tmp_path, caplog):
        line = (
            '{"id":"s0","tokens":["a","b"],'
            '"embeddings":[[1,0,0],[0,1,0]],'
            '"sam":[[0.49,0.49],[0.5,0.5]]}'
        )
        path = tmp_path / "b.jsonl"
        path.write_text(line + "\n", encoding="utf-8")
        with caplog.at_level(logging.WARNING):
            bf = read_bundles(path)
        assert "renormalizing" in caplog.text
        assert np.allclose(bf.records[0].sam[0], [0.5, 0.5])

    def test_mismatched_sam_dimension_names_record(self, tmp_path):
        line = '{"id":"bad1","tokens":["a","b"],"embeddings":[[1,0],[0,1]],"sam":[[1.0]]}'
        path = tmp_path / "b.jsonl"
        path.write_text(line + "\n", encoding="utf-8")
        with pytest.raises(BundleFormatError, match="bad1"):
            read_bundles(path)

    def test_malformed_json_reports_line_number(self, tmp_path):
        good = '{"id":"s0","tokens":["a"],"embeddings":[[1.0]],"sam":[[1.0]]}'
        path = tmp_path / "b.jsonl"
        path.write_text(good + "\n{oops\n", encoding="utf-8")
        with pytest.raises(BundleFormatError, match=":2"):
            read_bundles(path)

    def test_nan_entries_rejected(self, tmp_path):
        line = '{"id":"s0","tokens":["a"],"embeddings":[[NaN]],"sam":[[1.0]]}'
        path = tmp_path / "b.jsonl"
        path.write_text(line + "\n", encoding="utf-8")
        with pytest.raises(BundleFormatError, match="NaN"):
            read_bundles(path)

    def test_duplicate_ids_rejected(self, rng):
        rec = SentenceBundle("dup", ["a"], rng.normal(size=(1, 2)), [[1.0]])
        rec2 = SentenceBundle("dup", ["b"], rng.normal(size=(1, 2)), [[1.0]])
        with pytest.raises(BundleFormatError, match="duplicate"):
            BundleFile("<mem>", [rec, rec2])

    def test_inconsistent_dims_rejected(self, rng):
        rec = SentenceBundle("a", ["x"], rng.normal(size=(1, 2)), [[1.0]])
        rec2 = SentenceBundle("b", ["y"], rng.normal(size=(1, 3)), [[1.0]])
        with pytest.raises(BundleFormatError, match="dim"):
            BundleFile("<mem>", [rec, rec2])


class TestPairs:
    def test_binary_file_parses(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("#mode=binary\nid_a\tid_b\tgold\nx\ty\t1\nx\tz\t0\n", encoding="utf-8")
        pf = read_pairs(path)
        assert pf.mode == "binary"
        assert len(pf.pairs) == 2
        assert pf.pairs[0] == DatasetPair("x", "y", 1.0)

    def test_score_values_parse(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("#mode=score\nid_a\tid_b\tgold\nx\ty\t3.40\n", encoding="utf-8")
        assert read_pairs(path).pairs[0].gold == 3.40

    def test_non_numeric_gold_reports_row(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("#mode=binary\nid_a\tid_b\tgold\nx\ty\tyes\n", encoding="utf-8")
        with pytest.raises(BundleFormatError, match=":3"):
            read_pairs(path)

    def test_missing_mode_header_rejected(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("id_a\tid_b\tgold\nx\ty\t1\n", encoding="utf-8")
        with pytest.raises(BundleFormatError, match="mode"):
            read_pairs(path)

    def test_round_trip(self, tmp_path):
        pf = PairsFile("score", [DatasetPair("a", "b", 1.25), DatasetPair("a", "c", 0.5)])
        path = tmp_path / "p.tsv"
        write_pairs(pf, path)
        back = read_pairs(path)
        assert back == pf

    def test_unresolvable_id_reported(self, rng):
        bundles = make_file(rng).by_id()
        pf = PairsFile("binary", [DatasetPair("s0", "ghost", 1.0)])
        with pytest.raises(BundleFormatError, match="ghost"):
            resolve_pairs(pf, bundles)


class TestIdf:
    def _corpus(self, rng, rows):
        records = []
        for i, tokens in enumerate(rows):
            n = len(tokens)
            records.append(
                SentenceBundle(f"s{i}", tokens, rng.normal(size=(n, 2)), random_row_stochastic(rng, n))
            )
        return BundleFile("<mem>", records)

    def test_everywhere_token_gets_one(self, rng):
        corpus = self._corpus(rng, [["common", f"rare{i}"] for i in range(10)])
        idf = compute_idf(corpus)
        assert idf["common"] == pytest.approx(1.0, abs=1e-12)

    def test_rare_token_value(self, rng):
        corpus = self._corpus(rng, [["common", "special" if i == 0 else f"r{i}"] for i in range(10)])
        idf = compute_idf(corpus)
        assert idf["special"] == pytest.approx(math.log(11 / 2) + 1, abs=1e-12)

    def test_positive_and_monotone_in_frequency(self, rng):
        corpus = self._corpus(
            rng, [["always", "often", "once"], ["always", "often"], ["always"]]
        )
        idf = compute_idf(corpus)
        assert all(val > 0 for val in idf.values())
        assert idf["always"] < idf["often"] < idf["once"]
