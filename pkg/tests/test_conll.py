import itertools

import numpy as np
import pytest

from mtlseq.conll import (
    CLASS_MISMATCH,
    I_AFTER_O,
    I_AT_START,
    ConllError,
    read_conll,
    slice_fraction,
    validate_bio,
    word_frequencies,
    write_conll,
)

from helpers import corpus_from_rows, random_tagged_corpus


class TestReadConll:
    def test_two_token_sentence(self, tmp_path):
        path = tmp_path / "toy.conll"
        path.write_text("the\tDET\ndog\tNOUN\n\n", encoding="utf-8")
        corpus = read_conll(path, [(1, "pos")])
        assert corpus.n_sentences == 1
        assert corpus.n_tokens == 2
        assert corpus.inventories["pos"].labels == ("DET", "NOUN")

    def test_missing_label_column_cites_line(self, tmp_path):
        path = tmp_path / "bad.conll"
        path.write_text("the\tDET\ndog\n\n", encoding="utf-8")
        with pytest.raises(ConllError, match=":2:"):
            read_conll(path, [(1, "pos")])

    def test_three_sentence_counts(self, tmp_path):
        # 2 + 3 + 1 non-blank lines, counted by hand
        body = "a\tX\nb\tY\n\nc\tX\nd\tX\ne\tY\n\nf\tY\n\n"
        path = tmp_path / "three.conll"
        path.write_text(body, encoding="utf-8")
        corpus = read_conll(path, [(1, "t")])
        assert corpus.n_sentences == 3
        assert corpus.n_tokens == 6
        assert [len(s) for s in corpus.sentences] == [2, 3, 1]

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.conll"
        path.write_text("", encoding="utf-8")
        with pytest.raises(ConllError):
            read_conll(path, [(1, "t")])

    def test_comments_and_ud_ranges_skipped(self, tmp_path):
        body = (
            "# sent_id = 1\n"
            "1-2\tcannot\t_\n"
            "1\tcan\tAUX\n"
            "2\tnot\tPART\n"
            "2.1\tghost\tX\n"
            "\n"
        )
        path = tmp_path / "ud.conllu"
        path.write_text(body, encoding="utf-8")
        corpus = read_conll(path, [(2, "pos")], token_column=1)
        assert corpus.n_tokens == 2
        assert [t.surface for t in corpus.sentences[0]] == ["can", "not"]

    def test_no_range_dropping_when_token_is_first_column(self, tmp_path):
        # "3-1" is a legitimate token (a score) when column 0 holds tokens
        path = tmp_path / "scores.conll"
        path.write_text("3-1\tNUM\n\n", encoding="utf-8")
        corpus = read_conll(path, [(1, "pos")])
        assert corpus.n_tokens == 1

    def test_round_trip_identity(self, tmp_path):
        rng = np.random.default_rng(11)
        corpus = random_tagged_corpus(
            rng, 12, ["alpha", "Beta", "x-1", "don't"],
            {"a": ("O", "B-P", "I-P"), "b": ("N", "V")},
        )
        path = tmp_path / "rt.conll"
        write_conll(corpus, path)
        back = read_conll(path, [(1, "a"), (2, "b")])
        assert back.n_sentences == corpus.n_sentences
        for s1, s2 in zip(corpus.sentences, back.sentences):
            assert [t.surface for t in s1] == [t.surface for t in s2]
            assert [t.labels for t in s1] == [t.labels for t in s2]


class TestWordFrequencies:
    def test_simple_counts(self):
        corpus = corpus_from_rows([[("a", "X"), ("a", "X"), ("b", "X")]])
        assert dict(word_frequencies(corpus)) == {"a": 2, "b": 1}

    def test_absent_word_not_in_map(self):
        corpus = corpus_from_rows([[("a", "X")]])
        assert "zzz" not in word_frequencies(corpus)

    def test_total_equals_token_count(self):
        rng = np.random.default_rng(3)
        for seed in range(5):
            corpus = random_tagged_corpus(
                rng, 10, [f"w{i}" for i in range(9)], {"t": ("A", "B")}
            )
            assert sum(word_frequencies(corpus).values()) == corpus.n_tokens


def _bio_valid_oracle(seq):
    # independent formulation: every I-label must continue a same-class span
    for i, lab in enumerate(seq):
        if lab.startswith("I-"):
            if i == 0:
                return False
            prev = seq[i - 1]
            if prev == "O" or prev[2:] != lab[2:]:
                return False
    return True


class TestValidateBio:
    def test_clean_sequence(self):
        assert validate_bio(["B-P", "I-P", "O"]) == []

    def test_i_after_o(self):
        assert validate_bio(["O", "I-P", "O"]) == [(1, I_AFTER_O)]

    def test_class_mismatch_once(self):
        # hand-enumerated: only position 1 violates; I-Q after I-Q is fine
        assert validate_bio(["B-P", "I-Q", "I-Q"]) == [(1, CLASS_MISMATCH)]

    def test_i_at_start(self):
        assert validate_bio(["I-P"]) == [(0, I_AT_START)]

    def test_non_bio_label_rejected(self):
        with pytest.raises(ValueError):
            validate_bio(["B-P", "NOUN"])

    def test_oracle_equivalence_exhaustive(self):
        alphabet = ["O", "B-A", "I-A", "B-B", "I-B"]
        for length in range(1, 7):
            for seq in itertools.product(alphabet, repeat=length):
                assert (validate_bio(list(seq)) == []) == _bio_valid_oracle(seq), seq


class TestSliceFraction:
    def _corpus(self, n=100):
        rows = [[(f"w{i}", "A" if i % 2 else "B")] for i in range(n)]
        return corpus_from_rows(rows)

    def test_full_fraction_is_identity(self):
        corpus = self._corpus()
        sliced = slice_fraction(corpus, 1.0, seed=5)
        assert sliced.sentences == corpus.sentences

    def test_quarter_of_hundred(self):
        sliced = slice_fraction(self._corpus(100), 0.25, seed=5)
        assert sliced.n_sentences == 25

    def test_ceil_rounding(self):
        sliced = slice_fraction(self._corpus(10), 0.85, seed=5)
        assert sliced.n_sentences == 9

    def test_same_seed_same_slice(self):
        corpus = self._corpus()
        a = slice_fraction(corpus, 0.5, seed=7)
        b = slice_fraction(corpus, 0.5, seed=7)
        assert a.sentences == b.sentences

    def test_out_of_range_fraction(self):
        corpus = self._corpus(4)
        for bad in (0.0, -0.5, 1.0001):
            with pytest.raises(ValueError):
                slice_fraction(corpus, bad, seed=1)

    def test_inventories_rebuilt_from_slice(self):
        rows = [[("x", "A")], [("y", "A")], [("z", "RARE")]]
        corpus = corpus_from_rows(rows)
        for seed in range(20):
            sliced = slice_fraction(corpus, 0.34, seed=seed)
            observed = {t.labels["labels"] for s in sliced.sentences for t in s}
            assert set(sliced.inventories["labels"].labels) == observed
