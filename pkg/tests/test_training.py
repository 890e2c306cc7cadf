import numpy as np
import pytest

from mtlseq.conll import slice_fraction
from mtlseq.freqbin import apply_freqbin, fit_freqbin
from mtlseq.conll import word_frequencies
from mtlseq.model import ModelConfig, TaskHead, Vocabulary, build_model, parameter_count
from mtlseq.training import (
    TaskSpec,
    TrainingConfig,
    capacity_sweep,
    learning_curve,
    sampling_schedule,
    train,
)
from mtlseq.utils import rng_for

from helpers import learnable_corpus, random_tagged_corpus

WORD_LABELS = {
    "alpha": "X", "bravo": "Y", "carol": "Z", "delta": "X", "echo": "Y",
    "fox": "Z", "golf": "X", "hotel": "Y",
}


def small_model_config(**kw):
    base = dict(word_emb_dim=8, char_emb_dim=3, char_hidden_dim=3, hidden_dim=8,
                context_layers=3, noise_sigma=0.2, use_char=False,
                width_factor=1, seed=5)
    base.update(kw)
    return ModelConfig(**base)


def single_task_setup(n_sentences=10, epochs=2, seed=5, dev=None):
    corpus = learnable_corpus(WORD_LABELS, n_sentences, seed=1, task="main")
    config = TrainingConfig(
        tasks=[TaskSpec("main", corpus, 3, "main")],
        epochs=epochs, learning_rate=0.1, seed=seed, dev_corpus=dev,
    )
    vocab = Vocabulary.build([corpus])
    model = build_model(small_model_config(seed=seed), vocab,
                        [TaskHead("main", 3, corpus.inventories["main"])])
    return model, config


class TestConfigValidation:
    def _corpus(self):
        return learnable_corpus(WORD_LABELS, 4, seed=0, task="t")

    def test_exactly_one_main(self):
        c = self._corpus()
        with pytest.raises(ValueError, match="main"):
            TrainingConfig(tasks=[TaskSpec("t", c, 3, "aux")])

    def test_at_most_two_aux(self):
        main = learnable_corpus(WORD_LABELS, 4, seed=0, task="m")
        auxes = [
            TaskSpec(f"a{i}",
                     learnable_corpus(WORD_LABELS, 4, seed=i, task=f"a{i}"),
                     1, "aux")
            for i in range(3)
        ]
        with pytest.raises(ValueError, match="auxiliary"):
            TrainingConfig(tasks=[TaskSpec("m", main, 3, "main")] + auxes)

    def test_corpus_must_carry_column(self):
        c = self._corpus()
        with pytest.raises(ValueError, match="column"):
            TrainingConfig(tasks=[TaskSpec("other", c, 3, "main")])

    def test_epochs_positive(self):
        c = self._corpus()
        with pytest.raises(ValueError, match="epochs"):
            TrainingConfig(tasks=[TaskSpec("t", c, 3, "main")], epochs=0)

    def test_model_must_cover_tasks(self):
        model, config = single_task_setup()
        other = learnable_corpus(WORD_LABELS, 3, seed=2, task="extra")
        bad = TrainingConfig(
            tasks=config.tasks + [TaskSpec("extra", other, 1, "aux")],
            epochs=1, seed=1,
        )
        with pytest.raises(ValueError, match="head"):
            train(model, bad)


class TestSamplingSchedule:
    def test_task_first_uniform_within_3_sigma(self):
        rng = rng_for(123, "sampling")
        sizes = [500, 50, 5]
        n = sum(sizes)
        draws = list(sampling_schedule(rng, sizes, n, "task-first"))
        counts = np.bincount([t for t, _ in draws], minlength=3)
        p = 1.0 / 3.0
        sigma = np.sqrt(n * p * (1 - p))
        for c in counts:
            assert abs(c - n * p) <= 3 * sigma

    def test_pooled_proportional_to_corpus_size(self):
        rng = rng_for(7, "sampling")
        sizes = [300, 100]
        n = 4000
        draws = list(sampling_schedule(rng, sizes, n, "pooled"))
        counts = np.bincount([t for t, _ in draws], minlength=2)
        p = sizes[0] / sum(sizes)
        sigma = np.sqrt(n * p * (1 - p))
        assert abs(counts[0] - n * p) <= 3 * sigma

    def test_indices_in_range(self):
        rng = rng_for(1, "sampling")
        for mode in ("task-first", "pooled"):
            for ti, si in sampling_schedule(rng, [7, 3], 200, mode):
                assert 0 <= si < [7, 3][ti]


class TestTrain:
    def test_single_task_log_structure(self):
        model, config = single_task_setup(epochs=3)
        log = train(model, config)
        assert len(log.entries) == 3
        assert [e.epoch for e in log.entries] == [1, 2, 3]
        assert all(e.task == "main" for e in log.entries)

    def test_same_seed_identical_log(self):
        m1, c1 = single_task_setup(epochs=2, seed=9)
        m2, c2 = single_task_setup(epochs=2, seed=9)
        assert train(m1, c1).to_text() == train(m2, c2).to_text()
        for p, q in zip(m1.parameters(), m2.parameters()):
            np.testing.assert_array_equal(p.data, q.data)

    def test_loss_decreases_over_training(self):
        corpus = learnable_corpus(WORD_LABELS, 50, seed=3, task="main")
        vocab = Vocabulary.build([corpus])
        model = build_model(small_model_config(), vocab,
                            [TaskHead("main", 3, corpus.inventories["main"])])
        config = TrainingConfig(tasks=[TaskSpec("main", corpus, 3, "main")],
                                epochs=30, seed=2)
        log = train(model, config)
        first = log.entries[0].mean_loss
        last = log.entries[-1].mean_loss
        assert last < first

    def test_multi_task_with_disjoint_corpora(self):
        # the aux corpus has no main column at all; training must not
        # touch main gold labels on aux instances
        main = learnable_corpus(WORD_LABELS, 8, seed=1, task="main")
        aux = learnable_corpus(WORD_LABELS, 6, seed=2, task="aux")
        vocab = Vocabulary.build([main, aux])
        model = build_model(small_model_config(), vocab, [
            TaskHead("main", 3, main.inventories["main"]),
            TaskHead("aux", 1, aux.inventories["aux"]),
        ])
        config = TrainingConfig(
            tasks=[TaskSpec("main", main, 3, "main"),
                   TaskSpec("aux", aux, 1, "aux")],
            epochs=2, seed=4,
        )
        log = train(model, config)
        assert {e.task for e in log.entries} == {"main", "aux"}

    def test_dev_f1_reported_on_main_rows(self):
        dev = learnable_corpus(WORD_LABELS, 4, seed=8, task="main")
        model, config = single_task_setup(epochs=2, dev=dev)
        log = train(model, config)
        assert all(e.dev_f1 is not None for e in log.entries)

    def test_freqbin_aux_shares_main_sentences(self):
        main = learnable_corpus(WORD_LABELS, 8, seed=1, task="main")
        spec = fit_freqbin(word_frequencies(main), "uniform", 3)
        aux = apply_freqbin(spec, main, "freq")
        vocab = Vocabulary.build([main, aux])
        model = build_model(small_model_config(), vocab, [
            TaskHead("main", 3, main.inventories["main"]),
            TaskHead("freq", 1, aux.inventories["freq"]),
        ])
        config = TrainingConfig(
            tasks=[TaskSpec("main", main, 3, "main"),
                   TaskSpec("freq", aux, 1, "aux")],
            epochs=2, seed=4,
        )
        train(model, config)


def curve_setup(epochs=2, n_train=12):
    train_corpus = learnable_corpus(WORD_LABELS, n_train, seed=1, task="main")
    dev = learnable_corpus(WORD_LABELS, 5, seed=9, task="main")
    config = TrainingConfig(
        tasks=[TaskSpec("main", train_corpus, 3, "main")],
        epochs=epochs, seed=6, dev_corpus=dev,
    )
    return small_model_config(seed=6), config


class TestLearningCurve:
    def test_four_fractions_four_reports(self):
        model_config, config = curve_setup()
        results = learning_curve(model_config, config)
        assert [f for f, _ in results] == [0.25, 0.5, 0.75, 1.0]
        assert len(results) == 4

    def test_full_fraction_equals_plain_run(self):
        model_config, config = curve_setup()
        results = learning_curve(model_config, config, fractions=(1.0,))
        from mtlseq.training import _build_and_train, _evaluate_on
        model = _build_and_train(model_config, config)
        plain = _evaluate_on(model, config.dev_corpus, "main")
        assert results[0][1] == plain

    def test_fraction_validation(self):
        model_config, config = curve_setup()
        with pytest.raises(ValueError, match="ascending"):
            learning_curve(model_config, config, fractions=(0.5, 0.25))
        with pytest.raises(ValueError, match="0, 1"):
            learning_curve(model_config, config, fractions=(0.5, 1.5))

    def test_requires_dev(self):
        model_config, config = curve_setup()
        config.dev_corpus = None
        with pytest.raises(ValueError, match="dev"):
            learning_curve(model_config, config)

    def test_nested_slices(self):
        # shared slice seed: smaller blocks are prefixes of larger ones
        from mtlseq.utils import seed_for
        corpus = learnable_corpus(WORD_LABELS, 20, seed=2, task="main")
        seed = seed_for(6, "learning-curve-slice")
        small = slice_fraction(corpus, 0.25, seed)
        large = slice_fraction(corpus, 0.5, seed)
        assert large.sentences[: small.n_sentences] == small.sentences


class TestCapacitySweep:
    def test_factor_one_reproduces_baseline(self):
        model_config, config = curve_setup()
        sweep = capacity_sweep(model_config, config, [1])
        from mtlseq.training import _build_and_train, _evaluate_on
        model = _build_and_train(model_config, config)
        assert sweep[0][1] == _evaluate_on(model, config.dev_corpus, "main")

    def test_factor_two_parameter_count(self):
        model_config, config = curve_setup(epochs=1, n_train=6)
        corpus = config.tasks[0].corpus
        vocab = Vocabulary.build([corpus])
        wide = ModelConfig(
            word_emb_dim=model_config.word_emb_dim,
            char_emb_dim=model_config.char_emb_dim,
            char_hidden_dim=model_config.char_hidden_dim,
            hidden_dim=model_config.hidden_dim,
            context_layers=model_config.context_layers,
            noise_sigma=model_config.noise_sigma,
            use_char=model_config.use_char,
            width_factor=2,
            seed=model_config.seed,
        )
        model = build_model(wide, vocab,
                            [TaskHead("main", 3, corpus.inventories["main"])])
        expected = parameter_count(
            wide, vocab.n_words, vocab.n_chars,
            [len(corpus.inventories["main"].labels)],
        )
        assert model.n_parameters() == expected

    def test_factor_validation(self):
        model_config, config = curve_setup()
        with pytest.raises(ValueError, match=">= 1"):
            capacity_sweep(model_config, config, [0, 1])

    def test_sweep_reports_per_factor(self):
        model_config, config = curve_setup(epochs=1, n_train=6)
        sweep = capacity_sweep(model_config, config, [1, 2])
        assert [f for f, _ in sweep] == [1, 2]
