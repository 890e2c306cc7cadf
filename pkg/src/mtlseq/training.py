"""The multi-task training loop and its experiment protocols.

One epoch performs N single-instance SGD updates, N being the total
sentence count across all task corpora. Each update samples a task, then a
sentence of that task, computes the summed cross-entropy under that task's
head, and backpropagates through the shared stack. No mini-batches, no
momentum, no early stopping; everything is deterministic given the seed.
"""

from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .autograd import sgd_step
from .conll import TaggedCorpus, slice_fraction
from .model import ModelConfig, TaskHead, Tagger, Vocabulary, build_model, predict, task_loss
from .utils import rng_for, seed_for

ROLE_MAIN = "main"
ROLE_AUX = "aux"

SAMPLING_TASK_FIRST = "task-first"
SAMPLING_POOLED = "pooled"


@dataclass
class TaskSpec:
    name: str
    corpus: TaggedCorpus
    head_layer: int
    role: str = ROLE_MAIN


@dataclass
class TrainingConfig:
    tasks: list[TaskSpec]
    epochs: int = 30
    learning_rate: float = 0.1
    seed: int = 1
    # "task-first" draws a task uniformly, then a sentence of that task,
    # which balances tasks of very different corpus sizes; "pooled" draws a
    # sentence uniformly from the concatenation of all task corpora.
    sampling: str = SAMPLING_TASK_FIRST
    dev_corpus: TaggedCorpus | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.sampling not in (SAMPLING_TASK_FIRST, SAMPLING_POOLED):
            raise ValueError(f"unknown sampling mode {self.sampling!r}")
        mains = [t for t in self.tasks if t.role == ROLE_MAIN]
        auxes = [t for t in self.tasks if t.role == ROLE_AUX]
        if len(mains) != 1:
            raise ValueError(f"need exactly one main task, got {len(mains)}")
        if len(auxes) > 2:
            raise ValueError(f"at most two auxiliary tasks, got {len(auxes)}")
        seen = set()
        for t in self.tasks:
            if t.name in seen:
                raise ValueError(f"duplicate task {t.name!r}")
            seen.add(t.name)
            if t.corpus is None or t.corpus.n_sentences == 0:
                raise ValueError(f"task {t.name!r} has no training corpus")
            if t.name not in t.corpus.tasks:
                raise ValueError(f"corpus for {t.name!r} lacks that label column")

    @property
    def main_task(self) -> TaskSpec:
        return next(t for t in self.tasks if t.role == ROLE_MAIN)


@dataclass(frozen=True)
class TrainLogEntry:
    epoch: int
    task: str
    mean_loss: float
    dev_f1: float | None  # main task only, when a dev corpus is configured


@dataclass
class TrainLog:
    entries: list[TrainLogEntry] = field(default_factory=list)

    def to_text(self) -> str:
        lines = ["epoch\ttask\tmean-loss\tdev-f1"]
        for e in self.entries:
            dev = "-" if e.dev_f1 is None else f"{e.dev_f1:.6f}"
            lines.append(f"{e.epoch}\t{e.task}\t{e.mean_loss:.6f}\t{dev}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())


def sampling_schedule(rng, task_sizes, n_updates, mode=SAMPLING_TASK_FIRST):
    """Yield (task_index, sentence_index) draws for one epoch."""
    n_tasks = len(task_sizes)
    if mode == SAMPLING_TASK_FIRST:
        for _ in range(n_updates):
            ti = int(rng.integers(n_tasks))
            yield ti, int(rng.integers(task_sizes[ti]))
    else:
        bounds = np.cumsum(task_sizes)
        total = int(bounds[-1])
        for _ in range(n_updates):
            flat = int(rng.integers(total))
            ti = int(np.searchsorted(bounds, flat, side="right"))
            prev = int(bounds[ti - 1]) if ti > 0 else 0
            yield ti, flat - prev


def _dev_f1(model, config: TrainingConfig) -> float | None:
    dev = config.dev_corpus
    if dev is None:
        return None
    main = config.main_task
    o_label = model.heads[main.name].inventory.o_label
    golds = []
    preds = []
    for sent in dev.sentences:
        golds.extend(sent.labels(main.name))
        preds.extend(predict(model, sent, main.name))
    return metrics.micro_f1_non_o(golds, preds, o_label)


def train(model: Tagger, config: TrainingConfig) -> TrainLog:
    """Run the sampled multi-task SGD loop; returns the per-epoch log."""
    for spec in config.tasks:
        if spec.name not in model.heads:
            raise ValueError(f"model has no head for configured task {spec.name!r}")
    rng_sample = rng_for(config.seed, "sampling")
    rng_noise = rng_for(config.seed, "noise")
    task_sizes = [t.corpus.n_sentences for t in config.tasks]
    n_updates = sum(task_sizes)
    log = TrainLog()
    params = model.parameters()
    for epoch in range(1, config.epochs + 1):
        sums = [0.0] * len(config.tasks)
        counts = [0] * len(config.tasks)
        for ti, si in sampling_schedule(rng_sample, task_sizes, n_updates, config.sampling):
            spec = config.tasks[ti]
            sentence = spec.corpus.sentences[si]
            tape, loss = task_loss(model, sentence, spec.name, training=True, rng=rng_noise)
            tape.backward(loss)
            sgd_step(params, config.learning_rate)
            sums[ti] += float(loss.data)
            counts[ti] += 1
        dev = _dev_f1(model, config)
        for ti, spec in enumerate(config.tasks):
            mean = sums[ti] / counts[ti] if counts[ti] else float("nan")
            log.entries.append(TrainLogEntry(
                epoch=epoch,
                task=spec.name,
                mean_loss=mean,
                dev_f1=dev if spec.role == ROLE_MAIN else None,
            ))
    return log


def _evaluate_on(model: Tagger, corpus: TaggedCorpus, task_name: str) -> metrics.EvalReport:
    inv = model.heads[task_name].inventory
    golds = [sent.labels(task_name) for sent in corpus.sentences]
    preds = [predict(model, sent, task_name) for sent in corpus.sentences]
    return metrics.build_report(task_name, golds, preds, inv.o_label, inv.scheme)


def _build_and_train(model_config: ModelConfig, config: TrainingConfig) -> Tagger:
    corpora = [t.corpus for t in config.tasks]
    vocab = Vocabulary.build(corpora)
    heads = [
        TaskHead(t.name, t.head_layer, t.corpus.inventories[t.name])
        for t in config.tasks
    ]
    model = build_model(model_config, vocab, heads)
    train(model, config)
    return model


def learning_curve(model_config: ModelConfig, config: TrainingConfig,
                   fractions=(0.25, 0.5, 0.75, 1.0)):
    """Train one model per main-corpus fraction, auxiliary corpora kept
    intact, and report dev metrics per point.

    Fractions share one slice seed, so smaller blocks are prefixes of
    larger ones, and the 1.0 point reproduces a plain run bit for bit.
    No monotonicity along the curve is implied: small main-task slices can
    be swamped by auxiliary updates.
    """
    if list(fractions) != sorted(fractions):
        raise ValueError("fractions must be ascending")
    if not all(0.0 < f <= 1.0 for f in fractions):
        raise ValueError("fractions must lie in (0, 1]")
    if config.dev_corpus is None:
        raise ValueError("learning_curve needs a dev corpus to report on")
    slice_seed = seed_for(config.seed, "learning-curve-slice")
    results = []
    main = config.main_task
    for fraction in fractions:
        sliced = slice_fraction(main.corpus, fraction, slice_seed)
        tasks = [
            TaskSpec(t.name, sliced if t is main else t.corpus, t.head_layer, t.role)
            for t in config.tasks
        ]
        fold_cfg = TrainingConfig(
            tasks=tasks, epochs=config.epochs, learning_rate=config.learning_rate,
            seed=config.seed, sampling=config.sampling, dev_corpus=config.dev_corpus,
        )
        model = _build_and_train(model_config, fold_cfg)
        results.append((fraction, _evaluate_on(model, config.dev_corpus, main.name)))
    return results


def capacity_sweep(model_config: ModelConfig, config: TrainingConfig, width_factors):
    """Train one model per hidden-width factor, identical seed and data."""
    if any(f < 1 for f in width_factors):
        raise ValueError("width factors must be >= 1")
    if config.dev_corpus is None:
        raise ValueError("capacity_sweep needs a dev corpus to report on")
    results = []
    for factor in width_factors:
        cfg = ModelConfig(
            word_emb_dim=model_config.word_emb_dim,
            char_emb_dim=model_config.char_emb_dim,
            char_hidden_dim=model_config.char_hidden_dim,
            hidden_dim=model_config.hidden_dim,
            context_layers=model_config.context_layers,
            noise_sigma=model_config.noise_sigma,
            use_char=model_config.use_char,
            width_factor=int(factor),
            seed=model_config.seed,
        )
        model = _build_and_train(cfg, config)
        results.append((int(factor), _evaluate_on(model, config.dev_corpus, config.main_task.name)))
    return results
