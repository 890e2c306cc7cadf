"""Label-distribution statistics and the label-trigram frequency probe.

Conventions, pinned here because both metrics exist in several flavors:

* entropy is reported in nats (natural log);
* kurtosis is the *excess* (Fisher) kurtosis of the vector of per-label
  counts, ``m4 / m2**2 - 3`` with population moments, so a normal-shaped
  count vector scores 0 and a single dominant label among n counts drives
  the value toward n - 3.
"""

import math
from dataclasses import dataclass

import numpy as np

from .conll import TaggedCorpus, word_frequencies


@dataclass(frozen=True)
class DatasetStats:
    """One corpus/label-column metric bundle."""

    sentences: int
    tokens: int
    ttr: float
    inventory_size: int
    prop_o: float | None
    kurtosis: float
    entropy_full: float
    entropy_minus_o: float


@dataclass(frozen=True)
class RegressionProbeResult:
    r_squared_mean: float
    r_squared_per_fold: tuple[float, ...]
    n_samples: int


def label_distribution(corpus: TaggedCorpus, task: str) -> dict[str, int]:
    """Token-level label counts for one task column."""
    if task not in corpus.tasks:
        raise KeyError(f"unknown task {task!r}")
    counts: dict[str, int] = {}
    for sent in corpus.sentences:
        for tok in sent:
            lab = tok.labels[task]
            counts[lab] = counts.get(lab, 0) + 1
    return dict(sorted(counts.items()))


def entropy(dist, drop_o: bool = False, o_label: str | None = None) -> float:
    """Shannon entropy, in nats, of a label -> count map.

    With ``drop_o`` the out-of-span label is removed and the remaining
    distribution renormalized.
    """
    counts = dict(dist)
    if drop_o:
        if o_label is None:
            raise ValueError("drop_o requires an o_label")
        counts.pop(o_label, None)
        if not counts:
            raise ValueError("empty distribution after dropping the O label")
    if not counts:
        raise ValueError("empty distribution")
    total = float(sum(counts.values()))
    h = 0.0
    for c in counts.values():
        if c > 0:
            p = c / total
            h -= p * math.log(p)
    return h


def kurtosis(dist) -> float:
    """Excess kurtosis of the per-label count vector (population moments)."""
    counts = np.asarray(sorted(dist.values()) if isinstance(dist, dict) else list(dist),
                        dtype=np.float64)
    if counts.size < 2:
        raise ValueError("kurtosis requires at least 2 labels")
    centered = counts - counts.mean()
    m2 = float(np.mean(centered ** 2))
    if m2 == 0.0:
        raise ValueError("kurtosis undefined: all label counts are equal")
    m4 = float(np.mean(centered ** 4))
    return m4 / (m2 * m2) - 3.0


def dataset_stats(corpus: TaggedCorpus, task: str, o_label: str | None = None) -> DatasetStats:
    """Aggregate the per-column metrics. ``o_label`` defaults to the
    inventory's designated out-of-span label. Kurtosis is NaN when
    undefined for the column (fewer than 2 labels, or all counts equal)."""
    dist = label_distribution(corpus, task)
    if o_label is None:
        o_label = corpus.inventories[task].o_label
    tokens = corpus.n_tokens
    types = len({tok.surface for sent in corpus.sentences for tok in sent})
    try:
        kurt = kurtosis(dist)
    except ValueError:
        kurt = float("nan")
    h_full = entropy(dist)
    if o_label is not None:
        prop_o = dist.get(o_label, 0) / tokens
        h_minus_o = entropy(dist, drop_o=True, o_label=o_label)
    else:
        prop_o = None
        h_minus_o = h_full
    return DatasetStats(
        sentences=corpus.n_sentences,
        tokens=tokens,
        ttr=types / tokens,
        inventory_size=len(dist),
        prop_o=prop_o,
        kurtosis=kurt,
        entropy_full=h_full,
        entropy_minus_o=h_minus_o,
    )


def stats_report(stats: DatasetStats, task: str, probe: RegressionProbeResult | None = None) -> str:
    """Render a DatasetStats as key<TAB>value lines."""
    lines = [
        f"task\t{task}",
        f"sentences\t{stats.sentences}",
        f"tokens\t{stats.tokens}",
        f"ttr\t{stats.ttr:.6f}",
        f"inventory-size\t{stats.inventory_size}",
        f"prop-o\t{'-' if stats.prop_o is None else format(stats.prop_o, '.6f')}",
        f"kurtosis\t{stats.kurtosis:.6f}",
        f"entropy-full\t{stats.entropy_full:.6f}",
        f"entropy-minus-o\t{stats.entropy_minus_o:.6f}",
    ]
    if probe is not None:
        lines.append(f"probe-r2-mean\t{probe.r_squared_mean:.6f}")
        folds = ",".join(f"{r:.6f}" for r in probe.r_squared_per_fold)
        lines.append(f"probe-r2-per-fold\t{folds}")
    return "\n".join(lines) + "\n"


def _ridge_onehot(ids: np.ndarray, y: np.ndarray, dim: int, lam: float):
    """Closed-form ridge regression (unpenalized intercept) for one-hot
    feature rows given by ``ids``.

    With X one-hot, the centered normal-equation matrix is
    diag(counts + lam) - n * mu mu^T, which a rank-one update inverts
    exactly, so no dense d x d system is ever formed.
    """
    n = y.shape[0]
    cnt = np.bincount(ids, minlength=dim).astype(np.float64)
    s = np.bincount(ids, weights=y, minlength=dim)
    ybar = float(y.mean())
    r = s - ybar * cnt
    d = cnt + lam
    mu = cnt / n
    dinv_r = r / d
    dinv_mu = mu / d
    denom = 1.0 - n * float(mu @ dinv_mu)
    beta = dinv_r + (n * float(mu @ dinv_r) / denom) * dinv_mu
    intercept = ybar - float(mu @ beta)
    return beta, intercept


def trigram_frequency_probe(corpus: TaggedCorpus, task: str, folds: int = 10,
                            ridge_strength: float = 1.0, seed: int = 0,
                            eval_on_train: bool = False) -> RegressionProbeResult:
    """How much word-frequency information the label sequence carries.

    Every token contributes one sample: the one-hot identity of its
    (previous, current, next) label trigram (sentence edges padded) predicts
    log10 of the token's corpus frequency. Ridge regression is fit per
    cross-validation fold (folds split by sentence, contiguous blocks after
    a seeded shuffle) and scored as R^2 on the held-out fold; a fold with
    zero target variance scores 0. The model is delexicalized: label
    identities are its only input.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if corpus.n_sentences < folds:
        raise ValueError(
            f"need at least {folds} sentences for {folds}-fold CV, "
            f"got {corpus.n_sentences}"
        )
    if ridge_strength <= 0:
        raise ValueError("ridge_strength must be positive")
    freqs = word_frequencies(corpus)
    trigram_ids: dict[tuple, int] = {}
    per_sentence: list[tuple[np.ndarray, np.ndarray]] = []
    for sent in corpus.sentences:
        labs = sent.labels(task)
        n = len(labs)
        ids = np.empty(n, dtype=np.int64)
        ys = np.empty(n, dtype=np.float64)
        for t in range(n):
            tri = (labs[t - 1] if t > 0 else None,
                   labs[t],
                   labs[t + 1] if t < n - 1 else None)
            ids[t] = trigram_ids.setdefault(tri, len(trigram_ids))
            ys[t] = math.log10(freqs[sent.tokens[t].surface])
        per_sentence.append((ids, ys))
    dim = len(trigram_ids)

    rng = np.random.default_rng(seed)
    order = rng.permutation(corpus.n_sentences)
    blocks = np.array_split(order, folds)
    scores = []
    n_samples = sum(len(ids) for ids, _ in per_sentence)
    for fold in range(folds):
        test_set = set(blocks[fold].tolist())
        train_ids = np.concatenate(
            [per_sentence[i][0] for i in range(corpus.n_sentences) if i not in test_set])
        train_y = np.concatenate(
            [per_sentence[i][1] for i in range(corpus.n_sentences) if i not in test_set])
        eval_ids = np.concatenate([per_sentence[i][0] for i in sorted(test_set)])
        eval_y = np.concatenate([per_sentence[i][1] for i in sorted(test_set)])
        if eval_on_train:
            eval_ids, eval_y = train_ids, train_y
        beta, intercept = _ridge_onehot(train_ids, train_y, dim, ridge_strength)
        pred = beta[eval_ids] + intercept
        ss_tot = float(np.sum((eval_y - eval_y.mean()) ** 2))
        if ss_tot == 0.0:
            scores.append(0.0)
            continue
        ss_res = float(np.sum((eval_y - pred) ** 2))
        scores.append(1.0 - ss_res / ss_tot)
    return RegressionProbeResult(
        r_squared_mean=float(np.mean(scores)),
        r_squared_per_fold=tuple(scores),
        n_samples=n_samples,
    )
