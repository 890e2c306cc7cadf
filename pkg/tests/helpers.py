"""Synthetic corpus builders shared across the test suite."""

import numpy as np

from mtlseq.conll import Sentence, TaggedCorpus, Token


def corpus_from_rows(rows, tasks=("labels",), split="train", o_labels=None, schemes=None):
    """rows: list of sentences, each a list of (surface, label...) tuples
    with one label per task."""
    sentences = []
    for row in rows:
        toks = []
        for item in row:
            surface, labels = item[0], item[1:]
            toks.append(Token(surface, dict(zip(tasks, labels))))
        sentences.append(Sentence(tuple(toks)))
    return TaggedCorpus.build(sentences, tasks, split, o_labels, schemes)


def zipf_frequencies(n_tokens, n_types, alpha, seed):
    """Sampled token counts per type under a Zipf(alpha) rank distribution."""
    rng = np.random.default_rng(seed)
    ranks = np.arange(1, n_types + 1, dtype=np.float64)
    p = ranks ** -alpha
    p /= p.sum()
    draws = rng.choice(n_types, size=n_tokens, p=p)
    counts = np.bincount(draws, minlength=n_types)
    return {f"w{r}": int(c) for r, c in enumerate(counts) if c > 0}


def zipf_corpus(n_tokens, n_types, alpha, seed, sentence_len=20, task="main",
                labels=("A", "B")):
    """A Zipf-distributed token stream chunked into sentences; the label
    column cycles through ``labels`` (content is irrelevant to frequency
    statistics)."""
    rng = np.random.default_rng(seed)
    ranks = np.arange(1, n_types + 1, dtype=np.float64)
    p = ranks ** -alpha
    p /= p.sum()
    draws = rng.choice(n_types, size=n_tokens, p=p)
    sentences = []
    for lo in range(0, n_tokens, sentence_len):
        chunk = draws[lo:lo + sentence_len]
        if len(chunk) == 0:
            break
        toks = tuple(
            Token(f"w{d}", {task: labels[(lo + j) % len(labels)]})
            for j, d in enumerate(chunk)
        )
        sentences.append(Sentence(toks))
    return TaggedCorpus.build(sentences, (task,))


def random_tagged_corpus(rng, n_sentences, words, label_sets, lengths=(3, 8)):
    """Random sentences with independent labels per task; label_sets is a
    dict task -> tuple of labels."""
    tasks = tuple(label_sets)
    rows = []
    for _ in range(n_sentences):
        n = int(rng.integers(lengths[0], lengths[1] + 1))
        row = []
        for _ in range(n):
            surface = words[int(rng.integers(len(words)))]
            labels = tuple(
                label_sets[t][int(rng.integers(len(label_sets[t])))] for t in tasks
            )
            row.append((surface,) + labels)
        rows.append(row)
    return corpus_from_rows(rows, tasks)


def learnable_corpus(words_to_label, n_sentences, seed, task="main",
                     lengths=(3, 6)):
    """Sentences whose labels are a deterministic function of the surface,
    so a tagger can reach perfect accuracy."""
    rng = np.random.default_rng(seed)
    words = list(words_to_label)
    rows = []
    for _ in range(n_sentences):
        n = int(rng.integers(lengths[0], lengths[1] + 1))
        row = [
            (w := words[int(rng.integers(len(words)))], words_to_label[w])
            for _ in range(n)
        ]
        rows.append(row)
    return corpus_from_rows(rows, (task,))
