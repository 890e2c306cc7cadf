"""CoNLL-style tagged corpora: ingestion, label inventories, BIO utilities.

A corpus is a sequence of sentences whose tokens each carry one label per
declared task column. All corpus values are immutable after construction and
safe to share across threads.
"""

import math
import re
import sys
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

SCHEME_BIO = "bio"
SCHEME_PLAIN = "plain"
SCHEME_NONE = "none"

I_AT_START = "I-at-start"
I_AFTER_O = "I-after-O"
CLASS_MISMATCH = "class-mismatch"

_BIO_LABEL = re.compile(r"^[BI]-.+$")
# UD multi-word ranges ("1-2") and empty nodes ("8.1") carry no usable label.
_UD_SKIP_ID = re.compile(r"^\d+-\d+$|^\d+\.\d+$")


class ConllError(ValueError):
    """Raised for malformed CoNLL input."""


@dataclass(frozen=True, slots=True)
class Token:
    surface: str
    labels: dict[str, str]

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")


@dataclass(frozen=True, slots=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("sentence must contain at least one token")

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def labels(self, task: str) -> list[str]:
        return [t.labels[task] for t in self.tokens]


@dataclass(frozen=True, slots=True)
class LabelInventory:
    """The ordered label set of one task column.

    ``scheme`` is "bio" for B-/I-/O span encodings, "plain" for per-token
    annotation with a designated out-of-span label, "none" otherwise.
    """

    labels: tuple[str, ...]
    o_label: str | None = None
    scheme: str = SCHEME_NONE
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.scheme not in (SCHEME_BIO, SCHEME_PLAIN, SCHEME_NONE):
            raise ValueError(f"unknown label scheme: {self.scheme!r}")
        if self.o_label is not None and self.o_label not in self.labels:
            raise ValueError(f"o-label {self.o_label!r} not in inventory")
        if self.scheme == SCHEME_BIO:
            out = self.o_label if self.o_label is not None else "O"
            for lab in self.labels:
                if lab != out and not _BIO_LABEL.match(lab):
                    raise ValueError(f"label {lab!r} violates the BIO scheme")
        object.__setattr__(self, "_index", {l: i for i, l in enumerate(self.labels)})

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"label {label!r} not in inventory") from None


def _detect_inventory(observed: set[str], o_label: str | None, scheme: str | None) -> LabelInventory:
    labels = tuple(sorted(observed))
    if scheme is None:
        has_bio = any(_BIO_LABEL.match(l) for l in labels)
        if has_bio and all(l == "O" or _BIO_LABEL.match(l) for l in labels):
            scheme = SCHEME_BIO
            if o_label is None and "O" in observed:
                o_label = "O"
        elif o_label is not None or "O" in observed:
            scheme = SCHEME_PLAIN
            if o_label is None:
                o_label = "O"
        else:
            scheme = SCHEME_NONE
    return LabelInventory(labels=labels, o_label=o_label, scheme=scheme)


@dataclass(frozen=True, slots=True)
class TaggedCorpus:
    sentences: tuple[Sentence, ...]
    tasks: tuple[str, ...]
    inventories: dict[str, LabelInventory]
    split: str = "train"

    @property
    def n_sentences(self) -> int:
        return len(self.sentences)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    @classmethod
    def build(cls, sentences, tasks, split="train", o_labels=None, schemes=None) -> "TaggedCorpus":
        """Assemble a corpus and derive one inventory per task from the
        labels actually observed. ``o_labels``/``schemes`` override the
        per-task auto-detection."""
        sentences = tuple(sentences)
        tasks = tuple(tasks)
        if not sentences:
            raise ValueError("corpus must contain at least one sentence")
        if split not in ("train", "dev", "test"):
            raise ValueError(f"unknown split tag: {split!r}")
        o_labels = o_labels or {}
        schemes = schemes or {}
        observed: dict[str, set[str]] = {t: set() for t in tasks}
        for sent in sentences:
            for tok in sent:
                for task in tasks:
                    if task not in tok.labels:
                        raise ValueError(
                            f"token {tok.surface!r} is missing a label for task {task!r}"
                        )
                    observed[task].add(tok.labels[task])
        inventories = {
            t: _detect_inventory(observed[t], o_labels.get(t), schemes.get(t)) for t in tasks
        }
        return cls(sentences=sentences, tasks=tasks, inventories=inventories, split=split)

    def with_column(self, task: str, labels_per_sentence, o_label=None, scheme=None) -> "TaggedCorpus":
        """Return a copy with an added label column. ``labels_per_sentence``
        is aligned with ``self.sentences``."""
        if task in self.tasks:
            raise ValueError(f"task {task!r} already present")
        if len(labels_per_sentence) != self.n_sentences:
            raise ValueError("label column is not sentence-aligned")
        new_sentences = []
        for sent, labels in zip(self.sentences, labels_per_sentence):
            if len(labels) != len(sent):
                raise ValueError("label column is not token-aligned")
            new_sentences.append(
                Sentence(
                    tuple(
                        Token(tok.surface, {**tok.labels, task: lab})
                        for tok, lab in zip(sent, labels)
                    )
                )
            )
        o_labels = {t: inv.o_label for t, inv in self.inventories.items()}
        schemes = {t: inv.scheme for t, inv in self.inventories.items()}
        if o_label is not None:
            o_labels[task] = o_label
        if scheme is not None:
            schemes[task] = scheme
        return TaggedCorpus.build(
            new_sentences, self.tasks + (task,), self.split, o_labels, schemes
        )


def read_conll(path, columns, token_column=0, sep="\t", split="train",
               o_labels=None, schemes=None) -> TaggedCorpus:
    """Read a CoNLL file: one token per line, tab-separated columns, blank
    line between sentences. ``columns`` binds column indices to task names,
    e.g. ``[(1, "pos")]``. Lines starting with "#" are skipped. Pass
    ``sep=None`` to split on any whitespace run.

    When ``token_column`` > 0 (UD-style files with an ID column), lines whose
    first field is a range or decimal ID are dropped.
    """
    needed = max([token_column] + [c for c, _ in columns])
    sentences: list[Sentence] = []
    current: list[Token] = []
    intern = sys.intern
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if line.startswith("#"):
                continue
            if not line.strip():
                if current:
                    sentences.append(Sentence(tuple(current)))
                    current = []
                continue
            fields = line.split(sep) if sep is not None else line.split()
            if token_column > 0 and _UD_SKIP_ID.match(fields[0]):
                continue
            if len(fields) <= needed:
                raise ConllError(
                    f"{path}:{lineno}: expected at least {needed + 1} columns, "
                    f"got {len(fields)}: {line!r}"
                )
            surface = fields[token_column]
            if not surface:
                raise ConllError(f"{path}:{lineno}: empty token")
            current.append(
                Token(intern(surface), {task: intern(fields[col]) for col, task in columns})
            )
    if current:
        sentences.append(Sentence(tuple(current)))
    if not sentences:
        raise ConllError(f"{path}: no sentences found")
    return TaggedCorpus.build(
        sentences, [t for _, t in columns], split, o_labels, schemes
    )


def write_conll(corpus: TaggedCorpus, path) -> None:
    """Write ``token<TAB>label...`` lines, one blank line after each
    sentence, label columns in ``corpus.tasks`` order."""
    with open(path, "w", encoding="utf-8") as fh:
        for sent in corpus.sentences:
            for tok in sent:
                fields = [tok.surface] + [tok.labels[t] for t in corpus.tasks]
                fh.write("\t".join(fields) + "\n")
            fh.write("\n")


def word_frequencies(corpus: TaggedCorpus) -> Counter:
    """Exact surface-form counts over the corpus (case-sensitive, no
    normalization)."""
    counts: Counter = Counter()
    for sent in corpus.sentences:
        counts.update(tok.surface for tok in sent)
    return counts


def validate_bio(labels) -> list[tuple[int, str]]:
    """Scan a BIO label sequence and return (position, kind) for every
    violation: an I-label at sentence start, after O, or continuing a span
    of a different class."""
    violations = []
    prev_prefix = None
    prev_class = None
    for i, lab in enumerate(labels):
        if lab == "O":
            prev_prefix, prev_class = "O", None
            continue
        if not _BIO_LABEL.match(lab):
            raise ValueError(f"not a BIO label at position {i}: {lab!r}")
        prefix, cls = lab[0], lab[2:]
        if prefix == "I":
            if prev_prefix is None:
                violations.append((i, I_AT_START))
            elif prev_prefix == "O":
                violations.append((i, I_AFTER_O))
            elif prev_class != cls:
                violations.append((i, CLASS_MISMATCH))
        prev_prefix, prev_class = prefix, cls
    return violations


def slice_fraction(corpus: TaggedCorpus, fraction: float, seed: int) -> TaggedCorpus:
    """Take the first ceil(fraction * n) sentences after a seeded shuffle.

    ``fraction == 1.0`` keeps the original order (the identity permutation),
    so full-corpus slices train identically to the unsliced corpus.
    Inventories are rebuilt from the slice.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        chosen = corpus.sentences
    else:
        rng = np.random.default_rng(seed)
        perm = rng.permutation(corpus.n_sentences)
        n = math.ceil(fraction * corpus.n_sentences)
        chosen = [corpus.sentences[i] for i in perm[:n]]
    o_labels = {}
    schemes = {}
    for t, inv in corpus.inventories.items():
        labs = {tok.labels[t] for sent in chosen for tok in sent}
        o_labels[t] = inv.o_label if inv.o_label in labs else None
        schemes[t] = inv.scheme
    return TaggedCorpus.build(chosen, corpus.tasks, corpus.split, o_labels, schemes)
