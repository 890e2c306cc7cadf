"""Frequency-bin auxiliary label columns.

A word's bin is a pure function of its training-corpus frequency. Three
binning variants are supported:

* ``skewed10`` — bin = floor(log10 f)
* ``skewed5``  — bin = floor(log5 f)
* ``uniform``  — the index of the k-quantile of cumulative token mass the
  word falls into, with all types sharing a frequency value sharing a bin

Hapaxes (f = 1) and out-of-vocabulary words always share one bin.
"""

from dataclasses import dataclass

from .conll import SCHEME_NONE, TaggedCorpus

VARIANT_SKEWED10 = "skewed10"
VARIANT_SKEWED5 = "skewed5"
VARIANT_UNIFORM = "uniform"
VARIANTS = (VARIANT_SKEWED10, VARIANT_SKEWED5, VARIANT_UNIFORM)

_LOG_BASES = {VARIANT_SKEWED10: 10, VARIANT_SKEWED5: 5}


def _int_log(value: int, base: int) -> int:
    """floor(log_base(value)) computed exactly for positive integers."""
    if value < 1:
        raise ValueError(f"frequency must be >= 1, got {value}")
    b = 0
    while value >= base:
        value //= base
        b += 1
    return b


@dataclass(frozen=True)
class FreqBinSpec:
    """A fitted word -> frequency-bin mapping."""

    variant: str
    k: int | None
    bin_of_frequency: dict[int, int]
    hapax_bin: int
    labels: tuple[str, ...]
    frequencies: dict[str, int]

    def bin_for(self, surface: str) -> int:
        f = self.frequencies.get(surface)
        if f is None:
            return self.hapax_bin
        return self.bin_of_frequency[f]

    def label_for(self, surface: str) -> str:
        return str(self.bin_for(surface))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"variant\t{self.variant}\n")
            fh.write(f"k\t{'-' if self.k is None else self.k}\n")
            fh.write(f"hapax-bin\t{self.hapax_bin}\n")
            bins = ",".join(f"{f}:{b}" for f, b in sorted(self.bin_of_frequency.items()))
            fh.write(f"bins\t{bins}\n")
            fh.write(f"labels\t{','.join(self.labels)}\n")
            fh.write("[frequencies]\n")
            for word in sorted(self.frequencies):
                fh.write(f"{word}\t{self.frequencies[word]}\n")

    @classmethod
    def load(cls, path) -> "FreqBinSpec":
        head = {}
        frequencies = {}
        with open(path, encoding="utf-8") as fh:
            in_freqs = False
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line == "[frequencies]":
                    in_freqs = True
                    continue
                key, value = line.split("\t", 1)
                if in_freqs:
                    frequencies[key] = int(value)
                else:
                    head[key] = value
        bins = {}
        if head["bins"]:
            for item in head["bins"].split(","):
                f, b = item.split(":")
                bins[int(f)] = int(b)
        return cls(
            variant=head["variant"],
            k=None if head["k"] == "-" else int(head["k"]),
            bin_of_frequency=bins,
            hapax_bin=int(head["hapax-bin"]),
            labels=tuple(head["labels"].split(",")),
            frequencies=frequencies,
        )


def fit_freqbin(frequencies, variant: str, k: int | None = None) -> FreqBinSpec:
    """Fit a binning spec on a word -> count map.

    The uniform variant orders word types by ascending frequency and splits
    the cumulative token mass into k equal quantiles; a whole
    same-frequency group goes to the quantile containing its last
    cumulative token, which keeps bin assignment monotone in frequency.
    """
    if not frequencies:
        raise ValueError("frequencies must be non-empty")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    frequencies = dict(frequencies)

    if variant in _LOG_BASES:
        if k is not None:
            raise ValueError("k is only meaningful for the uniform variant")
        base = _LOG_BASES[variant]
        values = sorted(set(frequencies.values()))
        bins = {f: _int_log(f, base) for f in values}
        n_labels = _int_log(max(values), base) + 1
        labels = tuple(str(i) for i in range(n_labels))
        return FreqBinSpec(variant, None, bins, _int_log(1, base), labels, frequencies)

    if k is None or k < 2:
        raise ValueError("uniform variant requires k >= 2")
    type_counts: dict[int, int] = {}
    for f in frequencies.values():
        type_counts[f] = type_counts.get(f, 0) + 1
    total = sum(f * n for f, n in type_counts.items())
    bins = {}
    cumulative = 0
    for f in sorted(type_counts):
        cumulative += f * type_counts[f]
        # quantile index of the group's last cumulative token, ceil(c*k/M)-1
        bins[f] = (cumulative * k + total - 1) // total - 1
    hapax_bin = bins.get(1, 0)
    labels = tuple(str(b) for b in sorted(set(bins.values())))
    return FreqBinSpec(variant, k, bins, hapax_bin, labels, frequencies)


def apply_freqbin(spec: FreqBinSpec, corpus: TaggedCorpus, task_name: str) -> TaggedCorpus:
    """Return the corpus with an added label column of frequency bins.

    Words absent from the fitted frequencies are treated as hapaxes.
    """
    if task_name in corpus.tasks:
        raise ValueError(f"task {task_name!r} already present in corpus")
    column = [
        [spec.label_for(tok.surface) for tok in sent] for sent in corpus.sentences
    ]
    return corpus.with_column(task_name, column, scheme=SCHEME_NONE)
