"""Token-level evaluation metrics and the paired bootstrap test.

The headline score is micro-averaged F1 over non-O tokens: the O majority
class would otherwise dominate recall and make scores deceptively high.
When no out-of-span label exists, every token counts and the score reduces
to token accuracy.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .conll import validate_bio


def _check_aligned(gold, pred):
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")


def micro_f1_non_o(gold, pred, o_label=None) -> float:
    """Micro F1 pooled over all tokens whose label is not the O label.

    precision = correct non-O predictions / all non-O predictions,
    recall uses non-O gold tokens; F1 is their harmonic mean, 0 when there
    are no correct non-O predictions.
    """
    _check_aligned(gold, pred)
    tp = pred_n = gold_n = 0
    for g, p in zip(gold, pred):
        if p != o_label:
            pred_n += 1
            if p == g:
                tp += 1
        if g != o_label:
            gold_n += 1
    precision = tp / pred_n if pred_n else 0.0
    recall = tp / gold_n if gold_n else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def precision_o(gold, pred, o_label) -> float | None:
    """Precision of the O label itself; None when no O was predicted."""
    _check_aligned(gold, pred)
    pred_o = correct = 0
    for g, p in zip(gold, pred):
        if p == o_label:
            pred_o += 1
            if g == o_label:
                correct += 1
    if pred_o == 0:
        return None
    return correct / pred_o


def per_label_f1(gold, pred) -> dict[str, float]:
    """Token-level F1 for every label observed in gold or predictions."""
    _check_aligned(gold, pred)
    labels = sorted(set(gold) | set(pred))
    out = {}
    for lab in labels:
        tp = sum(1 for g, p in zip(gold, pred) if g == lab and p == lab)
        pred_n = sum(1 for p in pred if p == lab)
        gold_n = sum(1 for g in gold if g == lab)
        precision = tp / pred_n if pred_n else 0.0
        recall = tp / gold_n if gold_n else 0.0
        out[lab] = (
            0.0 if precision + recall == 0.0
            else 2.0 * precision * recall / (precision + recall)
        )
    return out


def count_bio_violations(sentences) -> dict[str, int]:
    """Aggregate validate_bio over predicted sentences; kind -> count."""
    counts: dict[str, int] = {}
    for labels in sentences:
        for _, kind in validate_bio(labels):
            counts[kind] = counts.get(kind, 0) + 1
    return counts


def bio_spans(labels) -> list[tuple[int, int, str]]:
    """(start, end, class) spans with exclusive end; invalid continuations
    (I after O, class switch) start a new span, the usual lenient reading."""
    spans = []
    start = None
    cls = None
    for i, lab in enumerate(labels):
        if lab == "O":
            if start is not None:
                spans.append((start, i, cls))
                start, cls = None, None
            continue
        prefix, name = lab[0], lab[2:]
        if prefix == "B" or start is None or cls != name:
            if start is not None:
                spans.append((start, i, cls))
            start, cls = i, name
    if start is not None:
        spans.append((start, len(labels), cls))
    return spans


def span_f1(gold_sentences, pred_sentences) -> float:
    """Exact-match span F1, the optional secondary metric for BIO tasks."""
    _check_aligned(gold_sentences, pred_sentences)
    tp = fp = fn = 0
    for g, p in zip(gold_sentences, pred_sentences):
        gs, ps = set(bio_spans(g)), set(bio_spans(p))
        tp += len(gs & ps)
        fp += len(ps - gs)
        fn += len(gs - ps)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class EvalReport:
    task: str
    n_tokens: int
    micro_f1_non_o: float
    precision_o: float | None
    per_label_f1: dict[str, float]
    bio_violations: dict[str, int] = field(default_factory=dict)
    span_f1: float | None = None
    aux_accuracy: dict[str, float] = field(default_factory=dict)

    @property
    def total_bio_violations(self) -> int:
        return sum(self.bio_violations.values())

    def to_text(self) -> str:
        lines = [
            f"task\t{self.task}",
            f"n-tokens\t{self.n_tokens}",
            f"micro-f1-non-o\t{self.micro_f1_non_o:.6f}",
            f"precision-o\t{'-' if self.precision_o is None else format(self.precision_o, '.6f')}",
        ]
        if self.span_f1 is not None:
            lines.append(f"span-f1\t{self.span_f1:.6f}")
        lines.append(f"bio-violations-total\t{self.total_bio_violations}")
        for kind in sorted(self.bio_violations):
            lines.append(f"bio-violations.{kind}\t{self.bio_violations[kind]}")
        for lab in sorted(self.per_label_f1):
            lines.append(f"per-label-f1.{lab}\t{self.per_label_f1[lab]:.6f}")
        for name in sorted(self.aux_accuracy):
            lines.append(f"aux-dev-accuracy.{name}\t{self.aux_accuracy[name]:.6f}")
        return "\n".join(lines) + "\n"


def build_report(task, gold_sentences, pred_sentences, o_label=None,
                 scheme=None, aux_accuracy=None) -> EvalReport:
    """Assemble the full report from sentence-aligned gold and predictions."""
    _check_aligned(gold_sentences, pred_sentences)
    gold_flat = [lab for sent in gold_sentences for lab in sent]
    pred_flat = [lab for sent in pred_sentences for lab in sent]
    is_bio = scheme == "bio"
    return EvalReport(
        task=task,
        n_tokens=len(gold_flat),
        micro_f1_non_o=micro_f1_non_o(gold_flat, pred_flat, o_label),
        precision_o=None if o_label is None else precision_o(gold_flat, pred_flat, o_label),
        per_label_f1=per_label_f1(gold_flat, pred_flat),
        bio_violations=count_bio_violations(pred_sentences) if is_bio else {},
        span_f1=span_f1(gold_sentences, pred_sentences) if is_bio else None,
        aux_accuracy=dict(aux_accuracy or {}),
    )


@dataclass(frozen=True)
class SignificanceResult:
    delta_f1: float
    p_value: float
    iterations: int
    significant: bool
    better: str  # "a" or "b"


def _sentence_counts(gold_sentences, pred_sentences, o_label) -> np.ndarray:
    rows = np.zeros((len(gold_sentences), 3), dtype=np.int64)
    for i, (g_sent, p_sent) in enumerate(zip(gold_sentences, pred_sentences)):
        if len(g_sent) != len(p_sent):
            raise ValueError(f"sentence {i}: gold and prediction lengths differ")
        for g, p in zip(g_sent, p_sent):
            if p != o_label:
                rows[i, 1] += 1
                if p == g:
                    rows[i, 0] += 1
            if g != o_label:
                rows[i, 2] += 1
    return rows


def _f1_from_sums(tp, pred_n, gold_n):
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred_n > 0, tp / pred_n, 0.0)
        recall = np.where(gold_n > 0, tp / gold_n, 0.0)
        denom = precision + recall
        return np.where(denom > 0, 2.0 * precision * recall / denom, 0.0)


def _f1_scalar(tp: int, pred_n: int, gold_n: int) -> float:
    precision = tp / pred_n if pred_n else 0.0
    recall = tp / gold_n if gold_n else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def bootstrap_significance(gold_sentences, pred_a, pred_b, o_label=None,
                           iterations: int = 10000, seed: int = 0) -> SignificanceResult:
    """One-sided paired bootstrap over sentences.

    delta is the full-set F1 gap with the higher-scoring system first; each
    iteration resamples sentences with replacement and recomputes it, and
    the p-value is the fraction of resampled gaps <= 0. Deterministic for a
    fixed seed; the threshold for ``significant`` is p < 0.05.
    """
    if not gold_sentences:
        raise ValueError("bootstrap needs at least one sentence")
    _check_aligned(gold_sentences, pred_a)
    _check_aligned(gold_sentences, pred_b)
    counts_a = _sentence_counts(gold_sentences, pred_a, o_label)
    counts_b = _sentence_counts(gold_sentences, pred_b, o_label)
    f1_a = _f1_scalar(*counts_a.sum(axis=0).tolist())
    f1_b = _f1_scalar(*counts_b.sum(axis=0).tolist())
    better = "a" if f1_a >= f1_b else "b"
    hi, lo = (counts_a, counts_b) if better == "a" else (counts_b, counts_a)
    delta = abs(f1_a - f1_b)

    n = len(gold_sentences)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(iterations, n), dtype=np.int64)
    stacked = np.ascontiguousarray(np.hstack([hi, lo]))
    sums = backend.bootstrap_counts(stacked, idx).astype(np.float64)
    f1_hi = _f1_from_sums(sums[:, 0], sums[:, 1], sums[:, 2])
    f1_lo = _f1_from_sums(sums[:, 3], sums[:, 4], sums[:, 5])
    deltas = f1_hi - f1_lo
    p = float(np.count_nonzero(deltas <= 0.0) / iterations)
    return SignificanceResult(
        delta_f1=delta,
        p_value=p,
        iterations=iterations,
        significant=p < 0.05,
        better=better,
    )
