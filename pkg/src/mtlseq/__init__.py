"""Multi-task bi-LSTM sequence labeling toolkit.

Ingests CoNLL-style corpora, derives frequency-bin auxiliary label columns,
computes label-distribution diagnostics, and trains a hierarchical
char/word bi-LSTM with per-task softmax heads on its own reverse-mode
autodiff engine. Hot kernels run under numba with a pure-numpy fallback
(see ``mtlseq.backend``).
"""

__version__ = "0.1.0"

from .conll import (
    ConllError,
    LabelInventory,
    Sentence,
    TaggedCorpus,
    Token,
    read_conll,
    slice_fraction,
    validate_bio,
    word_frequencies,
    write_conll,
)
from .freqbin import FreqBinSpec, apply_freqbin, fit_freqbin
from .metrics import (
    EvalReport,
    SignificanceResult,
    bootstrap_significance,
    count_bio_violations,
    micro_f1_non_o,
    precision_o,
    span_f1,
)
from .model import ModelConfig, TaskHead, Tagger, Vocabulary, build_model, predict, task_loss
from .stats import (
    DatasetStats,
    RegressionProbeResult,
    dataset_stats,
    entropy,
    kurtosis,
    label_distribution,
    trigram_frequency_probe,
)
from .training import TaskSpec, TrainingConfig, TrainLog, capacity_sweep, learning_curve, train
