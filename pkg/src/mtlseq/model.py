"""Hierarchical multi-task bi-LSTM tagger.

A character bi-LSTM builds a per-token representation that is concatenated
with the word embedding and fed through a stack of bidirectional context
layers; each task reads one softmax head off a configurable stack depth.
During training, zero-mean Gaussian noise is added to the concatenated
input vectors.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .autograd import Param, Tape
from .conll import LabelInventory, Sentence
from .utils import rng_for

UNK = "<unk>"


@dataclass
class ModelConfig:
    word_emb_dim: int = 64
    char_emb_dim: int = 100
    char_hidden_dim: int | None = None  # defaults to char_emb_dim
    hidden_dim: int = 100  # per direction, before width scaling
    context_layers: int = 3
    noise_sigma: float = 0.2
    use_char: bool = True
    width_factor: int = 1
    seed: int = 1

    def __post_init__(self):
        for name in ("word_emb_dim", "char_emb_dim", "hidden_dim", "context_layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.char_hidden_dim is not None and self.char_hidden_dim < 1:
            raise ValueError("char_hidden_dim must be positive")
        if self.width_factor < 1:
            raise ValueError("width_factor must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    @property
    def char_hidden(self) -> int:
        return self.char_hidden_dim if self.char_hidden_dim is not None else self.char_emb_dim

    @property
    def context_hidden(self) -> int:
        return self.hidden_dim * self.width_factor

    @property
    def input_dim(self) -> int:
        return self.word_emb_dim + (2 * self.char_hidden if self.use_char else 0)


@dataclass(frozen=True)
class TaskHead:
    """Placement of one task's output layer on the context stack."""

    task_name: str
    layer: int
    inventory: LabelInventory

    def __post_init__(self):
        if not self.inventory.labels:
            raise ValueError("head inventory must be non-empty")


class Vocabulary:
    """Word and character index maps, built from training data only.
    Index 0 is the unknown symbol for both maps."""

    def __init__(self, words, chars):
        self.words = [UNK] + sorted(set(words) - {UNK})
        self.chars = [UNK] + sorted(set(chars) - {UNK})
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.char_index = {c: i for i, c in enumerate(self.chars)}

    @classmethod
    def build(cls, corpora) -> "Vocabulary":
        words = set()
        chars = set()
        for corpus in corpora:
            for sent in corpus.sentences:
                for tok in sent:
                    words.add(tok.surface)
                    chars.update(tok.surface)
        return cls(words, chars)

    @property
    def n_words(self) -> int:
        return len(self.words)

    @property
    def n_chars(self) -> int:
        return len(self.chars)

    def encode_words(self, surfaces) -> np.ndarray:
        return np.array([self.word_index.get(s, 0) for s in surfaces], dtype=np.int64)

    def encode_chars(self, surface) -> np.ndarray:
        return np.array([self.char_index.get(c, 0) for c in surface], dtype=np.int64)


def _glorot(rng, rows, cols):
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


class _LSTMParams:
    """Weight bundle for one scan direction."""

    def __init__(self, rng, prefix, in_dim, hidden):
        self.w_x = Param(f"{prefix}.w_x", _glorot(rng, 4 * hidden, in_dim))
        self.w_h = Param(f"{prefix}.w_h", _glorot(rng, 4 * hidden, hidden))
        bias = np.zeros(4 * hidden)
        bias[hidden:2 * hidden] = 1.0  # forget gate open at init
        self.b = Param(f"{prefix}.b", bias)

    def params(self):
        return [self.w_x, self.w_h, self.b]


class _HeadParams:
    def __init__(self, rng, task_name, layer, inventory, hidden2):
        self.task_name = task_name
        self.layer = layer
        self.inventory = inventory
        n = len(inventory.labels)
        self.w = Param(f"head.{task_name}.w", _glorot(rng, n, hidden2))
        self.b = Param(f"head.{task_name}.b", np.zeros(n))

    def params(self):
        return [self.w, self.b]


class Tagger:
    """A built model: parameters plus the vocabulary and head placements."""

    def __init__(self, config: ModelConfig, vocab: Vocabulary, heads):
        self.config = config
        self.vocab = vocab
        rng = rng_for(config.seed, "init")
        self.word_emb = Param("word_emb", _glorot(rng, vocab.n_words, config.word_emb_dim))
        if config.use_char:
            ch = config.char_hidden
            self.char_emb = Param("char_emb", _glorot(rng, vocab.n_chars, config.char_emb_dim))
            self.char_fwd = _LSTMParams(rng, "char_fwd", config.char_emb_dim, ch)
            self.char_bwd = _LSTMParams(rng, "char_bwd", config.char_emb_dim, ch)
        else:
            self.char_emb = None
            self.char_fwd = None
            self.char_bwd = None
        hidden = config.context_hidden
        self.layers = []
        in_dim = config.input_dim
        for l in range(1, config.context_layers + 1):
            fwd = _LSTMParams(rng, f"ctx{l}_fwd", in_dim, hidden)
            bwd = _LSTMParams(rng, f"ctx{l}_bwd", in_dim, hidden)
            self.layers.append((fwd, bwd))
            in_dim = 2 * hidden
        self.heads: dict[str, _HeadParams] = {}
        for spec in heads:
            if spec.task_name in self.heads:
                raise ValueError(f"duplicate task head {spec.task_name!r}")
            if not 1 <= spec.layer <= config.context_layers:
                raise ValueError(
                    f"head {spec.task_name!r} placed at layer {spec.layer}, "
                    f"model has {config.context_layers}"
                )
            self.heads[spec.task_name] = _HeadParams(
                rng, spec.task_name, spec.layer, spec.inventory, 2 * hidden
            )
        if not self.heads:
            raise ValueError("model needs at least one task head")

    def parameters(self) -> list[Param]:
        out = [self.word_emb]
        if self.config.use_char:
            out.append(self.char_emb)
            out.extend(self.char_fwd.params())
            out.extend(self.char_bwd.params())
        for fwd, bwd in self.layers:
            out.extend(fwd.params())
            out.extend(bwd.params())
        for name in self.heads:
            out.extend(self.heads[name].params())
        return out

    def n_parameters(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def shared_parameters(self) -> list[Param]:
        """Everything below the task heads."""
        head_params = {id(p) for h in self.heads.values() for p in h.params()}
        return [p for p in self.parameters() if id(p) not in head_params]

    # -- forward passes -----------------------------------------------------

    def _bilstm(self, tape: Tape, x, fwd: _LSTMParams, bwd: _LSTMParams):
        return ag.bilstm_rows(
            tape, x, (fwd.w_x, fwd.w_h, fwd.b), (bwd.w_x, bwd.w_h, bwd.b)
        )

    def _char_features(self, tape: Tape, surface: str):
        return ag.bilstm_final_concat(
            tape, self.char_emb, self.vocab.encode_chars(surface),
            (self.char_fwd.w_x, self.char_fwd.w_h, self.char_fwd.b),
            (self.char_bwd.w_x, self.char_bwd.w_h, self.char_bwd.b),
        )

    def encode(self, tape: Tape, surfaces, training: bool = False, rng=None):
        """Hidden-state sequences at every context layer, outermost last.

        When ``training`` is set, Gaussian noise (sigma from the config) is
        added to the concatenated per-token input vectors; ``rng`` supplies
        the draws. Inference is noise-free and deterministic.
        """
        word_rows = ag.lookup(tape, self.word_emb, self.vocab.encode_words(surfaces))
        if self.config.use_char:
            char_rows = ag.stack_rows(
                tape, [self._char_features(tape, s) for s in surfaces]
            )
            x = ag.concat(tape, [word_rows, char_rows], axis=1)
        else:
            x = word_rows
        if training and self.config.noise_sigma > 0.0:
            if rng is None:
                raise ValueError("training-mode encoding needs an rng for the noise")
            noise = rng.normal(0.0, self.config.noise_sigma, size=x.data.shape)
            x = ag.add(tape, x, tape.constant(noise))
        states = []
        h = x
        for fwd, bwd in self.layers:
            h = self._bilstm(tape, h, fwd, bwd)
            states.append(h)
        return states

    def head_logits(self, tape: Tape, states, task_name: str):
        head = self.heads[task_name]
        hidden = states[head.layer - 1]
        return ag.affine_rows(tape, hidden, tape.leaf(head.w), tape.leaf(head.b))


def build_model(config: ModelConfig, vocab: Vocabulary, heads) -> Tagger:
    return Tagger(config, vocab, heads)


def predict(model: Tagger, sentence, task_name: str) -> list[str]:
    """Greedy per-token decoding: the argmax of the head's softmax at each
    position, ties broken by lowest label index. No sequence-level decoding
    layer is applied."""
    if task_name not in model.heads:
        raise KeyError(f"no head for task {task_name!r}")
    surfaces = sentence.surfaces() if isinstance(sentence, Sentence) else list(sentence)
    tape = Tape()
    states = model.encode(tape, surfaces, training=False)
    logits = model.head_logits(tape, states, task_name)
    inventory = model.heads[task_name].inventory
    return [inventory.labels[i] for i in logits.data.argmax(axis=1)]


def task_loss(model: Tagger, sentence: Sentence, task_name: str,
              training: bool = True, rng=None):
    """Summed cross-entropy of the gold labels under one head.

    Returns (tape, loss node); call ``tape.backward(loss)`` to populate
    gradients.
    """
    if task_name not in model.heads:
        raise KeyError(f"no head for task {task_name!r}")
    inventory = model.heads[task_name].inventory
    targets = [inventory.index(lab) for lab in sentence.labels(task_name)]
    tape = Tape()
    states = model.encode(tape, sentence.surfaces(), training=training, rng=rng)
    logits = model.head_logits(tape, states, task_name)
    loss = ag.nll_rows(tape, logits, targets)
    return tape, loss


def multi_task_loss(model: Tagger, sentence: Sentence, task_names,
                    training: bool = False, rng=None, recording: bool = True):
    """Sum of the per-head losses over one shared encoding pass.

    Returns (tape, loss node). With ``recording=False`` only the forward
    value is computed (for finite-difference probes).
    """
    tape = Tape(recording=recording)
    states = model.encode(tape, sentence.surfaces(), training=training, rng=rng)
    total = None
    for name in task_names:
        inventory = model.heads[name].inventory
        targets = [inventory.index(lab) for lab in sentence.labels(name)]
        loss = ag.nll_rows(tape, model.head_logits(tape, states, name), targets)
        total = loss if total is None else ag.add(tape, total, loss)
    return tape, total


def parameter_count(config: ModelConfig, n_words: int, n_chars: int,
                    head_sizes) -> int:
    """Closed-form parameter count for a built model.

    ``head_sizes`` is the list of label-inventory sizes, one per head.
    One LSTM direction with input d and width h holds 4h(d + h + 1)
    weights; every context layer is bidirectional.
    """
    h = config.context_hidden
    total = n_words * config.word_emb_dim
    if config.use_char:
        ch = config.char_hidden
        total += n_chars * config.char_emb_dim
        total += 2 * (4 * ch * (config.char_emb_dim + ch + 1))
    in_dim = config.input_dim
    for _ in range(config.context_layers):
        total += 2 * (4 * h * (in_dim + h + 1))
        in_dim = 2 * h
    for n in head_sizes:
        total += n * (2 * h) + n
    return total


# -- persistence -------------------------------------------------------------

_META_MAGIC = "mtlseq-tagger 1"


def save_model(model: Tagger, prefix) -> None:
    """Write ``<prefix>.bin`` (parameters) and ``<prefix>.meta`` (config,
    vocabulary, head placements as plain text)."""
    ag.save_params(model.parameters(), f"{prefix}.bin")
    cfg = model.config
    with open(f"{prefix}.meta", "w", encoding="utf-8") as fh:
        fh.write(_META_MAGIC + "\n")
        fh.write(f"word_emb_dim\t{cfg.word_emb_dim}\n")
        fh.write(f"char_emb_dim\t{cfg.char_emb_dim}\n")
        fh.write(f"char_hidden_dim\t{cfg.char_hidden}\n")
        fh.write(f"hidden_dim\t{cfg.hidden_dim}\n")
        fh.write(f"context_layers\t{cfg.context_layers}\n")
        fh.write(f"noise_sigma\t{cfg.noise_sigma!r}\n")
        fh.write(f"use_char\t{int(cfg.use_char)}\n")
        fh.write(f"width_factor\t{cfg.width_factor}\n")
        fh.write(f"seed\t{cfg.seed}\n")
        fh.write(f"words\t{model.vocab.n_words}\n")
        for w in model.vocab.words:
            fh.write(w + "\n")
        fh.write(f"chars\t{model.vocab.n_chars}\n")
        for c in model.vocab.chars:
            fh.write(c + "\n")
        fh.write(f"heads\t{len(model.heads)}\n")
        for name, head in model.heads.items():
            inv = head.inventory
            o_idx = "-" if inv.o_label is None else str(inv.labels.index(inv.o_label))
            fields = [name, str(head.layer), inv.scheme, o_idx] + list(inv.labels)
            fh.write("\t".join(fields) + "\n")


def load_model(prefix) -> Tagger:
    with open(f"{prefix}.meta", encoding="utf-8") as fh:
        if fh.readline().rstrip("\n") != _META_MAGIC:
            raise ValueError("not a tagger metadata file")

        def kv():
            key, value = fh.readline().rstrip("\n").split("\t", 1)
            return key, value

        head_fields = {}
        for _ in range(9):
            key, value = kv()
            head_fields[key] = value
        key, n = kv()
        assert key == "words"
        words = [fh.readline().rstrip("\n") for _ in range(int(n))]
        key, n = kv()
        assert key == "chars"
        chars = [fh.readline().rstrip("\n") for _ in range(int(n))]
        key, n = kv()
        assert key == "heads"
        heads = []
        for _ in range(int(n)):
            fields = fh.readline().rstrip("\n").split("\t")
            name, layer, scheme, o_idx = fields[0], int(fields[1]), fields[2], fields[3]
            labels = tuple(fields[4:])
            o_label = None if o_idx == "-" else labels[int(o_idx)]
            heads.append(TaskHead(name, layer, LabelInventory(labels, o_label, scheme)))
    config = ModelConfig(
        word_emb_dim=int(head_fields["word_emb_dim"]),
        char_emb_dim=int(head_fields["char_emb_dim"]),
        char_hidden_dim=int(head_fields["char_hidden_dim"]),
        hidden_dim=int(head_fields["hidden_dim"]),
        context_layers=int(head_fields["context_layers"]),
        noise_sigma=float(head_fields["noise_sigma"]),
        use_char=bool(int(head_fields["use_char"])),
        width_factor=int(head_fields["width_factor"]),
        seed=int(head_fields["seed"]),
    )
    vocab = Vocabulary.__new__(Vocabulary)
    vocab.words = words
    vocab.chars = chars
    vocab.word_index = {w: i for i, w in enumerate(words)}
    vocab.char_index = {c: i for i, c in enumerate(chars)}
    model = Tagger(config, vocab, heads)
    loaded = {p.name: p for p in ag.load_params(f"{prefix}.bin")}
    for p in model.parameters():
        src = loaded[p.name]
        if src.data.shape != p.data.shape:
            raise ValueError(f"shape mismatch for {p.name!r} in parameter file")
        p.data[...] = src.data
    return model
