"""Experiment orchestration: declarative configs, single runs, system
grids, POS-source comparisons, and report emission.

Configs are plain INI files (stdlib configparser): an [experiment] section
for seed/epochs/learning rate, [model] overrides, one [main] task, and up
to two [aux.<name>] sections, each either file-backed (a ``train`` path)
or derived (``freqbin = skewed10|skewed5|uniform`` computed from the main
training corpus). For ``grid`` runs the [aux.*] sections form the system
menu and an optional [grid] section sets layers/pairing.

Every run is deterministic given the config seed: reruns produce
byte-identical predictions and reports.
"""

import configparser
import os
from dataclasses import dataclass, field

from .conll import TaggedCorpus, read_conll, word_frequencies
from .freqbin import VARIANTS, apply_freqbin, fit_freqbin
from .metrics import EvalReport, bootstrap_significance, build_report
from .model import ModelConfig, TaskHead, Vocabulary, build_model, predict, save_model
from .training import (
    ROLE_AUX,
    ROLE_MAIN,
    TaskSpec,
    TrainingConfig,
    TrainLog,
    capacity_sweep,
    learning_curve,
    train,
)


@dataclass
class MainTask:
    name: str
    train: str
    dev: str | None = None
    test: str | None = None
    token_column: int = 0
    label_column: int = 1
    o_label: str | None = None
    scheme: str | None = None
    head_layer: int = 3


@dataclass
class AuxTask:
    """Either file-backed (``train`` set) or frequency-bin derived
    (``freqbin_variant`` set); exactly one of the two."""

    name: str
    head_layer: int = 3
    train: str | None = None
    dev: str | None = None
    token_column: int = 0
    label_column: int = 1
    o_label: str | None = None
    scheme: str | None = None
    freqbin_variant: str | None = None
    freqbin_k: int | None = None

    def __post_init__(self):
        if (self.train is None) == (self.freqbin_variant is None):
            raise ValueError(
                f"aux task {self.name!r} needs exactly one of a train path "
                f"or a freqbin variant"
            )
        if self.freqbin_variant is not None and self.freqbin_variant not in VARIANTS:
            raise ValueError(f"unknown freqbin variant {self.freqbin_variant!r}")


@dataclass
class ExperimentConfig:
    main: MainTask
    aux: list[AuxTask] = field(default_factory=list)
    model: ModelConfig = field(default_factory=ModelConfig)
    epochs: int = 30
    learning_rate: float = 0.1
    seed: int = 1
    sampling: str = "task-first"
    grid_layers: tuple[int, ...] = (1, 3)
    grid_pairs: bool = True

    def __post_init__(self):
        if len(self.aux) > 2:
            raise ValueError("at most two auxiliary tasks")
        names = [self.main.name] + [a.name for a in self.aux]
        if len(set(names)) != len(names):
            raise ValueError("task names must be unique")
        self.model.seed = self.seed


_MODEL_KEYS = (
    "word_emb_dim", "char_emb_dim", "char_hidden_dim", "hidden_dim",
    "context_layers", "noise_sigma", "use_char", "width_factor",
)


def _set_opt(section, spec, names):
    for name in names:
        value = getattr(spec, name)
        if value is not None:
            section[name] = str(value)


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ValueError(f"cannot read config file {path}")
    if "main" not in parser:
        raise ValueError(f"{path}: missing [main] section")
    exp = parser["experiment"] if "experiment" in parser else {}

    def get(section, key, cast, default):
        if key not in section:
            return default
        raw = section[key]
        if cast is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(f"bad boolean {raw!r} for {key}")
        return cast(raw)

    mc = parser["model"] if "model" in parser else {}
    model = ModelConfig(
        word_emb_dim=get(mc, "word_emb_dim", int, 64),
        char_emb_dim=get(mc, "char_emb_dim", int, 100),
        char_hidden_dim=get(mc, "char_hidden_dim", int, None),
        hidden_dim=get(mc, "hidden_dim", int, 100),
        context_layers=get(mc, "context_layers", int, 3),
        noise_sigma=get(mc, "noise_sigma", float, 0.2),
        use_char=get(mc, "use_char", bool, True),
        width_factor=get(mc, "width_factor", int, 1),
    )
    m = parser["main"]
    main = MainTask(
        name=m.get("name", "main"),
        train=m["train"],
        dev=m.get("dev"),
        test=m.get("test"),
        token_column=get(m, "token_column", int, 0),
        label_column=get(m, "label_column", int, 1),
        o_label=m.get("o_label"),
        scheme=m.get("scheme"),
        head_layer=get(m, "head_layer", int, 3),
    )
    aux = []
    for section_name in parser.sections():
        if not section_name.startswith("aux."):
            continue
        a = parser[section_name]
        aux.append(AuxTask(
            name=section_name[len("aux."):],
            head_layer=get(a, "head_layer", int, 3),
            train=a.get("train"),
            dev=a.get("dev"),
            token_column=get(a, "token_column", int, 0),
            label_column=get(a, "label_column", int, 1),
            o_label=a.get("o_label"),
            scheme=a.get("scheme"),
            freqbin_variant=a.get("freqbin"),
            freqbin_k=get(a, "k", int, None),
        ))
    grid = parser["grid"] if "grid" in parser else {}
    layers = tuple(
        int(x) for x in get(grid, "layers", str, "1,3").replace(" ", "").split(",") if x
    )
    return ExperimentConfig(
        main=main,
        aux=aux,
        model=model,
        epochs=get(exp, "epochs", int, 30),
        learning_rate=get(exp, "learning_rate", float, 0.1),
        seed=get(exp, "seed", int, 1),
        sampling=exp.get("sampling", "task-first") if exp else "task-first",
        grid_layers=layers,
        grid_pairs=get(grid, "pairs", bool, True),
    )


def save_config(cfg: ExperimentConfig, path) -> None:
    parser = configparser.ConfigParser()
    parser["experiment"] = {
        "seed": str(cfg.seed),
        "epochs": str(cfg.epochs),
        "learning_rate": repr(cfg.learning_rate),
        "sampling": cfg.sampling,
    }
    parser["model"] = {}
    mc = parser["model"]
    for key in _MODEL_KEYS:
        value = getattr(cfg.model, key)
        if value is None:
            continue
        mc[key] = repr(value) if isinstance(value, float) else str(value)
    parser["main"] = {"name": cfg.main.name, "train": cfg.main.train}
    _set_opt(parser["main"], cfg.main, ("dev", "test", "o_label", "scheme"))
    parser["main"]["token_column"] = str(cfg.main.token_column)
    parser["main"]["label_column"] = str(cfg.main.label_column)
    parser["main"]["head_layer"] = str(cfg.main.head_layer)
    for a in cfg.aux:
        sec = f"aux.{a.name}"
        parser[sec] = {"head_layer": str(a.head_layer)}
        if a.train is not None:
            _set_opt(parser[sec], a, ("train", "dev", "o_label", "scheme"))
            parser[sec]["token_column"] = str(a.token_column)
            parser[sec]["label_column"] = str(a.label_column)
        else:
            parser[sec]["freqbin"] = a.freqbin_variant
            if a.freqbin_k is not None:
                parser[sec]["k"] = str(a.freqbin_k)
    parser["grid"] = {
        "layers": ",".join(str(l) for l in cfg.grid_layers),
        "pairs": "true" if cfg.grid_pairs else "false",
    }
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)


# ---------------------------------------------------------------------------
# session assembly and single runs

def _read_task(path, name, token_column, label_column, o_label, scheme, split):
    if not os.path.exists(path):
        raise ValueError(f"corpus file not found: {path}")
    return read_conll(
        path, [(label_column, name)], token_column=token_column, split=split,
        o_labels={name: o_label} if o_label else None,
        schemes={name: scheme} if scheme else None,
    )


@dataclass
class Session:
    """Materialized corpora and configs for one run."""

    config: ExperimentConfig
    model_config: ModelConfig
    training_config: TrainingConfig
    test_corpus: TaggedCorpus | None
    aux_dev: dict[str, TaggedCorpus]


def build_session(cfg: ExperimentConfig, aux_subset=None) -> Session:
    main = cfg.main
    train_corpus = _read_task(main.train, main.name, main.token_column,
                              main.label_column, main.o_label, main.scheme, "train")
    dev_corpus = None
    if main.dev:
        dev_corpus = _read_task(main.dev, main.name, main.token_column,
                                main.label_column, main.o_label, main.scheme, "dev")
    test_corpus = None
    if main.test:
        test_corpus = _read_task(main.test, main.name, main.token_column,
                                 main.label_column, main.o_label, main.scheme, "test")
    tasks = [TaskSpec(main.name, train_corpus, main.head_layer, ROLE_MAIN)]
    aux_dev: dict[str, TaggedCorpus] = {}
    for a in (cfg.aux if aux_subset is None else aux_subset):
        if a.train is not None:
            aux_train = _read_task(a.train, a.name, a.token_column,
                                   a.label_column, a.o_label, a.scheme, "train")
            if a.dev:
                aux_dev[a.name] = _read_task(a.dev, a.name, a.token_column,
                                             a.label_column, a.o_label, a.scheme, "dev")
        else:
            spec = fit_freqbin(word_frequencies(train_corpus), a.freqbin_variant,
                               a.freqbin_k)
            aux_train = apply_freqbin(spec, train_corpus, a.name)
            if dev_corpus is not None:
                aux_dev[a.name] = apply_freqbin(spec, dev_corpus, a.name)
        tasks.append(TaskSpec(a.name, aux_train, a.head_layer, ROLE_AUX))
    model_config = ModelConfig(
        word_emb_dim=cfg.model.word_emb_dim,
        char_emb_dim=cfg.model.char_emb_dim,
        char_hidden_dim=cfg.model.char_hidden_dim,
        hidden_dim=cfg.model.hidden_dim,
        context_layers=cfg.model.context_layers,
        noise_sigma=cfg.model.noise_sigma,
        use_char=cfg.model.use_char,
        width_factor=cfg.model.width_factor,
        seed=cfg.seed,
    )
    training_config = TrainingConfig(
        tasks=tasks, epochs=cfg.epochs, learning_rate=cfg.learning_rate,
        seed=cfg.seed, sampling=cfg.sampling, dev_corpus=dev_corpus,
    )
    return Session(cfg, model_config, training_config, test_corpus, aux_dev)


@dataclass
class ExperimentResult:
    report: EvalReport | None
    log: TrainLog
    gold_sentences: list | None
    pred_sentences: list | None
    o_label: str | None


def _aux_accuracy(model, session: Session) -> dict[str, float]:
    out = {}
    for name, corpus in sorted(session.aux_dev.items()):
        correct = total = 0
        for sent in corpus.sentences:
            gold = sent.labels(name)
            pred = predict(model, sent, name)
            correct += sum(1 for g, p in zip(gold, pred) if g == p)
            total += len(gold)
        out[name] = correct / total if total else 0.0
    return out


def run_experiment(cfg: ExperimentConfig, outdir) -> ExperimentResult:
    """Build corpora, derive frequency-bin columns, train, evaluate the
    main task on the test split, and write report, log, model, and
    predictions under ``outdir``."""
    session = build_session(cfg)
    os.makedirs(outdir, exist_ok=True)
    vocab = Vocabulary.build([t.corpus for t in session.training_config.tasks])
    heads = [
        TaskHead(t.name, t.head_layer, t.corpus.inventories[t.name])
        for t in session.training_config.tasks
    ]
    model = build_model(session.model_config, vocab, heads)
    log = train(model, session.training_config)
    log.write(os.path.join(outdir, "trainlog.tsv"))
    save_model(model, os.path.join(outdir, "model"))

    report = None
    gold_sents = pred_sents = None
    main_name = cfg.main.name
    inv = model.heads[main_name].inventory
    if session.test_corpus is not None:
        gold_sents = [s.labels(main_name) for s in session.test_corpus.sentences]
        pred_sents = [predict(model, s, main_name) for s in session.test_corpus.sentences]
        report = build_report(
            main_name, gold_sents, pred_sents, inv.o_label, inv.scheme,
            aux_accuracy=_aux_accuracy(model, session),
        )
        with open(os.path.join(outdir, "report.txt"), "w", encoding="utf-8") as fh:
            fh.write(report.to_text())
        with open(os.path.join(outdir, "predictions.tsv"), "w", encoding="utf-8") as fh:
            for sent, preds in zip(session.test_corpus.sentences, pred_sents):
                for tok, p in zip(sent, preds):
                    fh.write(f"{tok.surface}\t{tok.labels[main_name]}\t{p}\n")
                fh.write("\n")
    return ExperimentResult(report, log, gold_sents, pred_sents, inv.o_label)


# ---------------------------------------------------------------------------
# grids and comparisons

def _fmt(x) -> str:
    return "-" if x is None else f"{x:.6f}"


@dataclass
class GridRow:
    system: str
    aux_layer: str
    f1: float
    delta: float | None
    p_value: float | None
    significant: bool | None


@dataclass
class GridResult:
    rows: list[GridRow]

    @property
    def n_over_baseline(self) -> int:
        return sum(1 for r in self.rows if r.delta is not None and r.delta > 0)

    def to_tsv(self) -> str:
        lines = ["system\taux-layer\tmicro-f1\tdelta\tp-value\tsignificant"]
        for r in self.rows:
            sig = "-" if r.significant is None else ("yes" if r.significant else "no")
            lines.append(
                f"{r.system}\t{r.aux_layer}\t{r.f1:.6f}\t{_fmt(r.delta)}\t"
                f"{_fmt(r.p_value)}\t{sig}"
            )
        lines.append(f"n-systems\t{len(self.rows) - 1}")
        lines.append(f"n-over-baseline\t{self.n_over_baseline}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        widths = (28, 9, 10, 10, 9, 11)
        header = ("system", "aux-layer", "micro-f1", "delta", "p-value", "significant")
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
        for r in self.rows:
            sig = "-" if r.significant is None else ("yes" if r.significant else "no")
            cells = (r.system, r.aux_layer, f"{r.f1:.4f}",
                     "-" if r.delta is None else f"{r.delta:+.4f}",
                     "-" if r.p_value is None else f"{r.p_value:.4f}", sig)
            lines.append("  ".join(c.ljust(w) for c, w in zip(cells, widths)))
        lines.append(f"systems over baseline: {self.n_over_baseline}")
        return "\n".join(lines) + "\n"


def _with_layer(aux: AuxTask, layer: int) -> AuxTask:
    return AuxTask(
        name=aux.name, head_layer=layer, train=aux.train, dev=aux.dev,
        token_column=aux.token_column, label_column=aux.label_column,
        o_label=aux.o_label, scheme=aux.scheme,
        freqbin_variant=aux.freqbin_variant, freqbin_k=aux.freqbin_k,
    )


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def _derive(cfg: ExperimentConfig, aux: list[AuxTask]) -> ExperimentConfig:
    return ExperimentConfig(
        main=cfg.main, aux=aux, model=cfg.model, epochs=cfg.epochs,
        learning_rate=cfg.learning_rate, seed=cfg.seed, sampling=cfg.sampling,
        grid_layers=cfg.grid_layers, grid_pairs=cfg.grid_pairs,
    )


def _significance_vs(baseline: ExperimentResult, result: ExperimentResult,
                     seed: int, iterations: int = 10000):
    return bootstrap_significance(
        baseline.gold_sentences, result.pred_sentences, baseline.pred_sentences,
        o_label=baseline.o_label, iterations=iterations, seed=seed,
    )


def run_grid(cfg: ExperimentConfig, outdir, iterations: int = 10000) -> GridResult:
    """Run the baseline plus every menu system; the [aux.*] sections form
    the menu (each alone at each grid layer, plus frequency-bin/other
    pairings when enabled). The baseline is trained once and shared."""
    if not cfg.main.test:
        raise ValueError("grid runs need a test split on the main task")
    os.makedirs(outdir, exist_ok=True)
    baseline = run_experiment(_derive(cfg, []), os.path.join(outdir, "baseline"))
    rows = [GridRow("baseline", "-", baseline.report.micro_f1_non_o, None, None, None)]
    systems: list[tuple[str, list[AuxTask]]] = []
    for layer in cfg.grid_layers:
        for item in cfg.aux:
            systems.append((f"+{item.name}@h{layer}", [_with_layer(item, layer)]))
        if cfg.grid_pairs:
            freq_items = [a for a in cfg.aux if a.freqbin_variant is not None]
            other_items = [a for a in cfg.aux if a.freqbin_variant is None]
            for fi in freq_items:
                for oi in other_items:
                    systems.append((
                        f"+{oi.name}+{fi.name}@h{layer}",
                        [_with_layer(oi, layer), _with_layer(fi, layer)],
                    ))
    for name, aux in systems:
        result = run_experiment(_derive(cfg, aux), os.path.join(outdir, _slug(name)))
        sig = _significance_vs(baseline, result, cfg.seed, iterations)
        f1 = result.report.micro_f1_non_o
        rows.append(GridRow(
            system=name,
            aux_layer=str(aux[0].head_layer),
            f1=f1,
            delta=f1 - baseline.report.micro_f1_non_o,
            p_value=sig.p_value,
            significant=sig.significant,
        ))
    grid = GridResult(rows)
    with open(os.path.join(outdir, "grid.tsv"), "w", encoding="utf-8") as fh:
        fh.write(grid.to_tsv())
    with open(os.path.join(outdir, "grid.txt"), "w", encoding="utf-8") as fh:
        fh.write(grid.to_text())
    return grid


def compare_pos_sources(cfg: ExperimentConfig, sources: list[AuxTask], outdir,
                        iterations: int = 10000) -> GridResult:
    """One run per tag source with everything else identical; reports each
    source's gap over one shared baseline."""
    if not cfg.main.test:
        raise ValueError("source comparisons need a test split on the main task")
    os.makedirs(outdir, exist_ok=True)
    baseline = run_experiment(_derive(cfg, []), os.path.join(outdir, "baseline"))
    rows = [GridRow("baseline", "-", baseline.report.micro_f1_non_o, None, None, None)]
    for source in sources:
        result = run_experiment(
            _derive(cfg, [source]), os.path.join(outdir, _slug(f"+{source.name}"))
        )
        sig = _significance_vs(baseline, result, cfg.seed, iterations)
        f1 = result.report.micro_f1_non_o
        rows.append(GridRow(
            system=f"+{source.name}",
            aux_layer=str(source.head_layer),
            f1=f1,
            delta=f1 - baseline.report.micro_f1_non_o,
            p_value=sig.p_value,
            significant=sig.significant,
        ))
    table = GridResult(rows)
    with open(os.path.join(outdir, "compare.tsv"), "w", encoding="utf-8") as fh:
        fh.write(table.to_tsv())
    with open(os.path.join(outdir, "compare.txt"), "w", encoding="utf-8") as fh:
        fh.write(table.to_text())
    return table


def run_learning_curve(cfg: ExperimentConfig, fractions, outdir) -> list[tuple[float, EvalReport]]:
    session = build_session(cfg)
    results = learning_curve(session.model_config, session.training_config, fractions)
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "learning-curve.tsv"), "w", encoding="utf-8") as fh:
        fh.write("fraction\tmicro-f1\n")
        for fraction, report in results:
            fh.write(f"{fraction}\t{report.micro_f1_non_o:.6f}\n")
    return results


def run_capacity_sweep(cfg: ExperimentConfig, factors, outdir) -> list[tuple[int, EvalReport]]:
    session = build_session(cfg)
    results = capacity_sweep(session.model_config, session.training_config, factors)
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "capacity-sweep.tsv"), "w", encoding="utf-8") as fh:
        fh.write("width-factor\tmicro-f1\n")
        for factor, report in results:
            fh.write(f"{factor}\t{report.micro_f1_non_o:.6f}\n")
    return results
