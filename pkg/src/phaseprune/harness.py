"""Experiment orchestration: train, prune a copy after each step, score it.

One training trajectory is shared by every requested prune variant
(``prune_mode="copy"``). At each evaluation step every variant is applied
to a copy of the live weights and the copy is scored on the test set, so
the ``none`` record is the unpruned ("origin") curve. ``prune_mode=
"permanent"`` instead runs one trajectory per variant and prunes the live
weights after every gradient step.
"""

import csv
import functools
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import SimpleNamespace
from xml.etree import ElementTree as ET

import numpy as np

from . import cvnn, rvnn
from .data import NUM_CLASSES, load_mnist
from .pruning import COMPLEX_VARIANTS, HALF_SCOPES, REAL_VARIANTS, PruneVariant, prune

log = logging.getLogger(__name__)

DEFAULT_LR = {"complex": 0.05, "real": 0.1}
CSV_HEADER = ["step", "variant", "test_accuracy", "train_loss"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    net_kind: str = "complex"
    hidden_dims: list = field(default_factory=lambda: [100])
    lr: float = None
    steps: int = 3000
    batch_size: int = 100
    eval_every: int = 10
    eval_subset: int = 0
    variants: list = None
    seed: int = 0
    prune_mode: str = "copy"
    half_scope: str = "per-matrix"
    data_dir: str = "data/mnist"
    out_dir: str = "runs"

    def __post_init__(self):
        if self.lr is None and self.net_kind in DEFAULT_LR:
            self.lr = DEFAULT_LR[self.net_kind]
        if self.variants is None:
            self.variants = list(COMPLEX_VARIANTS if self.net_kind == "complex" else REAL_VARIANTS)
        self.variants = [v if isinstance(v, PruneVariant) else PruneVariant.parse(v) for v in self.variants]
        self.hidden_dims = [int(h) for h in self.hidden_dims]

    def validate(self):
        if self.net_kind not in ("complex", "real"):
            raise ConfigError(f"net must be 'complex' or 'real', got {self.net_kind!r}")
        if not self.hidden_dims or min(self.hidden_dims) < 1:
            raise ConfigError(f"hidden dims must be a nonempty list of positive sizes, got {self.hidden_dims}")
        if not (isinstance(self.lr, (int, float)) and self.lr > 0 and math.isfinite(self.lr)):
            raise ConfigError(f"lr must be a positive number, got {self.lr!r}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.batch_size < 0 or self.eval_subset < 0:
            raise ConfigError("batch size and eval subset must be >= 0")
        if self.eval_every < 1:
            raise ConfigError(f"eval_every must be >= 1, got {self.eval_every}")
        if not self.variants:
            raise ConfigError("at least one prune variant is required")
        is_complex = self.net_kind == "complex"
        bad = [str(v) for v in self.variants if not (v.for_complex if is_complex else v.for_real)]
        if bad:
            raise ConfigError(f"variants {bad} do not apply to {self.net_kind} networks")
        if len(set(self.variants)) != len(self.variants):
            raise ConfigError("duplicate prune variants")
        if self.prune_mode not in ("copy", "permanent"):
            raise ConfigError(f"prune mode must be 'copy' or 'permanent', got {self.prune_mode!r}")
        if self.half_scope not in HALF_SCOPES:
            raise ConfigError(f"half scope must be one of {HALF_SCOPES}, got {self.half_scope!r}")
        return self

    @property
    def encode(self):
        return self.net_kind

    def layer_dims(self, n_inputs, n_classes=NUM_CLASSES):
        return [n_inputs, *self.hidden_dims, n_classes]


@dataclass(frozen=True)
class TrialRecord:
    step: int
    variant: PruneVariant
    test_accuracy: float
    train_loss: float


_NETS = {
    "complex": SimpleNamespace(
        init=cvnn.init_model,
        forward=cvnn.forward,
        backward=cvnn.backward,
        sgd=cvnn.sgd_step,
    ),
    "real": SimpleNamespace(
        init=rvnn.r_init_model,
        forward=rvnn.r_forward,
        backward=rvnn.r_backward,
        sgd=rvnn.r_sgd_step,
    ),
}


def _mask_seed(seed, step):
    # independent of the init/batch streams so evaluation never touches training
    return np.random.SeedSequence([int(seed), 0x5EED, int(step)])


def accuracy(net, model, data):
    """Fraction of columns whose probability argmax equals the label."""
    probs = net.forward(model, data.x).probs
    return float(np.mean(np.argmax(probs, axis=0) == data.labels))


class _Batches:
    """Seeded epoch-wise shuffled mini-batch indices (0 = full batch)."""

    def __init__(self, m, batch_size, seed):
        self.m = m
        self.size = m if batch_size == 0 else min(batch_size, m)
        self.rng = np.random.default_rng(seed)
        self._order = np.empty(0, dtype=np.int64)
        self._pos = 0

    def next(self):
        if self.size == self.m:
            return None
        if self._pos + self.size > self._order.size:
            self._order = self.rng.permutation(self.m)
            self._pos = 0
        idx = self._order[self._pos : self._pos + self.size]
        self._pos += self.size
        return np.sort(idx)


def _eval_steps(cfg):
    steps = set(range(0, cfg.steps + 1, cfg.eval_every))
    steps.add(cfg.steps)
    return steps


def _eval_set(cfg, test):
    if cfg.eval_subset and cfg.eval_subset < test.size:
        rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 0x7E57]))
        return test.columns(np.sort(rng.choice(test.size, cfg.eval_subset, replace=False)))
    return test


def _trajectory(cfg, net, train, evalset, variants, permanent):
    """Run gradient descent; yield records for ``variants`` at eval steps."""
    ss = np.random.SeedSequence(int(cfg.seed))
    init_seed, batch_seed = ss.spawn(2)
    model = net.init(cfg.layer_dims(train.x.shape[0], train.y.shape[0]), init_seed)
    batches = _Batches(train.size, cfg.batch_size, batch_seed)
    eval_at = _eval_steps(cfg)
    records = []

    def evaluate(step, model, train_loss):
        for v in variants:
            scored = model if permanent else prune(model, v, _mask_seed(cfg.seed, step), cfg.half_scope)
            acc = accuracy(net, scored, evalset)
            records.append(TrialRecord(step, v, acc, train_loss))
        log.info(
            "step %d loss %.4f %s",
            step,
            train_loss,
            " ".join(f"{r.variant}={r.test_accuracy:.4f}" for r in records[-len(variants):]),
        )

    idx = batches.next()
    batch = train if idx is None else train.columns(idx)
    for step in range(0, cfg.steps + 1):
        cache = net.forward(model, batch.x)
        train_loss = cvnn.loss(cache.probs, batch.y)
        if not math.isfinite(train_loss):
            raise FloatingPointError(f"non-finite training loss at step {step}")
        if step in eval_at:
            evaluate(step, model, train_loss)
        if step == cfg.steps:
            break
        model = net.sgd(model, net.backward(model, cache, batch.x, batch.y), cfg.lr)
        if permanent:
            model = prune(model, variants[0], _mask_seed(cfg.seed, step + 1), cfg.half_scope)
        idx = batches.next()
        batch = train if idx is None else train.columns(idx)
    return records, model


def train_and_evaluate(cfg: ExperimentConfig, train=None, test=None):
    """Run one experiment and return its TrialRecords.

    ``train``/``test`` may be passed pre-loaded; otherwise they are read from
    ``cfg.data_dir`` with the encoding matching ``cfg.net_kind``.

    Record semantics: step 0 scores the freshly initialised model and every
    record's ``train_loss`` is the unpruned model's loss on the mini-batch
    it is about to step on.
    """
    cfg.validate()
    if train is None:
        train = load_mnist(cfg.data_dir, "train", cfg.encode)
    if test is None:
        test = load_mnist(cfg.data_dir, "test", cfg.encode)
    if train.is_complex != (cfg.net_kind == "complex") or test.is_complex != train.is_complex:
        raise ConfigError(f"dataset encoding does not match net kind {cfg.net_kind!r}")
    net = _NETS[cfg.net_kind]
    evalset = _eval_set(cfg, test)
    if cfg.prune_mode == "copy":
        records, _ = _trajectory(cfg, net, train, evalset, cfg.variants, permanent=False)
        return records
    records = []
    for v in cfg.variants:
        recs, _ = _trajectory(cfg, net, train, evalset, [v], permanent=True)
        records.extend(recs)
    records.sort(key=lambda r: (r.step, cfg.variants.index(r.variant)))
    return records


def half_mean(records, window=10):
    """Mean RandomHalf accuracy over the last ``window`` evaluations."""
    accs = [r.test_accuracy for r in sorted(records, key=lambda r: r.step) if r.variant is PruneVariant.RANDOM_HALF]
    if len(accs) < window:
        raise ValueError(f"need {window} RandomHalf evaluations, have {len(accs)}")
    return float(np.mean(accs[-window:]))


def benchmark_half(cfg: ExperimentConfig, window=10, train=None, test=None):
    if PruneVariant.RANDOM_HALF not in cfg.variants:
        raise ConfigError("benchmark_half needs the 'half' variant in the config")
    return half_mean(train_and_evaluate(cfg, train, test), window)


def final_accuracy(records, variant):
    """Accuracy of ``variant`` at the last evaluated step."""
    recs = [r for r in records if r.variant is variant]
    if not recs:
        raise KeyError(f"no records for {variant}")
    return max(recs, key=lambda r: r.step).test_accuracy


# -- sweeps -------------------------------------------------------------------


@dataclass
class SweepFailure:
    index: int
    error: str


@functools.lru_cache(maxsize=4)
def _cached_split(data_dir, split, encode):
    return load_mnist(data_dir, split, encode)


def _sweep_worker(cfg):
    try:
        train = _cached_split(cfg.data_dir, "train", cfg.encode)
        test = _cached_split(cfg.data_dir, "test", cfg.encode)
        return train_and_evaluate(cfg, train, test)
    except Exception as exc:
        log.exception("sweep config failed")
        return exc


def sweep_configs(configs, master_seed=0):
    """Assign each config its RNG stream ``master_seed XOR index``."""
    return [replace(cfg, seed=int(master_seed) ^ i) for i, cfg in enumerate(configs)]


def config_tag(index, cfg):
    dims = "-".join(str(h) for h in cfg.hidden_dims)
    return f"config_{index:02d}_{cfg.net_kind}_{dims}"


def run_sweep(configs, parallelism=1, master_seed=0, out_dir=None):
    """Run several configs, isolating failures.

    Returns one entry per config: its list of records, or a ``SweepFailure``.
    With ``out_dir`` set, successful runs are written to ``<tag>.csv``.
    """
    configs = sweep_configs(configs, master_seed)
    if not configs:
        return []
    if parallelism <= 1:
        raw = [_sweep_worker(cfg) for cfg in configs]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            raw = list(pool.map(_sweep_worker, configs))
    results = []
    for i, (cfg, res) in enumerate(zip(configs, raw)):
        if isinstance(res, Exception):
            results.append(SweepFailure(i, f"{type(res).__name__}: {res}"))
            continue
        results.append(res)
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            write_csv(res, Path(out_dir) / f"{config_tag(i, cfg)}.csv")
    return results


# -- persistence ----------------------------------------------------------------


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([r.step, r.variant.value, repr(float(r.test_accuracy)), repr(float(r.train_loss))])
    return buf.getvalue()


def write_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv(records))


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: expected header {CSV_HEADER}, got {header}")
        return [
            TrialRecord(int(step), PruneVariant.parse(variant), float(acc), float(loss))
            for step, variant, acc, loss in reader
        ]


_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def emit_plot(records, path, title=None, width=640, height=420):
    """Write an SVG with one polyline per variant (step vs test accuracy)."""
    if not records:
        raise ValueError("cannot plot an empty record list")
    by_variant = {}
    for r in sorted(records, key=lambda r: r.step):
        by_variant.setdefault(r.variant, []).append((r.step, r.test_accuracy))
    left, right, top, bottom = 60, 150, 30, 50
    pw, ph = width - left - right, height - top - bottom
    s_max = max(r.step for r in records) or 1

    def xy(step, acc):
        return left + pw * step / s_max, top + ph * (1.0 - acc)

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(width), height=str(height),
                     viewBox=f"0 0 {width} {height}")
    if title:
        ET.SubElement(svg, "text", x=str(left), y="18", **{"font-size": "14"}).text = title
    axes = ET.SubElement(svg, "g", stroke="black", fill="none", id="axes")
    ET.SubElement(axes, "line", x1=str(left), y1=str(top + ph), x2=str(left + pw), y2=str(top + ph))
    ET.SubElement(axes, "line", x1=str(left), y1=str(top), x2=str(left), y2=str(top + ph))
    labels = ET.SubElement(svg, "g", **{"font-size": "11", "font-family": "sans-serif"})
    for acc in (0.0, 0.25, 0.5, 0.75, 1.0):
        x, y = xy(0, acc)
        ET.SubElement(labels, "text", x=str(x - 32), y=f"{y + 4:.1f}").text = f"{acc:.2f}"
    for frac in (0.0, 0.5, 1.0):
        x, y = xy(frac * s_max, 0.0)
        ET.SubElement(labels, "text", x=f"{x - 8:.1f}", y=str(y + 16)).text = str(int(round(frac * s_max)))
    ET.SubElement(labels, "text", x=str(left + pw // 2 - 10), y=str(height - 10)).text = "step"
    ET.SubElement(labels, "text", x="8", y=str(top - 10)).text = "test accuracy"
    curves = ET.SubElement(svg, "g", id="curves", fill="none")
    legend = ET.SubElement(svg, "g", id="legend", **{"font-size": "12", "font-family": "sans-serif"})
    for i, (variant, pts) in enumerate(by_variant.items()):
        colour = _PALETTE[i % len(_PALETTE)]
        points = " ".join(f"{x:.2f},{y:.2f}" for x, y in (xy(s, a) for s, a in pts))
        ET.SubElement(curves, "polyline", points=points, stroke=colour, **{"stroke-width": "1.5",
                                                                           "data-variant": variant.value})
        ly = top + 16 * i + 8
        ET.SubElement(legend, "line", x1=str(left + pw + 12), y1=str(ly), x2=str(left + pw + 32), y2=str(ly),
                      stroke=colour, **{"stroke-width": "2"})
        ET.SubElement(legend, "text", x=str(left + pw + 38), y=str(ly + 4)).text = _legend_name(variant)
    ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)


def _legend_name(variant):
    if variant is PruneVariant.NONE:
        return "origin"
    if variant is PruneVariant.RANDOM_HALF:
        return "half"
    return f"only+{variant.value}"
