"""Alternating adversarial training with mini-batching and grid search.

Each training step samples a positive and an unlabeled mini-batch, updates
the discriminator k times by descending loss_D = -V, then samples a fresh
unlabeled mini-batch and updates the classifier once by descending
loss_C = +V.  An epoch is ceil(|unlabeled| / batch) steps; after each epoch
the classifier is scored on the validation set and the checkpoint with the
best validation F1 is kept.  Mini-batches partition a shuffled index order
with no replacement inside a pass; the order reshuffles when a pass is
exhausted.  All randomness derives from the config seed through named
sub-streams, so a (config, data) pair replays bit-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import objective as obj
from .compute import sgd_step
from .divergence import HolderExponents, InfiniteDivergenceError
from .metrics import accuracy, confusion, f1, precision, recall
from .models import CnnSpec, MlpSpec, Model, build_cnn, build_mlp
from .objective import BatchView
from .pudata import PUSplit, TrainView, is_binary, normalize

_STREAMS = {"split": 11, "init-d": 23, "init-c": 37, "shuffle": 53}

_EVAL_CHUNK = 512


class NumericError(RuntimeError):
    """Training produced non-finite parameters or an infinite divergence."""


@dataclass
class TrainConfig:
    alpha: float
    lam: float
    lr: float
    batch: int = 64
    k: int = 1
    max_epochs: int = 200
    patience_window: int = 15
    min_delta: float = 0.01
    seed: int = 0
    objective: str = "holder"  # "holder" or "kl"
    reduction: str = "mean"  # "sum" reproduces the raw summed objective
    d_includes_lambda: bool = True

    def __post_init__(self):
        if self.batch < 1 or self.k < 1 or self.max_epochs < 1:
            raise ValueError("batch, k, and max_epochs must be >= 1")
        if self.patience_window < 1:
            raise ValueError(f"patience_window must be >= 1, got {self.patience_window}")
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if not self.lr > 0.0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if not (np.isfinite(self.lam) and self.lam >= 0.0):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")
        if self.objective not in ("holder", "kl"):
            raise ValueError(f"objective must be holder or kl, got {self.objective!r}")
        if self.reduction not in ("mean", "sum"):
            raise ValueError(f"reduction must be mean or sum, got {self.reduction!r}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    value: float
    accuracy: float
    precision: float
    recall: float
    f1: float


def substream_seed(seed: int, name: str) -> int:
    """Deterministic per-purpose seed derived from the single config seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_STREAMS[name],))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class _Sampler:
    """Index batches partitioning a shuffled order, reshuffled per pass."""

    def __init__(self, n: int, batch: int, rng: np.random.Generator):
        self.n = n
        self.batch = batch
        self.rng = rng
        self._order = rng.permutation(n)
        self._pos = 0

    def next(self) -> np.ndarray:
        if self._pos >= self.n:
            self._order = self.rng.permutation(self.n)
            self._pos = 0
        out = self._order[self._pos : self._pos + self.batch]
        self._pos += self.batch
        return out


def build_model(arch, seed: int, dtype=np.float32) -> Model:
    if isinstance(arch, MlpSpec):
        return build_mlp(arch, seed, dtype=dtype)
    if isinstance(arch, CnnSpec):
        return build_cnn(seed, dtype=dtype, spec=arch)
    raise TypeError(f"arch must be MlpSpec or CnnSpec, got {type(arch)!r}")


def evaluate(model: Model, images: np.ndarray, truths: np.ndarray, threshold=0.5):
    """Confusion-matrix metrics of a model on normalized image data."""
    probs = predict(model, images)
    cm = confusion(probs, truths, threshold)
    return cm, accuracy(cm), precision(cm), recall(cm), f1(cm)


def predict(model: Model, images: np.ndarray) -> np.ndarray:
    """Forward pass over 8-bit images in evaluation-sized chunks."""
    x = normalize(images, dtype=model.params[0].value.dtype)
    outs = [
        model.forward(x[i : i + _EVAL_CHUNK]) for i in range(0, len(x), _EVAL_CHUNK)
    ]
    return np.concatenate(outs) if outs else np.empty(0)


def early_stop(
    history: Sequence, window: int = 15, min_delta: float = 0.01
) -> bool:
    """Stop when the best F1 of the last `window` epochs beats the best
    before them by less than min_delta (strict)."""
    f1s = [getattr(r, "f1", r) for r in history]
    if len(f1s) <= window:
        return False
    return max(f1s[-window:]) - max(f1s[:-window]) < min_delta


def _check_finite(model: Model, who: str, epoch: int, step: int) -> None:
    for p in model.params:
        if not np.all(np.isfinite(p.value)):
            raise NumericError(
                f"non-finite parameters in {who} at epoch {epoch} step {step}"
            )


def train(
    cfg: TrainConfig,
    data: PUSplit | TrainView,
    arch,
    step_hook: Callable[[str], None] | None = None,
) -> tuple[Model, list[EpochRecord]]:
    """Run the alternating loop; returns (best-F1 classifier, history).

    The classifier comes back with the parameters of the epoch whose
    validation F1 was highest (earliest such epoch on ties).  step_hook, if
    given, is called with "D" or "C" after each parameter update.
    """
    view = data.train_view() if isinstance(data, PUSplit) else data
    if len(view.positives) == 0 or len(view.unlabeled) == 0:
        raise ValueError("positive and unlabeled sets must be non-empty")
    if not is_binary(view.val.labels) or not is_binary(view.test.labels):
        raise ValueError("val/test labels must be binary")

    discriminator = build_model(arch, substream_seed(cfg.seed, "init-d"))
    classifier = build_model(arch, substream_seed(cfg.seed, "init-c"))
    dtype = classifier.params[0].value.dtype

    pos_x = normalize(view.positives, dtype=dtype)
    unl_x = normalize(view.unlabeled, dtype=dtype)

    exps = HolderExponents.from_alpha(cfg.alpha)
    if cfg.objective == "holder":
        value_fn, d_grads, c_grads = obj.hdpan_value, obj.d_output_grads, obj.c_output_grads
    else:
        value_fn, d_grads, c_grads = obj.pan_kl_value, obj.pan_kl_d_grads, obj.pan_kl_c_grads

    shuffle_rng = np.random.default_rng(substream_seed(cfg.seed, "shuffle"))
    pos_sampler = _Sampler(len(pos_x), cfg.batch, shuffle_rng)
    unl_sampler = _Sampler(len(unl_x), cfg.batch, shuffle_rng)
    steps_per_epoch = math.ceil(len(unl_x) / cfg.batch)

    history: list[EpochRecord] = []
    best_f1 = -1.0
    best_params = None

    for epoch in range(1, cfg.max_epochs + 1):
        value_sum = 0.0
        value_n = 0
        for step in range(steps_per_epoch):
            for _ in range(cfg.k):
                pos_idx = pos_sampler.next()
                unl_idx = unl_sampler.next()
                d_all = discriminator.forward(
                    np.concatenate([pos_x[pos_idx], unl_x[unl_idx]])
                )
                c_unl = classifier.forward(unl_x[unl_idx])
                bv = BatchView(
                    d_all[: len(pos_idx)], d_all[len(pos_idx) :], c_unl, cfg.lam, exps
                )
                try:
                    value_sum += value_fn(bv, cfg.reduction)
                    g = d_grads(bv, cfg.reduction, cfg.d_includes_lambda)
                except InfiniteDivergenceError as exc:
                    raise NumericError(
                        f"infinite divergence at epoch {epoch} step {step}; "
                        f"pos_idx={pos_idx.tolist()} unl_idx={unl_idx.tolist()}"
                    ) from exc
                value_n += 1
                discriminator.backward(g)
                sgd_step(discriminator.params, cfg.lr)
                if step_hook:
                    step_hook("D")

            unl_idx = unl_sampler.next()
            d_unl = discriminator.forward(unl_x[unl_idx])
            c_unl = classifier.forward(unl_x[unl_idx])
            bv = BatchView(np.empty(0), d_unl, c_unl, cfg.lam, exps)
            try:
                g_c = c_grads(bv, cfg.reduction)
            except InfiniteDivergenceError as exc:
                raise NumericError(
                    f"infinite divergence at epoch {epoch} step {step}; "
                    f"unl_idx={unl_idx.tolist()}"
                ) from exc
            classifier.backward(g_c)
            sgd_step(classifier.params, cfg.lr)
            if step_hook:
                step_hook("C")
            _check_finite(discriminator, "discriminator", epoch, step)
            _check_finite(classifier, "classifier", epoch, step)

        _, acc, prec, rec, f1_score = evaluate(
            classifier, view.val.images, view.val.labels
        )
        history.append(
            EpochRecord(epoch, value_sum / max(value_n, 1), acc, prec, rec, f1_score)
        )
        if f1_score > best_f1:
            best_f1 = f1_score
            best_params = [p.value.copy() for p in classifier.params]
        if early_stop(history, cfg.patience_window, cfg.min_delta):
            break

    if best_params is not None:
        for p, v in zip(classifier.params, best_params):
            p.value = v
            p.grad = np.zeros_like(v)
    return classifier, history


@dataclass
class GridCell:
    alpha: float
    lr: float
    record: EpochRecord | None = None
    error: str | None = None


@dataclass
class GridResult:
    cells: list[GridCell] = field(default_factory=list)

    def best_for_alpha(self, alpha: float) -> GridCell | None:
        """Best cell at this alpha: max F1, ties to higher accuracy, then
        lower lr."""
        ok = [c for c in self.cells if c.alpha == alpha and c.record is not None]
        if not ok:
            return None
        return max(ok, key=lambda c: (c.record.f1, c.record.accuracy, -c.lr))

    def alphas(self) -> list[float]:
        seen: list[float] = []
        for c in self.cells:
            if c.alpha not in seen:
                seen.append(c.alpha)
        return seen


def best_epoch(history: Iterable[EpochRecord]) -> EpochRecord:
    """Earliest epoch attaining the maximum validation F1."""
    best = None
    for rec in history:
        if best is None or rec.f1 > best.f1:
            best = rec
    if best is None:
        raise ValueError("empty history")
    return best


def grid_search(
    alphas: Sequence[float],
    lrs: Sequence[float],
    cfg_template: TrainConfig,
    data,
    arch,
    cell_done: Callable[[GridCell, GridResult], None] | None = None,
    skip: Callable[[float, float], GridCell | None] | None = None,
) -> GridResult:
    """Train one cell per (alpha, lr), all with the template's seed.

    A failing cell is recorded with its error and the grid continues.
    `skip` lets a caller substitute an already-completed cell (resume);
    `cell_done` observes each newly computed cell along with the partial
    result so far (incremental checkpointing).
    """
    if not alphas or not lrs:
        raise ValueError("alpha and lr grids must be non-empty")
    result = GridResult()
    for alpha in alphas:
        for lr in lrs:
            prior = skip(alpha, lr) if skip else None
            if prior is not None:
                result.cells.append(prior)
                continue
            cfg = replace(cfg_template, alpha=alpha, lr=lr)
            try:
                _, history = train(cfg, data, arch)
                cell = GridCell(alpha, lr, record=best_epoch(history))
            except Exception as exc:  # cell failures recorded, grid continues
                cell = GridCell(alpha, lr, error=f"{type(exc).__name__}: {exc}")
            result.cells.append(cell)
            if cell_done:
                cell_done(cell, result)
    return result


def history_csv(history: Iterable[EpochRecord]) -> str:
    """Per-epoch CSV with a header row; floats use shortest-roundtrip repr."""
    lines = ["epoch,value,accuracy,precision,recall,f1"]
    for r in history:
        lines.append(
            f"{r.epoch},{r.value!r},{r.accuracy!r},{r.precision!r},"
            f"{r.recall!r},{r.f1!r}"
        )
    return "\n".join(lines) + "\n"


GRID_CSV_HEADER = (
    "alpha,lr,best_epoch,value,accuracy,precision,recall,f1,best_for_alpha,error"
)


def grid_csv(result: GridResult) -> str:
    """One row per grid cell, best-per-alpha rows flagged."""
    best = {a: result.best_for_alpha(a) for a in result.alphas()}
    lines = [GRID_CSV_HEADER]
    for c in result.cells:
        flag = int(best.get(c.alpha) is c)
        if c.record is None:
            note = (c.error or "").replace(",", ";").replace("\n", " ")
            lines.append(f"{c.alpha!r},{c.lr!r},,,,,,,{flag},{note}")
        else:
            r = c.record
            lines.append(
                f"{c.alpha!r},{c.lr!r},{r.epoch},{r.value!r},{r.accuracy!r},"
                f"{r.precision!r},{r.recall!r},{r.f1!r},{flag},"
            )
    return "\n".join(lines) + "\n"


def parse_grid_csv(text: str) -> GridResult:
    """Inverse of grid_csv for resuming an interrupted grid."""
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != GRID_CSV_HEADER:
        raise ValueError("not a grid CSV (header mismatch)")
    result = GridResult()
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 10:
            raise ValueError(f"malformed grid row: {ln!r}")
        alpha, lr = float(parts[0]), float(parts[1])
        if parts[2]:
            rec = EpochRecord(
                epoch=int(parts[2]),
                value=float(parts[3]),
                accuracy=float(parts[4]),
                precision=float(parts[5]),
                recall=float(parts[6]),
                f1=float(parts[7]),
            )
            result.cells.append(GridCell(alpha, lr, record=rec))
        else:
            result.cells.append(GridCell(alpha, lr, error=parts[9] or "unknown"))
    return result
