"""Command-line entry point: dataset splits, training, grid search,
evaluation, and saliency export.

Datasets are directories holding a `meta` text file plus `images.bin` and
`labels.bin`, grouped under a root as <root>/train, <root>/val, <root>/test.

`train` and `grid` read a flat `key = value` config file; '#' comments and
blank lines are allowed, and trailing `key=value` command-line arguments
override file entries.  Unknown keys are rejected, and every offending key
is reported in one message.  Environment variables are never consulted.

Config keys (defaults in parentheses):

  data              dataset root directory                        (required)
  out               output directory for run artifacts            (required)
  arch              mlp | cnn                                     (mlp)
  alpha             Holder exponent, > 1; train only              (required)
  lambda            balance weight, >= 0                          (required)
  lr                SGD learning rate, > 0; train only            (required)
  batch             mini-batch size                               (64)
  k                 discriminator updates per classifier update   (1)
  max_epochs        epoch cap                                     (200)
  patience_window   early-stop window in epochs                   (15)
  min_delta         early-stop improvement threshold              (0.01)
  seed              master seed; the split, init-d, init-c and
                    shuffle streams all derive from it            (0)
  objective         holder | kl                                   (holder)
  reduction         mean | sum                                    (mean)
  d_includes_lambda true | false                                  (true)
  n_positive        positives to draw when split_dir is not set
  split_dir         a make-pu output directory to reuse
  alphas            grid only: comma-separated alpha list         (1.5..2.0)
  lrs               grid only: comma-separated lr list            (0.4..0.8)

Exactly one of n_positive / split_dir must be set.  `grid` takes the alpha
and lr axes from alphas/lrs, so the scalar alpha/lr keys are rejected there.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric
failure during training.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from .divergence import InfiniteDivergenceError
from .metrics import degenerate_metrics
from .models import (
    CnnSpec,
    MlpSpec,
    config_fingerprint,
    load_model,
    saliency,
    save_model,
)
from .pudata import (
    DataError,
    LabeledImageSet,
    PUSplit,
    binarize_dataset,
    draw_positive_indices,
    load_dataset,
    normalize,
)
from .trainer import (
    NumericError,
    TrainConfig,
    best_epoch,
    evaluate,
    grid_csv,
    grid_search,
    history_csv,
    parse_grid_csv,
    substream_seed,
    train,
)

DEFAULT_ALPHAS = (1.5, 1.6, 1.7, 1.8, 1.9, 2.0)
DEFAULT_LRS = (0.4, 0.5, 0.6, 0.7, 0.8)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    """Bad usage, unknown keys, or invalid config values."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise ConfigError(f"{message}\n{self.format_usage().rstrip()}")


_REQUIRED = object()


def _int(s: str) -> int:
    return int(s, 10)


def _float(s: str) -> float:
    v = float(s)
    if not np.isfinite(v):
        raise ValueError("must be finite")
    return v


def _bool(s: str) -> bool:
    if s == "true":
        return True
    if s == "false":
        return False
    raise ValueError("must be true or false")


def _choice(*allowed: str):
    def conv(s: str) -> str:
        if s not in allowed:
            raise ValueError("must be one of " + ", ".join(allowed))
        return s

    return conv


def _float_list(s: str) -> tuple[float, ...]:
    vals = tuple(_float(part) for part in s.split(",") if part.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


_TRAIN_SCHEMA: dict[str, tuple] = {
    "data": (str, _REQUIRED),
    "out": (str, _REQUIRED),
    "arch": (_choice("mlp", "cnn"), "mlp"),
    "alpha": (_float, _REQUIRED),
    "lambda": (_float, _REQUIRED),
    "lr": (_float, _REQUIRED),
    "batch": (_int, 64),
    "k": (_int, 1),
    "max_epochs": (_int, 200),
    "patience_window": (_int, 15),
    "min_delta": (_float, 0.01),
    "seed": (_int, 0),
    "objective": (_choice("holder", "kl"), "holder"),
    "reduction": (_choice("mean", "sum"), "mean"),
    "d_includes_lambda": (_bool, True),
    "n_positive": (_int, None),
    "split_dir": (str, None),
}

_GRID_SCHEMA = {
    k: v for k, v in _TRAIN_SCHEMA.items() if k not in ("alpha", "lr")
}
_GRID_SCHEMA["lambda"] = (_float, _REQUIRED)
_GRID_SCHEMA["alphas"] = (_float_list, DEFAULT_ALPHAS)
_GRID_SCHEMA["lrs"] = (_float_list, DEFAULT_LRS)

_MAKE_PU_SCHEMA = {
    "data": (str, _REQUIRED),
    "out": (str, _REQUIRED),
    "n_positive": (_int, _REQUIRED),
    "seed": (_int, 0),
}

_EVAL_SCHEMA = {
    "checkpoint": (str, _REQUIRED),
    "data": (str, _REQUIRED),
    "split": (_choice("val", "test"), _REQUIRED),
    "out": (str, None),
}

_SALIENCY_SCHEMA = {
    "checkpoint": (str, _REQUIRED),
    "data": (str, _REQUIRED),
    "split": (_choice("train", "val", "test"), "test"),
    "index": (_int, _REQUIRED),
    "out": (str, _REQUIRED),
}


def _parse_pairs(args: list[str], errors: list[str]) -> dict[str, str]:
    raw: dict[str, str] = {}
    for arg in args:
        key, sep, value = arg.partition("=")
        key = key.strip()
        if not sep or not key:
            errors.append(f"expected key=value, got {arg!r}")
            continue
        raw[key] = value.strip()
    return raw


def _read_config_file(path: str, errors: list[str]) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    raw: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        key, sep, value = text.partition("=")
        key = key.strip()
        if not sep or not key:
            errors.append(f"{path}:{lineno}: expected key = value, got {text!r}")
            continue
        if key in raw:
            errors.append(f"{path}:{lineno}: duplicate key {key!r}")
            continue
        raw[key] = value.strip()
    return raw


def _resolve(raw: dict[str, str], schema: dict[str, tuple], errors: list[str]):
    resolved: dict = {}
    for key, value in raw.items():
        if key not in schema:
            errors.append(f"unknown key {key!r}")
            continue
        conv = schema[key][0]
        try:
            resolved[key] = conv(value)
        except ValueError as exc:
            reason = str(exc) or "malformed"
            errors.append(f"invalid value for {key}: {value!r} ({reason})")
    for key, (_, default) in schema.items():
        if key in resolved:
            continue
        if default is _REQUIRED:
            errors.append(f"missing required key {key!r}")
        elif default is not None:
            resolved[key] = default
    return resolved


def _raise_config_errors(errors: list[str]) -> None:
    if errors:
        raise ConfigError("; ".join(errors))


def _check_split_source(resolved: dict, errors: list[str]) -> None:
    has_n = "n_positive" in resolved
    has_dir = "split_dir" in resolved
    if has_n == has_dir:
        errors.append("exactly one of n_positive / split_dir must be set")


def _canonical_text(resolved: dict, drop: tuple[str, ...] = ()) -> str:
    lines = []
    for key in sorted(resolved):
        if key in drop:
            continue
        value = resolved[key]
        if isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, float):
            rendered = repr(value)
        elif isinstance(value, tuple):
            rendered = ",".join(repr(v) for v in value)
        else:
            rendered = str(value)
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _train_config(resolved: dict, alpha: float, lr: float) -> TrainConfig:
    try:
        return TrainConfig(
            alpha=alpha,
            lam=resolved["lambda"],
            lr=lr,
            batch=resolved["batch"],
            k=resolved["k"],
            max_epochs=resolved["max_epochs"],
            patience_window=resolved["patience_window"],
            min_delta=resolved["min_delta"],
            seed=resolved["seed"],
            objective=resolved["objective"],
            reduction=resolved["reduction"],
            d_includes_lambda=resolved["d_includes_lambda"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_part(root: str, part: str) -> LabeledImageSet:
    return binarize_dataset(load_dataset(os.path.join(root, part)))


def _read_index_file(path: str, n: int) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            values = [int(ln) for ln in fh if ln.strip()]
    except OSError as exc:
        raise DataError(f"cannot read split index file: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: non-integer index") from exc
    idx = np.asarray(values, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise DataError(f"{path}: index out of range for {n} samples")
    if len(np.unique(idx)) != len(idx):
        raise DataError(f"{path}: duplicate indices")
    return idx


def _assemble_split(
    resolved: dict,
    train_set: LabeledImageSet,
    val_set: LabeledImageSet,
    test_set: LabeledImageSet,
) -> PUSplit:
    if "split_dir" in resolved:
        sd = resolved["split_dir"]
        pos_idx = _read_index_file(os.path.join(sd, "positives.idx"), len(train_set))
        unl_idx = _read_index_file(os.path.join(sd, "unlabeled.idx"), len(train_set))
        if pos_idx.size == 0 or unl_idx.size == 0:
            raise DataError(f"{sd}: split has an empty side")
        if np.intersect1d(pos_idx, unl_idx).size:
            raise DataError(f"{sd}: positive and unlabeled indices overlap")
        if not np.all(train_set.labels[pos_idx] == 1):
            raise DataError(
                f"{sd}: split marks non-positive samples as positives; "
                "it was built for different data"
            )
        return PUSplit(
            positives=train_set.images[pos_idx],
            unlabeled=train_set.images[unl_idx],
            unlabeled_truth=train_set.labels[unl_idx].copy(),
            val=val_set,
            test=test_set,
            seed=resolved["seed"],
            positive_indices=pos_idx,
            unlabeled_indices=unl_idx,
        )
    from .pudata import make_pu_split

    return make_pu_split(
        train_set,
        resolved["n_positive"],
        substream_seed(resolved["seed"], "split"),
        val_set,
        test_set,
    )


def _arch_spec(resolved: dict, train_set: LabeledImageSet):
    _, h, w, c = train_set.images.shape
    if resolved["arch"] == "mlp":
        return MlpSpec(input_dim=h * w * c)
    return CnnSpec(in_h=h, in_w=w, in_c=c)


def _metric_lines(prefix: str, cm, acc, prec, rec, f1v) -> list[str]:
    flags = degenerate_metrics(cm)
    return [
        f"{prefix}accuracy = {acc!r}",
        f"{prefix}precision = {prec!r}",
        f"{prefix}recall = {rec!r}",
        f"{prefix}f1 = {f1v!r}",
        f"{prefix}degenerate = {';'.join(sorted(flags)) if flags else '-'}",
    ]


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def cmd_make_pu(pairs: list[str]) -> int:
    errors: list[str] = []
    raw = _parse_pairs(pairs, errors)
    resolved = _resolve(raw, _MAKE_PU_SCHEMA, errors)
    _raise_config_errors(errors)

    ds = _load_part(resolved["data"], "train")
    pos_idx, unl_idx = draw_positive_indices(
        ds.labels, resolved["n_positive"], substream_seed(resolved["seed"], "split")
    )
    out = resolved["out"]
    os.makedirs(out, exist_ok=True)
    _write_text(
        os.path.join(out, "positives.idx"),
        "\n".join(str(i) for i in pos_idx) + "\n",
    )
    _write_text(
        os.path.join(out, "unlabeled.idx"),
        "\n".join(str(i) for i in unl_idx) + "\n",
    )
    manifest = [
        f"dataset = {ds.name}",
        f"n_train = {len(ds)}",
        f"n_positive = {len(pos_idx)}",
        f"n_unlabeled = {len(unl_idx)}",
        f"seed = {resolved['seed']}",
        f"label_offset = {ds.label_offset}",
    ]
    _write_text(os.path.join(out, "manifest"), "\n".join(manifest) + "\n")
    print(
        f"{ds.name}: {len(pos_idx)} positives, {len(unl_idx)} unlabeled -> {out}"
    )
    return EXIT_OK


def _resolved_run_config(config_path: str, overrides: list[str], schema):
    errors: list[str] = []
    raw = _read_config_file(config_path, errors)
    raw.update(_parse_pairs(overrides, errors))
    resolved = _resolve(raw, schema, errors)
    if not errors:
        _check_split_source(resolved, errors)
    _raise_config_errors(errors)
    return resolved


def cmd_train(config_path: str, overrides: list[str]) -> int:
    resolved = _resolved_run_config(config_path, overrides, _TRAIN_SCHEMA)
    cfg = _train_config(resolved, resolved["alpha"], resolved["lr"])
    canonical = _canonical_text(resolved)
    # the fingerprint identifies what is trained; where artifacts land
    # must not change it, so identical runs share checkpoint bytes
    fingerprint = config_fingerprint(_canonical_text(resolved, drop=("out",)))

    train_set = _load_part(resolved["data"], "train")
    val_set = _load_part(resolved["data"], "val")
    test_set = _load_part(resolved["data"], "test")
    split = _assemble_split(resolved, train_set, val_set, test_set)
    arch = _arch_spec(resolved, train_set)

    start = time.perf_counter()
    classifier, history = train(cfg, split, arch)
    wall = time.perf_counter() - start

    out = resolved["out"]
    os.makedirs(out, exist_ok=True)
    _write_text(os.path.join(out, "history.csv"), history_csv(history))
    save_model(classifier, os.path.join(out, "checkpoint.bin"), fingerprint)

    best = best_epoch(history)
    test_metrics = evaluate(classifier, test_set.images, test_set.labels)
    lines = [
        "command = train",
        f"config_hash = {fingerprint}",
        canonical.rstrip("\n"),
        f"epochs_run = {len(history)}",
        f"best_epoch = {best.epoch}",
        f"val_accuracy = {best.accuracy!r}",
        f"val_precision = {best.precision!r}",
        f"val_recall = {best.recall!r}",
        f"val_f1 = {best.f1!r}",
        *_metric_lines("test_", *test_metrics),
        f"wall_time_s = {wall:.3f}",
        f"finished_at = {_utc_now()}",
    ]
    _write_text(os.path.join(out, "summary.txt"), "\n".join(lines) + "\n")
    print(
        f"best epoch {best.epoch}: val_f1 {best.f1!r}, "
        f"test_f1 {test_metrics[4]!r} -> {out}"
    )
    return EXIT_OK


def cmd_grid(config_path: str, overrides: list[str]) -> int:
    resolved = _resolved_run_config(config_path, overrides, _GRID_SCHEMA)
    alphas, lrs = resolved["alphas"], resolved["lrs"]
    template = _train_config(resolved, alphas[0], lrs[0])
    canonical = _canonical_text(resolved)
    fingerprint = config_fingerprint(_canonical_text(resolved, drop=("out",)))

    train_set = _load_part(resolved["data"], "train")
    val_set = _load_part(resolved["data"], "val")
    test_set = _load_part(resolved["data"], "test")
    split = _assemble_split(resolved, train_set, val_set, test_set)
    arch = _arch_spec(resolved, train_set)

    out = resolved["out"]
    os.makedirs(out, exist_ok=True)
    grid_path = os.path.join(out, "grid.csv")

    prior = {}
    if os.path.exists(grid_path):
        with open(grid_path, encoding="utf-8") as fh:
            existing = parse_grid_csv(fh.read())
        prior = {
            (c.alpha, c.lr): c for c in existing.cells if c.record is not None
        }

    start = time.perf_counter()
    result = grid_search(
        alphas,
        lrs,
        template,
        split,
        arch,
        cell_done=lambda _cell, partial: _write_text(grid_path, grid_csv(partial)),
        skip=lambda a, lr: prior.get((a, lr)),
    )
    wall = time.perf_counter() - start
    _write_text(grid_path, grid_csv(result))

    n_failed = sum(1 for c in result.cells if c.record is None)
    lines = [
        "command = grid",
        f"config_hash = {fingerprint}",
        canonical.rstrip("\n"),
        f"cells = {len(result.cells)}",
        f"cells_failed = {n_failed}",
        f"cells_resumed = {len(prior)}",
    ]
    for alpha in result.alphas():
        cell = result.best_for_alpha(alpha)
        if cell is None:
            lines.append(f"best_for_alpha {alpha!r} = none (all cells failed)")
        else:
            r = cell.record
            lines.append(
                f"best_for_alpha {alpha!r} = lr {cell.lr!r} epoch {r.epoch} "
                f"f1 {r.f1!r} accuracy {r.accuracy!r}"
            )
    lines += [f"wall_time_s = {wall:.3f}", f"finished_at = {_utc_now()}"]
    _write_text(os.path.join(out, "summary.txt"), "\n".join(lines) + "\n")
    print(f"{len(result.cells)} cells ({n_failed} failed) -> {grid_path}")
    return EXIT_OK


def _load_checkpoint(path: str):
    try:
        return load_model(path)
    except OSError as exc:
        raise DataError(f"cannot read checkpoint: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def cmd_eval(pairs: list[str]) -> int:
    errors: list[str] = []
    raw = _parse_pairs(pairs, errors)
    resolved = _resolve(raw, _EVAL_SCHEMA, errors)
    _raise_config_errors(errors)

    model, fingerprint = _load_checkpoint(resolved["checkpoint"])
    ds = _load_part(resolved["data"], resolved["split"])
    try:
        cm, acc, prec, rec, f1v = evaluate(model, ds.images, ds.labels)
    except ValueError as exc:
        raise DataError(f"checkpoint does not fit this dataset: {exc}") from exc

    lines = [
        f"checkpoint = {resolved['checkpoint']}",
        f"config_hash = {fingerprint}",
        f"dataset = {ds.name}",
        f"split = {resolved['split']}",
        f"n = {len(ds)}",
        "threshold = 0.5",
        f"tp = {cm.tp}",
        f"fp = {cm.fp}",
        f"tn = {cm.tn}",
        f"fn = {cm.fn}",
        *_metric_lines("", cm, acc, prec, rec, f1v),
    ]
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)
    if "out" in resolved:
        _write_text(resolved["out"], report)
    return EXIT_OK


def cmd_saliency(pairs: list[str]) -> int:
    errors: list[str] = []
    raw = _parse_pairs(pairs, errors)
    resolved = _resolve(raw, _SALIENCY_SCHEMA, errors)
    _raise_config_errors(errors)

    model, _ = _load_checkpoint(resolved["checkpoint"])
    ds = load_dataset(os.path.join(resolved["data"], resolved["split"]))
    index = resolved["index"]
    if not 0 <= index < len(ds):
        raise DataError(f"index {index} out of range for {len(ds)} samples")

    try:
        heat = saliency(model, normalize(ds.images[index]))
    except ValueError as exc:
        raise DataError(f"checkpoint does not fit this dataset: {exc}") from exc
    h, w = heat.shape
    gray = np.rint(heat * 255.0).astype(np.uint8)
    with open(resolved["out"], "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())
    print(f"{w}x{h} saliency map -> {resolved['out']}")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="hdpan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    sp = sub.add_parser("make-pu", help="draw and store a labeled-positive split")
    sp.add_argument("pairs", nargs="*", metavar="key=value")

    sp = sub.add_parser("train", help="train from a config file")
    sp.add_argument("config")
    sp.add_argument("pairs", nargs="*", metavar="key=value")

    sp = sub.add_parser("grid", help="sweep the alpha x lr grid")
    sp.add_argument("config")
    sp.add_argument("pairs", nargs="*", metavar="key=value")

    sp = sub.add_parser("eval", help="score a checkpoint on val or test")
    sp.add_argument("pairs", nargs="*", metavar="key=value")

    sp = sub.add_parser("saliency", help="export an input-gradient heatmap (PGM)")
    sp.add_argument("pairs", nargs="*", metavar="key=value")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command == "make-pu":
            return cmd_make_pu(ns.pairs)
        if ns.command == "train":
            return cmd_train(ns.config, ns.pairs)
        if ns.command == "grid":
            return cmd_grid(ns.config, ns.pairs)
        if ns.command == "eval":
            return cmd_eval(ns.pairs)
        return cmd_saliency(ns.pairs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, InfiniteDivergenceError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
