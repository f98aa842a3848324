"""Training runs and variant comparisons with their on-disk outputs."""

from __future__ import annotations

import concurrent.futures
import json
import logging
import os
import platform
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__, rng
from ..errors import ConfigError, NumericFault, SlimRNNError
from ..taxonomy import param_count
from ..training.loop import TrainingFault, TrainingState, TrainRecord, train
from .checkpoint import (checkpoint_to_state, load_checkpoint, save_checkpoint,
                         state_to_checkpoint)
from .config import ExperimentConfig

log = logging.getLogger(__name__)

CURVE_HEADER = "epoch,train_loss,val_metric,seconds,param_count"
CURVE_FILE = "curve.csv"
CHECKPOINT_FILE = "checkpoint.bin"
MANIFEST_FILE = "manifest.json"
COMPARE_FILE = "compare.csv"
THREADS_ENV = "SLIMRNN_THREADS"


def fmt(x: float) -> str:
    return f"{x:.9g}"


def curve_text(records: list[TrainRecord]) -> str:
    lines = [CURVE_HEADER]
    for r in records:
        lines.append(f"{r.epoch},{fmt(r.train_loss)},{fmt(r.val_metric)},"
                     f"{fmt(r.seconds)},{r.param_count}")
    return "\n".join(lines) + "\n"


def write_curve(path: Path, records: list[TrainRecord]) -> None:
    path.write_text(curve_text(records), encoding="utf-8")


def manifest(config: ExperimentConfig, state: TrainingState | None, status: str) -> dict:
    task = config.task_spec()
    cell_config = config.cell_config()
    return {
        "variant": config.experiment.variant,
        "status": status,
        "config_hash": config.config_hash(),
        "resume_hash": config.resume_hash(),
        "rng": rng.describe(),
        "cell_param_count": param_count(cell_config, config.experiment.n, task.input_dim),
        "readout_param_count": (config.experiment.n + 1) * task.output_dim,
        "epochs_completed": 0 if state is None else state.epoch,
        "versions": {"slimrnn": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "threads": threads(),
        "files": [CURVE_FILE, CHECKPOINT_FILE],
    }


def threads() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0, got {value}")
    return value


@dataclass
class RunResult:
    state: TrainingState | None
    records: list[TrainRecord]
    status: str          # "ok" or "numeric_fault"
    message: str = ""


def run_training(config: ExperimentConfig, out_dir: Path | str,
                 resume: Path | str | None = None) -> RunResult:
    """Train per ``config`` and write curve, checkpoint and manifest into ``out_dir``.

    On a numeric fault the partial curve and manifest are still written and the
    fault is re-raised.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cell_config = config.cell_config()
    task = config.task_spec()
    settings = config.train_settings()
    state = None
    if resume is not None:
        state = checkpoint_to_state(load_checkpoint(resume), config)
    try:
        state = train(cell_config, task, config.optimizer_state(), settings, state)
    except TrainingFault as fault:
        write_curve(out / CURVE_FILE, fault.records)
        _write_manifest(out, manifest(config, None, "numeric_fault"))
        raise
    write_curve(out / CURVE_FILE, state.records)
    save_checkpoint(out / CHECKPOINT_FILE, state_to_checkpoint(config, state))
    _write_manifest(out, manifest(config, state, "ok"))
    return RunResult(state, state.records, "ok")


def _write_manifest(out: Path, data: dict) -> None:
    (out / MANIFEST_FILE).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")


@dataclass
class CompareRow:
    variant: str
    params: int
    final_metric: float | None
    epochs_to_threshold: int | None
    seconds: float
    status: str

    def csv(self) -> str:
        metric = "" if self.final_metric is None else fmt(self.final_metric)
        reached = "" if self.epochs_to_threshold is None else str(self.epochs_to_threshold)
        return f"{self.variant},{self.params},{metric},{reached},{fmt(self.seconds)},{self.status}"


COMPARE_HEADER = "variant,params,final_metric,epochs_to_threshold,seconds,status"


def epochs_to_threshold(records: list[TrainRecord], threshold: float,
                        lower_is_better: bool) -> int | None:
    for r in records:
        if (r.val_metric < threshold) if lower_is_better else (r.val_metric >= threshold):
            return r.epoch
    return None


def _compare_one(config_text: str, base_dir: str, variant: str, out_dir: str) -> CompareRow:
    config = ExperimentConfig.from_text(config_text, base_dir)
    config.experiment.variant = variant
    config.validate()
    task = config.task_spec()
    count = param_count(config.cell_config(), config.experiment.n, task.input_dim)
    start = time.perf_counter()
    try:
        result = run_training(config, out_dir)
        records, status = result.records, "ok"
    except NumericFault as fault:
        records, status = getattr(fault, "records", []), "numeric_fault"
    except SlimRNNError as exc:
        log.error("variant %s failed: %s", variant, exc)
        records, status = [], "error"
    seconds = time.perf_counter() - start if config.experiment.record_wall_clock else 0.0
    final = records[-1].val_metric if records else None
    reached = epochs_to_threshold(records, config.experiment.threshold, task.regression)
    return CompareRow(variant, count, final, reached, seconds, status)


def run_compare(config: ExperimentConfig, out_dir: Path | str) -> list[CompareRow]:
    """Train every listed variant on the same task, seeds and optimizer.

    Rows follow the order of ``experiment.variants``; a failing variant is
    recorded and does not stop the others.
    """
    variants = config.experiment.variants
    if len(variants) < 2:
        raise ConfigError("compare needs at least two variants in experiment.variants")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(config.to_text(), str(config.base_dir), v, str(out / f"{k:02d}_{v}"))
            for k, v in enumerate(variants)]
    workers = threads()
    if workers == 0:
        rows = [_compare_one(*job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_compare_one, *zip(*jobs)))
    text = "\n".join([COMPARE_HEADER] + [row.csv() for row in rows]) + "\n"
    (out / COMPARE_FILE).write_text(text, encoding="utf-8")
    return rows
