"""Training loop: a recurrent cell plus a linear readout on a synthetic task.

An epoch is one pass over a fixed pool of training batches, visited in a
per-epoch shuffled order. Batches, the shuffle and the validation set are
pure functions of their seeds, so a run can be resumed from its epoch
counter and the saved parameters and optimizer moments.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import rng
from ..dynamics import (Parameters, backward_sequence, check_params, forward_sequence,
                        init_params)
from ..errors import NumericFault
from ..taxonomy import CellConfig, check_config, param_count
from .losses import masked_accuracy, mse_loss, softmax_xent_loss
from .optim import OptimizerState, optimizer_step
from .tasks import Batch, TaskSpec

log = logging.getLogger(__name__)


@dataclass
class Model:
    config: CellConfig
    cell: Parameters
    readout: Parameters  # W_y (outputs x n), b_y (outputs,)

    @classmethod
    def create(cls, config: CellConfig, n: int, m: int, outputs: int, seed: int) -> "Model":
        check_config(config)
        cell = init_params(config, n, m, seed)
        s = 1.0 / math.sqrt(n)
        gen = rng.stream(seed, rng.Purpose.INIT, 1)
        readout = Parameters({"W_y": gen.uniform(-s, s, size=(outputs, n)),
                              "b_y": np.zeros(outputs)})
        return cls(config, cell, readout)

    @property
    def n(self) -> int:
        return self.cell.n

    def named_arrays(self) -> dict[str, np.ndarray]:
        arrays = {f"cell.{k}": v for k, v in self.cell.items()}
        arrays.update({f"readout.{k}": v for k, v in self.readout.items()})
        return arrays

    def outputs(self, hs: np.ndarray) -> np.ndarray:
        return hs @ self.readout["W_y"].T + self.readout["b_y"]

    def copy(self) -> "Model":
        return Model(self.config, self.cell.copy(), self.readout.copy())


def task_loss(task: TaskSpec, outputs: np.ndarray, batch: Batch) -> tuple[float, np.ndarray]:
    if task.regression:
        return mse_loss(outputs, batch.targets, batch.mask)
    return softmax_xent_loss(outputs, batch.targets, batch.mask)


def task_metric(task: TaskSpec, outputs: np.ndarray, batch: Batch) -> float:
    """Validation metric: MSE for regression tasks, masked accuracy otherwise."""
    if task.regression:
        return mse_loss(outputs, batch.targets, batch.mask)[0]
    return masked_accuracy(outputs, batch.targets, batch.mask)


def evaluate(model: Model, task: TaskSpec, batch: Batch) -> tuple[float, np.ndarray]:
    states, _ = forward_sequence(model.config, model.cell, list(batch.inputs))
    hs = np.stack([s.h for s in states])
    return task_metric(task, model.outputs(hs), batch), hs


def loss_and_grads(model: Model, task: TaskSpec, batch: Batch
                   ) -> tuple[float, dict[str, np.ndarray]]:
    """Loss on ``batch`` and gradients keyed like ``model.named_arrays()``."""
    states, caches = forward_sequence(model.config, model.cell, list(batch.inputs))
    hs = np.stack([s.h for s in states])
    loss, dout = task_loss(task, model.outputs(hs), batch)
    W_y = model.readout["W_y"]
    grads = {}
    dh = [None if batch.mask[t] == 0 else dout[t] @ W_y for t in range(batch.seq_len)]
    cell_grads, _ = backward_sequence(model.config, model.cell, caches, dh)
    for k, v in cell_grads.items():
        grads[f"cell.{k}"] = v
    live = batch.mask != 0
    grads["readout.W_y"] = np.einsum("tbo,tbn->on", dout[live], hs[live])
    grads["readout.b_y"] = np.sum(dout[live], axis=(0, 1))
    return loss, grads


@dataclass
class TrainRecord:
    epoch: int
    train_loss: float
    val_metric: float
    seconds: float
    param_count: int
    readout_param_count: int = 0


@dataclass
class TrainingState:
    model: Model
    optimizer: OptimizerState
    epoch: int = 0
    records: list[TrainRecord] = field(default_factory=list)


class TrainingFault(NumericFault):
    """Training hit a non-finite value; ``records`` holds the epochs completed before it."""

    def __init__(self, message: str, records: list[TrainRecord], timestep: int | None = None):
        super().__init__(message, timestep)
        self.records = records


@dataclass(frozen=True)
class TrainSettings:
    n: int = 32
    epochs: int = 10
    batches_per_epoch: int = 20
    val_size: int = 256
    init_seed: int = 0
    eval_seed: int = 1
    record_wall_clock: bool = True  # False writes 0.0 so outputs are byte-reproducible


def new_state(config: CellConfig, task: TaskSpec, optimizer: OptimizerState,
              settings: TrainSettings) -> TrainingState:
    model = Model.create(config, settings.n, task.input_dim, task.output_dim,
                         settings.init_seed)
    optimizer.ensure_moments(model.named_arrays())
    return TrainingState(model, optimizer)


def train(config: CellConfig, task: TaskSpec, optimizer: OptimizerState,
          settings: TrainSettings, state: TrainingState | None = None,
          on_epoch: Callable[[TrainingState], None] | None = None) -> TrainingState:
    """Train until ``settings.epochs`` epochs are done, continuing ``state`` if given."""
    task.validate()
    if state is None:
        state = new_state(config, task, optimizer, settings)
    check_params(config, state.model.cell)
    model, opt = state.model, state.optimizer
    cell_count = param_count(config, settings.n, task.input_dim)
    readout_count = model.readout.size

    pool = [task.batch(task.seed, rng.Purpose.TRAIN_BATCH, i)
            for i in range(settings.batches_per_epoch)]
    val = task.batch(settings.eval_seed, rng.Purpose.VALIDATION, 0, settings.val_size)
    arrays = model.named_arrays()

    while state.epoch < settings.epochs:
        start = time.perf_counter()
        order = rng.stream(task.seed, rng.Purpose.SHUFFLE, state.epoch).permutation(len(pool))
        losses = []
        try:
            for j in order:
                # overflow surfaces as a NumericFault below rather than as warnings
                with np.errstate(over="ignore", invalid="ignore"):
                    loss, grads = loss_and_grads(model, task, pool[j])
                if not math.isfinite(loss):
                    raise NumericFault("non-finite training loss")
                if not all(np.all(np.isfinite(g)) for g in grads.values()):
                    raise NumericFault("non-finite gradient")
                losses.append(loss)
                optimizer_step(arrays, grads, opt)
            if not all(np.all(np.isfinite(a)) for a in arrays.values()):
                raise NumericFault("non-finite parameters after update")
            metric, _ = evaluate(model, task, val)
        except NumericFault as exc:
            raise TrainingFault(f"epoch {state.epoch + 1}: {exc}", list(state.records),
                                exc.timestep) from exc
        state.epoch += 1
        seconds = time.perf_counter() - start if settings.record_wall_clock else 0.0
        record = TrainRecord(state.epoch, math.fsum(losses) / len(losses), metric,
                             seconds, cell_count, readout_count)
        state.records.append(record)
        log.debug("epoch %d loss %.6f metric %.6f", record.epoch, record.train_loss, metric)
        if on_epoch is not None:
            on_epoch(state)
    return state
