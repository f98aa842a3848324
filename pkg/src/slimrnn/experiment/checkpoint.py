"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"SLIMRNN1"                      magic, 8 bytes
    u32 version
    u32 length, UTF-8 bytes          config snapshot
    repeated until the trailer:
        u32 name length, UTF-8 name
        u64 element count
        float64 elements
    u32 CRC-32 of every preceding byte

Group shapes are not stored; they follow from the config snapshot.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dynamics import Parameters, param_layout
from ..errors import (CheckpointError, CheckpointIntegrityError, CheckpointVersionError,
                      ConfigError)
from ..training.loop import Model, TrainingState, TrainRecord
from ..training.optim import OptimizerKind
from .config import ExperimentConfig

MAGIC = b"SLIMRNN1"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    config_text: str
    groups: dict[str, np.ndarray] = field(default_factory=dict)
    version: int = FORMAT_VERSION

    def to_bytes(self) -> bytes:
        out = bytearray(MAGIC)
        out += struct.pack("<I", self.version)
        snapshot = self.config_text.encode("utf-8")
        out += struct.pack("<I", len(snapshot)) + snapshot
        for name, values in self.groups.items():
            encoded = name.encode("utf-8")
            flat = np.ascontiguousarray(values, dtype="<f8").ravel()
            out += struct.pack("<I", len(encoded)) + encoded
            out += struct.pack("<Q", flat.size) + flat.tobytes()
        out += struct.pack("<I", zlib.crc32(out) & 0xFFFFFFFF)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Checkpoint":
        if len(data) < len(MAGIC) + 12 or data[:len(MAGIC)] != MAGIC:
            raise CheckpointIntegrityError("not a checkpoint file (bad magic or truncated)")
        body, trailer = data[:-4], data[-4:]
        (version,) = struct.unpack_from("<I", data, len(MAGIC))
        if version != FORMAT_VERSION:
            raise CheckpointVersionError(
                f"checkpoint format version {version}, expected {FORMAT_VERSION}")
        if struct.unpack("<I", trailer)[0] != zlib.crc32(body) & 0xFFFFFFFF:
            raise CheckpointIntegrityError("checkpoint CRC mismatch (truncated or corrupted)")
        try:
            pos = len(MAGIC) + 4
            (length,) = struct.unpack_from("<I", body, pos)
            pos += 4
            config_text = body[pos:pos + length].decode("utf-8")
            pos += length
            groups = {}
            while pos < len(body):
                (length,) = struct.unpack_from("<I", body, pos)
                pos += 4
                name = body[pos:pos + length].decode("utf-8")
                pos += length
                (count,) = struct.unpack_from("<Q", body, pos)
                pos += 8
                end = pos + 8 * count
                if end > len(body):
                    raise CheckpointIntegrityError(f"group {name!r} runs past end of file")
                groups[name] = np.frombuffer(body[pos:end], dtype="<f8").astype(np.float64)
                pos = end
        except (struct.error, UnicodeDecodeError) as exc:
            raise CheckpointIntegrityError(f"malformed checkpoint: {exc}") from None
        return cls(config_text, groups, version)


def save_checkpoint(path: Path | str, checkpoint: Checkpoint) -> None:
    Path(path).write_bytes(checkpoint.to_bytes())


def load_checkpoint(path: Path | str) -> Checkpoint:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    return Checkpoint.from_bytes(data)


_CURVE_WIDTH = 6


def state_to_checkpoint(config: ExperimentConfig, state: TrainingState) -> Checkpoint:
    groups: dict[str, np.ndarray] = {}
    for name, value in state.model.named_arrays().items():
        groups[name] = value
    opt = state.optimizer
    if opt.kind is OptimizerKind.ADAM:
        for name in state.model.named_arrays():
            groups[f"adam.first.{name}"] = opt.first[name]
            groups[f"adam.second.{name}"] = opt.second[name]
    groups["state.counters"] = np.array([state.epoch, opt.step], dtype=float)
    # streams are keyed by (seed, purpose, index); the shuffle stream index is the epoch
    groups["rng.positions"] = np.array([state.epoch], dtype=float)
    groups["state.curve"] = np.array(
        [[r.epoch, r.train_loss, r.val_metric, r.seconds, r.param_count, r.readout_param_count]
         for r in state.records], dtype=float).reshape(-1)
    return Checkpoint(config.snapshot_text(), groups)


def checkpoint_to_state(checkpoint: Checkpoint, config: ExperimentConfig) -> TrainingState:
    """Rebuild a training state; ``config`` must match the snapshot's resume hash."""
    try:
        saved = ExperimentConfig.from_text(checkpoint.config_text, config.base_dir)
    except ConfigError as exc:
        raise CheckpointIntegrityError(f"checkpoint config snapshot is unreadable: {exc}") from None
    if saved.resume_hash() != config.resume_hash():
        raise CheckpointError(
            f"checkpoint config hash mismatch: checkpoint was written for variant "
            f"{saved.experiment.variant} with different settings")
    cell_config = config.cell_config()
    task = config.task_spec()
    n, m = config.experiment.n, task.input_dim
    g = checkpoint.groups
    try:
        cell = Parameters({name: g[f"cell.{name}"].reshape(shape).copy()
                           for name, shape in param_layout(cell_config, n, m)})
        readout = Parameters({
            "W_y": g["readout.W_y"].reshape(task.output_dim, n).copy(),
            "b_y": g["readout.b_y"].reshape(task.output_dim).copy()})
        model = Model(cell_config, cell, readout)
        opt = config.optimizer_state()
        epoch, opt.step = (int(v) for v in g["state.counters"])
        if opt.kind is OptimizerKind.ADAM:
            for name, value in model.named_arrays().items():
                opt.first[name] = g[f"adam.first.{name}"].reshape(value.shape).copy()
                opt.second[name] = g[f"adam.second.{name}"].reshape(value.shape).copy()
        rows = g["state.curve"].reshape(-1, _CURVE_WIDTH)
    except (KeyError, ValueError) as exc:
        raise CheckpointIntegrityError(f"checkpoint is missing or misshapes a group: {exc}") from None
    records = [TrainRecord(int(r[0]), float(r[1]), float(r[2]), float(r[3]), int(r[4]), int(r[5]))
               for r in rows]
    return TrainingState(model, opt, epoch, records)
