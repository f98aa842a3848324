"""Experiment configuration files.

The format is INI-style text with three sections, ``[experiment]``,
``[task]`` and ``[optimizer]``. Every key has a fixed type, unknown sections
or keys are rejected, and ``#`` or ``;`` start comments::

    [experiment]
    variant = LSTM_3
    n = 32

    [task]
    kind = adding
    seq_len = 30

    [optimizer]
    kind = adam
    lr = 0.001

Floats are written with ``repr`` so a config survives a write/read cycle
unchanged.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError, ContractViolation
from ..numerics import ActivationKind
from ..taxonomy import DEFAULT_ALPHA, canonical_name, variant_config
from ..training.loop import TrainSettings
from ..training.optim import OptimizerKind, OptimizerState
from ..training.tasks import TaskKind, TaskSpec

SECTIONS = ("experiment", "task", "optimizer")


@dataclass
class ExperimentSection:
    variant: str = "LSTM"
    variants: list[str] = field(default_factory=list)
    n: int = 32
    alpha: float = DEFAULT_ALPHA
    activation: str = "tanh"
    epochs: int = 10
    batches_per_epoch: int = 20
    val_size: int = 256
    init_seed: int = 0
    eval_seed: int = 1
    threshold: float = 0.05
    record_wall_clock: bool = False
    output_dir: str = "runs/latest"


@dataclass
class TaskSection:
    kind: str = "adding"
    seq_len: int = 30
    batch_size: int = 32
    delay: int = 1
    alphabet_size: int = 4
    text_path: str = ""
    seed: int = 0


@dataclass
class OptimizerSection:
    kind: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip: float = 5.0


@dataclass
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    task: TaskSection = field(default_factory=TaskSection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    base_dir: Path = field(default=Path("."), compare=False)

    # -- parsing -------------------------------------------------------------

    @classmethod
    def from_text(cls, text: str, base_dir: Path | str = ".") -> "ExperimentConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                           interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        cfg = cls(base_dir=Path(base_dir))
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in parser.items(section):
                cfg.set(section, key, raw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: Path | str) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text, path.parent)

    def set(self, section: str, key: str, raw: str) -> None:
        """Set one typed key from its text form (also used for CLI overrides)."""
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        target = getattr(self, section)
        types = {f.name: f.type for f in dataclasses.fields(target)}
        if key not in types:
            raise ConfigError(f"unknown key {section}.{key}")
        setattr(target, key, _convert(types[key], raw.strip(), f"{section}.{key}"))

    def override(self, assignment: str) -> None:
        """Apply ``section.key=value``."""
        lhs, sep, value = assignment.partition("=")
        section, dot, key = lhs.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override must look like section.key=value, got {assignment!r}")
        self.set(section, key, value)
        self.validate()

    def validate(self) -> "ExperimentConfig":
        e, t, o = self.experiment, self.task, self.optimizer
        try:
            e.variant = canonical_name(e.variant)
            e.variants = [canonical_name(v) for v in e.variants]
            ActivationKind.parse(e.activation)
            variant_config(e.variant, e.alpha, e.activation)
            TaskKind(t.kind)
            OptimizerKind(o.kind)
        except (ContractViolation, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        for name, value in (("experiment.n", e.n), ("experiment.epochs", e.epochs),
                            ("experiment.batches_per_epoch", e.batches_per_epoch),
                            ("experiment.val_size", e.val_size),
                            ("task.batch_size", t.batch_size)):
            if value < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        if o.lr < 0:
            raise ConfigError(f"optimizer.lr must be >= 0, got {o.lr}")
        if TaskKind(t.kind) is TaskKind.CHAR and not t.text_path:
            raise ConfigError("task.text_path is required for the char task")
        return self

    # -- output --------------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for section in SECTIONS:
            lines.append(f"[{section}]")
            target = getattr(self, section)
            for f in dataclasses.fields(target):
                lines.append(f"{f.name} = {_format(getattr(target, f.name))}")
            lines.append("")
        return "\n".join(lines)

    def snapshot_text(self) -> str:
        """Config text without the output location, as embedded in checkpoints."""
        e = self.experiment
        return dataclasses.replace(
            self, experiment=dataclasses.replace(e, output_dir="")).to_text()

    def config_hash(self) -> str:
        return hashlib.sha256(self.snapshot_text().encode("utf-8")).hexdigest()

    def resume_hash(self) -> str:
        """Hash of every setting a bit-exact continuation depends on."""
        e = self.experiment
        snapshot = dataclasses.replace(self, experiment=dataclasses.replace(
            e, epochs=0, record_wall_clock=False, variants=[]))
        return snapshot.config_hash()

    # -- views ---------------------------------------------------------------

    def cell_config(self, variant: str | None = None):
        e = self.experiment
        return variant_config(variant or e.variant, e.alpha, e.activation)

    def task_spec(self) -> TaskSpec:
        t = self.task
        text = None
        if TaskKind(t.kind) is TaskKind.CHAR:
            path = Path(t.text_path)
            if not path.is_absolute():
                path = self.base_dir / path
            try:
                text = path.read_bytes()
            except OSError as exc:
                raise ConfigError(f"cannot read text file {path}: {exc}") from None
        try:
            return TaskSpec(TaskKind(t.kind), t.seq_len, t.batch_size, t.delay,
                            t.alphabet_size, text, t.seed).validate()
        except ContractViolation as exc:
            raise ConfigError(str(exc)) from None

    def optimizer_state(self) -> OptimizerState:
        o = self.optimizer
        return OptimizerState(OptimizerKind(o.kind), o.lr, o.beta1, o.beta2, o.eps, o.clip)

    def train_settings(self) -> TrainSettings:
        e = self.experiment
        return TrainSettings(e.n, e.epochs, e.batches_per_epoch, e.val_size,
                             e.init_seed, e.eval_seed, e.record_wall_clock)


def _convert(kind, raw: str, name: str):
    kind = str(kind)
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind.startswith("list"):
            return [item.strip() for item in raw.split(",") if item.strip()]
        return raw
    except ValueError:
        raise ConfigError(f"{name}: cannot read {raw!r} as {kind}") from None


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(value)
    return str(value)
