"""Experiment configuration files.

Plain INI read with :mod:`configparser`. Every section is optional and every
key falls back to the library default::

    [experiment]
    gol_timesteps = 3
    runs_per_cell = 3
    metric_eval_sequences = 1000
    image_count = 8
    seed = 0
    output = runs/demo

    [gen]
    height = 16
    width = 16
    density = 0.38
    warmup_prob = 0.5
    warmup_steps = 2
    count = 1000                 ; used by `generate`

    [model]
    channels = 20
    model_timesteps = 3
    weight_sharing = true
    rnn_kernels = 3, 1           ; optional per-layer kernel sizes

    [train]
    learning_rate = 0.001
    batch_size = 16
    max_steps = 20000
    use_autoencoder = true

    [adv]                        ; present => adversarial phase runs
    adv_steps = 2000
    loss_weights = 1, 1, 1

    [sweep]                      ; one cell per line: gol model autoencoder rnn
    cells =
        2 2 true true
        3 3 false true

The grid size lives in ``[gen]`` and is copied into the model config. The
generator seed is always the master seed from ``[experiment]``.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..life import GenConfig
from ..model import ModelConfig
from ..training import AdvConfig, TrainConfig

# (gol, model, autoencoder, rnn) -> number of runs in the published tables
PAPER_RUN_COUNTS = {
    (2, 2, True, True): 6,
    (3, 3, True, True): 42,
    (4, 4, True, True): 33,
    (3, 3, False, True): 22,
    (3, 3, True, False): 20,
    (2, 3, True, True): 16,
    (3, 2, True, True): 22,
}
PAPER_EVAL_SEQUENCES = 10_000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Cell:
    gol_timesteps: int
    model_timesteps: int
    use_autoencoder: bool
    use_rnn: bool

    @property
    def key(self) -> tuple:
        return (self.gol_timesteps, self.model_timesteps, self.use_autoencoder, self.use_rnn)

    @property
    def name(self) -> str:
        return (f"g{self.gol_timesteps}_t{self.model_timesteps}"
                f"_ae{int(self.use_autoencoder)}_rnn{int(self.use_rnn)}")


@dataclass(frozen=True)
class ExperimentConfig:
    gol_timesteps: int = 2
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    adv: AdvConfig | None = None
    gen: GenConfig = field(default_factory=GenConfig)
    runs_per_cell: int = 3
    metric_eval_sequences: int = 1000
    image_count: int = 8
    dataset_count: int = 1000
    seed: int = 0
    output: str = "runs"
    cells: tuple[Cell, ...] = ()

    def __post_init__(self):
        if (self.model.grid_height, self.model.grid_width) != (self.gen.height, self.gen.width):
            raise ConfigError("model grid size must equal the generator grid size")
        if self.gol_timesteps < 1:
            raise ConfigError("gol_timesteps must be >= 1")
        if self.runs_per_cell < 1 or self.metric_eval_sequences < 1:
            raise ConfigError("runs_per_cell and metric_eval_sequences must be positive")
        if self.dataset_count < 1:
            raise ConfigError("count must be >= 1")

    @property
    def cell(self) -> Cell:
        return Cell(self.gol_timesteps, self.model.model_timesteps,
                    self.train.use_autoencoder, self.model.weight_sharing)

    def for_cell(self, cell: Cell) -> "ExperimentConfig":
        return replace(
            self,
            gol_timesteps=cell.gol_timesteps,
            model=replace(self.model, model_timesteps=cell.model_timesteps, weight_sharing=cell.use_rnn),
            train=replace(self.train, use_autoencoder=cell.use_autoencoder),
        )

    def paper_scale(self) -> "ExperimentConfig":
        runs = max([self.runs_per_cell] + [PAPER_RUN_COUNTS.get(c.key, 0) for c in (self.cells or (self.cell,))])
        return replace(self, metric_eval_sequences=PAPER_EVAL_SEQUENCES, runs_per_cell=runs)

    def runs_for(self, cell: Cell, paper_scale: bool = False) -> int:
        if paper_scale:
            return max(self.runs_per_cell, PAPER_RUN_COUNTS.get(cell.key, self.runs_per_cell))
        return self.runs_per_cell


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _coerce(cls, section: configparser.SectionProxy, skip=()) -> dict:
    """Convert the keys of ``section`` to the field types of dataclass ``cls``."""
    fields = {f.name: f for f in dataclasses.fields(cls)}
    out = {}
    for key, raw in section.items():
        if key in skip:
            continue
        if key not in fields:
            raise ConfigError(f"[{section.name}] unknown key {key!r}")
        default = fields[key].default
        kind = type(default) if default is not dataclasses.MISSING and default is not None else None
        try:
            if key in ("loss_weights", "rnn_kernels"):
                conv = float if key == "loss_weights" else int
                out[key] = tuple(conv(v) for v in raw.replace(",", " ").split())
            elif kind is bool:
                out[key] = _parse_bool(raw)
            elif kind is int or key in ("encoder_kernel", "decoder_kernel"):
                out[key] = int(raw)
            elif kind is float:
                out[key] = float(raw)
            else:
                out[key] = raw
        except ValueError as exc:
            raise ConfigError(f"[{section.name}] {key}: {exc}") from exc
    return out


def _parse_cells(text: str) -> tuple[Cell, ...]:
    cells = []
    for line in text.strip().splitlines():
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 4:
            raise ConfigError(f"sweep cell needs 'gol model autoencoder rnn', got {line!r}")
        cells.append(Cell(int(parts[0]), int(parts[1]), _parse_bool(parts[2]), _parse_bool(parts[3])))
    return tuple(cells)


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    known = {"experiment", "gen", "model", "train", "adv", "sweep"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    try:
        gen_kw = _coerce(GenConfig, cp["gen"], skip=("count",)) if cp.has_section("gen") else {}
        gen = GenConfig(**gen_kw)
        model_kw = _coerce(ModelConfig, cp["model"]) if cp.has_section("model") else {}
        model_kw.update(grid_height=gen.height, grid_width=gen.width)
        model = ModelConfig(**model_kw)
        train = TrainConfig(**(_coerce(TrainConfig, cp["train"]) if cp.has_section("train") else {}))
        adv = AdvConfig(**_coerce(AdvConfig, cp["adv"])) if cp.has_section("adv") else None
        exp_kw = {}
        if cp.has_section("experiment"):
            exp_kw = _coerce(ExperimentConfig, cp["experiment"])
        if cp.has_section("gen") and "count" in cp["gen"]:
            exp_kw["dataset_count"] = int(cp["gen"]["count"])
        if "seed" in gen_kw:
            raise ConfigError("[gen] seed: set the master seed in [experiment]")
        gen = replace(gen, seed=exp_kw.get("seed", 0))
        cells = _parse_cells(cp["sweep"].get("cells", "")) if cp.has_section("sweep") else ()
        return ExperimentConfig(model=model, train=train, adv=adv, gen=gen, cells=cells, **exp_kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text())
