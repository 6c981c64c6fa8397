import os
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..channel import ChannelConfig
from ..train import TrainConfig

EXPERIMENT_KINDS = (
    "minn_classify",
    "no_sim_baseline",
    "digital_dnn_baseline",
    "power_control",
    "elm_benchmark",
    "alignment",
    "all_ms_classify",
)

_FORM_CONFIG = ConfigDict(extra="forbid", ser_json_inf_nan="constants")


class DatasetSpec(BaseModel):
    model_config = _FORM_CONFIG

    source: Literal["mnist", "csv", "synthetic"] = "mnist"
    name: str = "mnist"
    path: Optional[str] = None
    label_column: Optional[str] = None
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    full: bool = False
    train_size: int = Field(8000, ge=1)
    test_size: int = Field(2000, ge=1)
    subsample: Optional[int] = Field(None, ge=1)
    digits: Optional[list[int]] = None
    n_samples: Optional[int] = Field(None, ge=2)
    test_fraction: float = Field(0.25, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def check_source(self):
        if self.source == "csv":
            if not self.path or not self.label_column:
                raise ValueError("a csv dataset needs both path and label_column")
            if not os.path.exists(self.path):
                raise ValueError(f"dataset file {self.path!r} does not exist")
        if self.source == "mnist":
            for name in ("train_images", "train_labels", "test_images", "test_labels"):
                path = getattr(self, name)
                if path is not None and not os.path.exists(path):
                    raise ValueError(f"{name} file {path!r} does not exist")
        if self.digits is not None and len(set(self.digits)) < 2:
            raise ValueError("digits must name at least two distinct classes")
        return self


class SimStackSpec(BaseModel):
    model_config = _FORM_CONFIG

    layers: int = Field(4, ge=1)
    side: int = Field(12, ge=1)
    pitch_wavelengths: float = Field(0.5, gt=0.0)
    spacing_wavelengths: float = Field(5.0, gt=0.0)
    random_init: bool = True


class ModelSpec(BaseModel):
    model_config = _FORM_CONFIG

    conv_channels: list[int] = Field(default_factory=lambda: [8, 16])
    kernel: int = Field(5, ge=1)
    encoder_hidden: list[int] = Field(default_factory=list)
    decoder_hidden: list[int] = Field(default_factory=lambda: [128, 64])
    activation: Literal["relu", "tanh"] = "relu"
    pool: Literal["max", "avg"] = "max"
    power_mode: Literal["hard_norm", "soft_penalty"] = "hard_norm"
    p_max: float = Field(1.0, gt=0.0)
    time_slots: int = Field(1, ge=1)
    controller: bool = False
    controller_hidden: list[int] = Field(default_factory=lambda: [64])
    hidden_layers: int = Field(2, ge=1)
    encoding: Literal["phase", "amplitude"] = "phase"


class ElmSpec(BaseModel):
    model_config = _FORM_CONFIG

    n_hidden: list[int] = Field(default_factory=lambda: [32, 128, 256])
    activation: Literal["abs", "abs2", "tanh_mag", "relu_real"] = "abs"
    ridge_lambda: Optional[float] = Field(None, gt=0.0)
    ridge_scale: float = Field(1e-3, gt=0.0)
    trials: int = Field(20, ge=1)
    snr_db: float = 25.0
    channel_model: Literal["rayleigh", "geometric"] = "rayleigh"
    digital: bool = True
    drift: float = Field(0.01, ge=0.0)

    @field_validator("n_hidden")
    @classmethod
    def validate_hidden(cls, sizes):
        if not sizes or min(sizes) < 1:
            raise ValueError("n_hidden needs at least one positive size")
        return sizes


class AlignSpec(BaseModel):
    model_config = _FORM_CONFIG

    encoding_dim: int = Field(8, ge=1, description=(
        "Antennas per side of the aligned link. 32 mirrors the full-scale pairs; 8 keeps the map an 8x8 "
        "target that 2- and 4-layer stacks of 64 or 144 elements can approximate."))
    pretrain_epochs: int = Field(5, ge=1)
    calibration_samples: int = Field(1000, ge=1)
    ridge: Optional[float] = Field(None, gt=0.0)
    layers: list[int] = Field(default_factory=lambda: [2, 4])
    sides: list[int] = Field(default_factory=lambda: [8, 12])
    iters: int = Field(200, ge=0)
    lr: float = Field(0.1, gt=0.0)


class ExperimentConfig(BaseModel):
    """Fully resolved description of one run; dumped verbatim into the run manifest."""

    model_config = _FORM_CONFIG

    kind: Literal[EXPERIMENT_KINDS] = "minn_classify"
    seed: int = 0
    output: str = "runs/experiment"
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    channel: ChannelConfig = Field(default_factory=ChannelConfig)
    sim: SimStackSpec = Field(default_factory=SimStackSpec)
    model: ModelSpec = Field(default_factory=ModelSpec)
    train: TrainConfig = Field(default_factory=TrainConfig)
    elm: ElmSpec = Field(default_factory=ElmSpec)
    align: AlignSpec = Field(default_factory=AlignSpec)

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == "elm_benchmark" and self.dataset.source == "mnist" and not self.dataset.subsample:
            raise ValueError("elm_benchmark on MNIST needs dataset.subsample (one antenna per feature)")
        if self.kind == "all_ms_classify" and self.model.controller:
            raise ValueError("all_ms_classify has no channel to control")
        if self.kind == "power_control" and self.model.power_mode != "soft_penalty":
            raise ValueError("power_control trains with model.power_mode = 'soft_penalty'")
        if self.kind == "digital_dnn_baseline" and self.channel.n_tx != self.channel.n_rx:
            raise ValueError("digital_dnn_baseline needs channel.n_tx == channel.n_rx")
        return self

    def with_seed(self, seed):
        """Same config under another master seed; channel and training streams follow it."""
        data = self.model_dump()
        data["seed"] = seed
        data["channel"]["seed"] = None
        data["train"]["seed"] = None
        return ExperimentConfig.model_validate(data)

    def resolve_seeds(self):
        """Fill unset channel and training seeds from the master seed."""
        return self.model_copy(update={
            "channel": self.channel.model_copy(update={"seed": _or(self.channel.seed, self.seed)}),
            "train": self.train.model_copy(update={"seed": _or(self.train.seed, self.seed)}),
        })


def _or(value, default):
    return default if value is None else value
