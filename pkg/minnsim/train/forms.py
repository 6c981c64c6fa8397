from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="constants")

    epochs: int = Field(50, ge=1)
    batch_size: int = Field(64, ge=1)
    # 0 freezes the parameters (dry run)
    learning_rate: float = Field(1e-2, ge=0.0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    gamma: float = Field(0.0, ge=0.0)
    snr_schedule: list[tuple[float, int]] = Field(default_factory=list)
    stage_decay: float = Field(0.5, gt=0.0, le=1.0)
    static_fading: bool = False
    # unset follows the experiment seed (0 when used standalone)
    seed: Optional[int] = None
    loss: Literal["cross_entropy", "mse"] = "cross_entropy"
    optimizer: Literal["sgd", "adam"] = "sgd"
    eval_realizations: int = Field(1, ge=1)
    progress: bool = False

    @field_validator("snr_schedule")
    @classmethod
    def validate_schedule(cls, stages):
        for snr_db, epochs in stages:
            if epochs < 1:
                raise ValueError(f"every schedule stage needs at least one epoch, got ({snr_db}, {epochs})")
        return stages
