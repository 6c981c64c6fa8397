import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class ChannelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="constants")

    model: Literal["geometric", "rayleigh"] = "geometric"
    n_tx: int = Field(4, ge=1)
    n_rx: int = Field(4, ge=1)
    n_scatterers: int = Field(10, ge=1)
    sim_placement: float = Field(0.075, gt=0.0, lt=1.0)
    include_direct_path: bool = False
    snr_db: float = 10.0
    # unset follows the experiment seed (0 when used standalone)
    seed: Optional[int] = None
    link_distance: float = Field(1.0, gt=0.0)
    los_k_factor_db: float = 13.0
    rx_distance_jitter: float = Field(0.0, ge=0.0, lt=1.0)

    @field_validator("snr_db")
    @classmethod
    def validate_snr(cls, value):
        # +inf is the "noise disabled" sentinel
        if math.isnan(value) or value == -math.inf:
            raise ValueError("snr_db must be finite or +inf (noise disabled)")
        return value
