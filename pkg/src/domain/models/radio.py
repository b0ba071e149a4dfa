import math

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class RadioParams(BaseModel):
    """First-order radio model constants (reference scenario defaults)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    e_elec: float = Field(50e-9, gt=0, description="J/bit, transceiver electronics")
    e_fs: float = Field(10e-12, gt=0, description="J/bit/m^2, free-space amplifier")
    e_amp: float = Field(0.0013e-12, gt=0, description="J/bit/m^4, multipath amplifier")
    e_da: float = Field(5e-9, gt=0, description="J/bit, data aggregation")
    b_data: int = Field(4000, ge=0, description="bits per data packet")
    b_ctrl: int = Field(1000, ge=0, description="bits per control packet")
    # Reads the CH uplink cost as (E_elec + E_DA)*B + E_tx, counting E_elec*B twice.
    double_count_elec: bool = False
    # How a node's status report reaches the controller on a re-cluster: "piggyback"
    # rides on the data uplink and costs nothing extra, "direct" is a separate
    # b_ctrl transmission to the BS.
    control_uplink: Literal["piggyback", "direct"] = "piggyback"

    @model_validator(mode="after")
    def _threshold_is_finite(self):
        d0 = math.sqrt(self.e_fs / self.e_amp)
        if not math.isfinite(d0) or d0 <= 0:
            raise ValueError("e_fs/e_amp must give a finite positive threshold distance")
        return self

    @property
    def d0(self) -> float:
        return math.sqrt(self.e_fs / self.e_amp)
