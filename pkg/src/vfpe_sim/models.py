"""Validated parameter models for runs and campaigns."""

from __future__ import annotations

from enum import Enum
from typing import Any, List

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .geometry import Zone


class Scheme(str, Enum):
    """How node knowledge is obtained and disseminated."""

    RWP_ONLY = "rwp-only"
    RANDOM = "random"
    FRESH = "fresh"
    IDEAL = "ideal"

    @property
    def uses_beacons(self) -> bool:
        return self is not Scheme.RWP_ONLY


class ForceParams(BaseModel):
    """Virtual force constants (zone radii, intensities, chain thresholds)."""

    model_config = ConfigDict(frozen=True)

    d_r: float = Field(50.0, description="Repulsive radius (m).")
    d_f: float = Field(75.0, description="Outer radius of the friction zone (m).")
    d_a: float = Field(100.0, description="Outer radius of the attractive zone (m).")
    intensity: float = Field(1.0, description="Interaction force magnitude I (N).")
    cx: float = Field(2.0, description="Viscous friction coefficient (N.s/m).")
    f_a_near: float = Field(2.0, description="Alignment force while closing on target (N).")
    f_a_far: float = Field(4.0, description="Alignment force otherwise (N).")
    th_dmin: float = Field(40.0, description="Redundancy threshold between chain neighbours (m).")
    th_dmax: float = Field(75.0, description="Apex stretch that triggers chain extension (m).")
    align_deadband: float = Field(
        1.0, description="No alignment force closer than this to the target (m)."
    )

    @model_validator(mode="after")
    def _check_invariants(self) -> "ForceParams":
        if not 0.0 < self.d_r < self.d_f < self.d_a:
            raise ValueError("zone radii must satisfy 0 < d_r < d_f < d_a")
        if self.intensity <= 0.0 or self.cx <= 0.0:
            raise ValueError("intensity and cx must be positive")
        if not 0.0 < self.f_a_near <= self.f_a_far:
            raise ValueError("alignment forces must satisfy 0 < f_a_near <= f_a_far")
        if not self.th_dmin < self.th_dmax <= self.d_a:
            raise ValueError("thresholds must satisfy th_dmin < th_dmax <= d_a")
        if self.align_deadband < 0.0:
            raise ValueError("align_deadband must be >= 0")
        return self


class RadioParams(BaseModel):
    """Channel, MAC timing and link-state routing constants."""

    model_config = ConfigDict(frozen=True)

    radio_range: float = Field(100.0, gt=0, description="Unit-disk radio range (m).")
    broadcast_rate: float = Field(1e6, gt=0, description="Broadcast frame bitrate (b/s).")
    data_rate: float = Field(11e6, gt=0, description="Unicast data bitrate (b/s).")
    frame_overhead: float = Field(
        192e-6, ge=0, description="Fixed per-frame PLCP overhead (s), long preamble."
    )
    propagation_speed: float = Field(3e8, gt=0, description="Propagation speed (m/s).")
    hello_interval: float = Field(2.0, gt=0, description="Neighbour sensing interval (s).")
    tc_interval: float = Field(5.0, gt=0, description="Topology flooding interval (s).")
    neighbor_hold: float = Field(6.0, gt=0, description="Neighbour link hold time (s).")
    topology_hold: float = Field(15.0, gt=0, description="Topology entry hold time (s).")
    queue_limit: int = Field(100, ge=1, description="Per-node frame queue capacity.")
    ttl: int = Field(32, ge=1, description="Maximum hops for a data packet.")


class SimConfig(BaseModel):
    """Everything one seeded run needs."""

    model_config = ConfigDict(frozen=True)

    zone_width: float = Field(1000.0, gt=0)
    zone_height: float = Field(1000.0, gt=0)
    n_swarm: int = Field(15, ge=0, description="Number N of (P+R+S)-type nodes.")
    cs: int = Field(5, ge=1, description="Maximum entries per beacon (contact size).")
    scheme: Scheme = Scheme.RANDOM
    beacon_interval: float = Field(1.0, gt=0)
    dt: float = Field(0.1, gt=0, description="Mobility integration step (s).")
    duration: float = Field(600.0, gt=0, description="Simulated seconds per run.")
    force: ForceParams = Field(default_factory=ForceParams)
    radio: RadioParams = Field(default_factory=RadioParams)
    cbr_rate: float = Field(10_000.0, gt=0, description="CBR bitrate (b/s).")
    cbr_packet: int = Field(100, gt=0, description="CBR packet size (bytes).")
    cbr_start: float = Field(0.0, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)
    traffic_speed: tuple[float, float] = (0.25, 1.0)
    swarm_speed: tuple[float, float] = (5.0, 10.0)
    controlled_speed: float = Field(10.0, gt=0, description="Speed cap of P/R nodes (m/s).")
    mass: float = Field(1.0, gt=0, description="Node mass (kg).")
    rwp_pause: float = Field(0.0, ge=0)
    link_loss_intervals: int = Field(
        3, ge=1, description="Silent beacon intervals after which a chain link is lost."
    )
    audit: bool = Field(True, description="Run the chain-consistency auditor each step.")

    @model_validator(mode="after")
    def _check_speeds(self) -> "SimConfig":
        for label, (lo, hi) in (("traffic", self.traffic_speed), ("swarm", self.swarm_speed)):
            if not 0.0 < lo <= hi:
                raise ValueError(f"{label}_speed must satisfy 0 < min <= max")
        return self

    @property
    def zone(self) -> Zone:
        return Zone(self.zone_width, self.zone_height)

    @property
    def radio_range(self) -> float:
        return self.radio.radio_range

    @property
    def cbr_interval(self) -> float:
        return self.cbr_packet * 8.0 / self.cbr_rate

    def evolve(self, **changes: Any) -> "SimConfig":
        """Return a re-validated copy with `changes` applied."""
        data = self.model_dump()
        data.update(changes)
        return SimConfig.model_validate(data)


class SweepParameter(str, Enum):
    CS = "cs"
    N = "n"
    NONE = "none"


class Sweep(BaseModel):
    model_config = ConfigDict(frozen=True)

    parameter: SweepParameter = SweepParameter.NONE
    values: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_values(self) -> "Sweep":
        if self.parameter is not SweepParameter.NONE and not self.values:
            raise ValueError("a cs or n sweep needs at least one value")
        return self

    def points(self) -> list[int | None]:
        if self.parameter is SweepParameter.NONE:
            return [None]
        return sorted(set(self.values))


PAPER_RANGES = {SweepParameter.CS: (1, 20), SweepParameter.N: (1, 30)}


class Campaign(BaseModel):
    """A set of (scheme, sweep value) points, each run `runs_per_point` times."""

    model_config = ConfigDict(frozen=True)

    name: str = "campaign"
    base: SimConfig = Field(default_factory=SimConfig)
    sweep: Sweep = Field(default_factory=Sweep)
    schemes: List[Scheme] = Field(default_factory=lambda: [Scheme.RANDOM], min_length=1)
    runs_per_point: int = Field(200, ge=1)
    seed_base: int = Field(0, ge=0)
    paper_replication: bool = False

    @model_validator(mode="after")
    def _check_ranges(self) -> "Campaign":
        if self.paper_replication and self.sweep.parameter in PAPER_RANGES:
            lo, hi = PAPER_RANGES[self.sweep.parameter]
            bad = [v for v in self.sweep.values if not lo <= v <= hi]
            if bad:
                raise ValueError(
                    f"{self.sweep.parameter.value} values {bad} outside [{lo}, {hi}]"
                )
        if len(set(self.schemes)) != len(self.schemes):
            raise ValueError("schemes must not repeat")
        return self

    def config_for(self, scheme: Scheme, value: int | None, seed: int) -> SimConfig:
        changes: dict[str, Any] = {"scheme": scheme, "seed": seed}
        if self.sweep.parameter is SweepParameter.CS:
            changes["cs"] = value
        elif self.sweep.parameter is SweepParameter.N:
            changes["n_swarm"] = value
        return self.base.evolve(**changes)
