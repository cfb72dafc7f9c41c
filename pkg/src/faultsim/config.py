"""Run configuration shared by the parallel engine, the serial baseline,
and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field

MODE_SERIAL = "serial"
MODE_STRUCTURAL = "structural"
MODE_STRUCTURAL_FAULT = "structural+fault"
MODE_FULL = "full"
MODES = (MODE_SERIAL, MODE_STRUCTURAL, MODE_STRUCTURAL_FAULT, MODE_FULL)


@dataclass
class SimConfig:
    workers: int = 1
    mode: str = MODE_FULL
    threshold: float = 1e-4
    slaves: int = 0  # 0 means one slave per worker
    max_expansions_per_cycle: int = 8
    drop_on_detect: bool = False
    steady_state_check: bool = False
    sync_group_size: int = 1
    record_trace: bool = False
    record_deltas: bool = False
    record_outputs: bool = False
    record_costs: bool = False
    cost_table: list | None = None
    force_always_eval: bool = False
    pre_expand: tuple = field(default_factory=tuple)

    def validate(self) -> None:
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode '{self.mode}'")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if self.slaves < 0:
            raise ValueError("slave count must be >= 0")
        if self.max_expansions_per_cycle < 0:
            raise ValueError("max_expansions_per_cycle must be >= 0")
        if self.sync_group_size < 1:
            raise ValueError("sync group size must be >= 1")

    @property
    def unified_sync(self) -> bool:
        return self.mode == MODE_FULL

    @property
    def expansion_enabled(self) -> bool:
        return self.mode in (MODE_STRUCTURAL_FAULT, MODE_FULL)

    @property
    def effective_slaves(self) -> int:
        return self.slaves if self.slaves > 0 else self.workers

    def echo(self) -> dict:
        return {
            "workers": self.workers,
            "mode": self.mode,
            "threshold": self.threshold,
            "slaves": self.effective_slaves,
            "max_expansions_per_cycle": self.max_expansions_per_cycle,
            "drop_on_detect": int(self.drop_on_detect),
            "sync_group_size": self.sync_group_size,
        }
