# backend/optimizer/history.py
"""Per-iteration records and per-stage wall-clock timing."""

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List

import pandas as pd

STAGES = ("tdf", "sen", "fea", "mma")


class StageTimer:
    """
    Accumulates wall time per stage for the current iteration.

    Usage:
        timer = StageTimer()
        with timer.stage("fea"):
            ...
        times = timer.lap()   # {"tdf": ..., "sen": ..., "fea": ..., "mma": ...}
    """

    def __init__(self):
        self._current: Dict[str, float] = {s: 0.0 for s in STAGES}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        if name not in self._current:
            raise KeyError(f"unknown stage '{name}'")
        start = time.perf_counter()
        try:
            yield
        finally:
            self._current[name] += time.perf_counter() - start

    def lap(self) -> Dict[str, float]:
        """Times since the previous lap, then reset."""
        out = dict(self._current)
        self._current = {s: 0.0 for s in STAGES}
        return out


@dataclass
class ConvergenceHistory:
    objective: List[float] = field(default_factory=list)
    volume_fraction: List[float] = field(default_factory=list)
    active_fields: List[int] = field(default_factory=list)
    band_elements: List[int] = field(default_factory=list)
    stage_times: Dict[str, List[float]] = field(default_factory=lambda: {s: [] for s in STAGES})

    def __len__(self) -> int:
        return len(self.objective)

    def record(
        self,
        objective: float,
        volume_fraction: float,
        active_fields: int,
        band_elements: int,
        times: Dict[str, float],
    ) -> None:
        self.objective.append(float(objective))
        self.volume_fraction.append(float(volume_fraction))
        self.active_fields.append(int(active_fields))
        self.band_elements.append(int(band_elements))
        for s in STAGES:
            self.stage_times[s].append(max(0.0, float(times.get(s, 0.0))))

    def add_time(self, stage: str, seconds: float) -> None:
        """Charge time to the last recorded iteration (the MMA step runs after recording)."""
        if self.stage_times[stage]:
            self.stage_times[stage][-1] += max(0.0, float(seconds))

    def to_frame(self) -> pd.DataFrame:
        """Deterministic columns only (no wall times)."""
        return pd.DataFrame({
            "iteration": range(1, len(self) + 1),
            "objective": self.objective,
            "volume_fraction": self.volume_fraction,
            "active_fields": self.active_fields,
            "band_elements": self.band_elements,
        })

    def timing_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"iteration": range(1, len(self) + 1)})
        for s in STAGES:
            frame[s] = self.stage_times[s]
        frame["total"] = frame[list(STAGES)].sum(axis=1)
        return frame

    def mean_stage_times(self) -> Dict[str, float]:
        if not len(self):
            return {s: 0.0 for s in STAGES}
        return {s: float(sum(v) / len(v)) for s, v in self.stage_times.items()}

    def stage_shares(self) -> Dict[str, float]:
        """Fraction of the mean iteration time spent in each stage."""
        means = self.mean_stage_times()
        total = sum(means.values())
        if total <= 0:
            return {s: 0.0 for s in STAGES}
        return {s: t / total for s, t in means.items()}

    def to_dict(self) -> Dict[str, object]:
        return {
            "objective": self.objective,
            "volume_fraction": self.volume_fraction,
            "active_fields": self.active_fields,
            "band_elements": self.band_elements,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "ConvergenceHistory":
        """Restore the deterministic columns; stage times are not stored."""
        history = cls(
            objective=[float(v) for v in data.get("objective", [])],
            volume_fraction=[float(v) for v in data.get("volume_fraction", [])],
            active_fields=[int(v) for v in data.get("active_fields", [])],
            band_elements=[int(v) for v in data.get("band_elements", [])],
        )
        columns = (history.objective, history.volume_fraction, history.active_fields, history.band_elements)
        if len({len(c) for c in columns}) != 1:
            raise ValueError("history columns have different lengths")
        return history

    @property
    def has_timing(self) -> bool:
        return len(self) > 0 and all(len(v) == len(self) for v in self.stage_times.values())
