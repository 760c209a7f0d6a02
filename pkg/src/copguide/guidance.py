"""Trial state machine: randomized target schedule, dwell-based success
detection, and trial timing.

A session presents 8 ring targets (45 degrees apart, ``target_radius_cm`` from
the board center), each ``reps_per_target`` times in seeded-random order. A
trial completes when the CoP stays within ``region_radius_cm`` of the target
for ``dwell_s`` continuously; any exit resets the dwell timer.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from typing import Any

from .board import CoPSample

MODALITIES = ("haptic", "visual", "audio")


class OutOfOrderSample(ValueError):
    """Sample timestamp precedes the last processed one."""


class NoActiveTarget(RuntimeError):
    """Queried for guidance while no target is active."""


class SessionFinishedError(RuntimeError):
    """step() called after the schedule was exhausted."""


@dataclass(frozen=True, slots=True)
class Target:
    index: int
    x: float
    y: float


@dataclass
class SessionConfig:
    """All protocol constants for one session."""

    target_radius_cm: float = 8.0
    region_radius_cm: float = 3.0
    dwell_s: float = 3.0
    reps_per_target: int = 3
    modality: str = "haptic"
    tick_hz: float = 100.0
    seed: int = 0
    # Extension: trials that never complete are aborted and flagged.
    max_trial_s: float = 60.0

    def __post_init__(self) -> None:
        if self.region_radius_cm >= self.target_radius_cm:
            raise ValueError("region radius must be smaller than the target radius")
        if self.dwell_s <= 0:
            raise ValueError("dwell time must be positive")
        if self.reps_per_target < 1:
            raise ValueError("need at least one repetition per target")
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}")
        if self.tick_hz <= 0:
            raise ValueError("tick rate must be positive")
        if self.max_trial_s <= self.dwell_s:
            raise ValueError("trial timeout must exceed the dwell time")


class Phase(enum.Enum):
    PRESENTING = "presenting"
    GUIDING = "guiding"
    DWELLING = "dwelling"
    FINISHED = "finished"


@dataclass(slots=True)
class TrialRecord:
    """One target-acquisition attempt."""

    trial_no: int
    target: Target
    present_ts: int
    success_ts: int
    duration_s: float
    duration_ex_dwell_s: float
    timed_out: bool = False
    path: list[CoPSample] = field(default_factory=list)


@dataclass(frozen=True, slots=True)
class GuidanceEvent:
    name: str  # trial_presented | region_entered | region_exited | trial_complete | trial_timeout | session_finished
    ts: int
    trial_no: int
    payload: dict[str, Any]


def make_targets(cfg: SessionConfig) -> list[Target]:
    """The 8-point ring, index 0 at bearing +x, counterclockwise 45-degree steps."""
    r = cfg.target_radius_cm
    out = []
    for i in range(8):
        a = math.radians(45.0 * i)
        out.append(Target(index=i, x=r * math.cos(a), y=r * math.sin(a)))
    return out


def make_schedule(cfg: SessionConfig) -> list[int]:
    """Seeded uniform shuffle of each target index repeated reps_per_target times."""
    order = [i for i in range(8) for _ in range(cfg.reps_per_target)]
    random.Random(cfg.seed).shuffle(order)
    return order


class GuidanceSession:
    """Deterministic per-sample state machine. Drive with step(); phase
    transitions depend only on (state, sample), never on wall clock.

    Invalid samples (board unloaded) freeze the phase: they neither advance
    nor reset the dwell timer, and they do not start a pending trial.
    """

    def __init__(self, cfg: SessionConfig, keep_paths: bool = True) -> None:
        self.cfg = cfg
        self.keep_paths = keep_paths
        self.targets = make_targets(cfg)
        self.schedule = make_schedule(cfg)
        self.records: list[TrialRecord] = []
        self.phase = Phase.PRESENTING
        self.trial_no = 0
        self.in_region = False
        # Target of the presented trial; None while Presenting or Finished.
        self.active_target: Target | None = None
        self._present_ts = 0
        self._entered_ts = 0
        self._frozen_ms = 0.0  # invalid-sample time excluded from the dwell
        self._last_ts: int | None = None
        self._path: list[CoPSample] = []
        self._dwell_ms = cfg.dwell_s * 1000.0
        self._region_sq = cfg.region_radius_cm * cfg.region_radius_cm
        self._max_trial_ms = cfg.max_trial_s * 1000.0

    @property
    def finished(self) -> bool:
        return self.phase is Phase.FINISHED

    @property
    def current_target(self) -> Target:
        if self.finished:
            raise NoActiveTarget("session is finished")
        return self.targets[self.schedule[self.trial_no]]

    def error_vector(self, s: CoPSample) -> tuple[float, float]:
        """Vector from the CoP to the presented target, in cm."""
        t = self.active_target
        if t is None:
            raise NoActiveTarget("no target is presented")
        return (t.x - s.x, t.y - s.y)

    def dwell_progress(self, ts: int) -> float:
        """Fraction of the dwell completed at time ts; 0 outside the region."""
        if self.phase is not Phase.DWELLING:
            return 0.0
        frac = (ts - self._entered_ts - self._frozen_ms) / self._dwell_ms
        return min(max(frac, 0.0), 1.0)

    def step(self, s: CoPSample) -> list[GuidanceEvent]:
        """Process one sample; returns the events it caused (usually none)."""
        phase = self.phase
        if phase is Phase.FINISHED:
            raise SessionFinishedError("all scheduled trials are complete")
        last = self._last_ts
        ts = s.ts
        if last is not None and ts < last:
            raise OutOfOrderSample(f"sample ts {ts} precedes {last}")
        self._last_ts = ts

        if not s.valid:
            # Dropout: freeze. Track the lost span so it does not count as dwell.
            if phase is Phase.DWELLING and last is not None:
                self._frozen_ms += ts - last
            return []

        events: list[GuidanceEvent] = []
        path = self._path
        if self.keep_paths and (not path or ts > path[-1].ts):
            path.append(s)

        if phase is Phase.PRESENTING:
            self._present_ts = ts
            phase = self.phase = Phase.GUIDING
            self.in_region = False
            target = self.active_target = self.targets[self.schedule[self.trial_no]]
            events.append(
                GuidanceEvent(
                    "trial_presented",
                    ts,
                    self.trial_no,
                    {"target_index": target.index, "target_x": target.x, "target_y": target.y},
                )
            )
        else:
            target = self.active_target

        dx = target.x - s.x
        dy = target.y - s.y
        inside = dx * dx + dy * dy <= self._region_sq  # boundary counts as inside

        if phase is Phase.GUIDING:
            if inside:
                self.phase = Phase.DWELLING
                self._entered_ts = ts
                self._frozen_ms = 0.0
                self.in_region = True
                events.append(GuidanceEvent("region_entered", ts, self.trial_no, {}))
        elif not inside:
            self.phase = Phase.GUIDING  # full dwell reset
            self.in_region = False
            events.append(GuidanceEvent("region_exited", ts, self.trial_no, {}))
        elif ts - self._entered_ts - self._frozen_ms >= self._dwell_ms:
            events.extend(self._finish_trial(ts, timed_out=False))
            return events

        if ts - self._present_ts >= self._max_trial_ms:
            events.extend(self._finish_trial(ts, timed_out=True))
        return events

    def _finish_trial(self, ts: int, timed_out: bool) -> list[GuidanceEvent]:
        duration_s = (ts - self._present_ts) / 1000.0
        record = TrialRecord(
            trial_no=self.trial_no,
            target=self.targets[self.schedule[self.trial_no]],
            present_ts=self._present_ts,
            success_ts=ts,
            duration_s=duration_s,
            duration_ex_dwell_s=duration_s - self.cfg.dwell_s if not timed_out else duration_s,
            timed_out=timed_out,
            path=self._path,
        )
        self.records.append(record)
        events = [
            GuidanceEvent(
                "trial_timeout" if timed_out else "trial_complete",
                ts,
                self.trial_no,
                {
                    "target_index": record.target.index,
                    "duration_s": record.duration_s,
                    "duration_ex_dwell_s": record.duration_ex_dwell_s,
                    "timed_out": timed_out,
                },
            )
        ]
        self._path = []
        self.in_region = False
        self.active_target = None
        self.trial_no += 1
        if self.trial_no >= len(self.schedule):
            self.phase = Phase.FINISHED
            events.append(
                GuidanceEvent("session_finished", ts, self.trial_no, {"trials": len(self.records)})
            )
        else:
            # Next target presents on the next processed sample.
            self.phase = Phase.PRESENTING
        return events
