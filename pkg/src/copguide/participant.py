"""Stochastic participant model: perceives feedback commands after a reaction
latency, walks the CoP at constant speed along the (noisily) perceived
direction, and holds position when the guidance says it has arrived.

The model is deliberately first-order (no balance dynamics): it exists to
close the loop for hardware-free end-to-end runs, with enough structure that
completion times differentiate the modalities. All parameters are synthetic
calibration choices, not measured human data, and reports label them so.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .board import CoPSample
from .feedback import (
    ANSWER,
    AudioCommand,
    HapticCommand,
    HapticPulse,
    VisualCommand,
)

_AXIS = {"front": (0.0, 1.0), "back": (0.0, -1.0), "left": (-1.0, 0.0), "right": (1.0, 0.0)}


class ModalityMismatch(ValueError):
    """Command type does not belong to the expected modality."""


@dataclass(frozen=True)
class ModalityTraits:
    reaction_latency_mean_ms: float
    reaction_latency_std_ms: float
    direction_noise_deg: float
    speed_cm_s: float
    stop_deadband_cm: float

    def __post_init__(self) -> None:
        if self.reaction_latency_std_ms < 0 or self.direction_noise_deg < 0:
            raise ValueError("noise parameters must be non-negative")
        if self.speed_cm_s <= 0:
            raise ValueError("speed must be positive")


@dataclass(frozen=True)
class ParticipantModel:
    haptic: ModalityTraits
    visual: ModalityTraits
    audio: ModalityTraits
    tremor_noise_cm: float = 0.02  # per-tick positional jitter std, per axis
    seed: int = 0

    def traits(self, modality: str) -> ModalityTraits:
        try:
            return getattr(self, modality)
        except AttributeError:
            raise ModalityMismatch(f"unknown modality {modality!r}") from None


# Calibrated so a simulated cohort lands in the haptic ~ visual < audio regime:
# visual reacts fastest and sees the exact error direction; haptic is close
# behind with 8-way quantization; audio is slow to react and coarsely guided.
DEFAULT_MODEL = ParticipantModel(
    haptic=ModalityTraits(400.0, 60.0, 15.0, 4.0, 1.0),
    visual=ModalityTraits(300.0, 60.0, 5.0, 4.0, 1.0),
    audio=ModalityTraits(1200.0, 200.0, 20.0, 4.0, 1.0),
)


class GaussStream:
    """Chunked standard-normal draws from a seeded Generator; ~10x cheaper per
    draw than Generator.normal() for the per-tick tremor path."""

    __slots__ = ("_gen", "_chunk", "_buf", "_i", "_n")

    def __init__(self, gen: np.random.Generator, chunk: int = 8192) -> None:
        self._gen = gen
        self._chunk = chunk
        self._buf: list[float] = []
        self._i = 0
        self._n = 0

    def next(self) -> float:
        i = self._i
        if i >= self._n:
            self._buf = self._gen.standard_normal(self._chunk).tolist()
            self._n = self._chunk
            i = 0
        self._i = i + 1
        return self._buf[i]

    def normal(self, loc: float = 0.0, scale: float = 1.0) -> float:
        return loc + scale * self.next()


def _rotate(dx: float, dy: float, deg: float) -> tuple[float, float]:
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return (c * dx - s * dy, s * dx + c * dy)


def perceive(cmd, model: ParticipantModel, rng, expected_modality: str | None = None):
    """Command -> perceived movement direction (unit vector) or None (hold).

    Haptic motor sets quantize to the 8 compass directions; audio clock hours
    to 30-degree bearings; visual passes the displayed offset through exactly.
    Angular noise (per-modality std) perturbs every perceived direction.
    """
    if isinstance(cmd, (HapticCommand, HapticPulse)):
        modality = "haptic"
        if isinstance(cmd, HapticPulse):
            base = None  # all-motor success cue carries no direction
        else:
            dx = dy = 0.0
            for m in cmd.motors:
                ax, ay = _AXIS[m]
                dx += ax
                dy += ay
            norm = math.hypot(dx, dy)
            base = None if norm == 0.0 else (dx / norm, dy / norm)
    elif isinstance(cmd, VisualCommand):
        modality = "visual"
        norm = math.hypot(cmd.px, cmd.py)
        base = None if norm == 0.0 else (cmd.px / norm, cmd.py / norm)
    elif isinstance(cmd, AudioCommand):
        modality = "audio"
        if cmd.prompt == ANSWER:
            base = None
        else:
            b = math.radians(30.0 * cmd.prompt)
            base = (math.sin(b), math.cos(b))
    else:
        raise ModalityMismatch(f"not a feedback command: {cmd!r}")
    if expected_modality is not None and modality != expected_modality:
        raise ModalityMismatch(f"{modality} command in a {expected_modality} session")
    if base is None:
        return None
    noise = model.traits(modality).direction_noise_deg
    if noise > 0.0:
        return _rotate(base[0], base[1], rng.normal(0.0, noise))
    return base


def advance(pos, direction, traits: ModalityTraits, dt_s: float, rng, tremor_cm: float = 0.0):
    """One kinematic step: constant-speed travel along ``direction`` (or hold
    when None) plus per-axis Gaussian tremor."""
    x, y = pos
    if direction is not None:
        x += direction[0] * traits.speed_cm_s * dt_s
        y += direction[1] * traits.speed_cm_s * dt_s
    if tremor_cm > 0.0:
        x += rng.normal(0.0, tremor_cm)
        y += rng.normal(0.0, tremor_cm)
    return (x, y)


class ParticipantProvider:
    """Closed-loop sample source for the session runner.

    Per tick: move along the currently perceived direction (same kinematics as
    :func:`advance`, inlined for the hot loop and pinned to it by tests), then
    apply any feedback command whose reaction latency has elapsed, then report
    the position as a CoPSample. Commands observed at time t affect movement
    strictly after t.
    """

    def __init__(
        self,
        model: ParticipantModel,
        modality: str,
        tick_hz: float,
        visual_scale_cm: float,
        seed,
        start: tuple[float, float] = (0.0, 0.0),
        total_load_kg: float = 60.0,
    ) -> None:
        self.model = model
        self.traits = model.traits(modality)
        self.modality = modality
        self._dt_s = 1.0 / tick_hz
        self._dt_ms = 1000.0 / tick_hz
        # Exact integer timestamps when the tick interval is a whole ms.
        self._ts_int = int(self._dt_ms) if self._dt_ms.is_integer() else 0
        self._step_cm = self.traits.speed_cm_s * self._dt_s
        self._tremor = model.tremor_noise_cm
        self._scale = visual_scale_cm
        self._x, self._y = start
        self._load = total_load_kg
        self._tick = 0
        self._dir: tuple[float, float] | None = None
        self._pending: deque = deque()
        self._last_effective = 0.0
        self._rng = GaussStream(np.random.default_rng(seed))

    def next_sample(self):
        tick = self._tick
        ts = tick * self._ts_int if self._ts_int else round(tick * self._dt_ms)
        self._tick = tick + 1
        if tick:
            x, y = self._x, self._y
            d = self._dir
            if d is not None:
                step = self._step_cm
                x += d[0] * step
                y += d[1] * step
            t = self._tremor
            if t > 0.0:
                rng = self._rng
                x += t * rng.next()
                y += t * rng.next()
            self._x, self._y = x, y
        pending = self._pending
        if pending and pending[0][0] <= ts:
            applied = pending.popleft()[1]
            while pending and pending[0][0] <= ts:
                applied = pending.popleft()[1]
            self._apply(applied)
        return CoPSample(ts, self._x, self._y, self._load, True)

    def _apply(self, cmd) -> None:
        if isinstance(cmd, VisualCommand):
            # The display carries magnitude: hold once the shown offset says
            # the remaining error is inside the stop deadband.
            if math.hypot(cmd.px, cmd.py) * self._scale <= self.traits.stop_deadband_cm:
                self._dir = None
                return
        self._dir = perceive(cmd, self.model, self._rng, expected_modality=self.modality)

    def observe(self, commands, ts: int) -> None:
        for cmd in commands:
            lat = self._rng.normal(
                self.traits.reaction_latency_mean_ms, self.traits.reaction_latency_std_ms
            )
            if lat < 0.0:
                lat = 0.0
            eff = ts + lat
            if eff < self._last_effective:
                eff = self._last_effective  # reactions stay in command order
            self._last_effective = eff
            self._pending.append((eff, cmd))

    @property
    def position(self) -> tuple[float, float]:
        return (self._x, self._y)


def run_session(
    model: ParticipantModel,
    cfg,
    encoder_cfg=None,
    *,
    seed=None,
    sinks=None,
    keep_paths: bool = False,
    start: tuple[float, float] = (0.0, 0.0),
):
    """One full closed-loop session (24 trials by default); deterministic per
    seed. Returns the session's TrialRecords."""
    from .feedback import EncoderConfig
    from .gateway.runner import run_loop

    enc = encoder_cfg or EncoderConfig()
    provider = ParticipantProvider(
        model,
        cfg.modality,
        cfg.tick_hz,
        enc.visual_scale_cm,
        seed=model.seed if seed is None else seed,
        start=start,
    )
    session = run_loop(cfg, provider, enc, sinks=sinks, keep_paths=keep_paths)
    return session.records


def _scaled(traits: ModalityTraits, rng: np.random.Generator, frac: float) -> ModalityTraits:
    def j(v: float) -> float:
        return v * rng.uniform(1.0 - frac, 1.0 + frac)

    return replace(
        traits,
        reaction_latency_mean_ms=j(traits.reaction_latency_mean_ms),
        direction_noise_deg=j(traits.direction_noise_deg),
        speed_cm_s=j(traits.speed_cm_s),
    )


def jitter_model(
    model: ParticipantModel, rng: np.random.Generator, frac: float = 0.10
) -> ParticipantModel:
    """Per-participant trait variation: every rate-like parameter scaled by an
    independent uniform factor in [1-frac, 1+frac]."""
    return replace(
        model,
        haptic=_scaled(model.haptic, rng, frac),
        visual=_scaled(model.visual, rng, frac),
        audio=_scaled(model.audio, rng, frac),
        tremor_noise_cm=model.tremor_noise_cm * rng.uniform(1.0 - frac, 1.0 + frac),
    )


@dataclass
class SessionResult:
    participant: str
    modality: str
    schedule_seed: int
    records: list


@dataclass
class CohortResult:
    sessions: list[SessionResult]

    def participants(self) -> list[str]:
        seen: list[str] = []
        for s in self.sessions:
            if s.participant not in seen:
                seen.append(s.participant)
        return seen

    def timeouts(self) -> int:
        return sum(1 for s in self.sessions for r in s.records if r.timed_out)

    def duration_columns(self, ex_dwell: bool = False) -> dict[str, list[float]]:
        """Per-participant mean durations, aligned by participant order."""
        by_key: dict[tuple[str, str], list[float]] = {}
        modalities: list[str] = []
        for s in self.sessions:
            if s.modality not in modalities:
                modalities.append(s.modality)
            durs = [
                (r.duration_ex_dwell_s if ex_dwell else r.duration_s)
                for r in s.records
                if not r.timed_out
            ]
            by_key.setdefault((s.participant, s.modality), []).extend(durs)
        out: dict[str, list[float]] = {m: [] for m in modalities}
        for p in self.participants():
            for m in modalities:
                durs = by_key.get((p, m), [])
                if not durs:
                    raise ValueError(f"participant {p} has no completed {m} trials")
                out[m].append(math.fsum(durs) / len(durs))
        return out


def run_cohort(
    model: ParticipantModel = DEFAULT_MODEL,
    cfg=None,
    *,
    participants: int = 6,
    modalities: tuple[str, ...] = ("haptic", "visual", "audio"),
    base_seed: int = 1,
    jitter_frac: float = 0.10,
    keep_paths: bool = False,
    encoder_cfg=None,
    sinks_factory=None,
) -> CohortResult:
    """Simulate a whole cohort: every participant runs every modality.

    Each participant's traits are jittered once (shared by all their
    sessions); each session gets an independently seeded schedule and
    perception stream. Deterministic per base_seed. ``sinks_factory`` may
    map (participant, modality, schedule_seed) to a Sinks for logging.
    """
    from .guidance import SessionConfig

    cfg = cfg or SessionConfig()
    pchildren = np.random.SeedSequence(base_seed).spawn(participants)
    sessions: list[SessionResult] = []
    for p in range(participants):
        sub = pchildren[p].spawn(1 + len(modalities))
        jmodel = jitter_model(model, np.random.default_rng(sub[0]), jitter_frac)
        for k, modality in enumerate(modalities):
            srng = np.random.default_rng(sub[1 + k])
            sched_seed = int(srng.integers(0, 2**31 - 1))
            scfg = replace(cfg, modality=modality, seed=sched_seed)
            name = f"p{p}"
            sinks = sinks_factory(name, modality, sched_seed) if sinks_factory else None
            records = run_session(
                jmodel, scfg, encoder_cfg, seed=srng, sinks=sinks, keep_paths=keep_paths
            )
            sessions.append(SessionResult(name, modality, sched_seed, records))
    return CohortResult(sessions=sessions)
