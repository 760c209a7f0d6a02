"""Guidance encoders: error vector -> modality-specific commands.

Haptic: the waist motors toward the needed movement direction vibrate at
100 Hz, switching to 150 Hz inside the allowable region. Visual: a point in a
square, offset proportional to the error. Audio: spoken clock positions
(12 = forward, clockwise), with "answer" inside the region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MOTOR_FRONT = "front"
MOTOR_BACK = "back"
MOTOR_LEFT = "left"
MOTOR_RIGHT = "right"
ALL_MOTORS = frozenset((MOTOR_FRONT, MOTOR_BACK, MOTOR_LEFT, MOTOR_RIGHT))

FREQ_GUIDING_HZ = 100
FREQ_IN_REGION_HZ = 150

ANSWER = "answer"

# Absorbs float noise at the exact half-hour tie bearings so ties round toward
# the larger hour regardless of atan2 rounding; shifts each boundary by < 1e-7 deg.
_TIE_EPS = 1e-9


class ZeroVector(ValueError):
    """No bearing exists for a zero error vector."""


@dataclass(frozen=True)
class EncoderConfig:
    deadzone_cm: float = 1.0  # per-axis, haptic only
    visual_scale_cm: float = 10.0  # error magnitude mapped to the square edge
    audio_repeat_ms: int = 1500
    success_pulse_ms: int = 200  # all-motor cue on region entry when no motor is active

    def __post_init__(self) -> None:
        if self.deadzone_cm < 0:
            raise ValueError("deadzone must be non-negative")
        if self.visual_scale_cm <= 0:
            raise ValueError("visual scale must be positive")


@dataclass(frozen=True, slots=True)
class HapticCommand:
    motors: frozenset[str]
    freq_hz: int


@dataclass(frozen=True, slots=True)
class HapticPulse:
    """Timed all-motor burst; distinct from steady guidance commands, which
    never drive opposing motors."""

    motors: frozenset[str]
    freq_hz: int
    duration_ms: int


@dataclass(slots=True)
class VisualCommand:
    # Not frozen: emitted every tick while the CoP moves; see CoPSample.
    px: float  # normalized offset in [-1, 1]
    py: float
    in_region: bool


@dataclass(frozen=True, slots=True)
class AudioCommand:
    prompt: int | str  # clock hour 1..12, or ANSWER


FeedbackCommand = HapticCommand | HapticPulse | VisualCommand | AudioCommand


def encode_haptic(ex: float, ey: float, in_region: bool, cfg: EncoderConfig) -> HapticCommand:
    """Per-axis sign rule with a deadzone; frequency 150 Hz iff in-region."""
    dz = cfg.deadzone_cm
    motors = set()
    if ex > dz:
        motors.add(MOTOR_RIGHT)
    elif ex < -dz:
        motors.add(MOTOR_LEFT)
    if ey > dz:
        motors.add(MOTOR_FRONT)
    elif ey < -dz:
        motors.add(MOTOR_BACK)
    return HapticCommand(
        motors=frozenset(motors),
        freq_hz=FREQ_IN_REGION_HZ if in_region else FREQ_GUIDING_HZ,
    )


def encode_visual(ex: float, ey: float, in_region: bool, cfg: EncoderConfig) -> VisualCommand:
    """Error scaled to the square, clamped to its edges."""
    s = cfg.visual_scale_cm
    px = min(max(ex / s, -1.0), 1.0)
    py = min(max(ey / s, -1.0), 1.0)
    return VisualCommand(px=px, py=py, in_region=in_region)


def bearing_deg(ex: float, ey: float) -> float:
    """Bearing of the error vector in [0, 360): 0 = forward (+y), clockwise."""
    if ex == 0.0 and ey == 0.0:
        raise ZeroVector("bearing undefined for a zero error vector")
    return math.degrees(math.atan2(ex, ey)) % 360.0


def bearing_to_clock(ex: float, ey: float) -> int:
    """Clock hour (1..12) for the error bearing; each hour spans 30 degrees,
    ties at the half-hour bearing round toward the larger hour."""
    b = bearing_deg(ex, ey)
    hour = int(math.floor(b / 30.0 + 0.5 + _TIE_EPS)) % 12
    return 12 if hour == 0 else hour


class HapticEmitter:
    """Turns the per-tick haptic state into bus emissions: a command whenever
    the (motors, freq) state changes, plus the success pulse on region entry
    when the axis rule leaves every motor idle."""

    def __init__(self) -> None:
        self._last: HapticCommand | None = None
        self._was_in_region = False

    def step(
        self, ex: float, ey: float, in_region: bool, now_ms: int, cfg: EncoderConfig
    ) -> list[HapticCommand | HapticPulse]:
        cmd = encode_haptic(ex, ey, in_region, cfg)
        out: list[HapticCommand | HapticPulse] = []
        if in_region and not self._was_in_region and not cmd.motors:
            out.append(
                HapticPulse(
                    motors=ALL_MOTORS,
                    freq_hz=FREQ_IN_REGION_HZ,
                    duration_ms=cfg.success_pulse_ms,
                )
            )
        if cmd != self._last:
            out.append(cmd)
            self._last = cmd
        self._was_in_region = in_region
        return out


class AudioEmitter:
    """Prompt cadence: clock prompts re-issue when the hour changes or after
    audio_repeat_ms; "answer" plays on region entry and repeats on the same
    cadence while inside."""

    def __init__(self) -> None:
        self._last_prompt: int | str | None = None
        self._last_ms: int | None = None

    def step(
        self, ex: float, ey: float, in_region: bool, now_ms: int, cfg: EncoderConfig
    ) -> list[AudioCommand]:
        if in_region:
            prompt: int | str = ANSWER
        elif ex == 0.0 and ey == 0.0:
            return []  # zero error outside the region: nothing to say yet
        else:
            prompt = bearing_to_clock(ex, ey)
        due = (
            self._last_prompt != prompt
            or self._last_ms is None
            or now_ms - self._last_ms >= cfg.audio_repeat_ms
        )
        if not due:
            return []
        self._last_prompt = prompt
        self._last_ms = now_ms
        return [AudioCommand(prompt=prompt)]


class VisualEmitter:
    """Visual guidance is a continuously shown frame; re-emit on any change."""

    def __init__(self) -> None:
        self._last: VisualCommand | None = None

    def step(
        self, ex: float, ey: float, in_region: bool, now_ms: int, cfg: EncoderConfig
    ) -> list[VisualCommand]:
        cmd = encode_visual(ex, ey, in_region, cfg)
        if cmd == self._last:
            return []
        self._last = cmd
        return [cmd]


def make_emitter(modality: str):
    if modality == "haptic":
        return HapticEmitter()
    if modality == "visual":
        return VisualEmitter()
    if modality == "audio":
        return AudioEmitter()
    raise ValueError(f"unknown modality {modality!r}")
