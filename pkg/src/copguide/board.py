"""Balance-board sensing: frame decoding, load calibration, CoP computation,
and the sample sources (replay, sway simulation, live frame adapters).

Coordinate frame: +x is the participant's right, +y is forward, origin at the
board center. Corner order on the wire and everywhere else in this module is
top_right, bottom_right, top_left, bottom_left ("top" = forward edge).
"""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

FRAME_LEN = 8  # four big-endian u16 cells
CORNER_ORDER = ("top_right", "bottom_right", "top_left", "bottom_left")

DEFAULT_MIN_LOAD_KG = 10.0
DEFAULT_TICK_HZ = 100.0


class FrameError(ValueError):
    """A byte sequence that is not a valid board frame."""


class WrongLength(FrameError):
    """Frame length differs from the 8-octet wire schema."""


class TruncatedFrame(WrongLength):
    """Frame shorter than 8 octets (a prefix of a valid frame)."""


class SourceUnavailable(RuntimeError):
    """The requested sample source cannot be opened."""


@dataclass(frozen=True, slots=True)
class RawBoardFrame:
    """One undecoded sensor frame: four u16 cell readings plus a caller-supplied
    timestamp in ms (the wire carries no clock)."""

    ts: int
    top_right: int
    bottom_right: int
    top_left: int
    bottom_left: int

    def cells(self) -> tuple[int, int, int, int]:
        return (self.top_right, self.bottom_right, self.top_left, self.bottom_left)


@dataclass(frozen=True)
class CornerCalibration:
    """Raw readings of one load cell at 0, 17 and 34 kg reference weights."""

    ref0: int
    ref17: int
    ref34: int

    def __post_init__(self) -> None:
        if not (self.ref0 < self.ref17 < self.ref34):
            raise ValueError(
                f"calibration references must be strictly increasing, "
                f"got {self.ref0}, {self.ref17}, {self.ref34}"
            )


@dataclass(frozen=True)
class CalibrationTable:
    top_right: CornerCalibration
    bottom_right: CornerCalibration
    top_left: CornerCalibration
    bottom_left: CornerCalibration

    def corners(self) -> tuple[CornerCalibration, ...]:
        return (self.top_right, self.bottom_right, self.top_left, self.bottom_left)


# Synthetic but realistic table used when a replay log carries raw frames and no
# board-specific table was supplied.
DEFAULT_CALIBRATION = CalibrationTable(
    top_right=CornerCalibration(1700, 4300, 6900),
    bottom_right=CornerCalibration(1650, 4250, 6850),
    top_left=CornerCalibration(1720, 4320, 6920),
    bottom_left=CornerCalibration(1680, 4280, 6880),
)


@dataclass(frozen=True, slots=True)
class LoadSample:
    """Calibrated per-corner loads in kg."""

    ts: int
    top_right: float
    bottom_right: float
    top_left: float
    bottom_left: float

    @property
    def total(self) -> float:
        return self.top_right + self.bottom_right + self.top_left + self.bottom_left


@dataclass(frozen=True)
class BoardGeometry:
    """Sensor span of the board in cm (left-right, front-back)."""

    length_x: float = 43.3
    length_y: float = 23.8

    def __post_init__(self) -> None:
        if self.length_x <= 0 or self.length_y <= 0:
            raise ValueError("board spans must be positive")


DEFAULT_GEOMETRY = BoardGeometry()


@dataclass(slots=True)
class CoPSample:
    """Planar CoP position in cm plus the total load. ``valid`` is False when
    the total load is below the standing threshold; x and y are then 0.

    Not frozen: one of these is created per tick and the frozen-dataclass
    __setattr__ path costs real time in the 100 Hz loop. Treat as immutable.
    """

    ts: int
    x: float
    y: float
    total_load: float
    valid: bool


def parse_frame(data: bytes, ts: int = 0) -> RawBoardFrame:
    """Decode one 8-octet frame (four big-endian u16 cells, TR BR TL BL)."""
    n = len(data)
    if n < FRAME_LEN:
        raise TruncatedFrame(f"frame is {n} octets, expected {FRAME_LEN}")
    if n > FRAME_LEN:
        raise WrongLength(f"frame is {n} octets, expected {FRAME_LEN}")
    tr, br, tl, bl = struct.unpack(">HHHH", data)
    return RawBoardFrame(ts=ts, top_right=tr, bottom_right=br, top_left=tl, bottom_left=bl)


def encode_frame(frame: RawBoardFrame) -> bytes:
    """Inverse of :func:`parse_frame`; used by tooling and round-trip tests."""
    return struct.pack(
        ">HHHH", frame.top_right, frame.bottom_right, frame.top_left, frame.bottom_left
    )


def _calibrate_corner(raw: int, cal: CornerCalibration) -> float:
    # Piecewise linear through the three reference points; clamp below ref0
    # (cells cannot pull), extrapolate on the upper segment above ref34.
    if raw <= cal.ref0:
        return 0.0
    if raw <= cal.ref17:
        return 17.0 * (raw - cal.ref0) / (cal.ref17 - cal.ref0)
    return 17.0 + 17.0 * (raw - cal.ref17) / (cal.ref34 - cal.ref17)


def calibrate(frame: RawBoardFrame, table: CalibrationTable) -> LoadSample:
    """Convert raw cell readings to per-corner loads in kg."""
    tr, br, tl, bl = frame.cells()
    return LoadSample(
        ts=frame.ts,
        top_right=_calibrate_corner(tr, table.top_right),
        bottom_right=_calibrate_corner(br, table.bottom_right),
        top_left=_calibrate_corner(tl, table.top_left),
        bottom_left=_calibrate_corner(bl, table.bottom_left),
    )


def compute_cop(
    sample: LoadSample,
    geom: BoardGeometry = DEFAULT_GEOMETRY,
    min_load: float = DEFAULT_MIN_LOAD_KG,
) -> CoPSample:
    """Moment balance over the four corners.

    x = (length_x/2) * ((TR+BR) - (TL+BL)) / total
    y = (length_y/2) * ((TR+TL) - (BR+BL)) / total

    Below ``min_load`` the sample is flagged invalid with x = y = 0 rather than
    dividing by a near-zero total.
    """
    tr, br, tl, bl = sample.top_right, sample.bottom_right, sample.top_left, sample.bottom_left
    total = tr + br + tl + bl
    if total < min_load:
        return CoPSample(ts=sample.ts, x=0.0, y=0.0, total_load=total, valid=False)
    x = (geom.length_x / 2.0) * ((tr + br) - (tl + bl)) / total
    y = (geom.length_y / 2.0) * ((tr + tl) - (br + bl)) / total
    return CoPSample(ts=sample.ts, x=x, y=y, total_load=total, valid=True)


def loads_for_cop(
    x: float, y: float, total: float, geom: BoardGeometry = DEFAULT_GEOMETRY
) -> LoadSample:
    """Corner loads that place the CoP at (x, y) with the given total load.

    Inverse of :func:`compute_cop` (unique under equal diagonal split); used by
    the simulated sources so their output exercises the same moment-balance
    path as live sensing.
    """
    fx = x / (geom.length_x / 2.0)  # (TR+BR - TL-BL) / total
    fy = y / (geom.length_y / 2.0)
    tr = total * (1 + fx + fy) / 4.0
    br = total * (1 + fx - fy) / 4.0
    tl = total * (1 - fx + fy) / 4.0
    bl = total * (1 - fx - fy) / 4.0
    return LoadSample(ts=0, top_right=tr, bottom_right=br, top_left=tl, bottom_left=bl)


class ReplayCounters:
    """Per-stream counters exposed by the file-backed sources."""

    def __init__(self) -> None:
        self.samples = 0
        self.malformed = 0


class MalformedLogLine(ValueError):
    """A replay-log line that does not parse; skipped, counted."""


def _parse_replay_line(
    line: str,
    table: CalibrationTable,
    geom: BoardGeometry,
    min_load: float,
) -> CoPSample | None:
    """One replay-log line -> CoPSample.

    Two accepted forms, flagged by the second field:
      <ts_ms> kg <tr> <br> <tl> <bl>     calibrated corner loads
      <ts_ms> raw <16 hex digits>        raw frame, calibrated via ``table``
    Blank lines and '#' comments return None.
    """
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    parts = text.split()
    try:
        ts = int(parts[0])
        kind = parts[1]
        if kind == "kg":
            if len(parts) != 6:
                raise ValueError("kg line needs 4 load fields")
            tr, br, tl, bl = (float(p) for p in parts[2:6])
            loads = LoadSample(ts=ts, top_right=tr, bottom_right=br, top_left=tl, bottom_left=bl)
        elif kind == "raw":
            if len(parts) != 3:
                raise ValueError("raw line needs 1 hex field")
            frame = parse_frame(bytes.fromhex(parts[2]), ts=ts)
            loads = calibrate(frame, table)
        else:
            raise ValueError(f"unknown line kind {kind!r}")
    except (ValueError, IndexError) as exc:
        raise MalformedLogLine(str(exc)) from exc
    return compute_cop(loads, geom, min_load)


class ReplaySource:
    """Iterates CoPSamples from a replay log, in file order, skipping (and
    counting) malformed lines. Iterating twice re-reads the file and yields a
    bit-identical sequence."""

    def __init__(
        self,
        path: str | Path,
        table: CalibrationTable = DEFAULT_CALIBRATION,
        geom: BoardGeometry = DEFAULT_GEOMETRY,
        min_load: float = DEFAULT_MIN_LOAD_KG,
    ) -> None:
        self.path = Path(path)
        if not self.path.is_file():
            raise SourceUnavailable(f"replay log not found: {self.path}")
        self.table = table
        self.geom = geom
        self.min_load = min_load
        self.counters = ReplayCounters()

    def __iter__(self) -> Iterator[CoPSample]:
        self.counters = ReplayCounters()
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                try:
                    sample = _parse_replay_line(line, self.table, self.geom, self.min_load)
                except MalformedLogLine:
                    self.counters.malformed += 1
                    continue
                if sample is None:
                    continue
                self.counters.samples += 1
                yield sample


class SwaySource:
    """Open-loop simulated quiet standing: an Ornstein-Uhlenbeck pull toward
    the board center plus per-tick noise. Deterministic per seed."""

    def __init__(
        self,
        seed: int = 0,
        tick_hz: float = DEFAULT_TICK_HZ,
        n_ticks: int | None = None,
        sway_std_cm: float = 0.15,
        pull_per_s: float = 1.5,
        total_load_kg: float = 60.0,
        geom: BoardGeometry = DEFAULT_GEOMETRY,
    ) -> None:
        self.seed = seed
        self.tick_hz = tick_hz
        self.n_ticks = n_ticks
        self.sway_std_cm = sway_std_cm
        self.pull_per_s = pull_per_s
        self.total_load_kg = total_load_kg
        self.geom = geom

    def __iter__(self) -> Iterator[CoPSample]:
        rng = random.Random(self.seed)
        dt = 1.0 / self.tick_hz
        x = y = 0.0
        i = 0
        while self.n_ticks is None or i < self.n_ticks:
            ts = round(i * 1000.0 / self.tick_hz)
            yield CoPSample(ts=ts, x=x, y=y, total_load=self.total_load_kg, valid=True)
            x += -self.pull_per_s * x * dt + rng.gauss(0.0, self.sway_std_cm) * math.sqrt(dt)
            y += -self.pull_per_s * y * dt + rng.gauss(0.0, self.sway_std_cm) * math.sqrt(dt)
            i += 1


class FrameSource:
    """Adapts any iterable of raw 8-octet frames (the external live transport)
    into CoPSamples. Timestamps are synthesized at the tick rate; corrupt
    frames are dropped and counted."""

    def __init__(
        self,
        frames: Iterable[bytes],
        table: CalibrationTable = DEFAULT_CALIBRATION,
        geom: BoardGeometry = DEFAULT_GEOMETRY,
        min_load: float = DEFAULT_MIN_LOAD_KG,
        tick_hz: float = DEFAULT_TICK_HZ,
    ) -> None:
        self.frames = frames
        self.table = table
        self.geom = geom
        self.min_load = min_load
        self.tick_hz = tick_hz
        self.counters = ReplayCounters()

    def __iter__(self) -> Iterator[CoPSample]:
        i = 0
        for blob in self.frames:
            ts = round(i * 1000.0 / self.tick_hz)
            try:
                frame = parse_frame(blob, ts=ts)
            except FrameError:
                self.counters.malformed += 1
                continue
            self.counters.samples += 1
            yield compute_cop(calibrate(frame, self.table), self.geom, self.min_load)
            i += 1


def read_hex_frames(path: str | Path) -> Iterator[bytes]:
    """Frame feed from a file of hex-encoded frames, one per line."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                yield bytes.fromhex(text)
            except ValueError:
                yield b""  # counted as malformed by FrameSource


def open_source(spec: str, **opts) -> Iterable[CoPSample]:
    """Open a sample source from a spec string.

    ``replay:<path>``   replay log (kg or raw lines)
    ``sway[:<seed>]``   open-loop simulated standing
    ``frames:<path>``   hex frame lines through the live-frame adapter
    ``live``            reserved for a real transport; not available here
    """
    if spec.startswith("replay:"):
        return ReplaySource(spec.split(":", 1)[1], **opts)
    if spec == "sway" or spec.startswith("sway:"):
        seed = int(spec.split(":", 1)[1]) if ":" in spec else 0
        return SwaySource(seed=seed, **opts)
    if spec.startswith("frames:"):
        path = Path(spec.split(":", 1)[1])
        if not path.is_file():
            raise SourceUnavailable(f"frame file not found: {path}")
        return FrameSource(read_hex_frames(path), **opts)
    if spec == "live":
        raise SourceUnavailable(
            "no live transport is wired in; feed frames via 'frames:<path>' instead"
        )
    raise SourceUnavailable(f"unknown source spec {spec!r}")
