"""The one session loop: sample source -> guidance -> feedback -> sinks.

Every run mode (live frames, replay, simulated participant, UI mouse source)
drives this loop with a different sample provider; the loop itself never
branches on the mode, which is what makes a replayed log reproduce a run
bit for bit.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Protocol

from ..board import CoPSample
from ..feedback import EncoderConfig, make_emitter
from ..guidance import GuidanceSession, Phase, SessionConfig


class SampleProvider(Protocol):
    def next_sample(self) -> CoPSample | None:
        """Next sample, or None when the stream ends."""

    def observe(self, commands: list, ts: int) -> None:
        """Feedback emitted at ts (closed-loop providers react; others ignore)."""


class IteratorProvider:
    """Wraps any iterable of CoPSamples (replay, sway, live frames)."""

    def __init__(self, samples: Iterable[CoPSample]) -> None:
        self._it: Iterator[CoPSample] = iter(samples)

    def next_sample(self) -> CoPSample | None:
        return next(self._it, None)

    def observe(self, commands: list, ts: int) -> None:
        pass


class Sinks:
    """No-op sink set; subclasses forward to logs, the bus, or both."""

    def on_sample(self, s: CoPSample) -> None:
        pass

    def on_command(self, cmd, ts: int) -> None:
        pass

    def on_event(self, ev) -> None:
        pass

    def on_trial(self, record) -> None:
        pass

    def on_finish(self, session: GuidanceSession) -> None:
        pass


class CompositeSinks(Sinks):
    def __init__(self, *sinks: Sinks) -> None:
        self.sinks = [s for s in sinks if s is not None]

    def on_sample(self, s):
        for k in self.sinks:
            k.on_sample(s)

    def on_command(self, cmd, ts):
        for k in self.sinks:
            k.on_command(cmd, ts)

    def on_event(self, ev):
        for k in self.sinks:
            k.on_event(ev)

    def on_trial(self, record):
        for k in self.sinks:
            k.on_trial(record)

    def on_finish(self, session):
        for k in self.sinks:
            k.on_finish(session)


def run_loop(
    cfg: SessionConfig,
    provider: SampleProvider,
    encoder_cfg: EncoderConfig | None = None,
    sinks: Sinks | None = None,
    keep_paths: bool = True,
    max_ticks: int | None = None,
) -> GuidanceSession:
    """Drive a full session; returns the finished (or stream-exhausted) session."""
    enc = encoder_cfg or EncoderConfig()
    session = GuidanceSession(cfg, keep_paths=keep_paths)
    emitter = make_emitter(cfg.modality)
    emitter_step = emitter.step
    step = session.step
    next_sample = provider.next_sample
    observe = provider.observe
    guiding, dwelling = Phase.GUIDING, Phase.DWELLING
    ticks = 0

    while not session.finished:
        s = next_sample()
        if s is None:
            break
        events = step(s)
        if sinks is not None:
            sinks.on_sample(s)
            for ev in events:
                sinks.on_event(ev)
                if ev.name in ("trial_complete", "trial_timeout"):
                    sinks.on_trial(session.records[-1])
        phase = session.phase
        if s.valid and (phase is guiding or phase is dwelling):
            target = session.targets[session.schedule[session.trial_no]]
            commands = emitter_step(target.x - s.x, target.y - s.y, session.in_region, s.ts, enc)
            if commands:
                observe(commands, s.ts)
                if sinks is not None:
                    for cmd in commands:
                        sinks.on_command(cmd, s.ts)
        ticks += 1
        if max_ticks is not None and ticks >= max_ticks:
            break
    if sinks is not None:
        sinks.on_finish(session)
    return session
