"""Event-camera streams: CSV I/O, synthetic stimuli, labels and input filters.

Timestamps are integer microseconds. Pixel coordinates follow image
convention: ``x`` is the column, ``y`` the row.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple

import numpy as np

from .errors import (
    DegenerateStimulus,
    GridMismatch,
    InvalidProbability,
    OutOfBounds,
    ParseError,
    UnsortedTimestamps,
)

FRAME_PITCH_US = 1000


class Polarity(enum.IntEnum):
    OFF = 0
    ON = 1


class Event(NamedTuple):
    t: int
    x: int
    y: int
    polarity: Polarity


@dataclass(eq=False)
class EventStream:
    """Time-sorted events of a ``width`` x ``height`` sensor.

    Events are stored column-wise in numpy arrays; iterating yields
    :class:`Event` tuples.
    """

    width: int
    height: int
    t: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    x: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int32))
    y: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int32))
    polarity: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int8))
    duration: int | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64)
        self.x = np.asarray(self.x, dtype=np.int32)
        self.y = np.asarray(self.y, dtype=np.int32)
        self.polarity = np.asarray(self.polarity, dtype=np.int8)
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.polarity) == n):
            raise ValueError("event columns differ in length")
        if self.duration is None:
            self.duration = int(self.t[-1]) if n else 0
        self.duration = int(self.duration)

    def __len__(self):
        return len(self.t)

    def __iter__(self) -> Iterator[Event]:
        for t, x, y, p in zip(self.t, self.x, self.y, self.polarity):
            yield Event(int(t), int(x), int(y), Polarity(int(p)))

    def __getitem__(self, i) -> Event:
        return Event(int(self.t[i]), int(self.x[i]), int(self.y[i]), Polarity(int(self.polarity[i])))

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.duration == other.duration
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.polarity, other.polarity)
        )

    def subset(self, mask) -> "EventStream":
        return EventStream(
            self.width, self.height, self.t[mask], self.x[mask], self.y[mask],
            self.polarity[mask], duration=self.duration,
        )

    def shifted(self, offset_us: int) -> "EventStream":
        return EventStream(
            self.width, self.height, self.t + offset_us, self.x, self.y,
            self.polarity, duration=self.duration + offset_us,
        )

    def check(self):
        """Raise if the stream breaks its ordering or bounds invariants."""
        if len(self) and np.any(np.diff(self.t) < 0):
            raise UnsortedTimestamps(int(np.argmax(np.diff(self.t) < 0)) + 2)
        bad = (self.x < 0) | (self.x >= self.width) | (self.y < 0) | (self.y >= self.height)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise OutOfBounds(i + 2, int(self.x[i]), int(self.y[i]), self.width, self.height)
        if len(self) and (self.t[0] < 0 or self.t[-1] > self.duration):
            raise ValueError("event outside [0, duration]")


class Label(enum.Enum):
    LOOMING = "loom"
    NON_LOOMING = "nonloom"


@dataclass
class LabelTrack:
    """Disjoint, sorted ``(start_us, end_us, label)`` intervals."""

    intervals: list[tuple[int, int, Label]]

    def __post_init__(self):
        self.intervals = [(int(s), int(e), Label(lab)) for s, e, lab in self.intervals]

    @property
    def duration(self) -> int:
        return self.intervals[-1][1] if self.intervals else 0

    def count(self, label: Label) -> int:
        return sum(1 for *_, lab in self.intervals if lab is label)

    def check(self, duration: int | None = None):
        pos = 0
        for s, e, _ in self.intervals:
            if s != pos or e < s:
                raise ValueError(f"label intervals not contiguous at {s} us")
            pos = e
        if duration is not None and pos != duration:
            raise ValueError(f"labels end at {pos} us, stream lasts {duration} us")

    def mask(self, times_us, label: Label = Label.LOOMING) -> np.ndarray:
        """Boolean array: is each time inside an interval carrying ``label``?

        Intervals are half-open ``[start, end)`` except that the final end
        point belongs to the last interval.
        """
        times_us = np.asarray(times_us, dtype=float)
        out = np.zeros(times_us.shape, dtype=bool)
        last = len(self.intervals) - 1
        for k, (s, e, lab) in enumerate(self.intervals):
            if lab is not label:
                continue
            inside = (times_us >= s) & ((times_us < e) | ((k == last) & (times_us == e)))
            out |= inside
        return out

    def shifted(self, offset_us: int) -> "LabelTrack":
        return LabelTrack([(s + offset_us, e + offset_us, lab) for s, e, lab in self.intervals])


# --------------------------------------------------------------------------
# CSV wire format


def _decode(data) -> list[str]:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    return data.split("\n")


def parse_event_file(data) -> EventStream:
    """Parse the event CSV format.

    The first non-comment line holds ``width height``; each further line is
    ``t_us,x,y,polarity``. Lines starting with ``#`` are ignored.
    """
    lines = _decode(data)
    header = None
    ts, xs, ys, ps = [], [], [], []
    prev_t = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(lineno, "expected header 'width height'")
            try:
                header = (int(parts[0]), int(parts[1]))
            except ValueError:
                raise ParseError(lineno, "non-integer header") from None
            if header[0] <= 0 or header[1] <= 0:
                raise ParseError(lineno, "sensor dimensions must be positive")
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(lineno, "expected 't_us,x,y,polarity'")
        try:
            t, x, y, p = (int(v) for v in parts)
        except ValueError:
            raise ParseError(lineno, "non-integer field") from None
        if t < 0:
            raise ParseError(lineno, "negative timestamp")
        if p not in (0, 1):
            raise ParseError(lineno, "polarity must be 0 or 1")
        if prev_t is not None and t < prev_t:
            raise UnsortedTimestamps(lineno)
        if not (0 <= x < header[0] and 0 <= y < header[1]):
            raise OutOfBounds(lineno, x, y, *header)
        prev_t = t
        ts.append(t)
        xs.append(x)
        ys.append(y)
        ps.append(p)
    if header is None:
        raise ParseError(1, "missing header")
    return EventStream(header[0], header[1], ts, xs, ys, ps)


def serialize_events(stream: EventStream, comment: str | None = None) -> bytes:
    out = []
    if comment:
        out.extend(f"# {c}" for c in comment.splitlines())
    out.append(f"{stream.width} {stream.height}")
    cols = np.column_stack([stream.t, stream.x, stream.y, stream.polarity]).astype(np.int64)
    out.extend(f"{t},{x},{y},{p}" for t, x, y, p in cols.tolist())
    return ("\n".join(out) + "\n").encode("utf-8")


def parse_label_file(data) -> LabelTrack:
    intervals = []
    for lineno, raw in enumerate(_decode(data), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(lineno, "expected 'start_us,end_us,label'")
        try:
            s, e = int(parts[0]), int(parts[1])
            lab = Label(parts[2].strip())
        except ValueError:
            raise ParseError(lineno, "bad label record") from None
        intervals.append((s, e, lab))
    track = LabelTrack(intervals)
    try:
        track.check()
    except ValueError as exc:
        raise ParseError(0, str(exc)) from None
    return track


def serialize_labels(track: LabelTrack, comment: str | None = None) -> bytes:
    out = [f"# {c}" for c in comment.splitlines()] if comment else []
    out.extend(f"{s},{e},{lab.value}" for s, e, lab in track.intervals)
    return ("\n".join(out) + "\n").encode("utf-8")


# --------------------------------------------------------------------------
# Synthetic stimuli


class Shape(enum.Enum):
    CIRCLE = "circle"
    SQUARE = "square"


class Motion(enum.Enum):
    LOOM = "loom"
    SHRINK = "shrink"
    TRANSLATE_LR = "translate_lr"
    TRANSLATE_RL = "translate_rl"


@dataclass(frozen=True)
class StimulusSpec:
    """A single moving shape rendered in black on white (or the reverse).

    ``expansion_rate`` is in pixels per second: the growth (or shrink) rate
    of the shape's diameter, or the centre speed for translations. ``size``
    is the diameter (side length for squares) at the start of motion.
    Motion begins after ``hold`` microseconds of a static shape and, when
    ``motion_us`` is set, stops after that long, leaving the shape still.
    """

    shape: Shape = Shape.CIRCLE
    motion: Motion = Motion.LOOM
    expansion_rate: float = 266.0
    duration: int = 1_000_000
    dark_on_light: bool = True
    width: int = 128
    height: int = 128
    size: float = 4.0
    center: tuple[float, float] | None = None
    hold: int = 0
    motion_us: int | None = None
    events_per_change: int = 1

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        object.__setattr__(self, "motion", Motion(self.motion))
        if self.expansion_rate < 0:
            raise ValueError("expansion_rate must be non-negative")
        if self.duration < 0 or self.hold < 0:
            raise ValueError("durations must be non-negative")
        if self.events_per_change < 1:
            raise ValueError("events_per_change must be at least 1")

    def start_center(self) -> tuple[float, float]:
        if self.center is not None:
            return self.center
        cy = (self.height - 1) / 2
        if self.motion is Motion.TRANSLATE_LR:
            return (-self.size / 2, cy)
        if self.motion is Motion.TRANSLATE_RL:
            return (self.width - 1 + self.size / 2, cy)
        return ((self.width - 1) / 2, cy)

    def geometry(self, t_us: float) -> tuple[float, float, float]:
        """Centre x, centre y and diameter at time ``t_us``."""
        cx, cy = self.start_center()
        moving = max(t_us - self.hold, 0)
        if self.motion_us is not None:
            moving = min(moving, self.motion_us)
        tau = moving * 1e-6
        d = self.size
        if self.motion is Motion.LOOM:
            d = self.size + self.expansion_rate * tau
        elif self.motion is Motion.SHRINK:
            d = max(self.size - self.expansion_rate * tau, 0.0)
        elif self.motion is Motion.TRANSLATE_LR:
            cx += self.expansion_rate * tau
        else:
            cx -= self.expansion_rate * tau
        return cx, cy, d


def render(spec: StimulusSpec, t_us: float) -> np.ndarray:
    """Binary frame, True where the pixel is dark."""
    cx, cy, d = spec.geometry(t_us)
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width]
    r = d / 2
    if spec.shape is Shape.CIRCLE:
        inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
    else:
        inside = (np.abs(xs - cx) <= r) & (np.abs(ys - cy) <= r)
    if d <= 0:
        inside[:] = False
    return inside if spec.dark_on_light else ~inside


def synthesize(spec: StimulusSpec, seed=None) -> tuple[EventStream, LabelTrack]:
    """Render ``spec`` at 1 ms frame pitch and emit change events.

    A pixel whose binarised luminance differs between consecutive frames
    emits ``events_per_change`` events (one by default), ON when it turns
    dark. Event times are drawn uniformly inside the frame interval that
    produced them, so the stream is asynchronous within each millisecond.
    """
    if spec.size > min(spec.width, spec.height):
        raise DegenerateStimulus(
            f"shape of size {spec.size} px exceeds {spec.width}x{spec.height} frame"
        )
    rng = np.random.default_rng(seed)
    n_frames = spec.duration // FRAME_PITCH_US
    ts, xs, ys, ps = [], [], [], []
    prev = render(spec, 0)
    for k in range(1, n_frames + 1):
        cur = render(spec, k * FRAME_PITCH_US)
        changed = cur != prev
        if changed.any():
            yy, xx = np.nonzero(changed)
            if spec.events_per_change > 1:
                yy = np.repeat(yy, spec.events_per_change)
                xx = np.repeat(xx, spec.events_per_change)
            ts.append((k - 1) * FRAME_PITCH_US + rng.integers(1, FRAME_PITCH_US + 1, size=len(xx)))
            xs.append(xx)
            ys.append(yy)
            ps.append(cur[yy, xx].astype(np.int8))
        prev = cur
    if ts:
        t = np.concatenate(ts)
        order = np.argsort(t, kind="stable")
        stream = EventStream(
            spec.width, spec.height, t[order], np.concatenate(xs)[order],
            np.concatenate(ys)[order], np.concatenate(ps)[order], duration=spec.duration,
        )
    else:
        stream = EventStream(spec.width, spec.height, duration=spec.duration)
    label = Label.LOOMING if spec.motion is Motion.LOOM else Label.NON_LOOMING
    return stream, LabelTrack([(0, spec.duration, label)])


def concatenate(parts: list[tuple[EventStream, LabelTrack]]) -> tuple[EventStream, LabelTrack]:
    """Join segments end to end; the cut between segments emits no events."""
    width, height = parts[0][0].width, parts[0][0].height
    offset = 0
    streams, intervals = [], []
    for stream, labels in parts:
        if (stream.width, stream.height) != (width, height):
            raise GridMismatch("segments differ in sensor size")
        streams.append(stream.shifted(offset))
        intervals.extend(labels.shifted(offset).intervals)
        offset += stream.duration
    cat = lambda name: np.concatenate([getattr(s, name) for s in streams])  # noqa: E731
    stream = EventStream(width, height, cat("t"), cat("x"), cat("y"), cat("polarity"), duration=offset)
    return stream, LabelTrack(intervals)


# Loom speeds span the range the stimuli were recorded at.
COMPOSITE_SPEED_RANGE = (266.0, 1478.0)
COMPOSITE_NONLOOM_CYCLE = (Motion.SHRINK, Motion.TRANSLATE_LR, Motion.SHRINK, Motion.TRANSLATE_RL)


@dataclass(frozen=True)
class CompositeDesign:
    """Geometry of the composite benchmark, all in sensor pixels.

    Each segment is its motion followed by ``rest_us`` of the shape held
    still, so the response tail of a segment stays inside that segment.
    """

    width: int = 128
    height: int = 128
    loom_start: float = 8.0
    loom_end: float = 96.0
    shrink_start: float = 40.0
    shrink_end: float = 8.0
    translate_size: float = 24.0
    rest_us: int = 50_000
    jitter_px: float = 6.0
    speed_range: tuple[float, float] = COMPOSITE_SPEED_RANGE
    events_per_change: int = 8


def composite_specs(seed=None, design: CompositeDesign = CompositeDesign()) -> list[StimulusSpec]:
    """The 16 segment specs of the composite: loom, non-loom, loom, ...

    Loom diameter rates increase geometrically across the sequence; each
    non-loom segment moves its edges at the speed of the loom before it.
    """
    rng = np.random.default_rng(seed)
    lo, hi = design.speed_range
    rates = lo * (hi / lo) ** (np.arange(8) / 7)
    w, h = design.width, design.height

    def segment(motion, rate, size, centre, travel):
        motion_us = int(round(travel / rate * 1e6))
        return StimulusSpec(
            Shape.CIRCLE, motion, float(rate), motion_us + design.rest_us, width=w, height=h,
            size=size, center=centre, motion_us=motion_us, events_per_change=design.events_per_change,
        )

    def jittered_centre():
        jx, jy = rng.uniform(-design.jitter_px, design.jitter_px, size=2)
        return ((w - 1) / 2 + jx, (h - 1) / 2 + jy)

    specs = []
    for i, rate in enumerate(rates):
        specs.append(segment(Motion.LOOM, rate, design.loom_start, jittered_centre(),
                             design.loom_end - design.loom_start))
        motion = COMPOSITE_NONLOOM_CYCLE[i % len(COMPOSITE_NONLOOM_CYCLE)]
        if motion is Motion.SHRINK:
            specs.append(segment(motion, rate, design.shrink_start, jittered_centre(),
                                 design.shrink_start - design.shrink_end))
        else:
            # edge speed of a loom is half its diameter rate
            d = design.translate_size
            cy = (h - 1) / 2 + rng.uniform(-design.jitter_px, design.jitter_px)
            cx = -d / 2 if motion is Motion.TRANSLATE_LR else w - 1 + d / 2
            specs.append(segment(motion, rate / 2, d, (cx, cy), w + d))
    return specs


def synthesize_composite(seed=None, design: CompositeDesign = CompositeDesign()) -> tuple[EventStream, LabelTrack]:
    """Eight looms interleaved with eight shrinks and translations."""
    rng = np.random.default_rng(seed)
    specs = composite_specs(rng, design)
    return concatenate([synthesize(s, rng) for s in specs])


# --------------------------------------------------------------------------
# Filters


def drop_events(stream: EventStream, p: float, seed=None) -> EventStream:
    """Keep each event independently with probability ``1 - p``."""
    if not 0.0 <= p <= 1.0 or np.isnan(p):
        raise InvalidProbability(f"drop probability {p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    keep = rng.random(len(stream)) >= p
    return stream.subset(keep)


def pool_to_grid(stream: EventStream, target_w: int, target_h: int) -> EventStream:
    if stream.width % target_w or stream.height % target_h:
        raise GridMismatch(
            f"{target_w}x{target_h} does not divide {stream.width}x{stream.height}"
        )
    x = stream.x.astype(np.int64) * target_w // stream.width
    y = stream.y.astype(np.int64) * target_h // stream.height
    return replace(stream, width=target_w, height=target_h, x=x, y=y)
