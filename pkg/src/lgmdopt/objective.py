"""Scoring a simulated LGMD response against segment labels.

Times are in ms unless a name says otherwise; label tracks are in µs.
The voltage trace has one sample per integration step, sample ``i``
covering time ``i * dt``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EmptyConfusion, EmptySample
from .events import Label, LabelTrack
from .neuron import NeuronConstants

_DEFAULT = NeuronConstants()
# slack for comparing spike times that are integer multiples of dt
_EPS = 1e-9


@dataclass(frozen=True)
class DetectorConfig:
    DeltaT: float = 10.0
    SL: float = 13.0
    lead_fraction: float = 0.10

    def __post_init__(self):
        if not self.DeltaT > 0:
            raise ValueError("DeltaT must be positive")
        if self.SL < 0:
            raise ValueError("SL must be non-negative")
        if not 0 <= self.lead_fraction < 1:
            raise ValueError("lead_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class ScoreConfig:
    k: float = 1.0
    l: float = 1.0
    score_c: float = 0.5
    V_spk: float = _DEFAULT.V_T
    V_rest: float = _DEFAULT.E_L

    def __post_init__(self):
        if not self.l >= self.score_c >= 0:
            raise ValueError("need l >= score_c >= 0")


# --------------------------------------------------------------------------
# Detection


def spike_rate(spike_times, t: float, DeltaT: float = 10.0) -> int:
    """Spikes in the window [t, t + DeltaT)."""
    times = np.asarray(spike_times, dtype=float)
    lo = np.searchsorted(times, t - _EPS, side="left")
    hi = np.searchsorted(times, t + DeltaT - _EPS, side="left")
    return int(hi - lo)


def _spike_counts(spike_times, n_steps: int, dt: float) -> np.ndarray:
    steps = np.rint(np.asarray(spike_times, dtype=float) / dt).astype(np.int64)
    steps = steps[(steps >= 0) & (steps < n_steps)]
    return np.bincount(steps, minlength=n_steps)


def sliding_rate(spike_times, n_steps: int, dt: float, DeltaT: float = 10.0) -> np.ndarray:
    """SR(t) for every sample start t = i*dt; windows are clipped at the end of the record."""
    counts = _spike_counts(spike_times, n_steps, dt)
    cum = np.concatenate([[0], np.cumsum(counts)])
    width = int(round(DeltaT / dt))
    ends = np.minimum(np.arange(n_steps) + width, n_steps)
    return cum[ends] - cum[:n_steps]


def _sample_span(start_us: int, end_us: int, dt: float) -> tuple[int, int]:
    step_us = dt * 1000.0
    return int(math.ceil(start_us / step_us - _EPS)), int(math.ceil(end_us / step_us - _EPS))


def classify_segments(spike_times, labels: LabelTrack, det: DetectorConfig = DetectorConfig(),
                      dt: float = 0.1) -> tuple[int, int, int, int]:
    """Confusion counts (TP, FP, TN, FN), one verdict per labelled segment.

    A loom counts as detected only if some window start with SR > SL lies
    before ``end - lead_fraction * length``.
    """
    _, n_steps = _sample_span(0, labels.duration, dt)
    sr = sliding_rate(spike_times, n_steps, dt, det.DeltaT)
    hot = sr > det.SL
    tp = fp = tn = fn = 0
    for start, end, label in labels.intervals:
        if label is Label.LOOMING:
            cutoff = end - det.lead_fraction * (end - start)
            a, b = _sample_span(start, cutoff, dt)
            if hot[a:b].any():
                tp += 1
            else:
                fn += 1
        else:
            a, b = _sample_span(start, end, dt)
            if hot[a:b].any():
                fp += 1
            else:
                tn += 1
    return tp, fp, tn, fn


@dataclass(frozen=True)
class Metrics:
    Acc: float
    Sen: float
    Pre: float
    Spe: float
    # names of ratios that were 0/0 and reported as 0
    undefined: tuple[str, ...] = ()


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def metrics(TP: int, FP: int, TN: int, FN: int) -> Metrics:
    total = TP + FP + TN + FN
    if total == 0:
        raise EmptyConfusion("no segments were classified")
    undefined = []
    return Metrics(
        Acc=(TP + TN) / total,
        Sen=_ratio(TP, TP + FN, "Sen", undefined),
        Pre=_ratio(TP, TP + FP, "Pre", undefined),
        Spe=_ratio(TN, TN + FP, "Spe", undefined),
        undefined=tuple(undefined),
    )


# --------------------------------------------------------------------------
# Score and voltage regularisation


def reward(t: float, Delta_t: float, k: float = 1.0, spiking: bool = True, looming: bool = True) -> float:
    if not (spiking and looming):
        return 0.0
    return k * math.exp(t / Delta_t) + 1.0


def punishment(t: float, Delta_t: float, l: float = 1.0, score_c: float = 0.5,
               spiking: bool = True, looming: bool = False) -> float:
    """Triangular penalty over a non-loom segment, peaking at its midpoint."""
    if looming or not spiking:
        return 0.0
    half = Delta_t / 2
    if t < half:
        return (l - score_c) * t / Delta_t + score_c
    return (l - score_c) * (1.0 - (t - half) / half) + score_c


def score(spike_times, labels: LabelTrack, cfg: ScoreConfig = ScoreConfig(), dt: float = 0.1) -> float:
    """Total reward minus total punishment over the dt samples that hold a spike."""
    _, n_steps = _sample_span(0, labels.duration, dt)
    spiking = _spike_counts(spike_times, n_steps, dt) > 0
    total = 0.0
    for start, end, label in labels.intervals:
        a, b = _sample_span(start, end, dt)
        idx = np.nonzero(spiking[a:b])[0] + a
        if len(idx) == 0:
            continue
        length = (end - start) / 1000.0
        t = idx * dt - start / 1000.0
        if label is Label.LOOMING:
            total += float(np.sum(cfg.k * np.exp(t / length) + 1.0))
        else:
            half = length / 2
            ramp = np.where(t < half, t / length, 1.0 - (t - half) / half)
            total -= float(np.sum((cfg.l - cfg.score_c) * ramp + cfg.score_c))
    return total


def ideal_trace(labels: LabelTrack, n_samples: int, cfg: ScoreConfig = ScoreConfig(), dt: float = 0.1) -> np.ndarray:
    ideal = np.full(n_samples, cfg.V_rest)
    for start, end, label in labels.intervals:
        if label is Label.LOOMING:
            a, b = _sample_span(start, end, dt)
            ideal[a:b] = cfg.V_spk
    return ideal


def sseos(v_trace, labels: LabelTrack, cfg: ScoreConfig = ScoreConfig(), dt: float = 0.1,
          spike_mask=None) -> float:
    """Negated squared error between the trace and the ideal loom response.

    Spike samples (``spike_mask``, or samples above ``V_spk`` when no mask
    is given) are set to ``V_spk`` before differencing.
    """
    v = np.array(v_trace, dtype=float)
    mask = v > cfg.V_spk if spike_mask is None else np.asarray(spike_mask, dtype=bool)
    v[mask] = cfg.V_spk
    err = v - ideal_trace(labels, len(v), cfg, dt)
    return -float(np.dot(err, err))


def fitness(Score: float, SSEOS: float) -> float:
    return (Score + SSEOS) / 2


def fitness_acc(F: float, Acc: float) -> float:
    """Fold accuracy into the fitness.

    Perfect accuracy doubles a positive F and forgives a negative one;
    otherwise a negative F is scaled by Acc and a non-negative F is kept.
    """
    if not 0.0 <= Acc <= 1.0:
        raise ValueError("Acc must lie in [0, 1]")
    if F > 0 and Acc == 1:
        return 2 * F
    if Acc == 1 and F < 0:
        return 0.0
    if F < 0:
        return Acc * F
    return F


def f_init(Acc: float, v_trace) -> float:
    """Accuracy minus the l2 norm of the voltage trace."""
    return Acc - float(np.linalg.norm(np.asarray(v_trace, dtype=float)))


# --------------------------------------------------------------------------
# Report


@dataclass
class FitnessReport:
    F_acc: float
    F: float
    Score: float
    SSEOS: float
    TP: int
    FP: int
    TN: int
    FN: int
    Acc: float
    Sen: float
    Pre: float
    Spe: float
    undefined: list[str] = field(default_factory=list)

    FIELDS = ("F_acc", "F", "Score", "SSEOS", "TP", "FP", "TN", "FN", "Acc", "Sen", "Pre", "Spe")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "FitnessReport":
        return cls(**{k: d[k] for k in cls.FIELDS}, undefined=list(d.get("undefined", [])))

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(cls.FIELDS)

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow([repr(getattr(self, k)) if isinstance(getattr(self, k), float)
                                                     else getattr(self, k) for k in self.FIELDS])
        return buf.getvalue()


def evaluate(result, labels: LabelTrack, det: DetectorConfig = DetectorConfig(),
             cfg: ScoreConfig = ScoreConfig()) -> FitnessReport:
    """Full objective for one SimResult."""
    dt = result.dt
    tp, fp, tn, fn = classify_segments(result.lgmd_spike_times, labels, det, dt)
    m = metrics(tp, fp, tn, fn)
    sc = score(result.lgmd_spike_times, labels, cfg, dt)
    n = len(result.lgmd_voltage)
    spike_mask = _spike_counts(result.lgmd_spike_times, n, dt) > 0
    ss = sseos(result.lgmd_voltage, labels, cfg, dt, spike_mask=spike_mask)
    f = fitness(sc, ss)
    return FitnessReport(
        F_acc=fitness_acc(f, m.Acc), F=f, Score=sc, SSEOS=ss, TP=tp, FP=fp, TN=tn, FN=fn,
        Acc=m.Acc, Sen=m.Sen, Pre=m.Pre, Spe=m.Spe, undefined=list(m.undefined),
    )


def segment_rates(spike_times, labels: LabelTrack, DeltaT: float = 10.0) -> list[tuple[Label, float]]:
    """Mean spike count per DeltaT window for each labelled segment."""
    times = np.asarray(spike_times, dtype=float)
    out = []
    for start, end, label in labels.intervals:
        a, b = start / 1000.0, end / 1000.0
        n = np.searchsorted(times, b - _EPS) - np.searchsorted(times, a - _EPS)
        out.append((label, float(n) * DeltaT / (b - a) if b > a else 0.0))
    return out


def mean_rates_by_label(spike_times, labels: LabelTrack, DeltaT: float = 10.0) -> dict[Label, float]:
    rates = segment_rates(spike_times, labels, DeltaT)
    return {lab: float(np.mean([r for l_, r in rates if l_ is lab])) for lab in Label
            if any(l_ is lab for l_, _ in rates)}


# --------------------------------------------------------------------------
# Rank-sum test

EXACT_MAX = 8


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _exact_tails(ranks2: np.ndarray, n: int, target2: int) -> tuple[float, float]:
    """P(R <= r) and P(R >= r) for the doubled rank sum of a random n-subset."""
    total = int(ranks2.sum())
    # ways[j][s]: subsets of size j with doubled rank sum s
    ways = np.zeros((n + 1, total + 1), dtype=object)
    ways[0, 0] = 1
    for r in ranks2:
        r = int(r)
        for j in range(n, 0, -1):
            ways[j, r:] = ways[j, r:] + ways[j - 1, :total + 1 - r]
    dist = ways[n]
    count = sum(dist)
    lower = sum(dist[:target2 + 1])
    upper = sum(dist[target2:])
    return lower / count, upper / count


def mann_whitney_u(a, b) -> tuple[float, float]:
    """U statistic of ``a`` against ``b`` and its two-sided p-value.

    U counts pairs with a > b, ties counting one half. The p-value is exact
    (enumeration over all rank assignments, ties kept as midranks) when both
    samples have at most 8 values, and otherwise uses the normal
    approximation with tie and continuity corrections.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if len(a) == 0 or len(b) == 0:
        raise EmptySample("both samples need at least one value")
    n, m = len(a), len(b)
    ranks = _midranks(np.concatenate([a, b]))
    rank_sum = ranks[:n].sum()
    U = float(rank_sum - n * (n + 1) / 2)
    if n <= EXACT_MAX and m <= EXACT_MAX:
        ranks2 = np.rint(2 * ranks).astype(np.int64)
        lower, upper = _exact_tails(ranks2, n, int(round(2 * rank_sum)))
        return U, float(min(1.0, 2 * min(lower, upper)))
    N = n + m
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_counts ** 3 - tie_counts)) / (N * (N - 1))
    var = n * m / 12 * ((N + 1) - tie_term)
    if var <= 0:
        return U, 1.0
    z = max(abs(U - n * m / 2) - 0.5, 0.0) / math.sqrt(var)
    return U, float(min(1.0, math.erfc(z / math.sqrt(2))))
