"""The looming-detection tuning problem as a black-box objective."""

from __future__ import annotations

import logging
import math

import numpy as np

from .errors import NumericalBlowup
from .events import EventStream, LabelTrack, pool_to_grid, synthesize_composite
from .network import (REFERENCE_CLAMP, Bounds, ParamVector, Topology, Variant, build, clip_to_bounds,
                      simulate)
from .neuron import NeuronConstants
from .objective import DetectorConfig, FitnessReport, ScoreConfig, evaluate

log = logging.getLogger(__name__)


class LoomingObjective:
    """Maps a flat parameter vector to F_acc on a fixed stimulus.

    The vector follows ``bounds.names``; values are clipped into the bounds
    before the network is built. A simulation that blows up scores NaN.
    Instances are picklable, so they can be shipped to worker processes.
    """

    def __init__(self, stream: EventStream, labels: LabelTrack, variant=Variant.LGMD,
                 topo: Topology = Topology(), consts: NeuronConstants = NeuronConstants(),
                 clamp_c: float = REFERENCE_CLAMP, det: DetectorConfig = DetectorConfig(),
                 score_cfg: ScoreConfig = ScoreConfig(), bounds: Bounds | None = None):
        self.variant = Variant(variant)
        self.topo = topo
        if (stream.width, stream.height) != (topo.width, topo.height):
            stream = pool_to_grid(stream, topo.width, topo.height)
        self.stream = stream
        self.labels = labels
        self.consts = consts
        self.clamp_c = clamp_c
        self.det = det
        self.score_cfg = score_cfg
        self.bounds = bounds or Bounds.for_variant(self.variant)

    @classmethod
    def composite(cls, seed=0, **kw) -> "LoomingObjective":
        stream, labels = synthesize_composite(seed)
        return cls(stream, labels, **kw)

    @property
    def names(self) -> tuple[str, ...]:
        return self.bounds.names

    def params(self, x) -> ParamVector:
        return clip_to_bounds(ParamVector.from_array(np.asarray(x, dtype=float), self.names), self.bounds)

    def report(self, x) -> FitnessReport | None:
        """Full fitness report at ``x``; None if the simulation blew up."""
        net = build(self.params(x), self.topo, self.variant, self.consts, self.clamp_c)
        try:
            result = simulate(net, self.stream)
        except NumericalBlowup as exc:
            log.warning("simulation blew up: %s", exc)
            return None
        return evaluate(result, self.labels, self.det, self.score_cfg)

    def __call__(self, x) -> float:
        rep = self.report(x)
        return math.nan if rep is None else rep.F_acc
