"""Event association: segment counting, association types and cycle assembly."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from . import clustering
from .clustering import ClusterParams, EventCluster
from .filtration import ConditionRow

TYPES = ("single", "repetitive", "occasional", "unrelated")


@dataclass(frozen=True)
class AssociationParams:
    b: float = 0.3
    c: float = 0.8
    segment_factor: float = 1.5
    prefilter_power_band: float = 3.0
    # pooled segment events mix sub-loads of every kind, so category weights
    # tuned to the appliance's own signature are not used by default
    cluster_method: str = "mean_shift"
    # smallest (P [W], Q [var], THD [%]) spread given the full normalized range
    min_span: tuple = (300.0, 300.0, 10.0)

    def __post_init__(self):
        if not 0.0 < self.b < self.c <= 1.0:
            raise ValueError("need 0 < b < c <= 1")
        if self.cluster_method not in clustering.METHODS:
            raise ValueError(f"cluster_method must be one of {clustering.METHODS}")
        object.__setattr__(self, "min_span", tuple(float(x) for x in self.min_span))
        if len(self.min_span) != 3 or min(self.min_span) < 0:
            raise ValueError("min_span needs three non-negative spreads")
        if self.segment_factor <= 0 or self.prefilter_power_band <= 0:
            raise ValueError("segment_factor and prefilter_power_band must be positive")


@dataclass
class DataSegment:
    anchor: object
    start: int
    end: int
    events: list

    @property
    def length_s(self) -> float:
        return self.end - self.start


def segment_length_s(row: ConditionRow, params: AssociationParams) -> float:
    return params.segment_factor * row.avg_duration_min * 60.0


def build_segments(authentic: EventCluster, all_events, row: ConditionRow,
                   params: AssociationParams | None = None) -> list[DataSegment]:
    """One segment per authentic ON event; over-powered events are dropped up front.

    Only the high side of the power band is pruned so small ancillary events
    (lights, fans) stay countable.
    """
    params = params or AssociationParams()
    if not authentic.members:
        raise ValueError("authentic cluster is empty")
    length = segment_length_s(row, params)
    limit = params.prefilter_power_band * abs(authentic.mean_P)
    events = sorted(all_events, key=lambda e: e.t)
    times = [e.t for e in events]
    segments = []
    for anchor in sorted(authentic.members, key=lambda e: e.t):
        tags = {"AB"} if row.phase_condition == "double" else {anchor.phase_tag}
        end = anchor.t + length
        lo = bisect.bisect_left(times, anchor.t)
        hi = bisect.bisect_left(times, end)
        inside = [e for e in events[lo:hi] if e.phase_tag in tags and abs(e.dP) <= limit]
        if not any(e is anchor or e == anchor for e in inside):
            inside.insert(0, anchor)
        segments.append(DataSegment(anchor, anchor.t, int(math.ceil(end)), inside))
    return segments


def classify_type(N: int, n_max: int, M: int, b: float = 0.3, c: float = 0.8) -> str:
    if N >= c * M:
        return "repetitive" if n_max >= 2 else "single"
    if N >= b * M:
        return "occasional"
    return "unrelated"


@dataclass
class AssociatedEventClass:
    cluster: EventCluster
    type: str
    N: int
    n_max: int
    counts: list = field(default_factory=list)
    offsets: list = field(default_factory=list)
    is_anchor: bool = False

    @property
    def median_offset(self) -> float:
        return float(np.median(self.offsets)) if self.offsets else math.inf

    @property
    def direction(self) -> str:
        return self.cluster.direction


def classify_association(clusters, counts, M: int, params: AssociationParams | None = None,
                         offsets=None) -> list[AssociatedEventClass]:
    """Type each cluster from its per-segment occurrence counts.

    ``counts[i]`` lists how often cluster ``i`` occurs in each of the ``M``
    segments.
    """
    params = params or AssociationParams()
    if M < 1:
        raise ValueError("need at least one segment")
    out = []
    for i, (cl, cnt) in enumerate(zip(clusters, counts)):
        N = int(sum(cnt))
        n_max = int(max(cnt)) if len(cnt) else 0
        out.append(AssociatedEventClass(cl, classify_type(N, n_max, M, params.b, params.c), N, n_max,
                                        list(cnt), list(offsets[i]) if offsets is not None else []))
    return out


def associate(authentic: EventCluster, all_events, row: ConditionRow,
              params: AssociationParams | None = None,
              cluster_params: ClusterParams | None = None):
    """Segment, pool, cluster and classify; returns ``(classes, segments)``."""
    params = params or AssociationParams()
    cluster_params = cluster_params or ClusterParams()
    segments = build_segments(authentic, all_events, row, params)
    pooled = [(k, e) for k, seg in enumerate(segments) for e in seg.events]
    pooled.sort(key=lambda item: (item[1].t, item[0]))
    evs = [e for _, e in pooled]
    feats = clustering.event_features(evs)
    if params.cluster_method == "mean_shift":
        z, sc = clustering.normalize_array(feats, cluster_params.norm_lo, cluster_params.norm_hi,
                                           params.min_span)
        labels = clustering.mean_shift_labels(z, sc.degenerate, cluster_params)
    else:
        labels = clustering.weight_based_labels(feats, row.weights, cluster_params)
    labels = clustering._relabel_by_first(labels, np.array([e.t for e in evs]))
    n_cl = int(labels.max()) + 1 if len(labels) else 0
    M = len(segments)
    counts = np.zeros((n_cl, M), dtype=int)
    offsets = [[] for _ in range(n_cl)]
    members = [[] for _ in range(n_cl)]
    anchor_hits = np.zeros(n_cl, dtype=int)
    for (k, e), lab in zip(pooled, labels):
        counts[lab, k] += 1
        offsets[lab].append(e.t - segments[k].anchor.t)
        members[lab].append(e)
        if e == segments[k].anchor:
            anchor_hits[lab] += 1
    clusters = [EventCluster.from_members(m) for m in members]
    classes = classify_association(clusters, counts.tolist(), M, params, offsets)
    if n_cl:
        classes[int(np.argmax(anchor_hits))].is_anchor = True
    return classes, segments


@dataclass
class CycleStep:
    label: int
    kind: str
    direction: str
    median_offset_s: float
    mean_P: float
    mean_Q: float
    mean_THD: float
    N: int
    n_max: int

    @property
    def occasional(self) -> bool:
        return self.kind == "occasional"


@dataclass
class CycleSignature:
    appliance: str
    steps: list
    segments_used: int
    open_cycle: bool = False
    anomalous: bool = False
    warnings: list = field(default_factory=list)

    @property
    def ordered_pattern(self) -> list:
        """Step labels in temporal order; occasional ones are bracketed strings."""
        out = []
        for s in self.steps:
            if s.kind == "occasional":
                out.append(f"({s.label})")
            elif s.kind == "repetitive":
                out.append(f"{s.label}~")
            else:
                out.append(str(s.label))
        return out

    def main_labels(self) -> list:
        return [s.label for s in self.steps if not s.occasional]

    def occasional_labels(self) -> list:
        return [s.label for s in self.steps if s.occasional]

    def pattern_string(self) -> str:
        parts = []
        group = []
        for s in self.steps:
            if s.occasional:
                group.append(str(s.label))
                continue
            if group:
                parts.append("(" + " → ".join(group) + ")")
                group = []
            parts.append(f"{s.label}~" if s.kind == "repetitive" else str(s.label))
        if group:
            parts.append("(" + " → ".join(group) + ")")
        return " → ".join(parts)

    def direction_pattern(self) -> str:
        return " → ".join(f"({s.direction})" if s.occasional else s.direction for s in self.steps)


def assemble_cycle(classes, segments, appliance: str = "") -> CycleSignature:
    """Order strong classes by median offset from the anchor and slot occasional ones in."""
    kept = [c for c in classes if c.type != "unrelated"]
    anchors = [c for c in kept if c.is_anchor] or [c for c in kept if c.direction == "ON"][:1]
    if not anchors:
        raise ValueError("no anchor ON class to assemble a cycle from")
    anchor = anchors[0]
    main = sorted((c for c in kept if c.type in ("single", "repetitive")),
                  key=lambda c: (c is not anchor, c.median_offset))
    if anchor not in main:
        main.insert(0, anchor)
    occ = sorted((c for c in kept if c.type == "occasional" and c is not anchor),
                 key=lambda c: c.median_offset)
    labelled = {id(c): i + 1 for i, c in enumerate(main + occ)}
    timeline = main[:1] + sorted(main[1:] + occ, key=lambda c: (c.median_offset, c.type == "occasional"))
    steps = [CycleStep(labelled[id(c)], c.type, c.direction, c.median_offset, c.cluster.mean_P,
                       c.cluster.mean_Q, c.cluster.mean_THD, c.N, c.n_max) for c in timeline]
    offs = [c for c in main if c.direction == "OFF"]
    open_cycle = not offs
    single_offs = [c for c in main if c.direction == "OFF" and c.type == "single"]
    warnings = []
    if open_cycle:
        warnings.append("open cycle: no OFF event is strongly associated")
    anomalous = len(single_offs) != 1
    if anomalous and not open_cycle:
        warnings.append(f"{len(single_offs)} single OFF classes (expected exactly one)")
    return CycleSignature(appliance, steps, len(segments), open_cycle, anomalous, warnings)
