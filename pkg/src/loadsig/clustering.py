"""Suspect-event clustering in (P, Q, THD) space and dominant-cluster selection.

Two methods are provided: flat-kernel mean-shift over min-max normalized
features, and a sequential weight-based method whose similarity index weighs
the three attributes by appliance category.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .meterdata import LoadEvent

METHODS = ("mean_shift", "weight_based")


class ClusteringError(RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class InsufficientEventsError(ClusteringError):
    pass


@dataclass(frozen=True)
class ClusterParams:
    method: str = "weight_based"
    bandwidth: float = 10.0
    similarity_threshold: float = 0.8
    norm_lo: float = 1.0
    norm_hi: float = 100.0
    max_iter: int = 500
    convergence_eps: float = 1e-3
    seed_index: int = 0
    allow_bandwidth_override: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not self.allow_bandwidth_override and not 5.0 <= self.bandwidth <= 20.0:
            raise ValueError("bandwidth must lie in [5, 20] unless allow_bandwidth_override is set")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if not 0.0 < self.similarity_threshold < 1.0:
            raise ValueError("similarity_threshold must lie in (0, 1)")
        if self.norm_hi <= self.norm_lo:
            raise ValueError("norm_hi must exceed norm_lo")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


def event_features(events) -> np.ndarray:
    """Rows of (dP [W], dQ [var], THD [%]); unknown THD counts as 0."""
    f = np.array([[e.dP, e.dQ, e.thd * 100.0] for e in events], dtype=float).reshape(-1, 3)
    f[:, 2] = np.nan_to_num(f[:, 2], nan=0.0)
    return f


@dataclass
class EventCluster:
    members: list
    mean_P: float
    mean_Q: float
    mean_THD: float  # fraction

    @classmethod
    def from_members(cls, members) -> "EventCluster":
        if not members:
            raise ValueError("a cluster needs at least one member")
        f = event_features(members)
        m = f.mean(axis=0)
        return cls(list(members), float(m[0]), float(m[1]), float(m[2]) / 100.0)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def mass(self) -> float:
        return float(sum(abs(e.dP) for e in self.members))

    @property
    def first_t(self) -> int:
        return min(e.t for e in self.members)

    @property
    def direction(self) -> str:
        return "ON" if self.mean_P > 0 else "OFF"


@dataclass
class Scaling:
    lo: np.ndarray
    hi: np.ndarray
    degenerate: np.ndarray
    out_lo: float = 1.0
    out_hi: float = 100.0

    def transform(self, f: np.ndarray) -> np.ndarray:
        span = np.where(self.degenerate, 1.0, self.hi - self.lo)
        z = self.out_lo + (f - self.lo) * (self.out_hi - self.out_lo) / span
        return np.where(self.degenerate, (self.out_lo + self.out_hi) / 2.0, z)

    def inverse(self, z: np.ndarray) -> np.ndarray:
        span = np.where(self.degenerate, 0.0, self.hi - self.lo)
        return self.lo + (z - self.out_lo) * span / (self.out_hi - self.out_lo)


@dataclass
class FeatureSet:
    events: list
    matrix: np.ndarray
    scaling: Scaling
    raw: np.ndarray = field(repr=False, default=None)

    @property
    def degenerate(self) -> np.ndarray:
        return self.scaling.degenerate


def normalize_array(f: np.ndarray, lo_out: float = 1.0, hi_out: float = 100.0,
                    min_span=None) -> tuple[np.ndarray, Scaling]:
    """Min-max scaling per column.

    ``min_span`` optionally widens (about its midpoint) any column whose
    spread is smaller, so measurement noise on a nearly constant feature is
    not stretched over the whole output range.
    """
    f = np.asarray(f, dtype=float)
    lo = f.min(axis=0)
    hi = f.max(axis=0)
    degenerate = ~(hi > lo)
    if min_span is not None:
        span = np.asarray(min_span, dtype=float)
        short = ~degenerate & (hi - lo < span)
        mid = (hi + lo) / 2.0
        lo = np.where(short, mid - span / 2.0, lo)
        hi = np.where(short, mid + span / 2.0, hi)
    sc = Scaling(lo, hi, degenerate, lo_out, hi_out)
    return sc.transform(f), sc


def normalize_features(events, params: ClusterParams | None = None) -> FeatureSet:
    """Min-max scale each of P, Q, THD to [norm_lo, norm_hi]; constant features go to the midpoint."""
    params = params or ClusterParams()
    raw = event_features(events)
    z, sc = normalize_array(raw, params.norm_lo, params.norm_hi)
    return FeatureSet(list(events), z, sc, raw)


def _relabel_by_first(labels: np.ndarray, order_key: np.ndarray) -> np.ndarray:
    # cluster ids ordered by the earliest member under order_key
    first = {}
    for idx in np.argsort(order_key, kind="stable"):
        first.setdefault(int(labels[idx]), len(first))
    return np.array([first[int(l)] for l in labels], dtype=int)


def mean_shift_labels(z: np.ndarray, degenerate: np.ndarray, params: ClusterParams) -> np.ndarray:
    n = len(z)
    if n == 0:
        return np.zeros(0, dtype=int)
    x = z[:, ~degenerate] if (~degenerate).any() else np.zeros((n, 1))
    y = x.copy()
    bw2 = params.bandwidth ** 2
    converged = False
    for _ in range(params.max_iter):
        d2 = ((y[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
        w = (d2 <= bw2).astype(float)
        y_new = w @ x / w.sum(axis=1, keepdims=True)
        shift = np.max(np.abs(y_new - y))
        y = y_new
        if shift < params.convergence_eps:
            converged = True
            break
    modes = []
    for p in y:
        if not any(np.sum((p - m) ** 2) < (params.bandwidth / 2.0) ** 2 for m in modes):
            modes.append(p)
    modes = np.array(modes)
    # each event joins the mode nearest to its own position
    labels = np.argmin(((x[:, None, :] - modes[None, :, :]) ** 2).sum(axis=2), axis=1)
    if not converged:
        raise ClusteringError("mean-shift did not converge", partial=labels)
    return labels


def _clusters_from_labels(events, labels) -> list[EventCluster]:
    t = np.array([e.t for e in events])
    labels = _relabel_by_first(np.asarray(labels), t)
    groups = {}
    for idx in np.argsort(t, kind="stable"):
        groups.setdefault(int(labels[idx]), []).append(events[idx])
    return [EventCluster.from_members(groups[k]) for k in sorted(groups)]


def mean_shift_cluster(features: FeatureSet, params: ClusterParams | None = None) -> list[EventCluster]:
    params = params or ClusterParams(method="mean_shift")
    if params.method != "mean_shift":
        raise ValueError("params.method must be mean_shift")
    try:
        labels = mean_shift_labels(features.matrix, features.degenerate, params)
    except ClusteringError as exc:
        raise ClusteringError(str(exc), partial=_clusters_from_labels(features.events, exc.partial)) from exc
    return _clusters_from_labels(features.events, labels)


def similarity_components(event: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Per-attribute similarity of one event against cluster means, shape (k, 3).

    Each component is ``1 - |x_e - x_c| / |x_c|`` when the deviation does not
    exceed ``|x_c|`` and 0 otherwise; a zero cluster value scores 1 only for an
    exactly zero event value.
    """
    means = np.atleast_2d(means)
    dev = np.abs(event[None, :] - means)
    ref = np.abs(means)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s = np.where(dev <= ref, 1.0 - dev / ref, 0.0)
    zero = ref == 0
    s = np.where(zero, (dev == 0).astype(float), s)
    return s


def similarity(event, mean, weights) -> float:
    e = np.asarray(event, dtype=float)
    c = np.asarray(mean, dtype=float)
    return float(similarity_components(e, c)[0] @ np.asarray(weights, dtype=float))


def weight_based_labels(f: np.ndarray, weights, params: ClusterParams, order=None) -> np.ndarray:
    """Sequential similarity clustering; returns a label per row of ``f``.

    Rows are visited in ``order`` (default: as given) rotated by
    ``params.seed_index``; the first visited row seeds the first cluster.
    """
    n = len(f)
    if n == 0:
        return np.zeros(0, dtype=int)
    w = np.asarray(weights, dtype=float)
    thr = params.similarity_threshold
    order = list(range(n)) if order is None else list(order)
    k = params.seed_index % n
    order = order[k:] + order[:k]

    members: list[list[int]] = []
    sums: list[np.ndarray] = []
    means = np.empty((0, 3))
    for i in order:
        if len(members):
            s = similarity_components(f[i], means) @ w
            best = int(np.argmax(s))
            if s[best] >= thr:
                members[best].append(i)
                sums[best] = sums[best] + f[i]
                means[best] = sums[best] / len(members[best])
                continue
        members.append([i])
        sums.append(f[i].copy())
        means = np.vstack([means, f[i]])

    for _ in range(params.max_iter):
        changed = False
        new_members: list[list[int]] = []
        new_sums: list[np.ndarray] = []
        new_means = np.empty((0, 3))
        for mem, sm in zip(members, sums):
            m = sm / len(mem)
            if len(new_members):
                s = similarity_components(m, new_means) @ w
                best = int(np.argmax(s))
                if s[best] >= thr:
                    new_members[best] = new_members[best] + mem
                    new_sums[best] = new_sums[best] + sm
                    new_means[best] = new_sums[best] / len(new_members[best])
                    changed = True
                    continue
            new_members.append(list(mem))
            new_sums.append(sm.copy())
            new_means = np.vstack([new_means, m])
        members, sums = new_members, new_sums
        if not changed:
            break
    else:
        labels = np.empty(n, dtype=int)
        for c, mem in enumerate(members):
            labels[mem] = c
        raise ClusteringError("weight-based clustering did not settle", partial=labels)

    labels = np.empty(n, dtype=int)
    for c, mem in enumerate(members):
        labels[mem] = c
    return labels


def weight_based_cluster(events, weights, params: ClusterParams | None = None) -> list[EventCluster]:
    params = params or ClusterParams()
    if params.method != "weight_based":
        raise ValueError("params.method must be weight_based")
    events = list(events)
    order = sorted(range(len(events)), key=lambda i: events[i].t)
    try:
        labels = weight_based_labels(event_features(events), weights, params, order)
    except ClusteringError as exc:
        raise ClusteringError(str(exc), partial=_clusters_from_labels(events, exc.partial)) from exc
    return _clusters_from_labels(events, labels)


def cluster_events(events, weights, params: ClusterParams) -> list[EventCluster]:
    """Dispatch on ``params.method``."""
    events = list(events)
    if not events:
        return []
    if params.method == "mean_shift":
        return mean_shift_cluster(normalize_features(events, params), params)
    return weight_based_cluster(events, weights, params)


def select_dominant(clusters, min_size: int = 1) -> EventCluster:
    """Largest cluster; ties go to larger total |dP|, then the earliest first event."""
    if not clusters:
        raise InsufficientEventsError("insufficient authentic events: no clusters")
    best = min(clusters, key=lambda c: (-c.size, -c.mass, c.first_t))
    if best.size < min_size:
        raise InsufficientEventsError(
            f"insufficient authentic events: dominant cluster has {best.size} < {min_size}")
    return best


def means_as_events(clusters) -> list[LoadEvent]:
    """One synthetic event per cluster at its mean, stamped with the cluster's first time."""
    out = []
    for c in clusters:
        out.append(LoadEvent(t=c.first_t, phase_tag=c.members[0].phase_tag, direction=c.direction,
                             dP=c.mean_P, dQ=c.mean_Q, thd=c.mean_THD))
    return out
