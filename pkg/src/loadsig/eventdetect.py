"""Steady-state edge detection on 1 Hz per-phase power series."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import powercalc
from .meterdata import LoadEvent, MeterRecording

THD_MODES = ("auto", "quadrature", "linear", "vector")


class DetectionError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeDetectParams:
    min_edge_W: float = 50.0
    settle_window_s: int = 3
    pre_window_s: int = 3
    spike_ratio: float = 1.5
    phase_pair_tolerance_s: int = 1
    # sample-to-sample change that opens a transition; None -> min_edge_W / 2
    step_tol_W: float | None = None
    thd_mode: str = "auto"
    # a 240 V load draws equal current on both legs; larger A/B dP ratios are coincidences
    pair_balance_ratio: float = 2.0

    def __post_init__(self):
        if self.min_edge_W <= 0:
            raise DetectionError("min_edge_W must be positive")
        if self.settle_window_s < 1 or self.pre_window_s < 1:
            raise DetectionError("windows must be at least 1 s")
        if self.spike_ratio <= 1:
            raise DetectionError("spike_ratio must exceed 1")
        if self.pair_balance_ratio < 1:
            raise DetectionError("pair_balance_ratio must be at least 1")
        if self.thd_mode not in THD_MODES:
            raise DetectionError(f"thd_mode must be one of {THD_MODES}")

    @property
    def step_tol(self) -> float:
        return self.step_tol_W if self.step_tol_W is not None else self.min_edge_W / 2.0


def _blocks(valid: np.ndarray):
    m = np.concatenate([[False], valid, [False]]).astype(np.int8)
    d = np.diff(m)
    return zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1))


def _event_thd(series, lo, s, e, hi, dP, dQ, mode):
    if mode == "vector" or (mode == "auto" and series.harmonics is not None):
        if series.harmonics is None:
            raise DetectionError("vector THD needs waveform-derived harmonics")
        delta = series.harmonics[e:hi].mean(axis=0) - series.harmonics[lo:s].mean(axis=0)
        phasors = dict(zip(powercalc.ODD_ORDERS, delta))
        if abs(phasors[1]) == 0:
            return math.nan
        return powercalc.phasor_thd(phasors)
    # harmonic "VA" per sample: THD * |S| is proportional to the harmonic current
    s_mag = np.hypot(series.P, series.Q)
    h_before = float(np.mean(series.THD[lo:s] * s_mag[lo:s]))
    h_after = float(np.mean(series.THD[e:hi] * s_mag[e:hi]))
    load = math.hypot(dP, dQ)
    if math.isnan(h_before) or math.isnan(h_after) or load == 0:
        return math.nan
    if mode == "linear":
        return abs(h_after - h_before) / load
    return math.sqrt(abs(h_after ** 2 - h_before ** 2)) / load


def detect_phase(rec: MeterRecording, phase: str, params: EdgeDetectParams) -> list[LoadEvent]:
    series = rec.phases[phase]
    P = series.P
    settle, pre = params.settle_window_s, params.pre_window_s
    tol = params.step_tol
    events = []
    for b0, b1 in _blocks(series.valid):
        if b1 - b0 < pre + settle:
            continue
        d = np.diff(P[b0:b1])
        big = np.flatnonzero(np.abs(d) > tol) + b0 + 1
        prev_end = b0
        k = 0
        while k < len(big):
            s = e = int(big[k])
            while k + 1 < len(big) and big[k + 1] <= e + settle - 1:
                k += 1
                e = int(big[k])
            k += 1
            hi = e + settle
            if hi > b1:
                break
            lo = max(b0, prev_end, s - pre)
            prev_end = e
            if lo >= s:
                continue
            before = float(P[lo:s].mean())
            after = float(P[e:hi].mean())
            dP = after - before
            if abs(dP) < params.min_edge_W or dP == 0:
                continue
            dQ = float(series.Q[e:hi].mean() - series.Q[lo:s].mean())
            direction = "ON" if dP > 0 else "OFF"
            spike = False
            if direction == "ON":
                peak = float(P[s:e + 1].max())
                spike = (peak - before) > params.spike_ratio * dP
            # several same-signed jumps inside one transition -> overlapping switchings
            jumps = np.diff(P[s - 1:e + 1])
            same = np.sum((np.abs(jumps) > tol) & (np.sign(jumps) == np.sign(dP)))
            thd = _event_thd(series, lo, s, e, hi, dP, dQ, params.thd_mode)
            # stamp at the largest jump so a noise step opening the transition early does not shift it
            t_edge = s + int(np.argmax(np.abs(jumps)))
            events.append(LoadEvent(
                t=int(rec.start + t_edge), phase_tag=phase, direction=direction, dP=dP, dQ=dQ,
                thd=thd, spike=bool(spike), corrupted_hint=bool(same >= 2),
            ))
    return events


def detect_events(rec: MeterRecording, params: EdgeDetectParams | None = None) -> list[LoadEvent]:
    """Single-phase events from every phase of ``rec``, sorted by time then phase."""
    params = params or EdgeDetectParams()
    if rec.n < params.pre_window_s + params.settle_window_s:
        raise DetectionError("recording too short")
    out = []
    for phase in sorted(rec.phases):
        out.extend(detect_phase(rec, phase, params))
    out.sort(key=lambda e: (e.t, e.phase_tag))
    return out


def _merge(a: LoadEvent, b: LoadEvent) -> LoadEvent:
    sa, sb = math.hypot(a.dP, a.dQ), math.hypot(b.dP, b.dQ)
    if math.isnan(a.thd) or math.isnan(b.thd):
        thd = math.nan
    else:
        thd = (a.thd * sa + b.thd * sb) / (sa + sb)
    return LoadEvent(
        t=min(a.t, b.t), phase_tag="AB", direction=a.direction, dP=a.dP + b.dP, dQ=a.dQ + b.dQ,
        thd=thd, spike=a.spike or b.spike, corrupted_hint=a.corrupted_hint or b.corrupted_hint,
    )


def pair_double_phase(events_A, events_B, params: EdgeDetectParams | None = None) -> list[LoadEvent]:
    """Merge simultaneous, same-direction and roughly balanced A/B edges into AB events."""
    params = params or EdgeDetectParams()
    tol = params.phase_pair_tolerance_s
    used = [False] * len(events_B)
    out = []
    j0 = 0
    for a in events_A:
        while j0 < len(events_B) and events_B[j0].t < a.t - tol:
            j0 += 1
        match = None
        j = j0
        while j < len(events_B) and events_B[j].t <= a.t + tol:
            b = events_B[j]
            if not used[j] and b.direction == a.direction:
                lo, hi = sorted((abs(a.dP), abs(b.dP)))
                if hi <= params.pair_balance_ratio * lo:
                    match = j
                    break
            j += 1
        if match is None:
            out.append(a)
        else:
            used[match] = True
            out.append(_merge(a, events_B[match]))
    out.extend(b for b, u in zip(events_B, used) if not u)
    out.sort(key=lambda e: (e.t, e.phase_tag))
    return out


def _phase_set(tag: str) -> set:
    return {"A", "B"} if tag == "AB" else {tag}


def mark_corrupted(events, collision_window_s: int = 6) -> list[LoadEvent]:
    """Flag events that sit within ``collision_window_s`` of another edge on a shared phase."""
    events = list(events)
    flags = [e.corrupted_hint for e in events]
    for i, a in enumerate(events):
        for j in range(i + 1, len(events)):
            b = events[j]
            if b.t - a.t >= collision_window_s:
                break
            if _phase_set(a.phase_tag) & _phase_set(b.phase_tag):
                flags[i] = flags[j] = True
    return [replace(e, corrupted_hint=f) if f != e.corrupted_hint else e for e, f in zip(events, flags)]


def detect_all(rec: MeterRecording, params: EdgeDetectParams | None = None) -> list[LoadEvent]:
    """Detection, double-phase pairing and collision marking in one pass."""
    params = params or EdgeDetectParams()
    raw = detect_events(rec, params)
    a = [e for e in raw if e.phase_tag == "A"]
    b = [e for e in raw if e.phase_tag == "B"]
    paired = pair_double_phase(a, b, params)
    return mark_corrupted(paired, params.pre_window_s + params.settle_window_s)
