"""Deterministic synthetic household generator with ground-truth event logs.

Appliances are sets of components (motor, element, light...) switched by a
small program language; schedules place program runs in daily time windows.
Harmonic currents of different loads are assumed uncorrelated, so the
harmonic magnitude of an aggregate is the root-sum-square of its parts::

    THD_total = sqrt(sum_c (THD_c * |S_c|)**2) / |S_total|

Scenario JSON::

    {"name": ..., "epoch": "2024-01-01T00:00:00", "noise_sigma": 5, "v_rms": 120,
     "baseload": {"A": {"P": 200, "Q": 40, "THD_pct": 4}},
     "appliances": [{
        "name": "Fridge", "phase": "A",
        "components": {"compressor": {"P": 150, "Q": 90, "THD_pct": 8}},
        "program": [
            {"label": "on", "on": ["compressor"], "inrush": [4, 2]},
            {"label": "off", "off": ["compressor"], "delay_s": [720, 1080]},
            {"repeat": [1, 3], "body": [...]},
            {"probability": 0.3, "body": [...]}],
        "schedule": {"mode": "daily", "cycles_per_day": [2, 3],
                     "windows": [{"start": "07:00", "end": "08:30", "days": ["Sat"]}],
                     "min_gap_s": 60}
        # or {"mode": "periodic", "off_s": [1500, 2400], "windows": [...]}
     }]}
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from importlib import resources
from pathlib import Path

import numpy as np

from . import powercalc
from .filtration import DAY_NAMES, ConditionError, SearchWindow
from .meterdata import MeterRecording, PhaseSeries

TRUTH_HEADER = ["t_s", "appliance", "direction", "dP_W", "dQ_var", "THD_pct", "state"]
DAY_S = 86400


class ScenarioError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class Component:
    P: float
    Q: float = 0.0
    THD: float = 0.0  # fraction
    spectrum: dict | None = None
    harmonic_angles: dict | None = None

    @property
    def S(self) -> float:
        return math.hypot(self.P, self.Q)

    @property
    def H(self) -> float:
        return self.THD * self.S


@dataclass
class Schedule:
    mode: str = "daily"
    cycles_per_day: tuple = (1, 1)
    off_s: tuple = (1800, 3600)
    windows: tuple = (SearchWindow(0, DAY_S),)
    min_gap_s: int = 60


@dataclass
class ApplianceModel:
    name: str
    phase: str
    components: dict
    program: list
    schedule: Schedule = field(default_factory=Schedule)
    category: str = ""


@dataclass
class Scenario:
    name: str
    appliances: list
    epoch: datetime = datetime(2024, 1, 1)
    noise_sigma: float = 5.0
    v_rms: float = 120.0
    baseload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TruthEvent:
    t: int
    appliance: str
    direction: str
    dP: float
    dQ: float
    thd: float
    state: str
    phase: str = "A"
    cycle: int = -1
    inrush: bool = False


@dataclass
class GroundTruthLog:
    events: list
    aggregate: dict  # phase -> (P, Q) pre-noise arrays
    draws: dict  # appliance -> cycles started per day
    intervals: list = field(default_factory=list)  # (appliance, component, start, end)
    per_appliance: dict | None = None

    def for_appliance(self, name: str) -> list:
        return [e for e in self.events if e.appliance == name]

    def state_means(self) -> dict:
        """``{(appliance, state): (dP, dQ, thd, direction, count)}`` averaged over logged events."""
        acc = {}
        for e in self.events:
            acc.setdefault((e.appliance, e.state), []).append(e)
        out = {}
        for key, evs in acc.items():
            thd = [e.thd for e in evs if not math.isnan(e.thd)]
            out[key] = (float(np.mean([e.dP for e in evs])), float(np.mean([e.dQ for e in evs])),
                        float(np.mean(thd)) if thd else math.nan, evs[0].direction, len(evs))
        return out


# ---------------------------------------------------------------- parsing


def _num_range(v, path, integer=False):
    if isinstance(v, (int, float)):
        lo = hi = v
    else:
        try:
            lo, hi = v
        except (TypeError, ValueError):
            raise ScenarioError(path, "expected a number or a [lo, hi] pair") from None
    if not isinstance(lo, (int, float)) or not isinstance(hi, (int, float)) or lo > hi:
        raise ScenarioError(path, f"bad range {v!r}")
    return (int(lo), int(hi)) if integer else (float(lo), float(hi))


def _parse_component(d, path) -> Component:
    if not isinstance(d, dict) or "P" not in d:
        raise ScenarioError(path, "component needs at least P")
    try:
        return Component(
            P=float(d["P"]), Q=float(d.get("Q", 0.0)), THD=float(d.get("THD_pct", 0.0)) / 100.0,
            spectrum={int(k): float(v) for k, v in d["spectrum"].items()} if d.get("spectrum") else None,
            harmonic_angles={int(k): float(v) for k, v in d["harmonic_angles"].items()}
            if d.get("harmonic_angles") else None,
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(path, str(exc)) from exc


def _parse_program(items, comps, path, first=True) -> list:
    if not isinstance(items, list) or not items:
        raise ScenarioError(path, "program must be a non-empty list")
    out = []
    for i, it in enumerate(items):
        p = f"{path}[{i}]"
        if not isinstance(it, dict):
            raise ScenarioError(p, "program item must be an object")
        if "repeat" in it:
            out.append({"repeat": _num_range(it["repeat"], p + ".repeat", integer=True),
                        "body": _parse_program(it.get("body"), comps, p + ".body", first=False)})
            continue
        if "probability" in it:
            prob = it["probability"]
            if not isinstance(prob, (int, float)) or not 0 <= prob <= 1:
                raise ScenarioError(p + ".probability", "must lie in [0, 1]")
            out.append({"probability": float(prob),
                        "body": _parse_program(it.get("body"), comps, p + ".body", first=False)})
            continue
        on, off = list(it.get("on", [])), list(it.get("off", []))
        if bool(on) == bool(off):
            raise ScenarioError(p, "a step switches components either on or off (exactly one of on/off)")
        for c in on + off:
            if c not in comps:
                raise ScenarioError(p, f"unknown component {c!r}")
        delay = _num_range(it.get("delay_s", 0 if (first and i == 0) else 1), p + ".delay_s", integer=True)
        if not (first and i == 0) and delay[0] < 1:
            raise ScenarioError(p + ".delay_s", "steps after the first need a delay of at least 1 s")
        inrush = it.get("inrush")
        if inrush is not None:
            if on == [] or len(inrush) != 2 or inrush[0] < 1 or inrush[1] < 1:
                raise ScenarioError(p + ".inrush", "inrush is [peak multiplier >= 1, decay seconds >= 1] on an ON step")
            inrush = (float(inrush[0]), int(inrush[1]))
        out.append({"label": str(it.get("label", f"step{i}")), "on": on, "off": off,
                    "delay_s": delay, "inrush": inrush})
    return out


def _parse_windows(ws, path) -> tuple:
    if ws is None:
        return (SearchWindow(0, DAY_S),)
    out = []
    for i, w in enumerate(ws):
        try:
            out.append(SearchWindow.from_dict(w))
        except (ConditionError, KeyError, TypeError) as exc:
            raise ScenarioError(f"{path}[{i}]", str(exc)) from exc
    return tuple(out)


def _parse_schedule(d, path) -> Schedule:
    if not isinstance(d, dict):
        raise ScenarioError(path, "schedule must be an object")
    mode = d.get("mode", "daily")
    if mode not in ("daily", "periodic"):
        raise ScenarioError(path + ".mode", "must be daily or periodic")
    return Schedule(
        mode=mode,
        cycles_per_day=_num_range(d.get("cycles_per_day", [1, 1]), path + ".cycles_per_day", integer=True),
        off_s=_num_range(d.get("off_s", [1800, 3600]), path + ".off_s", integer=True),
        windows=_parse_windows(d.get("windows"), path + ".windows"),
        min_gap_s=int(d.get("min_gap_s", 60)),
    )


def parse_scenario(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    apps = []
    names = set()
    for i, a in enumerate(data.get("appliances", [])):
        p = f"appliances[{i}]"
        if not isinstance(a, dict) or "name" not in a:
            raise ScenarioError(p, "appliance needs a name")
        if a["name"] in names:
            raise ScenarioError(p + ".name", f"duplicate appliance {a['name']!r}")
        names.add(a["name"])
        phase = a.get("phase", "A")
        if phase not in ("A", "B", "AB"):
            raise ScenarioError(p + ".phase", "must be A, B or AB")
        comps = {k: _parse_component(v, f"{p}.components.{k}") for k, v in a.get("components", {}).items()}
        if not comps:
            raise ScenarioError(p + ".components", "at least one component is required")
        app = ApplianceModel(
            name=a["name"], phase=phase, components=comps,
            program=_parse_program(a.get("program"), comps, p + ".program"),
            schedule=_parse_schedule(a.get("schedule", {}), p + ".schedule"),
            category=a.get("category", ""),
        )
        rng = np.random.default_rng(0)
        for _ in range(5):
            try:
                _expand(app, rng)
            except ScenarioError as exc:
                raise ScenarioError(p + ".program", str(exc)) from exc
        apps.append(app)
    base = {}
    for ph, c in data.get("baseload", {}).items():
        if ph not in ("A", "B"):
            raise ScenarioError(f"baseload.{ph}", "baseload phases are A or B")
        base[ph] = _parse_component(c, f"baseload.{ph}")
    try:
        epoch = datetime.fromisoformat(data.get("epoch", "2024-01-01T00:00:00"))
    except ValueError as exc:
        raise ScenarioError("epoch", str(exc)) from exc
    sigma = data.get("noise_sigma", 5.0)
    if not isinstance(sigma, (int, float)) or sigma < 0:
        raise ScenarioError("noise_sigma", "must be a non-negative number")
    return Scenario(name=data.get("name", "scenario"), appliances=apps, epoch=epoch,
                    noise_sigma=float(sigma), v_rms=float(data.get("v_rms", 120.0)), baseload=base)


def load_scenario(spec: str) -> Scenario:
    """Path to a scenario JSON, or ``builtin:default``."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name != "default":
            raise ScenarioError("", f"unknown builtin scenario {name!r}")
        return default_scenario()
    path = Path(spec)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"invalid JSON: {exc}") from exc
    return parse_scenario(data)


def default_scenario_dict() -> dict:
    text = resources.files("loadsig").joinpath("data/scenario_default.json").read_text(encoding="utf-8")
    return json.loads(text)


def default_scenario() -> Scenario:
    return parse_scenario(default_scenario_dict())


# ---------------------------------------------------------------- expansion


def _draw(rng, r) -> int:
    lo, hi = r
    return int(lo) if lo == hi else int(rng.integers(lo, hi + 1))


def _expand_items(items, rng, out, t, state):
    for it in items:
        if "repeat" in it:
            for _ in range(_draw(rng, it["repeat"])):
                t = _expand_items(it["body"], rng, out, t, state)
            continue
        if "probability" in it:
            if rng.random() < it["probability"]:
                t = _expand_items(it["body"], rng, out, t, state)
            continue
        t += _draw(rng, it["delay_s"])
        for c in it["on"]:
            if c in state:
                raise ScenarioError("", f"component {c!r} switched on twice")
            state.add(c)
        for c in it["off"]:
            if c not in state:
                raise ScenarioError("", f"component {c!r} switched off while off")
            state.discard(c)
        out.append((t, it["label"], tuple(it["on"]), tuple(it["off"]), it["inrush"]))
    return t


def _expand(app: ApplianceModel, rng) -> list:
    """One program run as ``[(offset_s, label, on, off, inrush), ...]``."""
    out = []
    state = set()
    _expand_items(app.program, rng, out, 0, state)
    if state:
        raise ScenarioError("", f"program leaves components on: {sorted(state)}")
    return out


def _window_intervals(sched: Schedule, epoch: datetime, day: int):
    weekday = DAY_NAMES[(epoch + timedelta(days=day)).weekday()]
    base = day * DAY_S
    return [(base + w.start_s, base + w.end_s) for w in sched.windows
            if w.days is None or weekday in w.days]


@dataclass
class ScriptEvent:
    t: int
    appliance: str
    label: str
    on: tuple
    off: tuple
    inrush: tuple | None = None
    cycle: int = -1


def _schedule_appliance(app: ApplianceModel, rng, days: int, epoch: datetime):
    script = []
    draws = []
    total = days * DAY_S
    sched = app.schedule
    prev_end = -10 ** 9
    cycle = 0
    if sched.mode == "daily":
        for day in range(days):
            wins = _window_intervals(sched, epoch, day)
            length = sum(b - a for a, b in wins)
            if length == 0:
                draws.append(0)
                continue
            count = _draw(rng, sched.cycles_per_day)
            draws.append(count)
            picks = np.sort(rng.uniform(0, length, size=count))
            starts = []
            for u in picks:
                for a, b in wins:
                    if u < b - a:
                        starts.append(int(a + u))
                        break
                    u -= b - a
            for s in starts:
                s = max(s, prev_end + sched.min_gap_s)
                run = _expand(app, rng)
                for off, label, on, offc, inrush in run:
                    script.append(ScriptEvent(s + off, app.name, label, on, offc, inrush, cycle))
                prev_end = s + run[-1][0]
                cycle += 1
        return script, draws

    # periodic: back-to-back runs separated by random idle periods inside the windows
    per_day = [0] * days
    t = int(rng.integers(0, sched.off_s[1] + 1))
    while t < total:
        day = t // DAY_S
        wins = [w for d in (day, day + 1) for w in _window_intervals(sched, epoch, d)]
        inside = any(a <= t < b for a, b in wins)
        if not inside:
            nxt = [a for a, _ in wins if a > t]
            if not nxt:
                t = (day + 2) * DAY_S
                continue
            t = nxt[0] + int(rng.integers(0, max(1, sched.off_s[0] // 2)))
            continue
        run = _expand(app, rng)
        for off, label, on, offc, inrush in run:
            script.append(ScriptEvent(t + off, app.name, label, on, offc, inrush, cycle))
        per_day[min(day, days - 1)] += 1
        cycle += 1
        t = t + run[-1][0] + _draw(rng, sched.off_s)
    return script, per_day


# ---------------------------------------------------------------- rendering


def _phase_split(phase: str):
    return (("A", 0.5), ("B", 0.5)) if phase == "AB" else ((phase, 1.0),)


class _Accumulator:
    def __init__(self, n):
        self.n = n
        self.dP = {ph: np.zeros(n + 1) for ph in ("A", "B")}
        self.dQ = {ph: np.zeros(n + 1) for ph in ("A", "B")}
        self.dH2 = {ph: np.zeros(n + 1) for ph in ("A", "B")}
        self.extra = {ph: np.zeros(n) for ph in ("A", "B")}
        self.used = set()

    def arrays(self):
        out = {}
        for ph in ("A", "B"):
            out[ph] = (np.cumsum(self.dP[ph])[:-1], np.cumsum(self.dQ[ph])[:-1] + 0.0,
                       np.cumsum(self.dH2[ph])[:-1], self.extra[ph])
        return out


def _render(apps: dict, script, n: int, keep_per_appliance: bool):
    total = _Accumulator(n)
    per_app = {name: _Accumulator(n) for name in apps} if keep_per_appliance else None
    truth = []
    intervals = []
    open_since = {}
    script = sorted(script, key=lambda e: (e.t, e.appliance))
    for ev in script:
        if ev.t >= n or ev.t < 0:
            continue
        app = apps[ev.appliance]
        sign = 1.0 if ev.on else -1.0
        comps = [app.components[c] for c in (ev.on or ev.off)]
        dP = sign * sum(c.P for c in comps)
        dQ = sign * sum(c.Q for c in comps)
        h2 = sum(c.H ** 2 for c in comps)
        s_mag = math.hypot(dP, dQ)
        thd = math.sqrt(h2) / s_mag if s_mag > 0 else math.nan
        for acc in (total,) + ((per_app[ev.appliance],) if per_app else ()):
            for ph, frac in _phase_split(app.phase):
                acc.dP[ph][ev.t] += dP * frac
                acc.dQ[ph][ev.t] += dQ * frac
                acc.dH2[ph][ev.t] += sign * h2 * frac * frac
                acc.used.add(ph)
                if ev.inrush is not None:
                    mult, decay = ev.inrush
                    k = np.arange(decay)
                    idx = ev.t + k
                    keep = idx < n
                    acc.extra[ph][idx[keep]] += ((mult - 1.0) * dP * frac * (1.0 - k / decay))[keep]
        for c in ev.on:
            open_since[(ev.appliance, c)] = ev.t
        for c in ev.off:
            intervals.append((ev.appliance, c, open_since.pop((ev.appliance, c)), ev.t))
        truth.append(TruthEvent(ev.t, ev.appliance, "ON" if dP > 0 else "OFF", dP, dQ, thd, ev.label,
                                app.phase, ev.cycle, ev.inrush is not None))
    for (name, c), t0 in open_since.items():
        intervals.append((name, c, t0, n))
    return total, per_app, truth, intervals


def _baseload_arrays(scenario: Scenario, n: int):
    out = {}
    for ph, c in scenario.baseload.items():
        out[ph] = (c.P, c.Q, c.H ** 2)
    return out


def _build(scenario: Scenario, script, n: int, seed: int, keep_per_appliance=False,
           phases=None):
    apps = {a.name: a for a in scenario.appliances}
    total, per_app, truth, intervals = _render(apps, script, n, keep_per_appliance)
    base = _baseload_arrays(scenario, n)
    noise_rng = np.random.default_rng([seed, 1_000_003])
    arrays = total.arrays()
    used = phases or sorted(set(total.used) | set(base) or {"A"})
    rec_phases = {}
    aggregate = {}
    for ph in ("A", "B"):
        P, Q, H2, extra = arrays[ph]
        bP, bQ, bH2 = base.get(ph, (0.0, 0.0, 0.0))
        P = P + extra + bP
        Q = Q + bQ
        H2 = np.maximum(H2 + bH2, 0.0)
        nP = noise_rng.normal(0.0, scenario.noise_sigma, n) if scenario.noise_sigma > 0 else np.zeros(n)
        nQ = noise_rng.normal(0.0, scenario.noise_sigma, n) if scenario.noise_sigma > 0 else np.zeros(n)
        if ph not in used:
            continue
        aggregate[ph] = (P, Q)
        Pn, Qn = P + nP, Q + nQ
        S = np.hypot(Pn, Qn)
        with np.errstate(divide="ignore", invalid="ignore"):
            thd = np.where(S > 1e-6, np.sqrt(H2) / S, np.nan)
        rec_phases[ph] = PhaseSeries(P=Pn, Q=Qn, THD=thd, valid=np.ones(n, dtype=bool))
    rec = MeterRecording(scenario.epoch, 0, rec_phases)
    per = None
    if per_app is not None:
        per = {}
        for name, acc in per_app.items():
            arr = acc.arrays()
            per[name] = {ph: (arr[ph][0] + arr[ph][3], arr[ph][1]) for ph in ("A", "B")}
    return rec, truth, aggregate, intervals, per


def generate(scenario: Scenario, seed: int, days: int, keep_per_appliance: bool = False):
    """Simulate ``days`` whole days; returns ``(MeterRecording, GroundTruthLog)``."""
    if days < 1:
        raise ScenarioError("days", "must be at least 1")
    n = days * DAY_S
    script = []
    draws = {}
    for idx, app in enumerate(scenario.appliances):
        rng = np.random.default_rng([seed, idx])
        s, d = _schedule_appliance(app, rng, days, scenario.epoch)
        script.extend(s)
        draws[app.name] = d
    rec, truth, aggregate, intervals, per = _build(scenario, script, n, seed, keep_per_appliance)
    return rec, GroundTruthLog(truth, aggregate, draws, intervals, per)


# ---------------------------------------------------------------- waveforms


def component_phasors(c: Component, v_rms: float, fraction: float = 1.0) -> dict:
    return powercalc.load_phasors(c.P * fraction, c.Q * fraction, c.THD, v_rms, c.spectrum, c.harmonic_angles)


def synthesize_frames(scenario: Scenario, rec: MeterRecording, truth: GroundTruthLog,
                      start: int, seconds: int, points_per_cycle: int = 256, n_cycles: int = 6):
    """Waveform frames whose fundamental reproduces ``rec``'s P/Q exactly.

    Harmonic currents are the phasor sum of the active components' spectra.
    """
    apps = {a.name: a for a in scenario.appliances}
    frames = []
    v = scenario.v_rms
    for t in range(start, start + seconds):
        for ph in sorted(rec.phases):
            s = rec.phases[ph]
            idx = t - rec.start
            harm = {k: 0j for k in powercalc.HARMONIC_ORDERS}
            for name, comp, a, b in truth.intervals:
                if a <= t < b:
                    app = apps[name]
                    for sph, frac in _phase_split(app.phase):
                        if sph == ph:
                            for k, p in component_phasors(app.components[comp], v, frac).items():
                                if k != 1:
                                    harm[k] += p
            if ph in scenario.baseload:
                for k, p in component_phasors(scenario.baseload[ph], v).items():
                    if k != 1:
                        harm[k] += p
            phasors = dict(harm)
            phasors[1] = np.conj(complex(s.P[idx], s.Q[idx]) / v)
            frames.append(powercalc.synthesize_frame(t, ph, v, phasors, points_per_cycle, n_cycles))
    return frames


# ---------------------------------------------------------------- I/O


def save_truth_csv(truth: GroundTruthLog, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_HEADER)
        for e in sorted(truth.events, key=lambda e: (e.t, e.appliance)):
            w.writerow([e.t, e.appliance, e.direction, repr(float(e.dP)), repr(float(e.dQ)),
                        "" if math.isnan(e.thd) else repr(e.thd * 100.0), e.state])


def load_truth_csv(path) -> GroundTruthLog:
    events = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRUTH_HEADER:
            raise ValueError(f"bad truth header {reader.fieldnames}")
        for row in reader:
            try:
                events.append(TruthEvent(
                    t=int(row["t_s"]), appliance=row["appliance"], direction=row["direction"],
                    dP=float(row["dP_W"]), dQ=float(row["dQ_var"]),
                    thd=float(row["THD_pct"]) / 100.0 if row["THD_pct"] else math.nan,
                    state=row["state"]))
            except ValueError as exc:
                raise ValueError(f"line {reader.line_num}: {exc}") from exc
    return GroundTruthLog(events, {}, {})


# ---------------------------------------------------------------- heater bench

# (offset_s, label, appliance, on, off, inrush) relative to the heater ON
_HEATER_BASE = [(0, "1", "Heater", ("fan", "low"), (), (1.6, 1))]
_HEATER_CYCLE_1 = [(120, "2", "Heater", ("high",), (), None), (400, "3", "Heater", (), ("high",), None)]
_HEATER_CYCLE_2 = [(560, "2", "Heater", ("high",), (), None), (820, "3", "Heater", (), ("high",), None)]
_HEATER_END = [(960, "4", "Heater", ("boost",), (), None),
               (1140, "5", "Heater", (), ("fan", "low", "boost"), None)]
_SWAY = [(250, "6", "Heater", ("sway",), (), None), (700, "7", "Heater", (), ("sway",), None)]
_MICROWAVE = [(300, "8", "Microwave", ("magnetron", "turntable"), (), None),
              (460, "11", "Microwave", (), ("turntable",), None),
              (640, "9", "Microwave", (), ("magnetron",), None)]
_LAMP = [(330, "10", "Lamp", ("bulb",), (), None), (2100, "lamp off", "Lamp", (), ("bulb",), None)]

HEATER_SCENARIO_COUNTS = {1: 5, 2: 4, 3: 1, 4: 2}
HEATER_RUN_SPACING_S = 3600
HEATER_AVG_DURATION_MIN = 20.0


def heater_lab_scenario() -> Scenario:
    """Bench appliances: a two-element fan heater with sway motor, a microwave and a lamp."""
    return Scenario(
        name="heater-lab",
        epoch=datetime(2024, 1, 1),
        noise_sigma=2.0,
        baseload={},
        appliances=[
            ApplianceModel("Heater", "A", {
                "fan": Component(60.0, 45.0, 0.06),
                "low": Component(700.0, 0.0, 0.01),
                "high": Component(500.0, 0.0, 0.01),
                "boost": Component(70.0, 30.0, 0.08),
                "sway": Component(120.0, 90.0, 0.04),
            }, program=[], category="linear_active"),
            ApplianceModel("Microwave", "A", {
                "magnetron": Component(900.0, 160.0, 0.30),
                "turntable": Component(400.0, 60.0, 0.50),
            }, program=[], category="nonlinear_active"),
            ApplianceModel("Lamp", "A", {"bulb": Component(150.0, 0.0, 0.005)}, program=[]),
        ],
    )


def heater_condition_row():
    from .filtration import ConditionRow
    return ConditionRow(
        appliance="Heater", P_range=(600, 1000), Q_range=(20, 100), THD_range=(0, 5),
        spike_required="either", phase_condition="single",
        avg_duration_min=HEATER_AVG_DURATION_MIN, category="linear_active",
    )


def heater_lab_scenarios(seed: int = 0):
    """Twelve bench runs (scenarios 1-4 run 5, 4, 1 and 2 times) on one phase.

    Nine runs get two thermostat cycles of the high element and three get
    one, so events 2 and 3 each occur 21 times. Offsets are jittered by up
    to 10 s per event.
    """
    rng = np.random.default_rng([seed, 77])
    scen = heater_lab_scenario()
    kinds = [k for k, cnt in HEATER_SCENARIO_COUNTS.items() for _ in range(cnt)]
    double = np.zeros(len(kinds), dtype=bool)
    double[rng.permutation(len(kinds))[:9]] = True
    script = []
    for run, (kind, two) in enumerate(zip(kinds, double)):
        start = 600 + run * HEATER_RUN_SPACING_S
        items = _HEATER_BASE + _HEATER_CYCLE_1 + (_HEATER_CYCLE_2 if two else []) + _HEATER_END
        if kind == 2:
            items = items + _SWAY
        if kind in (3, 4):
            items = items + _MICROWAVE
        if kind == 4:
            items = items + _LAMP
        for off, label, app, on, offc, inrush in items:
            jitter = 0 if off == 0 else int(rng.integers(-10, 11))
            script.append(ScriptEvent(start + off + jitter, app, label, on, offc, inrush, run))
    n = 600 + len(kinds) * HEATER_RUN_SPACING_S
    rec, truth, aggregate, intervals, _ = _build(scen, script, n, seed, phases=["A"])
    draws = {"Heater": [len(kinds)]}
    return rec, GroundTruthLog(truth, aggregate, draws, intervals)


# ---------------------------------------------------------------- four-group replica

REPLICA_GROUPS = (
    # mean P [W], mean Q [var], mean THD [%], size, cause
    (100.3, 76.2, 10.6, 75, "fridge"),
    (87.7, 67.9, 10.3, 10, "fan"),
    (73.6, 58.8, 2.2, 2, "motor"),
    (189.6, 138.5, 9.9, 1, "corrupted"),
)


def four_group_replica(seed: int = 0, sigma_norm: float = 2.0):
    """Suspect events reproducing the four-group composition, with labels.

    Spread is ``sigma_norm`` units of the 1..100 normalized scale, i.e.
    ``sigma_norm * span / 99`` in original units where ``span`` is the range
    of the group means. Returns ``(events, labels)`` in time order.
    """
    from .meterdata import LoadEvent

    rng = np.random.default_rng([seed, 2])
    means = np.array([g[:3] for g in REPLICA_GROUPS], dtype=float)
    unit = (means.max(axis=0) - means.min(axis=0)) / 99.0
    rows = []
    for (p, q, h, size, cause) in REPLICA_GROUPS:
        if size == 1:
            rows.append((np.array([p, q, h]), cause))
            continue
        for _ in range(size):
            rows.append((np.array([p, q, h]) + rng.normal(0.0, sigma_norm, 3) * unit, cause))
    order = rng.permutation(len(rows))
    events, labels = [], []
    for k, i in enumerate(order):
        f, cause = rows[i]
        events.append(LoadEvent(t=3600 * 2 + 120 * k, phase_tag="A", direction="ON",
                                dP=float(f[0]), dQ=float(f[1]), thd=float(f[2]) / 100.0, spike=True))
        labels.append(cause)
    return events, labels
