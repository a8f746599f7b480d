"""Per-appliance ON-event filtration over spliced daily search windows."""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from datetime import datetime, timedelta
from importlib import resources
from pathlib import Path

from .meterdata import LoadEvent, MeterRecording

CATEGORY_WEIGHTS = {
    "linear_reactive": (0.45, 0.45, 0.10),
    "linear_active": (0.60, 0.10, 0.30),
    "nonlinear_active": (0.45, 0.10, 0.45),
    # no appliance of this kind in the default table; split evenly
    "nonlinear_reactive": (0.40, 0.30, 0.30),
}
DAY_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
_DAY_ALIASES = {"weekend": ("Sat", "Sun"), "weekday": DAY_NAMES[:5]}


class ConditionError(ValueError):
    pass


def parse_clock(text: str) -> int:
    """``"HH:MM"`` (``"24:00"`` allowed) to seconds after midnight."""
    try:
        hh, mm = text.split(":")
        sec = int(hh) * 3600 + int(mm) * 60
    except ValueError as exc:
        raise ConditionError(f"bad clock time {text!r}") from exc
    if not 0 <= sec <= 86400 or not 0 <= int(mm) < 60:
        raise ConditionError(f"clock time out of range: {text!r}")
    return sec


def format_clock(sec: int) -> str:
    return f"{sec // 3600:02d}:{sec % 3600 // 60:02d}"


@dataclass(frozen=True)
class SearchWindow:
    start_s: int
    end_s: int
    days: tuple | None = None

    def __post_init__(self):
        if not 0 <= self.start_s < self.end_s <= 86400:
            raise ConditionError(
                f"search window {format_clock(self.start_s)}-{format_clock(self.end_s)} must lie within one day")
        if self.days is not None:
            bad = set(self.days) - set(DAY_NAMES)
            if bad:
                raise ConditionError(f"unknown day names {sorted(bad)}")

    @classmethod
    def from_dict(cls, d: dict) -> "SearchWindow":
        days = d.get("days")
        if days is not None:
            expanded = []
            for name in days:
                expanded.extend(_DAY_ALIASES.get(name.lower(), (name,)))
            days = tuple(expanded)
        return cls(parse_clock(d["start"]), parse_clock(d["end"]), days)

    def to_dict(self) -> dict:
        d = {"start": format_clock(self.start_s), "end": format_clock(self.end_s)}
        if self.days is not None:
            d["days"] = list(self.days)
        return d

    def label(self) -> str:
        txt = f"{format_clock(self.start_s)}-{format_clock(self.end_s)}"
        return txt + (f" ({'/'.join(self.days)})" if self.days else "")


def _range(v, name):
    lo, hi = (float(x) for x in v)
    if lo > hi or lo < 0:
        raise ConditionError(f"{name} must satisfy 0 <= min <= max, got {v}")
    return (lo, hi)


@dataclass(frozen=True)
class ConditionRow:
    appliance: str
    P_range: tuple
    Q_range: tuple
    THD_range: tuple  # percent
    spike_required: str = "either"
    phase_condition: str = "single"
    search_windows: tuple = (SearchWindow(0, 86400),)
    avg_duration_min: float = 30.0
    category: str = "linear_active"
    weights: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "P_range", _range(self.P_range, "P_range"))
        object.__setattr__(self, "Q_range", _range(self.Q_range, "Q_range"))
        object.__setattr__(self, "THD_range", _range(self.THD_range, "THD_range"))
        if self.spike_required not in ("yes", "no", "either"):
            raise ConditionError("spike_required must be yes, no or either")
        if self.phase_condition not in ("single", "double"):
            raise ConditionError("phase_condition must be single or double")
        if self.category not in CATEGORY_WEIGHTS:
            raise ConditionError(f"unknown category {self.category!r}")
        if self.avg_duration_min <= 0:
            raise ConditionError("avg_duration_min must be positive")
        w = self.weights if self.weights is not None else CATEGORY_WEIGHTS[self.category]
        w = tuple(float(x) for x in w)
        if len(w) != 3 or min(w) < 0 or abs(sum(w) - 1.0) > 1e-9:
            raise ConditionError(f"weights must be three non-negative numbers summing to 1, got {w}")
        object.__setattr__(self, "weights", w)
        wins = tuple(self.search_windows)
        for i, a in enumerate(wins):
            for b in wins[i + 1:]:
                shared_days = a.days is None or b.days is None or set(a.days) & set(b.days)
                if shared_days and a.start_s < b.end_s and b.start_s < a.end_s:
                    raise ConditionError(f"overlapping search windows for {self.appliance}")
        object.__setattr__(self, "search_windows", wins)

    @property
    def segment_length_s(self) -> float:
        return 1.5 * self.avg_duration_min * 60.0

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionRow":
        try:
            return cls(
                appliance=d["appliance"],
                P_range=tuple(d["P_range"]),
                Q_range=tuple(d["Q_range"]),
                THD_range=tuple(d["THD_range"]),
                spike_required=d.get("spike_required", "either"),
                phase_condition=d.get("phase_condition", "single"),
                search_windows=tuple(SearchWindow.from_dict(w)
                                     for w in d.get("search_windows", [{"start": "00:00", "end": "24:00"}])),
                avg_duration_min=float(d["avg_duration_min"]),
                category=d.get("category", "linear_active"),
                weights=tuple(d["weights"]) if d.get("weights") is not None else None,
            )
        except KeyError as exc:
            raise ConditionError(f"condition row missing field {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "appliance": self.appliance,
            "P_range": list(self.P_range),
            "Q_range": list(self.Q_range),
            "THD_range": list(self.THD_range),
            "spike_required": self.spike_required,
            "phase_condition": self.phase_condition,
            "search_windows": [w.to_dict() for w in self.search_windows],
            "avg_duration_min": self.avg_duration_min,
            "category": self.category,
            "weights": list(self.weights),
        }

    def matches(self, e: LoadEvent) -> bool:
        """The five electrical/phase conditions (search time is checked separately)."""
        if e.direction != "ON":
            return False
        if not self.P_range[0] <= e.dP <= self.P_range[1]:
            return False
        # ranges are magnitudes; a resistive load's dQ is noise around zero
        if not self.Q_range[0] <= abs(e.dQ) <= self.Q_range[1]:
            return False
        if math.isnan(e.thd):
            # unknown THD only passes ranges that admit zero distortion
            if self.THD_range[0] > 0:
                return False
        elif not self.THD_range[0] <= e.thd * 100.0 <= self.THD_range[1]:
            return False
        if self.spike_required == "yes" and not e.spike:
            return False
        if self.spike_required == "no" and e.spike:
            return False
        if self.phase_condition == "double":
            return e.phase_tag == "AB"
        return e.phase_tag in ("A", "B")


def load_condition_table(path) -> list[ConditionRow]:
    with Path(path).open(encoding="utf-8") as fh:
        return parse_condition_table(json.load(fh))


def parse_condition_table(data) -> list[ConditionRow]:
    if not isinstance(data, list):
        raise ConditionError("condition table must be a JSON array")
    rows = []
    for i, d in enumerate(data):
        try:
            rows.append(ConditionRow.from_dict(d))
        except ConditionError as exc:
            raise ConditionError(f"row {i}: {exc}") from exc
    return rows


def save_condition_table(rows, path) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in rows], indent=2), encoding="utf-8")


def default_condition_table() -> list[ConditionRow]:
    text = resources.files("loadsig").joinpath("data/default_conditions.json").read_text(encoding="utf-8")
    return parse_condition_table(json.loads(text))


def condition_row(name: str, rows=None) -> ConditionRow:
    for r in rows or default_condition_table():
        if r.appliance == name:
            return r
    raise KeyError(name)


@dataclass(frozen=True)
class SearchDomain:
    pieces: tuple  # sorted, disjoint [start, end) in recording seconds

    @property
    def total_s(self) -> int:
        return sum(b - a for a, b in self.pieces)

    @cached_property
    def _starts(self):
        return [a for a, _ in self.pieces]

    def contains(self, t: int) -> bool:
        i = bisect.bisect_right(self._starts, t) - 1
        return i >= 0 and t < self.pieces[i][1]


def _subtract(intervals, holes):
    out = []
    for a, b in intervals:
        cur = a
        for ga, gb in holes:
            if gb <= cur or ga >= b:
                continue
            if ga > cur:
                out.append((cur, ga))
            cur = max(cur, gb)
        if cur < b:
            out.append((cur, b))
    return out


def splice_data_pieces(rec: MeterRecording, row: ConditionRow) -> SearchDomain:
    """Cut every day's search windows out of the recording and join them in time order."""
    first = rec.clock(rec.start)
    last = rec.clock(rec.end)
    day = datetime(first.year, first.month, first.day)
    raw = []
    while day < last:
        weekday = DAY_NAMES[day.weekday()]
        for w in row.search_windows:
            if w.days is not None and weekday not in w.days:
                continue
            a = int((day + timedelta(seconds=w.start_s) - rec.epoch).total_seconds())
            b = int((day + timedelta(seconds=w.end_s) - rec.epoch).total_seconds())
            a, b = max(a, rec.start), min(b, rec.end)
            if a < b:
                raw.append((a, b))
        day += timedelta(days=1)
    raw.sort()
    pieces = _subtract(raw, rec.gap_list)
    merged = []
    for a, b in pieces:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(b, merged[-1][1]))
        else:
            merged.append((a, b))
    if not merged:
        raise ConditionError("empty search domain")
    return SearchDomain(tuple(merged))


@dataclass
class SuspectSet:
    appliance: str
    events: list
    source_piece: tuple = field(default_factory=tuple)


def filter_suspects(events, row: ConditionRow, domain: SearchDomain) -> SuspectSet:
    kept = [e for e in events if domain.contains(e.t) and row.matches(e)]
    return SuspectSet(row.appliance, kept, domain.pieces)
