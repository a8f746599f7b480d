"""Signed signature errors and authentic-event precision/recall against ground truth."""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .pipeline import SignatureDatabase
from .synthhome import GroundTruthLog, TruthEvent


def percent_error(extracted: float, truth: float) -> float:
    """``100 * (extracted - truth) / truth`` with the sign kept; NaN when truth is zero."""
    if truth == 0 or math.isnan(truth) or math.isnan(extracted):
        return math.nan
    return 100.0 * (extracted - truth) / truth


@dataclass
class ClassError:
    label: int
    kind: str
    direction: str
    truth_state: str | None
    P_W: float
    Q_var: float
    THD_pct: float
    true_P_W: float = math.nan
    true_Q_var: float = math.nan
    true_THD_pct: float = math.nan
    err_P: float = math.nan
    err_Q: float = math.nan
    err_THD: float = math.nan

    @property
    def matched(self) -> bool:
        return self.truth_state is not None


@dataclass
class ApplianceEval:
    appliance: str
    found: bool
    anchor_state: str | None = None
    n_authentic: int = 0
    n_truth: int = 0
    n_matched: int = 0
    classes: list = field(default_factory=list)

    @property
    def precision(self) -> float:
        return self.n_matched / self.n_authentic if self.n_authentic else math.nan

    @property
    def recall(self) -> float:
        return self.n_matched / self.n_truth if self.n_truth else math.nan


@dataclass
class EvalReport:
    appliances: list

    def entry(self, name: str) -> ApplianceEval:
        for a in self.appliances:
            if a.appliance == name:
                return a
        raise KeyError(name)

    def to_dict(self) -> dict:
        out = []
        for a in self.appliances:
            d = asdict(a)
            d["precision"] = a.precision
            d["recall"] = a.recall
            for c, cd in zip(a.classes, d["classes"]):
                if not c.matched:
                    cd["truth_state"] = "unmatched"
            out.append(d)
        return {"appliances": out}

    def table(self) -> str:
        head = ("Appliance", "Class", "Dir", "Truth state", "P err %", "Q err %", "THD err %")
        rows = []
        for a in self.appliances:
            if not a.found:
                rows.append((a.appliance, "-", "-", "not found", "", "", ""))
                continue
            for c in a.classes:
                tag = f"({c.label})" if c.kind == "occasional" else str(c.label)
                if not c.matched:
                    rows.append((a.appliance, tag, c.direction, "unmatched", "", "", ""))
                    continue
                rows.append((a.appliance, tag, c.direction, c.truth_state,
                             _fmt_err(c.err_P), _fmt_err(c.err_Q), _fmt_err(c.err_THD)))
        widths = [max(len(r[i]) for r in rows + [head]) for i in range(len(head))]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        lines = [fmt.format(*head), fmt.format(*("-" * w for w in widths))]
        lines += [fmt.format(*r) for r in rows]
        lines.append("")
        for a in self.appliances:
            if a.found:
                lines.append(f"{a.appliance}: precision {a.precision:.3f}, recall {a.recall:.3f} "
                             f"({a.n_matched} matched, {a.n_authentic} authentic, {a.n_truth} logged)")
        return "\n".join(lines)

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(_clean(self.to_dict()), indent=2) + "\n", encoding="utf-8")


def _fmt_err(x: float) -> str:
    return "n/a" if math.isnan(x) else f"{x:+.2f}"


def _clean(obj):
    # JSON has no NaN
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    return obj


def _in_domain(t: int, pieces) -> bool:
    starts = [a for a, _ in pieces]
    i = bisect.bisect_right(starts, t) - 1
    return i >= 0 and t < pieces[i][1]


def _match_times(found, logged, tol: int) -> int:
    """Greedy one-to-one pairing of sorted time lists within ``tol`` seconds."""
    found, logged = sorted(found), sorted(logged)
    i = j = n = 0
    while i < len(found) and j < len(logged):
        if abs(found[i] - logged[j]) <= tol:
            n += 1
            i += 1
            j += 1
        elif found[i] < logged[j]:
            i += 1
        else:
            j += 1
    return n


def evaluate(db: SignatureDatabase, truth: GroundTruthLog, match_tol_s: int = 3) -> EvalReport:
    """Match each extracted class to the appliance's logged state with nearest mean P
    and the same direction, then score the authentic cluster against the anchor state."""
    means = truth.state_means()
    by_app = {}
    for (app, state), m in means.items():
        by_app.setdefault(app, []).append((state,) + m)
    results = []
    for entry in db.appliances:
        states = by_app.get(entry.appliance)
        if states is None:
            continue
        ev = ApplianceEval(entry.appliance, entry.found)
        results.append(ev)
        if not entry.found:
            continue
        for s in entry.cycle.steps:
            cands = [st for st in states if st[4] == s.direction]
            ce = ClassError(s.label, s.kind, s.direction, None, s.P_W, s.Q_var, s.THD_pct)
            if cands:
                st = min(cands, key=lambda c: abs(c[1] - s.P_W))
                ce.truth_state = st[0]
                ce.true_P_W, ce.true_Q_var, ce.true_THD_pct = st[1], st[2], st[3] * 100.0
                ce.err_P = percent_error(s.P_W, ce.true_P_W)
                ce.err_Q = percent_error(s.Q_var, ce.true_Q_var)
                ce.err_THD = percent_error(s.THD_pct, ce.true_THD_pct)
            ev.classes.append(ce)
        # the authentic cluster's own mean picks the logged state it is scored against;
        # the anchor class may also have absorbed look-alike events inside segments
        ons = [st for st in states if st[4] == "ON"]
        if not ons or entry.authentic_mean is None:
            continue
        ev.anchor_state = min(ons, key=lambda c: abs(c[1] - entry.authentic_mean["P_W"]))[0]
        logged = [e.t for e in truth.events if e.appliance == entry.appliance
                  and e.state == ev.anchor_state and _in_domain(e.t, entry.domain_s)]
        ev.n_authentic = len(entry.authentic_t_s)
        ev.n_truth = len(logged)
        ev.n_matched = _match_times(entry.authentic_t_s, logged, match_tol_s)
    return EvalReport(results)


def truth_from_database(db: SignatureDatabase) -> GroundTruthLog:
    """A ground-truth log whose states reproduce the database's own classes exactly."""
    events = []
    for entry in db.appliances:
        if not entry.found:
            continue
        steps = entry.cycle.steps
        t0 = entry.authentic_t_s[0]
        for k, s in enumerate(steps):
            state = f"class{s.label}"
            times = entry.authentic_t_s if k == 0 else [t0 + int(round(s.offset_s))]
            for t in times:
                events.append(TruthEvent(t, entry.appliance, s.direction, s.P_W, s.Q_var,
                                         s.THD_pct / 100.0, state))
    return GroundTruthLog(events, {}, {})
