"""Per-appliance extraction runs and the signature database they produce.

Database JSON (``format = "loadsig-signature-db"``, ``version = 1``)::

    {"format": ..., "version": 1,
     "recording": {"epoch": ISO, "start_s": int, "end_s": int, "phases": ["A", "B"]},
     "params": {"edge": {...}, "cluster": {...}, "association": {...}, "min_suspects": 5,
                "min_authentic": 3},
     "appliances": [{
        "appliance": str, "status": "found" | "not found", "reason": str,
        "search_windows": ["HH:MM-HH:MM (days)"], "domain_s": [[start, end], ...],
        "n_suspects": int, "n_clusters": int, "largest_cluster": int,
        "authentic_t_s": [int, ...], "authentic_mean": {"P_W", "Q_var", "THD_pct"},
        "cycle": null | {"segments": M, "open_cycle": bool, "anomalous": bool,
                         "warnings": [...], "pattern": "1 → 2~ → (3) → 4",
                         "steps": [{"label", "kind", "direction", "offset_s",
                                    "P_W", "Q_var", "THD_pct", "N", "n_max"}]}}]}

Powers are in watts / vars, THD in percent and offsets in seconds from the
anchor ON event.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import association, clustering, eventdetect, filtration
from .association import AssociationParams
from .clustering import ClusterParams, ClusteringError
from .eventdetect import EdgeDetectParams
from .filtration import ConditionError, ConditionRow
from .meterdata import MeterRecording

DB_FORMAT = "loadsig-signature-db"
DB_VERSION = 1


class DatabaseError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineParams:
    edge: EdgeDetectParams = field(default_factory=EdgeDetectParams)
    cluster: ClusterParams = field(default_factory=ClusterParams)
    association: AssociationParams = field(default_factory=AssociationParams)
    min_suspects: int = 5
    min_authentic: int = 3

    def to_dict(self) -> dict:
        return {"edge": asdict(self.edge), "cluster": asdict(self.cluster),
                "association": asdict(self.association),
                "min_suspects": self.min_suspects, "min_authentic": self.min_authentic}

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineParams":
        known = {"edge", "cluster", "association", "min_suspects", "min_authentic"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown parameter blocks {sorted(extra)}")
        try:
            return cls(
                edge=EdgeDetectParams(**d.get("edge", {})),
                cluster=ClusterParams(**d.get("cluster", {})),
                association=AssociationParams(**d.get("association", {})),
                min_suspects=int(d.get("min_suspects", 5)),
                min_authentic=int(d.get("min_authentic", 3)),
            )
        except TypeError as exc:
            raise ValueError(f"bad parameter field: {exc}") from exc


@dataclass(frozen=True)
class StepRecord:
    label: int
    kind: str
    direction: str
    offset_s: float
    P_W: float
    Q_var: float
    THD_pct: float
    N: int
    n_max: int


@dataclass
class CycleRecord:
    segments: int
    open_cycle: bool
    anomalous: bool
    warnings: list
    pattern: str
    steps: list

    @classmethod
    def from_signature(cls, sig: association.CycleSignature) -> "CycleRecord":
        steps = [StepRecord(s.label, s.kind, s.direction, float(s.median_offset_s), float(s.mean_P),
                            float(s.mean_Q), float(s.mean_THD) * 100.0, int(s.N), int(s.n_max))
                 for s in sig.steps]
        return cls(sig.segments_used, sig.open_cycle, sig.anomalous, list(sig.warnings),
                   sig.pattern_string(), steps)

    def anchor(self) -> StepRecord:
        return self.steps[0]


@dataclass
class ApplianceEntry:
    appliance: str
    status: str
    reason: str = ""
    search_windows: list = field(default_factory=list)
    domain_s: list = field(default_factory=list)
    n_suspects: int = 0
    n_clusters: int = 0
    largest_cluster: int = 0
    authentic_t_s: list = field(default_factory=list)
    authentic_mean: dict | None = None
    cycle: CycleRecord | None = None

    @property
    def found(self) -> bool:
        return self.status == "found"

    @property
    def share(self) -> float:
        return self.largest_cluster / self.n_suspects if self.n_suspects else 0.0


@dataclass
class SignatureDatabase:
    recording: dict
    params: dict
    appliances: list
    version: int = DB_VERSION

    def entry(self, name: str) -> ApplianceEntry:
        for e in self.appliances:
            if e.appliance == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> dict:
        apps = []
        for e in self.appliances:
            d = asdict(e)
            if e.cycle is not None:
                d["cycle"] = asdict(e.cycle)
            d["domain_s"] = [list(p) for p in e.domain_s]
            apps.append(d)
        return {"format": DB_FORMAT, "version": self.version, "recording": dict(self.recording),
                "params": self.params, "appliances": apps}

    @classmethod
    def from_dict(cls, d: dict) -> "SignatureDatabase":
        if d.get("format") != DB_FORMAT:
            raise DatabaseError("not a signature database")
        if d.get("version") != DB_VERSION:
            raise DatabaseError(f"unsupported database version {d.get('version')}")
        apps = []
        try:
            for a in d["appliances"]:
                a = dict(a)
                cyc = a.pop("cycle")
                if cyc is not None:
                    cyc = dict(cyc)
                    cyc["steps"] = [StepRecord(**s) for s in cyc["steps"]]
                    cyc = CycleRecord(**cyc)
                a["domain_s"] = [tuple(p) for p in a["domain_s"]]
                apps.append(ApplianceEntry(cycle=cyc, **a))
            return cls(dict(d["recording"]), d["params"], apps, d["version"])
        except (KeyError, TypeError) as exc:
            raise DatabaseError(f"malformed database: {exc}") from exc


def save_database(db: SignatureDatabase, path) -> None:
    Path(path).write_text(json.dumps(db.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def load_database(path) -> SignatureDatabase:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatabaseError(f"invalid JSON: {exc}") from exc
    return SignatureDatabase.from_dict(data)


def extract_appliance(rec: MeterRecording, events, row: ConditionRow,
                      params: PipelineParams | None = None) -> ApplianceEntry:
    """Filtration through cycle assembly for one condition row; failures become ``not found``."""
    params = params or PipelineParams()
    entry = ApplianceEntry(row.appliance, "not found",
                           search_windows=[w.label() for w in row.search_windows])
    try:
        domain = filtration.splice_data_pieces(rec, row)
    except ConditionError as exc:
        entry.reason = str(exc)
        return entry
    entry.domain_s = [tuple(p) for p in domain.pieces]
    suspects = filtration.filter_suspects(events, row, domain).events
    entry.n_suspects = len(suspects)
    if len(suspects) < params.min_suspects:
        entry.reason = f"insufficient suspects: {len(suspects)} < {params.min_suspects}"
        return entry
    try:
        clusters = clustering.cluster_events(suspects, row.weights, params.cluster)
        entry.n_clusters = len(clusters)
        dominant = clustering.select_dominant(clusters, params.min_authentic)
    except ClusteringError as exc:
        entry.reason = str(exc)
        if isinstance(exc, clustering.InsufficientEventsError):
            entry.largest_cluster = max((c.size for c in clusters), default=0)
        return entry
    entry.largest_cluster = dominant.size
    entry.authentic_t_s = sorted(int(e.t) for e in dominant.members)
    entry.authentic_mean = {"P_W": dominant.mean_P, "Q_var": dominant.mean_Q,
                            "THD_pct": dominant.mean_THD * 100.0}
    try:
        classes, segments = association.associate(dominant, events, row, params.association, params.cluster)
        sig = association.assemble_cycle(classes, segments, row.appliance)
    except (ClusteringError, ValueError) as exc:
        entry.reason = f"association failed: {exc}"
        return entry
    entry.cycle = CycleRecord.from_signature(sig)
    entry.status = "found"
    return entry


def run_extraction(rec: MeterRecording, rows, params: PipelineParams | None = None,
                   events=None) -> SignatureDatabase:
    params = params or PipelineParams()
    if events is None:
        events = eventdetect.detect_all(rec, params.edge)
    entries = [extract_appliance(rec, events, row, params) for row in rows]
    meta = {"epoch": rec.epoch.isoformat(), "start_s": int(rec.start), "end_s": int(rec.end),
            "phases": sorted(rec.phases), "n_events": len(events)}
    return SignatureDatabase(meta, params.to_dict(), entries)


def summary_table(db: SignatureDatabase) -> str:
    """Per-appliance search window, suspect/cluster counts and dominant share."""
    head = ("Appliance", "Search window", "# suspects", "# clusters", "Largest", "Share", "Status")
    rows = []
    for e in db.appliances:
        share = f"{100.0 * e.share:.1f}%" if e.n_suspects else "-"
        status = "found" if e.found else f"not found ({e.reason})"
        rows.append((e.appliance, ", ".join(e.search_windows), str(e.n_suspects), str(e.n_clusters),
                     str(e.largest_cluster), share, status))
    widths = [max(len(r[i]) for r in rows + [head]) for i in range(len(head))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*head), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*r) for r in rows]
    return "\n".join(lines)


def cycle_step_series(entry: ApplianceEntry) -> list[tuple]:
    """Cumulative (offset_s, P_W, Q_var) staircase of the main cycle steps."""
    if entry.cycle is None:
        return []
    P = Q = 0.0
    out = []
    for s in entry.cycle.steps:
        if s.kind == "occasional":
            continue
        P += s.P_W
        Q += s.Q_var
        out.append((s.offset_s, P, Q))
    return out


def write_step_series(db: SignatureDatabase, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for e in db.appliances:
        series = cycle_step_series(e)
        if not series:
            continue
        slug = "".join(ch if ch.isalnum() else "_" for ch in e.appliance).strip("_").lower()
        path = directory / f"{slug}_cycle.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["offset_s", "P_W", "Q_var"])
            for t, p, q in series:
                w.writerow([f"{t:g}", f"{p:.3f}", f"{q:.3f}"])
        written.append(path)
    return written
