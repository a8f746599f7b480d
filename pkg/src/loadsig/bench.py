"""Heater association benchmark: twelve bench runs, eleven event identities."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from . import association, clustering, eventdetect, filtration, synthhome
from .association import AssociationParams
from .clustering import ClusterParams

# identity -> (N, type)
EXPECTED = {
    "1": (12, "single"),
    "2": (21, "repetitive"),
    "3": (21, "repetitive"),
    "4": (12, "single"),
    "5": (12, "single"),
    "6": (4, "occasional"),
    "7": (4, "occasional"),
    "8": (None, "unrelated"),
    "9": (None, "unrelated"),
    "10": (None, "unrelated"),
    "11": (None, "unrelated"),
}
EXPECTED_M = 12


@dataclass
class BenchRow:
    identity: str
    N: int
    n_max: int
    type: str
    expected_type: str
    expected_N: int | None

    @property
    def ok(self) -> bool:
        return self.type == self.expected_type and (self.expected_N is None or self.N == self.expected_N)


@dataclass
class BenchResult:
    M: int
    rows: list
    b: float
    c: float
    pattern: str = ""
    problems: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.M == EXPECTED_M and not self.problems and all(r.ok for r in self.rows)

    @property
    def n_matching(self) -> int:
        return sum(r.ok for r in self.rows)


def _criterion(N: int, n_max: int, M: int, b: float, c: float) -> str:
    if N >= c * M:
        return "N ≥ cM, n ≥ 2" if n_max >= 2 else "N ≥ cM, n = 1"
    if N >= b * M:
        return "bM ≤ N < cM"
    return "N < bM"


def run_heater_bench(seed: int = 0, params: AssociationParams | None = None,
                     cluster_params: ClusterParams | None = None) -> BenchResult:
    params = params or AssociationParams()
    cluster_params = cluster_params or ClusterParams()
    rec, truth = synthhome.heater_lab_scenarios(seed)
    events = eventdetect.detect_all(rec)
    row = synthhome.heater_condition_row()
    domain = filtration.splice_data_pieces(rec, row)
    suspects = filtration.filter_suspects(events, row, domain).events
    dominant = clustering.select_dominant(clustering.cluster_events(suspects, row.weights, cluster_params))
    classes, segments = association.associate(dominant, events, row, params, cluster_params)
    sig = association.assemble_cycle(classes, segments, "Heater")

    truth_times = sorted((e.t, e.state) for e in truth.events)

    def identity(ev) -> str:
        return min(truth_times, key=lambda x: abs(x[0] - ev.t))[1]

    result = BenchResult(len(segments), [], params.b, params.c, sig.pattern_string())
    seen = {}
    for cls in classes:
        votes = Counter(identity(m) for m in cls.cluster.members)
        ident, _ = votes.most_common(1)[0]
        if ident in seen:
            result.problems.append(f"event {ident} split across several classes")
            continue
        seen[ident] = cls
    for ident, (n_exp, t_exp) in EXPECTED.items():
        cls = seen.get(ident)
        if cls is None:
            result.problems.append(f"event {ident} not recovered as a class")
            result.rows.append(BenchRow(ident, 0, 0, "missing", t_exp, n_exp))
            continue
        result.rows.append(BenchRow(ident, cls.N, cls.n_max, cls.type, t_exp, n_exp))
    extra = sorted(set(seen) - set(EXPECTED))
    if extra:
        result.problems.append(f"unexpected classes: {extra}")
    return result


def format_bench(result: BenchResult) -> str:
    lines = [f"Heater association judgment (M={result.M}, b={result.b}, c={result.c})",
             f"{'Event':<6} {'N':>3} {'n_max':>5}  {'Criteria':<15} {'Type':<11} {'Expected':<11} ",
             "-" * 60]
    for r in result.rows:
        crit = _criterion(r.N, r.n_max, result.M, result.b, result.c)
        mark = "ok" if r.ok else "MISMATCH"
        lines.append(f"{r.identity:<6} {r.N:>3} {r.n_max:>5}  {crit:<15} {r.type:<11} {r.expected_type:<11} {mark}")
    lines.append("-" * 60)
    lines.append(f"pattern: {result.pattern}")
    lines.append(f"{result.n_matching}/{len(result.rows)} association types match")
    for p in result.problems:
        lines.append(f"problem: {p}")
    return "\n".join(lines)
