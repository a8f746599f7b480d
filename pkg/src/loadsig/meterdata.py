"""Per-second power recordings, load events, and their file formats.

Samples CSV
    Optional first line ``# epoch=YYYY-MM-DDTHH:MM:SS`` (local clock time of
    ``t_s = 0``; defaults to 1970-01-01T00:00:00), then the header
    ``t_s,phase,P_W,Q_var,THD_pct`` and one row per phase per second.
    ``THD_pct`` may be empty.

Waveform frame file (``.lswf``), little-endian, version 1::

    b"LSWF"  uint16 version  uint16 len(epoch)  epoch ISO string (utf-8)
    repeated until EOF:
        int64 t_s  char phase  float64 nominal_freq  uint32 points_per_cycle
        uint32 n_cycles  float64[2 * points_per_cycle * n_cycles] samples

    Samples interleave ``v0, i0, v1, i1, ...`` cycle after cycle.

Events CSV
    ``t_s,phase_tag,direction,dP_W,dQ_var,THD_pct,spike,corrupted``.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterator

import numpy as np

from . import powercalc

PHASES = ("A", "B")
DEFAULT_EPOCH = datetime(1970, 1, 1)
SAMPLES_HEADER = ["t_s", "phase", "P_W", "Q_var", "THD_pct"]
EVENTS_HEADER = ["t_s", "phase_tag", "direction", "dP_W", "dQ_var", "THD_pct", "spike", "corrupted"]
FRAME_MAGIC = b"LSWF"
FRAME_VERSION = 1
_FRAME_HEAD = struct.Struct("<qcdII")


class MeterDataError(ValueError):
    pass


@dataclass(frozen=True)
class PowerSample:
    timestamp: int
    phase: str
    P: float
    Q: float
    THD: float | None = None


@dataclass
class PhaseSeries:
    """Dense 1 Hz arrays; ``valid`` is False inside gaps (values are NaN there).

    ``harmonics`` optionally holds complex current phasors (orders 1, 3, 5, 7, 9,
    referenced to the voltage fundamental) per second, available when the
    recording was built from waveform frames.
    """

    P: np.ndarray
    Q: np.ndarray
    THD: np.ndarray
    valid: np.ndarray
    harmonics: np.ndarray | None = None


@dataclass
class MeterRecording:
    epoch: datetime
    start: int
    phases: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(s.P) for s in self.phases.values()}
        if len(lengths) > 1:
            raise MeterDataError("phases must cover the same span")
        for name in self.phases:
            if name not in PHASES:
                raise MeterDataError(f"unknown phase {name!r}")

    @property
    def n(self) -> int:
        for s in self.phases.values():
            return len(s.P)
        return 0

    @property
    def end(self) -> int:
        return self.start + self.n

    @property
    def duration(self) -> int:
        return self.n

    def times(self) -> np.ndarray:
        return np.arange(self.start, self.end, dtype=np.int64)

    def phase_gaps(self, phase: str) -> list[tuple[int, int]]:
        return _runs(~self.phases[phase].valid, self.start)

    @property
    def gap_list(self) -> list[tuple[int, int]]:
        if not self.phases:
            return []
        missing = np.zeros(self.n, dtype=bool)
        for s in self.phases.values():
            missing |= ~s.valid
        return _runs(missing, self.start)

    def samples(self, phase: str) -> Iterator[PowerSample]:
        s = self.phases[phase]
        for idx in np.flatnonzero(s.valid):
            thd = float(s.THD[idx])
            yield PowerSample(int(self.start + idx), phase, float(s.P[idx]), float(s.Q[idx]),
                              None if math.isnan(thd) else thd)

    def clock(self, t: int) -> datetime:
        return self.epoch + timedelta(seconds=int(t))

    def shifted(self, delta: int) -> "MeterRecording":
        return MeterRecording(self.epoch, self.start + delta, self.phases)


def _runs(mask: np.ndarray, offset: int) -> list[tuple[int, int]]:
    if not mask.any():
        return []
    m = np.concatenate([[False], mask, [False]]).astype(np.int8)
    d = np.diff(m)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return [(int(a + offset), int(b + offset)) for a, b in zip(starts, ends)]


def recording_from_arrays(epoch: datetime, start: int, arrays: dict) -> MeterRecording:
    """Build a gap-free recording from ``{phase: (P, Q, THD)}`` arrays."""
    phases = {}
    for name, (p, q, thd) in arrays.items():
        p = np.asarray(p, dtype=float)
        phases[name] = PhaseSeries(
            P=p,
            Q=np.asarray(q, dtype=float),
            THD=np.asarray(thd, dtype=float) if thd is not None else np.full(len(p), np.nan),
            valid=np.ones(len(p), dtype=bool),
        )
    return MeterRecording(epoch, start, phases)


def _from_samples(epoch: datetime, rows: dict, with_harmonics: bool = False) -> MeterRecording:
    # rows: phase -> list of (t, P, Q, THD[, phasors])
    present = {ph: r for ph, r in rows.items() if r}
    if not present:
        return MeterRecording(epoch, 0, {})
    t0 = min(r[0][0] for r in present.values())
    t1 = max(r[-1][0] for r in present.values()) + 1
    n = t1 - t0
    phases = {}
    for ph, r in present.items():
        idx = np.array([x[0] for x in r], dtype=np.int64) - t0
        series = PhaseSeries(
            P=np.full(n, np.nan), Q=np.full(n, np.nan), THD=np.full(n, np.nan),
            valid=np.zeros(n, dtype=bool),
            harmonics=np.zeros((n, 5), dtype=complex) if with_harmonics else None,
        )
        series.P[idx] = [x[1] for x in r]
        series.Q[idx] = [x[2] for x in r]
        series.THD[idx] = [np.nan if x[3] is None else x[3] for x in r]
        series.valid[idx] = True
        if with_harmonics:
            series.harmonics[idx] = [x[4] for x in r]
        phases[ph] = series
    return MeterRecording(epoch, int(t0), phases)


def _parse_epoch(line: str) -> datetime:
    body = line.lstrip("#").strip()
    key, _, value = body.partition("=")
    if key.strip() != "epoch":
        raise MeterDataError(f"unrecognized comment line {line!r}")
    try:
        return datetime.fromisoformat(value.strip())
    except ValueError as exc:
        raise MeterDataError(f"bad epoch {value!r}") from exc


def load_samples_csv(path) -> MeterRecording:
    path = Path(path)
    epoch = DEFAULT_EPOCH
    rows: dict = {ph: [] for ph in PHASES}
    with path.open(newline="", encoding="utf-8") as fh:
        lineno = 0
        header = None
        reader = csv.reader(fh)
        for rec in reader:
            lineno = reader.line_num
            if not rec:
                continue
            if header is None:
                if rec[0].startswith("#"):
                    epoch = _parse_epoch(",".join(rec))
                    continue
                if [c.strip() for c in rec] != SAMPLES_HEADER:
                    raise MeterDataError(f"line {lineno}: expected header {','.join(SAMPLES_HEADER)}")
                header = rec
                continue
            if len(rec) != 5:
                raise MeterDataError(f"line {lineno}: expected 5 fields, got {len(rec)}")
            t_raw, phase, p_raw, q_raw, thd_raw = (c.strip() for c in rec)
            try:
                t_val = float(t_raw)
                p = float(p_raw)
                q = float(q_raw)
                thd = float(thd_raw) / 100.0 if thd_raw else None
            except ValueError as exc:
                raise MeterDataError(f"line {lineno}: malformed row {rec!r}") from exc
            if phase not in PHASES:
                raise MeterDataError(f"line {lineno}: unknown phase {phase!r}")
            if not t_val.is_integer():
                raise MeterDataError(f"line {lineno}: non-1Hz cadence")
            t = int(t_val)
            seq = rows[phase]
            if seq and t == seq[-1][0]:
                raise MeterDataError(f"line {lineno}: duplicate timestamp {t} on phase {phase}")
            if seq and t < seq[-1][0]:
                raise MeterDataError(f"line {lineno}: out-of-order timestamp {t} on phase {phase}")
            seq.append((t, p, q, thd))
        if header is None:
            raise MeterDataError("missing header")
    return _from_samples(epoch, rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def save_samples_csv(rec: MeterRecording, path) -> None:
    path = Path(path)
    names = [ph for ph in PHASES if ph in rec.phases]
    cols = []
    for ph in names:
        s = rec.phases[ph]
        cols.append((ph, s.P.tolist(), s.Q.tolist(), s.THD.tolist(), s.valid.tolist()))
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# epoch={rec.epoch.isoformat()}\n")
        fh.write(",".join(SAMPLES_HEADER) + "\n")
        out = []
        for i in range(rec.n):
            t = rec.start + i
            for ph, p, q, thd, valid in cols:
                if not valid[i]:
                    continue
                h = thd[i]
                h_txt = "" if h != h else format(h * 100.0, ".12g")
                out.append(f"{t},{ph},{_fmt(p[i])},{_fmt(q[i])},{h_txt}\n")
            if len(out) > 50000:
                fh.writelines(out)
                out.clear()
        fh.writelines(out)


def save_waveform_frames(frames, path, epoch: datetime = DEFAULT_EPOCH) -> None:
    path = Path(path)
    ep = epoch.isoformat().encode("utf-8")
    with path.open("wb") as fh:
        fh.write(FRAME_MAGIC + struct.pack("<HH", FRAME_VERSION, len(ep)) + ep)
        for f in frames:
            fh.write(_FRAME_HEAD.pack(int(f.timestamp), f.phase.encode("ascii"),
                                      float(f.nominal_freq), f.points_per_cycle, f.n_cycles))
            inter = np.empty((f.n_cycles, f.points_per_cycle, 2))
            inter[..., 0] = f.voltage_cycles
            inter[..., 1] = f.current_cycles
            fh.write(inter.astype("<f8").tobytes())


def iter_waveform_frames(path) -> tuple[datetime, Iterator[powercalc.WaveformFrame]]:
    data = Path(path).read_bytes()
    if data[:4] != FRAME_MAGIC:
        raise MeterDataError("not a waveform frame file (bad magic)")
    version, elen = struct.unpack_from("<HH", data, 4)
    if version != FRAME_VERSION:
        raise MeterDataError(f"unsupported frame file version {version}")
    epoch = datetime.fromisoformat(data[8:8 + elen].decode("utf-8"))

    def frames():
        off = 8 + elen
        k = 0
        while off < len(data):
            if off + _FRAME_HEAD.size > len(data):
                raise MeterDataError(f"frame {k}: truncated header")
            t, ph, freq, ppc, ncyc = _FRAME_HEAD.unpack_from(data, off)
            off += _FRAME_HEAD.size
            count = 2 * ppc * ncyc
            if off + 8 * count > len(data):
                raise MeterDataError(f"frame {k}: truncated samples")
            arr = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(ncyc, ppc, 2)
            off += 8 * count
            try:
                yield powercalc.WaveformFrame(int(t), ph.decode("ascii"), arr[..., 0], arr[..., 1],
                                              int(ppc), float(freq))
            except powercalc.PowerCalcError as exc:
                raise MeterDataError(f"frame {k}: {exc}") from exc
            k += 1

    return epoch, frames()


def load_waveform_frames(path) -> MeterRecording:
    """Convert each frame into one per-second sample via fundamental P/Q and THD."""
    epoch, frames = iter_waveform_frames(path)
    rows: dict = {ph: [] for ph in PHASES}
    for frame in frames:
        p, q = powercalc.compute_pq(frame)
        h = powercalc.extract_harmonics(frame)
        thd = None if h.degenerate or h.magnitudes[1] <= 0 else powercalc.compute_thd(h)
        seq = rows[frame.phase]
        if seq and frame.timestamp <= seq[-1][0]:
            raise MeterDataError(f"frame at t={frame.timestamp}: out-of-order or duplicate timestamp")
        seq.append((frame.timestamp, p, q, thd,
                    [h.phasors.get(k, 0j) for k in powercalc.ODD_ORDERS]))
    return _from_samples(epoch, rows, with_harmonics=True)


@dataclass(frozen=True)
class LoadEvent:
    t: int
    phase_tag: str
    direction: str
    dP: float
    dQ: float
    thd: float = float("nan")
    spike: bool = False
    corrupted_hint: bool = False

    def __post_init__(self):
        if self.direction not in ("ON", "OFF"):
            raise MeterDataError(f"direction must be ON or OFF, got {self.direction!r}")
        if (self.direction == "ON") != (self.dP > 0):
            raise MeterDataError("direction must be ON exactly when dP > 0")
        if self.spike and self.direction != "ON":
            raise MeterDataError("spike is only valid on ON events")
        if self.phase_tag not in ("A", "B", "AB"):
            raise MeterDataError(f"unknown phase tag {self.phase_tag!r}")

    @property
    def thd_pct(self) -> float:
        return self.thd * 100.0


def save_events_csv(events, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENTS_HEADER)
        for e in events:
            w.writerow([e.t, e.phase_tag, e.direction, _fmt(e.dP), _fmt(e.dQ),
                        "" if math.isnan(e.thd) else format(e.thd * 100.0, ".12g"),
                        int(e.spike), int(e.corrupted_hint)])


def load_events_csv(path) -> list[LoadEvent]:
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EVENTS_HEADER:
            raise MeterDataError("bad events header")
        for row in reader:
            try:
                out.append(LoadEvent(
                    t=int(row["t_s"]), phase_tag=row["phase_tag"], direction=row["direction"],
                    dP=float(row["dP_W"]), dQ=float(row["dQ_var"]),
                    thd=float(row["THD_pct"]) / 100.0 if row["THD_pct"] else float("nan"),
                    spike=bool(int(row["spike"])), corrupted_hint=bool(int(row["corrupted"])),
                ))
            except (ValueError, MeterDataError) as exc:
                raise MeterDataError(f"line {reader.line_num}: {exc}") from exc
    return out
