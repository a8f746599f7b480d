"""Fundamental P/Q and odd-order current THD from raw cycle samples.

A frame holds ``n_cycles`` consecutive fundamental cycles, each sampled with
``points_per_cycle`` points, so DFT bin ``k`` of a single cycle is exactly the
k-th harmonic of the nominal frequency.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ODD_ORDERS = (1, 3, 5, 7, 9)
HARMONIC_ORDERS = (3, 5, 7, 9)
MIN_POINTS_PER_CYCLE = 32
_DEGENERATE_RMS = 1e-12


class PowerCalcError(ValueError):
    pass


@dataclass(frozen=True)
class WaveformFrame:
    timestamp: int
    phase: str
    voltage_cycles: np.ndarray
    current_cycles: np.ndarray
    points_per_cycle: int
    nominal_freq: float = 60.0

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.voltage_cycles, dtype=float))
        i = np.atleast_2d(np.asarray(self.current_cycles, dtype=float))
        object.__setattr__(self, "voltage_cycles", v)
        object.__setattr__(self, "current_cycles", i)
        if self.phase not in ("A", "B"):
            raise PowerCalcError(f"phase must be A or B, got {self.phase!r}")
        if v.shape != i.shape:
            raise PowerCalcError(f"voltage {v.shape} and current {i.shape} shapes differ")
        if self.points_per_cycle < MIN_POINTS_PER_CYCLE:
            raise PowerCalcError(f"points_per_cycle must be >= {MIN_POINTS_PER_CYCLE}")
        if v.shape[1] != self.points_per_cycle:
            raise PowerCalcError("cycle length does not match points_per_cycle")
        if v.shape[0] < 1:
            raise PowerCalcError("frame holds no cycles")

    @property
    def n_cycles(self) -> int:
        return self.voltage_cycles.shape[0]


@dataclass(frozen=True)
class HarmonicVector:
    """RMS current magnitudes at orders 1, 3, 5, 7, 9.

    ``phasors`` are cycle-averaged complex RMS phasors referenced to the voltage
    fundamental; they let callers difference harmonic content vectorially.
    """

    magnitudes: dict
    fundamental_phase: float = 0.0
    phasors: dict = field(default_factory=dict)
    degenerate: bool = False

    def __post_init__(self):
        if 1 not in self.magnitudes:
            raise PowerCalcError("order 1 magnitude is required")
        if any(m < 0 for m in self.magnitudes.values()):
            raise PowerCalcError("harmonic magnitudes must be non-negative")

    @classmethod
    def from_phasors(cls, phasors: dict) -> "HarmonicVector":
        full = {k: complex(phasors.get(k, 0.0)) for k in ODD_ORDERS}
        return cls(
            magnitudes={k: abs(p) for k, p in full.items()},
            fundamental_phase=float(np.angle(full[1])) if abs(full[1]) > 0 else 0.0,
            phasors=full,
        )


def _cycle_phasors(cycles: np.ndarray, orders=ODD_ORDERS) -> np.ndarray:
    # RMS phasor per cycle and order: sqrt(2)/N * X[k]
    n = cycles.shape[1]
    spectrum = np.fft.rfft(cycles, axis=1)
    return spectrum[:, list(orders)] * (np.sqrt(2.0) / n)


def _voltage_reference(frame: WaveformFrame) -> np.ndarray:
    v1 = _cycle_phasors(frame.voltage_cycles, (1,))[:, 0]
    if np.all(np.abs(v1) < _DEGENERATE_RMS):
        raise PowerCalcError("no reference voltage")
    return v1


def extract_harmonics(frame: WaveformFrame) -> HarmonicVector:
    """Cycle-averaged odd-order current harmonics (orders above 9 dropped)."""
    cur = _cycle_phasors(frame.current_cycles)
    if np.all(np.abs(cur) < _DEGENERATE_RMS):
        zeros = {k: 0.0 for k in ODD_ORDERS}
        return HarmonicVector(zeros, 0.0, {k: 0j for k in ODD_ORDERS}, degenerate=True)
    v1 = _cycle_phasors(frame.voltage_cycles, (1,))[:, 0]
    if np.all(np.abs(v1) < _DEGENERATE_RMS):
        rot = np.ones(len(v1), dtype=complex)
    else:
        rot = np.exp(-1j * np.angle(v1))
    # order k rotates k times as fast as the fundamental
    ref = np.stack([rot ** k for k in ODD_ORDERS], axis=1)
    aligned = cur * ref
    mags = np.abs(cur).mean(axis=0)
    mean_phasors = aligned.mean(axis=0)
    return HarmonicVector(
        magnitudes={k: float(m) for k, m in zip(ODD_ORDERS, mags)},
        fundamental_phase=float(np.angle(mean_phasors[0])),
        phasors={k: complex(p) for k, p in zip(ODD_ORDERS, mean_phasors)},
    )


def compute_pq(frame: WaveformFrame) -> tuple[float, float]:
    """Fundamental active and reactive power; Q > 0 for lagging current."""
    v1 = _voltage_reference(frame)
    i1 = _cycle_phasors(frame.current_cycles, (1,))[:, 0]
    s = np.mean(v1 * np.conj(i1))
    return float(s.real), float(s.imag)


def compute_thd(h: HarmonicVector) -> float:
    i1 = h.magnitudes.get(1, 0.0)
    if i1 <= 0:
        raise PowerCalcError("undefined THD")
    total = sum(h.magnitudes.get(k, 0.0) ** 2 for k in HARMONIC_ORDERS)
    return float(np.sqrt(total) / i1)


def phasor_thd(phasors: dict) -> float:
    """THD of a complex harmonic phasor set (used for differential content)."""
    i1 = abs(phasors.get(1, 0.0))
    if i1 <= 0:
        raise PowerCalcError("undefined THD")
    return float(np.sqrt(sum(abs(phasors.get(k, 0.0)) ** 2 for k in HARMONIC_ORDERS)) / i1)


def synthesize_frame(
    timestamp: int,
    phase: str,
    v_rms: float,
    current_phasors: dict,
    points_per_cycle: int = 256,
    n_cycles: int = 6,
    nominal_freq: float = 60.0,
) -> WaveformFrame:
    """Build a frame from an RMS voltage (angle 0) and current phasors by order.

    Each phasor ``A*exp(j*theta)`` of order ``k`` becomes
    ``sqrt(2)*A*cos(k*w*t + theta)``.
    """
    n = points_per_cycle
    theta = 2.0 * np.pi * np.arange(n) / n
    v = np.sqrt(2.0) * v_rms * np.cos(theta)
    i = np.zeros(n)
    for k, p in current_phasors.items():
        p = complex(p)
        i += np.sqrt(2.0) * abs(p) * np.cos(k * theta + np.angle(p))
    return WaveformFrame(
        timestamp=timestamp,
        phase=phase,
        voltage_cycles=np.tile(v, (n_cycles, 1)),
        current_cycles=np.tile(i, (n_cycles, 1)),
        points_per_cycle=n,
        nominal_freq=nominal_freq,
    )


def load_phasors(p: float, q: float, thd: float, v_rms: float, spectrum: dict | None = None,
                 harmonic_angles: dict | None = None) -> dict:
    """Current phasors of a load drawing (P, Q) with the given THD at ``v_rms``.

    ``spectrum`` gives relative weights of orders 3..9 (normalized internally);
    the default puts all distortion on the 3rd harmonic.
    """
    i1 = np.conj(complex(p, q) / v_rms)
    phasors = {1: complex(i1)}
    if thd > 0 and abs(i1) > 0:
        weights = spectrum or {3: 1.0}
        norm = np.sqrt(sum(w * w for w in weights.values()))
        angles = harmonic_angles or {}
        for k, w in weights.items():
            mag = thd * abs(i1) * w / norm
            phasors[int(k)] = mag * np.exp(1j * angles.get(int(k), 0.0))
    return phasors
