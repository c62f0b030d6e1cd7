"""Post-processing of sampled observables.

Frequencies are angular throughout: a signal ``cos(w t)`` has frequency ``w``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks
from scipy.signal.windows import hann

from .errors import ConvergenceError, DomainError, NumericalError

MIN_SAMPLES = 16
PAD_FACTOR = 8
# decay times longer than this many windows are indistinguishable from none
Q_INFINITE_WINDOWS = 100.0


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled real time series starting at ``t0``."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"sample spacing must be positive, got {self.dt}")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise DomainError("signal values must be one-dimensional")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    @property
    def duration(self) -> float:
        return self.dt * (len(self.values) - 1)

    def window(self, t_from: float = -math.inf, t_to: float = math.inf) -> "Signal":
        """Sub-signal with ``t_from <= t <= t_to``."""
        t = self.times
        idx = np.flatnonzero((t >= t_from - 1e-9 * self.dt) & (t <= t_to + 1e-9 * self.dt))
        if idx.size == 0:
            raise DomainError("empty signal window")
        return Signal(float(t[idx[0]]), self.dt, self.values[idx[0]:idx[-1] + 1])

    @classmethod
    def from_samples(cls, t, values) -> "Signal":
        """Build from explicit sample times, which must be uniform."""
        t = np.asarray(t, dtype=float)
        if t.size < 2:
            raise DomainError("need at least two samples")
        dt = (t[-1] - t[0]) / (t.size - 1)
        if np.max(np.abs(np.diff(t) - dt)) > 1e-9 * max(1.0, abs(dt)):
            raise DomainError("sample times are not uniform")
        return cls(float(t[0]), float(dt), values)


def _require_length(signal: Signal):
    if len(signal) < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples, got {len(signal)}")


class Peak(NamedTuple):
    frequency: float
    amplitude: float


def _spectrum(signal: Signal, taper: bool, pad: int):
    x = signal.values - signal.values.mean()
    w = hann(len(x), sym=False) if taper else np.ones(len(x))
    n_fft = pad * len(x)
    spec = np.abs(np.fft.rfft(x * w, n=n_fft)) * 2.0 / w.sum()
    omega = 2 * np.pi * np.fft.rfftfreq(n_fft, d=signal.dt)
    return omega, spec


def _refine(omega, spec, i):
    """Quadratic interpolation of the peak around bin ``i``."""
    if i == 0 or i == len(spec) - 1:
        return float(omega[i]), float(spec[i])
    a, b, c = spec[i - 1], spec[i], spec[i + 1]
    denom = a - 2 * b + c
    shift = 0.0 if denom == 0 else 0.5 * (a - c) / denom
    d_omega = omega[1] - omega[0]
    return float(omega[i] + shift * d_omega), float(b - 0.25 * (a - c) * shift)


def _check_floor(spec, peak_value, scale):
    if peak_value <= 1e-10 * scale or peak_value <= 10.0 * np.median(spec):
        raise NumericalError("no spectral peak above the noise floor")


def spectral_peaks(signal: Signal, n_peaks: int = 2, rel_threshold: float = 0.05,
                   band: Optional[tuple] = None, taper: bool = True,
                   pad: int = PAD_FACTOR) -> list[Peak]:
    """Strongest local maxima of the amplitude spectrum, largest first.

    Parameters
    ----------
    signal : Signal
    n_peaks : int
        Maximum number of peaks returned.
    rel_threshold : float
        Peaks below this fraction of the largest one are dropped.
    band : (float, float), optional
        Angular-frequency range searched.
    taper : bool
        Apply a Hann window before the transform.  On by default because
        rectangular-window sidelobes (about 22%) pass ``rel_threshold``.
    pad : int
        Zero-padding factor.

    Raises
    ------
    NumericalError
        When the spectrum has no peak above the noise floor.
    """
    _require_length(signal)
    omega, spec = _spectrum(signal, taper, pad)
    mask = np.ones_like(omega, dtype=bool)
    if band is not None:
        mask = (omega >= band[0]) & (omega <= band[1])
    masked = np.where(mask, spec, 0.0)
    scale = float(np.max(np.abs(signal.values))) or 1.0
    top = float(masked.max())
    _check_floor(spec, top, scale)
    idx, _ = find_peaks(masked, height=rel_threshold * top)
    if idx.size == 0:
        idx = np.array([int(np.argmax(masked))])
    order = idx[np.argsort(masked[idx])[::-1]][:n_peaks]
    return [Peak(*_refine(omega, spec, int(i))) for i in order]


def dominant_frequency(signal: Signal, band: Optional[tuple] = None,
                       taper: bool = False, pad: int = PAD_FACTOR) -> Peak:
    """Angular frequency and amplitude of the largest spectral peak.

    The mean is removed, the series zero-padded ``pad`` times and the peak
    bin refined by a parabola through its neighbours.
    """
    return spectral_peaks(signal, n_peaks=1, band=band, taper=taper, pad=pad)[0]


@dataclass(frozen=True)
class OscillationFit:
    """Result of fitting ``A exp(-s/tau_D) cos(w s + phi) + c`` with ``s = t - t0``."""

    amplitude: float
    frequency: float
    phase: float
    decay_time: float
    offset: float
    residual_rms: float
    window: float

    @property
    def period(self) -> float:
        return 2 * np.pi / self.frequency

    @property
    def q_infinite(self) -> bool:
        return not self.decay_time <= Q_INFINITE_WINDOWS * self.window

    @property
    def q(self) -> float:
        """``tau_D / T``; infinite when the decay is unresolved."""
        return math.inf if self.q_infinite else self.decay_time / self.period

    def to_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "frequency": self.frequency,
            "phase": self.phase,
            "decay_time": self.decay_time,
            "offset": self.offset,
            "q": self.q,
            "q_infinite": self.q_infinite,
            "residual_rms": self.residual_rms,
            "window": self.window,
        }


def damped_sinusoid(t, amplitude, frequency, phase, decay_time, offset=0.0, t0=0.0):
    s = np.asarray(t, dtype=float) - t0
    rate = 0.0 if math.isinf(decay_time) else 1.0 / decay_time
    return amplitude * np.exp(-rate * s) * np.cos(frequency * s + phase) + offset


def fit_damped_sinusoid(signal: Signal, f_guess: float, n_phase: int = 8,
                        max_nfev: int = 2000) -> OscillationFit:
    """Least-squares damped-sinusoid fit.

    The starting frequency is the spectral peak within 20% of ``f_guess``;
    the fit is started from ``n_phase`` equally spaced phases and the best
    converged solution kept, so the result is deterministic.

    Raises
    ------
    ConvergenceError
        When no start converges; carries the best residual reached.
    """
    _require_length(signal)
    if not f_guess > 0:
        raise DomainError("f_guess must be positive")
    s = signal.times - signal.t0
    y = signal.values
    window = signal.duration
    omega0, amp0 = dominant_frequency(signal, band=(0.8 * f_guess, 1.2 * f_guess))
    c0 = float(y.mean())
    scale = float(np.max(np.abs(y - c0))) or 1.0
    # rate is fitted in units of 1/window so all parameters are O(1)
    def residuals(p):
        a, w, phi, r, c = p
        e = np.exp(-r * s / window)
        return (a * e * np.cos(w * s + phi) + c - y) / scale

    def jacobian(p):
        a, w, phi, r, c = p
        e = np.exp(-r * s / window)
        cs, sn = np.cos(w * s + phi), np.sin(w * s + phi)
        return np.column_stack([e * cs, -a * e * s * sn, -a * e * sn,
                                -a * e * cs * s / window, np.ones_like(s)]) / scale

    best = None
    best_cost = math.inf
    for phi0 in np.arange(n_phase) * (2 * np.pi / n_phase):
        p0 = np.array([max(amp0, 1e-300), omega0, phi0, 0.0, c0])
        try:
            res = least_squares(residuals, p0, jac=jacobian, method="lm",
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
        except (ValueError, np.linalg.LinAlgError):
            continue
        if res.status > 0 and res.cost < best_cost:
            best, best_cost = res, res.cost
    if best is None:
        raise ConvergenceError("damped-sinusoid fit did not converge", residual=math.inf)

    a, w, phi, r, c = best.x
    if a < 0:
        a, phi = -a, phi + np.pi
    if w < 0:
        w, phi = -w, -phi
    phi = float(np.angle(np.exp(1j * phi)))
    rate = r / window
    decay = math.inf if rate <= 0 else 1.0 / rate
    rms = float(np.sqrt(np.mean((best.fun * scale) ** 2)))
    return OscillationFit(float(a), float(w), phi, decay, float(c), rms, window)


class PowerLawFit(NamedTuple):
    exponent: float
    prefactor: float
    r_squared: float


def fit_power_law(xs, ys) -> PowerLawFit:
    """Least-squares fit of ``y = prefactor * x**exponent`` in log-log space."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise DomainError("xs and ys must be 1-d arrays of equal length")
    if xs.size < 3:
        raise DomainError("need at least 3 points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise DomainError("power-law fit needs positive data")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    fit = slope * lx + intercept
    ss_res = float(np.sum((ly - fit) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return PowerLawFit(float(slope), float(np.exp(intercept)), r2)


def compare_series(reference, other) -> dict:
    """Differences between two equally sampled series.

    Returns ``max_abs``, ``rms`` and ``max_rel``; the last is relative to the
    largest magnitude of ``reference``.
    """
    a = np.asarray(getattr(reference, "values", reference), dtype=float)
    b = np.asarray(getattr(other, "values", other), dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"series lengths differ: {a.shape} vs {b.shape}")
    diff = b - a
    peak = float(np.max(np.abs(a))) or 1.0
    return {
        "max_abs": float(np.max(np.abs(diff))),
        "rms": float(np.sqrt(np.mean(diff ** 2))),
        "max_rel": float(np.max(np.abs(diff)) / peak),
    }
