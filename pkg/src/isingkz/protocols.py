"""Model parameters, transverse-field protocols and momentum grids.

All times follow one convention: a linear ramp reaches its final field at
``t = 0``, so for a ramp from the paramagnet to ``g = 0`` the critical point
is crossed at ``t_c = -tau_q``.  ``RampProtocol.t_c`` converts to the
"time since the critical point" convention when needed.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .config import dump_flat, parse_flat
from .errors import DomainError

#: Marker for an infinite chain.
INFINITE = None

#: Critical field of the nearest-neighbour chain.
G_C_NN = 1.0
#: Critical field of the J2=1 chain from infinite-MPS data; default ramp centre.
G_C_NNN = 2.47725

DEFAULT_QUADRATURE_NODES = 2048


@dataclass(frozen=True)
class ModelParams:
    """Couplings of ``H = -sum(g X_n + Z_n Z_{n+1} + J2 Z_n Z_{n+2})``.

    ``L = None`` (``INFINITE``) denotes the thermodynamic limit.  The
    nearest-neighbour coupling is fixed to one.
    """

    g: float
    J2: float = 0.0
    L: Optional[int] = INFINITE

    def __post_init__(self):
        if self.L is not None:
            if int(self.L) != self.L or self.L <= 0:
                raise DomainError(f"L must be a positive integer, got {self.L!r}")
            if self.L % 2:
                raise DomainError(f"L must be even, got {self.L}")

    @property
    def extrapolation(self) -> bool:
        """True when ``J2`` lies outside the studied values {0, 1}."""
        return self.J2 not in (0.0, 1.0)

    @property
    def infinite(self) -> bool:
        return self.L is None


class RampKind(str, enum.Enum):
    LINEAR = "linear"
    SMOOTH_SINE = "smooth_sine"
    CONSTANT = "constant"
    SINUSOIDAL_DRIVE = "sinusoidal_drive"


@dataclass(frozen=True)
class RampProtocol:
    """A time-dependent transverse field ``g(t)``.

    Use the constructors :meth:`linear`, :meth:`smooth_sine`,
    :meth:`constant` and :meth:`drive` rather than filling fields by hand.

    Attributes
    ----------
    kind : RampKind
    tau_q : float or None
        Quench time of ramps.
    g_c : float
        Field crossed at ``t_c`` (linear) or the centre scale of the smooth ramp.
    g_target : float
        Final field of a ramp.
    g : float or None
        Static field of constant and driven protocols.
    amplitude, frequency, duration : float
        Drive ``g + amplitude * sin(frequency * t)`` for ``0 <= t <= duration``.
    t_start, t_end : float
        Domain of definition.  Ramps hold ``g_target`` between their stop
        time and ``t_end``.
    """

    kind: RampKind
    tau_q: Optional[float] = None
    g_c: float = G_C_NN
    g_target: float = 0.0
    g: Optional[float] = None
    amplitude: float = 0.0
    frequency: float = 0.0
    duration: float = 0.0
    t_start: float = -math.inf
    t_end: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "kind", RampKind(self.kind))
        if self.kind in (RampKind.LINEAR, RampKind.SMOOTH_SINE):
            if self.tau_q is None or not self.tau_q > 0:
                raise DomainError(f"{self.kind.value} ramp needs tau_q > 0")
        if self.kind in (RampKind.CONSTANT, RampKind.SINUSOIDAL_DRIVE) and self.g is None:
            raise DomainError(f"{self.kind.value} protocol needs a static field g")
        if self.t_end < self.t_start:
            raise DomainError("t_end precedes t_start")

    # -- constructors -----------------------------------------------------
    @classmethod
    def linear(cls, tau_q, g_c=G_C_NN, g_target=0.0, t_start=-math.inf, hold=0.0):
        """Linear ramp ``g_c * (1 - (t - t_c) / tau_q)`` stopping at ``t = 0``."""
        return cls(RampKind.LINEAR, tau_q=float(tau_q), g_c=float(g_c),
                   g_target=float(g_target), t_start=float(t_start), t_end=float(hold))

    @classmethod
    def smooth_sine(cls, tau_q, g_c=G_C_NNN, g_target=0.5, hold=0.0):
        """Smooth ramp from ``2 g_c`` to ``g_target`` on ``[-tau_q pi/2, tau_q pi/2]``."""
        half = float(tau_q) * math.pi / 2
        return cls(RampKind.SMOOTH_SINE, tau_q=float(tau_q), g_c=float(g_c),
                   g_target=float(g_target), t_start=-half, t_end=half + float(hold))

    @classmethod
    def constant(cls, g, t_start=-math.inf, t_end=math.inf):
        return cls(RampKind.CONSTANT, g=float(g), g_target=float(g),
                   t_start=float(t_start), t_end=float(t_end))

    @classmethod
    def drive(cls, g, amplitude, frequency, duration, t_end=math.inf):
        """``g + amplitude * sin(frequency * t)`` for ``t`` in ``[0, duration]``, then ``g``."""
        return cls(RampKind.SINUSOIDAL_DRIVE, g=float(g), g_target=float(g),
                   amplitude=float(amplitude), frequency=float(frequency),
                   duration=float(duration), t_start=0.0, t_end=float(t_end))

    # -- derived times ------------------------------------------------------
    @property
    def t_c(self) -> float:
        """Time at which the field equals ``g_c``."""
        if self.kind is RampKind.LINEAR:
            return -self.tau_q * (1.0 - self.g_target / self.g_c)
        if self.kind is RampKind.SMOOTH_SINE:
            # g = g_c where 1 + sin(t/tau_q) = 1 / (1 - g_target/(2 g_c))
            s = 1.0 / (1.0 - self.g_target / (2 * self.g_c)) - 1.0
            return self.tau_q * math.asin(s) if abs(s) <= 1 else math.nan
        raise DomainError(f"{self.kind.value} protocol has no critical crossing")

    @property
    def t_stop(self) -> float:
        """End of the time-dependent part."""
        if self.kind is RampKind.LINEAR:
            return 0.0
        if self.kind is RampKind.SMOOTH_SINE:
            return self.tau_q * math.pi / 2
        if self.kind is RampKind.SINUSOIDAL_DRIVE:
            return self.duration
        return self.t_start

    @property
    def breakpoints(self) -> tuple:
        """Times where ``g(t)`` is continuous but not smooth."""
        if self.kind is RampKind.CONSTANT:
            return ()
        return (self.t_stop,)

    def time_at_field(self, g_value: float) -> float:
        """Time at which a linear ramp passes ``g_value``."""
        if self.kind is not RampKind.LINEAR:
            raise DomainError("time_at_field is defined for linear ramps only")
        return self.t_c + self.tau_q * (1.0 - g_value / self.g_c)

    def with_start(self, t_start: float) -> "RampProtocol":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values["t_start"] = float(t_start)
        return RampProtocol(**values)

    # -- evaluation ---------------------------------------------------------
    def value(self, t):
        """Field at time ``t`` (scalar or array)."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.t_start - 1e-12) or np.any(t_arr > self.t_end + 1e-12):
            raise DomainError(
                f"t outside protocol domain [{self.t_start}, {self.t_end}] for {self.kind.value}"
            )
        if self.kind is RampKind.LINEAR:
            tt = np.minimum(t_arr, 0.0)
            out = self.g_c * (1.0 - (tt - self.t_c) / self.tau_q)
        elif self.kind is RampKind.SMOOTH_SINE:
            tt = np.minimum(t_arr, self.t_stop)
            out = self.g_c * (2.0 - (1.0 - self.g_target / (2 * self.g_c))
                              * (1.0 + np.sin(tt / self.tau_q)))
        elif self.kind is RampKind.CONSTANT:
            out = np.full_like(t_arr, self.g)
        else:
            active = (t_arr >= 0.0) & (t_arr <= self.duration)
            out = self.g + np.where(active, self.amplitude * np.sin(self.frequency * t_arr), 0.0)
        return float(out) if out.ndim == 0 else out

    __call__ = value

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.value if isinstance(value, RampKind) else value
        return out

    def to_config(self) -> str:
        return dump_flat(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "RampProtocol":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown protocol keys: {sorted(unknown)}")
        values = dict(data)
        for key in ("t_start", "t_end", "amplitude", "frequency", "duration", "g_c", "g_target"):
            if key in values:
                values[key] = float(values[key])
        return cls(**values)

    @classmethod
    def from_config(cls, text: str) -> "RampProtocol":
        return cls.from_dict(parse_flat(text))


def ramp_value(protocol: RampProtocol, t):
    """Transverse field of ``protocol`` at time ``t``."""
    return protocol.value(t)


class Boundary(str, enum.Enum):
    ANTIPERIODIC = "antiperiodic"
    QUADRATURE_INFINITE = "quadrature_infinite"


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    """Quasimomenta with integration weights.

    For an antiperiodic grid of ``L`` sites ``values`` covers ``(-pi, pi)``
    with weights ``2 pi / L``; the quadrature grid stores positive nodes only,
    with weights summing to ``pi``.  Either way ``sum(w f)`` over the positive
    nodes approximates ``int_0^pi f(k) dk``.
    """

    values: np.ndarray
    weights: np.ndarray
    boundary: Boundary
    size: int

    @property
    def positive(self) -> tuple[np.ndarray, np.ndarray]:
        """Positive nodes and their weights."""
        mask = self.values > 0
        return self.values[mask], self.weights[mask]

    def __len__(self):
        return len(self.values)


def momentum_grid(L: Optional[int] = INFINITE, n_nodes: int = DEFAULT_QUADRATURE_NODES) -> MomentumGrid:
    """Antiperiodic grid of a finite chain, or a midpoint quadrature on (0, pi).

    The quadrature nodes ``(j - 1/2) pi / n`` are the positive half of the
    antiperiodic grid of ``2 n`` sites, so finite and infinite chains share
    one code path and integrands that are smooth and periodic converge
    spectrally.
    """
    if L is None:
        if n_nodes < 2:
            raise DomainError("infinite-chain quadrature needs n_nodes >= 2")
        values = (np.arange(n_nodes) + 0.5) * (np.pi / n_nodes)
        weights = np.full(n_nodes, np.pi / n_nodes)
        return MomentumGrid(values, weights, Boundary.QUADRATURE_INFINITE, n_nodes)
    if int(L) != L or L <= 0 or L % 2:
        raise DomainError(f"antiperiodic grid needs a positive even L, got {L!r}")
    L = int(L)
    m = np.arange(1, L // 2 + 1)
    half = (2 * m - 1) * np.pi / L
    values = np.concatenate([-half[::-1], half])
    weights = np.full(L, 2 * np.pi / L)
    return MomentumGrid(values, weights, Boundary.ANTIPERIODIC, L)


def warn_extrapolation(params: ModelParams) -> None:
    if params.extrapolation:
        warnings.warn(f"J2={params.J2} is outside the studied values {{0, 1}}", stacklevel=2)
