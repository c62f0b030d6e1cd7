"""Effective bosonic model of bound kink pairs in the J2 = 1 chain.

A pair is a single reversed spin dressed to second order in ``g``.  At low
pair density the pairs are treated as bosons with dispersion
``omega_b - 2 t_b cos k - 2 t_b' cos 2k``.  A weak uniform field modulation
``delta g(t)`` couples to the zero-momentum pair and ``x(t) = <X> - <X>_GS``
obeys a driven harmonic oscillator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analysis import Signal
from .errors import DomainError, IntegrationError
from .protocols import RampKind, RampProtocol


@dataclass(frozen=True)
class PairCoefficients:
    """On-site energy and hoppings of a pair, with their partial contributions.

    ``contributions`` maps labels such as ``"omega_b(1)"`` to values; the
    labels follow the order of the perturbative processes (1) direct,
    (2) virtual pair hopping, (3) virtual flip of a neighbour.
    """

    g: float
    omega_b: float
    t_b: float
    t_b_prime: float
    contributions: dict = field(default_factory=dict)
    valid: bool = True


def pair_coefficients(g: float) -> PairCoefficients:
    """Second-order coefficients of the pair Hamiltonian."""
    g2 = g * g
    parts = {
        "omega_b(1)": 8.0 + 3.0 * g2 / 8.0,
        "omega_b(2)": -g2 / 2.0,
        "omega_b(3)": -g2 / 8.0,
        "t_b(1)": -g2 / 8.0,
        "t_b(2)": g2 / 4.0,
        "t_b_prime(1)": g2 / 16.0,
        "t_b_prime(3)": g2 / 16.0,
    }
    omega_b = parts["omega_b(1)"] + parts["omega_b(2)"] + parts["omega_b(3)"]
    t_b = parts["t_b(1)"] + parts["t_b(2)"]
    t_b_prime = parts["t_b_prime(1)"] + parts["t_b_prime(3)"]
    return PairCoefficients(float(g), omega_b, t_b, t_b_prime, parts, valid=abs(g) < 1.0)


def pair_dispersion(g: float, k):
    """``omega_b - 2 t_b cos k - 2 t_b' cos 2k``."""
    c = pair_coefficients(g)
    k = np.asarray(k, dtype=float)
    out = c.omega_b - 2.0 * c.t_b * np.cos(k) - 2.0 * c.t_b_prime * np.cos(2.0 * k)
    return float(out) if out.ndim == 0 else out


def pair_gap(g: float) -> float:
    """Pair energy at zero quasimomentum, ``8 - 3 g^2 / 4``."""
    c = pair_coefficients(g)
    return c.omega_b - 2.0 * c.t_b - 2.0 * c.t_b_prime


def train_energy(n: int) -> int:
    """Energy above the ferromagnet of ``n`` adjacent kinks at ``g = 0``.

    ``n`` kinks cost 6 each on the two broken couplings they cut, and every
    adjacent pair recovers 4 from a shared NNN bond, giving ``2 n + 4``.
    """
    if n < 0 or int(n) != n:
        raise DomainError(f"train length must be a non-negative integer, got {n!r}")
    return 0 if n == 0 else 2 * int(n) + 4


@dataclass(frozen=True, eq=False)
class DrivenResponse:
    """Oscillator response to a field modulation.

    ``signal`` samples ``x(t) = <X> - <X>_GS`` per site and ``zz_prediction``
    the per-site correlator shift ``(g/2) x(t)``.  The pair-density term that
    also shifts the correlator while the drive is on has no closed form and is
    left out; ``pair_density_omitted`` records that.
    """

    g: float
    omega: float
    drive: RampProtocol
    signal: Signal
    velocity: np.ndarray
    zz_prediction: Signal
    delta_g: np.ndarray
    pair_density_omitted: bool = True

    @property
    def t(self) -> np.ndarray:
        return self.signal.times

    def invariant(self) -> np.ndarray:
        """``x'^2 + omega^2 x^2``, conserved once the drive is off."""
        return self.velocity ** 2 + self.omega ** 2 * self.signal.values ** 2


def _rk4_segment(x, v, t0, t1, n, w2, force):
    """RK4 for ``x'' = -w2 x + f(t)`` with the forcing tabulated up front."""
    h = (t1 - t0) / n
    f = force(t0 + h * np.arange(2 * n + 1) / 2).tolist()
    for j in range(n):
        fa, fm, fb = f[2 * j], f[2 * j + 1], f[2 * j + 2]
        k1x, k1v = v, -w2 * x + fa
        k2x, k2v = v + h / 2 * k1v, -w2 * (x + h / 2 * k1x) + fm
        k3x, k3v = v + h / 2 * k2v, -w2 * (x + h / 2 * k2x) + fm
        k4x, k4v = v + h * k3v, -w2 * (x + h * k3x) + fb
        x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return x, v


def _integrate(w2, force, times, dt, breaks):
    """RK4 through sample times, never stepping across a breakpoint."""
    out = np.zeros((len(times), 2))
    x = v = 0.0
    for i in range(1, len(times)):
        a, b = times[i - 1], times[i]
        knots = [a] + [c for c in breaks if a < c < b] + [b]
        for t0, t1 in zip(knots[:-1], knots[1:]):
            n = max(1, math.ceil((t1 - t0) / dt - 1e-9))
            x, v = _rk4_segment(x, v, t0, t1, n, w2, force)
        if not (math.isfinite(x) and math.isfinite(v)):
            raise IntegrationError(f"oscillator diverged at t={b}")
        out[i] = x, v
    return out


def driven_response(g: float, drive: RampProtocol, t_end: float, dt: float = 1e-3,
                    sample_dt: float = 0.01, check: bool = False,
                    tol: float = 1e-8, max_halvings: int = 4) -> DrivenResponse:
    """Integrate ``x'' + omega^2 x = -2 omega delta_g(t)`` from rest.

    Parameters
    ----------
    g : float
        Static field; ``omega = pair_gap(g)``.
    drive : RampProtocol
        ``SINUSOIDAL_DRIVE`` or ``CONSTANT``; ``delta_g = drive(t) - g``.
    t_end : float
        Final time; the run starts at ``drive.t_start`` (0 for drives).
    dt : float
        RK4 step.
    sample_dt : float
        Output spacing.
    check : bool
        Halve ``dt`` until the sampled ``x`` changes by less than ``tol``.

    Raises
    ------
    IntegrationError
        If the halving check does not settle within ``max_halvings``.
    """
    if drive.kind not in (RampKind.SINUSOIDAL_DRIVE, RampKind.CONSTANT):
        raise DomainError("driven_response needs a sinusoidal or constant protocol")
    t0 = drive.t_start if math.isfinite(drive.t_start) else 0.0
    if t_end <= t0:
        raise DomainError("t_end must exceed the drive start")
    omega = pair_gap(g)
    n = int(round((t_end - t0) / sample_dt))
    times = t0 + sample_dt * np.arange(n + 1)
    times[-1] = min(times[-1], t_end)

    def force(t):
        return -2.0 * omega * (drive.value(t) - g)

    breaks = [b for b in drive.breakpoints if t0 < b < t_end]
    states = _integrate(omega * omega, force, times, dt, breaks)
    if check:
        for _ in range(max_halvings):
            dt /= 2
            finer = _integrate(omega * omega, force, times, dt, breaks)
            change = float(np.max(np.abs(finer[:, 0] - states[:, 0])))
            states = finer
            if change < tol:
                break
        else:
            raise IntegrationError(f"oscillator not converged under dt halving (change {change:.2e})")

    x = states[:, 0]
    delta_g = np.asarray(drive.value(times)) - g
    return DrivenResponse(
        g=float(g),
        omega=omega,
        drive=drive,
        signal=Signal(t0, sample_dt, x),
        velocity=states[:, 1],
        zz_prediction=Signal(t0, sample_dt, 0.5 * g * x),
        delta_g=delta_g,
    )


def resonant_solution(amplitude: float, omega: float, t):
    """Closed-form response to ``delta_g = A sin(omega t)`` at resonance.

    ``x = A t cos(omega t) - (A / omega) sin(omega t)`` for ``t`` inside the
    drive window.
    """
    t = np.asarray(t, dtype=float)
    return amplitude * t * np.cos(omega * t) - amplitude / omega * np.sin(omega * t)


def static_response(delta_g: float, g: float) -> float:
    """Displacement for a constant shift ``delta_g``: ``-2 delta_g / omega``."""
    return -2.0 * delta_g / pair_gap(g)


def pair_density_per_site(x_amplitude: float) -> float:
    """Coherent-state pair density from a per-site oscillation amplitude.

    With ``x = 2 |beta| / sqrt(L)`` per site the density ``|beta|^2 / L`` is
    ``x^2 / 4`` independent of ``L``.
    """
    return x_amplitude ** 2 / 4.0


def post_drive_amplitude(response: DrivenResponse, t_from: Optional[float] = None) -> float:
    """``sqrt(x^2 + (x'/omega)^2)`` averaged after the drive switches off."""
    t = response.t
    if t_from is None:
        t_from = response.drive.t_stop
    mask = t > t_from
    if not np.any(mask):
        raise DomainError("no samples after the drive")
    x = response.signal.values[mask]
    v = response.velocity[mask]
    return float(np.mean(np.sqrt(x * x + (v / response.omega) ** 2)))
