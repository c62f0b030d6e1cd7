"""BCS theory of the J2 = 1 chain in the kink representation.

Kinks live on bonds; the Gaussian variational state is fixed by three real
mean fields: the kink density ``rho``, the anomalous density ``Delta`` and the
hopping correction ``t_f``.  For given mean fields the Bogoliubov pairs solve
the 2x2 problem ``[[H_k, D_k], [D_k, -H_k]]`` with

    H_k = 2 (3 - 4 rho) - 2 (g - 4 t_f) cos k
    D_k = -2 (g + 4 Delta) sin k
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import BracketError, ConvergenceError, DomainError
from .protocols import MomentumGrid, momentum_grid

DEFAULT_NK = 4096
DEFAULT_TOL = 1e-12
DERIVATIVE_STEP = 1e-3
SWEEP_CHUNK = 16

# cold start for g beyond the perturbative regime, taken from the solved branch near g ~ 2.5
_STRONG_FIELD_GUESS = (0.2, 0.25, 0.09)


@dataclass(frozen=True)
class BcsState:
    g: float
    rho: float
    delta: float
    t_f: float
    e0_per_site: float
    residual: float
    iterations: int = 0

    @property
    def fields(self) -> np.ndarray:
        return np.array([self.rho, self.delta, self.t_f])


@dataclass(frozen=True, eq=False)
class KinkDispersion:
    g: float
    k: np.ndarray
    u: np.ndarray
    v: np.ndarray
    omega: np.ndarray


@dataclass(frozen=True)
class PerturbativeState:
    """Small-``g`` expansion of the BCS solution, accurate to O(g^2) in the pairs."""

    g: float
    rho: float
    delta: float
    t_f: float
    omega_gamma: float
    t_gamma: float
    t_gamma_prime: float
    valid: bool

    def u(self, k):
        g2 = self.g ** 2 / 64.0
        return (1.0 - g2) + g2 * np.cos(2 * np.asarray(k))

    def v(self, k):
        k = np.asarray(k)
        return -(self.g / 4.0) * np.sin(k) - (self.g ** 2 / 24.0) * np.sin(2 * k)

    def omega(self, k):
        k = np.asarray(k)
        return self.omega_gamma - 2 * self.t_gamma * np.cos(k) - 2 * self.t_gamma_prime * np.cos(2 * k)


def perturbative_state(g: float) -> PerturbativeState:
    """Closed-form small-field mean fields, Bogoliubov pairs and dispersion."""
    return PerturbativeState(
        g=float(g),
        rho=g * g / 32.0,
        delta=g / 8.0,
        t_f=0.0,
        omega_gamma=6.0 + g * g / 8.0,
        t_gamma=float(g),
        t_gamma_prime=3.0 * g * g / 16.0,
        valid=g < 1.0,
    )


def bdg_coefficients(g, rho, delta, t_f, k):
    """Return ``(H_k, D_k)`` for the given mean fields."""
    k = np.asarray(k, dtype=float)
    h = 2.0 * (3.0 - 4.0 * rho) - 2.0 * (g - 4.0 * t_f) * np.cos(k)
    d = -2.0 * (g + 4.0 * delta) * np.sin(k)
    return h, d


def bdg_pairs(g, rho, delta, t_f, k):
    """Positive-frequency pairs ``(u, v, omega)`` of the kink BdG matrix."""
    h, d = bdg_coefficients(g, rho, delta, t_f, k)
    theta = np.arctan2(d, h)
    return np.cos(theta / 2), np.sin(theta / 2), np.hypot(h, d)


def energy_per_site(g, rho, delta, t_f, J1=1.0, J2=1.0):
    """Variational energy per site of the Gaussian kink state."""
    return (-(J1 + J2) + 2.0 * (J1 + 2.0 * J2) * rho
            - 2.0 * g * (t_f + delta)
            - 4.0 * J2 * (rho * rho + delta * delta - t_f * t_f))


def _symmetric_nodes(n_k: int) -> np.ndarray:
    return momentum_grid(n_k).values


def self_consistency_map(fields, g, k) -> np.ndarray:
    """Mean fields implied by the BdG pairs built from ``fields``.

    ``k`` must be a symmetric equal-weight grid on ``(-pi, pi)`` so that
    plain means are ``int dk / 2 pi``.
    """
    rho, delta, t_f = fields
    u, v, _ = bdg_pairs(g, rho, delta, t_f, k)
    v2 = v * v
    return np.array([v2.mean(), -(u * v * np.sin(k)).mean(), (v2 * np.cos(k)).mean()])


def _iterate(g, k, x0, alpha, tol, max_iter):
    x = np.array(x0, dtype=float)
    best = (math.inf, x)
    rising = 0
    last = math.inf
    for it in range(1, max_iter + 1):
        y = self_consistency_map(x, g, k)
        r = float(np.max(np.abs(y - x)))
        if r < best[0]:
            best = (r, x)
        if r < tol:
            return y, r, it, True
        rising = rising + 1 if r > last else 0
        last = r
        if rising >= 20:
            return best[1], best[0], it, False
        x = (1.0 - alpha) * x + alpha * y
    return best[1], best[0], max_iter, False


def solve_self_consistent(g: float, n_k: int = DEFAULT_NK, tol: float = DEFAULT_TOL,
                          max_iter: int = 20000, initial: Optional[Sequence[float]] = None,
                          alpha: float = 0.5) -> BcsState:
    """Damped fixed-point solution of the three self-consistency integrals.

    The map is mixed as ``x <- (1 - alpha) x + alpha F(x)``.  When the
    residual stops contracting (near the critical field) the solver restarts
    from its best iterate with ``alpha = 0.1``.

    Parameters
    ----------
    g : float
        Transverse field.
    n_k : int
        Number of midpoint nodes on ``(-pi, pi)``.
    tol : float
        Required ``max |F(x) - x|``.
    max_iter : int
    initial : sequence of 3 floats, optional
        Starting ``(rho, Delta, t_f)``; defaults to the perturbative values
        for ``g < 1`` and a strong-field guess otherwise.
    alpha : float
        Initial mixing.

    Raises
    ------
    ConvergenceError
        If the residual is still above ``tol`` after ``max_iter`` iterations.
    """
    if n_k < 64:
        raise DomainError("n_k must be at least 64")
    if not tol > 0:
        raise DomainError("tol must be positive")
    if initial is None:
        if g < 1.0:
            p = perturbative_state(g)
            initial = (p.rho, p.delta, p.t_f)
        else:
            initial = _STRONG_FIELD_GUESS
    k = _symmetric_nodes(n_k)
    x, r, it, ok = _iterate(g, k, initial, alpha, tol, max_iter)
    total = it
    if not ok and alpha > 0.1:
        x, r, it, ok = _iterate(g, k, x, 0.1, tol, max_iter)
        total += it
    if not ok:
        raise ConvergenceError(f"BCS self-consistency at g={g} stalled with residual {r:.3e}", residual=r)
    # adding 0.0 turns -0.0 into 0.0
    rho, delta, t_f = (float(c) + 0.0 for c in x)
    # Delta -> -Delta is a gauge copy; report the Delta >= 0 branch
    delta = abs(delta)
    return BcsState(float(g), rho, delta, t_f, float(energy_per_site(g, rho, delta, t_f)), r, total)


def residual(state: BcsState, n_k: int) -> float:
    """Self-consistency mismatch of ``state`` re-evaluated on ``n_k`` nodes."""
    k = _symmetric_nodes(n_k)
    return float(np.max(np.abs(self_consistency_map(state.fields, state.g, k) - state.fields)))


def _solve_chunk(args):
    g_values, n_k, tol = args
    out = []
    previous = None
    for g in g_values:
        state = solve_self_consistent(g, n_k=n_k, tol=tol, initial=previous)
        previous = state.fields
        out.append(state)
    return out


def sweep(g_values: Sequence[float], n_k: int = DEFAULT_NK, tol: float = DEFAULT_TOL,
          workers: int = 1, chunk_size: int = SWEEP_CHUNK) -> list[BcsState]:
    """Solve on a grid of fields with continuation.

    The grid is cut into contiguous chunks of ``chunk_size`` points; the first
    point of each chunk starts from the default guess and later points from
    their predecessor.  Chunking does not depend on ``workers``, so results are
    identical for any worker count.
    """
    g_values = [float(g) for g in g_values]
    chunks = [(g_values[i:i + chunk_size], n_k, tol) for i in range(0, len(g_values), chunk_size)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_solve_chunk, chunks))
    else:
        parts = [_solve_chunk(c) for c in chunks]
    return [state for part in parts for state in part]


def dispersion(state: BcsState, grid: Optional[MomentumGrid] = None) -> KinkDispersion:
    """Quasiparticle pairs and energies ``omega_k`` of a solved state."""
    if grid is None:
        grid = momentum_grid(DEFAULT_NK)
    k = grid.values
    u, v, omega = bdg_pairs(state.g, state.rho, state.delta, state.t_f, k)
    return KinkDispersion(state.g, k, u, v, omega)


def quasiparticle_gap(state: BcsState, n_k: int = DEFAULT_NK) -> float:
    """``min_k omega_k``, refined between grid nodes."""
    def omega(k):
        return float(bdg_pairs(state.g, state.rho, state.delta, state.t_f, k)[2])

    k = np.concatenate([[0.0], np.linspace(0.0, np.pi, n_k // 2 + 1)[1:]])
    w = bdg_pairs(state.g, state.rho, state.delta, state.t_f, k)[2]
    i = int(np.argmin(w))
    lo, hi = k[max(i - 1, 0)], k[min(i + 1, len(k) - 1)]
    best = min(omega(0.0), float(w[i]))
    if hi > lo:
        res = minimize_scalar(omega, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return best


# ---------------------------------------------------------------------------
# derivatives and the critical point


class _DeltaCurve:
    """``Delta(g)`` with warm starts from the nearest previously solved field."""

    def __init__(self, n_k, tol):
        self.n_k = n_k
        self.tol = tol
        self.cache: dict[float, BcsState] = {}

    def state(self, g: float) -> BcsState:
        g = float(g)
        if g not in self.cache:
            initial = None
            if self.cache:
                nearest = min(self.cache, key=lambda x: abs(x - g))
                initial = self.cache[nearest].fields
            self.cache[g] = solve_self_consistent(g, n_k=self.n_k, tol=self.tol, initial=initial)
        return self.cache[g]

    def derivative(self, g: float, h: float = DERIVATIVE_STEP) -> np.ndarray:
        """Five-point central derivative of ``(rho, Delta, t_f)``."""
        f = [self.state(g + j * h).fields for j in (-2, -1, 1, 2)]
        return (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)


def field_derivatives(g_values: Sequence[float], n_k: int = DEFAULT_NK,
                      tol: float = DEFAULT_TOL, h: float = DERIVATIVE_STEP) -> dict:
    """``d(rho, Delta, t_f)/dg`` on a grid; keys ``g``, ``dRho_dg``, ``dDelta_dg``, ``dTf_dg``."""
    curve = _DeltaCurve(n_k, tol)
    rows = np.array([curve.derivative(g, h) for g in g_values])
    return {
        "g": np.asarray(g_values, dtype=float),
        "dDelta_dg": rows[:, 1],
        "dRho_dg": rows[:, 0],
        "dTf_dg": rows[:, 2],
    }


def locate_critical(g_lo: float = 2.2, g_hi: float = 2.7, n_g: int = 51,
                    n_k: int = DEFAULT_NK, tol: float = DEFAULT_TOL) -> float:
    """Field maximizing ``|dDelta/dg|`` inside ``[g_lo, g_hi]``.

    A coarse scan of the five-point derivative is refined by golden-section
    search between the neighbours of the best grid point.

    Raises
    ------
    BracketError
        When the largest derivative sits on the bracket edge.
    """
    if n_g < 3:
        raise DomainError("n_g must be at least 3")
    curve = _DeltaCurve(n_k, tol)
    grid = np.linspace(g_lo, g_hi, n_g)
    slope = np.array([abs(curve.derivative(g)[1]) for g in grid])
    i = int(np.argmax(slope))
    if i == 0 or i == n_g - 1:
        raise BracketError(f"bracket too narrow: |dDelta/dg| peaks at the edge g={grid[i]}")
    res = minimize_scalar(lambda g: -abs(curve.derivative(g)[1]),
                          bracket=(grid[i - 1], grid[i], grid[i + 1]),
                          method="golden", options={"xtol": 1e-7})
    return float(res.x)


# ---------------------------------------------------------------------------
# pair / quasiparticle crossover


def _crossover_function(method: str, n_k: int, tol: float) -> Callable[[float], float]:
    from .pairmodel import pair_gap

    if method == "perturbative":
        def f(g):
            return pair_gap(g) - 2.0 * float(perturbative_state(g).omega(0.0))
    elif method == "full_bcs":
        curve = _DeltaCurve(n_k, tol)

        def f(g):
            return pair_gap(g) - 2.0 * quasiparticle_gap(curve.state(g), n_k)
    else:
        raise DomainError(f"unknown crossover method {method!r}")
    return f


def locate_crossover(method: str = "perturbative", bracket: tuple = (0.5, 2.0),
                     n_k: int = DEFAULT_NK, tol: float = DEFAULT_TOL,
                     xtol: Optional[float] = None) -> float:
    """Field where the pair gap equals twice the quasiparticle gap.

    ``method`` is ``"perturbative"`` (small-g dispersion) or ``"full_bcs"``
    (solved dispersion).  The root is bracketed and refined with Brent's
    method, to rounding for the perturbative curve and to ``1e-6`` otherwise.
    """
    f = _crossover_function(method, n_k, tol)
    lo, hi = bracket
    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0:
        raise BracketError(f"no pair/quasiparticle crossing in [{lo}, {hi}]")
    if xtol is None:
        xtol = 1e-15 if method == "perturbative" else 1e-6
    return float(brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps))
