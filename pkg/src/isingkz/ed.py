"""Exact diagonalization of periodic Ising chains with NN and NNN couplings.

``H = -sum_n (g X_n + Z_n Z_{n+1} + J2 Z_n Z_{n+2})``

Configurations are integers whose bit ``n`` is 1 when spin ``n`` points down.
Symmetry sectors combine translations ``T`` (bit rotation) and the global
spin flip ``P = prod X`` (complement of all bits).  A sector basis state is

    |a> = N_a^{-1/2} sum_{g in G} conj(chi(g)) g |c_a>

with ``c_a`` the smallest integer in its orbit and ``chi`` the eigenvalue
of ``g`` in the sector, so ``g |psi> = chi(g) |psi>`` for every sector state.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import ConvergenceError, DomainError, IntegrationError
from .protocols import RampProtocol

L_MIN, L_MAX = 4, 20
MAX_LEVELS = 6
#: Sectors up to this dimension are diagonalized densely.
DENSE_LIMIT = 1500
RESIDUAL_TOL = 1e-10
KRYLOV_MAX_DIM = 30
MAX_STEP = 0.02

_CFM_A1 = (3.0 - 2.0 * math.sqrt(3.0)) / 12.0
_CFM_A2 = (3.0 + 2.0 * math.sqrt(3.0)) / 12.0
_GAUSS = math.sqrt(3.0) / 6.0


def _rotate(c, l, L):
    """Translate configurations by ``l`` sites (bit ``n`` moves to ``n + l``)."""
    if l % L == 0:
        return c
    mask = np.uint64((1 << L) - 1)
    l = np.uint64(l % L)
    return ((c << l) | (c >> (np.uint64(L) - l))) & mask


def _popcount(c):
    return np.bitwise_count(c).astype(np.int64)


def bond_sums(configs, L: int):
    """``sum_n Z_n Z_{n+1}`` and ``sum_n Z_n Z_{n+2}`` for each configuration."""
    c = np.asarray(configs, dtype=np.uint64)
    nn = L - 2 * _popcount(c ^ _rotate(c, 1, L))
    nnn = L - 2 * _popcount(c ^ _rotate(c, 2, L))
    return nn, nnn


@dataclass(frozen=True, eq=False)
class SpinSector:
    """Symmetry-adapted basis of an ``L``-site ring.

    Attributes
    ----------
    L : int
    momentum : int or None
        Translation quantum number ``m``; ``T`` has eigenvalue ``exp(2 pi i m / L)``.
    parity : {+1, -1} or None
        Eigenvalue of ``prod X``.
    reps : ndarray of uint64
        Orbit representatives, ascending.
    norms : ndarray
        ``N_a`` of each representative.
    """

    L: int
    momentum: Optional[int]
    parity: Optional[int]
    reps: np.ndarray
    norms: np.ndarray
    _flip_index: Optional[np.ndarray] = field(default=None, repr=False)
    _flip_coeff: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.reps)

    def __len__(self):
        return self.dim

    @property
    def label(self) -> str:
        m = "-" if self.momentum is None else str(self.momentum)
        p = "-" if self.parity is None else ("+" if self.parity > 0 else "-1")
        return f"k={m},p={p}"

    @property
    def full(self) -> bool:
        return self.momentum is None and self.parity is None

    def group(self):
        """Group elements ``(l, s)`` for ``T^l P^s`` with their characters."""
        ls = range(self.L) if self.momentum is not None else (0,)
        ss = (0, 1) if self.parity is not None else (0,)
        out = []
        for l in ls:
            for s in ss:
                chi = 1.0 + 0j
                if self.momentum is not None:
                    chi *= np.exp(2j * np.pi * self.momentum * l / self.L)
                if s:
                    chi *= self.parity
                out.append((l, s, chi))
        return out

    def same_as(self, other: "SpinSector") -> bool:
        return (self.L, self.momentum, self.parity) == (other.L, other.momentum, other.parity)


def _apply_group(c, l, s, L):
    img = _rotate(c, l, L)
    if s:
        img = img ^ np.uint64((1 << L) - 1)
    return img


def _representatives(configs, sector_L, group):
    """Smallest image of each configuration and the element reaching it."""
    best = configs.copy()
    which = np.zeros(len(configs), dtype=np.int64)
    for j, (l, s, _) in enumerate(group):
        img = _apply_group(configs, l, s, sector_L)
        better = img < best
        best = np.where(better, img, best)
        which = np.where(better, j, which)
    return best, which


def build_sector(L: int, momentum: Optional[int] = None, parity: Optional[int] = None) -> SpinSector:
    """Enumerate the basis of one symmetry sector.

    Parameters
    ----------
    L : int
        Even ring length, ``4 <= L <= 20``.
    momentum : int, optional
        ``0 <= momentum < L``; ``None`` disables translation symmetry.
    parity : {+1, -1}, optional
        ``None`` disables spin-flip symmetry.
    """
    if int(L) != L or L % 2 or not L_MIN <= L <= L_MAX:
        raise DomainError(f"L must be even with {L_MIN} <= L <= {L_MAX}, got {L!r}")
    L = int(L)
    if momentum is not None:
        if int(momentum) != momentum or not 0 <= momentum < L:
            raise DomainError(f"momentum must be an integer in [0, {L}), got {momentum!r}")
        momentum = int(momentum)
    if parity is not None and parity not in (1, -1):
        raise DomainError(f"parity must be +1, -1 or None, got {parity!r}")

    configs = np.arange(1 << L, dtype=np.uint64)
    if momentum is None and parity is None:
        return SpinSector(L, None, None, configs, np.ones(len(configs)))

    proto = SpinSector(L, momentum, parity, configs[:0], np.ones(0))
    group = proto.group()
    minimum = configs.copy()
    stab = np.zeros(len(configs), dtype=complex)
    for l, s, chi in group:
        img = _apply_group(configs, l, s, L)
        minimum = np.minimum(minimum, img)
        stab += np.where(img == configs, np.conj(chi), 0.0)
    norms = len(group) * stab.real
    keep = (minimum == configs) & (norms > 0.5)
    reps = configs[keep]
    norms = norms[keep]

    # flip tables: X_n |a> lands on rep r with coefficient chi(h) sqrt(N_r / N_a)
    flipped = reps[:, None] ^ (np.uint64(1) << np.arange(L, dtype=np.uint64))[None, :]
    r, which = _representatives(flipped.ravel(), L, group)
    pos = np.searchsorted(reps, r)
    pos = np.minimum(pos, len(reps) - 1)
    found = reps[pos] == r
    chis = np.array([chi for _, _, chi in group])
    n_r = np.where(found, norms[pos], 0.0)
    coeff = np.where(found, chis[which] * np.sqrt(n_r / np.repeat(norms, L)), 0.0)
    index = np.where(found, pos, 0)
    return SpinSector(L, momentum, parity, reps, norms,
                      index.reshape(-1, L), coeff.reshape(-1, L))


def all_sectors(L: int, momenta: Optional[Sequence[int]] = None,
                parities: Sequence[int] = (1, -1)) -> list[SpinSector]:
    momenta = range(L) if momenta is None else momenta
    return [build_sector(L, m, p) for m in momenta for p in parities]


@dataclass(frozen=True, eq=False)
class EdState:
    sector: SpinSector
    amplitudes: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (self.sector.dim,):
            raise DomainError(f"amplitude vector of shape {a.shape} does not fit sector dim {self.sector.dim}")
        object.__setattr__(self, "amplitudes", a)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _amplitudes(state, sector: Optional[SpinSector]):
    if isinstance(state, EdState):
        if sector is not None and not state.sector.same_as(sector):
            raise DomainError(f"state lives in {state.sector.label}, operator built for {sector.label}")
        return state.sector, state.amplitudes
    if sector is None:
        raise DomainError("a bare vector needs its sector")
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (sector.dim,):
        raise DomainError(f"vector of shape {psi.shape} does not fit sector dim {sector.dim}")
    return sector, psi


def apply_x(sector: SpinSector, psi: np.ndarray) -> np.ndarray:
    """``sum_n X_n`` acting on sector amplitudes."""
    if sector.full:
        out = np.zeros_like(psi)
        idx = np.arange(sector.dim)
        for n in range(sector.L):
            out += psi[idx ^ (1 << n)]
        return out
    return np.einsum("an,an->a", sector._flip_coeff, psi[sector._flip_index])


def diagonal(sector: SpinSector, J2: float) -> np.ndarray:
    """Ising part ``-sum(Z Z + J2 Z Z')`` on the representatives."""
    nn, nnn = bond_sums(sector.reps, sector.L)
    return -(nn + J2 * nnn).astype(float)


class _Hamiltonian:
    def __init__(self, sector: SpinSector, g: float, J2: float):
        self.sector = sector
        self.g = float(g)
        self.diag = diagonal(sector, J2)

    def __call__(self, psi):
        out = self.diag * psi
        if self.g != 0.0:
            out -= self.g * apply_x(self.sector, psi)
        return out


def apply_hamiltonian(state, g: float, J2: float, sector: Optional[SpinSector] = None) -> np.ndarray:
    """Matrix-free ``H psi`` for an :class:`EdState` or a bare vector with its sector.

    Raises
    ------
    DomainError
        If ``state`` belongs to a different sector than ``sector``.
    """
    sector, psi = _amplitudes(state, sector)
    return _Hamiltonian(sector, g, J2)(psi)


def dense_hamiltonian(sector: SpinSector, g: float, J2: float) -> np.ndarray:
    """Dense sector matrix built column by column from :func:`apply_hamiltonian`."""
    h = _Hamiltonian(sector, g, J2)
    eye = np.eye(sector.dim, dtype=complex)
    return np.column_stack([h(eye[:, j]) for j in range(sector.dim)])


def to_full(state: EdState) -> np.ndarray:
    """Expand a sector state into the ``2^L`` configuration basis."""
    sector = state.sector
    if sector.full:
        return state.amplitudes.copy()
    out = np.zeros(1 << sector.L, dtype=complex)
    scale = state.amplitudes / np.sqrt(sector.norms)
    for l, s, chi in sector.group():
        np.add.at(out, _apply_group(sector.reps, l, s, sector.L).astype(np.int64), np.conj(chi) * scale)
    return out


def from_full(sector: SpinSector, vector, t: float = 0.0) -> EdState:
    """Project a ``2^L`` vector onto ``sector`` (no renormalization)."""
    v = np.asarray(vector, dtype=complex)
    if v.shape != (1 << sector.L,):
        raise DomainError("vector length must be 2^L")
    if sector.full:
        return EdState(sector, v.copy(), t)
    acc = np.zeros(sector.dim, dtype=complex)
    for l, s, chi in sector.group():
        acc += chi * v[_apply_group(sector.reps, l, s, sector.L).astype(np.int64)]
    return EdState(sector, acc / np.sqrt(sector.norms), t)


def product_state(sector: SpinSector, config: int) -> EdState:
    """Normalized projection of one configuration onto ``sector``."""
    full = np.zeros(1 << sector.L, dtype=complex)
    full[int(config)] = 1.0
    state = from_full(sector, full)
    if state.norm == 0:
        raise DomainError(f"configuration {config} has no weight in {sector.label}")
    return EdState(sector, state.amplitudes / state.norm)


# ---------------------------------------------------------------------------
# spectra


class SpectrumResult(NamedTuple):
    L: int
    g: float
    J2: float
    energies: np.ndarray
    sectors: list
    residuals: np.ndarray


def _sector_levels(sector: SpinSector, g: float, J2: float, m: int):
    h = _Hamiltonian(sector, g, J2)
    m = min(m, sector.dim)
    if g == 0.0:
        order = np.argsort(h.diag, kind="stable")[:m]
        vecs = np.zeros((sector.dim, m), dtype=complex)
        vecs[order, np.arange(m)] = 1.0
        return h.diag[order], vecs, h
    if sector.dim <= DENSE_LIMIT:
        vals, vecs = scipy.linalg.eigh(dense_hamiltonian(sector, g, J2), subset_by_index=(0, m - 1))
        return vals, vecs, h
    op = LinearOperator((sector.dim, sector.dim), matvec=h, dtype=complex)
    v0 = np.ones(sector.dim, dtype=complex) / math.sqrt(sector.dim)
    try:
        vals, vecs = eigsh(op, k=m, which="SA", tol=1e-13, v0=v0, ncv=max(2 * m + 1, 40))
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"eigsh did not converge in {sector.label}", residual=math.inf) from exc
    order = np.argsort(vals)
    return vals[order], vecs[:, order], h


def _residuals(h, vals, vecs):
    return np.array([np.linalg.norm(h(vecs[:, j]) - vals[j] * vecs[:, j]) for j in range(len(vals))])


def lowest_eigenpairs(L: int, g: float, J2: float = 1.0, m: int = 4,
                      sectors: Optional[Sequence[SpinSector]] = None,
                      return_vectors: bool = False):
    """Lowest ``m`` levels across symmetry sectors.

    Small sectors are diagonalized densely, larger ones with the implicitly
    restarted Lanczos solver on a matrix-free operator.  Every returned pair
    is checked against ``||H v - E v|| < 1e-10``.

    Returns
    -------
    SpectrumResult
        Energies ascending with the sector label of each level.  With
        ``return_vectors`` a list of :class:`EdState` follows.

    Raises
    ------
    ConvergenceError
        When an eigenpair misses the residual bound.
    """
    if not 1 <= m <= MAX_LEVELS:
        raise DomainError(f"m must be between 1 and {MAX_LEVELS}")
    if sectors is None:
        sectors = all_sectors(L)
    levels = []
    for sector in sectors:
        vals, vecs, h = _sector_levels(sector, g, J2, m)
        res = _residuals(h, vals, vecs)
        worst = float(res.max(initial=0.0))
        if worst > RESIDUAL_TOL:
            raise ConvergenceError(f"eigenpair residual {worst:.2e} in {sector.label}", residual=worst)
        for j in range(len(vals)):
            levels.append((float(vals[j]), sector, vecs[:, j], float(res[j])))
    levels.sort(key=lambda x: x[0])
    levels = levels[:m]
    result = SpectrumResult(
        int(L), float(g), float(J2),
        np.array([x[0] for x in levels]),
        [x[1].label for x in levels],
        np.array([x[3] for x in levels]),
    )
    if return_vectors:
        return result, [EdState(x[1], x[2]) for x in levels]
    return result


def ground_state(L: int, g: float, J2: float = 1.0, momentum: int = 0, parity: int = 1) -> EdState:
    """Lowest state of one sector, by default the symmetric ferromagnet."""
    sector = build_sector(L, momentum, parity)
    _, states = lowest_eigenpairs(L, g, J2, m=1, sectors=[sector], return_vectors=True)
    state = states[0]
    # fix the global phase so the largest amplitude is real positive
    j = int(np.argmax(np.abs(state.amplitudes)))
    phase = state.amplitudes[j] / abs(state.amplitudes[j])
    return EdState(sector, state.amplitudes / phase)


@dataclass(frozen=True)
class PairGapResult:
    L: tuple
    gaps: tuple
    splittings: tuple
    gap_extrapolated: float
    correlation_length: float
    fit_residual: float
    monotone: bool


def _exp_fit(Ls, gaps):
    """Fit ``gap_inf + c exp(-L / ell)``; linear in ``(gap_inf, c)``, scanned in ``ell``."""
    Ls = np.asarray(Ls, dtype=float)

    def solve(log_ell):
        basis = np.column_stack([np.ones_like(Ls), np.exp(-Ls / np.exp(log_ell))])
        coef, *_ = np.linalg.lstsq(basis, gaps, rcond=None)
        return coef, float(np.linalg.norm(basis @ coef - gaps))

    res = minimize_scalar(lambda x: solve(x)[1], bounds=(math.log(0.1), math.log(100.0)),
                          method="bounded", options={"xatol": 1e-10})
    coef, resid = solve(res.x)
    return float(coef[0]), float(math.exp(res.x)), resid


def pair_gap_ed(g: float, J2: float = 1.0, L_list: Sequence[int] = (8, 10, 12, 14),
                splitting_threshold: float = 1e-3, tol: float = 1e-9) -> PairGapResult:
    """Pair gap per size and its infinite-ring extrapolation.

    Per ``L`` the gap is ``E2 - E0`` when the ground doublet is split by less
    than ``splitting_threshold`` and ``E1 - E0`` otherwise.

    Warns when the gaps are not monotone in ``L`` beyond ``tol``; the value at
    the largest ``L`` is then reported as the extrapolation.
    """
    L_list = tuple(int(L) for L in L_list)
    if len(L_list) < 3 or list(L_list) != sorted(set(L_list)):
        raise DomainError("L_list must hold at least three ascending sizes")
    gaps, splits = [], []
    for L in L_list:
        e = lowest_eigenpairs(L, g, J2, m=3).energies
        split = e[1] - e[0]
        splits.append(float(split))
        gaps.append(float(e[2] - e[0] if split < splitting_threshold else split))
    gaps_arr = np.array(gaps)
    diffs = np.diff(gaps_arr)
    if np.ptp(gaps_arr) <= tol:
        return PairGapResult(L_list, tuple(gaps), tuple(splits), float(gaps_arr.mean()),
                             math.inf, 0.0, True)
    monotone = bool(np.all(diffs >= -tol) or np.all(diffs <= tol))
    if not monotone:
        warnings.warn(f"pair gap is not monotone in L at g={g}; reporting L={L_list[-1]}", stacklevel=2)
        return PairGapResult(L_list, tuple(gaps), tuple(splits), gaps[-1], math.nan, math.nan, False)
    gap_inf, ell, resid = _exp_fit(L_list, gaps_arr)
    return PairGapResult(L_list, tuple(gaps), tuple(splits), gap_inf, ell, resid, True)


# ---------------------------------------------------------------------------
# time evolution


def krylov_expm(matvec: Callable, v: np.ndarray, tau: complex, m_max: int = KRYLOV_MAX_DIM,
                tol: float = 1e-13) -> np.ndarray:
    """``exp(tau A) v`` for Hermitian ``A`` by Lanczos with full reorthogonalization.

    The step is subdivided until the Krylov error estimate
    ``|beta_m [exp(tau T_m)]_{m-1, 0}|`` falls below ``tol``.
    """
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return v.copy()
    n = len(v)
    m_max = min(m_max, n)
    basis = np.empty((m_max + 1, n), dtype=complex)
    basis[0] = v / beta0
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    m = m_max
    for j in range(m_max):
        w = matvec(basis[j])
        alpha[j] = np.vdot(basis[j], w).real
        w = w - basis[:j + 1].T @ (basis[:j + 1].conj() @ w)
        w = w - basis[:j + 1].T @ (basis[:j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-14 * max(1.0, abs(alpha[j])):
            m = j + 1
            break
        basis[j + 1] = w / beta[j]
        # test convergence once the subspace is moderately sized
        if j >= 4:
            t = np.diag(alpha[:j + 1]) + np.diag(beta[:j], 1) + np.diag(beta[:j], -1)
            e = scipy.linalg.expm(tau * t)
            if abs(beta[j] * e[j, 0]) < tol:
                m = j + 1
                break
    else:
        t = np.diag(alpha) + np.diag(beta[:-1], 1) + np.diag(beta[:-1], -1)
        e = scipy.linalg.expm(tau * t)
        if abs(beta[-1] * e[-1, 0]) >= tol:
            half = krylov_expm(matvec, v, tau / 2, m_max, tol)
            return krylov_expm(matvec, half, tau / 2, m_max, tol)
    t = np.diag(alpha[:m]) + np.diag(beta[:m - 1], 1) + np.diag(beta[:m - 1], -1)
    e = scipy.linalg.expm(tau * t)
    return beta0 * (basis[:m].T @ e[:, 0])


def _cfm4_step(sector, diag, psi, g1, g2, h):
    """Fourth-order commutator-free step for ``H(t) = D - g(t) X``."""

    def exp_action(c, phi):
        # exp(-i h (D/2 - c X))
        def op(x):
            out = 0.5 * diag * x
            if c != 0.0:
                out -= c * apply_x(sector, x)
            return out
        return krylov_expm(op, phi, -1j * h)

    if g1 == g2:
        def full(x):
            out = diag * x
            if g1 != 0.0:
                out -= g1 * apply_x(sector, x)
            return out
        return krylov_expm(full, psi, -1j * h)
    psi = exp_action(_CFM_A2 * g1 + _CFM_A1 * g2, psi)
    return exp_action(_CFM_A1 * g1 + _CFM_A2 * g2, psi)


def _evolve_grid(state, protocol, J2, times, dt):
    sector = state.sector
    diag = diagonal(sector, J2)
    psi = state.amplitudes.copy()
    out = [psi.copy()]
    breaks = [b for b in protocol.breakpoints]
    for i in range(1, len(times)):
        a, b = times[i - 1], times[i]
        knots = [a] + [c for c in breaks if a < c < b] + [b]
        for t0, t1 in zip(knots[:-1], knots[1:]):
            n = max(1, math.ceil((t1 - t0) / dt - 1e-9))
            h = (t1 - t0) / n
            for j in range(n):
                tj = t0 + j * h
                g1 = protocol.value(tj + (0.5 - _GAUSS) * h)
                g2 = protocol.value(tj + (0.5 + _GAUSS) * h)
                psi = _cfm4_step(sector, diag, psi, g1, g2, h)
        if not np.all(np.isfinite(psi)):
            raise IntegrationError(f"ED state became non-finite at t={b}")
        out.append(psi.copy())
    return out


def evolve_ed(state: EdState, protocol: RampProtocol, J2: float, t_end: float,
              dt: float = 0.01, sample_dt: Optional[float] = None,
              check: bool = False, tol: float = 1e-8, max_halvings: int = 3) -> list[EdState]:
    """Real-time evolution under ``H(t)`` with field ``protocol(t)``.

    Each step of size ``<= dt`` is a fourth-order commutator-free exponential
    pair evaluated by Krylov projection; steps never straddle protocol
    breakpoints.  ``check`` halves ``dt`` until ``<X>(t_end)`` moves by less
    than ``tol``.

    Returns
    -------
    list of EdState
        States at ``state.t + j * sample_dt`` up to ``t_end``.
    """
    if not 0 < dt <= MAX_STEP:
        raise DomainError(f"dt must lie in (0, {MAX_STEP}]")
    if t_end <= state.t:
        raise DomainError("t_end must follow the state's time")
    if sample_dt is None:
        sample_dt = dt
    n = int(round((t_end - state.t) / sample_dt))
    times = state.t + sample_dt * np.arange(n + 1)
    times[-1] = t_end
    amps = _evolve_grid(state, protocol, J2, times, dt)
    if check:
        sx = _sx(state.sector, amps[-1])
        for _ in range(max_halvings):
            dt /= 2
            finer = _evolve_grid(state, protocol, J2, times, dt)
            change = abs(_sx(state.sector, finer[-1]) - sx)
            amps, sx = finer, _sx(state.sector, finer[-1])
            if change < tol:
                break
        else:
            raise IntegrationError(f"ED evolution not converged under dt halving (change {change:.2e})")
    return [EdState(state.sector, a, float(t)) for a, t in zip(amps, times)]


# ---------------------------------------------------------------------------
# observables


class Measurement(NamedTuple):
    sx: float
    zz_nn: float
    zz_nnn: float
    energy: float


def _sx(sector, psi):
    return float(np.vdot(psi, apply_x(sector, psi)).real) / sector.L


def measure(state: EdState, g: float = 0.0, J2: float = 1.0) -> Measurement:
    """Translation-averaged ``<X_n>``, ``<Z_n Z_{n+1}>``, ``<Z_n Z_{n+2}>`` and ``<H>``."""
    sector, psi = state.sector, state.amplitudes
    prob = np.abs(psi) ** 2
    nn, nnn = bond_sums(sector.reps, sector.L)
    sx = _sx(sector, psi)
    zz_nn = float(prob @ nn) / sector.L
    zz_nnn = float(prob @ nnn) / sector.L
    energy = -sector.L * (g * sx + zz_nn + J2 * zz_nnn)
    return Measurement(sx, zz_nn, zz_nnn, energy)


def kink_bits(configs, L: int) -> np.ndarray:
    """Kink occupations, column ``j`` for the bond between sites ``j`` and ``j+1``."""
    c = np.asarray(configs, dtype=np.uint64)
    k = c ^ _rotate(c, L - 1, L)
    return ((k[:, None] >> np.arange(L, dtype=np.uint64)) & np.uint64(1)).astype(bool)


def train_table(sector: SpinSector, max_len: int) -> np.ndarray:
    """Per-representative density of exact-length kink trains, shape ``(dim, max_len)``."""
    L = sector.L
    kinks = kink_bits(sector.reps, L)
    out = np.zeros((sector.dim, max_len))
    for n in range(1, max_len + 1):
        count = np.zeros(sector.dim)
        for j in range(L):
            ok = ~kinks[:, (j - 1) % L] & ~kinks[:, (j + n) % L]
            for q in range(n):
                ok &= kinks[:, (j + q) % L]
            count += ok
        out[:, n - 1] = count / L
    return out


def train_densities(state: EdState, max_len: int = 4) -> np.ndarray:
    """Density of kink trains of exact length ``1..max_len`` per bond."""
    if not 1 <= max_len <= 6:
        raise DomainError("max_len must lie in 1..6")
    return np.abs(state.amplitudes) ** 2 @ train_table(state.sector, max_len)


def parity_expectation(state: EdState) -> float:
    """``<prod X>``."""
    if state.sector.parity is not None:
        return float(state.sector.parity) * state.norm ** 2
    full = to_full(state)
    flipped = full[np.arange(len(full)) ^ ((1 << state.sector.L) - 1)]
    return float(np.vdot(full, flipped).real)
