"""Independent reference implementations used to check the package.

Each oracle takes a different numerical route from the code under test:
dense Kronecker-product Hamiltonians, adaptive Runge-Kutta for the BdG
equations, adaptive quadrature plus a Newton-type root finder for the BCS
fixed point, and brute-force enumeration for symmetry orbits and kink trains.

Run ``python tests/oracles.py`` to regenerate ``tests/data/oracle_values.json``.
"""
from __future__ import annotations

import itertools
import json
import math
from functools import reduce
from pathlib import Path

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import root

FROZEN = Path(__file__).parent / "data" / "oracle_values.json"

_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.diag([1.0, -1.0])
_I = np.eye(2)


# -- spin chains -------------------------------------------------------------


def site_operator(op, n, L):
    """``op`` on site ``n`` of ``L``; site 0 is the least significant bit."""
    return reduce(np.kron, [op if j == n else _I for j in reversed(range(L))])


def kron_hamiltonian(L, g, J2):
    h = np.zeros((2 ** L, 2 ** L))
    for n in range(L):
        h -= g * site_operator(_X, n, L)
        h -= site_operator(_Z, n, L) @ site_operator(_Z, (n + 1) % L, L)
        h -= J2 * site_operator(_Z, n, L) @ site_operator(_Z, (n + 2) % L, L)
    return h


def orbit_count(L, momentum, parity):
    """Number of basis states in a sector by explicit orbit enumeration."""
    def translate(bits, l):
        return tuple(bits[(j - l) % L] for j in range(L))

    seen = set()
    count = 0
    for bits in itertools.product((0, 1), repeat=L):
        if bits in seen:
            continue
        orbit = []
        for l in range(L):
            for s in (0, 1):
                img = translate(bits, l)
                if s:
                    img = tuple(1 - b for b in img)
                orbit.append((l, s, img))
        seen.update(img for _, _, img in orbit)
        # the projected state survives unless the characters cancel on the stabilizer
        total = 0j
        for l, s, img in orbit:
            if img == bits:
                total += np.exp(2j * np.pi * momentum * l / L) * (parity ** s)
        if abs(total) > 1e-9:
            count += 1
    return count


def classical_train_spectrum(L, J2=1.0):
    """Energies at g = 0 from kink-train bookkeeping.

    Each kink costs 2 on its NN bond and each train end breaks one NNN bond
    (cost ``2 J2``), so an open train of ``n`` kinks costs ``2 n + 4 J2``; a
    train wrapping the whole ring has no ends and costs ``2 L``.
    """
    base = -L * (1 + J2)
    energies = []
    for bits in itertools.product((0, 1), repeat=L):
        kinks = [bits[j] != bits[(j + 1) % L] for j in range(L)]
        if all(kinks):
            energies.append(base + 2 * L)
            continue
        if not any(kinks):
            energies.append(base)
            continue
        start = kinks.index(False)
        rolled = kinks[start:] + kinks[:start]
        trains = [len(list(grp)) for key, grp in itertools.groupby(rolled) if key]
        energies.append(base + sum(2 * n + 4 * J2 for n in trains))
    return np.sort(np.array(energies, dtype=float))


def free_fermion_energy(L, g):
    """Ground energy per site of the NN chain from the antiperiodic sum."""
    m = np.arange(1, L // 2 + 1)
    k = (2 * m - 1) * np.pi / L
    eps = 2 * np.sqrt((g - np.cos(k)) ** 2 + np.sin(k) ** 2)
    return -np.sum(eps) / L


# -- integrable chain ----------------------------------------------------------


def infinite_ground_observables(g):
    """``(sx, zz, e0)`` per site of the infinite NN chain by adaptive quadrature."""
    root_term = lambda k: math.sqrt(1 + g * g - 2 * g * math.cos(k))
    e0 = -quad(root_term, 0, math.pi, epsabs=1e-14, epsrel=1e-13, limit=200)[0] / math.pi
    if g == 0:
        sx = 0.0
    else:
        sx = quad(lambda k: (g - math.cos(k)) / root_term(k), 0, math.pi,
                  epsabs=1e-14, epsrel=1e-13, limit=200, points=[0.0] if g == 1 else None)[0] / math.pi
    zz = -e0 - g * sx
    return sx, zz, e0


def bdg_final_probability(tau_q, k, g_start=None):
    """Excitation probability of one mode after a linear ramp to g = 0.

    The ramp is ``g(t) = -t / tau_q``; the mode starts in the positive
    frequency eigenvector at ``g_start`` and is integrated with DOP853.
    """
    if g_start is None:
        g_start = max(5.0, 1.0 + 10.0 / math.sqrt(tau_q))

    def matrix(g):
        a = 2 * (g - math.cos(k))
        b = 2 * math.sin(k)
        return np.array([[a, b], [b, -a]])

    def pos_vector(g):
        w, v = np.linalg.eigh(matrix(g))
        vec = v[:, 1]
        return vec if vec[0] >= 0 else -vec

    def rhs(t, y):
        return -1j * matrix(-t / tau_q) @ y

    sol = solve_ivp(rhs, (-g_start * tau_q, 0.0), pos_vector(g_start).astype(complex),
                    method="DOP853", rtol=1e-12, atol=1e-13)
    w, v = np.linalg.eigh(matrix(0.0))
    neg = v[:, 0]
    return float(abs(np.vdot(neg, sol.y[:, -1])) ** 2)


def lz_density_quadrature(tau_q):
    """``int_0^pi dk/pi exp(-2 pi tau_q k^2)``."""
    return quad(lambda k: math.exp(-2 * math.pi * tau_q * k * k), 0, math.pi, epsabs=1e-15)[0] / math.pi


def oscillation_formula(tau_q, t):
    """Closed-form dephasing quantities written out from scratch."""
    tp = t + tau_q
    f = 3 / (4 * math.pi) * (0.5772156649015329 - 2 * tp / tau_q + math.log(4 * tp * tp / tau_q))
    d = (1 + f * f) ** (-0.75)
    phi = math.pi / 4 + 2 * tp * tp / tau_q + 1.5 * math.atan(f)
    rho = 1 / (2 * math.pi * math.sqrt(2 * tau_q))
    osc = rho * rho * d * (57 * math.sqrt(6 * math.pi) / 80) * math.cos(phi)
    return {"f": f, "d": d, "phi": phi, "delta_x": 2 * rho + osc}


# -- BCS -------------------------------------------------------------------------


def bcs_fixed_point(g, guess):
    """Solve the three self-consistency integrals with adaptive quadrature and MINPACK."""

    def pairs(x, k):
        rho, delta, tf = x
        h = 2 * (3 - 4 * rho) - 2 * (g - 4 * tf) * math.cos(k)
        dk = -2 * (g + 4 * delta) * math.sin(k)
        w = math.hypot(h, dk)
        # v^2 = (1 - h/w)/2, u v = dk / (2 w)
        return (1 - h / w) / 2, dk / (2 * w)

    def mapped(x):
        # integrands are even in k, so integrate over [0, pi] and divide by pi
        v2 = quad(lambda k: pairs(x, k)[0], 0, math.pi, epsabs=1e-14, limit=200)[0] / math.pi
        uv = quad(lambda k: pairs(x, k)[1] * math.sin(k), 0, math.pi, epsabs=1e-14, limit=200)[0] / math.pi
        v2c = quad(lambda k: pairs(x, k)[0] * math.cos(k), 0, math.pi, epsabs=1e-14, limit=200)[0] / math.pi
        return np.array([v2, -uv, v2c])

    sol = root(lambda x: mapped(x) - x, guess, method="hybr", tol=1e-14)
    rho, delta, tf = sol.x
    if delta < 0:
        delta = -delta
    e0 = -2 + 6 * rho - 2 * g * (tf + delta) - 4 * (rho ** 2 + delta ** 2 - tf ** 2)
    return {"rho": rho, "delta": delta, "t_f": tf, "e0": e0,
            "residual": float(np.max(np.abs(mapped(sol.x) - sol.x)))}


# -- driven oscillator -------------------------------------------------------------


def oscillator_reference(g_shift_amp, omega_drive, omega, duration, t_eval):
    """``x'' + omega^2 x = -2 omega A sin(omega_d t)`` on the drive window, free afterwards."""
    def rhs(t, y):
        dg = g_shift_amp * math.sin(omega_drive * t) if t <= duration else 0.0
        return [y[1], -omega * omega * y[0] - 2 * omega * dg]

    inside = t_eval[t_eval <= duration]
    s1 = solve_ivp(rhs, (0, duration), [0.0, 0.0], method="DOP853", rtol=1e-12, atol=1e-14,
                   t_eval=inside, dense_output=True)
    y_end = s1.sol(duration)
    after = t_eval[t_eval > duration]
    out = list(s1.y[0])
    if after.size:
        s2 = solve_ivp(rhs, (duration, after[-1]), y_end, method="DOP853", rtol=1e-12, atol=1e-14,
                       t_eval=after)
        out += list(s2.y[0])
    return np.array(out)


# -- freezing ------------------------------------------------------------------------


def compute_frozen():
    values = {}
    values["bdg_probability"] = {
        f"{tau}:{k}": bdg_final_probability(tau, k)
        for tau in (8.0, 32.0) for k in (0.02, 0.05, 0.1, 0.2)
    }
    values["lz_density_quadrature"] = {str(t): lz_density_quadrature(t) for t in (8.0, 32.0, 128.0)}
    values["infinite_ground"] = {str(g): dict(zip(("sx", "zz", "e0"), infinite_ground_observables(g)))
                                 for g in (0.0, 0.5, 1.5, 3.0)}
    values["oscillation_tau8_t0"] = oscillation_formula(8.0, 0.0)
    values["bcs"] = {
        "0.4": bcs_fixed_point(0.4, [0.005, 0.05, 0.0]),
        "1.0": bcs_fixed_point(1.0, [0.03, 0.12, 0.0]),
        "2.0": bcs_fixed_point(2.0, [0.13, 0.22, 0.05]),
    }
    values["orbit_counts"] = {f"{L}:{m}:{p}": orbit_count(L, m, p)
                              for L in (4, 6, 8) for m in range(L) for p in (1, -1)}
    return values


if __name__ == "__main__":
    FROZEN.parent.mkdir(exist_ok=True)
    FROZEN.write_text(json.dumps(compute_frozen(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {FROZEN}")
