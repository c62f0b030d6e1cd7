"""Weak resonant field modulation of the J2 = 1 chain: ED against the pair oscillator.

A 12-site ring at g = 0.25 is driven with 0.005 sin(8 t) for one cycle of
length 2 pi, then left alone.  The transverse magnetization keeps ringing at
the pair gap, and its amplitude follows the driven-oscillator solution.
"""
import math

import numpy as np

from isingkz import RampProtocol, analysis, ed, pairmodel

L, g, amplitude, duration, t_end = 12, 0.25, 0.005, 2 * math.pi, 2 * math.pi + 40.0
drive = RampProtocol.drive(g, amplitude, 8.0, duration, t_end)

gs = ed.ground_state(L, g)
ref = ed.measure(gs, g).sx
traj = ed.evolve_ed(gs, drive, 1.0, t_end, dt=0.01, sample_dt=0.05)
x_ed = analysis.Signal(0.0, 0.05, np.array([ed.measure(s, g).sx for s in traj]) - ref)
x_osc = pairmodel.driven_response(g, drive, t_end, sample_dt=0.05).signal

omega = pairmodel.pair_gap(g)
fit_ed = analysis.fit_damped_sinusoid(x_ed.window(duration + 0.5), omega)
fit_osc = analysis.fit_damped_sinusoid(x_osc.window(duration + 0.5), omega)
print(f"pair gap 8 - 3g^2/4     {omega:.5f}")
print(f"ED ringing frequency    {fit_ed.frequency:.5f}")
print(f"ED amplitude            {fit_ed.amplitude:.5f}")
print(f"oscillator amplitude    {fit_osc.amplitude:.5f}")
print(f"Q (ED, finite ring)     {fit_ed.q}")
