"""Damped, driven two-level atom: master-equation basics.

The atom state is four numbers (n, x, y, z); the master equation is a 4x4
linear system on them. This script integrates a few drives from the ground
state and checks the analytic steady state and emission flux.
"""

from rabitrace import GROUND, SystemParams, evolve_me, steady_state, steady_state_flux

for omega in (0.5, 2.0, 4.0):
    params = SystemParams(omega)
    times, states = evolve_me(GROUND, params, dt_step=1e-4, duration=30.0, store_every=1000)
    ss = steady_state(params)
    print(f"omega = {omega:4.1f}: z(30) = {states[-1, 3]:+.6f}   "
          f"steady z = {ss.z:+.6f}   flux = {steady_state_flux(params):.6f}")

# Rabi oscillations are visible in z(t) before damping wins
params = SystemParams(4.0)
times, states = evolve_me(GROUND, params, dt_step=1e-4, duration=3.0, store_every=500)
print("\nearly z(t) at omega = 4 (oscillating toward steady state):")
for t, row in zip(times[::2], states[::2]):
    bar = "#" * int(30 * (row[3] + 1) / 2)
    print(f"  t = {t:4.2f}  z = {row[3]:+.3f}  |{bar}")

# the flux saturates at gamma/2 for strong driving
print("\nflux saturation:", [round(steady_state_flux(SystemParams(om)), 4)
                             for om in (1, 5, 20, 100)])
