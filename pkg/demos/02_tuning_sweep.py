"""
Tuning the optical spring
=========================

Move the spring resonance by changing the detuning at fixed circulating power
and watch the sub-SQL dip follow it.
"""

import numpy as np

from optomech import presets
from optomech.budget import UnreachableTargetError, detuning_for_os_frequency, sweep_detunings

osc = presets.oscillator()
template = presets.cavity()
grid = presets.grid(2000)

# %%
# K_OS is largest at delta = -1, which caps the reachable spring frequency.
# Beyond it, a target asks for more stiffness than the light can give.
try:
    detuning_for_os_frequency(2 * np.pi * 100e3, template, osc)
except UnreachableTargetError as exc:
    print("100 kHz:", exc)

# %%
# Each reachable target has two detunings.  The far branch (|delta| >= 1)
# is where back-action beats the SQL; the near branch tends to delta -> 0.
for f in (20e3, 67.8e3):
    far = detuning_for_os_frequency(2 * np.pi * f, template, osc, branch="far")
    near = detuning_for_os_frequency(2 * np.pi * f, template, osc, branch="near")
    print(f"{f / 1e3:5.1f} kHz: far delta = {far:7.3f}, near delta = {near:7.4f}")

# %%
# Sweep the range.  Near the two ends the curve only touches the SQL; in the
# middle it dips below it.
targets_hz = np.array([41.3e3, 53.6e3, 60e3, 67.8e3, 75e3, 84e3, 91.4e3])
reports = sweep_detunings(2 * np.pi * targets_hz, template, osc, grid,
                          **presets.budget_options())
print(f"\n{'f_OS kHz':>9} {'delta':>8} {'min dB':>8}  band")
for f, r in zip(targets_hz, reports):
    b = r.band
    span = f"{b.f_lo / 1e3:.1f}-{b.f_hi / 1e3:.1f} kHz" if b else "none"
    print(f"{f / 1e3:9.1f} {r.cavity.detuning:8.3f} {r.min_ratio_db:8.2f}  {span}")
