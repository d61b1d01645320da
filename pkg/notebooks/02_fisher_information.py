"""
Fisher information and its oracle
=================================

The analytic FIM of [Re alpha, Im alpha, nu] is compared with a brute-force
Slepian-Bangs matrix built from finite differences of the mean A(nu) alpha.
"""

import numpy as np

from irs_crlb import ChannelSet, RadarParams, TargetParams, crlb, fim_blocks
from irs_crlb.fisher import assemble_full_fim, fim_from_h, fim_oracle, no_irs_fim, scene_mean_fn

rng = np.random.default_rng(1)
radar = RadarParams(16)
channels = ChannelSet(0.8, [1.5 * np.exp(0.4j), 0.9 * np.exp(-1.1j)])
target = TargetParams([1.0 + 0.5j, 0.7j, -0.4], [-0.3, 0.05, 0.35])

full = assemble_full_fim(fim_blocks(radar, channels, target, 0.5))
oracle = fim_oracle(scene_mean_fn(radar, channels), 0.5, target.zeta)
print("FIM size", full.shape, "max |analytic - oracle| =", np.abs(full - oracle).max())

# with white noise the blocks can be written through h alone
alt = fim_from_h(channels, radar, target.alpha, target.nu, 0.5)
print("channel form, reflectivity block error:", np.abs(alt.f_aa - full[:6, :6]).max())

# the bound, and the cheaper block-diagonal surrogate used for design
res = crlb(full)
print(f"trace CRLB {res.trace_total:.4f}, surrogate {res.surrogate:.4f}")

# a target seen only on the direct path
f_aa0, f_nn0 = no_irs_fim(RadarParams(8), 1.0, 1.0, 0.1, 1.0)
print("LoS only: f_aa0 =", np.diag(f_aa0), "f_nn0 =", f_nn0)

# central differences converge at second order
for step in (1e-2, 5e-3, 2.5e-3):
    err = np.abs(fim_oracle(scene_mean_fn(radar, channels), 0.5, target.zeta, step=step) - full).max()
    print(f"step {step:.1e}: oracle error {err:.3e}")
