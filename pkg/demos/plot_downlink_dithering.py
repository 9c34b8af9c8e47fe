"""
Downlink one-bit DACs and non-radiating dither
==============================================

Without dither, a one-bit transmitter sends nearly the same sign pattern
on neighbouring antennas, so its distortion radiates. Adding noise in the
near-null space of the coupling matrix decorrelates the quantization
errors without radiating power.
"""

import numpy as np

from densemimo import (
    ArrayGeometry,
    DownlinkConfig,
    coupling_matrix_closed_form,
    dither_power_rule,
    downlink_rate_report,
    null_space_leakage,
    null_space_projector,
    rayleigh_channels,
)

M, eps, nf = 400, 4.0, 2.0
B = coupling_matrix_closed_form(ArrayGeometry.fixed_aperture(2.5, M))
U = null_space_projector(B, 0.01)
print("fraction of dither power that radiates:", null_space_leakage(B, U))

a = B.geom.spacing_over_lambda
cfg_plain = DownlinkConfig(eps, nf)
cfg_dither = DownlinkConfig(eps, nf, dither_power_rule(eps, a), 0.01)
print(f"dither power {cfg_dither.dither_power:.1f} vs signal power {eps}")

plain, dithered, ideal = [], [], []
for seed in range(20):
    H = rayleigh_channels(B, 2, seed=seed).H.conj().T  # K x M downlink channel
    p = downlink_rate_report(H, B, cfg_plain)
    d = downlink_rate_report(H, B, cfg_dither, U=U)
    ideal.append(p.ideal)
    plain.append(p.one_bit_exact.mean())
    dithered.append(d.one_bit_exact.mean())

print(f"ideal rate          {np.mean(ideal):.3f}")
print(f"one-bit, no dither  {np.mean(plain):.3f}")
print(f"one-bit, dithered   {np.mean(dithered):.3f}")

# Most of the excitation power of the one-bit transmitter is reactive: it
# circulates in the array instead of radiating.
print("radiated / excitation power (one-bit, dithered):", d.one_bit_power_ratio)
