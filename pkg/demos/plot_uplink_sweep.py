"""
Uplink with one-bit ADCs at fixed aperture
==========================================

Pack more and more antennas into the same 2.5-wavelength aperture. The
ideal receiver barely gains, but the one-bit receiver gains a lot, because
denser sampling averages out the quantization error.
"""

import numpy as np

from densemimo import SweepConfig, run_uplink_sweep, uplink_asymptotic_loss

cfg = SweepConfig(realizations=30, seed=1)
rows = run_uplink_sweep(cfg)

print(f"{'M':>4} {'a/lambda':>9} {'variant':>14} {'rate':>7}")
for r in rows:
    print(f"{r.M:4d} {r.a_over_lambda:9.3f} {r.variant:>14} {r.mean_rate:7.3f}")

# In the infinitely dense limit, one-bit conversion costs only a constant
# SNR factor that depends on the receiver noise figure.
for nf in (1.0, 2.0, 10.0, np.inf):
    print(f"N_F={nf}: asymptotic SNR loss factor {uplink_asymptotic_loss(nf):.4f}")

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots()
    for variant in ("ideal", "onebit_exact", "onebit_uqn"):
        sel = [r for r in rows if r.variant == variant]
        ax.errorbar([r.M for r in sel], [r.mean_rate for r in sel],
                    yerr=[r.stderr for r in sel], marker="o", label=variant)
    ax.set_xscale("log")
    ax.set_xlabel("number of antennas M")
    ax.set_ylabel("rate per user [bit/s/Hz]")
    ax.legend()
    fig.savefig("uplink_sweep.png", dpi=120)
