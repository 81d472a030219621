"""Free spreading of a single slit packet.

A Gaussian packet of half-width sigma0 leaves its slit and spreads: the
complex width grows as sigma0*(1 + i*tau) with tau = hbar*t/(2*m*sigma0^2),
so the density stays Gaussian with standard deviation sigma0*sqrt(1 + tau^2).
The same factor sqrt(1 + tau^2) scales every guidance trajectory of a
centered packet, which is why it shows up again and again in the two-particle
experiments.
"""

import numpy as np

import twinslit as ts

cfg = ts.PhysicalConfig(slit_offset=0.0)  # one slit on the axis

print("tau      |sigma_t|   measured density std")
for tau in (0.0, 0.5, 1.0, 2.0, 4.0):
    t = cfg.time_at_tau(tau)
    grid = np.linspace(-30, 30, 4001)
    dens = np.abs(ts.evaluate_packet(cfg, +1, grid, t)) ** 2
    dens /= np.trapezoid(dens, grid)
    std = np.sqrt(np.trapezoid(grid**2 * dens, grid))
    print(f"{tau:4.1f}   {abs(ts.sigma_t(cfg, t)):8.4f}   {std:8.4f}"
          f"   (law: {np.sqrt(1 + tau**2):.4f})")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    grid = np.linspace(-12, 12, 1201)
    fig, ax = plt.subplots(figsize=(7, 4))
    for tau in (0.0, 1.0, 2.0, 4.0):
        t = cfg.time_at_tau(tau)
        dens = np.abs(ts.evaluate_packet(cfg, +1, grid, t)) ** 2
        ax.plot(grid, dens, label=f"tau = {tau:g}")
    ax.set_xlabel("y / sigma0")
    ax.set_ylabel("|packet|^2")
    ax.legend()
    fig.tight_layout()
    fig.savefig("demos/output/01_packet_spreading.png", dpi=120)
    print("wrote demos/output/01_packet_spreading.png")
except ImportError:
    print("matplotlib not available; skipped the figure")
