"""How mollifier nets scale with the homogeneous dimension.

psi_eps(x) = omega^{-Q} psi(D_{1/omega} x) keeps unit mass while its peak
grows like omega^{-Q}.  On the line Q = 1; on the Heisenberg group the
anisotropic dilations (weights 1, 1, 2) give Q = 4, so the same shrinking
net concentrates much faster.
"""

import numpy as np

from gradedheat import (
    Mollifier,
    OmegaSchedule,
    euclidean,
    heisenberg1,
    make_grid,
    mollifier_net,
    omega,
)
from gradedheat.harness import fit_exponent
from gradedheat.mollify import discrete_integral

POLY = OmegaSchedule.polynomial()
LOG2 = OmegaSchedule.logarithmic(2)


def table(grid, dim, label):
    psi = Mollifier(dim, 1.0)
    print(f"--- {label} ---")
    print(f"  {'eps':>8} {'omega':>8} {'mass':>10} {'peak':>12}")
    pairs = []
    for k in range(5):
        eps = 2.0**-k
        net = mollifier_net(psi, eps, POLY, grid)
        peak = float(np.abs(net.values).max())
        pairs.append((eps, peak))
        print(f"  {eps:>8.4f} {omega(POLY, eps):>8.4f} "
              f"{discrete_integral(net):>10.6f} {peak:>12.4f}")
    fit = fit_exponent(pairs)
    print(f"  fitted peak exponent: {fit.exponent:.4f}")
    print()


if __name__ == "__main__":
    table(make_grid(euclidean(1), 1.0, 512), 1, "line (Q = 1)")
    table(make_grid(heisenberg1(), 1.0, (96, 96, 1536)), 3, "Heisenberg (Q = 4)")

    # the logarithmic schedule concentrates far more slowly: good for nets
    # that must stay moderate under severe singularities
    print("log-schedule omegas for the same eps values:")
    for k in range(1, 5):
        eps = 2.0**-k
        print(f"  eps = {eps:<8.4f} omega_poly = {eps:<8.4f} "
              f"omega_log2 = {omega(LOG2, eps):.4f}")
