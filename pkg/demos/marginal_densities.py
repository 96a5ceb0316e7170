"""The four one-point laws at time one and at an exponential time.

Prints a small table and the two features that set this process apart from
Brownian motion: the wedge-shaped dip of the position density at 0 and the
cubic-exponential tails.
"""
import numpy as np

from tsrm import marginals

x = np.array([0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0])
print("   x     nu1(x)    nu1_hat(x)   nu2(x)    nu2_hat(x)")
for xi, a, b, c, d in zip(x, marginals.nu1(x), marginals.nu1_hat(x), marginals.nu2(x), marginals.nu2_hat(x)):
    print(f"{xi:5.2f}  {a:.6f}   {b:.6f}    {c:.6f}  {d:.6f}")

eps = 1e-3
slope = (marginals.nu1(eps) - marginals.nu1(0.0)) / eps
print(f"\nposition density at 0: {marginals.nu1(0.0):.6f}, right slope {slope:+.4f}, left slope {-slope:+.4f}")
grid = np.linspace(0, 4, 4001)
print(f"its maximum sits at |x| = {grid[np.argmax(marginals.nu1(grid))]:.3f}")

print(f"\nE[H(1)] = {marginals.moment_H(1):.10f}   E|X(1)| = {marginals.moment_absX(1):.10f}")
for kind in ("height", "position"):
    r = marginals.tail_report(kind)
    print(f"{kind:8s} tail: -log P(> a) / a^3 fitted {r.fitted_slope:.5f}, limit {r.constant:.5f}")
