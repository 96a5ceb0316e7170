"""Joint law of position and height from a parabolic PDE.

phi(x, h) solves d_x phi = 1/2 d_h^2 phi - h phi with phi(0, .) = u and a
reflecting wall at h = 0.  Integrating u * phi over either variable must give
back the closed-form marginals; the Laplace transform in x must match the
Green's-function formula.
"""
import time

import numpy as np

from tsrm import marginals, pde, transforms

t0 = time.perf_counter()
f = pde.solve_phi()
print(f"solved on {f.values.shape[0]} x {f.values.shape[1]} nodes in {time.perf_counter() - t0:.2f}s")

H = pde.pde_height_marginal(f)
for h in (0.0, 0.5, 1.0, 2.0):
    j = int(round(h / f.dh))
    print(f"height h={h:3.1f}: PDE {H[j]:.6f}  closed form {marginals.nu2_hat(h):.6f}")
P = pde.pde_position_marginal(f)
for x in (0.25, 0.5, 1.0, 2.0):
    i = int(round(x / f.dx))
    print(f"position x={x:4.2f}: PDE {P[i]:.6f}  closed form {marginals.nu1_hat(x):.6f}")

print(f"total mass {pde.pde_total_mass(f):.6f}")
for h in (0.0, 1.0):
    j = int(round(h / f.dh))
    lap = transforms.numerical_laplace(f.x_grid, f.values[:, j], 1.0, decay=pde.x_tail_rate())
    print(f"Laplace transform at h={h}: PDE {lap:.6f}  Green's formula {transforms.phi_tilde(1.0, h):.6f}")
print("boundary row phi(x, 0) vs w(x), max deviation:",
      f"{np.max(np.abs(f.values[:601, 0] - marginals.w_of_x(f.x_grid[:601]))):.1e}")
