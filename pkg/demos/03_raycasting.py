"""
Casting rays against a biquadratic quad
=======================================

The implicit surface extends past the patch, so every algebraic root along
a ray is checked by inverting it back to (u, v).
"""
# %%
import numpy as np

from biquad_implicit import DegenerateSurfaceError, ImplicitPatch, QuadNet, Ray, evaluate, invert_point, raycast
from biquad_implicit.apps import ray_roots
from biquad_implicit.geometry import monomial_coefficients, surface_point

rng = np.random.default_rng(11)
grid = np.stack(np.meshgrid([0.0, 0.5, 1.0], [0.0, 0.5, 1.0], indexing="ij"), axis=-1)
heights = rng.uniform(-0.3, 0.3, (3, 3, 1))

# %% A height field over a regular grid has x = u and y = v exactly. The
# plain Dixon matrix is singular for such a system, so it is reported as
# degenerate rather than returning a zero polynomial.
try:
    ImplicitPatch(QuadNet(np.concatenate([grid, heights], axis=-1))).poly
except DegenerateSurfaceError as exc:
    print("height field:", exc)

# %% Jittering the grid makes the parametrization generic.
p = np.concatenate([grid + rng.uniform(-0.1, 0.1, grid.shape), heights], axis=-1)
net = QuadNet(p)
patch = ImplicitPatch(net)
print(f"degree {patch.poly.degree}, {len(patch.poly)} terms")

# %% A ray aimed at a point on the patch.
target = evaluate(net, (0.4, 0.7))
ray = Ray(target + (0.1, 0.2, 1.0), (-0.1, -0.2, -1.0))
for h in raycast(net, ray, (0.0, 3.0), patch=patch):
    print(f"t = {h.t:.12f}  uv = ({h.domain_point.u:.9f}, {h.domain_point.v:.9f})")

# %% A ray through the surface's extension outside the unit square.
outside = surface_point(monomial_coefficients(net), 1.4, 0.5)
print("inversion:", invert_point(net, outside))
ray = Ray(outside - (0.0, 0.0, 1.0), (0.0, 0.0, 1.0))
print("algebraic roots:", ray_roots(patch, ray, (0.0, 2.0)))
print("validated hits: ", [h.t for h in raycast(net, ray, (0.0, 2.0), patch=patch)])
