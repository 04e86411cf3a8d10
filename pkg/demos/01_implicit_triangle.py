"""
Implicit equation of a quadratic Bezier triangle
================================================

Build the Cayley matrix of a small bulged triangle, expand its determinant
into F(x, y, z), and check that both evaluate to zero on the patch.
"""
# %%
import numpy as np

from biquad_implicit import build_cayley_matrix, classify, emit_slp, evaluate, evaluate_poly, expand_resultant
from biquad_implicit.geometry import bulged_triangle

net = bulged_triangle()
print(net.to_dict())

# %% The 5x5 Cayley matrix. Two cells are zero for every triangle net.
cm = build_cayley_matrix(net)
print("rows (alpha, beta):", cm.rows)
print("cols (u, v):       ", cm.cols)
print("zero cells:", cm.zero_cells())

# %% Expanding the determinant gives a quartic: the degree-5 part cancels.
poly = expand_resultant(cm)
print(f"degree {poly.degree} (declared bound {poly.max_degree}), {len(poly)} terms")
for exps, c in poly.sorted_terms()[:6]:
    print(exps, c)

# %% Points on the patch classify as on-surface; nearby points do not.
p = evaluate(net, (0.33, 0.33))
print("F(p) =", evaluate_poly(poly, p))
print(classify(cm, p).verdict, classify(cm, p + 0.05).verdict, classify(cm, p - 0.05).verdict)

# %% The polynomial compiles to a branch-free program.
prog = emit_slp(poly)
q = np.array([0.2, -0.4, 0.7])
print(f"{prog.n_mul} mul, {prog.n_add} add;", prog.run(q) == evaluate_poly(poly, q))
print(prog.to_text()[:200])
