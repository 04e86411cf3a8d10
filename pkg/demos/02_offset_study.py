"""
Large coordinates and the normalizing transform
===============================================

Shift the bulged triangle far from the origin and watch the zero crossing
along the scan line disappear, then come back once the patch is moved to
its canonical pose.
"""
# %%
from biquad_implicit import normalize_net, precision_study, scan_line
from biquad_implicit.apps import sign_changes
from biquad_implicit.geometry import bulged_triangle

net = bulged_triangle()

# %% At offset 0 both evaluators change sign once, right at t = 0.
records = scan_line(net, (0.33, 0.33), n_samples=21)
ts = [r.t for r in records]
print(sign_changes(ts, [r.implicit_value for r in records]))
print(sign_changes(ts, [r.det_value for r in records]))

# %% The canonical pose: anchors at the origin, on +x, and in the z = 0 plane.
shifted = net.translated((1e6, 1e6, 1e6))
canonical, transform = normalize_net(shifted)
print(canonical.anchors())
print("scale", transform.s)

# %% The full study: one row per offset, evaluator and frame.
report = precision_study(net)
print(report.to_csv())
for mode in ("implicit/raw", "determinant/raw", "implicit/normalized", "determinant/normalized"):
    print(f"{mode:24s} first failure at offset {report.failure_onset(mode)}")
