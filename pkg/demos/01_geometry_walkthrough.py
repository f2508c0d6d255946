"""From image rows to a ground map.

A pedestrian's feet sit on the ground, so the bottom-center of their box
fixes a point on the floor. This walk-through follows one camera from pixel
angles to map coordinates and shows why equal pixel steps cover more ground
near the horizon.

Run: python3 demos/01_geometry_walkthrough.py
"""

# %%
import numpy as np

from rlmtrack import geometry as geo
from rlmtrack import synth

cam = geo.CameraModel(beta_v=60.0, beta_h=90.0, gamma=15.0, cam_height=6.0, img_w=1920, img_h=1080)
print(f"theta (bottom ray vs. vertical): {cam.theta:.1f} deg")
print(f"horizon at alpha_v = {geo.horizon_angle(cam):.2f} deg, row {geo.horizon_row(cam):.1f}")

# %% Imaging angles grow monotonically with the row, bottom-origin.
rows = np.array([0.0, 270.0, 540.0, 810.0, 1080.0])
for y, a in zip(rows, geo.imaging_angle_v(cam, rows)):
    print(f"row {y:6.0f}  alpha_v {a:6.2f} deg")

# %% The vertical mapping coefficient: how much ground one pixel row covers.
for a in (5.0, 15.0, 30.0, 40.0):
    print(f"alpha_v {a:4.0f}  phi_v {geo.phi_v(cam, a):7.4f}  phi_h {geo.phi_h(cam, a):7.4f}")

# %% Map a handful of pixels and walk them back.
xs = np.array([100.0, 960.0, 1800.0])
ys = np.array([50.0, 300.0, 500.0])
mx, my = geo.map_point(cam, xs, ys)
bx, by = geo.unmap_point(cam, mx, my)
print("map x:", np.round(mx, 2))
print("map y:", np.round(my, 2))
print("round-trip error (px):", np.max(np.abs(np.r_[bx - xs, by - ys])))

# %% Map depth is proportional to metric ground distance, so the map is a scaled floor plan.
depth = np.array([2.0, 5.0, 10.0, 20.0])
_, y_img = synth.ray_cast_project(cam, depth, np.zeros_like(depth))
_, my = geo.map_point(cam, np.full_like(depth, cam.img_w / 2), y_img)
print("image rows of 2, 5, 10, 20 m:", np.round(y_img, 1))
print("map y / metres:", np.round(my / depth, 6))
