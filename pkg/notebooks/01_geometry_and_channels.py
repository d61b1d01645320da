"""
Geometry and IRS channels
=========================

Build the three-panel scene, look at the bearing angles, and check that the
direct channel b^T Phi b b^T Phi b equals the quadratic form v^T S v.
"""

import numpy as np

from irs_crlb import IrsPanel, Position2D, angles_from_positions, coupling_matrix, path_loss
from irs_crlb.geometry import cophasing_phases, nlos_channel_direct, nlos_channel_quadratic

radar = Position2D(0.0, 0.0)
target = Position2D(0.0, 5000.0)
panels = [Position2D(2500.0, 2500.0), Position2D(-2500.0, 2500.0), Position2D(0.0, 2500.0)]

# bearings from each panel's normal, positive clockwise
for p in panels:
    th_ir, th_ti = angles_from_positions(radar, p, target)
    print(f"IRS at ({p.x:7.0f}, {p.y:6.0f}): theta_ir = {np.degrees(th_ir):6.1f} deg, "
          f"theta_ti = {np.degrees(th_ti):6.1f} deg")

# the direct radar-target path is very weak at 5 km
print("two-way LoS gain:", path_loss(2 * radar.distance_to(target)))

# an 8-element panel with random phases: both channel forms agree
rng = np.random.default_rng(0)
th_ir, th_ti = angles_from_positions(radar, panels[0], target)
panel = IrsPanel(rng.uniform(0, 2 * np.pi, 8))
s = coupling_matrix(th_ir, th_ti, 8)
h_direct = nlos_channel_direct(panel, th_ir, th_ti)
h_quad = nlos_channel_quadratic(panel.reflection, s)
print("direct", h_direct, "quadratic", h_quad, "difference", abs(h_direct - h_quad))

# co-phasing lines up every element and reaches |h| = M^2
best = IrsPanel(cophasing_phases(s))
print("co-phased |h| =", abs(nlos_channel_direct(best, th_ir, th_ti)))

# gain of one panel as the target slides along x
try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    xs = np.linspace(-4000, 4000, 401)
    gains = []
    for x in xs:
        a = angles_from_positions(radar, panels[2], Position2D(x, 5000.0))
        gains.append(abs(nlos_channel_direct(best, *a)))
    plt.plot(xs, gains)
    plt.xlabel("target x [m]")
    plt.ylabel("|h| with fixed phases")
    plt.savefig("geometry_gain.png", dpi=120)
    print("saved geometry_gain.png")
