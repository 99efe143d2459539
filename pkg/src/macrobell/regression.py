"""Locked reference values for regression checks.

Reference numbers were produced once by the independent extended-precision
oracle in tests/oracles.py (rerun with tests/freeze_oracles.py) and agree with
this package to ~1e-15.  Thresholds add a few percent of headroom above the
reference so that harmless platform rounding never trips them, while any real
change in the dynamics does.
"""

# (N, kappa, g) -> oracle max leakage and max |p_N - cos^2(omega t)| over one
# fitted period sampled at 513 points
NBS_REFERENCE = {
    (2, 1.0, 30.0): (0.0022123766604225104, 0.0037659830463847577),
    (5, 20.0, 333.333): (0.0011213846825988139, 0.001698801182235199),
    (7, 18.23, 47.85): (0.02773403449501101, 0.03858602071780759),
    (10, 10.0, 49.433): (0.005037779404085452, 0.00731825185832391),
}

NBS_THRESHOLDS = {
    (2, 1.0, 30.0): (0.00226, 0.00385),
    (5, 20.0, 333.333): (0.00115, 0.00174),
    (7, 18.23, 47.85): (0.0283, 0.0394),
    (10, 10.0, 49.433): (0.00514, 0.00747),
}

# N=7 set at phi = 3 pi / 8: probability outside {0, N} occupations, per setting pair
SUPPORT_PARAMS = (7, 18.23, 47.85)
SUPPORT_REFERENCE = {"tt": 0.0019129981166151353, "ttp": 0.007036357688477652,
                  "tpt": 0.007451594178002456, "tptp": 0.012571059153407615}
SUPPORT_THRESHOLD = 0.0129

# N=20 set, S(phi) at single points (oracle) and the 200-point sweep over [0, pi/2]
N20_PARAMS = (20, 165.0, 101.0)
N20_S_REFERENCE = {1.0: 0.8168254436656948, 1.2: 1.1207295601172034, 1.3: 1.151592426477841}
N20_SWEEP_POINTS = 200
N20_RIPPLE = 0.05072391715197458
N20_RIPPLE_TOL = 1e-6
N20_PEAK = 1.169794010194604
# the N=10 sweep has a ripple of about 2e-3; N=20 must stand clearly above it
RIPPLE_VISIBLE = 0.02
