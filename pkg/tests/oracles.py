"""Independent oracles for the test suite.

Everything here is deliberately written from scratch against the scalar or
brute-force definition of each quantity (numpy only for vectorized lattice
scans), without importing the package, so the values it produces stay
independent of the code paths under test.
"""

import itertools
import math

import numpy as np


def e1_step(x, k, K=0.5, pattern=(1.0,), gap=2.0):
    """One step of the two-interval reflection map with anchors at +-gap/2.

    x > 0 means the point sits in the right interval. The inner map reflects
    the anchor displacement into the opposite interval scaled by K, then the
    impulse rescales the new displacement by the scheduled gain.
    """
    a_cur = gap / 2.0 if x > 0 else -gap / 2.0
    a_next = -a_cur
    u = a_next - K * (x - a_cur)
    lam = pattern[k % len(pattern)]
    return a_next + lam * (u - a_next)


def e1_orbit(x0, n, K=0.5, pattern=(1.0,), gap=2.0):
    pts = [float(x0)]
    for k in range(n):
        pts.append(e1_step(pts[-1], k, K, pattern, gap))
    return pts


def e1_distance_trace(x0, n, K=0.5, pattern=(1.0,), gap=2.0):
    pts = e1_orbit(x0, n, K, pattern, gap)
    return [abs(pts[k + 1] - pts[k]) for k in range(n)]


def e1_closed_form_distance(k, K=0.5, d0=3.5, gap=2.0):
    """Identity-impulse two-interval case: d_k = D + (d_0 - D) * K^k."""
    return gap + (d0 - gap) * K**k


def excess_recursion(e0, a, pattern, n):
    """Impulsive plant excess: e_{k+1} = a * pattern[k mod r] * e_k."""
    es = [float(e0)]
    for k in range(n):
        es.append(a * pattern[k % len(pattern)] * es[-1])
    return es


def scalar_contraction_orbit(x0, K, n):
    """Intersecting two-interval case with anchors at zero: x -> -K x."""
    pts = [float(x0)]
    for _ in range(n):
        pts.append(-K * pts[-1])
    return pts


def lp_distance(x, y, q):
    return sum(abs(a - b) ** q for a, b in zip(x, y)) ** (1.0 / q)


def euclid(x, y):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(x, y)))


def grid_points_box(lo, hi, step):
    axes = []
    for a, b in zip(lo, hi):
        n = max(2, int(round((b - a) / step)) + 1)
        axes.append([a + (b - a) * t / (n - 1) for t in range(n)])
    return list(itertools.product(*axes))


def brute_force_box_gap(lo1, hi1, lo2, hi2, step):
    """Minimum euclidean distance between two boxes over a coordinate lattice.

    The all-pairs scan is exact over the lattice; it is evaluated in
    vectorized chunks to keep dense 1e-4 lattices affordable.
    """
    grid1 = np.asarray(grid_points_box(lo1, hi1, step))
    grid2 = np.asarray(grid_points_box(lo2, hi2, step))
    best = float("inf")
    chunk = max(1, int(2e6 // max(1, grid2.shape[0])))
    for start in range(0, grid1.shape[0], chunk):
        block = grid1[start : start + chunk]
        diffs = block[:, None, :] - grid2[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diffs, diffs)
        best = min(best, float(np.sqrt(d2.min())))
    return best


def ball_boundary_points(center, radius, count):
    """Dense boundary sample of a 2-D ball for projection optimality checks."""
    pts = []
    for t in range(count):
        ang = 2.0 * math.pi * t / count
        pts.append((center[0] + radius * math.cos(ang), center[1] + radius * math.sin(ang)))
    return pts


def brute_force_box_gap_lp(lo1, hi1, lo2, hi2, step, q):
    """Minimum l_q distance between two boxes over a coordinate lattice."""
    grid1 = np.asarray(grid_points_box(lo1, hi1, step))
    grid2 = np.asarray(grid_points_box(lo2, hi2, step))
    best = float("inf")
    chunk = max(1, int(2e6 // max(1, grid2.shape[0])))
    for start in range(0, grid1.shape[0], chunk):
        block = grid1[start : start + chunk]
        diffs = np.abs(block[:, None, :] - grid2[None, :, :]) ** q
        best = min(best, float(diffs.sum(axis=2).min() ** (1.0 / q)))
    return best


def weighted_gain_sums(gains, K, count):
    """Partial sums S(M) = sum_k K^(M-k) (m_k - 1) for M = 1..count."""
    out = []
    S = 0.0
    for k in range(1, count + 1):
        S = K * S + (gains[k] - 1.0)
        out.append(S)
    return out
