"""DTLZ1-DTLZ7 (Deb, Thiele, Laumanns, Zitzler) on the unit box.

With ``M`` objectives and ``D`` decision variables the first ``M - 1``
variables are position variables and the remaining ``k = D - M + 1`` are
distance variables feeding ``g``. On the Pareto set ``g`` is 0 (``g = 1``
for DTLZ7), reached at distance variables 0.5 for DTLZ1-5 and 0 for
DTLZ6-7. Resulting fronts: sum f = 0.5 for DTLZ1, the unit sphere for
DTLZ2-4, a degenerate curve on the sphere for DTLZ5-6, and a disconnected
front for DTLZ7.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import DomainError
from .dominance import nondominated_mask


def _g_rastrigin_like(xm):
    return 100.0 * (len(xm) + np.sum((xm - 0.5) ** 2 - np.cos(20.0 * np.pi * (xm - 0.5))))


def _g_sphere(xm):
    return float(np.sum((xm - 0.5) ** 2))


def _spherical(theta, radius):
    """Map M-1 angles onto the positive orthant of a sphere of given radius."""
    M = len(theta) + 1
    f = np.full(M, radius, dtype=float)
    for i in range(M):
        f[i] *= np.prod(np.cos(theta[: M - 1 - i]))
        if i > 0:
            f[i] *= np.sin(theta[M - 1 - i])
    return f


def _linear(xp, scale):
    M = len(xp) + 1
    f = np.full(M, scale, dtype=float)
    for i in range(M):
        f[i] *= np.prod(xp[: M - 1 - i])
        if i > 0:
            f[i] *= 1.0 - xp[M - 1 - i]
    return f


def dtlz1(x, M):
    g = _g_rastrigin_like(x[M - 1 :])
    return _linear(x[: M - 1], 0.5 * (1.0 + g))


def dtlz2(x, M):
    g = _g_sphere(x[M - 1 :])
    return _spherical(x[: M - 1] * np.pi / 2.0, 1.0 + g)


def dtlz3(x, M):
    g = _g_rastrigin_like(x[M - 1 :])
    return _spherical(x[: M - 1] * np.pi / 2.0, 1.0 + g)


def dtlz4(x, M, alpha=100.0):
    g = _g_sphere(x[M - 1 :])
    return _spherical(x[: M - 1] ** alpha * np.pi / 2.0, 1.0 + g)


def _degenerate_theta(xp, g):
    theta = np.empty_like(xp)
    theta[0] = xp[0] * np.pi / 2.0
    theta[1:] = np.pi / (4.0 * (1.0 + g)) * (1.0 + 2.0 * g * xp[1:])
    return theta


def dtlz5(x, M):
    g = _g_sphere(x[M - 1 :])
    return _spherical(_degenerate_theta(x[: M - 1], g), 1.0 + g)


def dtlz6(x, M):
    g = float(np.sum(x[M - 1 :] ** 0.1))
    return _spherical(_degenerate_theta(x[: M - 1], g), 1.0 + g)


def dtlz7(x, M):
    xm = x[M - 1 :]
    g = 1.0 + 9.0 / len(xm) * float(np.sum(xm))
    f = np.empty(M)
    f[: M - 1] = x[: M - 1]
    h = M - np.sum(f[: M - 1] / (1.0 + g) * (1.0 + np.sin(3.0 * np.pi * f[: M - 1])))
    f[M - 1] = (1.0 + g) * h
    return f


FUNCTIONS = {1: dtlz1, 2: dtlz2, 3: dtlz3, 4: dtlz4, 5: dtlz5, 6: dtlz6, 7: dtlz7}
OPTIMAL_DISTANCE = {1: 0.5, 2: 0.5, 3: 0.5, 4: 0.5, 5: 0.5, 6: 0.0, 7: 0.0}


def check_dims(D, M):
    if M < 2:
        raise DomainError(f"DTLZ needs M >= 2, got {M}")
    if D < M:
        raise DomainError(f"DTLZ needs D >= M (k = D - M + 1 >= 1), got D={D}, M={M}")


def reference_front(index, M, n_points=500, seed=0):
    """Sample ``n_points`` points lying exactly on the DTLZ``index`` front."""
    rng = np.random.default_rng(seed)
    if index == 1:
        w = np.abs(rng.standard_normal((n_points, M)))
        return 0.5 * w / w.sum(axis=1, keepdims=True)
    if index in (2, 3, 4):
        w = np.abs(rng.standard_normal((n_points, M)))
        return w / np.linalg.norm(w, axis=1, keepdims=True)
    if index in (5, 6):
        xp = np.zeros(M - 1)
        pts = []
        for t in np.linspace(0.0, 1.0, n_points):
            xp[0] = t
            pts.append(_spherical(_degenerate_theta(xp, 0.0), 1.0))
        return np.array(pts)
    if index == 7:
        # oversample positions, keep the nondominated part, then thin evenly
        k = 1
        X = rng.random((20 * n_points, M - 1))
        F = np.array([dtlz7(np.concatenate([xp, np.zeros(k)]), M) for xp in X])
        F = F[nondominated_mask(F)]
        F = F[np.lexsort(F.T[::-1])]
        if len(F) > n_points:
            F = F[np.linspace(0, len(F) - 1, n_points).round().astype(int)]
        return F
    raise DomainError(f"unknown DTLZ index {index}")
