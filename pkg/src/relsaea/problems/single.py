"""Single-objective benchmark functions.

LZG suite (bounds as commonly used for expensive optimization studies):

    ellipsoid   sum_i i * x_i**2  (1-indexed weights)      [-5.12, 5.12]
    rosenbrock  sum 100 (x_{i+1} - x_i**2)**2 + (x_i - 1)**2  [-2.048, 2.048]
    ackley      -20 exp(-0.2 rms(x)) - exp(mean cos 2 pi x) + 20 + e  [-32.768, 32.768]
    griewank    1 + sum x_i**2 / 4000 - prod cos(x_i / sqrt(i))  [-600, 600]

YLL suite F01-F13 with F10 (Ackley) and F11 (Griewank) left out, using the
classic bounds: F01 sphere, F02 Schwefel 2.22, F03 Schwefel 1.2, F04
Schwefel 2.21, F05 Rosenbrock, F06 step, F07 noisy quartic, F08 Schwefel
2.26, F09 Rastrigin, F12/F13 generalized penalized functions.

F07's noise term is a deterministic hash of ``x`` so repeated evaluations
of the same point agree bit for bit.
"""

from __future__ import annotations

import hashlib

import numpy as np


def ellipsoid(x):
    i = np.arange(1, len(x) + 1)
    return float(np.sum(i * x**2))


def rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (x[:-1] - 1.0) ** 2))


def ackley(x):
    d = len(x)
    a = -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x**2) / d))
    b = -np.exp(np.sum(np.cos(2.0 * np.pi * x)) / d)
    return float(a + b + 20.0 + np.e)


def griewank(x):
    i = np.arange(1, len(x) + 1)
    return float(1.0 + np.sum(x**2) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))))


def sphere(x):
    return float(np.sum(x**2))


def schwefel_2_22(x):
    ax = np.abs(x)
    return float(np.sum(ax) + np.prod(ax))


def schwefel_1_2(x):
    return float(np.sum(np.cumsum(x) ** 2))


def schwefel_2_21(x):
    return float(np.max(np.abs(x)))


def step(x):
    return float(np.sum(np.floor(x + 0.5) ** 2))


def _hash_uniform(x):
    digest = hashlib.blake2b(np.ascontiguousarray(x, dtype=float).tobytes(), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "little")).random()


def quartic_noise(x):
    i = np.arange(1, len(x) + 1)
    return float(np.sum(i * x**4) + _hash_uniform(x))


def schwefel_2_26(x):
    return float(np.sum(-x * np.sin(np.sqrt(np.abs(x)))))


def rastrigin(x):
    return float(np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x) + 10.0))


def _u(x, a, k, m):
    return np.where(x > a, k * (x - a) ** m, np.where(x < -a, k * (-x - a) ** m, 0.0))


def penalized_1(x):
    n = len(x)
    y = 1.0 + (x + 1.0) / 4.0
    s = 10.0 * np.sin(np.pi * y[0]) ** 2
    s += np.sum((y[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * y[1:]) ** 2))
    s += (y[-1] - 1.0) ** 2
    return float(np.pi / n * s + np.sum(_u(x, 10.0, 100.0, 4)))


def penalized_2(x):
    s = np.sin(3.0 * np.pi * x[0]) ** 2
    s += np.sum((x[:-1] - 1.0) ** 2 * (1.0 + np.sin(3.0 * np.pi * x[1:]) ** 2))
    s += (x[-1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * x[-1]) ** 2)
    return float(0.1 * s + np.sum(_u(x, 5.0, 100.0, 4)))


# name -> (function, (low, high), optimum location or None)
LZG = {
    "ellipsoid": (ellipsoid, (-5.12, 5.12), 0.0),
    "rosenbrock": (rosenbrock, (-2.048, 2.048), 1.0),
    "ackley": (ackley, (-32.768, 32.768), 0.0),
    "griewank": (griewank, (-600.0, 600.0), 0.0),
}

YLL = {
    "f01": (sphere, (-100.0, 100.0), 0.0),
    "f02": (schwefel_2_22, (-10.0, 10.0), 0.0),
    "f03": (schwefel_1_2, (-100.0, 100.0), 0.0),
    "f04": (schwefel_2_21, (-100.0, 100.0), 0.0),
    "f05": (rosenbrock, (-30.0, 30.0), 1.0),
    "f06": (step, (-100.0, 100.0), 0.0),
    # optimum value is noise-dependent
    "f07": (quartic_noise, (-1.28, 1.28), None),
    # multimodal; min ~ -418.9829 * D at x_i ~ 420.9687, not pinned exactly
    "f08": (schwefel_2_26, (-500.0, 500.0), None),
    "f09": (rastrigin, (-5.12, 5.12), 0.0),
    "f12": (penalized_1, (-50.0, 50.0), -1.0),
    "f13": (penalized_2, (-50.0, 50.0), 1.0),
}
