"""Naive O(n^2) double loops over ordered node pairs.

Independent of the pair table: coordinates are rebuilt from (a, b, M, pad)
and every ordered pair (x, y) with at least one interior endpoint is visited
explicitly. Only meant for tiny grids.
"""
from __future__ import annotations

import math

import numpy as np


def _nodes(a, b, M, pad):
    h = (b - a) / (M + 1)
    xs, inside = [], []
    for k in range(-pad, M + 2 + pad):
        xs.append(a + h * k)
        inside.append(1 <= k <= M)
    return h, xs, inside


def _values(u, inside):
    out, it = [], iter(u)
    for flag in inside:
        out.append(complex(next(it)) if flag else 0j)
    return out


def _A(kind, c, x):
    if kind == "zero":
        return 0.0
    if kind == "constant":
        return c
    return c * x


def naive_energies(u, a, b, M, pad, s, p, G, g, magnetic=("zero", 0.0)):
    """Return dict with rho, seminorm2, pairing, lp1, J, I by explicit double loop."""
    h, xs, inside = _nodes(a, b, M, pad)
    vals = _values(u, inside)
    n = len(xs)
    rho = semi = pairing = 0.0
    kind, c = magnetic
    for i in range(n):
        for j in range(n):
            if i == j or not (inside[i] or inside[j]):
                continue
            r = abs(xs[i] - xs[j])
            w = h * h / r
            phi = (xs[i] - xs[j]) * _A(kind, c, 0.5 * (xs[i] + xs[j]))
            D = (vals[i] - complex(math.cos(phi), math.sin(phi)) * vals[j]) / r**s
            m = abs(D)
            rho += w * float(G(m))
            pairing += w * float(g(m)) * m
            semi += w * abs(vals[i] - vals[j]) ** 2 / r ** (2 * s)
    lp1 = sum(h * abs(z) ** (p + 1) for z, f in zip(vals, inside) if f)
    return {
        "rho": rho,
        "seminorm2": semi,
        "pairing": pairing,
        "lp1": lp1,
        "J": rho - lp1 / (p + 1),
        "I": pairing - lp1,
    }


def naive_kernel_mass(a, b, M, pad, s):
    """sum over ordered pairs of w / r^{2s}."""
    h, xs, inside = _nodes(a, b, M, pad)
    tot = 0.0
    for i in range(len(xs)):
        for j in range(len(xs)):
            if i != j and (inside[i] or inside[j]):
                r = abs(xs[i] - xs[j])
                tot += h * h / r / r ** (2 * s)
    return tot


def fd_gradient(fun, u, step=1e-6):
    """Central differences of a real function of a complex vector, packed as d/dRe + i d/dIm."""
    u = np.asarray(u, dtype=complex)
    out = np.zeros_like(u)
    for k in range(u.size):
        for unit in (1.0, 1j):
            e = np.zeros_like(u)
            e[k] = unit * step
            d = (fun(u + e) - fun(u - e)) / (2 * step)
            out[k] += d * unit
    return out
