"""Reference Galerkin entries on the 2x2 square split into unit panels.

Panels (counterclockwise, outward normals):
  0: (0,0)->(1,0)  1: (1,0)->(2,0)  2: (2,0)->(2,1)  3: (2,1)->(2,2)
  4: (2,2)->(1,2)  5: (1,2)->(0,2)  6: (0,2)->(0,1)  7: (0,1)->(0,0)

Entries use the Legendre basis P_l(2u/h - 1) in arclength u. They are
computed by nested adaptive QUADPACK quadrature (scipy), with the inner
integral split where the kernel is singular and both integrals split into
pieces of length about 2/|s| for oscillatory frequencies. K0 and K1 come from
the AMOS library (scipy.special.kv).

    python3 gen_panel_pairs.py > panel_pairs_reference.csv
"""
import sys

import numpy as np
from scipy import integrate, special

PANELS = [((0, 0), (1, 0)), ((1, 0), (2, 0)), ((2, 0), (2, 1)), ((2, 1), (2, 2)),
          ((2, 2), (1, 2)), ((1, 2), (0, 2)), ((0, 2), (0, 1)), ((0, 1), (0, 0))]
OPTS = dict(epsabs=1e-14, epsrel=1e-13, limit=200)


def at(p, u):
    (a, b) = PANELS[p]
    return (a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]))


def normal(p):
    (a, b) = PANELS[p]
    t = (b[0] - a[0], b[1] - a[1])
    return (t[1], -t[0])


def leg(l, u):
    return special.eval_legendre(l, 2 * u - 1)


def cquad(f, breaks):
    total = 0j
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        re = integrate.quad(lambda t: f(t).real, a, b, **OPTS)[0]
        im = integrate.quad(lambda t: f(t).imag, a, b, **OPTS)[0]
        total += re + 1j * im
    return total


def inner_breaks(p, q, u, pieces):
    pts = set(np.linspace(0.0, 1.0, pieces + 1))
    x = at(p, u)
    (a, b) = PANELS[q]
    t = (b[0] - a[0], b[1] - a[1])
    v = (x[0] - a[0]) * t[0] + (x[1] - a[1]) * t[1]
    y = at(q, v)
    if 0 <= v <= 1 and abs(y[0] - x[0]) + abs(y[1] - x[1]) < 1e-14:
        pts.add(v)
    return sorted(pts)


def entry(p, q, i, j, s, kind, pieces):
    nq = normal(q)

    def inner(u):
        x = at(p, u)

        def f(v):
            y = at(q, v)
            d = (x[0] - y[0], x[1] - y[1])
            r = np.hypot(d[0], d[1])
            if r == 0.0:
                return 0j
            if kind == "V":
                k = special.kv(0, s * r) / (2 * np.pi)
            else:
                k = s / (2 * np.pi) * special.kv(1, s * r) * (d[0] * nq[0] + d[1] * nq[1]) / r
            return k * leg(j, v)

        return cquad(f, inner_breaks(p, q, u, pieces)) * leg(i, u)

    return cquad(inner, list(np.linspace(0.0, 1.0, pieces + 1)))


CASES = [
    (0, 0, "V"),
    (0, 1, "V"),
    (1, 2, "VK"),
    (2, 1, "VK"),
    (0, 2, "VK"),
    (0, 3, "VK"),
    (0, 5, "VK"),
]
FREQS = [1.0 + 0j, 2.0 + 0j, 2.0 + 1j, 10.0 + 10j, 2.0 + 25j]
DEG = 2

if __name__ == "__main__":
    out = sys.stdout
    out.write("kind,p,q,i,j,s_re,s_im,re,im\n")
    for s in FREQS:
        pieces = max(1, int(np.ceil(abs(s) / 2)))
        for (p, q, kinds) in CASES:
            for kind in kinds:
                for i in range(DEG + 1):
                    for j in range(DEG + 1):
                        val = entry(p, q, i, j, s, kind, pieces)
                        out.write("%s,%d,%d,%d,%d,%r,%r,%r,%r\n" % (
                            kind, p, q, i, j, s.real, s.imag, val.real, val.imag))
                        out.flush()
