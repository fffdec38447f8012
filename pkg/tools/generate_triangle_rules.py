"""Regenerate ``src/curved_dg/_triangle_rules.py``.

Fully symmetric positive-interior triangle rules are found by solving the
moment equations for a fixed orbit structure with Levenberg-Marquardt from
random starts, then written out at full double precision.

    python tools/generate_triangle_rules.py
"""
import math
import sys
from pathlib import Path

import mpmath as mp
import numpy as np
from scipy.optimize import least_squares

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from curved_dg.reference import VERTICES, modal_basis  # noqa: E402

# degree -> (centroid?, number of S21 orbits, number of S111 orbits)
ORBITS = {
    1: (1, 0, 0), 2: (0, 1, 0), 3: (0, 2, 0), 4: (0, 2, 0), 5: (1, 2, 0),
    6: (0, 2, 1), 7: (0, 3, 1), 8: (1, 3, 1), 9: (1, 4, 1), 10: (1, 2, 3),
    11: (1, 5, 2), 12: (0, 5, 3), 13: (1, 6, 3), 14: (0, 6, 4), 15: (1, 6, 5),
}

V = VERTICES["tri"]


def expand(params, orbit):
    n0, n1, n2 = orbit
    nw = n0 + n1 + n2
    w, rest = params[:nw], params[nw:]
    bary, wts = [], []
    i = 0
    if n0:
        bary.append((1 / 3, 1 / 3, 1 / 3))
        wts.append(w[i])
        i += 1
    for j in range(n1):
        a = rest[j]
        for p in ((a, a, 1 - 2 * a), (a, 1 - 2 * a, a), (1 - 2 * a, a, a)):
            bary.append(p)
            wts.append(w[i])
        i += 1
    for j in range(n2):
        a, b = rest[n1 + 2 * j], rest[n1 + 2 * j + 1]
        c = 1 - a - b
        for p in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
            bary.append(p)
            wts.append(w[i])
        i += 1
    bary = np.array(bary)
    return bary @ V, np.array(wts), bary


def residual(params, orbit, deg):
    pts, wts, _ = expand(params, orbit)
    m = modal_basis("tri", deg, pts)
    exact = np.zeros(m.shape[1])
    exact[0] = math.sqrt(2.0)
    return m.T @ wts - exact


def _exact_moment(a, b):
    # integral of x^a y^b over the unit triangle is a! b! / (a + b + 2)!; map r = 2x - 1, s = 2y - 1
    total = mp.mpf(0)
    for i in range(a + 1):
        for j in range(b + 1):
            c = mp.binomial(a, i) * mp.binomial(b, j) * (-1) ** (a - i + b - j) * 2 ** (i + j)
            total += c * mp.factorial(i) * mp.factorial(j) / mp.factorial(i + j + 2)
    return 4 * total


def polish(params, orbit, deg, dps=40, iters=8):
    """Gauss-Newton on the exact monomial moments in extended precision."""
    mp.mp.dps = dps
    n0, n1, n2 = orbit
    nw = n0 + n1 + n2
    exps = [(a, b) for a in range(deg + 1) for b in range(deg + 1 - a)]
    exact = [_exact_moment(a, b) for a, b in exps]
    verts = [[mp.mpf(v) for v in row] for row in V.tolist()]

    def res(x):
        w, rest = x[:nw], x[nw:]
        pts = []
        i = 0
        if n0:
            pts.append((w[i], (mp.mpf(1) / 3,) * 3))
            i += 1
        for j in range(n1):
            a = rest[j]
            for bc in ((a, a, 1 - 2 * a), (a, 1 - 2 * a, a), (1 - 2 * a, a, a)):
                pts.append((w[i], bc))
            i += 1
        for j in range(n2):
            a, b = rest[n1 + 2 * j], rest[n1 + 2 * j + 1]
            c = 1 - a - b
            for bc in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
                pts.append((w[i], bc))
            i += 1
        xy = [(wt, sum(l * v[0] for l, v in zip(bc, verts)), sum(l * v[1] for l, v in zip(bc, verts)))
              for wt, bc in pts]
        return mp.matrix([sum(wt * r ** a * s ** b for wt, r, s in xy) - e
                          for (a, b), e in zip(exps, exact)])

    x = [mp.mpf(float(v)) for v in params]
    h = mp.mpf(10) ** (-dps // 2)
    for _ in range(iters):
        r0 = res(x)
        J = mp.matrix(len(exps), len(x))
        for j in range(len(x)):
            xp = list(x)
            xp[j] += h
            col = (res(xp) - r0) / h
            for i in range(len(exps)):
                J[i, j] = col[i]
        dx, _ = mp.qr_solve(J, -r0)
        x = [xi + dxi for xi, dxi in zip(x, dx)]
    return np.array([float(v) for v in x]), float(mp.norm(res(x), mp.inf))


def solve(deg, tries=4000, seed=0):
    orbit = ORBITS[deg]
    n0, n1, n2 = orbit
    nw = n0 + n1 + n2
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        w0 = rng.uniform(0.2, 1.0, nw)
        w0 *= 2.0 / (w0 @ np.array([1] * n0 + [3] * n1 + [6] * n2))
        a1 = rng.uniform(0.02, 0.49, n1)
        ab = []
        for _ in range(n2):
            a = rng.uniform(0.01, 0.6)
            b = rng.uniform(0.01, 1 - a - 0.01)
            ab += [a, b]
        x0 = np.concatenate([w0, a1, ab])
        sol = least_squares(residual, x0, args=(orbit, deg), method="lm",
                            xtol=3e-16, ftol=3e-16, gtol=3e-16, max_nfev=4000)
        res = np.abs(residual(sol.x, orbit, deg)).max()
        pts, wts, bary = expand(sol.x, orbit)
        if res < 1e-14 and wts.min() > 0 and bary.min() > 1e-8:
            params, err = polish(sol.x, orbit, deg)
            if err > 1e-25:
                continue
            pts, wts, bary = expand(params, orbit)
            return pts, wts
    raise RuntimeError(f"no rule found for degree {deg}")


def main(max_degree=15):
    out = ['"""Fully symmetric positive-weight cubature rules on the reference triangle.',
           "",
           "Generated by tools/generate_triangle_rules.py; maps degree -> (points, weights).",
           '"""', "", "TRIANGLE_RULES = {"]
    for deg in sorted(ORBITS):
        if deg > max_degree:
            break
        try:
            pts, wts = solve(deg, tries=300 if deg > 11 else 4000)
        except RuntimeError as exc:
            print(exc, file=sys.stderr)
            break
        print(f"degree {deg}: {len(wts)} points", file=sys.stderr)
        out.append(f"    {deg}: (")
        out.append("        [" + ",\n         ".join(f"[{float(p[0])!r}, {float(p[1])!r}]" for p in pts) + "],")
        out.append("        [" + ",\n         ".join(repr(float(w)) for w in wts) + "],")
        out.append("    ),")
    out.append("}")
    path = Path(__file__).resolve().parents[1] / "src" / "curved_dg" / "_triangle_rules.py"
    path.write_text("\n".join(out) + "\n")


if __name__ == "__main__":
    import warnings
    warnings.simplefilter("ignore")
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 15)
