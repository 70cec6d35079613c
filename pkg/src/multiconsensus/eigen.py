"""Eigenvalue solvers.

Two routes:

* floating point: balancing, Householder reduction to upper Hessenberg
  form, then Francis double-shift QR (``hqr``);
* exact input (integer/rational :class:`~multiconsensus.exact.Matrix`):
  the characteristic polynomial is formed over the rationals, split into
  square-free factors (so multiplicities are exact), and each factor's
  roots are found with the QR route on its companion matrix, Newton
  polished, and snapped to a rational whenever that rational is an exact
  root.

The exact route exists because Laplacians routinely have defective
eigenvalues, where the QR route alone only resolves a ``k``-fold
eigenvalue in a Jordan block to about ``eps**(1/k)``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import NonConvergence
from .exact import Matrix

MAX_ITS_PER_EIGENVALUE = 60
_EPS = np.finfo(float).eps

Poly = list  # coefficients, lowest degree first


# ---------------------------------------------------------------------------
# floating point route


def balance(a: np.ndarray) -> np.ndarray:
    """Diagonal similarity (powers of 2) equalising row and column norms."""
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    radix = 2.0
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.sum(np.abs(a[:, i])) - abs(a[i, i])
            r = np.sum(np.abs(a[i, :])) - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def hessenberg(a: np.ndarray) -> np.ndarray:
    """Householder reduction to upper Hessenberg form (similarity)."""
    h = np.array(a, dtype=float, copy=True)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1 :, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        h[k + 1 :, k:] -= 2.0 * np.outer(v, v @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v)
        h[k + 2 :, k] = 0.0
    return h


def hqr(h: np.ndarray) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR."""
    a = np.array(h, dtype=float, copy=True)
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = sum(abs(a[i, j]) for i in range(n) for j in range(max(i - 1, 0), n))
    nn = n - 1
    t = 0.0
    p = q = r = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) <= _EPS * s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if its == MAX_ITS_PER_EIGENVALUE:
                raise NonConvergence(f"QR iteration did not converge for eigenvalue {nn + 1} of {n}")
            if its in (10, 20, 40):
                # exceptional shift
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u <= _EPS * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            x = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k, j] + q * a[k + 1, j]
                    if k != nn - 1:
                        p += r * a[k + 2, j]
                        a[k + 2, j] -= p * z
                    a[k + 1, j] -= p * y
                    a[k, j] -= p * x
                for i in range(l, min(nn, k + 3) + 1):
                    p = x * a[i, k] + y * a[i, k + 1]
                    if k != nn - 1:
                        p += z * a[i, k + 2]
                        a[i, k + 2] -= p * r
                    a[i, k + 1] -= p * q
                    a[i, k] -= p
    return wr + 1j * wi


def eigvals_float(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    if a.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return hqr(hessenberg(balance(a)))


# ---------------------------------------------------------------------------
# exact polynomial helpers


def _trim(p: Poly) -> Poly:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def poly_mul(a: Poly, b: Poly) -> Poly:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def poly_sub(a: Poly, b: Poly) -> Poly:
    m = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(m)])


def poly_divmod(a: Poly, b: Poly) -> tuple[Poly, Poly]:
    a = [Fraction(x) for x in _trim(a)]
    b = _trim(b)
    if b == [0]:
        raise ZeroDivisionError("polynomial division by zero")
    if len(a) < len(b):
        return [Fraction(0)], a
    q = [Fraction(0)] * (len(a) - len(b) + 1)
    lead = Fraction(b[-1])
    for k in range(len(q) - 1, -1, -1):
        c = a[k + len(b) - 1] / lead
        q[k] = c
        if c:
            for j, y in enumerate(b):
                a[k + j] -= c * y
    return _trim(q), _trim(a[: len(b) - 1] or [Fraction(0)])


def poly_monic(a: Poly) -> Poly:
    a = _trim(a)
    lead = Fraction(a[-1])
    return [Fraction(x) / lead for x in a]


def poly_gcd(a: Poly, b: Poly) -> Poly:
    a, b = _trim(a), _trim(b)
    while b != [0]:
        a, b = b, poly_divmod(a, b)[1]
    return poly_monic(a)


def poly_deriv(a: Poly) -> Poly:
    return _trim([k * a[k] for k in range(1, len(a))] or [Fraction(0)])


def poly_eval(a: Poly, x):
    acc = 0
    for c in reversed(a):
        acc = acc * x + c
    return acc


def charpoly(m: Matrix) -> Poly:
    """Monic ``det(x I - m)`` over the rationals.

    Gaussian similarity transforms bring ``m`` to upper Hessenberg form,
    then the standard Hessenberg determinant recurrence builds the
    polynomial.
    """
    n = m.n
    a = [[Fraction(x) for x in row] for row in m.rows]
    for k in range(n - 2):
        piv = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
        if piv is None:
            continue
        if piv != k + 1:
            a[piv], a[k + 1] = a[k + 1], a[piv]
            for row in a:
                row[piv], row[k + 1] = row[k + 1], row[piv]
        for j in range(k + 2, n):
            if a[j][k] == 0:
                continue
            f = a[j][k] / a[k + 1][k]
            rj, rk = a[j], a[k + 1]
            for c in range(n):
                rj[c] -= f * rk[c]
            for row in a:
                row[k + 1] += f * row[j]
    polys: list[Poly] = [[Fraction(1)]]
    for k in range(n):
        p = poly_mul([-a[k][k], Fraction(1)], polys[k])
        prod = Fraction(1)
        for i in range(k - 1, -1, -1):
            prod *= a[i + 1][i]
            if prod == 0:
                break
            if a[i][k]:
                p = poly_sub(p, [a[i][k] * prod * c for c in polys[i]])
        polys.append(p)
    return polys[n]


def squarefree_factors(p: Poly) -> list[tuple[Poly, int]]:
    """Yun's algorithm: ``p = prod f_k**k`` with each ``f_k`` square-free."""
    p = poly_monic(p)
    out = []
    if len(p) == 1:
        return out
    dp = poly_deriv(p)
    a = poly_gcd(p, dp)
    b = poly_divmod(p, a)[0]
    c = poly_divmod(dp, a)[0]
    d = poly_sub(c, poly_deriv(b))
    k = 1
    while len(b) > 1:
        a = poly_gcd(b, d)
        if len(a) > 1:
            out.append((a, k))
        b = poly_divmod(b, a)[0]
        c = poly_divmod(d, a)[0]
        d = poly_sub(c, poly_deriv(b))
        k += 1
    return out


def _companion_roots(p: Poly) -> np.ndarray:
    p = poly_monic(p)
    d = len(p) - 1
    if d == 1:
        return np.array([complex(-float(p[0]))])
    c = np.zeros((d, d))
    c[1:, :-1] = np.eye(d - 1)
    c[:, -1] = [-float(x) for x in p[:-1]]
    return eigvals_float(c)


def _polish(p: Poly, z: complex, steps: int = 50) -> complex:
    fp = [float(x) for x in p]
    dp = [k * fp[k] for k in range(1, len(fp))]
    for _ in range(steps):
        f = poly_eval(fp, z)
        g = poly_eval(dp, z)
        if g == 0:
            break
        step = f / g
        z -= step
        if abs(step) <= 4 * _EPS * max(1.0, abs(z)):
            break
    return z


def _snap(p: Poly, z: complex) -> Fraction | None:
    if abs(z.imag) > 1e-6 * max(1.0, abs(z.real)):
        return None
    for den in (1, 10**3, 10**6):
        r = Fraction(z.real).limit_denominator(den)
        if poly_eval(p, r) == 0:
            return r
    return None


def exact_roots(p: Poly) -> list[tuple[complex | Fraction, int]]:
    """Roots of ``p`` with exact multiplicities; rational roots returned exactly."""
    out: list[tuple[complex | Fraction, int]] = []
    for f, mult in squarefree_factors(p):
        rest = poly_monic(f)
        # peel off rational roots found by the float route, then solve the remainder
        while len(rest) > 1:
            zs = _companion_roots(rest)
            found = None
            for z in zs:
                r = _snap(rest, _polish(rest, complex(z)))
                if r is not None:
                    found = r
                    break
            if found is None:
                out.extend((_polish(rest, complex(z)), mult) for z in zs)
                break
            out.append((found, mult))
            rest = poly_divmod(rest, [-found, Fraction(1)])[0]
    return out


def eigvals_exact(m: Matrix) -> list[complex]:
    """Eigenvalues of an exact matrix with exact multiplicities, as complex floats."""
    vals: list[complex] = []
    for z, mult in exact_roots(charpoly(m)):
        vals.extend([complex(z)] * mult)
    return vals


def eigvals(m: Matrix | np.ndarray | Sequence[Sequence[float]]) -> list[complex]:
    if isinstance(m, Matrix):
        return eigvals_exact(m)
    return [complex(z) for z in eigvals_float(np.asarray(m, dtype=float))]
