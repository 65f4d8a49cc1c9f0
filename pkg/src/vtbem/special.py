"""Hankel functions of the first kind, orders 0 and 1, for real positive argument.

Three regimes, each accurate to a few ulps of ``|H|``:

* ``z <= SERIES_MAX``: ascending power series for J and Y,
* ``SERIES_MAX < z < ASYMPTOTIC_MIN``: Miller backward recurrence for J_n with
  the Neumann series for Y0 and Y1,
* ``z >= ASYMPTOTIC_MIN``: Hankel asymptotic expansion.
"""

import math

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061
SERIES_MAX = 3.0
ASYMPTOTIC_MIN = 25.0

_TWO_OVER_PI = 2.0 / math.pi


def _series(z):
    q = 0.25 * z * z
    lg = np.log(0.5 * z) + EULER_GAMMA
    j0 = np.zeros_like(z)
    j1s = np.zeros_like(z)
    y0s = np.zeros_like(z)
    y1s = np.zeros_like(z)
    t0 = np.ones_like(z)  # (-q)^m / (m!)^2
    t1 = np.ones_like(z)  # (-q)^m / (m! (m+1)!)
    hm = 0.0
    for m in range(40):
        hm1 = hm + 1.0 / (m + 1)
        j0 += t0
        j1s += t1
        y0s -= hm * t0  # (-1)^{m+1} H_m q^m/(m!)^2 == -H_m * t0
        y1s += (hm + hm1) * t1
        t0 = t0 * (-q) / ((m + 1) ** 2)
        t1 = t1 * (-q) / ((m + 1) * (m + 2))
        hm = hm1
    j1 = 0.5 * z * j1s
    y0 = _TWO_OVER_PI * (lg * j0 + y0s)
    y1 = _TWO_OVER_PI * (lg * j1 - 1.0 / z) - 0.5 * z * y1s / math.pi
    return j0, j1, y0, y1


def _miller(z):
    nmax = int(2 * ((ASYMPTOTIC_MIN + 12.0 * ASYMPTOTIC_MIN ** (1 / 3) + 20.0) // 2))
    lg = np.log(0.5 * z) + EULER_GAMMA
    jp1 = np.zeros_like(z)  # J_{n+1}
    jn = np.full_like(z, 1e-300)  # J_n, arbitrary seed
    norm = np.zeros_like(z)  # J0 + 2 sum J_{2k}
    y0s = np.zeros_like(z)  # sum_{k>=1} (-1)^k J_{2k} / k
    y1s = np.zeros_like(z)  # sum_{k>=1} (-1)^k (J_{2k-1} - J_{2k+1}) / k
    j1 = None
    for n in range(nmax, 0, -1):
        # jn holds J_n, jp1 holds J_{n+1}
        if n % 2 == 0 and n > 0:
            kk = n // 2
            sgn = -1.0 if kk % 2 else 1.0
            norm += 2.0 * jn
            y0s += sgn * jn / kk
            y1s -= sgn * jp1 / kk
        else:
            # odd n = 2k - 1 contributes to the k = (n+1)/2 term
            kk = (n + 1) // 2
            sgn = -1.0 if kk % 2 else 1.0
            y1s += sgn * jn / kk
        jm1 = (2.0 * n / z) * jn - jp1
        jp1, jn = jn, jm1
        big = np.abs(jn) > 1e250
        if np.any(big):
            s = np.where(big, 1e-250, 1.0)
            jn *= s
            jp1 *= s
            norm *= s
            y0s *= s
            y1s *= s
        if n == 1:
            j1 = jp1
    j0 = jn
    norm += j0
    j0 = j0 / norm
    j1 = j1 / norm
    y0 = _TWO_OVER_PI * (lg * j0 - 2.0 * y0s / norm)
    y1 = _TWO_OVER_PI * (lg * j1 - j0 / z) + _TWO_OVER_PI * y1s / norm
    return j0, j1, y0, y1


def _asymptotic(z):
    out = []
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        total = np.ones(z.shape, dtype=complex)
        term = np.ones(z.shape, dtype=complex)
        for k in range(1, 40):
            term = term * 1j * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
            total += term
            if np.all(np.abs(term) < 1e-18):
                break
        # exp(i(z - nu pi/2 - pi/4)) without forming z - const in floating point
        phase = (np.cos(z) + 1j * np.sin(z)) * np.exp(-1j * math.pi * (0.5 * nu + 0.25))
        out.append(np.sqrt(_TWO_OVER_PI / z) * phase * total)
    return out[0], out[1]


def hankel01(z):
    """Return ``(H0(z), H1(z))``, the first-kind Hankel functions of order 0 and 1.

    Accepts scalars or arrays of real ``z > 0``.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(~(z > 0)):
        raise DomainError("hankel01 requires z > 0")
    h0 = np.empty(z.shape, dtype=complex)
    h1 = np.empty(z.shape, dtype=complex)
    lo = z <= SERIES_MAX
    hi = z >= ASYMPTOTIC_MIN
    mid = ~(lo | hi)
    if np.any(lo):
        j0, j1, y0, y1 = _series(z[lo])
        h0[lo] = j0 + 1j * y0
        h1[lo] = j1 + 1j * y1
    if np.any(mid):
        j0, j1, y0, y1 = _miller(z[mid])
        h0[mid] = j0 + 1j * y0
        h1[mid] = j1 + 1j * y1
    if np.any(hi):
        h0[hi], h1[hi] = _asymptotic(z[hi])
    if scalar:
        return h0[0], h1[0]
    return h0, h1


def hankel2_from01(z, h0, h1):
    """Order-2 Hankel function from the three-term recurrence."""
    return 2.0 * h1 / z - h0
