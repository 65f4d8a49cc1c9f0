"""Helmholtz Green's function and its normal-derivative kernels in 2D.

``G(x, y) = (i/4) H0(k|x - y|)``. With ``r = x - y``, ``rho = |r|`` and
``g(rho) = G``, the x-derivatives are

* gradient: ``g'(rho) r/rho`` with ``g' = -(ik/4) H1``,
* Hessian: ``A rr^T/rho^2 + B I`` with ``A = (ik^2/4) H2``, ``B = g'/rho``.

Elementwise functions below take arrays of equal leading shape; points are
``(..., 2)`` arrays.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FinitePartKernel
from .geometry import gauss_legendre
from .special import hankel01, hankel2_from01

EPS_SWITCH = 1e-2

# kernel tags understood by the quadrature module
S, D, SP, DP, C, TX = "S", "D", "Sp", "Dp", "C", "Tx"
LOG_KERNELS = frozenset({S})
FINITE_PART = frozenset({"Dpp", "Spp"})
ALL = (S, D, SP, DP, C, TX)


def _dot(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]


def _radial(k, rho):
    z = k * rho
    h0, h1 = hankel01(z)
    h2 = hankel2_from01(z, h0, h1)
    g = 0.25j * h0
    gp = -0.25j * k * h1
    A = 0.25j * k * k * h2
    return g, gp, A, h1, h2


def greens(k, x, y):
    """Free-space Green's function ``(i/4) H0(k|x - y|)``."""
    r = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    rho = np.hypot(r[..., 0], r[..., 1])
    if np.any(rho == 0):
        raise DomainError("Green's function evaluated at coincident points")
    h0, _ = hankel01(k * rho)
    return 0.25j * h0


def evaluate(names, k, x, nx, y, ny, tx=None, r=None):
    """Evaluate several kernels at once for target/source pairs.

    Parameters
    ----------
    names : iterable of str
        Any of ``S`` (G), ``D`` (d/dn_y G), ``Sp`` (d/dn_x G), ``Dp``
        (d/dn_x d/dn_y G), ``C`` (d/dn_x d/dn_y G + d^2/dn_x^2 G) and ``Tx``
        (d/dtau_x G, requires ``tx``).
    r : array, optional
        Precomputed ``x - y``, used near the diagonal where subtracting
        positions loses digits.

    Returns
    -------
    dict mapping each name to a complex array.
    """
    names = tuple(names)
    bad = FINITE_PART.intersection(names)
    if bad:
        raise FinitePartKernel(f"finite-part kernel(s) {sorted(bad)} cannot be integrated alone")
    if r is None:
        r = x - y
    rho = np.hypot(r[..., 0], r[..., 1])
    if np.any(rho == 0):
        raise DomainError("kernel evaluated at coincident points")
    g, gp, A, _, _ = _radial(k, rho)
    B = gp / rho
    out = {}
    P = _dot(nx, r) / rho if nx is not None else None
    Q = _dot(ny, r) / rho if ny is not None else None
    for name in names:
        if name == S:
            out[name] = g
        elif name == D:
            out[name] = -gp * Q
        elif name == SP:
            out[name] = gp * P
        elif name == DP:
            out[name] = -(A * P * Q + B * _dot(nx, ny))
        elif name == C:
            dn = nx - ny
            out[name] = A * P * (P - Q) + 0.5 * B * _dot(dn, dn)
        elif name == TX:
            out[name] = gp * _dot(tx, r) / rho
        else:
            raise ValueError(f"unknown kernel {name!r}")
    return out


@dataclass
class KernelPoint:
    """Target/source pair for pointwise kernel evaluation.

    ``arclength`` optionally gives the signed arclength from x to y along the
    curve; the local series branch of the combined kernel uses it instead of
    estimating it from the chord. ``chord`` optionally gives ``x - y``
    computed without cancellation (e.g. by integrating the curve tangent);
    when present the series branch takes its invariants from it.
    """

    x: np.ndarray
    nx: np.ndarray
    kappa_x: float
    y: np.ndarray
    ny: np.ndarray
    kappa_y: float
    k: float
    arclength: float = None
    chord: np.ndarray = None


def _pt_arrays(pt):
    return (np.asarray(pt.x, float), np.asarray(pt.nx, float), np.asarray(pt.y, float), np.asarray(pt.ny, float))


def kernel_D(pt):
    x, nx, y, ny = _pt_arrays(pt)
    return complex(evaluate([D], pt.k, x, nx, y, ny)[D])


def kernel_Sprime(pt):
    x, nx, y, ny = _pt_arrays(pt)
    return complex(evaluate([SP], pt.k, x, nx, y, ny)[SP])


def kernel_Dprime(pt):
    x, nx, y, ny = _pt_arrays(pt)
    return complex(evaluate([DP], pt.k, x, nx, y, ny)[DP])


def _combined_from_invariants(k, rho, P, Q, one_minus_cos):
    """Combined kernel from the scalar invariants n_x.r, n_y.r (unnormalized) and 1 - n_x.n_y."""
    g, gp, A, _, _ = _radial(k, rho)
    B = gp / rho
    return A * P * (P - Q) / rho ** 2 + B * one_minus_cos


def local_invariants(kappa_x, kappa_y, s):
    """Chord invariants of a curve piece whose curvature varies linearly in arclength.

    The piece starts at x (arclength 0) and ends at y (arclength ``s``). In the
    frame ``e1 = tau_x``, ``e2 = -n_x`` the tangent angle is
    ``theta(u) = kappa_x u + (kappa_y - kappa_x) u^2 / (2 s)`` and
    ``y - x = int_0^s (cos theta, sin theta) du``. Returns
    ``(rho, n_x.(x-y), n_y.(x-y), 1 - n_x.n_y)`` computed without cancellation.
    """
    u, w = gauss_legendre(24)
    uu = 0.5 * s * (u + 1.0)
    th = kappa_x * uu + (kappa_y - kappa_x) * uu * uu / (2.0 * s)
    X = 0.5 * s * np.sum(w * np.cos(th))
    Y = 0.5 * s * np.sum(w * np.sin(th))
    dth = 0.5 * s * (kappa_x + kappa_y)
    rho = math.hypot(X, Y)
    P = Y
    Q = -X * math.sin(dth) + Y * math.cos(dth)
    omc = 2.0 * math.sin(0.5 * dth) ** 2
    return rho, P, Q, omc


def kernel_combined_DpSpp(pt, eps_switch=EPS_SWITCH):
    """Value of d/dn_x d/dn_y G + d^2/dn_x^2 G for a pair of points on one curve.

    For ``k rho >= eps_switch`` the analytic formula is used. Below it the
    chord invariants come from :func:`local_invariants`, a curvature-linear
    local model of the curve between x and y, which avoids the cancellation in
    ``n . (x - y)``; an exact ``chord`` on the kernel point takes precedence
    over the model. The diagonal (x = y) returns the limit ``kappa^2 / (4 pi)``.
    """
    x, nx, y, ny = _pt_arrays(pt)
    k = pt.k
    r = x - y
    rho = math.hypot(r[0], r[1])
    if rho == 0.0 and not pt.arclength:
        return complex(0.25 * pt.kappa_x ** 2 / math.pi)
    if k * rho >= eps_switch:
        return complex(evaluate([C], k, x, nx, y, ny)[C])
    if pt.chord is not None:
        r = np.asarray(pt.chord, float)
        rho_c = math.hypot(r[0], r[1])
        dth = math.atan2(nx[0] * ny[1] - nx[1] * ny[0], nx[0] * ny[0] + nx[1] * ny[1])
        omc = 2.0 * math.sin(0.5 * dth) ** 2
        return complex(_combined_from_invariants(k, rho_c, nx @ r, ny @ r, omc))
    s = pt.arclength
    if s is None:
        # invert rho = s (1 - kappa^2 s^2 / 24 + ...)
        kap = 0.5 * (pt.kappa_x + pt.kappa_y)
        s = rho * (1.0 + kap * kap * rho * rho / 24.0)
    s = abs(s)
    rho_m, P, Q, omc = local_invariants(pt.kappa_x, pt.kappa_y, s)
    return complex(_combined_from_invariants(k, rho_m, P, Q, omc))
