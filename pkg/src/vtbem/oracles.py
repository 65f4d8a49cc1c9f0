"""Reference computations that share no code with the assembly path.

Special functions come from :mod:`scipy.special`, kernel derivatives are
written out independently here, and integrals use :func:`scipy.integrate.quad`
or closed forms.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .assembly import BoundaryData
from .errors import ModeResonance, SourceInsideDomain
from .geometry import CIRC, STAR


# ---------------------------------------------------------------------------
# point-source field and derivatives
# ---------------------------------------------------------------------------
def point_source(k, x, x0):
    """``u = (i/4) H0(k|x - x0|)`` with gradient and Hessian in x.

    Returns ``(u, grad, hess)`` with shapes ``(n,)``, ``(n, 2)``, ``(n, 2, 2)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = x - np.asarray(x0, dtype=float)
    rho = np.hypot(r[:, 0], r[:, 1])
    z = k * rho
    h0 = special.hankel1(0, z)
    h1 = special.hankel1(1, z)
    h2 = special.hankel1(2, z)
    u = 0.25j * h0
    du = -0.25j * k * h1  # d/drho
    rh = r / rho[:, None]
    grad = du[:, None] * rh
    # d2/drho2 = -(ik^2/4) H1'(z) = -(ik^2/4)(H0 - H1/z)
    d2u = -0.25j * k * k * (h0 - h1 / z)
    hess = ((d2u - du / rho)[:, None, None] * rh[:, :, None] * rh[:, None, :]
            + (du / rho)[:, None, None] * np.eye(2)[None])
    return u, grad, hess


def winding_number(components, x):
    """Winding number of the node polygon of the concatenated components about each point."""
    poly = np.concatenate([c.x.reshape(-1, 2) for c in components])
    x = np.atleast_2d(x)
    d = poly[None, :, :] - x[:, None, :]
    ang = np.arctan2(d[..., 1], d[..., 0])
    dang = np.diff(np.concatenate([ang, ang[:, :1]], axis=1), axis=1)
    dang = (dang + np.pi) % (2 * np.pi) - np.pi
    return np.rint(dang.sum(axis=1) / (2 * np.pi)).astype(int)


def _signed_area(components):
    poly = np.concatenate([c.x.reshape(-1, 2) for c in components])
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def in_domain(components, x):
    """True where x lies in the solution domain (interior for ccw boundaries, exterior for cw)."""
    w = winding_number(components, x)
    return w == 1 if _signed_area(components) > 0 else w == 0


def manufactured_data(x0, components, params):
    """Boundary data generated by ``u*(x) = G(x, x0)`` for a source outside the domain.

    f = c1 u*_ss + c2 u* + du*/dn on star components (``u*_ss`` the second
    arclength derivative along the curve), g = a u* + du*/dn on circ components,
    ``h_plus = du*/ds`` at s = L and ``h_minus = -du*/ds`` at s = 0.
    """
    if np.any(in_domain(components, np.asarray(x0, float)[None])):
        raise SourceInsideDomain(f"source {tuple(x0)} lies inside the domain")
    k, c1, c2, a = params.k, params.c1, params.c2, params.robin
    vals, hp, hm = [], [], []
    for comp in components:
        x = comp.x.reshape(-1, 2)
        n = comp.normal.reshape(-1, 2)
        t = comp.tau.reshape(-1, 2)
        kap = comp.kappa.ravel()
        u, gr, H = point_source(k, x, x0)
        dn = np.einsum("ij,ij->i", gr, n)
        if comp.kind == STAR:
            utt = np.einsum("ni,nij,nj->n", t, H, t)
            uss = utt - kap * dn  # d/ds tau = -kappa n
            vals.append(c1 * uss + c2 * u + dn)
            if comp.closed:
                hp.append(None)
                hm.append(None)
            else:
                _, ge, _ = point_source(k, comp.endpoints, x0)
                hp.append(complex(ge[1] @ comp.end_tau[1]))
                hm.append(complex(-(ge[0] @ comp.end_tau[0])))
        else:
            vals.append(a * u + dn)
            hp.append(None)
            hm.append(None)
    return BoundaryData(vals, hp, hm)


# ---------------------------------------------------------------------------
# disk
# ---------------------------------------------------------------------------
def disk_fourier_solve(a, params, f_coeffs, modes):
    """Coefficients ``a_n`` of ``u = sum a_n J_n(kr) e^{in theta}`` on the disk of radius ``a``.

    ``f_coeffs[m]`` is the Fourier coefficient of the visco-thermal data for
    mode ``modes[m]``.
    """
    k, c1, c2 = params.k, params.c1, params.c2
    modes = np.asarray(modes)
    den = (c2 - c1 * modes ** 2 / a ** 2) * special.jv(modes, k * a) + k * special.jvp(modes, k * a)
    if np.any(np.abs(den) < 1e-12):
        raise ModeResonance(f"mode(s) {modes[np.abs(den) < 1e-12].tolist()} resonate")
    return np.asarray(f_coeffs) / den


def disk_field(coeffs, modes, k, x):
    x = np.atleast_2d(x)
    r = np.hypot(x[:, 0], x[:, 1])
    th = np.arctan2(x[:, 1], x[:, 0])
    modes = np.asarray(modes)
    return (coeffs[None, :] * special.jv(modes[None, :], k * r[:, None])
            * np.exp(1j * np.outer(th, modes))).sum(axis=1)


# ---------------------------------------------------------------------------
# offset-limit experiments
# ---------------------------------------------------------------------------
@dataclass
class OffsetCurve:
    """Nodes ``x - h n_x`` of a parametrized closed curve with their own frame."""

    curve: object
    h: float
    t: np.ndarray
    x: np.ndarray = field(init=False)
    kappa: np.ndarray = field(init=False)
    speed: np.ndarray = field(init=False)

    def __post_init__(self):
        p, d1, d2, _ = self.curve.derivs(self.t)
        sp = np.hypot(d1[:, 0], d1[:, 1])
        tau = d1 / sp[:, None]
        n = np.stack([tau[:, 1], -tau[:, 0]], axis=-1)
        kap = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / sp ** 3
        self.x = p - self.h * n
        # parallel curve: |x_h'| = |x'| (1 + h kappa), kappa_h = kappa / (1 + h kappa)
        self.speed = sp * (1.0 + self.h * kap)
        self.kappa = kap / (1.0 + self.h * kap)
        if np.any(self.speed <= 0):
            raise ValueError("offset too large: parallel curve folds")


def _geom(curve, t):
    p, d1, d2, _ = curve.derivs(np.atleast_1d(t))
    sp = np.hypot(d1[:, 0], d1[:, 1])
    tau = d1 / sp[:, None]
    n = np.stack([tau[:, 1], -tau[:, 0]], axis=-1)
    return p, n, sp


def _quad_closed(func, t0, epsabs=1e-13):
    """Integral over t in [0, 1] of func(t) with a breakpoint at t0 (periodic)."""
    a, b = t0, t0 + 1.0
    pts = [a + 1e-6, a + 1e-3, a + 0.1, b - 0.1, b - 1e-3, b - 1e-6]
    total = 0.0
    edges = [a] + pts + [b]
    with warnings.catch_warnings():
        # quadpack flags roundoff at the requested 1e-13; the results are still at that level
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += integrate.quad(lambda t: func(t % 1.0), lo, hi, epsabs=epsabs, epsrel=1e-13,
                                    limit=400, complex_func=True)[0]
    return total


def _single_layer(curve, k, sigma, x):
    def f(t):
        p, n, sp = _geom(curve, t)
        r = np.hypot(*(x - p[0]))
        return 0.25j * special.hankel1(0, k * r) * sigma(t) * sp[0]
    return f


def single_layer_offset_limit(curve, k, sigma, hs, nodes=64):
    """Second arclength derivative of the single layer on parallel curves versus on the curve.

    Returns the max-norm differences for each offset in ``hs`` (h = 0 is the
    reference) and the fitted order of decay.
    """
    t = np.arange(nodes) / nodes
    freq = np.fft.fftfreq(nodes, d=1.0 / nodes) * 2j * np.pi

    def lb(values, speed):
        d1 = np.fft.ifft(freq * np.fft.fft(values)) / speed
        return np.fft.ifft(freq * np.fft.fft(d1)) / speed

    def trace(h):
        oc = OffsetCurve(curve, h, t)
        vals = np.array([_quad_closed(_single_layer(curve, k, sigma, oc.x[i]), t[i]) for i in range(nodes)])
        return lb(vals, oc.speed)

    ref = trace(0.0)
    diffs = np.array([np.max(np.abs(trace(h) - ref)) for h in hs])
    order = np.polyfit(np.log(hs), np.log(diffs), 1)[0]
    return dict(h=np.asarray(hs), diff=diffs, order=order)


def _kernel_tpp(x, nx, y, ny):
    # second x-normal derivative of d/dn_y (rho^2 log rho), written out directly
    r = x - y
    rho2 = r @ r
    P = nx @ r
    Q = ny @ r
    return -(2.0 * Q + 4.0 * (nx @ ny) * P) / rho2 + 4.0 * P * P * Q / rho2 ** 2


def _kernel_dpp(k, x, nx, y, ny):
    # d^2/dn_x^2 d/dn_y G from the third derivative tensor of g(rho)
    r = x - y
    rho = math.sqrt(r @ r)
    z = k * rho
    h1 = special.hankel1(1, z)
    h2 = special.hankel1(2, z)
    A = 0.25j * k * k * h2
    g3 = 0.25j * k ** 3 * h1 - 0.25j * k * k * h2 / rho
    P = (nx @ r) / rho
    Q = (ny @ r) / rho
    return -(g3 * P * P * Q + (A / rho) * (Q + 2.0 * (nx @ ny) * P - 3.0 * P * P * Q))


def _richardson(vals):
    """Extrapolate values at h, h/2, h/4 assuming an expansion in powers of h."""
    v0, v1, v2 = vals
    a = 2 * v1 - v0
    b = 2 * v2 - v1
    return (4 * b - a) / 3


def tpp_jump_constant(curve, t0=0.0, h0=None):
    """Extrapolated jump of the T'' potential of sigma = 1 at curve(t0)."""
    p0, n0, _ = _geom(curve, t0)
    p0, n0 = p0[0], n0[0]
    if h0 is None:
        h0 = 1e-2 * _diameter(curve)

    def T(x):
        def f(t):
            p, n, sp = _geom(curve, t)
            return _kernel_tpp(x, n0, p[0], n[0]) * sp[0]
        return _quad_closed(f, t0).real

    on = _tpp_on_surface(curve, t0)
    vals = [T(p0 - h * n0) - on for h in (h0, h0 / 2, h0 / 4)]
    return dict(values=vals, limit=_richardson(vals), target=4 * math.pi)


def _tpp_on_surface(curve, t0):
    p0, n0, _ = _geom(curve, t0)
    p0, n0 = p0[0], n0[0]

    def f(t):
        if abs(((t - t0 + 0.5) % 1.0) - 0.5) < 1e-12:
            return 0.0
        p, n, sp = _geom(curve, t)
        return _kernel_tpp(p0, n0, p[0], n[0]) * sp[0]

    return _quad_closed(f, t0).real


def _diameter(curve):
    p = curve(np.linspace(0, 1, 257))
    d = p[:, None, :] - p[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def dpp_jump_coefficients(k, modes=(0, 1, 2, 3, 4), radius=1.0, h0=None):
    """Fit ``lim [D''(inside) - D''(outside)] = alpha Lap_G sigma + beta sigma`` on a circle.

    Uses sigma = e^{in theta}; the one-sided identity coefficients are
    ``alpha / 2`` and ``beta / 2`` (expected 1/2 and k^2/2).
    """
    from .geometry import circle

    curve = circle(radius=radius)
    if h0 is None:
        h0 = 1e-2 * 2 * radius
    p0, n0, _ = _geom(curve, 0.0)
    p0, n0 = p0[0], n0[0]
    jumps = []
    for m in modes:
        def D2(x, m=m):
            def f(t):
                p, n, sp = _geom(curve, t)
                return _kernel_dpp(k, x, n0, p[0], n[0]) * np.exp(2j * np.pi * m * t) * sp[0]
            return _quad_closed(f, 0.0, epsabs=1e-12)
        vals = [D2(p0 - h * n0) - D2(p0 + h * n0) for h in (h0, h0 / 2, h0 / 4)]
        jumps.append(_richardson(vals))
    jumps = np.array(jumps)
    lap = -(np.asarray(modes, float) / radius) ** 2
    A = np.stack([lap, np.ones_like(lap)], axis=1)
    coef, *_ = np.linalg.lstsq(A.astype(complex), jumps, rcond=None)
    return dict(modes=np.asarray(modes), jumps=jumps, laplace_coeff=coef[0] / 2, identity_coeff=coef[1] / 2,
                expected=(0.5, k * k / 2))


def offset_limit_test(curve, k, sigma, hs, nodes=32, t0=0.1):
    """Run the three off-surface limit experiments on a closed curve.

    ``sigma`` is a callable of the curve parameter. Returns a dict with the
    single-layer Laplace-Beltrami comparison (``offset_limit``), the T'' jump constant
    (``tpp``) and, when the curve is a circle, the D'' jump coefficients
    (``dpp``).
    """
    out = dict(offset_limit=single_layer_offset_limit(curve, k, sigma, hs, nodes=nodes),
               tpp=tpp_jump_constant(curve, t0))
    if curve.kind == "circle":
        out["dpp"] = dpp_jump_coefficients(k, radius=curve.params.get("radius", 1.0))
    return out


# ---------------------------------------------------------------------------
# corner kernel scans
# ---------------------------------------------------------------------------
def _frame_at_arclength(comp, corner, s):
    """Point, normal and tangent on ``comp`` at arclength ``s`` from ``corner``."""
    from .geometry import _param_for_arclength

    b = comp.breaks
    if corner == "start":
        t = _param_for_arclength(comp.curve, b[0], b[-1], np.atleast_1d(s))
    else:
        t = _param_for_arclength(comp.curve, b[0], b[-1], comp.length - np.atleast_1d(s))
    p, d1, _, _ = comp.curve.derivs(t)
    sp = np.hypot(d1[:, 0], d1[:, 1])
    tau = d1 / sp[:, None]
    n = np.stack([tau[:, 1], -tau[:, 0]], axis=-1)
    return p, n, tau


def _reflect(p0, nh, x):
    R = 2.0 * np.outer(nh, nh) - np.eye(2)
    return p0 + (x - p0) @ R.T, R


def corner_kernel_scan(star, star_corner, circ, circ_corner, fins, k=1.0, levels=range(4, 21), ell0=None):
    """Kernel magnitudes along the diagonal approach ``s = t = 2^-j ell0`` to a corner.

    Two kernels are sampled: the normal-normal derivative of G from a star
    source at arclength s to a circ target at t (with the even star fin when
    ``fins``), and the tangential derivative of G at a star target at s from a
    circ source at t (with the odd circ fin when ``fins``).

    Returns dict with ``eps``, magnitudes and fitted log-log slopes over the
    finest half of the levels.
    """
    if ell0 is None:
        ell0 = min(star.length, circ.length) / 4
    eps = np.array([ell0 * 2.0 ** -j for j in levels])
    ps, ns, ts = _frame_at_arclength(star, star_corner, eps)
    pc, nc, tc = _frame_at_arclength(circ, circ_corner, eps)
    i_s = 0 if star_corner == "start" else 1
    i_c = 0 if circ_corner == "start" else 1
    p0 = star.endpoints[i_s]
    dpp, dts = [], []
    for m in range(len(eps)):
        # star source -> circ target
        val = _dnn(k, pc[m], nc[m], ps[m], ns[m])
        if fins:
            yf, R = _reflect(p0, star.end_normal[i_s], ps[m])
            val += _dnn(k, pc[m], nc[m], yf, R @ ns[m])
        dpp.append(abs(val))
        # circ source -> star target, tangential derivative at the target
        val = _dtau(k, ps[m], ts[m], pc[m])
        if fins:
            yf, _ = _reflect(circ.endpoints[i_c], circ.end_normal[i_c], pc[m])
            val -= _dtau(k, ps[m], ts[m], yf)
        dts.append(abs(val))
    dpp, dts = np.array(dpp), np.array(dts)
    half = len(eps) // 2
    slope = lambda v: float(np.polyfit(np.log(eps[half:]), np.log(v[half:]), 1)[0])
    return dict(eps=eps, dprime=dpp, dtau_s=dts, slope_dprime=slope(dpp), slope_dtau_s=slope(dts))


def _dnn(k, x, nx, y, ny):
    r = x - y
    rho = math.sqrt(r @ r)
    z = k * rho
    h1 = special.hankel1(1, z)
    h2 = special.hankel1(2, z)
    A = 0.25j * k * k * h2
    B = -0.25j * k * h1 / rho
    return -(A * (nx @ r) * (ny @ r) / rho ** 2 + B * (nx @ ny))


def _dtau(k, x, tx, y):
    r = x - y
    rho = math.sqrt(r @ r)
    return -0.25j * k * special.hankel1(1, k * rho) * (tx @ r) / rho
