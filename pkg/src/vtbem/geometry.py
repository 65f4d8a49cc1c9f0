"""Panelized boundary components, corner refinement and image fins.

Curves are parametrized on ``t in [0, 1]`` with analytic first, second and
third derivatives. A component is split into panels in ``t``; each panel
carries ``order`` Gauss-Legendre nodes. Orientation convention: the outward
normal of the solution domain is the unit tangent rotated by -pi/2, and the
signed curvature is ``kappa = d(theta)/ds`` so that a counter-clockwise circle
of radius R has ``kappa = 1/R``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import DegenerateCurve, FinTooLong, GeometryViolation

STAR = "star"  # visco-thermal boundary
CIRC = "circ"  # Robin / artificial boundary

DEFAULT_ORDER = 16


# ---------------------------------------------------------------------------
# Gauss-Legendre helpers
# ---------------------------------------------------------------------------
_GL_CACHE = {}


def gauss_legendre(n):
    """Nodes and weights on [-1, 1] (cached)."""
    if n not in _GL_CACHE:
        x, w = npleg.leggauss(n)
        bw = _bary_weights(x)
        _GL_CACHE[n] = (x, w, bw)
    x, w, _ = _GL_CACHE[n]
    return x, w


def _bary_weights(x):
    n = len(x)
    bw = np.ones(n)
    for j in range(n):
        d = x[j] - np.delete(x, j)
        bw[j] = 1.0 / np.prod(d * 2.0)  # scaled to avoid underflow for large n
    return bw


def bary_weights(n):
    gauss_legendre(n)
    return _GL_CACHE[n][2]


def interp_matrix(xnodes, bw, xeval):
    """Barycentric Lagrange interpolation matrix ``P[q, j] = L_j(xeval[q])``."""
    xeval = np.asarray(xeval, dtype=float)
    diff = xeval[:, None] - xnodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    tmp = bw[None, :] / diff
    P = tmp / tmp.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    if np.any(rows):
        P[rows] = exact[rows].astype(float)
    return P


def diff_matrix(n):
    """Spectral differentiation matrix on the n Gauss-Legendre nodes of [-1, 1]."""
    x, _ = gauss_legendre(n)
    bw = bary_weights(n)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (bw[j] / bw[i]) / (x[i] - x[j])
        D[i, i] = -np.sum(D[i])
    return D


def endpoint_diff_rows(n):
    """Rows ``(r_minus, r_plus)`` with ``r @ values`` = derivative of the interpolant at u = -1, +1."""
    x, _ = gauss_legendre(n)
    V = npleg.legvander(x, n - 1)
    Vinv = np.linalg.inv(V)
    rows = []
    for u in (-1.0, 1.0):
        # derivative of each Legendre polynomial at u
        dP = np.array([npleg.legval(u, npleg.legder(np.eye(n)[m])) for m in range(n)])
        rows.append(dP @ Vinv)
    return rows[0], rows[1]


def integration_matrix(n):
    """``I[i, j]``: integral from -1 to x_i of the interpolant through the nodes."""
    x, _ = gauss_legendre(n)
    V = npleg.legvander(x, n - 1)
    Vinv = np.linalg.inv(V)
    I = np.zeros((n, n))
    for m in range(n):
        c = npleg.legint(np.eye(n)[m], lbnd=-1)
        I[:, m] = npleg.legval(x, c)
    return I @ Vinv


# ---------------------------------------------------------------------------
# Curve specifications
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CurveSpec:
    """Parametric curve ``p(t)``, ``t in [0, 1]``.

    ``derivs(t)`` returns ``(p, p', p'', p''')`` each of shape ``(len(t), 2)``.
    """

    kind: str
    derivs: object = field(repr=False, compare=False)
    closed: bool = False
    params: dict = field(default_factory=dict)

    def __call__(self, t):
        return self.derivs(np.asarray(t, dtype=float))[0]

    def reversed(self):
        f = self.derivs

        def rev(t):
            p, d1, d2, d3 = f(1.0 - np.asarray(t, dtype=float))
            return p, -d1, d2, -d3

        return CurveSpec(self.kind, rev, self.closed, dict(self.params, reversed=not self.params.get("reversed", False)))


def _stack(a, b):
    return np.stack([a, b], axis=-1)


def circle(center=(0.0, 0.0), radius=1.0, theta0=0.0, clockwise=False):
    cx, cy = center
    sgn = -1.0 if clockwise else 1.0
    w = sgn * 2 * math.pi

    def derivs(t):
        th = theta0 + w * t
        c, s = np.cos(th), np.sin(th)
        R = radius
        return (_stack(cx + R * c, cy + R * s), _stack(-R * w * s, R * w * c),
                _stack(-R * w * w * c, -R * w * w * s), _stack(R * w ** 3 * s, -R * w ** 3 * c))

    return CurveSpec("circle", derivs, True, dict(center=tuple(center), radius=radius, theta0=theta0, clockwise=clockwise))


def arc(center, radius, theta0, theta1):
    cx, cy = center
    w = theta1 - theta0

    def derivs(t):
        th = theta0 + w * t
        c, s = np.cos(th), np.sin(th)
        R = radius
        return (_stack(cx + R * c, cy + R * s), _stack(-R * w * s, R * w * c),
                _stack(-R * w * w * c, -R * w * w * s), _stack(R * w ** 3 * s, -R * w ** 3 * c))

    return CurveSpec("arc", derivs, False, dict(center=tuple(center), radius=radius, theta0=theta0, theta1=theta1))


def line(p0, p1):
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    d = p1 - p0

    def derivs(t):
        z = np.zeros((len(t), 2))
        # anchor at the nearer endpoint so corner offsets are exact
        p = np.where((t < 0.5)[:, None], p0 + t[:, None] * d, p1 - (1.0 - t)[:, None] * d)
        return p, np.broadcast_to(d, (len(t), 2)).copy(), z, z.copy()

    return CurveSpec("line", derivs, False, dict(p0=tuple(p0), p1=tuple(p1)))


def star(center=(0.0, 0.0), radius=1.0, amplitude=0.1, lobes=5, clockwise=False):
    """Smooth star-shaped curve ``r(theta) = radius (1 + amplitude cos(lobes theta))``."""
    cx, cy = center
    sgn = -1.0 if clockwise else 1.0
    w = sgn * 2 * math.pi
    m = lobes

    def derivs(t):
        th = w * t
        R = radius * (1 + amplitude * np.cos(m * th))
        R1 = -radius * amplitude * m * np.sin(m * th)
        R2 = -radius * amplitude * m * m * np.cos(m * th)
        R3 = radius * amplitude * m ** 3 * np.sin(m * th)
        c, s = np.cos(th), np.sin(th)
        x = R * c
        y = R * s
        x1 = R1 * c - R * s
        y1 = R1 * s + R * c
        x2 = R2 * c - 2 * R1 * s - R * c
        y2 = R2 * s + 2 * R1 * c - R * s
        x3 = R3 * c - 3 * R2 * s - 3 * R1 * c + R * s
        y3 = R3 * s + 3 * R2 * c - 3 * R1 * s - R * c
        return (_stack(cx + x, cy + y), w * _stack(x1, y1), w * w * _stack(x2, y2), w ** 3 * _stack(x3, y3))

    return CurveSpec("star", derivs, True, dict(center=tuple(center), radius=radius, amplitude=amplitude,
                                                lobes=lobes, clockwise=clockwise))


def sine_wall(x0, x1, y0, amplitude, reverse=False):
    """Graph ``y = y0 + amplitude sin^2(pi (x - x0) / (x1 - x0))``; horizontal at both ends."""
    Lx = x1 - x0
    q = math.pi / Lx

    def derivs(t):
        x = x0 + Lx * t
        ph = 2 * q * (x - x0)
        y = y0 + amplitude * np.sin(0.5 * ph) ** 2  # exact relative accuracy near the ends
        y1 = amplitude * q * np.sin(ph) * Lx
        y2 = 2 * amplitude * q * q * np.cos(ph) * Lx ** 2
        y3 = -4 * amplitude * q ** 3 * np.sin(ph) * Lx ** 3
        n = len(t)
        z = np.zeros(n)
        return (_stack(x, y), _stack(np.full(n, Lx), y1), _stack(z, y2), _stack(z, y3))

    spec = CurveSpec("sine-wall", derivs, False, dict(x0=x0, x1=x1, y0=y0, amplitude=amplitude))
    return spec.reversed() if reverse else spec


def cubic_spline(points, start_tangent=None, end_tangent=None):
    """Clamped cubic spline through ``points`` with uniform knots in t.

    Only C^2 across knots, so panels straddling a knot lose spectral accuracy.
    """
    from scipy.interpolate import CubicSpline

    pts = np.asarray(points, dtype=float)
    knots = np.linspace(0.0, 1.0, len(pts))
    if start_tangent is None or end_tangent is None:
        bc = "not-a-knot"
    else:
        bc = ((1, np.asarray(start_tangent, float)), (1, np.asarray(end_tangent, float)))
    cs = CubicSpline(knots, pts, bc_type=bc, axis=0)
    d1, d2, d3 = cs.derivative(1), cs.derivative(2), cs.derivative(3)

    def derivs(t):
        return cs(t), d1(t), d2(t), d3(t)

    return CurveSpec("cubic-spline", derivs, False, dict(points=pts.tolist()))


def subcurve(spec, a, b):
    """The part of ``spec`` with parameter in [a, b], reparametrised over [0, 1]."""
    if not 0.0 <= a < b <= 1.0:
        raise ValueError("need 0 <= a < b <= 1")
    w = b - a
    f = spec.derivs

    def derivs(t):
        p, d1, d2, d3 = f(a + w * np.asarray(t, dtype=float))
        return p, w * d1, w * w * d2, w ** 3 * d3

    return CurveSpec(spec.kind, derivs, False, dict(spec.params, sub=(a, b)))


def fourier_curve(coeffs, modes):
    """Closed curve ``x + iy = sum_n c_n exp(2 pi i n t)`` over integer ``modes``."""
    c = np.asarray(coeffs, dtype=complex)
    n = np.asarray(modes, dtype=float)
    scaled = [c * (2j * math.pi * n) ** m for m in range(4)]

    def derivs(t):
        E = np.exp(2j * math.pi * np.outer(t, n))
        return tuple(_stack(z.real, z.imag) for z in (E @ cm for cm in scaled))

    return CurveSpec("fourier", derivs, True, dict(modes=len(n)))


def analytic(p, dp, ddp, dddp, closed=False):
    """Wrap user callables ``p(t), p'(t), p''(t), p'''(t)`` returning ``(n, 2)`` arrays."""

    def derivs(t):
        return p(t), dp(t), ddp(t), dddp(t)

    return CurveSpec("analytic", derivs, closed, {})


# ---------------------------------------------------------------------------
# Geometry evaluation
# ---------------------------------------------------------------------------
def frame_from_derivs(d1, d2):
    speed = np.hypot(d1[:, 0], d1[:, 1])
    with np.errstate(invalid="ignore", divide="ignore"):  # degenerate curves are rejected by the caller
        tau = d1 / speed[:, None]
        kappa = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed ** 3
    normal = np.stack([tau[:, 1], -tau[:, 0]], axis=-1)
    return speed, tau, normal, kappa


@dataclass
class Fin:
    """Mirror image of the panels of ``base`` within arclength ``length`` of one endpoint.

    Fin node j is the reflection of base node ``node_index[j]`` across the line
    through the corner spanned by the endpoint normal. ``parity`` is +1 for an
    even density extension and -1 for an odd one.
    """

    base: "BoundaryComponent"
    corner: str  # "start" or "end"
    parity: int
    length: float
    panels: np.ndarray  # base panel indices that are mirrored
    p0: np.ndarray
    nhat: np.ndarray

    @property
    def reflection(self):
        return 2.0 * np.outer(self.nhat, self.nhat) - np.eye(2)

    def reflect(self, pts):
        return self.p0 + (pts - self.p0) @ self.reflection.T

    def eval_geom(self, t):
        g = self.base.eval_geom(t)
        R = self.reflection
        g["x"] = self.reflect(g["x"])
        g["normal"] = g["normal"] @ R.T
        g["tau"] = g["tau"] @ R.T
        return g

    @property
    def node_index(self):
        p = self.base.order
        return (self.panels[:, None] * p + np.arange(p)[None, :]).ravel()

    @property
    def x(self):
        return self.reflect(self.base.x.reshape(-1, 2)[self.node_index])

    @property
    def normal(self):
        return self.base.normal.reshape(-1, 2)[self.node_index] @ self.reflection.T

    @property
    def weights(self):
        return self.base.weights.ravel()[self.node_index]


@dataclass
class BoundaryComponent:
    """A smooth curve split into panels of Gauss-Legendre nodes.

    Node arrays have shape ``(npanels, order)`` (or ``(npanels, order, 2)``);
    ``weights`` are arclength quadrature weights.
    """

    curve: CurveSpec
    kind: str = STAR
    breaks: np.ndarray = None
    order: int = DEFAULT_ORDER
    name: str = ""
    fins: list = field(default_factory=list)
    refined: dict = field(default_factory=dict)  # corner -> (depth, original corner panel length)

    def __post_init__(self):
        self.breaks = np.asarray(self.breaks, dtype=float)
        self._build()

    @property
    def closed(self):
        return self.curve.closed

    def _build(self):
        p = self.order
        u, w = gauss_legendre(p)
        t0 = self.breaks[:-1]
        t1 = self.breaks[1:]
        half = 0.5 * (t1 - t0)
        t = (t0[:, None] + half[:, None] * (u[None, :] + 1.0))
        g = self.eval_geom(t.ravel())
        npan = len(t0)
        self.t = t
        self.u = u
        self.dtdu = half
        self.x = g["x"].reshape(npan, p, 2)
        self.tau = g["tau"].reshape(npan, p, 2)
        self.normal = g["normal"].reshape(npan, p, 2)
        self.kappa = g["kappa"].reshape(npan, p)
        self.speed = g["speed"].reshape(npan, p)
        if np.any(self.speed <= 0) or not np.all(np.isfinite(self.speed)):
            raise DegenerateCurve(f"curve {self.curve.kind!r} has vanishing |p'|")
        self.weights = self.speed * half[:, None] * w[None, :]
        self.panel_length = self.weights.sum(axis=1)
        self.s_break = np.concatenate([[0.0], np.cumsum(self.panel_length)])
        I = integration_matrix(p)
        self.s = self.s_break[:-1, None] + (self.speed * half[:, None]) @ I.T
        self.length = float(self.s_break[-1])
        ends = self.curve.derivs(np.array([self.breaks[0], self.breaks[-1]]))
        self.endpoints = ends[0]
        sp, tau, nrm, kap = frame_from_derivs(ends[1], ends[2])
        self.end_tau = tau
        self.end_normal = nrm
        self.end_kappa = kap
        self.end_speed = sp

    def eval_geom(self, t):
        p, d1, d2, _ = self.curve.derivs(np.asarray(t, dtype=float))
        speed, tau, normal, kappa = frame_from_derivs(d1, d2)
        return dict(x=p, tau=tau, normal=normal, kappa=kappa, speed=speed)

    # convenience views ------------------------------------------------------
    @property
    def npanels(self):
        return len(self.breaks) - 1

    @property
    def n(self):
        return self.npanels * self.order

    @property
    def panels(self):
        return [Panel(self, i) for i in range(self.npanels)]

    def nodes(self):
        return self.x.reshape(-1, 2)

    def corner_point(self, corner):
        return self.endpoints[0] if corner == "start" else self.endpoints[1]

    def with_breaks(self, breaks):
        comp = BoundaryComponent(self.curve, self.kind, breaks, self.order, self.name)
        comp.refined = dict(self.refined)
        return comp

    def arclength_at(self, t):
        """Arclength from the start of the curve to parameter values ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, self.npanels - 1)
        u, w = gauss_legendre(self.order)
        a = self.breaks[idx]
        half = 0.5 * (t - a)
        tq = a[:, None] + half[:, None] * (u[None, :] + 1.0)
        sp = self.eval_geom(tq.ravel())["speed"].reshape(tq.shape)
        return self.s_break[idx] + half * (sp @ w)


@dataclass
class Panel:
    """View of one panel of a component."""

    comp: BoundaryComponent
    index: int

    @property
    def x(self):
        return self.comp.x[self.index]

    @property
    def tau(self):
        return self.comp.tau[self.index]

    @property
    def normal(self):
        return self.comp.normal[self.index]

    @property
    def kappa(self):
        return self.comp.kappa[self.index]

    @property
    def weights(self):
        return self.comp.weights[self.index]

    @property
    def length(self):
        return self.comp.panel_length[self.index]

    @property
    def s_offset(self):
        return self.comp.s_break[self.index]

    @property
    def diff_matrix(self):
        D = diff_matrix(self.comp.order)
        return D / (self.comp.speed[self.index] * self.comp.dtdu[self.index])[:, None]

    def interp_matrix(self, u):
        x, _ = gauss_legendre(self.comp.order)
        return interp_matrix(x, bary_weights(self.comp.order), u)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------
def _arclength_table(curve, ta, tb):
    """Piece edges on [ta, tb] and cumulative arclength at each edge (24-point composite Gauss)."""
    u, w = gauss_legendre(24)

    def speed(tq):
        d1 = curve.derivs(tq.ravel())[1]
        return np.hypot(d1[:, 0], d1[:, 1]).reshape(tq.shape)

    def piece_lengths(edges):
        half = 0.5 * np.diff(edges)
        return half * (speed(edges[:-1, None] + half[:, None] * (u + 1.0)) @ w)

    # composite rule on [ta, tb], doubled until the total settles
    edges = np.array([ta, tb])
    lengths = piece_lengths(edges)
    while len(lengths) < 4096:
        fine = np.linspace(ta, tb, 2 * len(lengths) + 1)
        prev, lengths = lengths, piece_lengths(fine)
        edges = fine
        if abs(lengths.sum() - prev.sum()) <= 1e-14 * lengths.sum():
            break
    return edges, np.concatenate([[0.0], np.cumsum(lengths)])


def _param_for_arclength(curve, ta, tb, targets, table=None):
    """Parameters in [ta, tb] at which arclength from ta equals ``targets`` (Newton + bisection)."""
    u, w = gauss_legendre(24)
    edges, cum = table if table is not None else _arclength_table(curve, ta, tb)

    def arcl(t):
        j = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, len(edges) - 2)
        half = 0.5 * (t - edges[j])
        tq = edges[j][:, None] + half[:, None] * (u + 1.0)
        d1 = curve.derivs(tq.ravel())[1]
        return cum[j] + half * (np.hypot(d1[:, 0], d1[:, 1]).reshape(tq.shape) @ w)

    total = cum[-1]
    targets = np.asarray(targets, dtype=float)
    t = ta + (tb - ta) * targets / total
    lo = np.full_like(t, ta)
    hi = np.full_like(t, tb)
    for _ in range(60):
        f = arcl(t) - targets
        d1 = curve.derivs(t)[1]
        sp = np.hypot(d1[:, 0], d1[:, 1])
        lo = np.where(f < 0, t, lo)
        hi = np.where(f > 0, t, hi)
        tn = t - f / sp
        bad = (tn <= lo) | (tn >= hi)
        tn = np.where(bad, 0.5 * (lo + hi), tn)
        # quadratic convergence: a step this small leaves only roundoff
        if np.all(np.abs(tn - t) <= 1e-14 * (tb - ta)):
            t = tn
            break
        t = tn
    return t


def panelize(spec, wavelength, order=DEFAULT_ORDER, kind=STAR, panels_per_wavelength=4.0, name=""):
    """Split ``spec`` into panels of arclength strictly below ``wavelength / panels_per_wavelength``.

    Panels are equal in arclength. Self-intersection is not checked.
    """
    if order < 4:
        raise ValueError("panel order must be >= 4")
    hmax = wavelength / panels_per_wavelength
    table = _arclength_table(spec, 0.0, 1.0)
    L = table[1][-1]
    n = int(math.ceil(L / hmax)) + 1
    if spec.closed:
        n = max(n, 3)
    s_targets = np.linspace(0.0, L, n + 1)[1:-1]
    tb = _param_for_arclength(spec, 0.0, 1.0, s_targets, table)
    breaks = np.concatenate([[0.0], tb, [1.0]])
    return BoundaryComponent(spec, kind, breaks, order, name)


def dyadic_refine(comp, corner, depth):
    """Split the panel touching ``corner`` dyadically (in arclength) ``depth`` times toward it."""
    if depth == 0:
        return comp
    if comp.closed:
        raise GeometryViolation("cannot refine a closed component toward a corner", corner)
    b = comp.breaks
    if corner == "start":
        ta, tb = b[0], b[1]
        ell0 = comp.panel_length[0]
        fr = ell0 * 2.0 ** -np.arange(depth, 0, -1)  # distances from the corner
        new = _param_for_arclength(comp.curve, ta, tb, fr)
        breaks = np.concatenate([[b[0]], new, b[1:]])
    elif corner == "end":
        ta, tb = b[-2], b[-1]
        ell0 = comp.panel_length[-1]
        fr = ell0 - ell0 * 2.0 ** -np.arange(1, depth + 1)
        new = _param_for_arclength(comp.curve, ta, tb, fr)
        breaks = np.concatenate([b[:-1], new, [b[-1]]])
    else:
        raise ValueError(f"corner must be 'start' or 'end', got {corner!r}")
    out = comp.with_breaks(breaks)
    out.refined[corner] = (depth, float(ell0))
    return out


def split_panels(comp):
    """Halve every panel in arclength (fins must be re-attached)."""
    b = comp.breaks
    s_mid = 0.5 * (comp.s_break[:-1] + comp.s_break[1:])
    mids = np.array([_param_for_arclength(comp.curve, b[i], b[i + 1], [s_mid[i] - comp.s_break[i]])[0]
                     for i in range(comp.npanels)])
    breaks = np.empty(2 * comp.npanels + 1)
    breaks[0::2] = b
    breaks[1::2] = mids
    out = comp.with_breaks(breaks)
    out.refined = {c: (d + 1, ell0) for c, (d, ell0) in comp.refined.items()}
    return out


def build_fin(comp, corner, R=None, parity=None):
    """Reflect the panels within arclength ``R`` of ``corner`` across the endpoint normal line.

    ``R`` defaults to the original corner panel length recorded by
    :func:`dyadic_refine` (or the corner panel length when unrefined). Only
    whole panels are mirrored; a panel is included when it lies within
    ``R`` (to 1e-12 relative).
    """
    if comp.closed:
        raise GeometryViolation("fins are only defined at endpoints of open components", corner)
    if R is None:
        if corner in comp.refined:
            R = comp.refined[corner][1]
        else:
            R = comp.panel_length[0] if corner == "start" else comp.panel_length[-1]
    if R > comp.length * (1 + 1e-12):
        raise FinTooLong(f"fin length {R} exceeds component length {comp.length}")
    if parity is None:
        parity = 1 if comp.kind == STAR else -1
    tol = 1e-12 * comp.length
    if corner == "start":
        idx = np.nonzero(comp.s_break[1:] <= R + tol)[0]
        i = 0
    else:
        idx = np.nonzero(comp.length - comp.s_break[:-1] <= R + tol)[0]
        i = 1
    if len(idx) == 0:
        raise FinTooLong(f"fin length {R} shorter than the corner panel")
    return Fin(comp, corner, int(parity), float(R), idx, comp.endpoints[i].copy(), comp.end_normal[i].copy())


def attach_fins(comp, R=None, corners=("start", "end")):
    comp.fins = [build_fin(comp, c, R) for c in corners]
    return comp


def validate_case2(components, tol=1e-10, match_tol=1e-9):
    """Check corner orthogonality and vanishing Robin-curve endpoint curvature.

    Returns a list of per-corner dicts; raises :class:`GeometryViolation` on the
    first corner that exceeds ``tol``.
    """
    stars = [c for c in components if c.kind == STAR and not c.closed]
    circs = [c for c in components if c.kind == CIRC]
    report = []
    for sc in stars:
        for si, scorner in enumerate(("start", "end")):
            p = sc.endpoints[si]
            match = None
            for cc in circs:
                for ci, ccorner in enumerate(("start", "end")):
                    if np.linalg.norm(cc.endpoints[ci] - p) <= match_tol * max(1.0, np.linalg.norm(p)):
                        match = (cc, ci, ccorner)
            if match is None:
                raise GeometryViolation(f"star component {sc.name!r} {scorner} has no Robin neighbour", (sc.name, scorner))
            cc, ci, ccorner = match
            cosang = float(abs(np.dot(sc.end_tau[si], cc.end_tau[ci])))
            angle_err = abs(math.asin(min(1.0, cosang)))
            curv = float(abs(cc.end_kappa[ci]))
            entry = dict(star=sc.name, star_corner=scorner, circ=cc.name, circ_corner=ccorner,
                         point=tuple(p), angle_error=angle_err, circ_curvature=curv)
            report.append(entry)
            if angle_err > tol:
                raise GeometryViolation(f"corner at {tuple(p)} not orthogonal (error {angle_err:.3e})", entry)
            if curv > tol:
                raise GeometryViolation(f"Robin curve curvature {curv:.3e} at corner {tuple(p)}", entry)
    return report
