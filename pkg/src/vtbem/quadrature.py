"""Dense discretization of layer potentials on panelized curves.

Far (target, panel) pairs use the native Gauss-Legendre rule of the panel.
Near and self pairs integrate the kernel against the Lagrange basis of the
panel by adaptive bisection in the panel parameter: an interval is accepted
once the target is at least one interval arclength from the interval
midpoint, where a 16-point rule on the interval is accurate to roughly
``(2 + sqrt 3)^-32``. Self intervals are split at the target parameter and
refined toward it down to ``h_min`` (deep for the log kernel, moderate for the
continuous kernels whose evaluation loses digits as ``1/r^2`` near the
diagonal).
"""

from dataclasses import dataclass

import numpy as np

from . import kernels as kn
from .errors import AdaptiveFailure, ClosedCurve, FinitePartKernel
from .geometry import (bary_weights, diff_matrix, endpoint_diff_rows, gauss_legendre,
                       interp_matrix)

MAX_LEVELS = 60
NEAR_FACTOR = 1.5  # direct rule when dist(target, panel centre) >= NEAR_FACTOR * panel length
ACCEPT = 1.0
H_MIN_SMOOTH = 2.0 ** -12
_CHUNK = 400_000


@dataclass
class OperatorMatrix:
    """Dense operator matrix with the node ranges it maps between."""

    matrix: np.ndarray
    tag: str
    source: object = None
    targets: object = None

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, v):
        return self.matrix @ v


@dataclass
class TargetSet:
    """Points where operators are evaluated.

    On-curve targets carry ``comp`` (the component object), ``panel`` and
    ``u`` (local panel parameter) so self panels can be detected.
    """

    x: np.ndarray
    normal: np.ndarray = None
    tau: np.ndarray = None
    comp: object = None
    panel: np.ndarray = None
    u: np.ndarray = None

    @property
    def n(self):
        return len(self.x)

    @classmethod
    def on_component(cls, comp):
        p = comp.order
        u, _ = gauss_legendre(p)
        return cls(comp.x.reshape(-1, 2), comp.normal.reshape(-1, 2), comp.tau.reshape(-1, 2), comp,
                   np.repeat(np.arange(comp.npanels), p), np.tile(u, comp.npanels))

    @classmethod
    def points(cls, x, normal=None, tau=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return cls(x, None if normal is None else np.atleast_2d(normal), None if tau is None else np.atleast_2d(tau))


@dataclass
class _Source:
    """One curve piece (base or fin) with panels that fold onto base columns."""

    geom: object  # callable t -> dict of geometry arrays
    t0: np.ndarray
    t1: np.ndarray
    cols: np.ndarray  # (npan, p) base column indices
    mult: float
    x: np.ndarray  # (npan, p, 2)
    normal: np.ndarray
    w: np.ndarray  # (npan, p)
    length: np.ndarray
    center: np.ndarray
    base: object
    is_fin: bool


def _sources(comp, with_fins=True):
    p = comp.order
    cols = np.arange(comp.n).reshape(comp.npanels, p)
    b = comp.breaks
    mid = comp.eval_geom(0.5 * (b[:-1] + b[1:]))["x"]
    out = [_Source(comp.eval_geom, b[:-1], b[1:], cols, 1.0, comp.x, comp.normal, comp.weights,
                   comp.panel_length, mid, comp, False)]
    if with_fins:
        for fin in comp.fins:
            idx = fin.panels
            R = fin.reflection
            out.append(_Source(fin.eval_geom, b[idx], b[idx + 1], cols[idx], float(fin.parity),
                               fin.reflect(comp.x[idx]), comp.normal[idx] @ R.T, comp.weights[idx],
                               comp.panel_length[idx], fin.reflect(mid[idx]), comp, True))
    return out


def _eval_kernels(names, k, tx, tn, tt, y, ny):
    out = kn.evaluate(names, k, tx, tn, y, ny, tt)
    return [out[n] for n in names]


def _direct(names, k, targets, src, out):
    """Native-rule contribution of every panel of ``src`` to every target."""
    M = targets.n
    y = src.x.reshape(-1, 2)
    ny = src.normal.reshape(-1, 2)
    w = src.w.ravel()
    cols = src.cols.ravel()
    Nq = len(w)
    step = max(1, _CHUNK // max(Nq, 1))
    for a in range(0, M, step):
        sl = slice(a, min(M, a + step))
        tx = targets.x[sl][:, None, :]
        tn = None if targets.normal is None else targets.normal[sl][:, None, :]
        tt = None if targets.tau is None else targets.tau[sl][:, None, :]
        r = tx - y[None]
        same = (r[..., 0] == 0) & (r[..., 1] == 0)
        ys = np.where(same[..., None], y[None] + 1.0, y[None])  # placeholder, zeroed below
        vals = _eval_kernels(names, k, tx, tn, tt, ys, ny[None])
        for name, v in zip(names, vals):
            blk = out[name][sl]
            blk[:, cols] += np.where(same, 0.0, v) * (src.mult * w)[None, :]


def _near_pairs(targets, src):
    """Indices (target, panel) needing adaptive treatment."""
    d = np.linalg.norm(targets.x[:, None, :] - src.center[None, :, :], axis=-1)
    near = d < NEAR_FACTOR * src.length[None, :]
    if targets.comp is not None and not src.is_fin and targets.comp is src.base:
        near[np.arange(targets.n), targets.panel] = True
    ti, pj = np.nonzero(near)
    return ti, pj


def _adaptive(names, k, targets, src, ti, pj, h_min, out):
    """Replace direct-rule entries of near pairs by adaptive Lagrange-basis integrals."""
    if len(ti) == 0:
        return
    p = src.cols.shape[1]
    ug, wg = gauss_legendre(p)
    bw = bary_weights(p)
    names = list(names)
    log_only = all(n in kn.LOG_KERNELS for n in names)
    # remove direct contribution
    y = src.x[pj]  # (npairs, p, 2)
    ny = src.normal[pj]
    tx = targets.x[ti][:, None, :]
    tn = None if targets.normal is None else targets.normal[ti][:, None, :]
    tt = None if targets.tau is None else targets.tau[ti][:, None, :]
    r = tx - y
    same = (r[..., 0] == 0) & (r[..., 1] == 0)
    ys = np.where(same[..., None], y + 1.0, y)
    vals = _eval_kernels(names, k, tx, tn, tt, ys, ny)
    wv = src.w[pj] * src.mult
    acc = {n: -np.where(same, 0.0, v) * wv for n, v in zip(names, vals)}

    self_pair = np.zeros(len(ti), dtype=bool)
    if targets.comp is not None and not src.is_fin and targets.comp is src.base:
        self_pair = targets.panel[ti] == pj
    # initial tasks
    pid, a, b = [], [], []
    ns = np.nonzero(~self_pair)[0]
    pid.append(ns); a.append(np.full(len(ns), -1.0)); b.append(np.full(len(ns), 1.0))
    sp = np.nonzero(self_pair)[0]
    us = targets.u[ti[sp]] if len(sp) else np.zeros(0)
    left = us > -1.0
    right = us < 1.0
    pid += [sp[left], sp[right]]
    a += [np.full(left.sum(), -1.0), us[right]]
    b += [us[left], np.full(right.sum(), 1.0)]
    pid = np.concatenate(pid)
    a = np.concatenate(a)
    b = np.concatenate(b)
    # self-adjacent intervals touch the target parameter
    sing = np.concatenate([np.zeros(len(ns), bool), np.ones(left.sum() + right.sum(), bool)])

    t0 = src.t0[pj]
    dtdu = 0.5 * (src.t1[pj] - src.t0[pj])
    for level in range(MAX_LEVELS + 1):
        if len(pid) == 0:
            break
        if level == MAX_LEVELS:
            raise AdaptiveFailure(f"adaptive quadrature exceeded {MAX_LEVELS} levels for {len(pid)} intervals")
        um = 0.5 * (a + b)
        tm = t0[pid] + dtdu[pid] * (um + 1.0)
        gm = src.geom(tm)
        arcl = gm["speed"] * dtdu[pid] * (b - a)
        dist = np.linalg.norm(targets.x[ti[pid]] - gm["x"], axis=-1)
        small = (b - a) <= h_min
        # an interval ending at the target parameter is only accepted at the floor
        accept = ((dist >= ACCEPT * arcl) & ~sing) | small
        ia = np.nonzero(accept)[0]
        if len(ia):
            _integrate(names, k, targets, src, ti, pj, pid[ia], a[ia], b[ia], t0, dtdu, ug, wg, bw, acc,
                       exact=None if log_only else self_pair[pid[ia]])
        rej = ~accept
        m = 0.5 * (a[rej] + b[rej])
        sg = sing[rej]
        lo_sing = sg & (a[rej] == _us_for(targets, ti, pid[rej], self_pair))
        pid = np.concatenate([pid[rej], pid[rej]])
        na = np.concatenate([a[rej], m])
        nb = np.concatenate([m, b[rej]])
        # the singular endpoint stays with the child that touches it
        sing = np.concatenate([lo_sing, sg & ~lo_sing])
        a, b = na, nb

    cols = src.cols[pj]
    for n in names:
        np.add.at(out[n], (ti[:, None], cols), acc[n])


def _chord(curve, tx, ty, ug, wg):
    """``x - y = -int_{tx}^{ty} p'(t) dt`` by Gauss-Legendre, for ``ty`` of shape (n, q)."""
    half = 0.5 * (ty - tx[:, None])
    v = tx[:, None, None] + half[..., None] * (ug + 1.0)
    d1 = curve.derivs(v.ravel())[1].reshape(v.shape + (2,))
    return -half[..., None] * np.einsum("nqmc,m->nqc", d1, wg)


def _us_for(targets, ti, pid, self_pair):
    u = np.full(len(pid), np.nan)
    sp = self_pair[pid]
    if np.any(sp):
        u[sp] = targets.u[ti[pid[sp]]]
    return u


def _integrate(names, k, targets, src, ti, pj, pid, a, b, t0, dtdu, ug, wg, bw, acc, exact=None):
    """Add 16-point rule contributions of intervals [a, b] (panel parameter) to ``acc``.

    On ``exact`` intervals (those on the target's own panel) ``x - y`` is the
    integral of the curve tangent from source to target, which keeps
    ``n . (x - y)`` accurate where the points nearly coincide.
    """
    p = len(ug)
    step = max(1, _CHUNK // (p * p))
    if exact is None:
        exact = np.zeros(len(pid), dtype=bool)
    for s0 in range(0, len(pid), step):
        sl = slice(s0, s0 + step)
        q, aa, bb, fl = pid[sl], a[sl], b[sl], exact[sl]
        half = 0.5 * (bb - aa)
        uq = 0.5 * (aa + bb)[:, None] + half[:, None] * ug[None, :]  # (n, p)
        tq = t0[q][:, None] + dtdu[q][:, None] * (uq + 1.0)
        g = src.geom(tq.ravel())
        y = g["x"].reshape(-1, p, 2)
        ny = g["normal"].reshape(-1, p, 2)
        wq = (g["speed"].reshape(-1, p) * (dtdu[q] * half)[:, None] * wg[None, :]) * src.mult
        tx = targets.x[ti[q]][:, None, :]
        tn = None if targets.normal is None else targets.normal[ti[q]][:, None, :]
        tt = None if targets.tau is None else targets.tau[ti[q]][:, None, :]
        r = tx - y
        if np.any(fl):
            r[fl] = _chord(src.base.curve, t0[q[fl]] + dtdu[q[fl]] * (targets.u[ti[q[fl]]] + 1.0), tq[fl], ug, wg)
        # at the log-kernel floor a node may round onto the target; its weight is negligible
        same = (r[..., 0] == 0) & (r[..., 1] == 0)
        if np.any(same):
            r = np.where(same[..., None], 1.0, r)
            wq = np.where(same, 0.0, wq)
        vals = kn.evaluate(names, k, tx, tn, y, ny, tt, r=r)
        vals = [vals[n] for n in names]
        L = interp_matrix(ug, bw, uq.ravel()).reshape(-1, p, p)  # (n, quad, basis)
        for n, v in zip(names, vals):
            contrib = np.einsum("nq,nqj->nj", v * wq, L)
            np.add.at(acc[n], q, contrib)


def assemble(names, k, source, targets, tol=1e-12, with_fins=True):
    """Assemble dense matrices for several kernels from one source component.

    Parameters
    ----------
    names : sequence of kernel tags (see :mod:`vtbem.kernels`)
    source : BoundaryComponent; its fins are included when ``with_fins``.
    targets : TargetSet or BoundaryComponent (on-curve targets).
    tol : float
        Target accuracy; sets the refinement floor for the log kernel.

    Returns
    -------
    dict tag -> ndarray of shape (targets.n, source.n)
    """
    names = list(names)
    bad = kn.FINITE_PART.intersection(names)
    if bad:
        raise FinitePartKernel(f"finite-part kernel(s) {sorted(bad)} cannot be integrated alone")
    if not isinstance(targets, TargetSet):
        targets = TargetSet.on_component(targets)
    out = {n: np.zeros((targets.n, source.n), dtype=complex) for n in names}
    log_names = [n for n in names if n in kn.LOG_KERNELS]
    smooth_names = [n for n in names if n not in kn.LOG_KERNELS]
    # continuous kernels: evaluating n.(x - y) loses ~eps/r^2, so stop near 2^-12
    h_log = min(max(tol * 1e-2, 1e-14), 1e-6)
    for src in _sources(source, with_fins):
        _direct(names, k, targets, src, out)
        ti, pj = _near_pairs(targets, src)
        if log_names:
            _adaptive(log_names, k, targets, src, ti, pj, h_log, out)
        if smooth_names:
            _adaptive(smooth_names, k, targets, src, ti, pj, H_MIN_SMOOTH, out)
    return out


def assemble_block(kernel, k, source, targets, tol=1e-12, with_fins=True):
    """Single-kernel convenience wrapper returning an :class:`OperatorMatrix`."""
    if not isinstance(targets, TargetSet):
        targets = TargetSet.on_component(targets)
    mats = assemble([kernel], k, source, targets, tol, with_fins)
    return OperatorMatrix(mats[kernel], kernel, source, targets)


def tangential_deriv_matrix(comp):
    """Block-diagonal spectral differentiation in arclength."""
    p = comp.order
    D = diff_matrix(p)
    out = np.zeros((comp.n, comp.n))
    for i in range(comp.npanels):
        sl = slice(i * p, (i + 1) * p)
        out[sl, sl] = D / (comp.speed[i] * comp.dtdu[i])[:, None]
    return OperatorMatrix(out, "d/ds", comp, comp)


def endpoint_deriv_rows(comp):
    """Rows ``(e0, eL)`` of length ``comp.n`` giving the arclength derivative at s = 0 and s = L."""
    if comp.closed:
        raise ClosedCurve("endpoint derivatives need an open component")
    p = comp.order
    rm, rp = endpoint_diff_rows(p)
    e0 = np.zeros(comp.n)
    eL = np.zeros(comp.n)
    e0[:p] = rm / (comp.end_speed[0] * comp.dtdu[0])
    eL[-p:] = rp / (comp.end_speed[1] * comp.dtdu[-1])
    return e0, eL


def endpoint_deriv(comp, sigma):
    """Arclength derivative of the panel interpolant of ``sigma`` at both endpoints."""
    e0, eL = endpoint_deriv_rows(comp)
    return e0 @ sigma, eL @ sigma
