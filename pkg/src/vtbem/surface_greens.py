"""Green's function of ``d^2/ds^2 + kG^2`` on a boundary component.

Closed components use the periodic Green's function and open components the
one with zero Neumann data at both ends. Both are image sums of the free 1D
Green's function ``exp(i kG |s|) / (2 i kG)``; with ``Im kG > 0`` each image
ring is damped by ``exp(-Im kG L)`` (closed) or ``exp(-2 Im kG L)`` (open), so
the sums are bounded term by term and converge geometrically.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ClosedCurve, DomainError
from .geometry import bary_weights, gauss_legendre, interp_matrix
from .quadrature import endpoint_deriv_rows

TRUNCATION = 1e-16
# far-field cut: contributions below exp(-SKIP) of the diagonal are dropped
SKIP = 42.0
# sub-interval size in units of 1/|kG|
SUB_SCALE = 6.0


@dataclass
class SurfaceGreens:
    """Surface Green's function attached to one component."""

    comp: object
    k_gamma: complex
    eps: float = TRUNCATION

    def __post_init__(self):
        if not self.k_gamma.imag > 0:
            raise DomainError("surface wavenumber must have positive imaginary part")
        self.L = self.comp.length
        self.closed = self.comp.closed
        ring = self.k_gamma.imag * self.L * (1.0 if self.closed else 2.0)
        self.lmax = 1 + int(math.ceil(math.log(1.0 / self.eps) / ring))
        self._G = None

    def __call__(self, s, sp):
        return eval_gg(self, s, sp)

    @property
    def matrix(self):
        if self._G is None:
            self._G = _assemble(self)
        return self._G


def _check_range(sg, *arrs):
    tol = 1e-12 * sg.L
    for a in arrs:
        if np.any(a < -tol) or np.any(a > sg.L + tol):
            raise DomainError(f"arclength outside [0, {sg.L}]")


def eval_gg(sg, s, sp):
    """Evaluate the image series at arclength pairs (broadcasting)."""
    s = np.asarray(s, dtype=float)
    sp = np.asarray(sp, dtype=float)
    _check_range(sg, s, sp)
    kg = sg.k_gamma
    L = sg.L
    total = np.zeros(np.broadcast(s, sp).shape, dtype=complex)
    ells = np.arange(-sg.lmax, sg.lmax + 1)
    # add small images last so the sum is accumulated from the smallest terms up
    for ell in ells[np.argsort(-np.abs(ells), kind="stable")]:
        if sg.closed:
            total += np.exp(1j * kg * np.abs(s - sp - ell * L))
        else:
            total += np.exp(1j * kg * np.abs(s - sp - 2 * ell * L))
            total += np.exp(1j * kg * np.abs(s + sp - 2 * ell * L))
    return total / (2j * kg)


def _image_distance(sg, s, a, b):
    """Smallest distance from any image of ``s`` to the interval [a, b]."""
    cands = [s]
    if sg.closed:
        cands += [s - sg.L, s + sg.L]
    else:
        cands += [-s, 2 * sg.L - s]
    d = np.full(np.broadcast(s, a).shape, np.inf)
    for c in cands:
        d = np.minimum(d, np.maximum(0.0, np.maximum(a - c, c - b)))
    return d


def _assemble(sg):
    """Matrix of ``phi -> int G(s_i, s') phi(s') ds'`` on the component nodes."""
    comp = sg.comp
    p = comp.order
    ug, wg = gauss_legendre(p)
    bw = bary_weights(p)
    n = comp.n
    s_nodes = comp.s.ravel()
    kabs = abs(sg.k_gamma)
    npan = comp.npanels
    # (target, panel) pairs worth integrating
    ti, pj = np.meshgrid(np.arange(n), np.arange(npan), indexing="ij")
    ti, pj = ti.ravel(), pj.ravel()
    dist = _image_distance(sg, s_nodes[ti], comp.s_break[pj], comp.s_break[pj + 1])
    keep = sg.k_gamma.imag * dist < SKIP
    ti, pj = ti[keep], pj[keep]
    own = (ti // p) == pj
    u_t = np.tile(ug, npan)[ti]
    # sub-interval counts per pair
    m = np.maximum(1, np.ceil(kabs * comp.panel_length[pj] / SUB_SCALE)).astype(int)
    tasks_pid, tasks_a, tasks_b = [], [], []
    for pid in range(len(ti)):
        if own[pid]:
            u = u_t[pid]
            for lo, hi in ((-1.0, u), (u, 1.0)):
                mm = max(1, int(math.ceil(m[pid] * (hi - lo) / 2.0)))
                e = np.linspace(lo, hi, mm + 1)
                tasks_pid += [pid] * mm
                tasks_a.append(e[:-1])
                tasks_b.append(e[1:])
        else:
            e = np.linspace(-1.0, 1.0, m[pid] + 1)
            tasks_pid += [pid] * m[pid]
            tasks_a.append(e[:-1])
            tasks_b.append(e[1:])
    tasks_pid = np.asarray(tasks_pid)
    ta = np.concatenate(tasks_a)
    tb = np.concatenate(tasks_b)
    G = np.zeros((n, n), dtype=complex)
    step = 20000
    for s0 in range(0, len(tasks_pid), step):
        sl = slice(s0, s0 + step)
        q = tasks_pid[sl]
        half = 0.5 * (tb[sl] - ta[sl])
        uq = 0.5 * (ta[sl] + tb[sl])[:, None] + half[:, None] * ug[None, :]
        P = interp_matrix(ug, bw, uq.ravel()).reshape(-1, p, p)
        panel = pj[q]
        # arclength and ds/du at quadrature points from the panel interpolants
        s_q = np.einsum("nqj,nj->nq", P, comp.s[panel])
        dsdu = np.einsum("nqj,nj->nq", P, comp.speed[panel] * comp.dtdu[panel][:, None])
        s_q = np.clip(s_q, 0.0, sg.L)
        kern = eval_gg(sg, s_nodes[ti[q]][:, None], s_q)
        wq = kern * dsdu * half[:, None] * wg[None, :]
        contrib = np.einsum("nq,nqj->nj", wq, P)
        cols = panel[:, None] * p + np.arange(p)[None, :]
        np.add.at(G, (ti[q][:, None], cols), contrib)
    return G


def apply_Gj(sg, rho):
    """Discrete ``int G(s, s') rho(s') ds'`` at the component nodes."""
    return sg.matrix @ rho


def fj_matrix(sg):
    """Rank-two matrix of ``phi -> G(s, L) phi'(L) - G(s, 0) phi'(0)``."""
    if sg.closed:
        raise ClosedCurve("F is only defined on open components")
    e0, eL = endpoint_deriv_rows(sg.comp)
    s = sg.comp.s.ravel()
    gL = eval_gg(sg, s, sg.L)
    g0 = eval_gg(sg, s, 0.0)
    return np.outer(gL, eL) - np.outer(g0, e0)


def apply_Fj(sg, phi):
    return fj_matrix(sg) @ phi


def end_columns(sg):
    """Node values of ``G(s, L)`` and ``G(s, 0)``."""
    s = sg.comp.s.ravel()
    return eval_gg(sg, s, sg.L), eval_gg(sg, s, 0.0)
