"""Off-surface evaluation of the pressure from solved densities."""

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels as kn
from .errors import TargetTooClose
from .geometry import STAR
from .quadrature import TargetSet, assemble

NEAR_FACTOR = 1.5


@dataclass
class FieldSolution:
    """Densities per component, the targets and the field values there.

    ``flag`` marks targets within ``NEAR_FACTOR`` panel lengths of a panel
    centre (base or fin), where the plain rule loses accuracy.
    """

    densities: list
    targets: np.ndarray
    u: np.ndarray
    flag: np.ndarray


def _pieces(comp):
    """Base and fin nodes of a component as ``(x, normal, w, cols, mult, centre, length)`` tuples."""
    p = comp.order
    b = comp.breaks
    mid = comp.eval_geom(0.5 * (b[:-1] + b[1:]))["x"]
    cols = np.arange(comp.n).reshape(comp.npanels, p)
    out = [(comp.x, comp.normal, comp.weights, cols, 1.0, mid, comp.panel_length)]
    for fin in comp.fins:
        idx = fin.panels
        out.append((fin.reflect(comp.x[idx]), comp.normal[idx] @ fin.reflection.T, comp.weights[idx],
                    cols[idx], float(fin.parity), fin.reflect(mid[idx]), comp.panel_length[idx]))
    return out


def near_flags(components, targets, factor=NEAR_FACTOR):
    """True where a target is within ``factor`` panel lengths of any panel centre."""
    targets = np.atleast_2d(targets)
    flag = np.zeros(len(targets), dtype=bool)
    for comp in components:
        for *_, mid, plen in _pieces(comp):
            d = np.linalg.norm(targets[:, None, :] - mid[None], axis=-1)
            flag |= np.any(d < factor * plen[None], axis=1)
    return flag


def _plain_sum(comp, k, c1, dens, targets, chunk=2000):
    u = np.zeros(len(targets), dtype=complex)
    names = [kn.S, kn.D] if comp.kind == STAR else [kn.S]
    for x, n, w, cols, mult, _, _ in _pieces(comp):
        y = x.reshape(-1, 2)
        ny = n.reshape(-1, 2)
        wd = mult * w.ravel() * dens[cols.ravel()]
        for a in range(0, len(targets), chunk):
            t = targets[a:a + chunk]
            K = kn.evaluate(names, k, t[:, None, :], None, y[None], ny[None])
            ker = K[kn.D] - K[kn.S] / c1 if comp.kind == STAR else K[kn.S]
            u[a:a + chunk] += ker @ wd
    return u


def eval_field(densities, targets, components, params, adaptive=False, tol=1e-12):
    """Pressure ``sum (D~ - S~/c1) sigma_i + sum S~ rho_j`` at off-surface targets.

    Parameters
    ----------
    densities : list of arrays, one per component
    targets : (m, 2) array
    adaptive : bool
        Use the adaptive near-field quadrature instead of the plain node sums.
        Flags are still reported.

    Returns
    -------
    FieldSolution
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    k, c1 = params.k, params.c1
    u = np.zeros(len(targets), dtype=complex)
    for comp, dens in zip(components, densities):
        dens = np.asarray(dens, dtype=complex)
        if adaptive:
            names = [kn.S, kn.D] if comp.kind == STAR else [kn.S]
            M = assemble(names, k, comp, TargetSet.points(targets), tol)
            K = M[kn.D] - M[kn.S] / c1 if comp.kind == STAR else M[kn.S]
            u += K @ dens
        else:
            u += _plain_sum(comp, k, c1, dens, targets)
    flag = near_flags(components, targets)
    if np.any(flag):
        warnings.warn(f"{int(flag.sum())} target(s) inside the near-boundary strip", TargetTooClose,
                      stacklevel=2)
    return FieldSolution(list(densities), targets, u, flag)
