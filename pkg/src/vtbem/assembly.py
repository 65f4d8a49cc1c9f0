"""Preconditioned block operators for the mixed visco-thermal / Robin problem.

The field is represented as

    u = sum_i (D~_i - S~_i / c1) sigma_i + sum_j S~_j rho_j,

with sigma_i on visco-thermal ("star") components and rho_j on Robin
("circ") components; tildes mean the potential includes the component's fins
with an even (star) or odd (circ) extension of the density. Star rows are
preconditioned with the surface Green's operator G_i, turning the
visco-thermal condition into a second-kind equation.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels as kn
from .errors import (GeometryViolation, MissingFins, NonzeroStarData, ParityMismatch,
                     SingularStarBlock)
from .geometry import CIRC, STAR, validate_case2
from .quadrature import TargetSet, assemble
from .surface_greens import SurfaceGreens, end_columns, fj_matrix

H_SCALE_C1 = "c1"
H_SCALE_PLAIN = "plain"


@dataclass
class BoundaryData:
    """Boundary data aligned with a list of components.

    ``values[i]`` holds f (star) or g (circ) at the nodes of component i;
    ``h_plus[i]`` / ``h_minus[i]`` are the endpoint data at s = L and s = 0 of
    open star components (``None`` elsewhere). The endpoint conditions read
    ``du/ds(L) = h_plus`` and ``-du/ds(0) = h_minus``.
    """

    values: list
    h_plus: list = None
    h_minus: list = None

    def __post_init__(self):
        n = len(self.values)
        if self.h_plus is None:
            self.h_plus = [None] * n
        if self.h_minus is None:
            self.h_minus = [None] * n

    @classmethod
    def zeros(cls, components):
        return cls([np.zeros(c.n, dtype=complex) for c in components])


@dataclass
class BlockSystem:
    """Dense block system with labelled row/column blocks (one per component)."""

    components: list
    matrix: np.ndarray
    rhs: np.ndarray = None
    labels: list = field(default_factory=list)
    offsets: np.ndarray = None

    def block(self, i, j):
        o = self.offsets
        return self.matrix[o[i]:o[i + 1], o[j]:o[j + 1]]

    def split(self, x):
        o = self.offsets
        return [x[o[i]:o[i + 1]] for i in range(len(self.components))]

    def indices(self, kind):
        o = self.offsets
        return np.concatenate([np.arange(o[i], o[i + 1]) for i, c in enumerate(self.components)
                               if c.kind == kind] or [np.zeros(0, int)])


def _labels(components):
    out = []
    for i, c in enumerate(components):
        sym = "sigma" if c.kind == STAR else "rho"
        out.append(c.name or f"{sym}{i}")
    return out


def _offsets(components):
    return np.concatenate([[0], np.cumsum([c.n for c in components])])


class Operators:
    """Raw layer-potential matrices between all component pairs, assembled once.

    ``ops[(j, i)]`` maps densities on source component j to node values on
    target component i and is a dict keyed by kernel tag.
    """

    def __init__(self, components, params, tol=1e-12):
        self.components = list(components)
        self.params = params
        self.tol = tol
        k = params.k
        self.ops = {}
        for j, src in enumerate(self.components):
            for i, tgt in enumerate(self.components):
                if src.kind == STAR:
                    names = [kn.S, kn.D, kn.SP, kn.C] if i == j else [kn.S, kn.D, kn.SP, kn.DP]
                else:
                    names = [kn.S, kn.SP]
                self.ops[(j, i)] = assemble(names, k, src, TargetSet.on_component(tgt), tol)
        self.sg = {}
        self.G = {}
        self.F = {}
        for i, c in enumerate(self.components):
            if c.kind == STAR:
                sg = SurfaceGreens(c, params.k_gamma)
                self.sg[i] = sg
                self.G[i] = sg.matrix
                if not c.closed:
                    self.F[i] = fj_matrix(sg)

    def block(self, i, j, a):
        """Operator block mapping the density on component j to the row equations of component i."""
        comps = self.components
        p = self.params
        c1, c2, k = p.c1, p.c2, p.k
        tgt, src = comps[i], comps[j]
        op = self.ops[(j, i)]
        n = tgt.n
        I = np.eye(n)
        if tgt.kind == STAR:
            G = self.G[i]
            if src.kind == STAR and i == j:
                kap = tgt.kappa.ravel()
                R = -op[kn.D] / c1 + op[kn.C] + (k * k - c2 / c1) * op[kn.S] + (kap - 1.0 / c1)[:, None] * op[kn.SP]
                M = -0.5 * c1 * I + c1 * op[kn.D] + G @ R
                if i in self.F:
                    M = M + self.F[i] @ op[kn.S]
                return M
            if src.kind == STAR:
                tr = op[kn.D] - op[kn.S] / c1
                return c1 * tr - (G @ tr) / c1 + G @ (op[kn.DP] - op[kn.SP] / c1)
            return c1 * op[kn.S] - (G @ op[kn.S]) / c1 + G @ op[kn.SP]
        # Robin rows
        if src.kind == STAR:
            return a * (op[kn.D] - op[kn.S] / c1) + op[kn.DP] - op[kn.SP] / c1
        M = a * op[kn.S] + op[kn.SP]
        if i == j:
            M = M + 0.5 * I
        return M

    def system(self, a=None):
        """Assemble the block matrix; ``a`` is one Robin coefficient or one per component."""
        a = self.params.robin if a is None else a
        comps = self.components
        a_row = list(a) if np.ndim(a) else [a] * len(comps)
        o = _offsets(comps)
        M = np.zeros((o[-1], o[-1]), dtype=complex)
        for i in range(len(comps)):
            for j in range(len(comps)):
                M[o[i]:o[i + 1], o[j]:o[j + 1]] = self.block(i, j, a_row[i])
        return BlockSystem(comps, M, None, _labels(comps), o)


def check_components(components):
    """Validate the component list for the mixed formulation."""
    stars = [c for c in components if c.kind == STAR]
    circs = [c for c in components if c.kind == CIRC]
    if not circs:
        if len(stars) == 1 and stars[0].closed:
            return
    for c in components:
        if c.closed and c.kind == CIRC:
            raise GeometryViolation("Robin components must be open", c.name)
        if not c.closed:
            if len(c.fins) == 0:
                raise MissingFins(f"open component {c.name!r} has no fins")
            want = 1 if c.kind == STAR else -1
            for f in c.fins:
                if f.parity != want:
                    raise ParityMismatch(f"fin parity {f.parity} on {c.kind} component {c.name!r}")
    if circs:
        validate_case2(components)


def build_case1(comp, params, tol=1e-12):
    """System for a single closed visco-thermal curve (interior or exterior by orientation)."""
    if not comp.closed:
        raise GeometryViolation("single-curve formulation needs a closed component", comp.name)
    if comp.kind != STAR:
        raise GeometryViolation("single-curve formulation needs a visco-thermal component", comp.name)
    ops = Operators([comp], params, tol)
    sys = ops.system()
    sys.operators = ops
    return sys


def build_blocks_case2(components, params, tol=1e-12, a=None):
    """Full block system for star and circ components with fins attached."""
    check_components(components)
    ops = Operators(components, params, tol)
    sys = ops.system(a)
    sys.operators = ops
    return sys


def build_rhs(data, operators, h_scaling=H_SCALE_C1):
    """Right-hand side of the block system.

    Star rows get ``G f - s (G(., L) h_plus + G(., 0) h_minus)`` with
    ``s = c1`` (default) or ``s = 1`` for ``h_scaling='plain'``. The endpoint
    terms come from substituting the endpoint conditions, multiplied through
    by ``c1``, into the preconditioned equation.
    """
    comps = operators.components
    c1 = operators.params.c1
    scale = c1 if h_scaling == H_SCALE_C1 else 1.0
    parts = []
    for i, c in enumerate(comps):
        v = np.asarray(data.values[i], dtype=complex)
        if v.shape != (c.n,):
            raise ValueError(f"data for component {i} has shape {v.shape}, expected ({c.n},)")
        if c.kind == STAR:
            r = operators.G[i] @ v
            if not c.closed:
                gL, g0 = end_columns(operators.sg[i])
                hp = data.h_plus[i] or 0.0
                hm = data.h_minus[i] or 0.0
                r = r - scale * (gL * hp + g0 * hm)
            parts.append(r)
        else:
            parts.append(v)
    return np.concatenate(parts)


def _cond1(A):
    from scipy.linalg import lu_factor
    from scipy.linalg.lapack import get_lapack_funcs

    lu, piv = lu_factor(A, check_finite=False)
    gecon, = get_lapack_funcs(("gecon",), (lu,))
    anorm = np.linalg.norm(A, 1)
    rcond, info = gecon(lu, anorm, norm="1")
    return (np.inf if rcond == 0 else 1.0 / rcond), (lu, piv)


@dataclass
class ReducedSystem:
    """Schur complement on the Robin unknowns and the maps recovering star densities."""

    matrix: np.ndarray
    recovery: np.ndarray  # star unknowns = recovery @ circ unknowns
    star_index: np.ndarray
    circ_index: np.ndarray
    star_cond: float

    def recover(self, rho):
        return self.recovery @ rho

    def assemble_full(self, rho):
        x = np.zeros(len(self.star_index) + len(self.circ_index), dtype=complex)
        x[self.circ_index] = rho
        x[self.star_index] = self.recovery @ rho
        return x


def schur_reduce(sys, data=None, max_cond=1e12):
    """Eliminate the star unknowns from a block system with zero star data."""
    from scipy.linalg import lu_solve

    if data is not None:
        for i, c in enumerate(sys.components):
            if c.kind != STAR:
                continue
            if (np.any(np.asarray(data.values[i]) != 0) or (data.h_plus[i] not in (None, 0))
                    or (data.h_minus[i] not in (None, 0))):
                raise NonzeroStarData("star data must vanish for the reduced system")
    si = sys.indices(STAR)
    ci = sys.indices(CIRC)
    M = sys.matrix
    Mss = M[np.ix_(si, si)]
    Msc = M[np.ix_(si, ci)]
    Mcs = M[np.ix_(ci, si)]
    Mcc = M[np.ix_(ci, ci)]
    if len(si):
        cond, fac = _cond1(Mss)
        if not cond < max_cond:
            raise SingularStarBlock(f"star block condition estimate {cond:.3e}")
        B = -lu_solve(fac, Msc)
    else:
        cond, B = 1.0, np.zeros((0, len(ci)), dtype=complex)
    return ReducedSystem(Mcc + Mcs @ B, B, si, ci, cond)


def two_star_recovery(sys):
    """Recovery maps for exactly two star components via the nested formula.

    ``A = K(2->1) K(2->2)^-1`` and
    ``B_1 = (K(1->1) - A K(1->2))^-1 (A K(circ->2) - K(circ->1))``, symmetric in 1, 2.
    """
    stars = [i for i, c in enumerate(sys.components) if c.kind == STAR]
    if len(stars) != 2:
        raise ValueError("two_star_recovery needs exactly two star components")
    ci = sys.indices(CIRC)
    o = sys.offsets
    rows = {i: np.arange(o[i], o[i + 1]) for i in stars}
    M = sys.matrix
    out = {}
    for i, m in (stars, stars[::-1]):
        Kii = M[np.ix_(rows[i], rows[i])]
        Kmm = M[np.ix_(rows[m], rows[m])]
        K_m_to_i = M[np.ix_(rows[i], rows[m])]
        K_i_to_m = M[np.ix_(rows[m], rows[i])]
        Kc_i = M[np.ix_(rows[i], ci)]
        Kc_m = M[np.ix_(rows[m], ci)]
        A = np.linalg.solve(Kmm.T, K_m_to_i.T).T
        out[i] = np.linalg.solve(Kii - A @ K_i_to_m, A @ Kc_m - Kc_i)
    return out
