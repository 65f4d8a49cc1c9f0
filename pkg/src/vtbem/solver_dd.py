"""Dense solves, impedance-to-impedance maps and two-level region coupling.

Each region is a closed chain of star and circ components. Some circ
components are interfaces shared with a neighbour. On an interface with
outward normal n the incoming data is ``ik u + du/dn`` and the outgoing data
``-ik u + du/dn``. Since the neighbour's normal is -n, continuity of u and
du/dn across the interface reads ``g_in(neighbour) = -g_out(region)`` at
matching nodes.
"""

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import get_lapack_funcs

from .assembly import BoundaryData, Operators, build_rhs, check_components, schur_reduce
from .errors import IllConditionedCoupling, InterfaceMismatch, SingularReducedSystem, SingularSystem
from .geometry import CIRC

PIVOT_FLOOR = 1e-300
MAX_COUPLING_COND = 1e6
I2I_MAGIC = b"VTBI2I\x00\x01"
PLUS_TO_MINUS = 1
MINUS_TO_PLUS = -1


@dataclass
class DenseSolution:
    x: np.ndarray
    cond: float
    backward_error: float


def _lu(A):
    lu, piv = lu_factor(A, check_finite=False)
    if np.min(np.abs(np.diag(lu))) < PIVOT_FLOOR:
        raise SingularSystem("zero pivot in LU factorization")
    gecon, = get_lapack_funcs(("gecon",), (lu,))
    rcond, _ = gecon(lu, np.linalg.norm(A, 1), norm="1")
    return (lu, piv), (np.inf if rcond == 0 else 1.0 / rcond)


def dense_solve(matrix, rhs=None):
    """LU solve with a 1-norm condition estimate and the normwise backward error.

    ``matrix`` may be a :class:`BlockSystem` carrying its own right-hand side.
    """
    if rhs is None:
        matrix, rhs = matrix.matrix, matrix.rhs
    A = np.asarray(matrix)
    b = np.asarray(rhs)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    fac, cond = _lu(A)
    x = lu_solve(fac, b, check_finite=False)
    nx = np.linalg.norm(x)
    res = np.linalg.norm(A @ x - b)
    be = 0.0 if nx == 0 else res / (np.linalg.norm(A, 2 if A.shape[0] <= 400 else "fro") * nx)
    return DenseSolution(x, cond, float(be))


# ---------------------------------------------------------------------------
# regions and I2I maps
# ---------------------------------------------------------------------------
@dataclass
class Region:
    """Components of one subdomain; ``interfaces`` lists the indices of interface circ components."""

    components: list
    interfaces: list
    params: object
    tol: float = 1e-12
    name: str = ""
    operators: Operators = field(init=False, default=None)

    def __post_init__(self):
        for i in self.interfaces:
            if self.components[i].kind != CIRC:
                raise InterfaceMismatch(f"interface component {i} of region {self.name!r} is not a Robin curve")
        check_components(self.components)
        self.operators = Operators(self.components, self.params, self.tol)
        self.offsets = np.concatenate([[0], np.cumsum([c.n for c in self.components])])

    def robin(self, sign):
        """Per-component Robin coefficients with ``sign * ik`` on the interfaces."""
        k = self.params.k
        return [sign * 1j * k if i in self.interfaces else self.params.robin for i in range(len(self.components))]

    def rows(self, i):
        return np.arange(self.offsets[i], self.offsets[i + 1])

    @property
    def interface_rows(self):
        return np.concatenate([self.rows(i) for i in self.interfaces])


@dataclass
class I2IMap:
    """Dense map between incoming and outgoing impedance data on a region's circ nodes."""

    matrix: np.ndarray
    direction: int
    cond_plus: float
    cond_minus: float
    circ_index: np.ndarray = None  # global rows of the circ unknowns, in order


def _reduced(region, sign):
    sys_ = region.operators.system(region.robin(sign))
    red = schur_reduce(sys_)
    return red


def build_i2i(region):
    """Return ``(I_plus_to_minus, I_minus_to_plus)`` on all circ nodes of the region."""
    rp = _reduced(region, +1)
    rm = _reduced(region, -1)
    try:
        fp, cp = _lu(rp.matrix)
        fm, cm = _lu(rm.matrix)
    except SingularSystem as e:
        raise SingularReducedSystem(str(e)) from e
    if not (np.isfinite(cp) and np.isfinite(cm)):
        raise SingularReducedSystem("reduced system is numerically singular")
    # A B^-1 = (B^-T A^T)^T
    pm = lu_solve(fp, rm.matrix.T, trans=1, check_finite=False).T
    mp = lu_solve(fm, rp.matrix.T, trans=1, check_finite=False).T
    return (I2IMap(pm, PLUS_TO_MINUS, cp, cm, rp.circ_index),
            I2IMap(mp, MINUS_TO_PLUS, cp, cm, rp.circ_index))


def dump_i2i(path, imap):
    """Write the map as a 32-byte header followed by little-endian complex128 rows."""
    m = np.ascontiguousarray(imap.matrix, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<8sQQq", I2I_MAGIC, m.shape[0], m.shape[1], imap.direction))
        fh.write(m.tobytes())


def load_i2i(path):
    """Read a map written by :func:`dump_i2i`; condition estimates are not stored."""
    with open(path, "rb") as fh:
        magic, rows, cols, direction = struct.unpack("<8sQQq", fh.read(32))
        if magic != I2I_MAGIC:
            raise ValueError(f"{path}: not an I2I dump")
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} entries, found {data.size}")
    return I2IMap(data.reshape(rows, cols).astype(complex), int(direction), np.nan, np.nan)


# ---------------------------------------------------------------------------
# coupling
# ---------------------------------------------------------------------------
def match_nodes(xa, xb, tol=1e-12):
    """Permutation ``p`` with ``xb[p] == xa`` to within ``tol`` (relative to the size of the set)."""
    scale = max(1.0, float(np.abs(xa).max()))
    d = np.linalg.norm(xa[:, None, :] - xb[None, :, :], axis=-1)
    p = np.argmin(d, axis=1)
    err = d[np.arange(len(xa)), p]
    if len(xa) != len(xb) or np.any(err > tol * scale) or len(np.unique(p)) != len(p):
        raise InterfaceMismatch(f"interface nodes do not coincide (max gap {err.max():.3e})")
    return p


@dataclass
class Interface:
    """Pairing of interface component ``ia`` of region ``ra`` with ``ib`` of region ``rb``."""

    ra: int
    ia: int
    rb: int
    ib: int


@dataclass
class CoupledSolution:
    densities: list  # per region, list of per-component densities
    incoming: list  # per region, incoming data on each interface component
    cond: float
    i2i: list
    matrix: np.ndarray = None  # interface system


def _full_solve(region, data, incoming):
    """Solve the region system with ``+ik`` on the interfaces and the given incoming data."""
    ops = region.operators
    sys_ = ops.system(region.robin(+1))
    vals = list(data.values)
    for i in region.interfaces:
        vals[i] = incoming.get(i, np.zeros(region.components[i].n, dtype=complex))
    rhs = build_rhs(BoundaryData(vals, data.h_plus, data.h_minus), ops)
    sol = dense_solve(sys_.matrix, rhs)
    return sol.x, sys_


def couple_regions(regions, interfaces, data, max_cond=MAX_COUPLING_COND):
    """Solve for the interface impedance data and return per-region densities.

    ``data[r]`` is the :class:`BoundaryData` of region r; entries for interface
    components are ignored. Outgoing data of region r on an interface is
    ``I_r g_in + c_r`` where ``c_r`` is the outgoing data of the solution
    driven by the region's own boundary data alone (zero incoming data on
    its interfaces).
    """
    maps, parts = [], []
    for r, reg in enumerate(regions):
        maps.append(build_i2i(reg)[0])
        x0, _ = _full_solve(reg, data[r], {})
        Mm = reg.operators.system(reg.robin(-1)).matrix
        parts.append(Mm @ x0)  # outgoing trace rows of the particular solution
    # unknown vector: incoming data on every interface component of every region
    off = 0
    index = {}
    for r, reg in enumerate(regions):
        for i in reg.interfaces:
            n = reg.components[i].n
            index[(r, i)] = np.arange(off, off + n)
            off += n
    N = off
    A = np.eye(N, dtype=complex)
    b = np.zeros(N, dtype=complex)

    def local(reg, imap, i):
        # positions of component i's nodes inside the map's circ ordering
        return np.searchsorted(imap.circ_index, reg.rows(i))

    seen = set()
    for itf in interfaces:
        for (ra, ia, rb, ib) in ((itf.ra, itf.ia, itf.rb, itf.ib), (itf.rb, itf.ib, itf.ra, itf.ia)):
            seen.add((ra, ia))
            A_reg, B_reg = regions[ra], regions[rb]
            perm = match_nodes(A_reg.components[ia].x.reshape(-1, 2), B_reg.components[ib].x.reshape(-1, 2))
            # g_in(ra, ia) = -g_out(rb, ib)[perm]
            imap = maps[rb]
            rows_b = local(B_reg, imap, ib)[perm]
            rowsA = index[(ra, ia)]
            for j in B_reg.interfaces:
                cols = local(B_reg, imap, j)
                A[np.ix_(rowsA, index[(rb, j)])] += imap.matrix[np.ix_(rows_b, cols)]
            b[rowsA] -= parts[rb][B_reg.rows(ib)][perm]
    for r, reg in enumerate(regions):
        for i in reg.interfaces:
            if (r, i) not in seen:
                raise InterfaceMismatch(f"interface {i} of region {r} has no partner")
    sol = dense_solve(A, b)
    if not sol.cond <= max_cond:
        raise IllConditionedCoupling(f"interface system condition estimate {sol.cond:.3e}")
    dens, inc = [], []
    for r, reg in enumerate(regions):
        g = {i: sol.x[index[(r, i)]] for i in reg.interfaces}
        x, sys_ = _full_solve(reg, data[r], g)
        dens.append(sys_.split(x))
        inc.append(g)
    return CoupledSolution(dens, inc, sol.cond, maps, A)

