import math

import numpy as np
import pytest

from conftest import SOURCE, box
from vtbem import assembly as asm
from vtbem import geometry as geo
from vtbem.errors import GeometryViolation, MissingFins, NonzeroStarData, ParityMismatch
from vtbem.fieldeval import eval_field
from vtbem.oracles import disk_field, disk_fourier_solve, in_domain, manufactured_data, point_source
from vtbem.solver_dd import dense_solve

TARGETS = np.array([[0.5, 0.5], [1.5, 0.6], [1.0, 0.3], [0.3, 0.8], [1.7, 0.2]])


def test_shape_audit(duct):
    sys_ = duct["system"]
    sizes = [c.n for c in duct["components"]]
    assert sys_.matrix.shape == (sum(sizes), sum(sizes))
    for i, ni in enumerate(sizes):
        for j, nj in enumerate(sizes):
            assert sys_.block(i, j).shape == (ni, nj)
    assert sys_.labels == ["bottom", "right", "top", "left"]
    assert len(sys_.indices(geo.STAR)) == sizes[0] + sizes[2]


def test_robin_flip_touches_only_robin_rows(duct, params):
    ops = duct["system"].operators
    plus = ops.system(1j * params.k).matrix
    minus = ops.system(-1j * params.k).matrix
    star = duct["system"].indices(geo.STAR)
    circ = duct["system"].indices(geo.CIRC)
    assert np.array_equal(plus[star], minus[star])
    assert np.all(np.any(plus[circ] != minus[circ], axis=1))


def test_zero_data_gives_zero_density(duct):
    ops = duct["system"].operators
    rhs = asm.build_rhs(asm.BoundaryData.zeros(duct["components"]), ops)
    assert np.all(rhs == 0)
    assert np.all(dense_solve(duct["system"].matrix, rhs).x == 0)


def test_rhs_without_endpoint_data(duct):
    ops = duct["system"].operators
    data = duct["data"]
    bare = asm.BoundaryData(data.values)
    rhs = duct["system"].split(asm.build_rhs(bare, ops))
    for i, c in enumerate(duct["components"]):
        expected = ops.G[i] @ data.values[i] if c.kind == geo.STAR else data.values[i]
        assert np.array_equal(rhs[i], expected)


def test_rhs_shape_checked(duct):
    data = asm.BoundaryData([np.zeros(3)] * 4)
    with pytest.raises(ValueError):
        asm.build_rhs(data, duct["system"].operators)


def test_duct_manufactured_solution(duct, params):
    assert np.all(in_domain(duct["components"], TARGETS))
    dens = duct["system"].split(duct["solution"].x)
    u = eval_field(dens, TARGETS, duct["components"], params).u
    exact = point_source(params.k, TARGETS, SOURCE)[0]
    assert np.max(np.abs(u - exact)) <= 1e-6


def test_plain_endpoint_scaling_misses(duct, params):
    # the unscaled endpoint terms leave an O(1e-1) error; the default c1 scaling does not
    ops = duct["system"].operators
    rhs = asm.build_rhs(duct["data"], ops, h_scaling=asm.H_SCALE_PLAIN)
    dens = duct["system"].split(dense_solve(duct["system"].matrix, rhs).x)
    u = eval_field(dens, TARGETS, duct["components"], params).u
    exact = point_source(params.k, TARGETS, SOURCE)[0]
    assert np.max(np.abs(u - exact)) > 1e-3


def test_waveguide_manufactured_solution(waveguide, params):
    sys_ = waveguide["system"]
    x = dense_solve(sys_.matrix, asm.build_rhs(waveguide["data"], sys_.operators)).x
    u = eval_field(sys_.split(x), TARGETS, waveguide["components"], params).u
    exact = point_source(params.k, TARGETS, SOURCE)[0]
    assert np.max(np.abs(u - exact)) <= 1e-6


# ---------------------------------------------------------------------------
# Case I
# ---------------------------------------------------------------------------
@pytest.fixture(scope="module")
def disk(params):
    c = geo.panelize(geo.circle(), params.wavelength)
    return c, asm.build_case1(c, params)


def test_case1_zero_data(disk):
    c, sys_ = disk
    rhs = asm.build_rhs(asm.BoundaryData.zeros([c]), sys_.operators)
    assert np.all(dense_solve(sys_.matrix, rhs).x == 0)


def test_case1_matches_disk_oracle(disk, params):
    c, sys_ = disk
    modes = np.arange(-6, 7)
    fn = 1.0 / (1.0 + modes ** 2) * (1 + 0.3j * modes)
    th = np.arctan2(c.x[..., 1], c.x[..., 0]).ravel()
    f = (fn[None] * np.exp(1j * np.outer(th, modes))).sum(axis=1)
    x = dense_solve(sys_.matrix, asm.build_rhs(asm.BoundaryData([f]), sys_.operators)).x
    ang = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    pts = 0.5 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    u = eval_field([x], pts, [c], params).u
    ref = disk_field(disk_fourier_solve(1.0, params, fn, modes), modes, params.k, pts)
    assert np.linalg.norm(u - ref) <= 1e-8 * np.linalg.norm(ref)


@pytest.mark.parametrize("ppw", [4.0, 8.0])
def test_eigenvalues_accumulate_at_minus_half_c1(params, ppw):
    c = geo.panelize(geo.star(amplitude=0.1), params.wavelength, panels_per_wavelength=ppw)
    ev = np.linalg.eigvals(asm.build_case1(c, params).matrix)
    target = -0.5 * params.c1
    centre = np.median(ev.real) + 1j * np.median(ev.imag)
    assert abs(centre - target) <= 1e-3
    # most of the spectrum sits in a tight cluster
    assert np.quantile(np.abs(ev - target), 0.75) <= 1e-4


def test_case1_rejects_open_or_robin(params):
    line = geo.panelize(geo.line((0, 0), (1, 0)), params.wavelength)
    with pytest.raises(GeometryViolation):
        asm.build_case1(line, params)
    circ = geo.panelize(geo.circle(), params.wavelength, kind=geo.CIRC)
    with pytest.raises(GeometryViolation):
        asm.build_case1(circ, params)


# ---------------------------------------------------------------------------
# component checks
# ---------------------------------------------------------------------------
def test_missing_fins(params):
    comps = box(0.0, 2.0, params, depth=2)
    comps[0] = geo.panelize(geo.line((0, 0), (2, 0)), params.wavelength)
    with pytest.raises(MissingFins):
        asm.check_components(comps)


def test_parity_mismatch(params):
    comps = box(0.0, 2.0, params, depth=2)
    comps[1].fins[0].parity = 1
    with pytest.raises(ParityMismatch):
        asm.check_components(comps)


def test_permutation_similarity(params):
    comps = box(0.0, 2.0, params, depth=2)
    order = [2, 3, 0, 1]
    a = asm.build_blocks_case2(comps, params)
    b = asm.build_blocks_case2([comps[i] for i in order], params)
    perm = np.concatenate([np.arange(a.offsets[i], a.offsets[i + 1]) for i in order])
    assert np.array_equal(a.matrix[np.ix_(perm, perm)], b.matrix)


# ---------------------------------------------------------------------------
# Schur complement
# ---------------------------------------------------------------------------
def _robin_only(data, components):
    vals = [np.zeros(c.n, dtype=complex) if c.kind == geo.STAR else v
            for c, v in zip(components, data.values)]
    return asm.BoundaryData(vals)


def test_schur_matches_full_solve(duct):
    sys_ = duct["system"]
    data = _robin_only(duct["data"], duct["components"])
    rhs = asm.build_rhs(data, sys_.operators)
    full = dense_solve(sys_.matrix, rhs).x
    red = asm.schur_reduce(sys_, data)
    rho = np.linalg.solve(red.matrix, rhs[red.circ_index])
    x = red.assemble_full(rho)
    for a, b in zip(sys_.split(x), sys_.split(full)):
        assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(full))


def test_schur_rejects_star_data(duct):
    with pytest.raises(NonzeroStarData):
        asm.schur_reduce(duct["system"], duct["data"])


def test_two_star_recovery_matches_schur(duct):
    sys_ = duct["system"]
    red = asm.schur_reduce(sys_)
    maps = asm.two_star_recovery(sys_)
    o = sys_.offsets
    start = 0
    for i, c in enumerate(sys_.components):
        if c.kind != geo.STAR:
            continue
        n = o[i + 1] - o[i]
        block = red.recovery[start:start + n]
        assert np.max(np.abs(maps[i] - block)) <= 1e-10 * np.max(np.abs(block))
        start += n


def test_two_star_recovery_decoupled(duct):
    sys_ = duct["system"]
    M = sys_.matrix.copy()
    o = sys_.offsets
    M[o[0]:o[1], o[2]:o[3]] = 0
    M[o[2]:o[3], o[0]:o[1]] = 0
    dec = asm.BlockSystem(sys_.components, M, None, sys_.labels, o)
    maps = asm.two_star_recovery(dec)
    ci = sys_.indices(geo.CIRC)
    for i in (0, 2):
        rows = np.arange(o[i], o[i + 1])
        direct = -np.linalg.solve(M[np.ix_(rows, rows)], M[np.ix_(rows, ci)])
        assert np.max(np.abs(maps[i] - direct)) <= 1e-10 * np.max(np.abs(direct))


def test_two_star_recovery_needs_two_stars(disk):
    with pytest.raises(ValueError):
        asm.two_star_recovery(disk[1])
