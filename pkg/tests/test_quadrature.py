import math

import numpy as np
import pytest
import scipy.special as sp

from conftest import smooth_density, to_coarse
from vtbem import geometry as geo
from vtbem import kernels as kn
from vtbem import quadrature as q
from vtbem.errors import AdaptiveFailure, ClosedCurve, FinitePartKernel

K = 5.712


@pytest.fixture(scope="module")
def circle_ops():
    c = geo.panelize(geo.circle(), 1.1)
    return c, q.assemble([kn.S, kn.D, kn.SP, kn.C], K, c, c)


def _circle_modes(n, k):
    """On-surface eigenvalues of S, D, S' and D' + S'' on the unit circle (outward normal)."""
    J, Jp, Jpp = sp.jv(n, k), sp.jvp(n, k), sp.jvp(n, k, 2)
    H, Hp, Hpp = sp.hankel1(n, k), sp.h1vp(n, k), sp.h1vp(n, k, 2)
    c = 1j * math.pi / 2
    return dict(S=c * J * H, D=c * k * J * Hp + 0.5, Sp=c * k * Jp * H - 0.5,
                C=c * k * k * (Jp * Hp + 0.5 * (Jpp * H + J * Hpp)))


def test_zero_density(circle_ops):
    c, m = circle_ops
    assert np.all(m[kn.S] @ np.zeros(c.n) == 0)


def test_laplace_limit_single_layer_constant():
    # k -> 0: G = -log(r)/(2 pi) + i/4 - (log(k/2) + gamma)/(2 pi) + O(k^2 r^2 log r)
    # and the log part of a unit density integrates to zero on the unit circle
    k = 1e-7
    c = geo.panelize(geo.circle(), 1.1)
    u = q.assemble([kn.S], k, c, c)[kn.S] @ np.ones(c.n)
    expected = 0.5j * math.pi - math.log(k / 2) - np.euler_gamma
    assert np.max(np.abs(u - expected)) <= 1e-12 * abs(expected)


@pytest.mark.parametrize("n", [0, 1, 2, 5, 9])
def test_circle_eigenvalues(circle_ops, n):
    c, m = circle_ops
    th = np.arctan2(c.x[..., 1], c.x[..., 0]).ravel()
    f = np.exp(1j * n * th)
    lam = _circle_modes(n, K)
    for tag in (kn.S, kn.D, kn.SP, kn.C):
        assert np.max(np.abs(m[tag] @ f - lam[tag] * f)) <= 1e-10 * max(1.0, abs(lam[tag])), tag


def test_finite_part_rejected(circle_ops):
    c, _ = circle_ops
    with pytest.raises(FinitePartKernel):
        q.assemble(["Spp"], K, c, c)


def test_adaptive_failure(monkeypatch):
    c = geo.panelize(geo.circle(), 1.1)
    monkeypatch.setattr(q, "MAX_LEVELS", 0)
    with pytest.raises(AdaptiveFailure):
        q.assemble([kn.S], K, c, c)


def test_assemble_block_shape():
    c = geo.panelize(geo.star(amplitude=0.1), 1.1)
    t = q.TargetSet.points([[0.1, 0.2], [3.0, 1.0]])
    op = q.assemble_block(kn.S, K, c, t)
    assert op.shape == (2, c.n)
    assert op.tag == kn.S


# ---------------------------------------------------------------------------
# spectral differentiation
# ---------------------------------------------------------------------------
def test_tangential_derivative():
    line = geo.panelize(geo.line((0.3, 0.1), (1.9, 1.3)), 1.1)
    Dm = q.tangential_deriv_matrix(line).matrix
    s = line.s.ravel()
    assert np.max(np.abs(Dm @ np.ones(line.n))) <= 1e-12
    assert np.max(np.abs(Dm @ s - 1.0)) <= 1e-12
    circ = geo.panelize(geo.circle(), 1.1)
    s = circ.s.ravel()
    assert np.max(np.abs(q.tangential_deriv_matrix(circ).matrix @ np.sin(s) - np.cos(s))) <= 1e-10


def test_endpoint_derivative():
    c = geo.dyadic_refine(geo.panelize(geo.sine_wall(0, 2, 0, 0.2), 1.1), "start", 4)
    s = c.s.ravel()
    L = c.length
    assert np.allclose(q.endpoint_deriv(c, np.ones(c.n)), 0.0, atol=1e-11)
    assert np.allclose(q.endpoint_deriv(c, s), 1.0, atol=1e-11)
    assert np.allclose(q.endpoint_deriv(c, np.cos(math.pi * s / L)), 0.0, atol=1e-9)
    with pytest.raises(ClosedCurve):
        q.endpoint_deriv(geo.panelize(geo.circle(), 1.1), np.ones(10))


# ---------------------------------------------------------------------------
# self-convergence and jump relations
# ---------------------------------------------------------------------------
@pytest.mark.slow
def test_self_convergence_under_panel_doubling():
    coarse = geo.panelize(geo.star(amplitude=0.15, lobes=5), 1.1)
    fine = geo.split_panels(coarse)
    tags = [kn.S, kn.D, kn.SP, kn.C]
    mc = q.assemble(tags, K, coarse, coarse)
    mf = q.assemble(tags, K, fine, fine)
    for tag in tags:
        a = mc[tag] @ smooth_density(coarse)
        b = to_coarse(coarse, fine, mf[tag] @ smooth_density(fine))
        assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(a)), tag


@pytest.fixture(scope="module")
def jump_setup():
    c = geo.panelize(geo.star(amplitude=0.1, lobes=3), 1.1)
    idx = np.arange(0, c.n, 37)
    x = c.x.reshape(-1, 2)[idx]
    n = c.normal.reshape(-1, 2)[idx]
    sig = smooth_density(c)
    on = q.assemble([kn.S, kn.D, kn.SP], K, c, c)
    on = {t: (m @ sig)[idx] for t, m in on.items()}
    off = {}
    for h in (0.02, 0.01, 0.005):
        for side in (1, -1):
            T = q.TargetSet.points(x + side * h * n, normal=n)
            m = q.assemble([kn.S, kn.D, kn.SP, kn.DP], K, c, T)
            off[(h, side)] = {t: v @ sig for t, v in m.items()}
    return c, sig[idx], on, off


def _rate(errs):
    return [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]


def test_jump_relations(jump_setup):
    _, sig, on, off = jump_setup
    hs = (0.02, 0.01, 0.005)
    cases = {
        "D+": [np.max(np.abs(off[(h, 1)][kn.D] - (on[kn.D] + 0.5 * sig))) for h in hs],
        "D-": [np.max(np.abs(off[(h, -1)][kn.D] - (on[kn.D] - 0.5 * sig))) for h in hs],
        "Sp+": [np.max(np.abs(off[(h, 1)][kn.SP] - (on[kn.SP] - 0.5 * sig))) for h in hs],
        "Sp-": [np.max(np.abs(off[(h, -1)][kn.SP] - (on[kn.SP] + 0.5 * sig))) for h in hs],
        "S": [np.max(np.abs(off[(h, 1)][kn.S] - on[kn.S])) for h in hs],
        "Dp": [np.max(np.abs(off[(h, 1)][kn.DP] - off[(h, -1)][kn.DP])) for h in hs],
    }
    scale = {"D+": on[kn.D], "D-": on[kn.D], "Sp+": on[kn.SP], "Sp-": on[kn.SP], "S": on[kn.S],
             "Dp": off[(hs[-1], 1)][kn.DP]}
    for name, errs in cases.items():
        assert errs[-1] < 0.1 * np.max(np.abs(scale[name])), name
        # first order in h
        assert min(_rate(errs)) > 0.8, (name, errs)
