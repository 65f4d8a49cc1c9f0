"""Shared geometry builders and cached solves."""

import math
import warnings

import numpy as np
import pytest

from vtbem.assembly import build_blocks_case2, build_rhs
from vtbem.geometry import CIRC, STAR, attach_fins, dyadic_refine, line, panelize, sine_wall
from vtbem.oracles import manufactured_data
from vtbem.params import standard_params
from vtbem.solver_dd import dense_solve

SOURCE = np.array([0.7, -0.6])


def open_component(spec, kind, name, params, depth=7, robin_depth=0, ppw=4.0):
    c = panelize(spec, params.wavelength, kind=kind, name=name, panels_per_wavelength=ppw)
    d = depth if kind == STAR else robin_depth
    c = dyadic_refine(dyadic_refine(c, "start", d), "end", d)
    return attach_fins(c)


def box(x0, x1, params, height=1.0, amplitude=0.0, **kw):
    """Duct [x0, x1] x [0, height]: star walls bottom/top, circ caps right/left (ccw)."""
    if amplitude:
        bot = sine_wall(x0, x1, 0.0, amplitude)
        top = sine_wall(x0, x1, height, amplitude, reverse=True)
    else:
        bot = line((x0, 0.0), (x1, 0.0))
        top = line((x1, height), (x0, height))
    return [open_component(bot, STAR, "bottom", params, **kw),
            open_component(line((x1, 0.0), (x1, height)), CIRC, "right", params, **kw),
            open_component(top, STAR, "top", params, **kw),
            open_component(line((x0, height), (x0, 0.0)), CIRC, "left", params, **kw)]


def smooth_density(comp):
    t = comp.t.ravel()
    return np.exp(np.cos(2 * math.pi * t)) * (1 + 0.5j * np.sin(4 * math.pi * t))


def to_coarse(coarse, fine, v):
    """Interpolate fine-node values onto the coarse nodes (each coarse panel holds two fine ones)."""
    out = np.empty(coarse.n, dtype=complex)
    p = coarse.order
    vf = v.reshape(fine.npanels, p)
    for i in range(coarse.npanels):
        for j, t in enumerate(coarse.t[i]):
            k = 2 * i + int(t >= fine.breaks[2 * i + 1])
            a, b = fine.breaks[k], fine.breaks[k + 1]
            u = np.array([2 * (t - a) / (b - a) - 1])
            out[i * p + j] = (fine.panels[k].interp_matrix(u) @ vf[k])[0]
    return out


@pytest.fixture(scope="session")
def params():
    return standard_params()


@pytest.fixture(scope="session")
def duct(params):
    """Straight duct [0, 2] x [0, 1], assembled and solved with point-source data."""
    comps = box(0.0, 2.0, params)
    sys_ = build_blocks_case2(comps, params)
    data = manufactured_data(SOURCE, comps, params)
    sol = dense_solve(sys_.matrix, build_rhs(data, sys_.operators))
    return dict(components=comps, system=sys_, data=data, solution=sol)


@pytest.fixture(scope="session")
def waveguide(params):
    """Duct with sine-bump walls of amplitude 0.15."""
    comps = box(0.0, 2.0, params, amplitude=0.15)
    sys_ = build_blocks_case2(comps, params)
    data = manufactured_data(SOURCE, comps, params)
    return dict(components=comps, system=sys_, data=data)


@pytest.fixture(autouse=True)
def _quiet_near_warnings():
    from vtbem.errors import TargetTooClose

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TargetTooClose)
        yield
