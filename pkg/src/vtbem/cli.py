"""Command line front end: ``vtbem --config job.yaml --output-dir out``.

Exit codes: 0 success, 2 configuration error, 3 geometry violation,
4 solver failure.
"""

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import geometry as geo
from .assembly import BoundaryData, build_blocks_case2, build_case1, build_rhs
from .config import as_complex, parse_config
from .errors import GeometryError, SchemaError, SolverError, TargetTooClose, VTBemError
from .fieldeval import eval_field
from .oracles import disk_field, disk_fourier_solve, in_domain, manufactured_data, point_source
from .params import PhysicalParams
from .solver_dd import Interface, Region, couple_regions, dense_solve, dump_i2i

log = logging.getLogger("vtbem")

EXIT_OK, EXIT_SCHEMA, EXIT_GEOMETRY, EXIT_SOLVER = 0, 2, 3, 4
FLAG_OK, FLAG_NEAR, FLAG_OUTSIDE = 0, 1, 2


# ---------------------------------------------------------------------------
# config -> objects
# ---------------------------------------------------------------------------
def make_params(cfg):
    ph = cfg.physics
    p = PhysicalParams(ph.wavelength, ph.deltaV, ph.deltaT, ph.gamma)
    return p.with_robin(cfg.robin.value(p.k))


def make_curve(c):
    t = c.type
    if t == "circle":
        return geo.circle(c.center, c.radius, clockwise=c.clockwise)
    if t == "star":
        return geo.star(c.center, c.radius, c.amplitude, c.lobes, clockwise=c.clockwise)
    if t == "line":
        return geo.line(c.start, c.end)
    if t == "arc":
        return geo.arc(c.center, c.radius, c.theta0, c.theta1)
    if t == "sine_wall":
        return geo.sine_wall(c.x0, c.x1, c.y0, c.amplitude, c.reverse)
    return geo.cubic_spline(c.points, c.start_tangent, c.end_tangent)


def make_components(cfg, params):
    d = cfg.discretization
    out = {}
    for c in cfg.components:
        kind = geo.STAR if c.kind == "star" else geo.CIRC
        comp = geo.panelize(make_curve(c.curve), params.wavelength, d.order, kind, d.panels_per_wavelength, c.name)
        if not comp.closed:
            depth = d.corner_depth if kind == geo.STAR else d.robin_corner_depth
            comp = geo.dyadic_refine(geo.dyadic_refine(comp, "start", depth), "end", depth)
            comp = geo.attach_fins(comp, d.fin_length)
        out[c.name] = comp
    return out


def _read_file_data(path, n):
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if arr.shape != (n, 2):
        raise SchemaError(f"data file {path} has shape {arr.shape}, expected ({n}, 2)", ("data", "path"))
    return arr[:, 0] + 1j * arr[:, 1]


def make_data(cfg, names, comps, params):
    """BoundaryData for the named components (in order)."""
    specs = {c.name: c.data for c in cfg.components}
    vals, hp, hm = [], [], []
    sources = {}
    for nm in names:
        sp = specs[nm]
        if sp.type == "point_source":
            sources.setdefault(tuple(sp.x0), None)
    for x0 in sources:
        sources[x0] = manufactured_data(np.array(x0), [comps[n] for n in names], params)
    for i, nm in enumerate(names):
        c = comps[nm]
        sp = specs[nm]
        h_p = h_m = None
        if sp.type == "zero":
            v = np.zeros(c.n, dtype=complex)
        elif sp.type == "point_source":
            md = sources[tuple(sp.x0)]
            v, h_p, h_m = md.values[i], md.h_plus[i], md.h_minus[i]
        elif sp.type == "constant":
            v = np.full(c.n, as_complex(sp.value))
            h_p, h_m = as_complex(sp.h_plus), as_complex(sp.h_minus)
        elif sp.type == "file":
            v = _read_file_data(sp.path, c.n)
            h_p, h_m = as_complex(sp.h_plus), as_complex(sp.h_minus)
        else:
            th = np.arctan2(c.x[..., 1], c.x[..., 0]).ravel()
            v = sum((re + 1j * im) * np.exp(1j * n * th) for n, re, im in sp.coefficients)
            v = np.asarray(v, dtype=complex) * np.ones(c.n)
        if c.kind != geo.STAR or c.closed:
            h_p = h_m = None
        vals.append(np.asarray(v, dtype=complex))
        hp.append(h_p)
        hm.append(h_m)
    return BoundaryData(vals, hp, hm)


def make_targets(cfg):
    t = cfg.targets
    pts = [np.asarray(t.points, dtype=float).reshape(-1, 2)]
    if t.grid is not None:
        g = t.grid
        X, Y = np.meshgrid(np.linspace(g.xmin, g.xmax, g.nx), np.linspace(g.ymin, g.ymax, g.ny))
        pts.insert(0, np.stack([X.ravel(), Y.ravel()], axis=1))
    return np.concatenate(pts)


# ---------------------------------------------------------------------------
# solves
# ---------------------------------------------------------------------------
def _evaluate(dens, comps, targets, params):
    u = np.zeros(len(targets), dtype=complex)
    flag = np.full(len(targets), FLAG_OUTSIDE)
    inside = in_domain(comps, targets) if len(targets) else np.zeros(0, bool)
    if np.any(inside):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TargetTooClose)
            fs = eval_field(dens, targets[inside], comps, params)
        u[inside] = fs.u
        flag[inside] = np.where(fs.flag, FLAG_NEAR, FLAG_OK)
    return u, flag


def solve_single(cfg, params, comps, targets, tol, diag):
    names = [c.name for c in cfg.components]
    clist = [comps[n] for n in names]
    t0 = time.perf_counter()
    if cfg.mode == "case1":
        sys_ = build_case1(clist[0], params, tol)
    else:
        sys_ = build_blocks_case2(clist, params, tol)
    diag["assembly_seconds"] = time.perf_counter() - t0
    data = make_data(cfg, names, comps, params)
    sys_.rhs = build_rhs(data, sys_.operators, cfg.discretization.h_scaling)
    sol = dense_solve(sys_)
    diag["unknowns"] = sys_.matrix.shape[0]
    diag["condition_estimate_1norm"] = sol.cond
    diag["solve_backward_error"] = sol.backward_error
    dens = sys_.split(sol.x)
    u, flag = _evaluate(dens, clist, targets, params)
    return {n: d for n, d in zip(names, dens)}, u, flag, clist


def solve_dd(cfg, params, comps, targets, tol, diag, dump_dir=None):
    regions, datas = [], []
    rindex = {r.name: i for i, r in enumerate(cfg.regions)}
    t0 = time.perf_counter()
    for r in cfg.regions:
        clist = [comps[n] for n in r.components]
        ifc = [r.components.index(n) for n in r.interfaces]
        regions.append(Region(clist, ifc, params, tol, r.name))
        datas.append(make_data(cfg, r.components, comps, params))
    diag["assembly_seconds"] = time.perf_counter() - t0
    itfs = []
    for c in cfg.couplings:
        ra, _, ca = c.a.partition("/")
        rb, _, cb = c.b.partition("/")
        ia, ib = rindex[ra], rindex[rb]
        itfs.append(Interface(ia, cfg.regions[ia].components.index(ca), ib, cfg.regions[ib].components.index(cb)))
    sol = couple_regions(regions, itfs, datas)
    diag["unknowns"] = sum(int(r.offsets[-1]) for r in regions)
    diag["interface_unknowns"] = sol.matrix.shape[0]
    diag["coupling_condition_estimate_1norm"] = sol.cond
    for r, m in zip(cfg.regions, sol.i2i):
        diag[f"i2i_{r.name}_reduced_condition_plus"] = m.cond_plus
        diag[f"i2i_{r.name}_reduced_condition_minus"] = m.cond_minus
        if dump_dir is not None:
            dump_i2i(Path(dump_dir) / f"i2i_{r.name}_plus_to_minus.bin", m)
    u = np.zeros(len(targets), dtype=complex)
    flag = np.full(len(targets), FLAG_OUTSIDE)
    dens_out = {}
    for r, reg, dens in zip(cfg.regions, regions, sol.densities):
        for n, d in zip(r.components, dens):
            dens_out[f"{r.name}.{n}"] = d
        ur, fr = _evaluate(dens, reg.components, targets, params)
        take = (fr != FLAG_OUTSIDE) & (flag == FLAG_OUTSIDE)
        u[take] = ur[take]
        flag[take] = fr[take]
    return dens_out, u, flag, list(comps.values())


def _component_arclength(comps, name):
    key = name.split(".")[-1]
    return comps[key].s.ravel()


def run_job(cfg, output_dir, tol=1e-12, dump_i2i_maps=False, figures=False):
    """Run a parsed job and write its CSV and diagnostics files; returns the diagnostics dict."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    params = make_params(cfg)
    comps = make_components(cfg, params)
    targets = make_targets(cfg)
    diag = {"mode": cfg.mode, "k": params.k, "c1": params.c1, "c2": params.c2, "k_gamma": params.k_gamma,
            "robin_a": params.robin, "targets": len(targets)}
    if cfg.mode == "dd":
        dens, u, flag, clist = solve_dd(cfg, params, comps, targets, tol, diag, out if dump_i2i_maps else None)
    else:
        dens, u, flag, clist = solve_single(cfg, params, comps, targets, tol, diag)
    _oracle_diagnostics(cfg, params, targets, u, flag, diag)
    with open(out / cfg.outputs.field, "w") as fh:
        fh.write("x,y,re_u,im_u,flag\n")
        for (x, y), v, f in zip(targets, u, flag):
            fh.write(f"{x:.17g},{y:.17g},{v.real:.17g},{v.imag:.17g},{f}\n")
    for name, d in dens.items():
        s = _component_arclength(comps, name)
        with open(out / f"{cfg.outputs.density_prefix}{name}.csv", "w") as fh:
            fh.write("s,re,im\n")
            for si, v in zip(s, d):
                fh.write(f"{si:.17g},{v.real:.17g},{v.imag:.17g}\n")
    diag["near_boundary_targets"] = int(np.sum(flag == FLAG_NEAR))
    diag["outside_targets"] = int(np.sum(flag == FLAG_OUTSIDE))
    diag["wall_seconds"] = time.perf_counter() - start
    with open(out / cfg.outputs.diagnostics, "w") as fh:
        for key, val in diag.items():
            fh.write(f"{key}: {_fmt(val)}\n")
    if figures:
        from .plotting import plot_field, plot_geometry

        plot_geometry(clist, out / "geometry.png")
        if cfg.targets.grid is not None:
            g = cfg.targets.grid
            m = g.nx * g.ny
            plot_field(g, u[:m], flag[:m], out / "field_abs.png", clist)
    return diag


def _fmt(v):
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _oracle_diagnostics(cfg, params, targets, u, flag, diag):
    ok = flag == FLAG_OK
    srcs = {tuple(c.data.x0) for c in cfg.components if c.data.type == "point_source"}
    if len(srcs) == 1 and all(c.data.type == "point_source" for c in cfg.components if c.kind == "star"):
        x0 = np.array(srcs.pop())
        if np.any(ok):
            ue = point_source(params.k, targets[ok], x0)[0]
            diag["analytic_max_error"] = float(np.max(np.abs(u[ok] - ue)))
    if cfg.mode == "case1":
        c = cfg.components[0]
        if c.curve.type == "circle" and tuple(c.curve.center) == (0.0, 0.0) and not c.curve.clockwise \
                and c.data.type == "fourier" and np.any(ok):
            modes = np.array([n for n, _, _ in c.data.coefficients])
            f = np.array([re + 1j * im for _, re, im in c.data.coefficients])
            coef = disk_fourier_solve(c.curve.radius, params, f, modes)
            uo = disk_field(coef, modes, params.k, targets[ok])
            diag["disk_oracle_max_error"] = float(np.max(np.abs(u[ok] - uo)))


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------
def build_parser():
    ap = argparse.ArgumentParser(prog="vtbem", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="YAML job file")
    ap.add_argument("--output-dir", default=".", help="directory for CSV and diagnostics output")
    ap.add_argument("--tol", type=float, default=1e-12, help="quadrature tolerance")
    ap.add_argument("--threads", type=int, default=None, help="BLAS thread count")
    ap.add_argument("--dump-i2i", action="store_true", help="write impedance-to-impedance maps (DD jobs)")
    ap.add_argument("--figures", action="store_true", help="also write PNG figures (needs matplotlib)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as e:
        log.error("cannot read config: %s", e)
        return EXIT_SCHEMA
    try:
        cfg = parse_config(text)
        if args.threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                diag = run_job(cfg, args.output_dir, args.tol, args.dump_i2i, args.figures)
        else:
            diag = run_job(cfg, args.output_dir, args.tol, args.dump_i2i, args.figures)
    except SchemaError as e:
        log.error("configuration error: %s", e)
        return EXIT_SCHEMA
    except GeometryError as e:
        log.error("geometry error: %s", e)
        return EXIT_GEOMETRY
    except (SolverError, VTBemError) as e:
        log.error("solver failure: %s", e)
        return EXIT_SOLVER
    log.info("done in %.2f s", diag["wall_seconds"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
