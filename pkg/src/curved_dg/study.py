"""Error norms, convergence orders, the three verification cases and the
refinement-study driver."""
from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .assembly import CompressibleSystem, Discretization, PoissonSystem
from .boundary import Dirichlet, Neumann, NoSlipAdiabatic, NoSlipIsothermal, RiemannInvariant, SlipWall
from .geometry import (EXACT_ANNULUS, FROM_GEOMETRY, INNER, OUTER, THETA_END, THETA_START,
                       FullAnnulus, QuarterAnnulus, compute_geometry_maps,
                       generate_tobecurved_annulus, mesh_size_h, mesh_svg)
from .physics import (CouetteParams, GasModel, RadialPressure, VortexParams, couette_state,
                      primitives, supersonic_vortex_exact, taylor_couette_exact, vortex_state)
from .reference import build_reference_element
from .solver import CG, GMRES, NewtonConfig, NewtonFailure, newton_solve

log = logging.getLogger(__name__)

POISSON = "poisson"
EULER_VORTEX = "euler_vortex"
NS_COUETTE = "ns_couette"
CASES = (POISSON, EULER_VORTEX, NS_COUETTE)

VARIABLES = {
    POISSON: ("u", "q1", "q2"),
    EULER_VORTEX: ("rho", "u", "v", "p", "s"),
    NS_COUETTE: ("u", "v", "T"),
}

SUB, ISO, SUPER = "sub", "iso", "super"


def geometry_order(policy, k):
    """k_G for a policy name ('sub' = 1, 'iso' = k, 'super' = k + 1) or an explicit integer."""
    if isinstance(policy, (int, np.integer)):
        return int(policy)
    p = str(policy).lower()
    if p in (SUB, "subparametric"):
        return 1
    if p in (ISO, "isoparametric"):
        return k
    if p in (SUPER, "superparametric"):
        return k + 1
    if p.lstrip("+-").isdigit():
        return int(p)
    raise ValueError(f"unknown geometry policy {policy!r}")


# --------------------------------------------------------------------------
# Error norms


@dataclass
class ErrorReport:
    errors: dict
    h: float
    n_elements: int
    ar_realized: float = float("nan")
    level: int = 0


def _error_points(mesh, ref, strength):
    eref = build_reference_element(mesh.kind, ref.k, strength)
    maps = compute_geometry_maps(mesh, eref)
    basis = ref.basis_at(eref.vol_points)
    weights = eref.vol_weights[None, :] * maps.jac_det
    return basis, maps.x_vol, weights


def _evaluate(state, basis):
    if isinstance(state, dict):
        return {k: np.einsum("qn,en...->eq...", basis, v) for k, v in state.items()}
    return np.einsum("qn,en...->eq...", basis, state)


def l2_error(state, exact, mesh, ref, variables, strength=None):
    """Integrated L2 errors ( int (phi_h - phi)^2 dOmega )^(1/2).

    Parameters
    ----------
    state : array or dict of arrays
        Nodal coefficients (Ne, Np, ...) of the discrete fields.
    exact : dict
        name -> callable(x) giving the exact field at physical points.
    variables : dict
        name -> callable(values, x) deriving the discrete field from the
        solution values at the error cubature points.
    strength : int, optional
        Error cubature strength; 2k + 2 by default.
    """
    strength = 2 * ref.k + 2 if strength is None else strength
    basis, x, w = _error_points(mesh, ref, strength)
    vals = _evaluate(state, basis)
    errors = {}
    for name, fn in variables.items():
        diff = np.asarray(fn(vals, x)) - np.asarray(exact[name](x))
        errors[name] = float(math.sqrt(max(np.sum(w * diff * diff), 0.0)))
    return ErrorReport(errors, mesh_size_h(mesh), mesh.num_elements, mesh.ar_realized, mesh.level)


def entropy_error(state, mesh, ref, gas: GasModel, reference_state=None, strength=None):
    """( |Omega|^-1 int ((p/rho^g - s0) / s0)^2 dOmega )^(1/2), s0 = p0 / rho0^g.

    ``reference_state`` is (rho0, p0); the unit inner-wall state of the
    vortex by default.
    """
    rho0, p0 = (1.0, 1.0 / gas.gamma) if reference_state is None else reference_state
    s0 = p0 / rho0 ** gas.gamma
    strength = 2 * ref.k + 2 if strength is None else strength
    basis, x, w = _error_points(mesh, ref, strength)
    W = _evaluate(state, basis)
    rho, _, _, p, _ = primitives(W, gas)
    ds = (p / rho ** gas.gamma - s0) / s0
    return float(math.sqrt(np.sum(w * ds * ds) / mesh.domain.area))


def convergence_orders(errors, h):
    """Pairwise log(e_{i-1}/e_i) / log(h_{i-1}/h_i); NaN where an error is zero."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(h, dtype=float)
    if e.shape != h.shape or e.size < 2:
        raise ValueError("need equal-length sequences of at least two entries")
    out = np.full(e.size - 1, np.nan)
    for i in range(1, e.size):
        if e[i] > 0 and e[i - 1] > 0:
            out[i - 1] = math.log(e[i - 1] / e[i]) / math.log(h[i - 1] / h[i])
    return out


# --------------------------------------------------------------------------
# Cases


def _pi_sin(x):
    return np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])


def _pi_grad(x):
    px, py = np.pi * x[..., 0], np.pi * x[..., 1]
    return np.stack([np.pi * np.cos(px) * np.sin(py), np.pi * np.sin(px) * np.cos(py)], axis=-1)


class PoissonCase:
    """lap u = s on the quarter annulus with u = sin(pi x) sin(pi y)."""

    name = POISSON
    variables = VARIABLES[POISSON]
    # 240 triangles at AR 1 on level 0
    default_n_base = 5

    def __init__(self, **_):
        self.domain = QuarterAnnulus()

    def boundary_conditions(self):
        # boundary data lives on the true arcs; discrete boundary points are
        # pulled back to them by radial projection
        dom = self.domain

        def inner_value(x):
            r = np.linalg.norm(x, axis=-1, keepdims=True)
            return _pi_sin(dom.r_inner * x / r)

        def outer_flux(x):
            r = np.linalg.norm(x, axis=-1, keepdims=True)
            return np.einsum("...d,...d->...", _pi_grad(dom.r_outer * x / r), x / r)

        def bottom_flux(x):
            return -_pi_grad(x)[..., 1]
        return {INNER: Dirichlet(inner_value), THETA_END: Dirichlet(_pi_sin),
                OUTER: Neumann(outer_flux), THETA_START: Neumann(bottom_flux)}

    def system(self, disc):
        return PoissonSystem(disc, self.boundary_conditions(), lambda x: -2 * np.pi ** 2 * _pi_sin(x))

    def initial_state(self, disc):
        return _pi_sin(disc.maps.x_nodes)

    def exact_fields(self):
        return {"u": _pi_sin, "q1": lambda x: _pi_grad(x)[..., 0], "q2": lambda x: _pi_grad(x)[..., 1]}

    def errors(self, system, U, mesh, ref):
        state = {"u": U, "q": system.gradient(U)}
        variables = {"u": lambda v, x: v["u"], "q1": lambda v, x: v["q"][..., 0],
                     "q2": lambda v, x: v["q"][..., 1]}
        return l2_error(state, self.exact_fields(), mesh, ref, variables)

    def default_newton(self):
        return NewtonConfig(linear=GMRES, preconditioner="lu", max_newton=3)


class EulerVortexCase:
    """Supersonic isentropic vortex between slip walls on the quarter annulus."""

    name = EULER_VORTEX
    variables = VARIABLES[EULER_VORTEX]
    default_n_base = 2

    def __init__(self, gamma=1.4, **_):
        self.gas = GasModel(gamma=gamma)
        self.params = VortexParams()
        self.domain = QuarterAnnulus(self.params.r_i, self.params.r_o)

    def exact_state(self, x):
        return vortex_state(x, self.params, self.gas)

    def boundary_conditions(self):
        far = RiemannInvariant(self.exact_state)
        return {INNER: SlipWall(), OUTER: SlipWall(), THETA_START: far, THETA_END: far}

    def system(self, disc):
        return CompressibleSystem(disc, self.boundary_conditions(), self.gas)

    def initial_state(self, disc):
        return self.exact_state(disc.maps.x_nodes)

    def exact_fields(self):
        def ex(i):
            return lambda x: supersonic_vortex_exact(x, self.params, self.gas, strict=False)[i]
        return {"rho": ex(0), "u": ex(1), "v": ex(2), "p": ex(3)}

    def errors(self, system, U, mesh, ref):
        gas = self.gas

        def prim(i):
            return lambda W, x: primitives(W, gas)[i]
        variables = {"rho": prim(0), "u": prim(1), "v": prim(2), "p": prim(3)}
        rep = l2_error(U, self.exact_fields(), mesh, ref, variables)
        rep.errors["s"] = entropy_error(U, mesh, ref, gas,
                                        (self.params.rho_i, self.params.rho_i ** gas.gamma / gas.gamma))
        return rep

    def default_newton(self):
        return NewtonConfig(linear=GMRES, restart=200, preconditioner="auto")


class CouetteCase:
    """Compressible Couette flow between an isothermal rotating inner wall
    and an adiabatic outer wall on the full annulus."""

    name = NS_COUETTE
    variables = VARIABLES[NS_COUETTE]
    default_n_base = 2

    def __init__(self, mu=1e-3, **_):
        self.gas = GasModel(mu=float(mu))
        self.params = CouetteParams()
        self.domain = FullAnnulus(self.params.r_i, self.params.r_o)
        span = self.params.r_o - self.params.r_i
        self.pressure = RadialPressure(self.params, self.gas, r_min=self.params.r_i - 0.2 * span,
                                       r_max=self.params.r_o + 0.2 * span)

    def exact_state(self, x):
        return couette_state(x, self.params, self.gas, self.pressure)

    def wall_velocity(self, x):
        w = self.params.omega_i
        return np.stack([-w * x[..., 1], w * x[..., 0]], axis=-1)

    def boundary_conditions(self):
        p = self.params
        return {INNER: NoSlipIsothermal(p.T_i, p.rho_i * self.gas.R * p.T_i, self.wall_velocity),
                OUTER: NoSlipAdiabatic()}

    def system(self, disc):
        return CompressibleSystem(disc, self.boundary_conditions(), self.gas)

    def initial_state(self, disc):
        return self.exact_state(disc.maps.x_nodes)

    def exact_fields(self):
        def ex(i):
            return lambda x: taylor_couette_exact(x, self.params, self.gas, strict=False)[0][i]
        return {"u": ex(0), "v": ex(1), "T": ex(2)}

    def errors(self, system, U, mesh, ref):
        gas = self.gas
        variables = {"u": lambda W, x: primitives(W, gas)[1], "v": lambda W, x: primitives(W, gas)[2],
                     "T": lambda W, x: primitives(W, gas)[4]}
        return l2_error(U, self.exact_fields(), mesh, ref, variables)

    def default_newton(self):
        return NewtonConfig(linear=GMRES, restart=200, preconditioner="auto")


CASE_CLASSES = {POISSON: PoissonCase, EULER_VORTEX: EulerVortexCase, NS_COUETTE: CouetteCase}


def make_case(name, **kw):
    try:
        return CASE_CLASSES[name](**kw)
    except KeyError:
        raise ValueError(f"unknown case {name!r}; choose from {CASES}") from None


# --------------------------------------------------------------------------
# Study configuration and driver


class ConfigError(ValueError):
    pass


@dataclass
class StudyConfig:
    case: str = POISSON
    element: str = "tri"
    k: list = field(default_factory=lambda: [1])
    kg_policy: object = ISO
    ar: float = 1.0
    levels: int = 4
    start_level: int = 0
    n_base: int | None = None    # None: the case's default_n_base
    mu: float = 1e-3
    normal_mode: str = FROM_GEOMETRY
    over_integrate: int = 0
    output_dir: str | None = None
    svg: bool = False
    newton: NewtonConfig | None = None

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}, got {self.case!r}")
        if isinstance(self.k, (int, np.integer)):
            self.k = [int(self.k)]
        self.k = [int(v) for v in self.k]
        if not self.k or min(self.k) < 1:
            raise ConfigError("k must list orders >= 1")
        if self.levels < 1 or self.start_level < 0:
            raise ConfigError("levels must be >= 1 and start_level >= 0")
        if self.ar <= 0:
            raise ConfigError("ar must be positive")
        if self.normal_mode not in (FROM_GEOMETRY, EXACT_ANNULUS, "exact", "geometry"):
            raise ConfigError(f"unknown normal_mode {self.normal_mode!r}")
        for k in self.k:
            geometry_order(self.kg_policy, k)


_NEWTON_FIELDS = {f: t for f, t in NewtonConfig.__annotations__.items()}


def _parse_list(text):
    return [int(t) for t in text.replace(",", " ").split()]


def load_config(path_or_text):
    """Read an INI study file with a [study] section and optional [solver] section."""
    cp = configparser.ConfigParser()
    text = str(path_or_text)
    if "\n" not in text and Path(text).exists():
        with open(text) as fh:
            cp.read_file(fh)
    else:
        cp.read_string(text)
    if "study" not in cp:
        raise ConfigError("missing [study] section")
    s = cp["study"]
    known = {"case", "element", "k", "kg_policy", "ar", "levels", "start_level", "n_base", "mu",
             "normal_mode", "over_integrate", "output_dir", "svg"}
    unknown = set(s) - known
    if unknown:
        raise ConfigError(f"unknown [study] keys: {sorted(unknown)}")
    kw = {}
    if "case" in s:
        kw["case"] = s["case"].strip()
    if "element" in s:
        kw["element"] = s["element"].strip()
    if "k" in s:
        kw["k"] = _parse_list(s["k"])
    if "kg_policy" in s:
        kw["kg_policy"] = s["kg_policy"].strip()
    for key in ("ar", "mu"):
        if key in s:
            kw[key] = s.getfloat(key)
    for key in ("levels", "start_level", "n_base", "over_integrate"):
        if key in s:
            kw[key] = s.getint(key)
    if "normal_mode" in s:
        kw["normal_mode"] = s["normal_mode"].strip()
    if "output_dir" in s:
        kw["output_dir"] = s["output_dir"].strip()
    if "svg" in s:
        kw["svg"] = s.getboolean("svg")
    if "solver" in cp:
        nk = {}
        for key, val in cp["solver"].items():
            if key not in _NEWTON_FIELDS:
                raise ConfigError(f"unknown [solver] key {key!r}")
            default = getattr(NewtonConfig(), key)
            if isinstance(default, bool):
                nk[key] = cp["solver"].getboolean(key)
            elif isinstance(default, int):
                nk[key] = int(val)
            elif isinstance(default, float):
                nk[key] = float(val)
            else:
                nk[key] = val.strip()
        kw["newton"] = nk
    newton = kw.pop("newton", None)
    cfg = StudyConfig(**kw)
    if newton is not None:
        base = asdict(make_case(cfg.case, mu=cfg.mu).default_newton())
        base.update(newton)
        cfg.newton = NewtonConfig(**base)
    return cfg


@dataclass
class ConvergenceTable:
    case: str
    element: str
    kg_policy: object
    variables: tuple
    rows: list = field(default_factory=list)      # dicts: k, k_g, level, report | None, failure
    metadata: dict = field(default_factory=dict)

    def block(self, k):
        return [r for r in self.rows if r["k"] == k]

    def orders(self, k):
        """Per-variable orders of the contiguous successful rows of order k."""
        rows = [r for r in self.block(k) if r["report"] is not None]
        out = {v: [float("nan")] for v in self.variables}
        if len(rows) < 2:
            return out
        hs = [r["report"].h for r in rows]
        for v in self.variables:
            out[v] = [float("nan")] + list(convergence_orders([r["report"].errors[v] for r in rows], hs))
        return out

    def finest_orders(self, k):
        return {v: o[-1] for v, o in self.orders(k).items()}

    def finest_errors(self, k):
        rows = [r for r in self.block(k) if r["report"] is not None]
        return rows[-1]["report"].errors if rows else {}


def _normal_mode(name):
    return {"exact": EXACT_ANNULUS, "geometry": FROM_GEOMETRY}.get(name, name)


def run_cell(config: StudyConfig, case, k, level):
    """One (k, level) solve: mesh, maps, initial state, Newton, errors."""
    k_g = geometry_order(config.kg_policy, k)
    n_base = config.n_base or case.default_n_base
    mesh = generate_tobecurved_annulus(config.element, k_g, level, config.ar, case.domain,
                                       n_base=n_base)
    ref = build_reference_element(config.element, k, 2 * k + config.over_integrate)
    disc = Discretization(mesh, ref, normal_mode=_normal_mode(config.normal_mode))
    system = case.system(disc)
    U0 = case.initial_state(disc)
    newton = config.newton or case.default_newton()
    U, report = newton_solve(system, U0, newton)
    errors = case.errors(system, U, mesh, ref)
    return mesh, U, report, errors


def run_study(config: StudyConfig, progress=None) -> ConvergenceTable:
    """Run every (k, level) cell; a failed Newton solve marks its row as failed."""
    case = make_case(config.case, mu=config.mu)
    table = ConvergenceTable(config.case, config.element, config.kg_policy, case.variables)
    table.metadata = {"config": _config_dict(config), "cells": []}
    meshes = []
    for k in config.k:
        for level in range(config.start_level, config.start_level + config.levels):
            t0 = time.perf_counter()
            row = {"k": k, "k_g": geometry_order(config.kg_policy, k), "level": level,
                   "report": None, "failure": None}
            cell = {"k": k, "k_g": row["k_g"], "level": level}
            try:
                mesh, _, report, errors = run_cell(config, case, k, level)
                row["report"] = errors
                cell.update(solve=report.as_dict(), h=errors.h, n_elements=errors.n_elements,
                            ar_realized=errors.ar_realized, errors=errors.errors)
                if config.svg and k == config.k[0]:
                    meshes.append((level, mesh))
            except NewtonFailure as exc:
                row["failure"] = str(exc)
                cell.update(failed=True, message=str(exc),
                            solve=exc.report.as_dict() if exc.report else None)
                log.warning("cell k=%d level=%d failed: %s", k, level, exc)
            cell["wall_time"] = time.perf_counter() - t0
            table.rows.append(row)
            table.metadata["cells"].append(cell)
            if progress:
                progress(row, cell)
    if config.output_dir:
        write_outputs(table, config.output_dir, meshes)
    return table


def _config_dict(config):
    d = asdict(config)
    if config.newton is not None:
        d["newton"] = asdict(config.newton)
    return d


# --------------------------------------------------------------------------
# Output


def _sci(x):
    return "-" if x is None or not np.isfinite(x) else f"{x:.3e}"


def table_rows(table):
    """Header plus row lists shared by the markdown and CSV renderers."""
    header = ["Order (k)", "Mesh Size (h)"] + [f"L2 {v}" for v in table.variables] + \
             [f"order {v}" for v in table.variables]
    out = []
    for k in dict.fromkeys(r["k"] for r in table.rows):
        orders = table.orders(k)
        ok = [r for r in table.block(k) if r["report"] is not None]
        first = True
        for r in table.block(k):
            kcol = str(k) if first else ""
            first = False
            if r["report"] is None:
                out.append([kcol, f"level {r['level']}"] + ["failed"] * (2 * len(table.variables)))
                continue
            i = ok.index(r)
            line = [kcol, _sci(r["report"].h)]
            line += [_sci(r["report"].errors[v]) for v in table.variables]
            line += [_sci(orders[v][i]) if i > 0 else "-" for v in table.variables]
            out.append(line)
    return header, out


def render_table(table, fmt="markdown"):
    header, rows = table_rows(table)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    if fmt != "markdown":
        raise ValueError(f"unknown format {fmt!r}")
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def write_outputs(table, output_dir, meshes=()):
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.md").write_text(render_table(table, "markdown"))
    (out / "table.csv").write_text(render_table(table, "csv"))
    meta = dict(table.metadata)
    meta["finest_orders"] = {str(k): table.finest_orders(k) for k in dict.fromkeys(r["k"] for r in table.rows)}
    (out / "report.json").write_text(json.dumps(_finite(meta), indent=2, default=_json_default))
    for level, mesh in meshes:
        (out / f"mesh_level{level}.svg").write_text(mesh_svg(mesh))


def _finite(o):
    # strict JSON has no NaN; undefined orders become null
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if isinstance(o, (float, np.floating)) and not math.isfinite(o):
        return None
    return o


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    return str(o)
