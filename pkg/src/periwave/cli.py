"""Command-line front end.

Usage::

    periwave solve --config run.yaml [--out DIR]
    periwave dynamics --config run.yaml --solution DIR/wave_ell0.json [--out DIR]
    periwave probe NAME --config run.yaml [--out DIR]

Exit status: 0 success, 1 configuration or input error, 2 partial failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from periwave.dynamics import simulate_travelling_wave
from periwave.errors import ConvergenceError, DomainError
from periwave.functionals import QuadratureSpec
from periwave.model import MicroPotential, check_hypotheses
from periwave.probes import dispersion_table, energy_inequality, subadditivity, tails, tanh_asymptotics
from periwave.profile import Grid
from periwave.solver import InitSpec, SolverConfig, WaveSolution, continue_in_ell, summary_rows

log = logging.getLogger("periwave")

SECTION_KEYS = {
    "potential": None,  # validated by MicroPotential.from_config
    "grid": {"z_half_width", "h"},
    "quadrature": {"ell", "n_xi", "z_pad"},
    "solver": {
        "K",
        "ell_schedule",
        "max_iters",
        "step_init",
        "step_max",
        "armijo_c",
        "tol_residual",
        "tol_constraint",
        "monotonize_every",
        "init",
        "init_threshold_K",
    },
    "dynamics": {"P", "N_x", "dt", "horizon", "v_scale", "samples"},
    "output": {"directory", "stride"},
    "probe": {"K_values", "fractions", "K", "betas", "kappas", "fit_range"},
}
INIT_KEYS = {"kind", "Lambda", "L", "beta"}
PROBES = ("energy-inequality", "subadditivity", "tails", "tanh-asymptotics", "dispersion", "hypotheses")


class ConfigError(Exception):
    """Invalid configuration; the message names the offending key."""


# -- config ---------------------------------------------------------------


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping of sections")
    for name, body in doc.items():
        if name not in SECTION_KEYS:
            raise ConfigError(f"unknown section `{name}`")
        if not isinstance(body, dict):
            raise ConfigError(f"section `{name}` must be a mapping")
        allowed = SECTION_KEYS[name]
        if allowed is not None:
            for key in body:
                if key not in allowed:
                    raise ConfigError(f"unknown key `{name}.{key}`")
    init = doc.get("solver", {}).get("init")
    if init is not None:
        if not isinstance(init, dict):
            raise ConfigError("`solver.init` must be a mapping")
        for key in init:
            if key not in INIT_KEYS:
                raise ConfigError(f"unknown key `solver.init.{key}`")
    return doc


def _require(doc, section):
    if section not in doc:
        raise ConfigError(f"missing section `{section}`")
    return doc[section]


def _num(section, name, key, default=None, cast=float):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing key `{name}.{key}`")
        return default
    try:
        return cast(section[key])
    except (TypeError, ValueError):
        raise ConfigError(f"`{name}.{key}` must be a number, got {section[key]!r}") from None


def build_potential(doc) -> MicroPotential:
    try:
        return MicroPotential.from_config(_require(doc, "potential"))
    except (KeyError, ValueError, TypeError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        raise ConfigError(f"potential: {msg}") from None


def build_grid(doc) -> Grid:
    g = _require(doc, "grid")
    try:
        return Grid.symmetric(_num(g, "grid", "z_half_width"), _num(g, "grid", "h"))
    except DomainError as exc:
        raise ConfigError(f"grid: {exc}") from None


def build_quadrature(doc, ell=None) -> tuple:
    q = doc.get("quadrature", {})
    n_xi = _num(q, "quadrature", "n_xi", 32, int)
    z_pad = _num(q, "quadrature", "z_pad", 0.0)
    if ell is None:
        ell = _num(q, "quadrature", "ell", 0.0)
    try:
        return QuadratureSpec(ell=ell, n_xi=n_xi, z_pad=z_pad), n_xi
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"quadrature: {exc}") from None


def build_solver_config(doc) -> SolverConfig:
    s = _require(doc, "solver")
    q = doc.get("quadrature", {})
    schedule = s.get("ell_schedule", [q.get("ell", 0.0)])
    if not isinstance(schedule, (list, tuple)):
        raise ConfigError("`solver.ell_schedule` must be a list")
    kwargs = {"K": _num(s, "solver", "K"), "ell_schedule": tuple(schedule)}
    for key, cast in (
        ("max_iters", int),
        ("step_init", float),
        ("step_max", float),
        ("armijo_c", float),
        ("tol_residual", float),
        ("tol_constraint", float),
        ("monotonize_every", int),
        ("init_threshold_K", float),
    ):
        if key in s:
            kwargs[key] = _num(s, "solver", key, cast=cast)
    if "init" in s:
        try:
            kwargs["init"] = InitSpec(**s["init"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solver.init: {exc}") from None
    try:
        return SolverConfig(**kwargs)
    except (DomainError, ValueError, TypeError) as exc:
        text = str(exc)
        if "solver." not in text:
            text = f"solver: {text}"
        raise ConfigError(text) from None


def output_dir(doc, override) -> Path:
    out = Path(override or doc.get("output", {}).get("directory", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_csv(path, rows, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(type(x).__name__)


def write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, default=_json_default) + "\n", encoding="utf-8")


def _stem(ell: float) -> str:
    return "wave_ell" + (f"{ell:.6g}".replace(".", "p"))


# -- commands -------------------------------------------------------------


def cmd_solve(doc, out: Path) -> int:
    pot = build_potential(doc)
    grid = build_grid(doc)
    cfg = build_solver_config(doc)
    _, n_xi = build_quadrature(doc, ell=cfg.ell_schedule[0])
    status = 0
    try:
        sols = continue_in_ell(cfg, pot, grid, n_xi=n_xi)
    except ConvergenceError as err:
        sols = err.diagnostics.get("partial", [])
        log.error("%s (at ell=%s)", err, err.diagnostics.get("failed_ell"))
        if err.best is not None:
            err.best.save(out, _stem(err.best.ell) + "_unconverged")
        status = 2
    for s in sols:
        s.save(out, _stem(s.ell))
    write_csv(out / "summary.csv", summary_rows(sols), ["ell", "T", "E", "lambda", "c", "residual"])
    for s in sols:
        print(f"ell={s.ell:g} T={s.T:.12g} c={s.c} residual={s.residual_rel:.3e}")
    return status


def cmd_dynamics(doc, out: Path, solution_path) -> int:
    pot = build_potential(doc)
    try:
        sol = WaveSolution.load(solution_path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load solution {solution_path}: {exc}") from None
    quad, _ = build_quadrature(doc, ell=sol.ell)
    d = doc.get("dynamics", {})
    if sol.c is None:
        raise ConfigError(f"solution {solution_path} has no certified speed")
    horizon = _num(d, "dynamics", "horizon", 20 * pot.delta / sol.c)
    kwargs = {}
    for key, cast in (("P", float), ("N_x", int), ("dt", float), ("v_scale", float), ("samples", int)):
        if key in d:
            kwargs[key] = _num(d, "dynamics", key, cast=cast)
    stride = _num(doc.get("output", {}), "output", "stride", 0, int)
    traj = out / "trajectory.csv" if stride > 0 else None
    try:
        rep = simulate_travelling_wave(sol, pot, quad, horizon, trajectory=traj, stride=stride, **kwargs)
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"dynamics: {exc}") from None
    (out / "propagation.json").write_text(rep.to_json() + "\n", encoding="utf-8")
    print(
        f"speed={rep.measured_speed:.10g} (rel err {rep.speed_rel_error:.3e}) "
        f"shape_error={rep.shape_error:.3e} energy_drift={rep.energy_drift:.3e}"
    )
    return 0 if rep.passed() else 2


def cmd_probe(doc, out: Path, name: str) -> int:
    pot = build_potential(doc)
    pr = doc.get("probe", {})
    if name == "hypotheses":
        quad, _ = build_quadrature(doc)
        rep = check_hypotheses(pot, quad)
        write_json(out / "hypotheses.json", rep.to_dict())
        print(json.dumps(rep.to_dict(), indent=2, default=_json_default))
        return 0 if rep.all_ok else 2
    if name == "dispersion":
        kappas = pr.get("kappas", list(np.geomspace(1e-2, 50, 41)))
        try:
            rows = dispersion_table(pot, [float(k) for k in kappas])
        except ValueError as exc:
            raise ConfigError(f"probe.kappas: {exc}") from None
        write_csv(out / "dispersion.csv", rows, ["kappa", "omega", "phase", "group"])
        return 0
    if name == "tanh-asymptotics":
        quad, _ = build_quadrature(doc)
        K = _num(pr, "probe", "K", 1.0)
        betas = pr.get("betas", [0.2, 0.1, 0.05, 0.025])
        try:
            rows = tanh_asymptotics(pot, K=K, ell=quad.ell, betas=[float(b) for b in betas])
        except DomainError as exc:
            raise ConfigError(f"probe: {exc}") from None
        write_csv(out / "tanh_asymptotics.csv", rows, ["beta", "E_quadrature", "E_expansion", "error", "order"])
        for r in rows:
            print(f"beta={r['beta']:g} error={r['error']:.6e} order={r['order']:.4f}")
        return 0
    grid = build_grid(doc)
    cfg = build_solver_config(doc)
    _, n_xi = build_quadrature(doc, ell=cfg.ell_schedule[0])
    if name == "tails":
        try:
            sol = continue_in_ell(cfg, pot, grid, n_xi=n_xi)[-1]
        except ConvergenceError as err:
            log.error("%s", err)
            return 2
        fit = tuple(float(v) for v in pr.get("fit_range", (5.0, 0.5 * grid.z_max)))
        rows, summary = tails(sol, fit)
        write_csv(out / "tails.csv", rows, ["z", "log10_dq"])
        write_json(out / "tails_summary.json", summary)
        print(json.dumps(summary, indent=2))
        return 0 if summary["strictly_positive"] else 2
    K_values = [float(k) for k in pr.get("K_values", [2.0, 5.0, 10.0, 20.0])]
    if name == "energy-inequality":
        rows, _ = energy_inequality(cfg, pot, grid, K_values, n_xi)
        write_csv(out / "energy_inequality.csv", rows, ["K", "T", "n_ell_Vpp_T", "satisfied"])
        for r in rows:
            print(f"K={r['K']:g} T={r['T']:.12g} satisfied={r['satisfied']}")
        return 0 if all(r["converged"] for r in rows) else 2
    if name == "subadditivity":
        fractions = [float(f) for f in pr.get("fractions", [0.25, 0.5, 0.75])]
        rows = subadditivity(cfg, pot, grid, K_values, fractions, n_xi)
        cols = ["K", "alpha", "T_K", "T_alpha", "T_rest", "margin", "holds"]
        write_csv(out / "subadditivity.csv", rows, cols)
        write_csv(out / "subadditivity_violations.csv", [r for r in rows if r["converged"] and not r["holds"]], cols)
        for r in rows:
            print(f"K={r['K']:g} alpha={r['alpha']:g} margin={r['margin']:.6g} holds={r['holds']}")
        return 0 if all(r["converged"] for r in rows) else 2
    raise ConfigError(f"unknown probe `{name}`")


# -- entry point ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="periwave", description="Solitary travelling waves in 1D peridynamics.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "dynamics", "probe"):
        p = sub.add_parser(name)
        if name == "probe":
            p.add_argument("probe", choices=PROBES)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        if name == "dynamics":
            p.add_argument("--solution", required=True, help="WaveSolution JSON written by `solve`")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        doc = load_config(args.config)
        out = output_dir(doc, args.out)
        if args.command == "solve":
            return cmd_solve(doc, out)
        if args.command == "dynamics":
            return cmd_dynamics(doc, out, args.solution)
        return cmd_probe(doc, out, args.probe)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
