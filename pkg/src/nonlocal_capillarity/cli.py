"""Batch command line front end.

Every command reads ``key = value`` settings from an optional config file,
then applies ``--set key=value`` overrides. Exit codes:

    0  success
    1  malformed configuration or failed verification
    2  no interior solution of the Young equation
    3  the Young deficit vanishes on an interval (nonunique angle)
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NoInteriorSolution
from .kernels import AnisotropyFn, KernelSpec

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_INTERIOR = 2
EXIT_NONUNIQUE = 3


class ConfigError(ValueError):
    pass


# -- configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class Key:
    parse: Callable[[str], object]
    default: object
    check: Optional[Callable[[object], bool]] = None
    help: str = ""


def _unit_open(v) -> bool:
    return 0.0 < v < 1.0


def _text(v: str) -> str:
    return v.strip()


_FINITE = lambda v: math.isfinite(v)  # noqa: E731

_ANGLE_KEYS = {
    "s1": Key(float, 0.5, _unit_open, "exponent of the droplet kernel"),
    "s2": Key(float, 0.5, _unit_open, "exponent of the exterior kernel"),
    "sigma": Key(float, 0.0, _FINITE, "relative adhesion coefficient"),
    "a1": Key(_text, "const", None, "'const', 'const:<value>' or a planar anisotropy table"),
    "a2": Key(_text, "const", None, "as a1, for the exterior kernel"),
    "n": Key(int, 2, lambda v: v >= 2, "ambient dimension (tables require n = 2)"),
    "grid_size": Key(int, 1024, lambda v: v >= 16 and v % 2 == 0, "profile grid size"),
    "tol": Key(float, 1e-10, lambda v: v > 0, "bisection tolerance"),
    "seed": Key(int, 0, None, "Monte Carlo seed (n >= 4)"),
    "output_dir": Key(_text, "", None, "directory for CSV output and the resolved config"),
}

_SCAN_KEYS = dict(_ANGLE_KEYS)
_SCAN_KEYS.update({
    "sweep": Key(_text, "sigma", lambda v: v in ("sigma", "s1"), "swept parameter: sigma or s1"),
    "start": Key(float, -0.9, _FINITE),
    "stop": Key(float, 0.9, _FINITE),
    "steps": Key(int, 19, None, "number of sweep points"),
})

_VERIFY_KEYS = {
    "suite": Key(_text, "cstar", lambda v: v in _SUITES, "cstar | reduction | duality | dual-angle"),
    "seed": Key(int, 0, None),
    "output_dir": Key(_text, "", None),
}

_MIN_KEYS = {
    "width": Key(int, 64, lambda v: v >= 2),
    "height": Key(int, 64, lambda v: v >= 2),
    "omega": Key(_text, "", None, "container raster file (overrides width and height)"),
    "h": Key(float, 1.0, lambda v: v > 0, "cell spacing"),
    "s1": Key(float, 0.5, _unit_open),
    "s2": Key(float, 0.5, _unit_open),
    "a1": Key(_text, "const", None),
    "a2": Key(_text, "const", None),
    "sigma": Key(float, 0.0, _FINITE),
    "g": Key(float, 0.0, _FINITE, "constant potential per unit area"),
    "m": Key(int, 600, None, "droplet volume in cells"),
    "seed": Key(int, 0, None),
    "T0": Key(float, -1.0, _FINITE, "initial temperature (negative: energy / (10 m))"),
    "cooling": Key(float, 0.995, lambda v: 0 < v <= 1),
    "sweeps": Key(int, 500, lambda v: v >= 0),
    "proposal": Key(_text, "mixed", lambda v: v in ("uniform", "interface", "mixed")),
    "init": Key(_text, "random", lambda v: v in ("random", "block")),
    "wall": Key(_text, "auto", lambda v: v in ("none", "auto", "bottom", "top", "left", "right")),
    "window": Key(int, 8, lambda v: v >= 2),
    "fit": Key(_text, "line", lambda v: v in ("line", "quadratic")),
    "output_dir": Key(_text, "nlcap_out", None),
}


def parse_config_text(text: str) -> dict[str, str]:
    """Raw ``key = value`` pairs; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {no}: empty key")
        out[key] = value
    return out


def resolve_config(schema: dict[str, Key], raw: dict[str, str]) -> dict[str, object]:
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    cfg = {}
    for key, spec in schema.items():
        if key in raw:
            try:
                value = spec.parse(raw[key])
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        else:
            value = spec.default
        if spec.check is not None and not spec.check(value):
            raise ConfigError(f"{key}: value {value!r} out of range")
        cfg[key] = value
    return cfg


def format_config(cfg: dict[str, object]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.items())


def _load(schema: dict[str, Key], args) -> dict[str, object]:
    raw: dict[str, str] = {}
    if args.config:
        try:
            raw.update(parse_config_text(Path(args.config).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    return resolve_config(schema, raw)


# -- shared builders -------------------------------------------------------------

def anisotropy_from_setting(value: str, dim: int = 2) -> AnisotropyFn:
    if value == "const" or value.startswith("const:"):
        try:
            level = float(value.split(":", 1)[1]) if ":" in value else 1.0
        except ValueError:
            raise ConfigError(f"bad constant anisotropy: {value!r}") from None
        if not level > 0:
            raise ConfigError("constant anisotropy must be positive")
        return AnisotropyFn.constant(level, dim)
    if dim != 2:
        raise ConfigError("anisotropy tables are planar: use n = 2 or 'const'")
    path = Path(value)
    if not path.exists():
        raise ConfigError(f"anisotropy table not found: {value}")
    try:
        return AnisotropyFn.from_table(path)
    except (ValueError, DomainError) as exc:
        raise ConfigError(f"bad anisotropy table {value}: {exc}") from None


def _profiles(cfg: dict, s1: float):
    from .reduction import build_phi

    n = cfg["n"]
    a1 = anisotropy_from_setting(cfg["a1"], n)
    a2 = anisotropy_from_setting(cfg["a2"], n)
    phi1 = build_phi(a1, n, s1, cfg["grid_size"], seed=cfg["seed"])
    phi2 = build_phi(a2, n, s1, cfg["grid_size"], seed=cfg["seed"])
    return phi1, phi2


ANGLE_HEADER = ["regime", "theta_rad", "theta_deg", "residual", "sigma_bound", "unique"]


def _solve_row(cfg: dict, s1: float, sigma: float) -> tuple[list, int]:
    from .young import YoungProblem, sigma_bound, solve_contact_angle

    phi1, phi2 = _profiles(cfg, s1)
    problem = YoungProblem(s1, cfg["s2"], sigma, phi1, phi2)
    try:
        sol = solve_contact_angle(problem, tol=cfg["tol"])
    except NoInteriorSolution:
        bound = sigma_bound(phi1, phi2, s1)
        return ["no-interior-solution", "", "", "", _num(bound), ""], EXIT_NO_INTERIOR
    code = EXIT_OK if sol.unique else EXIT_NONUNIQUE
    return [sol.regime.value, _num(sol.theta), _num(math.degrees(sol.theta)), _num(sol.residual),
            _num(sol.sigma_bound), str(bool(sol.unique)).lower()], code


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _write_outputs(cfg: dict, name: str, text: str) -> None:
    if not cfg.get("output_dir"):
        return
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    (out / "config.resolved").write_text(format_config(cfg))


def _csv(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def workers() -> int:
    try:
        return max(1, int(os.environ.get("NLCAP_WORKERS", "1")))
    except ValueError:
        return 1


# -- commands --------------------------------------------------------------------

def cmd_solve_angle(cfg: dict) -> int:
    row, code = _solve_row(cfg, cfg["s1"], cfg["sigma"])
    text = _csv(ANGLE_HEADER, [row])
    sys.stdout.write(text)
    _write_outputs(cfg, "angle.csv", text)
    return code


def _scan_point(args) -> list:
    cfg, value = args
    s1 = value if cfg["sweep"] == "s1" else cfg["s1"]
    sigma = value if cfg["sweep"] == "sigma" else cfg["sigma"]
    row, _ = _solve_row(cfg, s1, sigma)
    return [_num(value)] + row


def cmd_scan(cfg: dict) -> int:
    if cfg["steps"] < 1:
        raise ConfigError("steps must be at least 1")
    if cfg["steps"] > 1 and cfg["start"] == cfg["stop"]:
        raise ConfigError("empty sweep range")
    values = np.linspace(cfg["start"], cfg["stop"], cfg["steps"])
    if cfg["sweep"] == "s1" and not np.all((values > 0) & (values < 1)):
        raise ConfigError("s1 sweep must stay inside (0, 1)")
    jobs = [(cfg, float(v)) for v in values]
    nw = workers()
    if nw > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            rows = list(pool.map(_scan_point, jobs))
    else:
        rows = [_scan_point(j) for j in jobs]
    text = _csv([cfg["sweep"]] + ANGLE_HEADER, rows)
    sys.stdout.write(text)
    _write_outputs(cfg, "scan.csv", text)
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    checks = _SUITES[cfg["suite"]](cfg["seed"])
    lines = []
    ok = True
    for name, passed, detail in checks:
        lines.append(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= bool(passed)
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    _write_outputs(cfg, "verify.txt", text)
    return EXIT_OK if ok else EXIT_CONFIG


def _build_domain(cfg: dict):
    from .droplet import GridDomain
    from .regions import read_raster

    if cfg["omega"]:
        try:
            mask = read_raster(cfg["omega"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"bad container raster: {exc}") from None
    else:
        mask = np.ones((cfg["height"], cfg["width"]), dtype=bool)
    g = np.full(mask.shape, cfg["g"])
    return GridDomain(mask, cfg["h"], g)


def _predicted_angle(cfg: dict) -> Optional[float]:
    from .young import YoungProblem, solve_contact_angle
    from .reduction import build_phi

    a1 = anisotropy_from_setting(cfg["a1"])
    a2 = anisotropy_from_setting(cfg["a2"])
    phi1 = build_phi(a1, 2, cfg["s1"])
    phi2 = build_phi(a2, 2, cfg["s1"])
    try:
        return solve_contact_angle(YoungProblem(cfg["s1"], cfg["s2"], cfg["sigma"], phi1, phi2)).theta
    except (NoInteriorSolution, DomainError):
        return None


def cmd_minimize(cfg: dict) -> int:
    from .droplet import CapillaryProblem, Schedule, minimize
    from .regions import format_raster

    domain = _build_domain(cfg)
    if not 0 < cfg["m"] < domain.cell_count:
        raise ConfigError(f"m must satisfy 0 < m < {domain.cell_count}")
    K1 = KernelSpec(cfg["s1"], anisotropy_from_setting(cfg["a1"]))
    K2 = KernelSpec(cfg["s2"], anisotropy_from_setting(cfg["a2"]))
    problem = CapillaryProblem(domain, K1, K2, cfg["sigma"], cfg["m"])
    schedule = Schedule(T0=None if cfg["T0"] < 0 else cfg["T0"], cooling=cfg["cooling"], sweeps=cfg["sweeps"],
                        seed=cfg["seed"], proposal=cfg["proposal"], init=cfg["init"])
    wall = None if cfg["wall"] == "none" else cfg["wall"]
    report = minimize(problem, schedule, wall=wall, window=cfg["window"])
    if wall is not None and report.measured_angle is not None and cfg["fit"] != "line":
        from .droplet import measure_contact_angle

        report.measured_angle = measure_contact_angle(report.final_mask, domain.omega_mask, wall,
                                                      cfg["window"], cfg["fit"]).theta
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved").write_text(format_config(cfg))
    (out / "mask.pbm").write_text(format_raster(report.final_mask))
    (out / "trace.csv").write_text(_csv(["step", "energy"], [[s, repr(e)] for s, e in report.energy_trace]))
    summary = [["final_energy", repr(report.final_energy)], ["accepted_moves", report.accepted_moves],
               ["wall_contact_fraction", repr(report.wall_contact_fraction)]]
    if wall is not None:
        pred = _predicted_angle(cfg)
        meas = report.measured_angle
        row = [_num(cfg["sigma"]), _num(pred), _num(None if pred is None else math.degrees(pred)),
               _num(meas), _num(None if meas is None else math.degrees(meas))]
        (out / "angle.csv").write_text(_csv(["sigma", "theta_pred", "theta_pred_deg", "theta_meas",
                                             "theta_meas_deg"], [row]))
        summary.append(["theta_meas_deg", row[4]])
        summary.append(["theta_pred_deg", row[2]])
    sys.stdout.write(_csv(["quantity", "value"], summary))
    return EXIT_OK


# -- verification suites -----------------------------------------------------------

def _suite_cstar(seed: int) -> list:
    from .geometry import c_star, c_star_exact, slab_halfspace_interaction

    out = []
    n, s = 2, 0.5
    num, closed = slab_halfspace_interaction(n, s, 1.0, 1.0)
    rel = abs(num - closed) / closed
    out.append(("slab vs closed-form c* (n=2, s=0.5)", rel <= 0.02, f"numeric {num:.6g}, closed form {closed:.6g}, rel {rel:.3g}"))
    exact = c_star_exact(n, s)
    rel = abs(num - exact) / exact
    out.append(("slab vs ball-volume constant (n=2, s=0.5)", rel <= 0.02, f"numeric {num:.6g}, constant {exact:.6g}, rel {rel:.3g}"))
    t2, _ = slab_halfspace_interaction(n, s, 1.0, 2.0)
    expo = math.log2(t2 / num)
    out.append(("t-scaling exponent", abs(expo - (1 - s)) <= 0.05 * (1 - s), f"{expo:.6g} vs {1 - s}"))
    r2, _ = slab_halfspace_interaction(n, s, 2.0, 1.0)
    expo = math.log2(r2 / num)
    out.append(("r-scaling exponent", abs(expo - (n - 1)) <= 0.05 * (n - 1), f"{expo:.6g} vs {n - 1}"))
    ratio = c_star(n, s) / c_star_exact(n, s)
    out.append(("closed-form / ball-volume constant ratio", True, f"{ratio:.12g}"))
    return out


def _suite_reduction(seed: int) -> list:
    from scipy.special import gamma

    from .reduction import PhiProfile, build_phi, project_anisotropy
    from .young import YoungProblem, wedge_young_residual

    out = []
    a = AnisotropyFn.constant(1.0, 3)
    val = project_anisotropy(a, 3, 0.5, np.array([1.0, 0.0]))
    ref = math.sqrt(math.pi) * gamma(1.25) / gamma(1.75)
    out.append(("n=3 constant projection", abs(val - ref) <= 1e-9, f"{val:.12g} vs {ref:.12g}"))
    tilt = AnisotropyFn.planar(lambda t: 1.0 + 0.3 * np.cos(2 * t) ** 2)
    phi = build_phi(tilt, 2, 0.5)
    out.append(("half-period symmetry", phi.symmetry_defect() <= 1e-12, f"defect {phi.symmetry_defect():.3g}"))
    for s1 in (0.3, 0.7):
        p = YoungProblem(s1, s1, 0.2, build_phi(tilt, 2, s1), PhiProfile.constant(s1))
        for theta in (math.pi / 6, math.pi / 2, 2 * math.pi / 3):
            red, direct = wedge_young_residual(p, theta)
            rel = abs(red - direct) / max(abs(red), 1e-300)
            out.append((f"reduced vs direct s1={s1} theta={theta:.4f}", rel <= 1e-4,
                        f"{red:.10g} vs {direct:.10g}, rel {rel:.3g}"))
    return out


def _suite_duality(seed: int) -> list:
    from .droplet import CapillaryProblem, GridDomain, complement_duality_check

    rng = np.random.default_rng(seed)
    K = KernelSpec.isotropic(0.5)
    domain = GridDomain.rectangle(32, 32)
    out = []
    for trial in range(3):
        F = rng.random((32, 32)) < rng.uniform(0.2, 0.8)
        for sigma in (-1.0, -0.3, 0.5, 2.0):
            p = CapillaryProblem(domain, K, K, sigma, 1)
            lhs, rhs, defect = complement_duality_check(p, F)
            out.append((f"mask {trial} sigma={sigma}", defect <= 1e-9 * (1 + abs(lhs)),
                        f"lhs {lhs:.12g}, rhs {rhs:.12g}, defect {defect:.3g}"))
    return out


def _suite_dual_angle(seed: int) -> list:
    from .reduction import PhiProfile, build_phi
    from .young import YoungProblem, dual_angle, solve_contact_angle

    out = []
    const = PhiProfile.constant(0.5)
    for theta in (0.7, math.pi / 2, 2.2):
        r = dual_angle(const, 0.5, theta)
        out.append((f"constant weight theta={theta:.4f}", abs(r.theta_hat - theta) <= 1e-6,
                    f"theta_hat {r.theta_hat:.10g}"))
    tilt = AnisotropyFn.planar(lambda t: 1.0 + 0.4 * np.cos(t) ** 2 + 0.2 * np.sin(t) * np.cos(t))
    phi = build_phi(tilt, 2, 0.5)
    star = solve_contact_angle(YoungProblem(0.5, 0.5, 0.0, phi)).theta
    r = dual_angle(phi, 0.5, star)
    out.append(("anisotropic weight, sigma=0", abs(r.theta_hat - (math.pi - star)) <= 1e-4,
                f"theta_hat {r.theta_hat:.10g} vs pi - theta* {math.pi - star:.10g}"))
    return out


_SUITES = {
    "cstar": _suite_cstar,
    "reduction": _suite_reduction,
    "duality": _suite_duality,
    "dual-angle": _suite_dual_angle,
}

_COMMANDS = {
    "solve-angle": (_ANGLE_KEYS, cmd_solve_angle),
    "scan": (_SCAN_KEYS, cmd_scan),
    "verify": (_VERIFY_KEYS, cmd_verify),
    "minimize": (_MIN_KEYS, cmd_minimize),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlcap", description="Nonlocal contact angles and droplet minimization.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (schema, _) in _COMMANDS.items():
        sp = sub.add_parser(name, help=f"{name} (keys: {', '.join(schema)})")
        sp.add_argument("config", nargs="?", help="config file with 'key = value' lines")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        if name == "verify":
            sp.add_argument("--suite", help="shortcut for --set suite=NAME")
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    schema, command = _COMMANDS[args.command]
    if getattr(args, "suite", None):
        args.set = (args.set or []) + [f"suite={args.suite}"]
    try:
        cfg = _load(schema, args)
        return command(cfg)
    except (ConfigError, DomainError) as exc:
        print(f"nlcap: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
