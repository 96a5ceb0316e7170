"""Command-line interface: ``python -m tsrm <command>`` or ``tsrm <command>``.

Exit codes: 0 success, 1 usage error, 2 failed numerical check, 3 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, airy, marginals, pde, transforms
from .errors import ConfigurationError, DomainError, RangeError, TSRMError

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_IO = 0, 1, 2, 3

COMMANDS = ("density", "moments", "tails", "spectrum", "simulate", "pde", "selftest")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """All knobs of a run; round-trips through JSON."""

    command: str = "selftest"
    out: str | None = None
    seed: int = 20240601
    format: str = "csv"
    k_max: int = airy.DEFAULT_K_MAX
    grid: dict = field(default_factory=lambda: dict(pde.DEFAULT_GRID))
    n_paths: int = 100_000
    dt: float = 1e-4
    n_walks: int = 100_000
    n_steps: int = 100_000
    beta: float = 1.0
    mode: str = "fixed"
    level: str = "quick"

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.mode not in ("fixed", "geometric"):
            raise UsageError("mode must be fixed or geometric")
        if self.level not in ("quick", "full"):
            raise UsageError("level must be quick or full")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        for name in ("k_max", "n_paths", "n_walks", "n_steps"):
            if int(getattr(self, name)) <= 0:
                raise UsageError(f"{name} must be positive")
        for name in ("dt", "beta"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise UsageError(f"{name} must be positive")
        for k, v in self.grid.items():
            if k not in pde.DEFAULT_GRID or not (math.isfinite(v) and v > 0):
                raise UsageError(f"bad grid entry {k}={v}")
        return self

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "grid" in d:
            d["grid"] = {**pde.DEFAULT_GRID, **d["grid"]}
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _header(cfg: RunConfig) -> str:
    return f"tsrm {__version__}\ncommand: {cfg.command}\nconfig: {cfg.to_json()}"


def _open_out(path, suffix=""):
    if path is None or path == "-":
        return sys.stdout, False
    return open(f"{path}{suffix}", "w"), True


def write_table(cfg: RunConfig, columns, rows, suffix=""):
    """CSV with a provenance comment header, 17 significant digits."""
    fh, close = _open_out(cfg.out, suffix)
    try:
        for line in _header(cfg).splitlines():
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        buf = io.StringIO()
        np.savetxt(buf, np.asarray(rows, dtype=float), delimiter=",", fmt="%.17g")
        fh.write(buf.getvalue())
    finally:
        if close:
            fh.close()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_report(cfg: RunConfig, report: dict, suffix=""):
    """JSON report; floats use the shortest repr that round-trips exactly."""
    doc = {"provenance": {"version": __version__, "command": cfg.command,
                          "config": json.loads(cfg.to_json())}, **report}
    fh, close = _open_out(cfg.out, suffix)
    try:
        json.dump(_jsonable(doc), fh, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _parse_range(text: str):
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError as exc:
        raise UsageError("range must be 'a,b'") from exc
    if not (math.isfinite(a) and math.isfinite(b) and b > a):
        raise UsageError("range needs finite a < b")
    return a, b


def cmd_density(cfg: RunConfig, kind: str, rng_text: str | None, points: int) -> int:
    try:
        kind = marginals.MarginalKind(kind)
    except ValueError as exc:
        raise UsageError(f"kind must be one of {[k.value for k in marginals.MarginalKind]}") from exc
    if points < 2:
        raise UsageError("points must be >= 2")
    if rng_text is None:
        a, b = (-4.0, 4.0) if kind.is_position else (0.0, 4.0)
    else:
        a, b = _parse_range(rng_text)
    if kind.is_position:
        r = max(abs(a), abs(b))
        a, b = -r, r
    elif a < 0:
        raise UsageError("height densities live on h >= 0")
    x = np.linspace(a, b, points)
    y = marginals.density(kind, x, cfg.k_max)
    if cfg.format == "json":
        write_report(cfg, {"kind": kind.value, "argument": x, "density": y})
    else:
        write_table(cfg, ["argument", "density"], np.column_stack([x, y]))
    return EXIT_OK


def cmd_moments(cfg: RunConfig, n_max: int) -> int:
    if n_max < 0:
        raise UsageError("n_max must be >= 0")
    rows = [(n, marginals.moment_H(n), marginals.moment_absX(n, cfg.k_max)) for n in range(n_max + 1)]
    if cfg.format == "csv":
        write_table(cfg, ["n", "E_H_n", "E_absX_n"], rows)
    else:
        write_report(cfg, {"moments": [{"n": n, "height": h, "abs_position": x} for n, h, x in rows]})
    return EXIT_OK


def cmd_tails(cfg: RunConfig) -> int:
    fits = {k: marginals.tail_report(k, k_max=cfg.k_max) for k in ("height", "position")}
    report = dict(marginals.tail_constants(cfg.k_max))
    report["fits"] = {k: {"fitted_slope": r.fitted_slope, "fit_range": r.fit_range,
                          "relative_error": r.relative_error} for k, r in fits.items()}
    write_report(cfg, report)
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    data = airy.spectrum(cfg.k_max)
    k = np.arange(1, data.k_max + 1)
    if cfg.format == "csv":
        write_table(cfg, ["k", "delta_prime", "p"], np.column_stack([k, data.delta_prime, data.p]))
    else:
        write_report(cfg, {"delta_prime": data.delta_prime, "p": data.p,
                           "tail_estimate": data.tail_estimate, "tail_bound": data.tail_bound})
    return EXIT_OK


def _simulate_tsaw(cfg: RunConfig) -> dict:
    from .stochastic import gof, tsaw

    ens = tsaw.tsaw_ensemble(cfg.n_walks, cfg.n_steps, cfg.beta, cfg.mode, cfg.seed)
    x, h = tsaw.rescale(ens)
    exp_time = cfg.mode == "geometric"
    kx = "nu1_hat" if exp_time else "nu1"
    kh = "nu2_hat" if exp_time else "nu2"
    rx = gof.calibrate_and_test(x, kx)
    rh = gof.calibrate_and_test(h, kh)
    if cfg.out not in (None, "-"):
        write_table(cfg, ["position_scaled", "height_scaled"],
                    np.column_stack([rx.calibrated_scale * x, rh.calibrated_scale * h]), ".samples.csv")
        for tag, r in (("position", rx), ("height", rh)):
            edges, counts = r.histogram
            write_table(cfg, ["bin_left", "bin_right", "count"],
                        np.column_stack([edges[:-1], edges[1:], counts]), f".{tag}.hist.csv")
    return {"position": {k: v for k, v in rx.to_dict().items() if k != "histogram"},
            "height": {k: v for k, v in rh.to_dict().items() if k != "histogram"}}


def _simulate_brownian(cfg: RunConfig) -> dict:
    from .stochastic import brownian

    xs = np.array([0.0, 0.25, 0.5, 1.0, 2.0])
    out = {}
    for h0 in (0.0, 0.25, 0.5, 1.0):
        ens = brownian.simulate_paths(h0, xs, cfg.n_paths, cfg.dt, cfg.seed + int(1000 * h0))
        mu, su = ens.estimate("u")
        mp, sp = ens.estimate("phi")
        mn, sn = ens.estimate("nu_hat")
        out[f"h={h0}"] = {
            "u": {"estimate": mu, "std_error": su, "exact": airy.u(h0)},
            "phi": {"x": xs, "estimate": mp, "std_error": sp},
            "nu_hat": {"x": xs, "estimate": mn, "std_error": sn},
        }
    out["h=0.0"]["w_exact"] = marginals.w_of_x(xs, cfg.k_max)
    return out


def cmd_simulate(cfg: RunConfig, which: str) -> int:
    if which == "tsaw":
        report = _simulate_tsaw(cfg)
    elif which == "brownian":
        report = _simulate_brownian(cfg)
    else:
        raise UsageError("simulate needs 'tsaw' or 'brownian'")
    suffix = ".gof.json" if cfg.out not in (None, "-") else ""
    write_report(cfg, report, suffix)
    return EXIT_OK


def pde_consistency(field_: pde.PdeField, k_max: int = airy.DEFAULT_K_MAX) -> dict:
    hs = np.array([0.0, 0.5, 1.0, 2.0])
    xs = np.array([0.25, 0.5, 1.0, 2.0])
    H = pde.pde_height_marginal(field_)
    X = pde.pde_position_marginal(field_)
    jh = np.rint(hs / field_.dh).astype(int)
    jx = np.rint(xs / field_.dx).astype(int)
    dev_h = np.abs(H[jh] - marginals.nu2_hat(hs))
    dev_x = np.abs(X[jx] - marginals.nu1_hat(xs, k_max))
    xx = field_.x_grid[field_.x_grid <= 3.0]
    dev_w = float(np.max(np.abs(field_.values[:xx.size, 0] - marginals.w_of_x(xx, k_max))))
    lap = []
    for h in (0.0, 0.5, 1.0, 2.0):
        j = int(round(h / field_.dh))
        num = transforms.numerical_laplace(field_.x_grid, field_.values[:, j], 1.0, decay=pde.x_tail_rate())
        lap.append(abs(num - transforms.phi_tilde(1.0, h)))
    devs = {"height_marginal": float(dev_h.max()), "position_marginal": float(dev_x.max()),
            "w_boundary": dev_w, "total_mass": abs(pde.pde_total_mass(field_) - 1.0),
            "laplace_vs_phi_tilde": float(max(lap))}
    return {"max_deviation": max(devs.values()), "deviations": devs, "tolerance": 1e-3}


def cmd_pde(cfg: RunConfig) -> int:
    g = cfg.grid
    f = pde.solve_phi(g["x_max"], g["h_max"], g["dx"], g["dh"])
    report = pde_consistency(f, cfg.k_max)
    report["scheme"] = f.scheme
    if cfg.out not in (None, "-"):
        f.to_csv(f"{cfg.out}.field.csv", _header(cfg))
        write_report(cfg, report, ".report.json")
    else:
        write_report(cfg, report)
    return EXIT_OK if report["max_deviation"] <= report["tolerance"] else EXIT_CHECK


def cmd_selftest(cfg: RunConfig) -> int:
    from . import selftest

    results = selftest.run(cfg.level, seed=cfg.seed)
    failed = [r for r in results if not r["passed"]]
    write_report(cfg, {"level": cfg.level, "passed": not failed, "n_checks": len(results),
                       "failures": failed, "checks": results})
    return EXIT_OK if not failed else EXIT_CHECK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _grid_arg(text: str) -> dict:
    try:
        dx, dh, x_max, h_max = (float(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("grid must be dx,dh,xmax,hmax") from exc
    return {"dx": dx, "dh": dh, "x_max": x_max, "h_max": h_max}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output path (prefix for multi-file commands); default stdout")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--k-max", dest="k_max", type=int)
    common.add_argument("--n-paths", dest="n_paths", type=int)
    common.add_argument("--dt", type=float)
    common.add_argument("--n-walks", dest="n_walks", type=int)
    common.add_argument("--n-steps", dest="n_steps", type=int)
    common.add_argument("--beta", type=float)
    common.add_argument("--mode", choices=("fixed", "geometric"))
    common.add_argument("--grid", type=_grid_arg, help="dx,dh,xmax,hmax")
    lvl = common.add_mutually_exclusive_group()
    lvl.add_argument("--quick", dest="level", action="store_const", const="quick")
    lvl.add_argument("--full", dest="level", action="store_const", const="full")

    p = _Parser(prog="tsrm", description="Marginal laws of the true self-repelling motion.")
    p.add_argument("--version", action="version", version=f"tsrm {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    d = sub.add_parser("density", parents=[common], help="tabulate a marginal density")
    d.add_argument("kind", help="nu1, nu2, nu1_hat or nu2_hat")
    d.add_argument("--range", dest="range_", help="a,b (symmetrized for positions)")
    d.add_argument("--points", type=int, default=401)
    m = sub.add_parser("moments", parents=[common], help="closed-form moments")
    m.add_argument("--n-max", dest="n_max", type=int, default=6)
    sub.add_parser("tails", parents=[common], help="tail constants and cubic-slope fits")
    sub.add_parser("spectrum", parents=[common], help="zeros delta'_k and weights p_k")
    s = sub.add_parser("simulate", parents=[common], help="lattice walk or Brownian Monte Carlo")
    s.add_argument("which", choices=("tsaw", "brownian"))
    sub.add_parser("pde", parents=[common], help="solve the phi PDE and check marginals")
    sub.add_parser("selftest", parents=[common], help="run the numerical self-checks")
    return p


_CONFIG_KEYS = ("seed", "out", "format", "k_max", "n_paths", "dt", "n_walks", "n_steps",
                "beta", "mode", "grid", "level")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    base = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                base = json.load(fh)
        except ValueError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
    cfg = RunConfig.from_dict(base)
    cfg.command = ns.command
    for key in _CONFIG_KEYS:
        v = getattr(ns, key, None)
        if v is not None:
            setattr(cfg, key, {**cfg.grid, **v} if key == "grid" else v)
    return cfg.validate()


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
        if ns.command == "density":
            return cmd_density(cfg, ns.kind, ns.range_, ns.points)
        if ns.command == "moments":
            return cmd_moments(cfg, ns.n_max)
        if ns.command == "tails":
            return cmd_tails(cfg)
        if ns.command == "spectrum":
            return cmd_spectrum(cfg)
        if ns.command == "simulate":
            return cmd_simulate(cfg, ns.which)
        if ns.command == "pde":
            return cmd_pde(cfg)
        return cmd_selftest(cfg)
    except UsageError as exc:
        print(f"tsrm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, DomainError) as exc:
        print(f"tsrm: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"tsrm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RangeError, TSRMError) as exc:
        print(f"tsrm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
