"""Command-line experiment runner.

Every subcommand writes its data as CSV (or JSON for reports) into the
output directory plus a ``<name>.meta.json`` sidecar echoing the full
configuration, the seed, the package version and the wall time. Data files
depend only on the configuration, never on ``--jobs`` or timing.

Exit status: 0 success, 2 invalid configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, NumericalError
from .io import write_csv, write_json

OUT_ENV = "ANDERSON1D_OUT"


def float_list(s: str) -> list[float]:
    """``"a,b,c"`` or ``"lo:hi:n"`` (``n`` evenly spaced points)."""
    s = str(s).strip()
    try:
        if ":" in s:
            lo, hi, n = s.split(":")
            return [float(x) for x in np.linspace(float(lo), float(hi), int(n))]
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as e:
        raise ConfigurationError(f"cannot parse number list {s!r}") from e


def int_range(s: str) -> list[int]:
    """``"a..b"`` (inclusive) or ``"a,b,c"``."""
    s = str(s).strip()
    try:
        if ".." in s:
            a, b = s.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError as e:
        raise ConfigurationError(f"cannot parse index range {s!r}") from e


def complex_list(s: str) -> list[complex]:
    try:
        return [complex(x.replace(" ", "")) for x in str(s).split(",") if x.strip()]
    except ValueError as e:
        raise ConfigurationError(f"cannot parse complex list {s!r}") from e


# name -> (parser, default, help)
COMMON = {
    "seed": (int, 0, "master seed"),
    "jobs": (int, 1, "worker processes"),
    "h": (float, 1e-3, "step of the noise grid"),
}
COMMANDS = {
    "lyapunov": {
        "lambda": (float_list, "-5,0,5", "spectral parameters"),
        "T": (float, 2000.0, "horizon of each Monte Carlo replica"),
        "replicas": (int, 100, "Monte Carlo replicas"),
        "hist_T": (float, 1e5, "horizon of the phase histogram"),
        "burn_in": (float, 50.0, "burn-in of the phase histogram"),
        "bins": (int, 128, "histogram bins"),
    },
    "dos": {
        "lambda": (float_list, "-10:10:41", "spectral parameters"),
    },
    "spectrum": {
        "L": (float, 200.0, "box length"),
        "k": (int_range, "1..30", "eigenvalue indices"),
        "alpha": (float, 0.0, "boundary angle"),
        "lam_tol": (float, 1e-10, "eigenvalue tolerance"),
        "eigenfunctions": (int, 0, "also write eigenfunction CSVs (0/1)"),
    },
    "localize": {
        "L": (float, 200.0, "box length"),
        "window": (float_list, "-1,1", "eigenvalue window lo,hi"),
        "realizations": (int, 10, "independent noise paths"),
        "per_realization": (int, 3, "eigenpairs per path"),
    },
    "weyl": {
        "z": (complex_list, "1j", "spectral parameters (Im z != 0)"),
        "b": (float_list, "1,2,5,10", "right ends"),
    },
    "pam": {
        "L": (float, 20.0, "box length"),
        "t": (float, 1.0, "time"),
        "y": (float, 0.0, "source point"),
        "dx": (float, 0.05, "cell width (rounded to an odd cell count)"),
        "dt": (float, 0.0, "time step (0: dx^2/2)"),
        "spectral": (int, 1, "compare with the eigen-expansion (0/1)"),
    },
    "moment-check": {
        "t": (float, 1.0, "time"),
        "replicas": (int, 500, "Monte Carlo replicas"),
        "box": (float, 40.0, "box length"),
        "dx": (float, 0.05, "cell width"),
        "refine": (int, 3, "odd refinement factor of the margin study"),
    },
}


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigurationError(f"cannot read config file {path}: {e}") from e
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


def resolve(command: str, flags: dict, config_file=None) -> dict:
    """Defaults, then the config file, then explicit flags; all values parsed and validated."""
    table = {**COMMON, **COMMANDS[command]}
    raw = {k: v[1] for k, v in table.items()}
    if config_file:
        for k, v in read_config(config_file).items():
            if k not in table:
                raise ConfigurationError(f"unknown config key {k!r} for {command}")
            raw[k] = v
    for k, v in flags.items():
        if v is not None and k in table:
            raw[k] = v
    cfg = {}
    for k, (parse, _, _) in table.items():
        v = raw[k]
        try:
            cfg[k] = parse(v) if isinstance(v, str) or parse in (int, float) else v
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"bad value for {k}: {v!r}") from e
    validate(command, cfg)
    return cfg


def _positive(cfg, *names):
    for n in names:
        if not cfg[n] > 0:
            raise ConfigurationError(f"{n} must be positive, got {cfg[n]}")


def validate(command: str, cfg: dict):
    _positive(cfg, "h", "jobs")
    if command == "lyapunov":
        _positive(cfg, "T", "hist_T", "bins")
        if cfg["replicas"] < 2:
            raise ConfigurationError("replicas must be >= 2")
        if cfg["burn_in"] < 10 or cfg["hist_T"] < 100 * cfg["burn_in"]:
            raise ConfigurationError("need burn_in >= 10 and hist_T >= 100 * burn_in")
    elif command == "dos":
        if not cfg["lambda"]:
            raise ConfigurationError("empty lambda grid")
    elif command in ("spectrum", "localize"):
        _positive(cfg, "L")
        if command == "spectrum":
            if not cfg["k"] or min(cfg["k"]) < 1:
                raise ConfigurationError("k must be >= 1")
            if not 0 <= cfg["alpha"] < math.pi:
                raise ConfigurationError("alpha must lie in [0, pi)")
        else:
            if len(cfg["window"]) != 2 or not cfg["window"][0] < cfg["window"][1]:
                raise ConfigurationError("window must be lo,hi with lo < hi")
            _positive(cfg, "realizations", "per_realization")
    elif command == "weyl":
        if any(z.imag == 0 for z in cfg["z"]):
            raise ConfigurationError("every z needs a nonzero imaginary part")
        if any(b <= 0 for b in cfg["b"]):
            raise ConfigurationError("b must be positive")
    elif command == "pam":
        _positive(cfg, "L", "t", "dx")
        if abs(cfg["y"]) >= cfg["L"] / 2:
            raise ConfigurationError("y must lie inside the box")
    elif command == "moment-check":
        _positive(cfg, "t", "box", "dx")
        if cfg["replicas"] < 2:
            raise ConfigurationError("replicas must be >= 2")
        if cfg["refine"] < 3 or cfg["refine"] % 2 == 0:
            raise ConfigurationError("refine must be odd and >= 3")


def _box_grid(L: float, h: float):
    from .noise import Grid
    return Grid.from_step(-L / 2, L / 2, h)


def run_lyapunov(cfg, out: Path) -> list[Path]:
    from .formulas import gamma_exact
    from .montecarlo import gamma_furstenberg, gamma_mc, invariant_density

    rows = []
    for i, lam in enumerate(cfg["lambda"]):
        est = gamma_mc(lam, cfg["T"], cfg["replicas"], cfg["seed"] + i, cfg["h"], cfg["jobs"])
        hist = invariant_density(lam, cfg["hist_T"], cfg["burn_in"], cfg["bins"], cfg["seed"] + i, cfg["h"])
        rows.append((lam, gamma_exact(lam), est.value, est.stderr, gamma_furstenberg(lam, hist)))
    return [write_csv(out / "lyapunov.csv", ["lambda", "gamma_exact", "gamma_mc", "stderr", "gamma_furstenberg"],
                      rows)]


def run_dos(cfg, out: Path) -> list[Path]:
    from .formulas import dos_table
    return [write_csv(out / "dos.csv", ["lambda", "gamma", "N", "n"], dos_table(cfg["lambda"]))]


def run_spectrum(cfg, out: Path) -> list[Path]:
    from .eigensolver import BoundaryCondition, decay_rate_fit, eigenfunction, kth_eigenvalue
    from .errors import FitQualityError
    from .noise import sample_brownian

    path = sample_brownian(cfg["seed"], _box_grid(cfg["L"], cfg["h"]))
    bc = BoundaryCondition(cfg["alpha"])
    rows = []
    files = []
    for k in cfg["k"]:
        lam = kth_eigenvalue(path, cfg["L"], bc, k, cfg["lam_tol"])
        pair = eigenfunction(path, cfg["L"], bc, lam, k)
        try:
            fit = decay_rate_fit(pair)
            rl, rr = fit.left, fit.right
        except FitQualityError:
            rl = rr = float("nan")
        rows.append((k, lam, pair.phi0, pair.dphi0, rl, rr))
        if cfg["eigenfunctions"]:
            files.append(write_csv(out / f"eigenfunction_{k}.csv", ["t", "phi", "dphi"],
                                   zip(pair.t, pair.phi, pair.dphi)))
    files.insert(0, write_csv(out / "spectrum.csv",
                              ["k", "lambda_k", "phi0", "dphi0", "decay_rate_left", "decay_rate_right"], rows))
    return files


def _localize_one(args):
    from .eigensolver import localized_sample
    from .formulas import gamma_exact
    from .noise import sample_brownian

    seed, r, L, h, lo, hi, per = args
    path = sample_brownian(seed, _box_grid(L, h), replica=r)
    targets = np.linspace(lo, hi, per + 2)[1:-1]
    return [(r, k, lam, gamma_exact(lam), c, rl, rr)
            for k, lam, c, rl, rr in localized_sample(path, L, targets, lo, hi)]


def localize_rows(seed, L, h, window, realizations, per, jobs=1):
    from ._parallel import ordered_map
    args = [(seed, r, L, h, window[0], window[1], per) for r in range(realizations)]
    return [row for rows in ordered_map(_localize_one, args, jobs) for row in rows]


def localize_summary(rows) -> dict:
    dev = []
    two = []
    for _, _, _, g, _, rl, rr in rows:
        dev += [abs(x - g) / g for x in (rl, rr) if not math.isnan(x)]
        if not (math.isnan(rl) or math.isnan(rr)):
            two.append(abs(rl - rr) / (0.5 * (rl + rr)))
    return {"eigenpairs": len(rows), "median_rel_deviation": float(np.median(dev)) if dev else float("nan"),
            "median_two_sided_spread": float(np.median(two)) if two else float("nan")}


def run_localize(cfg, out: Path) -> list[Path]:
    rows = localize_rows(cfg["seed"], cfg["L"], cfg["h"], cfg["window"], cfg["realizations"],
                         cfg["per_realization"], cfg["jobs"])
    f1 = write_csv(out / "localize.csv", ["realization", "k", "lambda_k", "gamma_exact", "center", "rate_left", "rate_right"],
                   rows)
    f2 = write_json(out / "localize_summary.json", localize_summary(rows))
    return [f1, f2]


def run_weyl(cfg, out: Path) -> list[Path]:
    from .noise import Grid, sample_brownian
    from .weyl import weyl_circle

    bmax = max(cfg["b"])
    path = sample_brownian(cfg["seed"], Grid.from_step(0.0, bmax, cfg["h"]))
    rows = []
    for z in cfg["z"]:
        for b in cfg["b"]:
            c = weyl_circle(path, z, b)
            rows.append((z.real, z.imag, b, c.center.real, c.center.imag, c.radius))
    return [write_csv(out / "weyl.csv", ["re_z", "im_z", "b", "re_m", "im_m", "radius"], rows)]


def run_pam(cfg, out: Path) -> list[Path]:
    from .noise import Grid, sample_brownian
    from .pam import DiscretePotential, box_cells, kernel_vs_spectral, pam_kernel

    L = cfg["L"]
    n = box_cells(L, cfg["dx"])
    path = sample_brownian(cfg["seed"], Grid.from_points(-L / 2, L / 2, n + 1))
    dt = cfg["dt"] or None
    pot = DiscretePotential.from_path(path)
    u = pam_kernel(pot, cfg["y"], cfg["t"], dt)
    files = [write_csv(out / "pam_field.csv", ["x", "u"], zip(u.x, u.values))]
    if cfg["spectral"]:
        cmp_ = kernel_vs_spectral(path, L, cfg["t"], cfg["y"], dt=dt)
        files.append(write_json(out / "pam_spectral.json", {"t": cmp_.t, "y": cmp_.y, "terms": cmp_.terms,
                                                            "max_rel_error": cmp_.max_rel_error}))
    return files


def run_moment(cfg, out: Path) -> list[Path]:
    from .pam import moment_identity_check
    rep = moment_identity_check(cfg["t"], cfg["replicas"], cfg["box"], cfg["seed"], cfg["dx"], cfg["refine"],
                                cfg["jobs"])
    return [write_json(out / "moment_check.json", rep.as_dict())]


RUNNERS = {"lyapunov": run_lyapunov, "dos": run_dos, "spectrum": run_spectrum, "localize": run_localize,
           "weyl": run_weyl, "pam": run_pam, "moment-check": run_moment}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anderson1d", description="White-noise Schroedinger operator experiments")
    sub = p.add_subparsers(dest="command", required=True)
    for name, table in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./out)")
        sp.add_argument("--config", default=None, help="key=value configuration file")
        for k, (_, default, help_) in {**COMMON, **table}.items():
            sp.add_argument(f"--{k.replace('_', '-')}", dest=k, default=None, help=f"{help_} (default {default})")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    command = args.command
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "out", "config")}
    try:
        cfg = resolve(command, flags, args.config)
        out = Path(args.out or os.environ.get(OUT_ENV) or "out")
        out.mkdir(parents=True, exist_ok=True)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"[{command}] seed={cfg['seed']} -> {out}", file=sys.stderr)
    t0 = time.perf_counter()
    try:
        files = RUNNERS[command](cfg, out)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical error: {e} {json.dumps(e.payload, default=str)}", file=sys.stderr)
        return 3
    meta = {"command": command, "config": {k: v for k, v in cfg.items() if k != "jobs"}, "seed": cfg["seed"],
            "version": __version__, "wall_time_s": time.perf_counter() - t0, "jobs": cfg["jobs"],
            "files": [f.name for f in files]}
    write_json(out / f"{command}.meta.json", meta)
    for f in files:
        print(f"[{command}] wrote {f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
