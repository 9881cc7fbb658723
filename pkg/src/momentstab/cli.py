"""Command-line front end.

Every run resolves its arguments into a config dict (spec files are inlined),
executes from that dict and writes a ``manifest.json`` next to its outputs.
``momentstab rerun --manifest PATH`` replays the config, so outputs are
byte-identical.

Exit codes: 0 success, 2 input error, 3 basis too large, 4 numeric overflow,
5 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, langmuir
from .core_model import load_system, system_from_dict
from .errors import (BasisTooLarge, EigenSolveFailure, MomentStabError, SolverFailure,
                     SpecError)
from .moment_ops import DEFAULT_CAP, build_moment_operator
from .sde_mc import EnsembleConfig, fit_growth_rate, simulate_ensemble
from .spectral import eigenpairs

EXIT_OK, EXIT_INPUT, EXIT_CAPACITY, EXIT_OVERFLOW, EXIT_SOLVER = 0, 2, 3, 4, 5


@dataclass
class RunManifest:
    command: str
    config: dict
    seeds: list = field(default_factory=list)
    version: str = __version__
    duration_s: float = 0.0
    outputs: list = field(default_factory=list)
    exit_code: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def _g(x) -> str:
    return f"{x:.17g}"


def _h(x) -> str:
    return f"{x:.6g}"


def _cplx(z) -> str:
    z = complex(z)
    return f"{z.real:.6g}{z.imag:+.6g}j"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for line in header if isinstance(header[0], list) else [header]:
            w.writerow(line)
        for row in rows:
            w.writerow([_g(v) if isinstance(v, float) else v for v in row])


def _comment_csv(path: Path, notes, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        for note in notes:
            fh.write(f"# {note}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_g(v) if isinstance(v, float) else v for v in row])


# ---------------------------------------------------------------------------
# commands: each takes a resolved config and an output directory and
# returns (outputs, exit_code)


def run_moments(cfg: dict, out: Path):
    sysm = system_from_dict(cfg["spec"])
    m = cfg["degree"]
    op = build_moment_operator(sysm, m, cap=cfg.get("cap", DEFAULT_CAP))
    spec = eigenpairs(op.matrix)
    op_path = out / f"operator_m{m}.txt"
    with open(op_path, "w") as fh:
        fh.write(f"# moment operator, degree {m}, dim {sysm.dim}, size {op.basis.size}\n")
        fh.write("# rows/cols: basis tuples (0-based state indices)\n")
        for i, t in enumerate(op.basis.index_multisets):
            fh.write(f"# {i}: {' '.join(map(str, t))}\n")
        for row in op.matrix:
            fh.write(" ".join(_g(v) for v in row) + "\n")
    spec_path = out / f"spectrum_m{m}.csv"
    _write_csv(spec_path, ["index", "re", "im", "residual"],
               [[i, float(z.real), float(z.imag), float(r)]
                for i, (z, r) in enumerate(zip(spec.eigenvalues, spec.residuals))])
    abscissa = float(spec.eigenvalues.real.max())
    print(f"degree {m}: basis size {op.basis.size}")
    print(f"{'k':>4} {'Re':>12} {'Im':>12} {'residual':>12}")
    for i, (z, r) in enumerate(zip(spec.eigenvalues[:20], spec.residuals[:20])):
        print(f"{i:>4} {_h(z.real):>12} {_h(z.imag):>12} {_h(r):>12}")
    if len(spec) > 20:
        print(f"  ... {len(spec) - 20} more in {spec_path.name}")
    print(f"spectral abscissa = {_h(abscissa)}")
    print(f"lambda_{m} = abscissa / {m} = {_h(abscissa / m)}")
    return [op_path.name, spec_path.name], EXIT_OK


def _operator_rate(sysm, p, cap):
    """Growth rate of E||x||^p from the moment operator, or None if not available."""
    if p != int(p) or int(p) % 2:
        return None
    try:
        op = build_moment_operator(sysm, int(p), cap=cap)
    except BasisTooLarge:
        return None
    return float(np.linalg.eigvals(op.matrix).real.max())


def run_simulate(cfg: dict, out: Path):
    sysm = system_from_dict(cfg["spec"])
    x0 = cfg.get("initial_state") or [1.0] * sysm.dim
    ens = EnsembleConfig(sysm, x0, cfg["dt"], cfg["horizon"], cfg["paths"], cfg["seed"],
                         tuple(cfg["degrees"]), samples=cfg.get("samples", 512))
    trace = simulate_ensemble(ens)
    trace_path = out / "trace.csv"
    trace.to_csv(trace_path)
    rows = []
    print(f"{'p':>6} {'mc_rate':>12} {'mc_stderr':>12} {'operator_rate':>14}")
    for p in ens.moment_degrees:
        try:
            fit = fit_growth_rate(trace, p, cfg.get("window", 0.5))
            rate, err = fit.rate, fit.stderr
        except MomentStabError as exc:
            rate = err = math.nan
            print(f"  p={p:g}: fit failed ({exc})", file=sys.stderr)
        op_rate = _operator_rate(sysm, p, cfg.get("cap", DEFAULT_CAP))
        rows.append([float(p), rate, err, "n/a" if op_rate is None else op_rate])
        op_txt = "n/a" if op_rate is None else _h(op_rate)
        print(f"{p:>6g} {_h(rate):>12} {_h(err):>12} {op_txt:>14}")
    summary_path = out / "summary.csv"
    _write_csv(summary_path, ["p", "mc_rate", "mc_stderr", "operator_rate"], rows)
    if trace.overflow:
        print(f"overflow: trace truncated at t = {trace.times[-1] if len(trace.times) else 0:g}",
              file=sys.stderr)
        return [trace_path.name, summary_path.name], EXIT_OVERFLOW
    return [trace_path.name, summary_path.name], EXIT_OK


def _profile(cfg):
    return langmuir.CorrelationProfile(cfg["profile"], cfg["amplitude"], cfg["width"])


def run_langmuir(cfg: dict, out: Path):
    sub = cfg["subcommand"]
    m = cfg["mass"]
    notes = [langmuir.UNITS_NOTE]
    if sub in ("dispersion", "whitenoise"):
        model = "constant" if sub == "dispersion" else "white"
        if cfg.get("grid"):
            ks = langmuir.parse_grid(cfg["grid"]["k"])
            s2s = langmuir.parse_grid(cfg["grid"]["sigma2"])
            rows = langmuir.stability_map(m, ks, s2s, model)
            path = out / f"{sub}_map.csv"
            if model == "constant":
                notes.append("constant correlation C = sigma2, modes k1 = k2 = k")
            else:
                notes.append("1D spatio-temporal white noise C = sigma2 delta(x)")
            _comment_csv(path, notes, ["k", "sigma2", "max_real_lambda", "verdict"], rows)
            counts = {v: sum(r[3] == v for r in rows) for v in ("stable", "marginal", "unstable")}
            print(f"{len(rows)} grid points: " + ", ".join(f"{k} {v}" for k, v in counts.items()))
            return [path.name], EXIT_OK
        if model == "constant":
            r = langmuir.dispersion_complete_correlation(m, cfg["k1"], cfg["k2"], cfg["sigma2"])
            e1, e2 = langmuir.epsilon_k(m, cfg["k1"]), langmuir.epsilon_k(m, cfg["k2"])
            resid = langmuir.quartic_residual(r.roots, e1, e2, cfg["sigma2"])
        else:
            r = langmuir.white_noise_growth(m, cfg["k"], cfg["sigma2"])
            resid = np.abs(2 * 4 * (r.roots ** 2 + cfg["k"] ** 2)
                           * langmuir.white_noise_decay(r.roots, m, cfg["k"], cfg["sigma2"])
                           - 2 * r.roots * cfg["sigma2"])
        path = out / f"{sub}_roots.csv"
        _comment_csv(path, notes, ["re", "im", "residual"],
                     [[float(z.real), float(z.imag), float(e)] for z, e in zip(r.roots, resid)])
        for z in r.roots:
            print(f"  lambda = {_cplx(z)}")
        print(f"max Re lambda = {_h(r.max_real)}  verdict: {r.classification}")
        return [path.name], EXIT_OK
    if sub == "appendix":
        res = langmuir.appendix_dispersion_check(cfg["eps1"], cfg["eps2"], cfg["sigma2"])
        mat = langmuir.appendix_matrix(cfg["eps1"], cfg["eps2"], cfg["sigma2"])
        eig = np.linalg.eigvals(mat)
        path = out / "appendix.csv"
        _comment_csv(path, notes, ["eps1", "eps2", "sigma2", "max_residual", "abscissa"],
                     [[cfg["eps1"], cfg["eps2"], cfg["sigma2"], res, float(eig.real.max())]])
        print(f"max residual = {res:.3e}")
        print(f"abscissa of 4x4 matrix = {_h(eig.real.max())}")
        return [path.name], EXIT_OK
    problem = langmuir.LangmuirProblem(m, cfg.get("sigma2", 0.0), _profile(cfg))
    notes.append(langmuir.REDUCTION_NOTE)
    if sub == "boundstate":
        gr = langmuir.find_growth_rate_k0(problem, points=cfg["points"])
        lams = np.geomspace(gr.lam / 8, gr.lam * 8, 25)
        rows = langmuir.growth_matching_scan(problem, lams, points=gr.grid_points)
        rows.append((gr.lam, gr.energy, gr.residual))
        path = out / "boundstate.csv"
        _comment_csv(path, notes + ["k = 0; last row is the root"],
                     ["lambda", "E_lambda", "matching_residual"], rows)
        print(f"lambda* = {_h(gr.lam)}  E = {_h(gr.energy)}  matching residual = {gr.residual:.3e}"
              f"  (N = {gr.grid_points}, L = {_h(gr.half_width)})")
        return [path.name], EXIT_OK
    if sub == "threshold":
        ks = langmuir.parse_grid(cfg["grid"]["k"]) if cfg.get("grid") else [cfg["k"]]
        rows = []
        for k in sorted(float(v) for v in ks):
            r = langmuir.stability_threshold_k(problem, k, points=cfg["points"])
            rows.append([k, r.critical_amplitude, r.amplitude, r.verdict,
                         "n/a" if r.lam is None else r.lam])
            lam_txt = "n/a" if r.lam is None else _h(r.lam)
            print(f"k = {_h(k)}: c* = {_h(r.critical_amplitude)}; at c = {_h(r.amplitude)}: "
                  f"{r.verdict} (lambda = {lam_txt})")
        path = out / "threshold.csv"
        _comment_csv(path, notes, ["k", "c_star", "amplitude", "verdict", "lambda"], rows)
        return [path.name], EXIT_OK
    raise SpecError(f"unknown langmuir subcommand {sub!r}")


COMMANDS = {"moments": run_moments, "simulate": run_simulate, "langmuir": run_langmuir}


def execute(command: str, cfg: dict, out: Path, seeds=()) -> int:
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        outputs, code = COMMANDS[command](cfg, out)
    except BasisTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverFailure, EigenSolveFailure) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    manifest = RunManifest(command, cfg, list(seeds), __version__,
                           round(time.perf_counter() - t0, 6), outputs, code)
    (out / "manifest.json").write_text(manifest.to_json())
    return code


def _parse_grid_args(items):
    if not items:
        return None
    grid = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep:
            raise SpecError(f"grid entry {item!r} must look like name=start:stop:count")
        langmuir.parse_grid(val)
        grid[key] = val
    return grid


def _read_spec(path):
    sysm = load_system(path)
    return sysm.to_dict()


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise SpecError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="momentstab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    mo = sub.add_parser("moments", help="moment operator spectrum and lambda_m")
    mo.add_argument("--spec", required=True)
    mo.add_argument("--degree", type=int, required=True)
    mo.add_argument("--cap", type=int, default=DEFAULT_CAP)
    mo.add_argument("--out", default="out")

    si = sub.add_parser("simulate", help="Monte Carlo moment traces and fitted rates")
    si.add_argument("--spec", required=True)
    si.add_argument("--degree", default="2", help="comma-separated moment degrees p")
    si.add_argument("--paths", type=int, default=10000)
    si.add_argument("--dt", type=float, default=1e-3)
    si.add_argument("--horizon", type=float, default=5.0)
    si.add_argument("--seed", type=int, default=0)
    si.add_argument("--x0", default=None, help="comma-separated initial state (default ones)")
    si.add_argument("--window", type=float, default=0.5)
    si.add_argument("--cap", type=int, default=DEFAULT_CAP)
    si.add_argument("--out", default="out")

    la = sub.add_parser("langmuir", help="Langmuir-wave destabilization problems")
    la.add_argument("subcommand",
                    choices=["dispersion", "whitenoise", "boundstate", "threshold", "appendix"])
    la.add_argument("--mass", type=float, default=1.0)
    la.add_argument("--k", type=float, default=0.0)
    la.add_argument("--k1", type=float, default=0.0)
    la.add_argument("--k2", type=float, default=0.0)
    la.add_argument("--sigma2", type=float, default=0.0)
    la.add_argument("--eps1", type=float, default=1.0)
    la.add_argument("--eps2", type=float, default=1.0)
    la.add_argument("--profile", default="gaussian", choices=list(langmuir.LOCALIZED_KINDS))
    la.add_argument("--amplitude", type=float, default=1.0)
    la.add_argument("--width", type=float, default=1.0)
    la.add_argument("--points", type=int, default=None)
    la.add_argument("--grid", nargs="+", metavar="NAME=a:b:n")
    la.add_argument("--out", default="out")

    re_ = sub.add_parser("rerun", help="re-execute a run from its manifest")
    re_.add_argument("--manifest", required=True)
    re_.add_argument("--out", default=None)
    return p


def resolve(args) -> tuple[str, dict, list]:
    """Turn parsed arguments into ``(command, config, seeds)``."""
    if args.command == "moments":
        return "moments", {"spec": _read_spec(args.spec), "degree": args.degree,
                           "cap": args.cap}, []
    if args.command == "simulate":
        cfg = {"spec": _read_spec(args.spec), "degrees": _floats(args.degree),
               "paths": args.paths, "dt": args.dt, "horizon": args.horizon,
               "seed": args.seed, "initial_state": _floats(args.x0) if args.x0 else None,
               "window": args.window, "cap": args.cap, "samples": 512}
        return "simulate", cfg, [args.seed]
    if args.command == "langmuir":
        sub = args.subcommand
        cfg = {"subcommand": sub, "mass": args.mass}
        grid = _parse_grid_args(args.grid)
        if sub == "dispersion":
            cfg.update(k1=args.k1, k2=args.k2, sigma2=args.sigma2)
            if grid:
                if set(grid) != {"k", "sigma2"}:
                    raise SpecError("dispersion grid needs k=... and sigma2=...")
                cfg["grid"] = grid
        elif sub == "whitenoise":
            cfg.update(k=args.k, sigma2=args.sigma2)
            if grid:
                if set(grid) != {"k", "sigma2"}:
                    raise SpecError("whitenoise grid needs k=... and sigma2=...")
                cfg["grid"] = grid
        elif sub == "appendix":
            cfg.update(eps1=args.eps1, eps2=args.eps2, sigma2=args.sigma2)
        else:
            cfg.update(profile=args.profile, amplitude=args.amplitude, width=args.width)
            if sub == "boundstate":
                cfg["points"] = args.points or 4096
            else:
                cfg["points"] = args.points or 1024
                cfg["k"] = args.k
                if grid:
                    if set(grid) != {"k"}:
                        raise SpecError("threshold grid takes k=... only")
                    cfg["grid"] = grid
                elif not args.k > 0:
                    raise SpecError("threshold needs --k > 0 (or --grid k=a:b:n)")
        # validate scalar inputs up front so bad values exit with code 2
        langmuir.LangmuirProblem(args.mass, max(cfg.get("sigma2", 0.0), 0.0))
        if cfg.get("sigma2", 0.0) < 0:
            raise SpecError("sigma2 must be >= 0")
        return "langmuir", cfg, []
    raise SpecError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "rerun":
            manifest = RunManifest.from_json(Path(args.manifest).read_text())
            out = Path(args.out) if args.out else Path(args.manifest).parent
            return execute(manifest.command, manifest.config, out, manifest.seeds)
        command, cfg, seeds = resolve(args)
    except (SpecError, OSError, json.JSONDecodeError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return execute(command, cfg, Path(args.out), seeds)


if __name__ == "__main__":
    sys.exit(main())
