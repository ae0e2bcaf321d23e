"""Command-line entry points: certify, solve, reconstruct, verify, render.

Exit codes: 0 success, 1 configuration problem, 2 certificate failure,
3 solve failure, 4 verification failure.  Every JSON artifact embeds the
configuration digest and the seed so runs can be traced; identical
configurations produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .certifier import certify
from .config import RunConfig, load_config
from .errors import ConfigError, ConvergenceError, ParameterError
from .grid_space import AngularSignal, build_grid, field_from_json, field_to_json
from .physical import (
    eval_fields_batch,
    export_samples_csv,
    export_spirals_csv,
    render_spirals_svg,
    spiral_extract,
    verify as run_verify,
    PhysicalSample,
)
from .solver import match_initial_data, newton_solve

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CERTIFICATE = 2
EXIT_SOLVE = 3
EXIT_VERIFY = 4


def _limit_threads() -> None:
    cap = os.environ.get("SPIRAL_EULER_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(int(cap))
    except Exception:
        pass


def _dump_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def _prepare(cfg: RunConfig, out_override=None, seed_override=None):
    values = dict(cfg.values)
    if out_override:
        values["output.dir"] = out_override
    if seed_override is not None:
        values["seed"] = seed_override
    cfg = RunConfig(values=values)
    out = Path(cfg["output.dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(cfg.effective_text())
    stamp = {"config_hash": cfg.digest(), "seed": cfg["seed"]}
    return out, stamp, cfg


def _load_cfg(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config PATH is required")
    return load_config(args.config)


def cmd_certify(args) -> int:
    cfg = _load_cfg(args)
    out, stamp, cfg = _prepare(cfg, args.out, args.seed)
    cert = certify(cfg.params, seed=cfg["seed"])
    doc = dict(stamp)
    doc["certificate"] = cert.to_json()
    _dump_json(out / "certificate.json", doc)
    (out / "certificate.txt").write_text(cert.table() + "\n")
    print(cert.table())
    return EXIT_OK if cert.passes else EXIT_CERTIFICATE


def _omega_to_json(omega: AngularSignal) -> list:
    return [
        [int(n), complex(c).real, complex(c).imag]
        for n, c in sorted(omega.coeffs.items())
        if c != 0.0
    ]


def _omega_from_json(params, entries) -> AngularSignal:
    return AngularSignal(params, {int(n): complex(re, im) for n, re, im in entries})


def cmd_solve(args) -> int:
    cfg = _load_cfg(args)
    out, stamp, cfg = _prepare(cfg, args.out, args.seed)
    params = cfg.params
    grid = build_grid(params.grid_points, params.grid_scale)
    try:
        if cfg["omega.kind"] == "match":
            omega, stream, report = match_initial_data(
                cfg.target(),
                params,
                grid=grid,
                tol=cfg["solver.outer_tol"],
                max_outer=cfg["solver.outer_max_iter"],
                inner_tol=cfg["solver.tol"],
                inner_max_iter=cfg["solver.max_iter"],
                epsilon_cap=cfg["solver.epsilon_cap"],
            )
        else:
            omega = cfg.omega()
            stream, report = newton_solve(
                omega,
                params,
                grid=grid,
                tol=cfg["solver.tol"],
                max_iter=cfg["solver.max_iter"],
                backend=cfg["solver.backend"],
                epsilon_cap=cfg["solver.epsilon_cap"],
            )
    except (ConvergenceError, ParameterError) as exc:
        doc = dict(stamp)
        doc["error"] = str(exc)
        rep = getattr(exc, "report", None)
        if rep is not None:
            doc["residual_history"] = list(rep.residual_history)
        _dump_json(out / "report.json", doc)
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVE

    field_doc = dict(stamp)
    field_doc.update(field_to_json(stream))
    field_doc["omega"] = _omega_to_json(omega)
    _dump_json(out / "field.json", field_doc)
    report_doc = dict(stamp)
    report_doc.update(
        {
            "converged": report.converged,
            "iterations": report.iterations,
            "residual_history": list(report.residual_history),
            "bounds_ok": report.bounds_ok,
            "epsilon_used": report.epsilon_used,
            "time_scale": report.time_scale,
            "margins": report.margins,
        }
    )
    _dump_json(out / "report.json", report_doc)
    print(
        f"solved: {report.iterations} iterations, residual "
        f"{report.residual_history[-1]:.3e}, bounds {'ok' if report.bounds_ok else 'VIOLATED'}"
    )
    return EXIT_OK


def _load_solution(out: Path):
    doc = json.loads((out / "field.json").read_text())
    stream = field_from_json(doc)
    omega = _omega_from_json(stream.params, doc["omega"])
    return stream, omega


def cmd_reconstruct(args) -> int:
    cfg = _load_cfg(args)
    out, stamp, cfg = _prepare(cfg, args.out, args.seed)
    if not (out / "field.json").exists():
        code = cmd_solve(args)
        if code != EXIT_OK:
            return code
    stream, omega = _load_solution(out)
    formats = set(cfg["output.formats"].split(","))
    if args.format:
        formats &= set(args.format.split(","))
    t = cfg["reconstruct.t"]
    n = cfg["reconstruct.samples"]
    rng = np.random.default_rng(cfg["seed"])
    r = rng.uniform(0.5, 2.0, n)
    ang = rng.uniform(0.0, 2.0 * np.pi, n)
    x = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1)
    fields = eval_fields_batch(stream, omega, x, np.full(n, t))
    if "csv" in formats:
        samples = [
            PhysicalSample(
                x=(float(x[i, 0]), float(x[i, 1])),
                t=float(t),
                w=float(fields["w"][i]),
                u=(float(fields["u1"][i]), float(fields["u2"][i])),
                psi=float(fields["psi"][i]),
                chart=(float(fields["beta"][i]), float(fields["phi"][i])),
            )
            for i in range(n)
        ]
        export_samples_csv(out / "samples.csv", samples)
    curves = spiral_extract(stream, omega, t)
    if "csv" in formats:
        export_spirals_csv(out / "spirals.csv", curves)
    if "svg" in formats:
        render_spirals_svg(out / "spirals.svg", curves)
    print(f"reconstructed {n} samples and {len(curves)} zero-set curves at t = {t}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load_cfg(args)
    out, stamp, cfg = _prepare(cfg, args.out, args.seed)
    if not (out / "field.json").exists():
        code = cmd_solve(args)
        if code != EXIT_OK:
            return code
    stream, omega = _load_solution(out)
    suites = tuple(s for s in cfg["verify.suites"].split(",") if s)
    report = run_verify(stream, omega, stream.params, suite=suites, seed=cfg["seed"])
    passed = True
    verdict = {}
    if "selfsim" in suites:
        ok = report["selfsim"]["max_rel_defect"] <= 1e-10
        verdict["selfsim"] = ok
        passed &= ok
    if "lp" in suites:
        ok = all(row["ok"] for row in report["lp"])
        verdict["lp"] = ok
        passed &= ok
    if "weak" in suites:
        ok = all(row["rel"] <= 1e-5 for row in report["weak"])
        verdict["weak"] = ok
        passed &= ok
    if "divfree" in suites:
        ok = all(row["rel"] <= 1e-5 for row in report["divfree"])
        verdict["divfree"] = ok
        passed &= ok
    if "poisson" in suites:
        ok = all(row["rel"] <= 1e-5 for row in report["poisson"])
        verdict["poisson"] = ok
        passed &= ok
    doc = dict(stamp)
    doc["report"] = report
    doc["verdict"] = verdict
    doc["passed"] = passed
    _dump_json(out / "verify.json", doc)
    for name, ok in verdict.items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_render(args) -> int:
    cfg = _load_cfg(args)
    out, stamp, cfg = _prepare(cfg, args.out, args.seed)
    field_path = Path(args.field) if args.field else out / "field.json"
    if not field_path.exists():
        print(f"no saved field at {field_path}", file=sys.stderr)
        return EXIT_CONFIG
    doc = json.loads(field_path.read_text())
    stream = field_from_json(doc)
    omega = _omega_from_json(stream.params, doc["omega"])
    curves = spiral_extract(stream, omega, cfg["reconstruct.t"])
    render_spirals_svg(out / "spirals.svg", curves)
    print(f"rendered {len(curves)} curves to {out / 'spirals.svg'}")
    return EXIT_OK


def main(argv=None) -> int:
    _limit_threads()
    parser = argparse.ArgumentParser(
        prog="spiral-euler",
        description="Self-similar spiral solutions of the planar Euler equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("certify", cmd_certify),
        ("solve", cmd_solve),
        ("reconstruct", cmd_reconstruct),
        ("verify", cmd_verify),
        ("render", cmd_render),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=False, help="path to the run configuration")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--format", default=None, help="comma list of json,csv,svg")
        if name == "render":
            p.add_argument("--field", default=None, help="path to a saved field JSON")
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
