"""Command line front end: ``catalog``, ``verify``, ``simulate``, ``reduce-check``.

Runs are described by a JSON config file; command line flags override the
fields read from it.  Exit codes: 0 all properties pass, 1 a property failed,
2 bad config, 3 the run left the domain (or the sampler found no point in it).
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dynamics import IntegratorConfig, conservation_report, integrate
from .errors import ConfigError, ConstraintError, DomainError, UnsupportedAlgebraError
from .lie import AlgebraDescriptor, catalog_descriptors, catalog_entry, parse_descriptor
from .phase import CONSTRAINT_TOL, PhasePoint
from .sampling import SamplerConfig, sample_phase_point, sample_rngs
from .suites import Tolerances, build_rmatrices, run_reduce_check, run_verify

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3

CSV_SCHEMA = "spincalogero-trajectory/1"
SUMMARY_VERSION = 1
SEED_LIMIT = 2**64

_KNOWN_KEYS = {
    "algebra", "rmatrix", "kind", "initial", "integrator", "tolerances",
    "seed", "samples", "output", "workers", "perturb", "enforce_constraint",
}


@dataclass
class RunConfig:
    algebra: AlgebraDescriptor = AlgebraDescriptor("sl", 2, 1, "identity")
    kind: str = "abelian"
    initial: dict | None = None
    step: float = 1e-3
    t_end: float = 10.0
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    samples: int = 100
    out_format: str = "csv"
    out_path: str | None = None
    workers: int = 1
    perturb: float = 0.0
    # simulate: project an unconstrained initial xi onto the constraint
    # surface instead of rejecting it
    enforce_constraint: bool = False


def _line_of(text, key):
    if text is None:
        return None
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _number(value, key, text, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key, _line_of(text, key))
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"expected an integer, got {value!r}", key, _line_of(text, key))
        return int(value)
    return float(value)


def config_from_dict(data, text=None) -> RunConfig:
    """Validate a parsed config; ``text`` (the raw file) is only used to report line numbers."""
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", None, 1)
    for key in data:
        if key not in _KNOWN_KEYS:
            raise ConfigError("unknown field", key, _line_of(text, key))
    cfg = RunConfig()

    if "algebra" in data:
        try:
            cfg.algebra = parse_descriptor(data["algebra"])
        except UnsupportedAlgebraError as exc:
            raise ConfigError(str(exc), "algebra", _line_of(text, "algebra")) from None

    kind = data.get("rmatrix", data.get("kind"))
    if kind is not None:
        if kind not in ("abelian", "nonabelian"):
            key = "rmatrix" if "rmatrix" in data else "kind"
            raise ConfigError(f"rmatrix kind must be 'abelian' or 'nonabelian', got {kind!r}", key, _line_of(text, key))
        cfg.kind = kind

    if "initial" in data:
        init = data["initial"]
        if not isinstance(init, dict):
            raise ConfigError("expected an object with q, p, xi lists", "initial", _line_of(text, "initial"))
        for key in ("q", "p", "xi"):
            vals = init.get(key)
            if not isinstance(vals, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals
            ):
                raise ConfigError("expected a list of numbers", f"initial.{key}", _line_of(text, key))
        cfg.initial = {k: [float(v) for v in init[k]] for k in ("q", "p", "xi")}

    integ = data.get("integrator", {})
    if not isinstance(integ, dict):
        raise ConfigError("expected an object", "integrator", _line_of(text, "integrator"))
    if "step" in integ:
        cfg.step = _number(integ["step"], "step", text)
    if "t_end" in integ:
        cfg.t_end = _number(integ["t_end"], "t_end", text)
    for key in ("step", "t_end"):
        if not getattr(cfg, key) > 0:
            raise ConfigError("must be positive", f"integrator.{key}", _line_of(text, key))

    tols = data.get("tolerances", {})
    if not isinstance(tols, dict):
        raise ConfigError("expected an object", "tolerances", _line_of(text, "tolerances"))
    updates = {}
    for key, value in tols.items():
        if key not in Tolerances.__dataclass_fields__:
            raise ConfigError("unknown tolerance", f"tolerances.{key}", _line_of(text, key))
        updates[key] = _number(value, key, text)
        if not updates[key] > 0:
            raise ConfigError("tolerances must be positive", f"tolerances.{key}", _line_of(text, key))
    cfg.tolerances = replace(cfg.tolerances, **updates)

    if "seed" in data:
        cfg.seed = _number(data["seed"], "seed", text, int)
    if "samples" in data:
        cfg.samples = _number(data["samples"], "samples", text, int)
    if "workers" in data:
        cfg.workers = _number(data["workers"], "workers", text, int)
    if "perturb" in data:
        cfg.perturb = _number(data["perturb"], "perturb", text)
    if "enforce_constraint" in data:
        if not isinstance(data["enforce_constraint"], bool):
            raise ConfigError("expected true or false", "enforce_constraint", _line_of(text, "enforce_constraint"))
        cfg.enforce_constraint = data["enforce_constraint"]

    out = data.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("expected an object", "output", _line_of(text, "output"))
    if "format" in out:
        if out["format"] not in ("csv", "json"):
            raise ConfigError("format must be 'csv' or 'json'", "output.format", _line_of(text, "format"))
        cfg.out_format = out["format"]
    if "path" in out:
        if not isinstance(out["path"], str):
            raise ConfigError("expected a string", "output.path", _line_of(text, "path"))
        cfg.out_path = out["path"]

    check_config(cfg, text)
    return cfg


def check_config(cfg: RunConfig, text=None):
    if not 0 <= cfg.seed < SEED_LIMIT:
        raise ConfigError("seed must be a 64-bit unsigned integer", "seed", _line_of(text, "seed"))
    if cfg.samples < 1:
        raise ConfigError("samples must be at least 1", "samples", _line_of(text, "samples"))
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1", "workers", _line_of(text, "workers"))
    if cfg.perturb < 0:
        raise ConfigError("perturb must be non-negative", "perturb", _line_of(text, "perturb"))
    if cfg.step > cfg.t_end:
        raise ConfigError("step must not exceed t_end", "integrator.step", _line_of(text, "step"))
    if cfg.initial is not None:
        dim = catalog_entry(cfg.algebra)["dim"]
        for key in ("q", "p", "xi"):
            if len(cfg.initial[key]) != dim:
                raise ConfigError(
                    f"has {len(cfg.initial[key])} coefficients, algebra {cfg.algebra.label} has dim {dim}",
                    f"initial.{key}",
                    _line_of(text, key),
                )


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", "config") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, None, exc.lineno) from None
    return config_from_dict(data, text)


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "algebra", None) is not None:
        try:
            cfg.algebra = parse_descriptor(args.algebra)
        except UnsupportedAlgebraError as exc:
            raise ConfigError(str(exc), "--algebra") from None
    if getattr(args, "kind", None) is not None:
        cfg.kind = args.kind
    for name in ("seed", "samples", "workers", "perturb"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "out", None) is not None:
        cfg.out_path = args.out
    if getattr(args, "format", None) is not None:
        cfg.out_format = args.format
    if getattr(args, "step", None) is not None:
        cfg.step = args.step
    if getattr(args, "t_end", None) is not None:
        cfg.t_end = args.t_end
    if getattr(args, "enforce_constraint", False):
        cfg.enforce_constraint = True
    check_config(cfg)
    return cfg


# ---------------------------------------------------------------- commands


def cmd_catalog(as_json=False) -> str:
    entries = [catalog_entry(d) for d in catalog_descriptors()]
    if as_json:
        return json.dumps({"algebras": entries}, indent=2, sort_keys=True) + "\n"
    lines = [f"{'name':<10} {'form':<8} {'dim':>4} {'rank':>4} {'|W|':>6}  automorphisms  kinds"]
    for e in entries:
        lines.append(
            f"{e['name']:<10} {e['form']:<8} {e['dim']:>4} {e['rank']:>4} {e['weyl_order']:>6}  "
            f"{','.join(e['automorphisms']):<13}  {','.join(e['rmatrix_kinds'])}"
        )
    return "\n".join(lines) + "\n"


def _emit_report(report, cfg, as_json, stdout):
    text = report.to_json() if as_json else report.to_text()
    stdout.write(text)
    if cfg.out_path:
        Path(cfg.out_path).write_text(report.to_json() if cfg.out_path.endswith(".json") or as_json else text)


def cmd_verify(cfg: RunConfig, as_json=False, stdout=sys.stdout) -> int:
    report = run_verify(
        cfg.algebra, cfg.kind, cfg.seed, cfg.samples, cfg.workers, cfg.perturb, cfg.tolerances
    )
    _emit_report(report, cfg, as_json, stdout)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_reduce_check(cfg: RunConfig, as_json=False, stdout=sys.stdout) -> int:
    report = run_reduce_check(cfg.algebra, cfg.seed, cfg.samples, cfg.workers, cfg.perturb, cfg.tolerances)
    _emit_report(report, cfg, as_json, stdout)
    return EXIT_OK if report.passed else EXIT_FAIL


def initial_point(cfg: RunConfig, r) -> PhasePoint:
    """The configured initial point, or a seeded constrained sample."""
    chain = r.chain
    if cfg.initial is None:
        rng = sample_rngs(cfg.seed, 1)[0]
        return sample_phase_point(rng, r, SamplerConfig(), constrained=True)
    q, p, xi = (np.array(cfg.initial[k]) for k in ("q", "p", "xi"))
    for key, vec in (("q", q), ("p", p)):
        off = vec - chain.project(vec, "K")
        if np.max(np.abs(off), initial=0.0) > 0:
            raise ConfigError("must lie in the Cartan subalgebra K", f"initial.{key}")
    try:
        r.evaluate(q)
    except DomainError as exc:
        raise ConfigError(f"outside the domain of R: {exc}", "initial.q") from None
    xi_k = xi[chain.k_indices]
    if np.max(np.abs(xi_k), initial=0.0) > CONSTRAINT_TOL:
        if not cfg.enforce_constraint:
            raise ConfigError(
                "xi has a nonzero K component (momentum map does not vanish); "
                "pass --enforce-constraint to project it out",
                "initial.xi",
            )
        xi = chain.project(xi, "Kperp")
    return PhasePoint(q, p, xi)


def trajectory_columns(chain, kmax) -> list:
    dim = chain.algebra.dim
    cols = ["t"]
    cols += [f"q{i}" for i in range(chain.rank)]
    cols += [f"p{i}" for i in range(chain.rank)]
    cols += [f"xi{i}" for i in range(dim)]
    cols += ["H"] + [f"h{k}" for k in range(2, kmax + 1)]
    cols += ["chi_norm", "lax_residual", "spec_drift"]
    return cols


def trajectory_rows(traj, chain):
    k = chain.k_indices
    mon = traj.monitors
    names = ["H"] + [f"h{j}" for j in range(2, traj.kmax + 1)] + ["chi_norm", "lax_residual", "spec_drift"]
    for i in range(len(traj)):
        row = [traj.times[i]]
        row += list(traj.q[i, k]) + list(traj.p[i, k]) + list(traj.xi[i])
        row += [mon[n][i] for n in names]
        yield [repr(float(v)) for v in row]


def write_trajectory(path, traj, chain, fmt="csv"):
    cols = trajectory_columns(chain, traj.kmax)
    if fmt == "json":
        rows = [[float(v) for v in row] for row in trajectory_rows(traj, chain)]
        doc = {"schema": CSV_SCHEMA, "columns": cols, "rows": rows, "status": traj.status}
        Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")
        return
    with open(path, "w", newline="") as fh:
        fh.write(f"#schema={CSV_SCHEMA}\r\n")
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(cols)
        writer.writerows(trajectory_rows(traj, chain))


def simulation_summary(cfg, traj, r) -> dict:
    chain = r.chain
    summary = conservation_report(traj, r.algebra)
    qk = traj.q[:, chain.k_indices]
    summary.update(
        version=SUMMARY_VERSION,
        algebra=r.algebra.label,
        form="compact" if cfg.algebra.family == "su" else "split",
        step=cfg.step,
        t_end=cfg.t_end,
        seed=cfg.seed,
        message=traj.message,
        q_min=[float(v) for v in qk.min(axis=0)],
        q_max=[float(v) for v in qk.max(axis=0)],
        drift_tolerance=cfg.tolerances.drift,
    )
    summary["drift_ok"] = bool(
        summary["max_rel_H_drift"] <= cfg.tolerances.drift and summary["max_chi_norm"] <= cfg.tolerances.residual
    )
    return summary


def cmd_simulate(cfg: RunConfig, as_json=False, stdout=sys.stdout) -> int:
    if cfg.kind != "abelian":
        raise ConfigError("simulate integrates the Abelian (Cartan) model; set rmatrix to 'abelian'", "rmatrix")
    r, _ = build_rmatrices(cfg.algebra, "abelian", cfg.perturb)
    point = initial_point(cfg, r)
    try:
        integ = IntegratorConfig(cfg.step, cfg.t_end)
    except ValueError as exc:
        raise ConfigError(str(exc), "integrator") from None
    traj = integrate(r, point, integ)
    out = cfg.out_path or ("trajectory." + cfg.out_format)
    write_trajectory(out, traj, r.chain, cfg.out_format)
    summary = simulation_summary(cfg, traj, r)
    summary["output"] = out
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    Path(out + ".summary.json").write_text(text)
    if as_json:
        stdout.write(text)
    else:
        stdout.write(
            f"simulate {r.algebra.label} status={traj.status} steps={len(traj) - 1} t={summary['t_final']:g}\n"
            f"  rel H drift   {summary['max_rel_H_drift']:.3e}\n"
            f"  spec drift    {summary['max_spec_drift']:.3e}\n"
            f"  chi norm      {summary['max_chi_norm']:.3e}\n"
            f"  lax residual  {summary['max_lax_residual']:.3e}\n"
            f"  q range       {summary['q_min']} .. {summary['q_max']}\n"
            f"  wrote {out}\n"
        )
    if traj.status != "ok":
        sys.stderr.write(f"domain exit at t={traj.exit_time:g}: {traj.message}\n")
        return EXIT_DOMAIN
    return EXIT_OK if summary["drift_ok"] else EXIT_FAIL


# -------------------------------------------------------------------- main


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < SEED_LIMIT:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spincalogero", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list supported algebras")
    p.add_argument("--json", action="store_true")

    def common(p):
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--algebra", help='descriptor such as "sl(3)", "su(3)" or "sl(2)^3"')
        p.add_argument("--seed", type=_seed, metavar="N")
        p.add_argument("--samples", type=int, metavar="N")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--perturb", type=float, metavar="EPS", help="debug: perturb the r-matrix (negative control)")
        p.add_argument("--workers", type=int, metavar="N")

    p = sub.add_parser("verify", help="r-matrix and Poisson-bracket residual suites")
    common(p)
    p.add_argument("--kind", choices=("abelian", "nonabelian"))

    p = sub.add_parser("simulate", help="integrate the constrained spin Calogero flow")
    common(p)
    p.add_argument("--kind", choices=("abelian", "nonabelian"))
    p.add_argument("--step", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--enforce-constraint", action="store_true", help="project xi onto the constraint surface")

    p = sub.add_parser("reduce-check", help="non-Abelian versus Abelian reduction suites")
    common(p)
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    if args.command == "catalog":
        stdout.write(cmd_catalog(args.json))
        return EXIT_OK
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = apply_overrides(cfg, args)
        if args.command == "verify":
            return cmd_verify(cfg, args.json, stdout)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.json, stdout)
        return cmd_reduce_check(cfg, args.json, stdout)
    except (ConfigError, ConstraintError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except DomainError as exc:
        sys.stderr.write(f"domain error: {exc}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
