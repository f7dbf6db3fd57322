"""Command-line entry point.

Subcommands mirror the modules (``flow``, ``entropy``, ``quantum``, ``weyl``)
plus ``verify-all`` and ``report``.  Exit codes: 0 when every assertion
passes, 1 on an assertion failure or a numerical error, 2 on a bad config.
"""
from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

from .errors import ConfigInvalid, RflError
from .experiments import (
    PRESETS,
    ExperimentConfig,
    ReportSummary,
    load_config_file,
    output_root,
    preset,
    run_experiment,
    verify_all,
)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _report_dir(path: str | None) -> Path | None:
    """``--report`` may name a directory or a ``.json`` file inside one."""
    if path is None:
        return None
    p = Path(path)
    return p.parent if p.suffix == ".json" else p


def _copy_report(path: str | None, out: Path, filename: str) -> None:
    if path and Path(path).suffix == ".json" and Path(path).name != filename:
        shutil.copyfile(out / filename, path)


def _print(summaries) -> int:
    for s in summaries:
        for line in s.lines():
            print(line)
    return EXIT_PASS if all(s.passed for s in summaries) else EXIT_FAIL


def _run(cfg: ExperimentConfig) -> int:
    return _print([run_experiment(cfg)])


def cmd_flow(args) -> int:
    params = load_config_file(args.config) if args.config else {}
    if params.get("geometry", args.geometry) != args.geometry:
        raise ConfigInvalid("config geometry disagrees with --geometry", key="geometry")
    params["geometry"] = args.geometry
    params.setdefault("write_trajectory", 1)
    name = args.name or f"flow-{args.geometry}"
    return _run(ExperimentConfig(name, "flow", params, _out(args, name)))


def cmd_entropy(args) -> int:
    params = load_config_file(args.config) if args.config else {}
    if args.trajectory:
        params["trajectory"] = str(args.trajectory)
    if args.f_end:
        params["f_end"] = args.f_end
    name = args.name or "entropy"
    return _run(ExperimentConfig(name, "entropy", params, _out(args, name)))


def cmd_quantum(args) -> int:
    params = {"case": args.case}
    if args.n is not None:
        params["n"] = args.n
    name = args.name or f"quantum-{args.case}"
    out = _report_dir(args.report) or _out(args, name)
    code = _run(ExperimentConfig(name, "quantum", params, out))
    _copy_report(args.report, out, "quantum_report.json")
    return code


def cmd_weyl(args) -> int:
    params = {"density": args.density, "seed": args.seed}
    if args.n is not None:
        params["n"] = args.n
    if args.metric:
        params["metric"] = args.metric
    name = args.name or f"weyl-{args.density}"
    out = _report_dir(args.report) or _out(args, name)
    code = _run(ExperimentConfig(name, "weyl", params, out))
    _copy_report(args.report, out, "weyl_report.json")
    return code


def cmd_verify_all(args) -> int:
    names = args.presets.split(",") if args.presets else list(PRESETS)
    configs = [preset(n) for n in names if n]
    return _print(verify_all(configs, args.out))


def cmd_report(args) -> int:
    """Print the stored summaries under a directory."""
    root = Path(args.dir) if args.dir else output_root()
    files = sorted(root.rglob("summary.json"))
    if not files:
        print(f"no summaries under {root}")
        return EXIT_PASS
    ok = True
    for f in files:
        data = json.loads(f.read_text())
        ok &= data["passed"]
        flag = "PASS" if data["passed"] else "FAIL"
        print(f"{flag} {data['name']} ({data['module']}) v{data['version']} {data['config_hash'][:12]}")
        for a in data["assertions"]:
            mark = "ok " if a["passed"] else "BAD"
            print(f"    {mark} {a['name']} = {a['measured']:.3e} ({a['relation']} {a['tolerance']:.1e})")
    return EXIT_PASS if ok else EXIT_FAIL


def _out(args, name: str) -> Path:
    return Path(args.out) / name if args.out else output_root() / name


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rfl", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output root (default: $RFL_OUTPUT_DIR or ./rfl_output)")
        p.add_argument("--name", help="experiment name (subdirectory)")

    p = sub.add_parser("flow", help="run a Ricci flow and store the trajectory")
    p.add_argument("--geometry", choices=("torus", "sphere"), default="torus")
    p.add_argument("--config", help="key = value config file")
    common(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("entropy", help="conjugate heat solve and the monotonicity identities")
    p.add_argument("--trajectory", help="directory written by the flow subcommand")
    p.add_argument("--f-end", dest="f_end", help="preset name (bump, uniform) or a field .csv")
    p.add_argument("--config", help="key = value config file")
    common(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("quantum", help="Madelung and Fisher identities on 1-D states")
    p.add_argument("--case", choices=("gaussian", "ho-ground", "coherent", "free-packet"), required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--report", help="directory (or .json path) for quantum_report.json")
    common(p)
    p.set_defaults(func=cmd_quantum)

    p = sub.add_parser("weyl", help="Weyl-geometry identities for a density preset")
    p.add_argument("--density", choices=("uniform", "bump1", "bump2", "random-smooth"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int)
    p.add_argument("--metric", choices=("flat", "bump1", "bump2"))
    p.add_argument("--report", help="directory (or .json path) for weyl_report.json")
    common(p)
    p.set_defaults(func=cmd_weyl)

    p = sub.add_parser("verify-all", help="run every preset experiment")
    p.add_argument("--out", help="output root")
    p.add_argument("--presets", help="comma-separated subset of presets")
    p.set_defaults(func=cmd_verify_all)

    p = sub.add_parser("report", help="print stored summaries")
    p.add_argument("dir", nargs="?")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        key = f" [{exc.key}]" if exc.key else ""
        print(f"config error{key}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RflError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


__all__ = ["ExperimentConfig", "ReportSummary", "main", "run_experiment", "verify_all"]
