"""Command-line front end.

``kinetics <subcommand> --config <file> [--seed N] [--out DIR] [--workers K]``

Subcommands map one-to-one onto experiment kinds (``kernels``, ``povzner``,
``simulate``, ``moment-creation``, ``fourier``) plus ``report``, which
re-reads a finished run directory, prints pass/fail lines against the
thresholds stored in the artifacts, and emits gnuplot-ready ``.dat`` files.

Exit codes: 0 success, 1 usage/configuration error, 2 invariant or
acceptance failure (the failing invariant is named on stderr).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from .config import ConfigError, parse_config
from .experiments import DRIVERS
from .io import MANIFEST_NAME, ArtifactWriter, read_manifest, sha256_file, wall_clock, write_manifest

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVARIANT = 2

# CLI name -> configuration kind
SUBCOMMANDS = {
    "kernels": "kernel_report",
    "povzner": "povzner_sweep",
    "simulate": "simulate",
    "moment-creation": "moment_creation",
    "fourier": "fourier_residual",
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; the harness reserves 2 for
    invariant failures, so usage errors are remapped to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kinetics", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="subcommand")
    for name in SUBCOMMANDS:
        p = sub.add_parser(
            name,
            help=f"run a {SUBCOMMANDS[name]} experiment",
            description=f"Run a {SUBCOMMANDS[name]} experiment from a YAML configuration.",
        )
        p.add_argument("--config", required=True, help="YAML configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory (default: timestamped)")
        p.add_argument(
            "--workers", type=int, default=None, help="override the config worker count"
        )
    rep = sub.add_parser(
        "report",
        help="summarize a finished run directory",
        description="Print pass/fail lines for a finished run and write gnuplot .dat files.",
    )
    rep.add_argument("--out", required=True, help="run directory containing manifest.json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("kinetics: error: a subcommand is required", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "report":
        return report(Path(args.out))
    return run_experiment(args)


def _default_out(spec) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    return Path("runs") / f"{spec.kind}-{spec.config_hash[:12]}-{stamp}"


def run_experiment(args) -> int:
    """Validate the config, run the driver, and write the manifest."""
    expected_kind = SUBCOMMANDS[args.command]
    try:
        spec = parse_config(args.config)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"kinetics {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if spec.kind != expected_kind:
        print(
            f"kinetics {args.command}: configuration kind is {spec.kind!r}, "
            f"but this subcommand runs {expected_kind!r}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            print(f"kinetics {args.command}: seed {args.seed} outside [0, 2^64)", file=sys.stderr)
            return EXIT_USAGE
        spec = dataclasses.replace(spec, seed=args.seed)
    if args.workers is not None:
        if args.workers < 1:
            print(f"kinetics {args.command}: workers must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        spec = dataclasses.replace(spec, workers=args.workers)

    out_dir = Path(args.out) if args.out else _default_out(spec)
    writer = ArtifactWriter(out_dir=out_dir)
    started = wall_clock()
    print(f"kinetics {args.command}: config {spec.config_hash[:12]} -> {out_dir}", file=sys.stderr)
    try:
        DRIVERS[spec.kind](spec, writer, log=lambda msg: print(msg, file=sys.stderr))
    except (AssertionError, ValueError, FloatingPointError) as exc:
        print(f"kinetics {args.command}: invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    write_manifest(writer, spec, started, wall_clock())
    print(out_dir)
    return EXIT_OK


# ---------------------------------------------------------------------------
# report stage


def _check(lines, label, ok, detail):
    lines.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    return ok


def _info(lines, label, detail):
    lines.append(f"[info] {label}: {detail}")


def _load_json(out_dir: Path, name: str):
    with open(out_dir / name, encoding="utf-8") as handle:
        return json.load(handle)


def _report_kernel_report(out_dir, lines):
    s = _load_json(out_dir, "kernel_report.json")
    ok = _check(
        lines,
        "route agreement",
        s["routes_pass"],
        f"max rel delta {s['max_rel_delta']:.3e} vs {s['route_tol']:g} over {s['tuples']} tuples",
    )
    c = s["conservation"]
    ok &= _check(
        lines,
        "momentum conservation",
        c["momentum_pass"],
        f"max rel residual {c['max_momentum_rel']:.3e} vs {c['tolerance']:g}",
    )
    ok &= _check(
        lines,
        "energy closed form",
        c["energy_pass"],
        f"max rel residual {c['max_energy_rel']:.3e} vs {c['tolerance']:g}",
    )
    ok &= _check(
        lines,
        "elastic zero loss",
        c["elastic_exact_zero"],
        f"max |closed-form loss| {c['elastic_closed_form_max']:g} over {c['elastic_rows']} rows",
    )
    return ok


def _report_povzner_sweep(out_dir, lines):
    s = _load_json(out_dir, "povzner_report.json")
    ident = s["identity"]
    ok = _check(
        lines,
        "decomposition identity",
        ident["pass"],
        f"max |h+g-k| {ident['max_rel_delta']:.3e} vs {ident['identity_tol']:g}, "
        f"min g {ident['min_g']:.3e}",
    )
    ok &= _check(lines, "constant fits", s["all_feasible"], f"{len(s['fits'])} cells")
    for fit in s["fits"]:
        tag = f"e={fit['e']:g} kappa={fit['kappa']:g}"
        ok &= _check(
            lines,
            f"fit {tag}",
            fit["feasible"] and fit["min_h_margin"] >= 0 and fit["min_g_margin"] >= 0,
            f"C1={fit['c1']:.4g} C2={fit['c2']:.4g} Cg={fit['c_g']:.4g} "
            f"margins ({fit['min_h_margin']:.2e}, {fit['min_g_margin']:.2e})",
        )
        sec = fit["secondary"]
        if sec["c1"] is not None:
            _info(
                lines,
                f"secondary fit {tag}",
                f"C1'={sec['c1']:.4g} C2'={sec['c2']:.4g} (degree-matched comparison)",
            )
    sand = s["sandwich"]
    ok &= _check(
        lines,
        "convexity sandwich",
        sand["pass"],
        f"min margin {sand['min_margin']:.3e} vs -{sand['tol']:g} over {sand['points']} points",
    )
    for row in s["scaling"]:
        _info(
            lines,
            f"drift growth e={row['e']:g} kappa={row['kappa']:g}",
            f"slope {row['slope']:.3f} (expected {row['expected']:g})",
        )
    return ok


def _report_simulate(out_dir, lines):
    s = _load_json(out_dir, "simulate.json")
    d = s["dissipation"]
    tol = s["tolerances"]
    ok = _check(
        lines,
        "energy monotone",
        d["energy_monotone"],
        f"max increase {d['max_energy_increase']:.3e} vs {tol['energy_increase_rel']:g} rel",
    )
    ok &= _check(
        lines,
        "momentum constant",
        d["momentum_constant"],
        f"max drift {d['max_momentum_drift']:.3e} vs {tol['momentum_drift']:g}",
    )
    _info(lines, "energy", f"{d['initial_energy']:.6g} -> {d['final_energy']:.6g} "
          f"over {s['collisions']} collisions")
    if "elastic_twin" in s:
        t = s["elastic_twin"]
        ok &= _check(
            lines,
            "elastic twin energy",
            t["energy_conserved"],
            f"rel drift {t['max_energy_rel_drift']:.3e} vs {tol['elastic_energy_drift_rel']:g}",
        )
    return ok


def _report_moment_creation(out_dir, lines):
    s = _load_json(out_dir, "moment_creation.json")
    ok = True
    for order in s["orders"]:
        label = f"M{order:g}"
        ok &= _check(
            lines,
            f"initial-slice growth {label}",
            s[f"pass_growth_{label}"],
            f"rate {s['doubling_rate'][label]:.4f} per doubling vs {s['growth_threshold']:g} "
            f"(step ratios {['%.3f' % r for r in s['doubling_ratios'][label]]})",
        )
        ok &= _check(
            lines,
            f"sup-band stability {label}",
            s[f"pass_sup_band_{label}"],
            f"top-pair gap {s['top_pair_rel_gap'][label]:.3%} vs {s['gap_threshold']:.0%} "
            f"on t in [{s['window'][0]:g}, {s['window'][1]:g}]",
        )
    _info(lines, "ladder", f"N in {s['ladder']}, families {s['init_family']}/{s['run_family']}")
    return ok


def _report_fourier_residual(out_dir, lines):
    s = _load_json(out_dir, "fourier_residual.json")
    ok = True
    for probe in s["probes"]:
        xi = probe["xi"]
        ok &= _check(
            lines,
            f"residual xi=({xi[0]:g},{xi[1]:g},{xi[2]:g})",
            probe["pass"],
            f"z = {probe['z_score']:.2f} vs {s['sigma_band']:g} "
            f"(fd {probe['fd'][0]:.4g}{probe['fd'][1]:+.2g}i, "
            f"rhs {probe['rhs'][0]:.4g}{probe['rhs'][1]:+.2g}i, "
            f"se {probe['combined_stderr']:.2g})",
        )
    for row in s["decay"]:
        _info(
            lines,
            f"transform decay gamma={row['gamma']:g} n={row['n']:g}",
            f"sup |transform|<z>^(3+gamma) = {row['sup_weighted']:.4g}",
        )
    equi = s["equicontinuity"]
    _info(lines, "equicontinuity", f"max modulus {equi['max_modulus']:.4g}")
    return ok


_REPORTERS = {
    "kernel_report": (_report_kernel_report, ("kernel_report.json",)),
    "povzner_sweep": (_report_povzner_sweep, ("povzner_report.json",)),
    "simulate": (_report_simulate, ("simulate.json",)),
    "moment_creation": (_report_moment_creation, ("moment_creation.json",)),
    "fourier_residual": (_report_fourier_residual, ("fourier_residual.json",)),
}


def _write_dat_files(out_dir: Path, names):
    """Space-separated gnuplot twins of every CSV artifact."""
    for name in names:
        if not name.endswith(".csv"):
            continue
        rows = (out_dir / name).read_text(encoding="utf-8").split("\r\n")
        dat_lines = []
        for k, row in enumerate(r for r in rows if r):
            cells = row.split(",")
            dat_lines.append(("# " if k == 0 else "") + " ".join(cells))
        (out_dir / (name[:-4] + ".dat")).write_text("\n".join(dat_lines) + "\n", encoding="utf-8")


def report(out_dir: Path) -> int:
    """Integrity-check a run directory and print its pass/fail summary."""
    try:
        manifest = read_manifest(out_dir)
    except FileNotFoundError as exc:
        print(f"kinetics report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    kind = manifest["kind"]
    if kind not in _REPORTERS:
        print(f"kinetics report: unknown experiment kind {kind!r} in manifest", file=sys.stderr)
        return EXIT_USAGE

    missing = []
    corrupt = []
    for name, digest in sorted(manifest["outputs"].items()):
        path = out_dir / name
        if not path.is_file():
            missing.append(name)
        elif sha256_file(path) != digest:
            corrupt.append(name)
    if missing or corrupt:
        print(f"kinetics report: run directory {out_dir} is incomplete", file=sys.stderr)
        for name in missing:
            print(f"  missing artifact: {name}", file=sys.stderr)
        for name in corrupt:
            print(f"  hash mismatch: {name}", file=sys.stderr)
        return EXIT_INVARIANT

    reporter, _needed = _REPORTERS[kind]
    lines = [
        f"run {kind} seed {manifest['seed']} config {manifest['config_hash'][:12]} "
        f"({len(manifest['outputs'])} artifacts)"
    ]
    ok = reporter(out_dir, lines)
    _write_dat_files(out_dir, manifest["outputs"])
    print("\n".join(lines))
    print(f"plot data: {sum(1 for n in manifest['outputs'] if n.endswith('.csv'))} .dat files")
    return EXIT_OK if ok else EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
