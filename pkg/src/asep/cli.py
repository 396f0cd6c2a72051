"""Command-line entry point.

``asep run`` executes the experiments of a JSON config and writes

* ``manifest.json``: the invocation echo,
* ``summary.json``: one full record per experiment,
* ``<name>.csv``: columns ``point, estimate, ci_lo, ci_hi, reference``,
* ``laws/<law>.csv``: columns ``s, value`` for every reference law used,
* ``timing.json``: wall-clock times (the only file that varies between runs).

Each CSV opens with a ``#`` line carrying seed, spec hash and version.
Numbers are written with ``repr`` (C locale, LF line endings).

``asep laws`` tabulates one law on a grid.

Exit codes: 0 all gating claims passed, 2 a claim failed (or a result was
flagged, or a law did not converge), 1 bad config or runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .clockfield import derive_seed
from .experiments import ExperimentSpec, SpecError, execute, plain, spec_hash
from .twdist import LAW_KINDS, ConvergenceError, DistLaw

CSV_COLUMNS = ("point", "estimate", "ci_lo", "ci_hi", "reference")

_EPILOG = (
    "config: JSON object {\"seed\": U64, \"experiments\": [spec, ...]}; each spec has "
    "name, op, p, t, trials and optional params, scalings, seed, exploratory. "
    "An experiment without its own seed (or every experiment, under --seed) gets "
    "derive_seed(master, index). "
    "CSV columns: " + ", ".join(CSV_COLUMNS) + "; law tables: s, value."
)


class ConfigError(ValueError):
    pass


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def _dump_json(obj) -> str:
    return json.dumps(plain(obj), indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def load_config(path, seed=None, only=None, exploratory=False) -> list[ExperimentSpec]:
    """Parse and validate a config file into experiment specs."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"config: cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config: invalid JSON ({e})") from e
    if isinstance(raw, list):
        raw = {"experiments": raw}
    if not isinstance(raw, dict) or not isinstance(raw.get("experiments", []), list):
        raise ConfigError("experiments: must be a list of experiment objects")
    master = raw.get("seed", 0) if seed is None else seed
    if not (isinstance(master, int) and 0 <= master < 2**64):
        raise ConfigError("seed: must be a 64-bit unsigned integer")
    specs, names = [], set()
    for i, d in enumerate(raw.get("experiments", [])):
        if not isinstance(d, dict):
            raise ConfigError(f"experiments[{i}]: must be an object")
        d = dict(d)
        if seed is not None or "seed" not in d:
            d["seed"] = int(derive_seed(np.uint64(master), np.int64(i)))
        if exploratory:
            d["exploratory"] = True
        try:
            s = ExperimentSpec.from_dict(d)
        except SpecError as e:
            raise ConfigError(f"experiments[{i}].{e}") from e
        except TypeError as e:
            raise ConfigError(f"experiments[{i}]: {e}") from e
        if s.name in names:
            raise ConfigError(f"experiments[{i}].name: duplicate name {s.name!r}")
        names.add(s.name)
        specs.append(s)
    if only:
        missing = set(only) - names
        if missing:
            raise ConfigError(f"--only: unknown experiment {sorted(missing)[0]!r}")
        specs = [s for s in specs if s.name in only]
    return specs


def _run_dir(out: Path) -> Path:
    if not out.exists() or not any(out.iterdir()):
        out.mkdir(parents=True, exist_ok=True)
        return out
    k = 1
    while (out / f"run-{k:03d}").exists():
        k += 1
    d = out / f"run-{k:03d}"
    d.mkdir()
    return d


def result_csv(result) -> str:
    buf = io.StringIO()
    buf.write(f"# seed={result.spec.seed} spec_hash={spec_hash(result.spec)} version={__version__}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for e in result.estimates:
        w.writerow([e.point, _num(e.value), _num(e.ci_lo), _num(e.ci_hi), _num(e.reference)])
    return buf.getvalue()


def law_csv(law: DistLaw, header: str) -> str:
    return header + law.to_csv()


def cmd_run(args) -> int:
    only = [x for x in args.only.split(",") if x] if args.only else None
    try:
        specs = load_config(args.config, args.seed, only, args.exploratory)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    manifest = {"config": str(args.config), "out": str(args.out), "seed": args.seed,
                "jobs": args.jobs, "only": only, "exploratory": bool(args.exploratory),
                "version": __version__}
    out = _run_dir(Path(args.out))
    _write(out / "manifest.json", _dump_json(manifest))
    if not specs:
        return 0
    records, timing, status = [], {}, 0
    for spec in specs:
        try:
            res = execute(spec, jobs=args.jobs)
        except (ValueError, KeyError, TypeError) as e:
            print(f"error: {spec.name}: {e}", file=sys.stderr)
            return 1
        records.append(res.record())
        timing[spec.name] = round(res.wall_time, 3)
        _write(out / f"{spec.name}.csv", result_csv(res))
        if res.laws:
            (out / "laws").mkdir(exist_ok=True)
            head = f"# seed={spec.seed} spec_hash={spec_hash(spec)} version={__version__}\n"
            for law in res.laws:
                _write(out / "laws" / f"{law.name}.csv", law_csv(law, head))
        verdict = "pass" if res.passed else "FAIL"
        print(f"{spec.name}: {verdict}", *(f"  [{'ok' if c.passed else 'x'}] {c.name}: {c.detail}"
                                           for c in res.claims), sep="\n")
        if not res.passed:
            status = 2
    _write(out / "summary.json", _dump_json({"manifest": manifest, "results": records}))
    _write(out / "timing.json", _dump_json(timing))
    return status


def _parse_params(items) -> dict:
    params = {}
    for it in items or []:
        k, sep, v = it.partition("=")
        if not sep:
            raise ConfigError(f"--param {it!r}: expected KEY=VALUE")
        params[k] = int(v) if k == "M" else float(v)
    return params


def cmd_laws(args) -> int:
    try:
        params = _parse_params(args.param)
        grid = [float(x) for x in args.grid.split(",") if x.strip()]
        if not grid:
            raise ConfigError("--grid: empty")
        law = DistLaw(args.kind, params, accuracy_target=args.accuracy)
    except (ConfigError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        law.evaluate(grid)
    except ConvergenceError as e:
        print(f"error: {law.name}: {e}", file=sys.stderr)
        return 2
    except (ValueError, OverflowError) as e:
        print(f"error: {law.name}: {e}", file=sys.stderr)
        return 1
    text = law_csv(law, f"# law={law.name} version={__version__}\n")
    if args.out and args.out != "-":
        os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="asep", description="ASEP shock experiments and limit laws.",
                                 epilog=_EPILOG)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiments of a config", epilog=_EPILOG)
    r.add_argument("--config", required=True, help="JSON config path")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=None, help="master seed (U64); overrides the config")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    r.add_argument("--only", default=None, help="comma-separated experiment names")
    r.add_argument("--exploratory", action="store_true",
                   help="allow exponents outside the proven windows (e.g. nu >= 3/7)")
    r.set_defaults(func=cmd_run)
    lw = sub.add_parser("laws", help="tabulate a reference law",
                        epilog="kinds: " + ", ".join(LAW_KINDS) + "; output columns: s, value")
    lw.add_argument("kind", choices=LAW_KINDS)
    lw.add_argument("--param", action="append", help="KEY=VALUE (M, p, lam, beta)")
    lw.add_argument("--grid", required=True, help="comma-separated evaluation points (write --grid=-2,0,2 when the first is negative)")
    lw.add_argument("--accuracy", type=float, default=1e-8)
    lw.add_argument("--out", default="-", help="output CSV (default stdout)")
    lw.set_defaults(func=cmd_laws)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:  # runtime failure maps to exit 1
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
