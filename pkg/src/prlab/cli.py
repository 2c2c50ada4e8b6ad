"""``prlab`` command line.

Exit codes: 0 success, 1 a battery/fact/transfer verdict failed, 2 usage error
(bad flag, bad parameter, malformed test expression), 3 data error (missing or
corrupt input file, request beyond available data).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, SUBCOMMANDS
from .correlate import (
    DEFAULT_BATTERY,
    battery,
    biased_statistic,
    correlate,
)
from .density import Chain, KPlan, check_facts, chain_density, k_density, measure_event, parse_set
from .errors import (
    BlockFormatError,
    DataRangeError,
    DomainError,
    DSLError,
    KeyGenerationError,
    PrlabError,
)
from .hcprg import BlockSchedule, TrapdoorKey, keygen, prg_sequence
from .seqkernel import cached_sequence, load_block, save_block, sieve_range
from .sources import CheckpointPlan
from .testlang.parser import parse
from .transforms import mu_lambda_transfer_check

EXIT_OK, EXIT_VERDICT, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3

_NAMED_SOURCE = re.compile(r"^(liouville|lambda|mobius|mu)(?::(\d+))?$")


# -- argument parsing ------------------------------------------------------------------


def _flag(p, name, **kw):
    p.add_argument(name, default=argparse.SUPPRESS, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"prlab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    _flag(common, "--config", dest="config_file", help="key = value file mirroring the flags")
    _flag(common, "--json", help="write the JSON report here (default: stdout)")
    _flag(common, "--seed", type=int)
    _flag(common, "--workers", type=int)
    _flag(common, "--window", type=int, help="sieve window width")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("sieve", parents=[common], help="sieve lambda or mu into a block file")
    _flag(p, "--kind", choices=["liouville", "mobius"])
    _flag(p, "--range", help="lo:hi (half-open)")
    _flag(p, "--out")

    p = sub.add_parser("correlate", parents=[common], help="correlation trace of one test")
    _seq_flags(p)
    _flag(p, "--test")
    _flag(p, "--eps", type=float)
    _flag(p, "--p", type=float, help="also report the p-biased statistic")
    _flag(p, "--csv")

    p = sub.add_parser("battery", parents=[common], help="run a battery of tests")
    _seq_flags(p)
    _flag(p, "--tests", help="'default', a file with one test per line, or tests separated by ';'")
    _flag(p, "--threshold", type=float)
    _flag(p, "--burn-in", dest="burn_in", type=int)

    p = sub.add_parser("density", parents=[common], help="K-density and chain density of a set")
    _flag(p, "--set")
    _density_flags(p)
    _flag(p, "--csv")

    p = sub.add_parser("measure", parents=[common], help="estimated probability of an event")
    _flag(p, "--event")
    _density_flags(p)

    p = sub.add_parser("facts", parents=[common], help="check the density facts")
    _flag(p, "--x")
    _flag(p, "--y")
    _flag(p, "--z")
    _flag(p, "--tolerance", type=float)
    _density_flags(p)

    p = sub.add_parser("prg", parents=[common], help="hard-core predicate sequence")
    _flag(p, "--bits", type=int)
    _flag(p, "--key", help="key file to use instead of generating one")
    _flag(p, "--key-out", dest="key_out")
    _flag(p, "--schedule", help="comma-separated exponents k_1 < k_2 < ...")
    _flag(p, "--range", help="lo:hi (default 0:n+1)")
    _flag(p, "--n", type=int)
    _flag(p, "--out")
    p.add_argument("--battery", action="store_true", help="run the default battery on the output")
    _flag(p, "--threshold", type=float)
    _flag(p, "--burn-in", dest="burn_in", type=int)

    p = sub.add_parser("transfer", parents=[common], help="check lambda(k^2 i) = mu(i)")
    _flag(p, "--n", type=int)
    _flag(p, "--n0", type=int)

    p = sub.add_parser("selftest", parents=[common], help="oracle and identity suites")
    _flag(p, "--seq", help="also verify this block file")
    return parser


def _seq_flags(p):
    _flag(p, "--seq", help="block file, or liouville[:N] / mobius[:N]")
    _flag(p, "--n", type=int, help="cap N")
    _flag(p, "--checkpoints", help="pow2, linear:STEP, geom:RATIO or list:a,b,...")


def _density_flags(p):
    _flag(p, "--n", type=int, help="cap N")
    _flag(p, "--depth", type=int)
    _flag(p, "--checkpoints")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values = vars(ns).copy()
    sub = values.pop("subcommand")
    cfg_file = values.pop("config_file", None)
    run_battery = values.pop("battery", False)
    cfg = RunConfig.load(cfg_file) if cfg_file else RunConfig()
    cfg.subcommand = sub
    for key, value in values.items():
        setattr(cfg, key, value)
    cfg.validate()
    cfg._battery = run_battery
    return cfg


# -- helpers ---------------------------------------------------------------------------


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise DomainError(f"bad range {text!r}; expected lo:hi") from None
    return lo, hi


def _load_source(cfg: RunConfig):
    if not cfg.seq:
        raise DomainError("--seq is required")
    m = _NAMED_SOURCE.match(cfg.seq)
    if m:
        cap = int(m.group(2)) if m.group(2) else cfg.n
        if cap is None:
            raise DomainError("a named sequence needs a cap: liouville:N or --n N")
        return cached_sequence(m.group(1), cap + 1, window=cfg.window, workers=cfg.workers)
    return load_block(cfg.seq)


def _cap(cfg: RunConfig, source) -> int:
    return cfg.n if cfg.n is not None else source.hi - 1


def _load_tests(spec: str):
    if spec == "default":
        texts = list(DEFAULT_BATTERY)
    elif Path(spec).is_file():
        texts = [
            line.strip() for line in Path(spec).read_text().splitlines()
            if line.strip() and not line.lstrip().startswith("#")
        ]
    else:
        texts = [t.strip() for t in spec.split(";") if t.strip()]
    return [parse(t) for t in texts]


def _kplan(cfg: RunConfig) -> KPlan:
    if cfg.n is None:
        raise DomainError("--n (the cap) is required")
    return KPlan(cfg.n, CheckpointPlan.parse(cfg.checkpoints))


def _emit(cfg: RunConfig, result: dict, out) -> None:
    doc = {"command": cfg.subcommand, "config": cfg.public_dict(), "result": result}
    text = json.dumps(doc, indent=2) + "\n"
    if cfg.json:
        Path(cfg.json).write_text(text)
    else:
        out.write(text)


# -- subcommands -----------------------------------------------------------------------


def cmd_sieve(cfg: RunConfig, out) -> int:
    if not cfg.range or not cfg.out:
        raise DomainError("sieve needs --range lo:hi and --out PATH")
    lo, hi = _parse_range(cfg.range)
    block = sieve_range(lo, hi, cfg.kind, window=cfg.window, workers=cfg.workers)
    save_block(block, cfg.out)
    _emit(cfg, {
        "kind": block.kind.name.lower(), "lo": lo, "hi": hi, "path": cfg.out,
        "sum": int(block.values.sum(dtype=np.int64)),
        "zeros": int(np.count_nonzero(block.values == 0)),
    }, out)
    return EXIT_OK


def cmd_correlate(cfg: RunConfig, out) -> int:
    if not cfg.test:
        raise DomainError("correlate needs --test EXPR")
    f = parse(cfg.test)
    source = _load_source(cfg)
    pts = CheckpointPlan.parse(cfg.checkpoints).points(_cap(cfg, source))
    trace = correlate(source, f, pts, eps=cfg.eps)
    result = {"trace": trace.to_dict()}
    if cfg.p is not None:
        bt = biased_statistic(source, f, cfg.p, pts)
        result["biased"] = {
            "p": cfg.p,
            "rows": [{"n": n, "value": v} for n, v in zip(bt.checkpoints, bt.values)],
        }
    if cfg.csv:
        with open(cfg.csv, "w", newline="") as fh:
            trace.to_csv(fh)
    _emit(cfg, result, out)
    return EXIT_OK


def cmd_battery(cfg: RunConfig, out) -> int:
    tests = _load_tests(cfg.tests)
    source = _load_source(cfg)
    report = battery(source, tests, cfg.threshold, burn_in=cfg.burn_in,
                     cap=_cap(cfg, source), checkpoints=cfg.checkpoints)
    _emit(cfg, report.to_dict(), out)
    return EXIT_OK if report.passed else EXIT_VERDICT


def cmd_density(cfg: RunConfig, out) -> int:
    if not cfg.set:
        raise DomainError("density needs --set")
    X = parse_set(cfg.set)
    K = _kplan(cfg)
    kd = k_density(X, K)
    cd = chain_density(X, Chain.powers_of_two(cfg.depth), K)
    if cfg.csv:
        _density_csv(cfg.csv, kd, cd)
    _emit(cfg, {"set": str(X), "k_density": kd.to_dict(), "chain_density": cd.to_dict()}, out)
    return EXIT_OK


def _density_csv(path, kd, cd) -> None:
    per_depth = [dict(zip(lvl.checkpoints, lvl.ratios)) for lvl in cd.levels]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "k_density"] + [f"depth_{t}" for t in range(1, len(per_depth) + 1)])
    for k, r in zip(kd.checkpoints, kd.ratios):
        w.writerow([k, repr(r)] + [repr(d[k]) if k in d else "" for d in per_depth])
    Path(path).write_text(buf.getvalue())


def cmd_measure(cfg: RunConfig, out) -> int:
    if not cfg.event:
        raise DomainError("measure needs --event")
    est = measure_event(cfg.event, Chain.powers_of_two(cfg.depth), _kplan(cfg))
    _emit(cfg, est.to_dict(), out)
    return EXIT_OK


def cmd_facts(cfg: RunConfig, out) -> int:
    X = parse_set(cfg.x or "residue:3:0")
    Y = parse_set(cfg.y or "residue:3:1")
    Z = parse_set(cfg.z or "lambda=+1")
    report = check_facts(X, Y, Z, Chain.powers_of_two(cfg.depth), _kplan(cfg),
                         tolerance=cfg.tolerance)
    _emit(cfg, report.to_dict(), out)
    return EXIT_OK if report.passed else EXIT_VERDICT


def cmd_prg(cfg: RunConfig, out) -> int:
    key = TrapdoorKey.load(cfg.key) if cfg.key else keygen(cfg.bits, cfg.seed)
    if cfg.key_out:
        key.save(cfg.key_out)
    if cfg.range:
        lo, hi = _parse_range(cfg.range)
    else:
        lo, hi = 0, (cfg.n if cfg.n is not None else 100_000) + 1
    schedule = BlockSchedule.parse(cfg.schedule) if cfg.schedule else BlockSchedule.covering(hi)
    block = prg_sequence(key, schedule, lo, hi, seed=cfg.seed)
    if cfg.out:
        save_block(block, cfg.out)
    result = {
        "N": str(key.modulus), "schedule": list(schedule.exponents), "lo": lo, "hi": hi,
        "path": cfg.out, "sum": int(block.values.sum(dtype=np.int64)),
    }
    passed = True
    if getattr(cfg, "_battery", False):
        report = battery(block, _load_tests(cfg.tests), cfg.threshold, burn_in=cfg.burn_in,
                         cap=hi - 1, checkpoints=cfg.checkpoints)
        result["battery"] = report.to_dict()
        passed = report.passed
    _emit(cfg, result, out)
    return EXIT_OK if passed else EXIT_VERDICT


def cmd_transfer(cfg: RunConfig, out) -> int:
    report = mu_lambda_transfer_check(cfg.n if cfg.n is not None else 100_000, n0=cfg.n0)
    _emit(cfg, report.to_dict(), out)
    return EXIT_OK if report.passed else EXIT_VERDICT


def cmd_selftest(cfg: RunConfig, out) -> int:
    from .selftest import run_suites

    extra = load_block(cfg.seq) if cfg.seq else None
    results = run_suites(extra)
    for r in results:
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['suite']}: {r['detail']}", file=sys.stderr)
    passed = all(r["passed"] for r in results)
    _emit(cfg, {"passed": passed, "suites": results}, out)
    return EXIT_OK if passed else EXIT_VERDICT


COMMANDS = {
    "sieve": cmd_sieve,
    "correlate": cmd_correlate,
    "battery": cmd_battery,
    "density": cmd_density,
    "measure": cmd_measure,
    "facts": cmd_facts,
    "prg": cmd_prg,
    "transfer": cmd_transfer,
    "selftest": cmd_selftest,
}
assert set(COMMANDS) == set(SUBCOMMANDS)


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.subcommand](cfg, out)
    except DSLError as exc:
        print(f"prlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BlockFormatError, DataRangeError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"prlab: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DomainError, KeyGenerationError) as exc:
        print(f"prlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PrlabError as exc:
        print(f"prlab: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
