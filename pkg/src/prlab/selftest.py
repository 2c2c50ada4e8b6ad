"""Oracle-equivalence and identity suites behind ``prlab selftest``."""

from __future__ import annotations

import numpy as np

from . import oracles
from .density import Chain, KPlan, ResidueSet, check_facts
from .seqkernel import SeqBlock, SeqKind, sieve_range
from .transforms import mu_lambda_transfer_check

ORACLE_LIMIT = 100_000
SQUARE_LIMIT = 10_000


def _result(name, passed, detail):
    return {"suite": name, "passed": bool(passed), "detail": detail}


def oracle_suite(limit: int = ORACLE_LIMIT):
    lam = sieve_range(1, limit + 1, SeqKind.LIOUVILLE).values
    mu = sieve_range(1, limit + 1, SeqKind.MOBIUS).values
    bad = [
        n for n in range(1, limit + 1)
        if lam[n - 1] != oracles.liouville(n) or mu[n - 1] != oracles.mobius(n)
    ]
    return _result("oracle", not bad, f"{len(bad)} mismatches for n <= {limit}")


def square_suite(limit: int = SQUARE_LIMIT):
    lam = sieve_range(1, limit * limit + 1, SeqKind.LIOUVILLE).values
    ns = np.arange(1, limit + 1, dtype=np.int64)
    bad = np.count_nonzero(lam[ns * ns - 1] != 1)
    return _result("lambda(n^2) = 1", bad == 0, f"{bad} exceptions for n <= {limit}")


def doubling_suite(limit: int = ORACLE_LIMIT):
    lam = sieve_range(1, 2 * limit + 1, SeqKind.LIOUVILLE).values
    ns = np.arange(1, limit + 1, dtype=np.int64)
    bad = np.count_nonzero(lam[2 * ns - 1] != -lam[ns - 1])
    return _result("lambda(2n) = -lambda(n)", bad == 0, f"{bad} exceptions for n <= {limit}")


def transfer_suite(limit: int = ORACLE_LIMIT):
    rep = mu_lambda_transfer_check(limit)
    return _result("mu-lambda transfer", rep.passed,
                   f"{len(rep.counterexamples)} counterexamples for n <= {limit}")


def additivity_suite(cap: int = ORACLE_LIMIT):
    rep = check_facts(ResidueSet(3, 0), ResidueSet(3, 1), ResidueSet(2, 0),
                      Chain.powers_of_two(3), KPlan(cap))
    exact = [v for v in rep.verdicts if v.fact in (1, 5)]
    return _result("density additivity", all(v.passed for v in exact),
                   f"facts 1 and 5 exact at {len(KPlan(cap).points())} checkpoints up to {cap}")


def block_suite(block: SeqBlock, limit: int = ORACLE_LIMIT):
    name = f"block file [{block.lo}, {block.hi})"
    if block.kind is SeqKind.CUSTOM:
        return _result(name, True, "custom block decoded; no oracle for its values")
    ref = oracles.liouville if block.kind is SeqKind.LIOUVILLE else oracles.mobius
    top = min(block.hi, max(block.lo, 1) + limit)
    bad = [n for n in range(max(block.lo, 1), top) if block[n] != ref(n)]
    return _result(name, not bad, f"{len(bad)} mismatches on [{max(block.lo, 1)}, {top})")


def run_suites(block: SeqBlock | None = None) -> list[dict]:
    results = [oracle_suite(), square_suite(), doubling_suite(), transfer_suite(),
               additivity_suite()]
    if block is not None:
        results.append(block_suite(block))
    return results
