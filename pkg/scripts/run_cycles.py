#!/usr/bin/env python3
"""Walk seeded instances around both reduction cycles and tabulate what the
transformations do to dimension, conditioning and the decision.

Usage: python scripts/run_cycles.py [--seeds N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from condred.problems import ConditionParams, Kind, ProblemInstance, gen_instance, oracle_decide
from condred.reductions import DET_PLUS_CYCLE, MATINV_PLUS_CYCLE, RULES


def scalar_posdef_instance(seed: int, want_one: bool) -> ProblemInstance:
    rng = np.random.default_rng((seed, 0xA3))
    kappa = 1.05 + 0.4 * rng.uniform()
    eps = 0.63 * kappa
    h = rng.uniform(1.0 / kappa, 1.0)
    q = 1.0 / h
    delta = 1e-6 * q
    b = q - delta if want_one else q + eps + delta
    return ProblemInstance(
        Kind.MATINV_PLUS,
        ConditionParams(1, 1, kappa, eps),
        (np.array([[h]], dtype=complex),),
        s=1,
        t=1,
        b=b,
    )


def run_cycle(label: str, path: tuple[str, ...], make, seeds: int) -> None:
    print(f"\n=== {label} ===")
    agree = 0
    for seed in range(seeds):
        want_one = seed % 2 == 0
        inst = make(seed, want_one)
        src = oracle_decide(inst).value.value
        print(f"seed {seed:2d} ({'One ' if want_one else 'Zero'}): "
              f"{inst.kind.value}[n={inst.params.n}]", end="")
        t0 = time.perf_counter()
        for rule in path:
            inst, _ = RULES[rule].apply(inst)
            print(f" -> {inst.kind.value}[n={inst.params.n}]", end="")
        dst = oracle_decide(inst, check="gap").value.value
        ok = src == dst
        agree += ok
        print(f"  {src}/{dst} {'ok' if ok else 'MISMATCH'} ({time.perf_counter()-t0:.2f} s)")
    print(f"{agree}/{seeds} decisions preserved")


def det_instance(seed: int, want_one: bool) -> ProblemInstance:
    params = ConditionParams(1, 1, 2.0, 0.4)
    return gen_instance(Kind.DET_PLUS, params, seed, want_one=want_one)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seeds", type=int, default=6)
    args = parser.parse_args()
    run_cycle("MATINV+ -> SUMITMATPROD -> ITMATPROD -> MATPOW -> MATINV -> MATINV+",
              MATINV_PLUS_CYCLE, scalar_posdef_instance, args.seeds)
    run_cycle("DET+ -> SUMITMATPROD -> ITMATPROD -> ITMATPROD>=0 -> DET -> DET+",
              DET_PLUS_CYCLE, det_instance, args.seeds)


if __name__ == "__main__":
    main()
