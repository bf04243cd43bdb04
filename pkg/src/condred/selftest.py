"""Fast invariant battery behind the CLI's --self-test flag.

Each group runs a handful of seeded checks drawn from the full test suite;
the point is a one-command health check, not coverage (pytest owns that).
"""

from __future__ import annotations

import numpy as np

from . import reductions
from .circuits import (
    GeneralCircuit,
    StochasticChain,
    append_cleanup,
    circuit_to_itmatprod,
    markov_to_matpow,
    simulate_acceptance,
    unitary_gate,
)
from .matcore import natural_representation, random_kraus_set, svd_values, vec
from .problems import ConditionParams, Kind, gen_instance, oracle_decide, product_entry
from .series import logdet_series, neumann_inverse_entry

_GEN_PARAMS = {
    Kind.ITMATPROD: ConditionParams(3, 4, 2.0, 0.05),
    Kind.MATPOW: ConditionParams(3, 4, 2.0, 0.05),
    Kind.MATINV: ConditionParams(4, 1, 5.0, 0.05),
    Kind.MATINV_PLUS: ConditionParams(3, 1, 4.0, 0.3),
    Kind.DET: ConditionParams(3, 1, 4.0, 0.2),
    Kind.DET_PLUS: ConditionParams(3, 1, 4.0, 0.2),
    Kind.ITMATPROD_NONNEG: ConditionParams(3, 5, 4.0, 0.05),
    Kind.SUMITMATPROD: ConditionParams(3, 3, 2.0, 0.05),
    Kind.V_MATINV: ConditionParams(4, 1, 5.0, 0.05),
    Kind.V_MATPOW: ConditionParams(3, 4, 2.0, 0.05),
    Kind.V_ITMATPROD: ConditionParams(3, 4, 2.0, 0.05),
    Kind.SINGULAR: ConditionParams(4, 1, 1.0, 0.2),
}


def _check_channels(tol: float):
    rng = np.random.default_rng(7)
    worst = 0.0
    for h in (1, 2, 3):
        d = 2**h
        ops = random_kraus_set(d, 3, rng)
        k = natural_representation(ops)
        for i in range(d):
            for j in range(d):
                basis = np.zeros((d, d), dtype=np.complex128)
                basis[i, j] = 1.0
                applied = sum(o @ basis @ o.conj().T for o in ops)
                worst = max(worst, float(np.max(np.abs(k @ vec(basis) - vec(applied)))))
        worst = max(worst, float(svd_values(k)[0]) - d)
    return worst <= 1e-10, f"defining-identity residual {worst:.2e}"


def _check_rules(tol: float):
    bad = []
    for name, rule in reductions.RULES.items():
        params = _GEN_PARAMS[rule.input_kind]
        inst = gen_instance(rule.input_kind, params, seed=11, want_one=True)
        out, rec = rule.apply(inst)
        rec = reductions.measure_record(rec, inst, out)
        if not all(b.holds() for b in rec.declared_bounds):
            bad.append(name)
            continue
        if rule.output_kind is not Kind.SINGULAR:
            if oracle_decide(out).value != oracle_decide(inst).value:
                bad.append(name)
    return not bad, "all 12 rules hold" if not bad else f"failing: {', '.join(bad)}"


def _check_series(tol: float):
    rng = np.random.default_rng(3)
    from .matcore import random_unitary

    u = random_unitary(4, rng)
    lam = np.array([1.0, 0.7, 0.5, 0.25])
    h = u @ np.diag(lam).astype(np.complex128) @ u.conj().T
    h = (h + h.conj().T) / 2
    res = logdet_series(h, kappa=4.0, epsilon=0.05)
    err = float(np.real(res.value)) - float(np.log(lam).sum())
    ok = 0.0 <= err <= 0.025 + 1e-12
    res2 = neumann_inverse_entry(h, 1, 2, kappa=4.0, epsilon=0.05)
    exact = np.linalg.inv(h)[0, 1]
    ok2 = abs(res2.value - exact) <= 0.0125 + 1e-12
    return ok and ok2, f"logdet err {err:.2e}, neumann err {abs(res2.value - exact):.2e}"


def _check_circuits(tol: float):
    x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    circ = append_cleanup(GeneralCircuit(2, (unitary_gate(x, (1,), 2),)))
    inst = circuit_to_itmatprod(circ)
    entry = product_entry(inst.matrices, inst.s, inst.t)
    prob = simulate_acceptance(circ)
    ok = abs(entry - prob) <= 1e-12 and abs(prob - 1.0) <= 1e-12
    return ok, f"encoded entry {entry.real:.6f} vs acceptance {prob:.6f}"


def _check_markov(tol: float):
    t = np.array([[0.5, 0.5], [0.5, 0.5]])
    inst = markov_to_matpow(StochasticChain(t, start=2, accept=1, steps=5))
    q = abs(oracle_decide(inst, check="none").witness_value)
    return abs(q - 0.5) <= 1e-12, f"two-state walk entry {q:.6f}"


def run_all(tol: float = 1e-9):
    groups = (
        ("channel algebra", _check_channels),
        ("reduction rules", _check_rules),
        ("series certificates", _check_series),
        ("circuit encoding", _check_circuits),
        ("stochastic chains", _check_markov),
    )
    rows = []
    for name, fn in groups:
        try:
            ok, detail = fn(tol)
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        rows.append((name, ok, detail))
    return rows
