"""End-to-end demo suites behind ``hyperkl demo``.

Each demo returns a JSON-ready report with a top-level ``passed`` flag.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from .constructors import catalog_group, catalog_hypergroups, conjugacy_hypergroup, \
    group_as_hypergroup, z_cross_f
from .fileio import atoms_to_json
from .measure import Measure, alternating_limit, is_idempotent, random_measure
from .operator import bilateral_shift_check, decompose, is_normal, operator_of, \
    windowed_partition
from .padic import PadicParams, run_counterexample

DEMOS = ("tortrat-shift", "central", "commutative", "counterexample")


def tortrat_shift(window: int = 8, **_) -> dict:
    """Z x Z2 with ``lam = d_1 (x) uniform``: shift identity and the
    deterministic atoms ``{n} x Z2``."""
    F = group_as_hypergroup(catalog_group("Z2"))
    H = z_cross_f(F)
    half = Fraction(1, 2)
    lam = Measure(H, {(1, 0): half, (1, 1): half})
    shift = bilateral_shift_check(H, lam, range(-window, window + 1), range(1, window + 1))
    verdict, _ = alternating_limit(lam, window=3, n_max=50)
    rho = verdict.limit
    idem = rho is not None and is_idempotent(rho).idempotent
    points = [(j, i) for j in range(-window, window + 1) for i in range(2)]
    part = windowed_partition(H, rho, points) if rho is not None else []
    cosets = [[(j, 0), (j, 1)] for j in range(-window, window + 1)]
    return {
        "demo": "tortrat-shift",
        "shift_identity": shift,
        "limit": atoms_to_json(rho) if rho is not None else None,
        "limit_idempotent": idem,
        "partition": [[list(x) for x in block] for block in part],
        "partition_is_cosets": part == cosets,
        "passed": bool(shift and idem and part == cosets),
    }


def _central_case(F, kappa: Measure) -> dict:
    H = z_cross_f(F)
    lam = Measure(H, {(1, k): w for k, w in kappa.atoms.items()}, exact=False)
    verdict, n = alternating_limit(lam, tol=1e-12, window=5, n_max=5000)
    idem = verdict.converged and is_idempotent(verdict.limit, tol=1e-9).idempotent
    fibres = sorted({k[0] for k in verdict.limit.atoms}) if verdict.converged else None
    return {"host": F.name, "kappa": atoms_to_json(kappa), "verdict": str(verdict),
            "terms": n, "idempotent": bool(idem), "limit_fibres": fibres,
            "passed": bool(idem and fibres == [0])}


def central(seed: int = 0, cases: int = 6, **_) -> dict:
    """Z x F with F finite (so K/Z is compact): the alternating limit of
    ``d_1 (x) kappa`` must be idempotent."""
    rng = random.Random(seed)
    bases = [group_as_hypergroup(catalog_group("Z2")), conjugacy_hypergroup(catalog_group("S3")),
             group_as_hypergroup(catalog_group("S3")), conjugacy_hypergroup(catalog_group("Q8"))]
    results = []
    for i in range(cases):
        F = bases[i % len(bases)]
        kappa = random_measure(F, range(len(F)), rng, exact=False)
        results.append(_central_case(F, kappa))
    return {"demo": "central", "cases": results, "passed": all(r["passed"] for r in results)}


def _commutative_case(args) -> dict:
    name, seed = args
    H = catalog_hypergroups()[name]
    lam = random_measure(H, range(len(H)), random.Random(seed))
    P = operator_of(lam)
    normal = is_normal(P)
    res = decompose(lam)
    return {"host": name, "measure": atoms_to_json(lam), "normal": normal,
            "residual": res.residual, "kl_holds": res.kl_holds,
            "passed": bool(normal and res.residual <= 1e-8)}


def commutative(seed: int = 0, cases: int = 20, jobs: int = 1, **_) -> dict:
    """Random measures on commutative catalog hypergroups: normal operators
    and ``|Q^2 - Q| <= 1e-8``."""
    hosts = sorted(k for k, H in catalog_hypergroups().items() if H.is_commutative)
    rng = random.Random(seed)
    args = [(hosts[i % len(hosts)], rng.randrange(2 ** 31)) for i in range(cases)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_commutative_case, args))
    else:
        results = [_commutative_case(a) for a in args]
    return {"demo": "commutative", "cases": results,
            "max_residual": float(np.max([r["residual"] for r in results])),
            "passed": all(r["passed"] for r in results)}


def counterexample(seed: int = 0, p: int = 5, s: int = 3, n_max: int = 20, **_) -> dict:
    report = run_counterexample(PadicParams(p, s), n_max, seed=seed, strict=False)
    return {"demo": "counterexample", **report}


def run_demo(name: str, **kwargs) -> dict:
    table = {"tortrat-shift": tortrat_shift, "central": central,
             "commutative": commutative, "counterexample": counterexample}
    if name not in table:
        raise KeyError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    return table[name](**kwargs)
