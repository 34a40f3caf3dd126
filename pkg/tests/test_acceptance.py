"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is
printed in the terminal summary."""

import random
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from hyperkl.constructors import (catalog_group, catalog_hypergroups, double_coset_hypergroup,
                                  group_as_hypergroup, integers, subgroup_generated,
                                  z_cross_f)
from hyperkl.core import validate_axioms
from hyperkl.measure import (Measure, alternating_limit, alternating_sequence, convolve,
                             involute, is_idempotent, random_measure, trajectory)
from hyperkl.operator import (bilateral_shift_check, decompose, is_normal, m_norm, operator_of,
                              q_limit, windowed_partition)
from hyperkl.padic import (PadicParams, counterexample_measure, expected_limit,
                           run_counterexample)

import oracles
from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

SQUARE_WEIGHTS = sorted([Fraction(3, 8), Fraction(1, 4), Fraction(1, 4),
                         Fraction(1, 16), Fraction(1, 16)])


@contextmanager
def criterion(number, title, budget):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < budget, f"runtime {elapsed:.2f}s exceeds {budget}s"
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        ACCEPTANCE_LINES.append(f"FAIL  {number}. {title} ({elapsed:.2f}s): "
                                f"{str(exc).splitlines()[0] if str(exc) else type(exc).__name__}")
        raise
    ACCEPTANCE_LINES.append(f"PASS  {number}. {title} ({elapsed:.2f}s, budget {budget}s)")


def counterexample_assertions(p, s, n_max=20):
    params = PadicParams(p, s)
    lam = counterexample_measure(params)
    rho = expected_limit(params)
    assert sorted(rho.atoms.values()) == [Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]
    seq = alternating_sequence(lam, n_max)
    assert len(seq) == n_max
    for n, entry in enumerate(seq, 1):
        assert entry == rho, f"n={n}: {entry}"
    idem = is_idempotent(rho)
    assert not idem.idempotent
    assert len(idem.square) == 5
    assert sorted(idem.square.atoms.values()) == SQUARE_WEIGHTS
    report = run_counterexample(params, n_max)
    assert report["passed"]


def test_criterion_1_counterexample_exact():
    with criterion(1, "p-adic counterexample exact at p=5, s=3, n=1..20", 1.0):
        counterexample_assertions(5, 3)


def test_criterion_2_genericity_sweep():
    with criterion(2, "counterexample sweep (p, s) in {5,7,11} x {1,2,3}", 5.0):
        for p in (5, 7, 11):
            for s in (1, 2, 3):
                counterexample_assertions(p, s)


def test_criterion_3_axiom_suite():
    with criterion(3, "constructor outputs satisfy axioms and Haar invariance exactly", 5.0):
        cat = catalog_hypergroups()
        assert {"S3//<(12)>", "S4//S3", "Z2xconj(S3)", "conj(S4)"} <= set(cat)
        for name, H in cat.items():
            rep = validate_axioms(H, exhaustive=len(H) <= 8)
            assert rep.ok, f"{name}: {rep.lines()[:3]}"
            m, n = H.haar, len(H)
            for j in range(n):
                for z in range(n):
                    assert sum(m[x] * H.c(x, j, z) for x in range(n)) == m[z], (name, j, z)


def random_pairs(count, seed):
    cat = catalog_hypergroups()
    names = sorted(cat)
    rng = random.Random(seed)
    out = []
    for i in range(count):
        H = cat[names[i % len(names)]]
        size = rng.choice([1, 2, 2, 3, len(H)])
        out.append((names[i % len(names)], random_measure(H, range(len(H)), rng,
                                                          exact=False, support=size)))
    return out


def test_criterion_4_cross_criterion_agreement():
    with criterion(4, "kl_holds <=> idempotent alternating limit, |Q - P_rho| <= 1e-8 "
                      "(60 pairs)", 30.0):
        nontrivial = 0
        for name, lam in random_pairs(60, seed=4):
            res = decompose(lam)
            nontrivial += res.dim_sigma_d >= 2
            verdict, _ = alternating_limit(lam, tol=1e-12, window=5)
            assert verdict.kind != "escapes", name
            measure_side = verdict.converged and is_idempotent(verdict.limit, tol=1e-8).idempotent
            assert res.kl_holds == measure_side, (name, lam, res.residual)
            if res.kl_holds and verdict.converged:
                P_rho = operator_of(verdict.limit, allow_subprobability=True).matrix
                gap = m_norm(res.Q - P_rho, lam.host)
                assert gap <= 1e-8, (name, lam, gap)
        # guard against a sample of purely ergodic walks
        assert nontrivial >= 10, nontrivial


def test_criterion_5_normal_operators():
    with criterion(5, "normal operators: |Q^2 - Q| <= 1e-8 (commutative and exactly "
                      "normal non-commutative)", 30.0):
        cat = catalog_hypergroups()
        rng = random.Random(5)
        commutative = sorted(n for n, H in cat.items() if H.is_commutative)
        for i in range(24):
            H = cat[commutative[i % len(commutative)]]
            lam = random_measure(H, range(len(H)), rng)
            assert is_normal(operator_of(lam))
            assert decompose(lam).residual <= 1e-8
        noncomm = sorted(n for n, H in cat.items() if not H.is_commutative)
        normal_found = 0
        for i in range(200):
            H = cat[noncomm[i % len(noncomm)]]
            lam = random_measure(H, range(len(H)), rng, support=rng.choice([1, 2, 2, 3]))
            if i % 3 == 0:
                # symmetrised measures are always normal
                lam = Measure(H, {k: (lam[k] + involute(lam)[k]) / 2
                                  for k in set(lam.atoms) | set(involute(lam).atoms)})
            lc = involute(lam)
            if convolve(lam, lc) != convolve(lc, lam):
                continue
            normal_found += 1
            assert decompose(lam).residual <= 1e-8
        assert normal_found >= 20, normal_found


def test_criterion_6_monotone_and_decay():
    with criterion(6, "A_{n+1} <= A_n at every step; P^n f -> 0 on ker Q (10 functions)", 10.0):
        cat = catalog_hypergroups()
        rng = np.random.default_rng(6)
        prng = random.Random(6)
        for name, H in cat.items():
            lam = random_measure(H, range(len(H)), prng, exact=False)
            assert q_limit(operator_of(lam)).min_decrease >= -1e-12, name
        done = 0
        names = ["conj(S3)", "D4//<s>", "S4//<(12)>", "conj(S4)", "S3xconj(S3)"]
        while done < 10:
            H = cat[names[done % len(names)]]
            lam = random_measure(H, range(len(H)), prng, exact=False)
            res = decompose(lam)
            if res.dim_e0 == 0:
                continue
            f = res.e0_basis @ rng.standard_normal(res.dim_e0)
            f = f / m_norm(f[:, None], H)
            P = operator_of(lam).matrix
            norms = [1.0]
            g = f
            for _ in range(10_000):
                g = P @ g
                norms.append(m_norm(g[:, None], H))
                if norms[-1] < 1e-6:
                    break
            assert norms[-1] < 1e-6, (H.name, norms[-1])
            assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))
            done += 1


def test_criterion_7_bilateral_shift():
    with criterion(7, "Z x Z2 bilateral shift on |m| <= 8, 1 <= n <= 8; partition = cosets", 5.0):
        Z2 = group_as_hypergroup(catalog_group("Z2"))
        H = z_cross_f(Z2)
        half = Fraction(1, 2)
        lam = Measure(H, {(1, 0): half, (1, 1): half})
        assert bilateral_shift_check(H, lam, range(-8, 9), range(1, 9))
        verdict, _ = alternating_limit(lam, window=3, n_max=30)
        assert verdict.converged and is_idempotent(verdict.limit)
        points = [(j, i) for j in range(-8, 9) for i in range(2)]
        part = windowed_partition(H, verdict.limit, points)
        assert part == [[(j, 0), (j, 1)] for j in range(-8, 9)]


def test_criterion_8_scattered_walk():
    with criterion(8, "Z walk: max atom strictly decreasing n=1..100, < 0.06, EscapesToZero",
                   2.0):
        lam = Measure(integers(), {-1: 0.5, 1: 0.5}, exact=False)
        rep = trajectory(lam, 100)
        peaks = [r["max_atom"] for r in rep["rows"]]
        assert len(peaks) == 100
        assert all(b < a for a, b in zip(peaks, peaks[1:]))
        assert peaks[-1] < 0.06
        for n, peak in enumerate(peaks, 1):
            assert peak == pytest.approx(float(oracles.central_binomial(n)), rel=1e-12)
        assert rep["verdict"] == "EscapesToZero"


def biinvariant_lift(G, H, rng):
    """Random measure on G averaged to omega_H * mu * omega_H."""
    raw = {g: Fraction(rng.randint(0, 5)) for g in rng.sample(range(G.size), 3)}
    raw[rng.randrange(G.size)] = Fraction(1)
    tot = sum(raw.values())
    mu = {g: w / tot for g, w in raw.items() if w}
    w = oracles.uniform(H)
    return oracles.group_convolve(G.table, oracles.group_convolve(G.table, w, mu), w)


def test_criterion_9_double_coset_oracle():
    with criterion(9, "double-coset convolution = group-algebra pushforward "
                      "(100 biinvariant pairs)", 10.0):
        S3, S4, D4 = catalog_group("S3"), catalog_group("S4"), catalog_group("D4")
        s = next(g for g in range(1, 8) if D4.table[g][g] == 0 and
                 not all(D4.table[g][h] == D4.table[h][g] for h in range(8)))
        cases = [
            (S3, subgroup_generated(S3, [1])),
            (S4, [g for g in range(24) if "4" not in S4.labels[g]]),
            (S4, subgroup_generated(S4, [1])),
            (D4, subgroup_generated(D4, [s])),
        ]
        rng = random.Random(9)
        built = [(G, H, *double_coset_hypergroup(G, H), oracles.double_cosets(G.table, H))
                 for G, H in cases]
        for i in range(100):
            G, H, K, quotient, cosets = built[i % len(built)]
            mu, nu = biinvariant_lift(G, H, rng), biinvariant_lift(G, H, rng)
            group_side = oracles.pushforward(oracles.group_convolve(G.table, mu, nu), cosets)
            # the oracle's coset order must agree with the constructor's quotient map
            assert [quotient[c[0]] for c in cosets] == list(range(len(cosets)))
            muK = Measure(K, oracles.pushforward(mu, cosets))
            nuK = Measure(K, oracles.pushforward(nu, cosets))
            assert convolve(muK, nuK).atoms == group_side
