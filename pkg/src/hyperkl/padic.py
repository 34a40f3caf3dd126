"""Discrete double-coset hypergroup of ``Z x| Q_p`` and its non-idempotent
alternating limit.

The group is ``G = Z x| Q_p`` with ``(n, a)(m, b) = (n + m, a + p^(s n) b)``
and ``L = Z_p`` sits in the ``n = 0`` fibre. The double coset ``L(n, a)L``
is ``{n} x (a + p^k(n) Z_p)`` with ``k(n) = min(0, s n)``, so an element of
``K = L\\G/L`` is a pair ``(n, r)`` where ``r`` is a rational with
``p``-power denominator holding only the p-adic digits of ``a`` below
position ``k(n)``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .core import DiscreteHypergroup, StructureError, check_discrete_axioms
from .measure import Measure, alternating_sequence, convolve, involute, is_idempotent, limit_detect

__all__ = [
    "CounterexampleError",
    "PadicParams",
    "canonicalize",
    "counterexample_hypergroup",
    "counterexample_measure",
    "padic_valuation",
    "run_counterexample",
]


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, math.isqrt(p) + 1))


@dataclass(frozen=True)
class PadicParams:
    p: int = 5
    s: int = 3

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if self.p in (2, 3):
            raise ValueError("p must not divide 6 (need |6x| = |x|)")
        if self.s < 1:
            raise ValueError(f"s = {self.s} must be a positive integer")

    def k(self, n: int) -> int:
        """Exponent of the lattice ``p^k Z_p`` in the fibre ``n``."""
        return min(0, self.s * n)


def padic_valuation(x: Fraction, p: int) -> float:
    """``v_p(x)``; ``inf`` for zero."""
    x = Fraction(x)
    if x == 0:
        return math.inf
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def _p_power_denominator(a: Fraction, p: int) -> bool:
    d = a.denominator
    while d % p == 0:
        d //= p
    return d == 1


def canonicalize(n: int, a, params: PadicParams) -> tuple:
    """Normal form ``(n, r)`` of the coset ``a + p^k(n) Z_p``.

    ``r = p^k * frac(a / p^k)``: the real fractional part agrees with the
    p-adic digits below position 0 because the two differ by an integer.
    """
    a = Fraction(a)
    p = params.p
    if not _p_power_denominator(a, p):
        raise StructureError(f"{a} has a denominator that is not a power of {p}")
    k = params.k(n)
    scale = Fraction(p) ** k
    b = a / scale
    return (n, (b - math.floor(b)) * scale)


def counterexample_hypergroup(params: PadicParams = PadicParams()) -> DiscreteHypergroup:
    return _hypergroup(params)


@lru_cache(maxsize=None)
def _hypergroup(params: PadicParams) -> DiscreteHypergroup:
    p, s = params.p, params.s

    def conv(x, y):
        (n, a), (m, b) = x, y
        shift = Fraction(p) ** (s * n)
        c = a + shift * b
        k_out = params.k(n + m)
        if s * n >= k_out:
            return {canonicalize(n + m, c, params): Fraction(1)}
        count = p ** (k_out - s * n)
        w = Fraction(1, count)
        # c + j p^(s n), j < count, are distinct modulo p^k_out Z_p
        return {canonicalize(n + m, c + j * shift, params): w for j in range(count)}

    def involve(x):
        n, a = x
        return canonicalize(-n, -(Fraction(p) ** (-s * n)) * a, params)

    def decode(obj):
        n, r = obj
        key = canonicalize(int(n), Fraction(r), params)
        if key != (int(n), Fraction(r)):
            raise StructureError(f"{obj!r} is not a canonical coset representative")
        return key

    def encode(key):
        n, r = key
        return [n, f"{r.numerator}/{r.denominator}"]

    return DiscreteHypergroup((0, Fraction(0)), conv, involve, name=f"K(p={p},s={s})",
                              spec={"kind": "padic", "p": p, "s": s},
                              encode_key=encode, decode_key=decode,
                              label=lambda key: f"({key[0]}, {key[1]})")


def x_element(params: PadicParams) -> Fraction:
    """The point ``x = p^-s`` with ``|x| = p^s`` and ``alpha(x) = 1``."""
    return Fraction(1, params.p ** params.s)


def counterexample_measure(params: PadicParams = PadicParams()) -> Measure:
    """``lam`` with ``inv(lam) = 1/2 d[(1, x)] + 1/2 d[(1, 0)]``."""
    K = counterexample_hypergroup(params)
    half = Fraction(1, 2)
    lam_check = Measure(K, {canonicalize(1, x_element(params), params): half,
                            canonicalize(1, 0, params): half})
    return involute(lam_check)


def expected_limit(params: PadicParams) -> Measure:
    K = counterexample_hypergroup(params)
    x = x_element(params)
    return Measure(K, {canonicalize(0, 0, params): Fraction(1, 2),
                       canonicalize(0, x, params): Fraction(1, 4),
                       canonicalize(0, -x, params): Fraction(1, 4)})


def expected_square(params: PadicParams) -> Measure:
    K = counterexample_hypergroup(params)
    x = x_element(params)
    w = {0: Fraction(3, 8), 1: Fraction(1, 4), -1: Fraction(1, 4),
         2: Fraction(1, 16), -2: Fraction(1, 16)}
    return Measure(K, {canonicalize(0, j * x, params): v for j, v in w.items()})


class CounterexampleError(AssertionError):
    def __init__(self, report):
        self.report = report
        failed = [c for c in report["checks"] if not c["passed"]]
        super().__init__("counterexample checks failed:\n" + "\n".join(
            f"  {c['name']}: {c['detail']}" for c in failed))


def _atoms(mu: Measure) -> list:
    from .fileio import atoms_to_json

    return atoms_to_json(mu)


def axiom_sample(params: PadicParams, n_box: int, depth: int, triples: int, seed: int,
                 max_cosets: int = 625) -> tuple:
    """Keys in the box ``|n| <= n_box`` with digits at positions ``>= -depth``
    and a random set of triples whose products stay small.

    Triples whose products split into more than ``max_cosets`` cosets are
    resampled, which keeps the exact check affordable.
    """
    p, s = params.p, params.s
    keys = []
    for n in range(-n_box, n_box + 1):
        lo = -depth
        hi = params.k(n)
        width = max(0, hi - lo)
        for digits in range(p ** width):
            keys.append(canonicalize(n, Fraction(digits, p ** depth) if width else 0, params))
    keys = sorted(set(keys))
    rng = random.Random(seed)

    def split(n, m):
        return max(0, params.k(n + m) - s * n)

    picked = []
    while len(picked) < triples:
        a, b, c = (rng.choice(keys) for _ in range(3))
        na, nb, nc = a[0], b[0], c[0]
        cost = max(split(na, nb), split(na + nb, nc), split(nb, nc), split(na, nb + nc),
                   split(na, nb) + split(na + nb, nc), split(nb, nc) + split(na, nb + nc))
        if p ** cost <= max_cosets:
            picked.append((a, b, c))
    return keys, picked


def run_counterexample(params: PadicParams = PadicParams(), n_max: int = 20,
                       axiom_triples: int = 100, seed: int = 0, strict: bool = True) -> dict:
    """Reproduce the non-idempotent alternating limit exactly.

    Every check lands in ``report["checks"]``; with ``strict`` a failing
    check raises :class:`CounterexampleError` carrying the report.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    p, s = params.p, params.s
    K = counterexample_hypergroup(params)
    lam = counterexample_measure(params)
    lam_check = involute(lam)
    rho = expected_limit(params)
    checks = []

    def check(name, passed, detail=""):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    check("lam_check_two_atoms",
          len(lam_check) == 2 and set(lam_check.atoms.values()) == {Fraction(1, 2)},
          f"{lam_check.sorted_atoms()}")
    check("lam_mass_one", lam.mass() == 1, str(lam.mass()))
    check("lam_fibre_minus_one", {k[0] for k in lam.atoms} == {-1},
          str(sorted({k[0] for k in lam.atoms})))

    seq = alternating_sequence(lam, n_max)
    bad = [n for n, entry in enumerate(seq, 1) if entry != rho]
    check("stationary_limit", not bad and len(seq) == n_max and not seq.truncated,
          "all entries equal rho" if not bad else f"entries differ from rho at n={bad[:5]}")

    verdict = limit_detect(seq)
    check("limit_detect_converged", verdict.converged and verdict.limit == rho, str(verdict))

    idem = is_idempotent(rho)
    square = expected_square(params)
    check("rho_not_idempotent", not idem.idempotent, f"residual {idem.residual}")
    check("rho_square_five_atoms", idem.square == square and len(idem.square) == 5,
          f"rho*rho = {idem.square.sorted_atoms()}")

    # alpha(L) in L: valuations of alpha(g) = p^s g stay >= 0 for g in L
    rng = random.Random(seed)
    sample = [Fraction(rng.randrange(1, p ** 6)) for _ in range(20)]
    check("alpha_preserves_L", s >= 1 and all(padic_valuation(p ** s * g, p) >= 0 for g in sample),
          f"s = {s}")
    # |alpha^n(g)| = p^(-s n) |g| -> 0
    probe = [Fraction(u, p ** e) for u, e in ((1, 0), (2, 3), (p - 1, 7), (7, 1))]
    contraction = all(
        all(padic_valuation(Fraction(p) ** (s * n) * g, p) == s * n + padic_valuation(g, p)
            for n in range(0, 30))
        and padic_valuation(Fraction(p) ** (s * 30) * g, p) > 20
        for g in probe)
    check("alpha_contracts", contraction, "v_p(alpha^n g) = s n + v_p(g)")
    x = x_element(params)
    v6x = padic_valuation(6 * x, p)
    check("x6_not_in_L", v6x < 0 and padic_valuation(x, p) == -s,
          f"|6x| = p^{-v6x}, |x| = p^{s}")
    check("alpha_x_in_L", padic_valuation(p ** s * x, p) >= 0, "alpha(x) = 1")

    # engine of stationarity: inv(lam)^n * d[g^-n] is the image of mu for every n
    mu_image = Measure(K, {canonicalize(0, 0, params): Fraction(1, 2),
                           canonicalize(0, x, params): Fraction(1, 2)})
    power = lam_check
    engine_ok = True
    for n in range(1, n_max + 1):
        if n > 1:
            power = convolve(power, lam_check)
        shifted = convolve(power, Measure.point(K, canonicalize(-n, 0, params)))
        if shifted != mu_image:
            engine_ok = False
            break
    check("mu_alpha_mu_equals_mu", engine_ok, f"checked n = 1..{n_max}")

    # visited atoms plus a random neighbourhood; the full suite lives in the tests
    keys, triples = axiom_sample(params, n_box=1, depth=s, triples=axiom_triples, seed=seed)
    visited = set(lam.atoms) | set(lam_check.atoms) | set(rho.atoms) | set(idem.square.atoms)
    near = sorted(visited | set(rng.sample(keys, min(40, len(keys)))))
    pairs = [(a, b) for a in near for b in near
             if p ** max(0, params.k(a[0] + b[0]) - s * a[0]) <= 625]
    rep = check_discrete_axioms(K, near, triples, pairs=pairs)
    check("hypergroup_axioms", rep.ok, "; ".join(rep.lines()[:3]) or
          f"{len(near)} keys, {len(pairs)} pairs, {len(triples)} triples")

    report = {
        "p": p,
        "s": s,
        "n_max": n_max,
        "lambda": _atoms(lam),
        "lambda_check": _atoms(lam_check),
        "rho": _atoms(rho),
        "rho_squared": _atoms(idem.square),
        "verdict": str(verdict),
        "idempotent": idem.idempotent,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    if strict and not report["passed"]:
        raise CounterexampleError(report)
    return report
