"""Finitely supported measures on hypergroups.

Weights are either all :class:`fractions.Fraction` (exact mode) or all
floats. Products follow the left-to-right juxtaposition convention, so
``convolve(involute(lam_n), lam_n)`` is the alternating term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from .core import FiniteHypergroup

__all__ = [
    "Measure",
    "SequenceResult",
    "Verdict",
    "alternating_limit",
    "alternating_sequence",
    "convolve",
    "involute",
    "is_idempotent",
    "iter_alternating",
    "limit_detect",
    "l1_distance",
    "random_measure",
    "trajectory",
]

DEFAULT_TOL = 1e-10
DEFAULT_WINDOW = 5
DEFAULT_SUPPORT_CAP = 10 ** 6
PRUNE_RELATIVE = 1e-15


class HostMismatch(ValueError):
    pass


class Measure:
    """Immutable sparse measure ``{key: weight}`` living on ``host``."""

    __slots__ = ("host", "atoms", "exact")

    def __init__(self, host, atoms: dict | Iterable = (), exact: bool | None = None):
        atoms = dict(atoms)
        if exact is None:
            exact = all(isinstance(w, (int, Fraction)) for w in atoms.values())
        clean = {}
        if exact:
            for k, w in atoms.items():
                if isinstance(w, float):
                    raise TypeError("float weight in an exact measure")
                w = Fraction(w)
                if w < 0:
                    raise ValueError(f"negative weight {w} at {k!r}")
                if w:
                    clean[host.check_key(k)] = w
        else:
            vals = [float(w) for w in atoms.values()]
            if any(v < 0 or math.isnan(v) for v in vals):
                raise ValueError("negative or NaN weight in measure")
            cutoff = PRUNE_RELATIVE * sum(vals)
            for k, v in zip(atoms, vals):
                if v > cutoff:
                    clean[host.check_key(k)] = v
        object.__setattr__(self, "host", host)
        object.__setattr__(self, "atoms", clean)
        object.__setattr__(self, "exact", bool(exact))
        if self.mass() > 1 + (0 if exact else 1e-9):
            raise ValueError(f"total mass {self.mass()} exceeds 1")

    def __setattr__(self, name, value):
        raise AttributeError("Measure is immutable")

    @classmethod
    def point(cls, host, key, exact=True):
        return cls(host, {key: Fraction(1) if exact else 1.0}, exact=exact)

    @classmethod
    def uniform(cls, host, keys, exact=True):
        keys = list(keys)
        w = Fraction(1, len(keys)) if exact else 1.0 / len(keys)
        return cls(host, {k: w for k in keys}, exact=exact)

    @classmethod
    def from_vector(cls, host: FiniteHypergroup, vec) -> "Measure":
        return cls(host, {i: float(v) for i, v in enumerate(vec) if v != 0}, exact=False)

    def mass(self):
        return sum(self.atoms.values(), Fraction(0) if self.exact else 0.0)

    def support(self) -> list:
        return sorted(self.atoms)

    def max_atom(self):
        return max(self.atoms.values(), default=0)

    def __getitem__(self, key):
        return self.atoms.get(key, 0)

    def __len__(self):
        return len(self.atoms)

    def __eq__(self, other):
        if not isinstance(other, Measure):
            return NotImplemented
        return self.host == other.host and self.atoms == other.atoms

    def __hash__(self):
        return hash(frozenset(self.atoms.items()))

    def __repr__(self):
        body = ", ".join(f"{self.host.label(k)}: {w}" for k, w in self.sorted_atoms()[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"Measure({{{body}{more}}})"

    def __mul__(self, other):
        return convolve(self, other)

    def sorted_atoms(self) -> list:
        return sorted(self.atoms.items())

    def to_float(self) -> "Measure":
        if not self.exact:
            return self
        return Measure(self.host, {k: float(w) for k, w in self.atoms.items()}, exact=False)

    def vector(self) -> np.ndarray:
        """Dense float vector, finite hosts only."""
        v = np.zeros(len(self.host))
        for k, w in self.atoms.items():
            v[k] = float(w)
        return v

    def table(self) -> list:
        """Rows ``(label, exact weight, float weight)`` sorted by key."""
        return [(self.host.label(k), str(w), float(w)) for k, w in self.sorted_atoms()]


def _check_pair(mu: Measure, nu: Measure):
    if not (mu.host is nu.host or mu.host == nu.host):
        raise HostMismatch(f"measures live on different hypergroups: {mu.host!r} vs {nu.host!r}")
    if mu.exact != nu.exact:
        raise TypeError("cannot mix exact and float measures")


def convolve(mu: Measure, nu: Measure) -> Measure:
    _check_pair(mu, nu)
    host = mu.host
    if not mu.exact and isinstance(host, FiniteHypergroup):
        out = np.einsum("x,y,xyz->z", mu.vector(), nu.vector(), host.float_structure)
        return Measure.from_vector(host, out)
    acc: dict = {}
    if mu.exact:
        for x, wx in mu.atoms.items():
            for y, wy in nu.atoms.items():
                w = wx * wy
                for z, c in host.point_convolve(x, y).items():
                    acc[z] = acc.get(z, 0) + w * c
    else:
        for x, wx in mu.atoms.items():
            for y, wy in nu.atoms.items():
                w = wx * wy
                for z, c in host.point_convolve(x, y).items():
                    acc[z] = acc.get(z, 0.0) + w * float(c)
    return Measure(host, acc, exact=mu.exact)


def involute(mu: Measure) -> Measure:
    host = mu.host
    return Measure(host, {host.involve(k): w for k, w in mu.atoms.items()}, exact=mu.exact)


def l1_distance(mu: Measure, nu: Measure):
    keys = set(mu.atoms) | set(nu.atoms)
    return sum((abs(mu[k] - nu[k]) for k in keys), Fraction(0) if mu.exact else 0.0)


@dataclass(frozen=True)
class IdempotentCheck:
    idempotent: bool
    residual: float | Fraction
    square: Measure

    def __bool__(self):
        return self.idempotent


def is_idempotent(rho: Measure, tol: float = DEFAULT_TOL) -> IdempotentCheck:
    """``rho * rho == rho``; exact equality in exact mode, l1 residual <= tol
    in float mode."""
    mass = rho.mass()
    if rho.exact:
        if mass not in (0, 1):
            raise ValueError(f"idempotent test needs mass 0 or 1, got {mass}")
    elif min(abs(mass), abs(mass - 1)) > max(tol, 1e-9):
        raise ValueError(f"idempotent test needs mass 0 or 1, got {mass}")
    sq = convolve(rho, rho)
    res = l1_distance(sq, rho)
    ok = (sq.atoms == rho.atoms) if rho.exact else res <= tol
    return IdempotentCheck(bool(ok), res, sq)


# -- the alternating sequence -----------------------------------------------

@dataclass
class SequenceResult:
    entries: list
    truncated: bool = False
    # support sizes of lambda^n, parallel to entries
    power_sizes: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)


def iter_alternating(lam: Measure) -> Iterator[tuple]:
    """Yield ``(n, lam^n, inv(lam^n) * lam^n)`` for n = 1, 2, ..."""
    power = lam
    n = 1
    while True:
        yield n, power, convolve(involute(power), power)
        power = convolve(power, lam)
        n += 1


def _check_probability(lam: Measure):
    m = lam.mass()
    if (lam.exact and m != 1) or (not lam.exact and abs(m - 1) > 1e-9):
        raise ValueError(f"expected a probability measure, mass is {m}")


def alternating_sequence(lam: Measure, n_max: int,
                         support_cap: int = DEFAULT_SUPPORT_CAP) -> SequenceResult:
    """``[inv(lam)^k * lam^k for k = 1..n_max]``.

    Stops early with ``truncated=True`` once a power or an entry would
    exceed ``support_cap`` atoms.
    """
    _check_probability(lam)
    out = SequenceResult([])
    power = lam
    for n in range(1, n_max + 1):
        if n > 1:
            if len(power) * len(lam) > support_cap * 64:
                out.truncated = True
                break
            power = convolve(power, lam)
        if len(power) > support_cap:
            out.truncated = True
            break
        entry = convolve(involute(power), power)
        if len(entry) > support_cap:
            out.truncated = True
            break
        out.entries.append(entry)
        out.power_sizes.append(len(power))
    return out


@dataclass(frozen=True)
class Verdict:
    kind: str  # "converged" | "escapes" | "undecided"
    limit: Measure | None = None
    at: int | None = None
    detail: str = ""

    @property
    def converged(self) -> bool:
        return self.kind == "converged"

    def __str__(self):
        if self.kind == "converged":
            return f"Converged at n={self.at}"
        if self.kind == "escapes":
            return "EscapesToZero"
        return "Undecided" + (f" ({self.detail})" if self.detail else "")


def _close(a: Measure, b: Measure, tol) -> bool:
    if a.exact and b.exact and a.atoms == b.atoms:
        return True
    return l1_distance(a, b) <= tol


def _strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def limit_detect(seq, tol: float = DEFAULT_TOL, window: int = DEFAULT_WINDOW,
                 probe: Iterable | None = None) -> Verdict:
    """Classify a finite stretch of a measure sequence.

    Converged: the last ``window`` consecutive l1 gaps are all within
    ``tol`` (exact measures also accept literal equality); ``at`` is the first index
    (1-based) from which every later gap is within ``tol``.

    EscapesToZero (infinite hosts only): over the trailing window the
    support never shrinks and ends larger while both the largest atom and the mass on the
    fixed finite set ``probe`` strictly decrease. ``probe`` defaults to the
    support of the first entry.

    Anything else is Undecided.
    """
    seq = list(seq)
    if not seq:
        raise ValueError("empty sequence")
    if len(seq) < 2:
        return Verdict("undecided", detail="need at least two terms")
    gaps_ok = [_close(a, b, tol) for a, b in zip(seq, seq[1:])]
    w = min(window, len(gaps_ok))
    if all(gaps_ok[-w:]):
        start = len(gaps_ok)
        while start > 0 and gaps_ok[start - 1]:
            start -= 1
        # gaps_ok[i] compares entries i and i+1 (0-based), i.e. n=i+1 and n=i+2
        return Verdict("converged", seq[-1], at=start + 2)
    if isinstance(seq[0].host, FiniteHypergroup):
        # constants are P-invariant on a finite host: no escape possible
        return Verdict("undecided", detail="not converged within the horizon")
    tail = seq[-(w + 1):]
    C = set(seq[0].atoms) if probe is None else set(probe)
    sizes = [len(m) for m in tail]
    peaks = [m.max_atom() for m in tail]
    local = [sum(m[k] for k in C) for m in tail]
    # float pruning can stall the support for a step, so growth is only
    # required across the window
    grows = all(b >= a for a, b in zip(sizes, sizes[1:])) and sizes[-1] > sizes[0]
    if (grows and _strictly_decreasing(peaks)
            and _strictly_decreasing(local)):
        return Verdict("escapes", detail=f"max atom {float(peaks[-1]):.3g}, "
                                         f"probe mass {float(local[-1]):.3g}")
    return Verdict("undecided", detail="no convergence and no clear escape")


def alternating_limit(lam: Measure, tol: float = DEFAULT_TOL, window: int = DEFAULT_WINDOW,
                      n_max: int = 100_000) -> tuple:
    """Run the alternating sequence until :func:`limit_detect` reports
    convergence or ``n_max`` terms are produced.

    Returns ``(verdict, n_terms)``.
    """
    _check_probability(lam)
    tail: list = []
    first = None
    n = 0
    for n, _, entry in iter_alternating(lam):
        if first is None:
            first = entry
        tail.append(entry)
        if len(tail) > window + 1:
            tail.pop(0)
        if len(tail) == window + 1 and all(_close(a, b, tol) for a, b in zip(tail, tail[1:])):
            return Verdict("converged", entry, at=n - window + 1), n
        if n >= n_max:
            break
    return limit_detect(tail, tol, window, probe=first.atoms), n


def random_measure(host, keys, rng, exact: bool = True, support: int | None = None) -> Measure:
    """Random probability on a random subset of ``keys``; exact weights are
    small-integer ratios."""
    keys = list(keys)
    size = support or rng.randint(1, len(keys))
    chosen = rng.sample(keys, min(size, len(keys)))
    raw = [rng.randint(1, 9) for _ in chosen]
    total = sum(raw)
    if exact:
        return Measure(host, {k: Fraction(r, total) for k, r in zip(chosen, raw)})
    return Measure(host, {k: r / total for k, r in zip(chosen, raw)}, exact=False)


def trajectory(lam: Measure, n_max: int, tol: float = DEFAULT_TOL, window: int = DEFAULT_WINDOW,
               support_cap: int = DEFAULT_SUPPORT_CAP) -> dict:
    """Per-step diagnostics of the alternating sequence plus a verdict.

    Rows carry ``n``, support size, largest atom, l1 gap to the previous
    term and the mass on the support of the first term.
    """
    seq = alternating_sequence(lam, n_max, support_cap)
    rows = []
    probe = set(seq.entries[0].atoms) if seq.entries else set()
    prev = None
    for n, entry in enumerate(seq.entries, 1):
        rows.append({
            "n": n,
            "support_size": len(entry),
            "max_atom": float(entry.max_atom()),
            "l1_gap": None if prev is None else float(l1_distance(prev, entry)),
            "window_mass": float(sum(entry[k] for k in probe)),
        })
        prev = entry
    verdict = limit_detect(seq.entries, tol, window) if seq.entries else Verdict("undecided")
    idem = None
    if verdict.converged:
        rho = verdict.limit
        # an exact limit reached only up to tol is judged in float mode
        if rho.exact and len(seq.entries) > 1 and seq.entries[-2] != rho:
            rho = rho.to_float()
        idem = is_idempotent(rho, tol=max(tol, 1e-8)).idempotent
    return {"rows": rows, "verdict": str(verdict), "verdict_kind": verdict.kind,
            "idempotent": idem, "truncated": seq.truncated, "limit": verdict.limit}
