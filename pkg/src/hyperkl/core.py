"""Finite and discrete hypergroups.

A finite hypergroup is stored as an exact structure tensor ``c[i][j][k]``,
the mass that ``delta_i * delta_j`` puts on ``k``. Index 0 is always the
identity. Discrete (countable) hypergroups only expose a point-convolution
callback, evaluated lazily and memoised.
"""

from __future__ import annotations

import itertools as it
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

__all__ = [
    "AxiomError",
    "DiscreteHypergroup",
    "FiniteHypergroup",
    "StructureError",
    "ValidationReport",
    "Violation",
    "center",
    "check_discrete_axioms",
    "convolve_points",
    "haar_from_structure",
    "maximal_subgroup",
    "validate_axioms",
]

EXHAUSTIVE_LIMIT = 12


class StructureError(ValueError):
    """Malformed input: wrong tensor shape, bad indices, unparsable data."""


class AxiomError(ValueError):
    """A hypergroup axiom (or a derived identity such as Haar invariance)
    does not hold."""


@dataclass(frozen=True)
class Violation:
    invariant: str
    indices: tuple
    detail: str = ""

    def __str__(self):
        s = f"{self.invariant} at {self.indices}"
        return f"{s}: {self.detail}" if self.detail else s


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    def __bool__(self):
        # truthy when valid, so ``if validate_axioms(H):`` reads naturally
        return not self.violations

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, invariant, indices, detail=""):
        self.violations.append(Violation(invariant, tuple(indices), detail))

    def invariants(self) -> set:
        return {v.invariant for v in self.violations}

    def lines(self) -> list:
        return [str(v) for v in self.violations]


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    raise StructureError(f"structure constants must be exact rationals, got {x!r}")


class FiniteHypergroup:
    """Finite hypergroup given by exact structure constants.

    ``structure[i][j][k] = (delta_i * delta_j)({k})``. The constructor only
    checks shapes; use :func:`validate_axioms` (or the file loader, which
    calls it) to check the axioms themselves.
    """

    def __init__(self, elements: Sequence[str], involution: Sequence[int], structure, name: str = ""):
        n = len(elements)
        if n == 0:
            raise StructureError("a hypergroup needs at least the identity element")
        if len(involution) != n:
            raise StructureError(f"involution has length {len(involution)}, expected {n}")
        for i, v in enumerate(involution):
            if not isinstance(v, (int, np.integer)) or not 0 <= v < n:
                raise StructureError(f"involution[{i}] = {v!r} is not an element index")
        if len(structure) != n:
            raise StructureError(f"structure has {len(structure)} rows, expected {n}")
        rows = []
        for i, plane in enumerate(structure):
            if len(plane) != n:
                raise StructureError(f"structure[{i}] has length {len(plane)}, expected {n}")
            prow = []
            for j, vec in enumerate(plane):
                if len(vec) != n:
                    raise StructureError(f"structure[{i}][{j}] has length {len(vec)}, expected {n}")
                prow.append(tuple(_as_fraction(c) for c in vec))
            rows.append(tuple(prow))
        self.elements = tuple(str(e) for e in elements)
        self.involution = tuple(int(v) for v in involution)
        self.structure = tuple(rows)
        self.name = name
        self.identity = 0

    def __len__(self):
        return len(self.elements)

    def __repr__(self):
        label = self.name or "FiniteHypergroup"
        return f"<{label} |K|={len(self)}>"

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, FiniteHypergroup):
            return NotImplemented
        return (self.elements == other.elements and self.involution == other.involution
                and self.structure == other.structure)

    def __hash__(self):
        return hash((self.elements, self.involution))

    def c(self, i, j, k) -> Fraction:
        return self.structure[i][j][k]

    @cached_property
    def _sparse(self):
        return [[{k: w for k, w in enumerate(vec) if w != 0} for vec in plane]
                for plane in self.structure]

    def point_convolve(self, i, j) -> dict:
        """Sparse ``{k: weight}`` for ``delta_i * delta_j``."""
        return self._sparse[i][j]

    def involve(self, i):
        return self.involution[i]

    def keys(self):
        return range(len(self))

    def check_key(self, key):
        if not isinstance(key, (int, np.integer)) or not 0 <= key < len(self):
            raise KeyError(f"{key!r} is not an element index of {self!r}")
        return int(key)

    def encode_key(self, key):
        return int(key)

    def decode_key(self, obj):
        if isinstance(obj, str):
            try:
                return self.elements.index(obj)
            except ValueError:
                raise StructureError(f"unknown element label {obj!r}") from None
        return self.check_key(obj)

    def label(self, key) -> str:
        return self.elements[key]

    @cached_property
    def float_structure(self) -> np.ndarray:
        return np.array([[[float(w) for w in vec] for vec in plane] for plane in self.structure])

    @cached_property
    def haar(self) -> tuple:
        return haar_from_structure(self)

    @cached_property
    def float_haar(self) -> np.ndarray:
        return np.array([float(w) for w in self.haar])

    @cached_property
    def is_commutative(self) -> bool:
        return len(center(self)) == len(self)


class DiscreteHypergroup:
    """Countable hypergroup with point convolutions evaluated on demand.

    ``point_convolve(a, b)`` must return a finitely supported probability
    vector ``{key: Fraction}``. Results are cached per instance.
    """

    def __init__(self, identity: Hashable, point_convolve: Callable, involve: Callable,
                 name: str = "discrete", spec: dict | None = None,
                 encode_key: Callable | None = None, decode_key: Callable | None = None,
                 label: Callable | None = None):
        self.identity = identity
        self._convolve = point_convolve
        self._involve = involve
        self.name = name
        # JSON description that reconstructs this hypergroup (see fileio)
        self.spec = spec or {"kind": name}
        self._encode = encode_key or (lambda k: k)
        self._decode = decode_key or (lambda o: o)
        self._label = label or str
        self._cache: dict = {}

    def __repr__(self):
        return f"<{self.name}>"

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, DiscreteHypergroup):
            return NotImplemented
        return self.spec == other.spec

    def __hash__(self):
        return hash(self.name)

    def point_convolve(self, a, b) -> dict:
        key = (a, b)
        out = self._cache.get(key)
        if out is None:
            out = self._convolve(a, b)
            self._cache[key] = out
        return out

    def involve(self, a):
        return self._involve(a)

    def check_key(self, key):
        return key

    def encode_key(self, key):
        return self._encode(key)

    def decode_key(self, obj):
        return self._decode(obj)

    def label(self, key) -> str:
        return self._label(key)


# -- axioms -----------------------------------------------------------------

def _convolve_rows(H: FiniteHypergroup, left: dict, j: int) -> dict:
    out: dict = {}
    for l, w in left.items():
        for k, c in H.point_convolve(l, j).items():
            out[k] = out.get(k, 0) + w * c
    return out


def _left_then(H: FiniteHypergroup, i: int, right: dict) -> dict:
    out: dict = {}
    for l, w in right.items():
        for k, c in H.point_convolve(i, l).items():
            out[k] = out.get(k, 0) + w * c
    return out


def _triples(n, trials, exhaustive, seed):
    if exhaustive or n ** 3 <= trials:
        return it.product(range(n), repeat=3)
    rng = random.Random(seed)
    return [(rng.randrange(n), rng.randrange(n), rng.randrange(n)) for _ in range(trials)]


def validate_axioms(H: FiniteHypergroup, *, trials: int = 200, exhaustive: bool = False,
                    seed: int = 0) -> ValidationReport:
    """Check the finite hypergroup axioms exactly.

    Associativity is spot-checked on ``trials`` random triples unless
    ``exhaustive`` is set (allowed for ``|K| <= 12``).
    """
    n = len(H)
    if exhaustive and n > EXHAUSTIVE_LIMIT:
        raise StructureError(f"exhaustive associativity check limited to |K| <= {EXHAUSTIVE_LIMIT}")
    rep = ValidationReport()
    inv = H.involution
    S = H.structure

    if sorted(inv) != list(range(n)):
        rep.add("involution-permutation", (), f"{list(inv)} is not a permutation")
    if inv[0] != 0:
        rep.add("involution-identity", (0,), f"involution(0) = {inv[0]}")
    for i in range(n):
        if inv[inv[i]] != i:
            rep.add("involution-involutive", (i,), f"involution(involution({i})) = {inv[inv[i]]}")

    for i, j in it.product(range(n), repeat=2):
        vec = S[i][j]
        neg = [k for k, w in enumerate(vec) if w < 0]
        if neg:
            rep.add("non-negative", (i, j, neg[0]), f"c = {vec[neg[0]]}")
        total = sum(vec)
        if total != 1:
            rep.add("row-stochastic", (i, j), f"row mass {total}")

    for j in range(n):
        for k in range(n):
            want = 1 if k == j else 0
            if S[0][j][k] != want:
                rep.add("identity-left", (0, j, k), f"c = {S[0][j][k]}, expected {want}")
            if S[j][0][k] != want:
                rep.add("identity-right", (j, 0, k), f"c = {S[j][0][k]}, expected {want}")

    for i, j in it.product(range(n), repeat=2):
        if (S[i][j][0] > 0) != (j == inv[i]):
            rep.add("involution-support", (i, j),
                    f"c[{i}][{j}][0] = {S[i][j][0]} but involution({i}) = {inv[i]}")

    if "involution-permutation" not in rep.invariants():
        for i, j, k in it.product(range(n), repeat=3):
            if S[i][j][k] != S[inv[j]][inv[i]][inv[k]]:
                rep.add("anti-homomorphism", (i, j, k),
                        f"c[{i}][{j}][{k}] = {S[i][j][k]} != {S[inv[j]][inv[i]][inv[k]]}")

    for i, j, k in _triples(n, trials, exhaustive, seed):
        lhs = _convolve_rows(H, H.point_convolve(i, j), k)
        rhs = _left_then(H, i, H.point_convolve(j, k))
        lhs = {z: w for z, w in lhs.items() if w != 0}
        rhs = {z: w for z, w in rhs.items() if w != 0}
        if lhs != rhs:
            rep.add("associativity", (i, j, k), "(i*j)*k != i*(j*k)")
    return rep


def haar_from_structure(H: FiniteHypergroup) -> tuple:
    """Haar weights ``m(k) = 1 / c[k][inv(k)][0]`` with ``m(0) = 1``.

    Right invariance ``sum_x m(x) c[x][j][z] = m(z)`` is verified exactly
    before returning; an :class:`AxiomError` is raised if it fails.
    """
    n = len(H)
    m = []
    for k in range(n):
        c = H.c(k, H.involution[k], 0)
        if c == 0:
            raise AxiomError(f"c[{k}][{H.involution[k]}][0] = 0: no Haar weight for {H.elements[k]!r}")
        m.append(1 / c)
    m0 = m[0]
    m = tuple(w / m0 for w in m)
    for j in range(n):
        acc = [Fraction(0)] * n
        for x in range(n):
            for z, c in H.point_convolve(x, j).items():
                acc[z] += m[x] * c
        for z in range(n):
            if acc[z] != m[z]:
                raise AxiomError(f"Haar right-invariance fails at j={j}, z={z}: {acc[z]} != {m[z]}")
    return m


def convolve_points(H: FiniteHypergroup, i: int, j: int):
    """``delta_i * delta_j`` as an exact :class:`~hyperkl.measure.Measure`."""
    from .measure import Measure

    H.check_key(i)
    H.check_key(j)
    return Measure(H, H.point_convolve(i, j))


def maximal_subgroup(H: FiniteHypergroup) -> list:
    """Indices x with ``x * inv(x) = e`` exactly."""
    G = [x for x in range(len(H)) if H.point_convolve(x, H.involution[x]) == {0: 1}]
    members = set(G)
    for x, y in it.product(G, repeat=2):
        row = H.point_convolve(x, y)
        assert len(row) == 1 and next(iter(row)) in members, \
            f"maximal subgroup not closed: {x}*{y} = {row}"
    return G


def center(H: FiniteHypergroup) -> list:
    n = len(H)
    return [x for x in range(n)
            if all(H.structure[x][y] == H.structure[y][x] for y in range(n))]


# -- discrete hypergroups ---------------------------------------------------

def _point_product(host, left: dict, b) -> dict:
    out: dict = {}
    for a, w in left.items():
        for z, c in host.point_convolve(a, b).items():
            out[z] = out.get(z, 0) + w * c
    return out


def _point_product_left(host, a, right: dict) -> dict:
    out: dict = {}
    for b, w in right.items():
        for z, c in host.point_convolve(a, b).items():
            out[z] = out.get(z, 0) + w * c
    return out


def check_discrete_axioms(host, keys: Iterable, triples: Iterable = (),
                          pairs: Iterable | None = None) -> ValidationReport:
    """Exact axiom suite for a lazily evaluated hypergroup.

    ``keys`` are checked for the identity and involution axioms; the
    involution-support axiom is checked on ``pairs`` (default: all pairs of
    ``keys``); associativity and the anti-homomorphism property on
    ``triples``.
    """
    rep = ValidationReport()
    keys = list(keys)
    e = host.identity
    for a in keys:
        if host.point_convolve(e, a) != {a: 1}:
            rep.add("identity-left", (a,), str(host.point_convolve(e, a)))
        if host.point_convolve(a, e) != {a: 1}:
            rep.add("identity-right", (a,), str(host.point_convolve(a, e)))
        if host.involve(host.involve(a)) != a:
            rep.add("involution-involutive", (a,))
    if host.involve(e) != e:
        rep.add("involution-identity", (e,))
    if pairs is None:
        pairs = it.product(keys, repeat=2)
    for a, b in pairs:
        row = host.point_convolve(a, b)
        if any(w <= 0 for w in row.values()) or sum(row.values()) != 1:
            rep.add("probability", (a, b), f"mass {sum(row.values())}")
        if (e in row) != (b == host.involve(a)):
            rep.add("involution-support", (a, b))
    for a, b, c in triples:
        lhs = _point_product(host, host.point_convolve(a, b), c)
        rhs = _point_product_left(host, a, host.point_convolve(b, c))
        if lhs != rhs:
            rep.add("associativity", (a, b, c))
        inv_lhs = {host.involve(z): w for z, w in host.point_convolve(a, b).items()}
        if inv_lhs != host.point_convolve(host.involve(b), host.involve(a)):
            rep.add("anti-homomorphism", (a, b))
    return rep
