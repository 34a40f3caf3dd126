"""Hypergroups built from finite groups, plus the discrete Z x F family."""

from __future__ import annotations

import itertools as it
import json
import os
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .core import DiscreteHypergroup, FiniteHypergroup, StructureError

__all__ = [
    "FiniteGroupTable",
    "catalog_group",
    "catalog_hypergroups",
    "catalog_names",
    "conjugacy_hypergroup",
    "direct_product",
    "double_coset_hypergroup",
    "group_as_hypergroup",
    "integers",
    "subgroup_generated",
    "z_cross_f",
]


class FiniteGroupTable:
    """Multiplication table of a finite group with identity at index 0."""

    def __init__(self, table: Sequence[Sequence[int]], labels: Sequence[str] | None = None,
                 name: str = ""):
        n = len(table)
        if n == 0:
            raise StructureError("empty group table")
        rows = []
        for i, row in enumerate(table):
            if len(row) != n:
                raise StructureError(f"table row {i} has length {len(row)}, expected {n}")
            if any(not isinstance(v, int) or not 0 <= v < n for v in row):
                raise StructureError(f"table row {i} has entries outside 0..{n - 1}")
            rows.append(tuple(row))
        self.table = tuple(rows)
        self.size = n
        self.labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(n))
        if len(self.labels) != n:
            raise StructureError("labels length does not match table size")
        self.name = name
        self._check()
        self.inverse = tuple(row.index(0) for row in self.table)

    def _check(self):
        n, T = self.size, self.table
        for i in range(n):
            if T[0][i] != i or T[i][0] != i:
                raise StructureError("index 0 is not the identity")
            if sorted(T[i]) != list(range(n)):
                raise StructureError(f"row {i} is not a permutation (no inverses)")
        for a, b, c in it.product(range(n), repeat=3):
            if T[T[a][b]][c] != T[a][T[b][c]]:
                raise StructureError(f"table not associative at {(a, b, c)}")

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"<group {self.name or '?'} of order {self.size}>"

    def mul(self, a, b):
        return self.table[a][b]

    def is_subgroup(self, H) -> bool:
        H = set(H)
        return 0 in H and all(self.table[a][self.inverse[b]] in H for a in H for b in H)

    def is_abelian(self) -> bool:
        T = self.table
        return all(T[a][b] == T[b][a] for a in range(self.size) for b in range(a))

    @classmethod
    def from_permutations(cls, perms, name=""):
        """Group generated by ``perms`` (tuples), identity first."""
        deg = len(perms[0])
        e = tuple(range(deg))
        elems = [e]
        seen = {e}
        frontier = [e]
        while frontier:
            nxt = []
            for g in frontier:
                for s in perms:
                    h = tuple(g[s[i]] for i in range(deg))
                    if h not in seen:
                        seen.add(h)
                        elems.append(h)
                        nxt.append(h)
            frontier = nxt
        return cls._from_elements(elems, lambda g, h: tuple(g[h[i]] for i in range(deg)),
                                  [_cycle_label(g) for g in elems], name)

    @classmethod
    def _from_elements(cls, elems, mul, labels, name):
        index = {g: i for i, g in enumerate(elems)}
        table = [[index[mul(g, h)] for h in elems] for g in elems]
        return cls(table, labels, name)

    def to_json(self) -> dict:
        return {"size": self.size, "table": [list(r) for r in self.table],
                "labels": list(self.labels)}


def _cycle_label(perm) -> str:
    seen, cycles = set(), []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            continue
        cyc, j = [], start
        while j not in seen:
            seen.add(j)
            cyc.append(j + 1)
            j = perm[j]
        cycles.append("(" + "".join(map(str, cyc)) + ")")
    return "".join(cycles) or "e"


def subgroup_generated(G: FiniteGroupTable, gens) -> list:
    H = {0}
    frontier = [0]
    gens = list(gens)
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                k = G.table[h][g]
                if k not in H:
                    H.add(k)
                    nxt.append(k)
        frontier = nxt
    return sorted(H)


# -- builtin catalog ----------------------------------------------------------

def _cyclic(n):
    return FiniteGroupTable([[(i + j) % n for j in range(n)] for i in range(n)],
                            [str(i) for i in range(n)], f"Z{n}")


def _quaternion():
    # elements as (sign, unit) with unit in 1, i, j, k
    units = "1ijk"
    prod = {("1", u): (1, u) for u in units}
    prod.update({(u, "1"): (1, u) for u in units})
    prod.update({("i", "i"): (-1, "1"), ("j", "j"): (-1, "1"), ("k", "k"): (-1, "1"),
                 ("i", "j"): (1, "k"), ("j", "k"): (1, "i"), ("k", "i"): (1, "j"),
                 ("j", "i"): (-1, "k"), ("k", "j"): (-1, "i"), ("i", "k"): (-1, "j")})
    elems = [(s, u) for u in units for s in (1, -1)]

    def mul(a, b):
        s, u = prod[(a[1], b[1])]
        return (a[0] * b[0] * s, u)

    labels = [("" if s > 0 else "-") + u for s, u in elems]
    return FiniteGroupTable._from_elements(elems, mul, labels, "Q8")


def _klein():
    elems = [(0, 0), (1, 0), (0, 1), (1, 1)]
    return FiniteGroupTable._from_elements(
        elems, lambda a, b: ((a[0] + b[0]) % 2, (a[1] + b[1]) % 2),
        ["e", "a", "b", "ab"], "V4")


_BUILTIN = {
    "S3": lambda: FiniteGroupTable.from_permutations([(1, 0, 2), (1, 2, 0)], "S3"),
    "S4": lambda: FiniteGroupTable.from_permutations([(1, 0, 2, 3), (1, 2, 3, 0)], "S4"),
    "D4": lambda: FiniteGroupTable.from_permutations([(1, 2, 3, 0), (3, 2, 1, 0)], "D4"),
    "Q8": _quaternion,
    "V4": _klein,
}


def catalog_names() -> list:
    return ["Z2", "Z3", "Z4", "Z6", *_BUILTIN]


def catalog_group(name: str) -> FiniteGroupTable:
    """Builtin group by name (``Zn``, S3, S4, D4, Q8, V4).

    If ``HYPERKL_CATALOG`` names a directory containing ``<name>.json`` in the
    group file format, that file takes precedence.
    """
    root = os.environ.get("HYPERKL_CATALOG")
    if root:
        path = Path(root) / f"{name}.json"
        if path.is_file():
            data = json.loads(path.read_text())
            return FiniteGroupTable(data["table"], data.get("labels"), name)
    if name in ("Klein", "klein"):
        name = "V4"
    if name in _BUILTIN:
        return _BUILTIN[name]()
    if name.startswith("Z") and name[1:].isdigit() and int(name[1:]) >= 1:
        return _cyclic(int(name[1:]))
    raise KeyError(f"unknown catalog group {name!r}; known: {', '.join(catalog_names())}")


# -- finite constructions ---------------------------------------------------

def group_as_hypergroup(G: FiniteGroupTable) -> FiniteHypergroup:
    n = G.size
    one, zero = Fraction(1), Fraction(0)
    structure = [[[one if k == G.table[i][j] else zero for k in range(n)]
                  for j in range(n)] for i in range(n)]
    return FiniteHypergroup(G.labels, G.inverse, structure, name=G.name or "group")


def double_coset_hypergroup(G: FiniteGroupTable, H) -> tuple:
    """``G//H`` and the quotient map (list: group index -> coset index).

    Structure constants are the pushforward of ``w_H d_x w_H d_y w_H`` with
    ``w_H`` uniform on H. Cosets are labelled by their least element index
    and ordered by it, so the identity coset comes first.
    """
    H = sorted(set(H))
    if not G.is_subgroup(H):
        raise StructureError(f"{H} is not a subgroup of {G!r}")
    T = G.table
    cosets: list = []
    quotient = [-1] * G.size
    for g in range(G.size):
        if quotient[g] >= 0:
            continue
        members = sorted({T[T[a][g]][b] for a in H for b in H})
        for x in members:
            quotient[x] = len(cosets)
        cosets.append(members)
    n = len(cosets)
    w = Fraction(1, len(H) ** 3)
    structure = []
    for X in cosets:
        x = X[0]
        plane = []
        for Y in cosets:
            y = Y[0]
            vec = [Fraction(0)] * n
            for a, b, c in it.product(H, repeat=3):
                vec[quotient[T[T[T[T[a][x]][b]][y]][c]]] += w
            plane.append(vec)
        structure.append(plane)
    involution = [quotient[G.inverse[X[0]]] for X in cosets]
    labels = [G.labels[X[0]] if len(X) == 1 else f"H{G.labels[X[0]]}H" for X in cosets]
    K = FiniteHypergroup(labels, involution, structure, name=f"{G.name or 'G'}//H")
    return K, quotient


def conjugacy_hypergroup(G: FiniteGroupTable) -> FiniteHypergroup:
    """Hypergroup of conjugacy classes (normalised class sums)."""
    T, inv = G.table, G.inverse
    cls_of = [-1] * G.size
    classes: list = []
    for g in range(G.size):
        if cls_of[g] >= 0:
            continue
        members = sorted({T[T[h][g]][inv[h]] for h in range(G.size)})
        for x in members:
            cls_of[x] = len(classes)
        classes.append(members)
    n = len(classes)
    structure = []
    for Ci in classes:
        plane = []
        for Cj in classes:
            vec = [Fraction(0)] * n
            w = Fraction(1, len(Ci) * len(Cj))
            for a in Ci:
                for b in Cj:
                    vec[cls_of[T[a][b]]] += w
            plane.append(vec)
        structure.append(plane)
    involution = [cls_of[inv[C[0]]] for C in classes]
    labels = [G.labels[C[0]] if len(C) == 1 else f"[{G.labels[C[0]]}]" for C in classes]
    return FiniteHypergroup(labels, involution, structure, name=f"conj({G.name or 'G'})")


def direct_product(H1: FiniteHypergroup, H2: FiniteHypergroup) -> FiniteHypergroup:
    """Product hypergroup, element ``(i1, i2)`` at index ``i1 * |H2| + i2``."""
    n1, n2 = len(H1), len(H2)
    pairs = list(it.product(range(n1), range(n2)))
    structure = [[[H1.c(i1, j1, k1) * H2.c(i2, j2, k2) for k1, k2 in pairs]
                  for j1, j2 in pairs] for i1, i2 in pairs]
    involution = [H1.involution[i1] * n2 + H2.involution[i2] for i1, i2 in pairs]
    labels = [f"({H1.elements[i1]},{H2.elements[i2]})" for i1, i2 in pairs]
    return FiniteHypergroup(labels, involution, structure,
                            name=f"{H1.name or 'H1'}x{H2.name or 'H2'}")


# -- discrete constructions ---------------------------------------------------

def integers() -> DiscreteHypergroup:
    """The group Z as a discrete hypergroup, integer keys."""
    return DiscreteHypergroup(
        0, lambda a, b: {a + b: Fraction(1)}, lambda a: -a, name="Z",
        spec={"kind": "integers"}, decode_key=int)


def z_cross_f(F: FiniteHypergroup) -> DiscreteHypergroup:
    """``Z x F`` with componentwise convolution; keys ``(n, i)``."""

    def conv(a, b):
        return {(a[0] + b[0], k): w for k, w in F.point_convolve(a[1], b[1]).items()}

    def decode(obj):
        n, i = obj
        return (int(n), F.decode_key(i))

    from .fileio import hypergroup_to_json

    return DiscreteHypergroup(
        (0, 0), conv, lambda a: (-a[0], F.involution[a[1]]),
        name=f"Zx{F.name or 'F'}",
        spec={"kind": "zcross", "base": hypergroup_to_json(F)},
        encode_key=lambda k: [k[0], k[1]], decode_key=decode)


def catalog_hypergroups() -> dict:
    """Named finite hypergroups used by the demos and randomized suites."""
    out = {}
    for name in ("Z2", "Z3", "Z4", "Z6", "V4", "S3", "D4", "Q8"):
        out[name] = group_as_hypergroup(catalog_group(name))
    for name in ("S3", "D4", "Q8", "S4"):
        out[f"conj({name})"] = conjugacy_hypergroup(catalog_group(name))
    S3 = catalog_group("S3")
    out["S3//<(12)>"] = double_coset_hypergroup(S3, subgroup_generated(S3, [1]))[0]
    S4 = catalog_group("S4")
    stab = [g for g in range(S4.size) if S4.labels[g].find("4") < 0]
    out["S4//S3"] = double_coset_hypergroup(S4, stab)[0]
    D4 = catalog_group("D4")
    refl = next(g for g in range(1, D4.size) if D4.table[g][g] == 0 and
                any(D4.table[g][h] != D4.table[h][g] for h in range(D4.size)))
    out["D4//<s>"] = double_coset_hypergroup(D4, subgroup_generated(D4, [refl]))[0]
    out["S4//<(12)>"] = double_coset_hypergroup(S4, subgroup_generated(S4, [S4.labels.index("(12)")]))[0]
    out["Z2xconj(S3)"] = direct_product(out["Z2"], out["conj(S3)"])
    out["S3xconj(S3)"] = direct_product(out["S3"], out["conj(S3)"])
    return out
