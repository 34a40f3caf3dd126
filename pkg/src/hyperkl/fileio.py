"""JSON readers and writers for hypergroups, measures and groups.

Rationals are written as ``"num/den"`` strings.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .core import AxiomError, FiniteHypergroup, StructureError, validate_axioms
from .measure import Measure

__all__ = [
    "format_rational",
    "hypergroup_from_json",
    "hypergroup_to_json",
    "load_group",
    "load_hypergroup",
    "load_measure",
    "measure_from_json",
    "measure_to_json",
    "parse_rational",
]


def format_rational(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(obj) -> Fraction:
    if isinstance(obj, bool):
        raise StructureError(f"not a rational: {obj!r}")
    if isinstance(obj, int):
        return Fraction(obj)
    if isinstance(obj, str):
        try:
            return Fraction(obj.strip())
        except (ValueError, ZeroDivisionError):
            raise StructureError(f"not a rational: {obj!r}") from None
    raise StructureError(f"expected a \"num/den\" string, got {obj!r}")


def _read_json(source):
    if isinstance(source, dict):
        return source
    try:
        return json.loads(Path(source).read_text())
    except json.JSONDecodeError as exc:
        raise StructureError(f"{source}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise StructureError(f"{source}: {exc.strerror}") from None


# -- hypergroups --------------------------------------------------------------

def hypergroup_to_json(H: FiniteHypergroup, with_haar: bool = True) -> dict:
    out = {
        "elements": list(H.elements),
        "involution": list(H.involution),
        "structure": [[[format_rational(c) for c in vec] for vec in plane]
                      for plane in H.structure],
    }
    if with_haar:
        out["haar"] = [format_rational(w) for w in H.haar]
    return out


def hypergroup_from_json(data: dict, validate: bool = True) -> FiniteHypergroup:
    """Build a finite hypergroup from its JSON object.

    With ``validate`` (the default) the axioms are re-checked and an
    :class:`AxiomError` lists every violation; a stored ``haar`` must match
    the computed Haar weights.
    """
    if not isinstance(data, dict):
        raise StructureError("hypergroup JSON must be an object")
    try:
        elements = data["elements"]
        involution = data["involution"]
        raw = data["structure"]
    except KeyError as exc:
        raise StructureError(f"hypergroup JSON missing field {exc}") from None
    if not isinstance(raw, list) or not all(isinstance(p, list) for p in raw):
        raise StructureError("structure must be a nested list")
    try:
        structure = [[[parse_rational(c) for c in vec] for vec in plane] for plane in raw]
    except TypeError:
        raise StructureError("structure must be a rank-3 nested list") from None
    H = FiniteHypergroup(elements, involution, structure, name=data.get("name", ""))
    if validate:
        rep = validate_axioms(H)
        if not rep.ok:
            raise AxiomError("hypergroup axioms violated:\n  " + "\n  ".join(rep.lines()))
        if "haar" in data:
            stored = tuple(parse_rational(w) for w in data["haar"])
            if stored != H.haar:
                raise AxiomError(f"stored haar {list(map(str, stored))} does not match "
                                 f"computed {list(map(str, H.haar))}")
    return H


def load_hypergroup(source, validate: bool = True):
    """Finite hypergroup file, or a discrete hypergroup description
    (``{"kind": "integers" | "zcross" | "padic", ...}``)."""
    data = _read_json(source)
    if isinstance(data, dict) and "kind" in data:
        return discrete_from_spec(data)
    return hypergroup_from_json(data, validate=validate)


def discrete_from_spec(spec: dict):
    from .constructors import integers, z_cross_f
    from .padic import PadicParams, counterexample_hypergroup

    kind = spec.get("kind")
    if kind == "integers":
        return integers()
    if kind == "zcross":
        return z_cross_f(load_hypergroup(spec["base"]))
    if kind == "padic":
        return counterexample_hypergroup(PadicParams(int(spec.get("p", 5)), int(spec.get("s", 3))))
    raise StructureError(f"unknown hypergroup kind {kind!r}")


def host_to_json(host) -> dict:
    if isinstance(host, FiniteHypergroup):
        return hypergroup_to_json(host)
    return dict(host.spec)


# -- measures -----------------------------------------------------------------

def _encode_weight(w):
    return format_rational(w) if isinstance(w, Fraction) else float(w)


def measure_to_json(mu: Measure, host_ref=None) -> dict:
    """``{"hypergroup": ..., "atoms": [{"element", "weight"}]}``.

    ``host_ref`` (e.g. a path string) replaces the inline hypergroup.
    """
    host = mu.host
    return {
        "hypergroup": host_ref if host_ref is not None else host_to_json(host),
        "atoms": [{"element": host.encode_key(k), "weight": _encode_weight(w)}
                  for k, w in mu.sorted_atoms()],
    }


def atoms_to_json(mu: Measure) -> list:
    return [{"element": mu.host.encode_key(k), "label": mu.host.label(k),
             "weight": _encode_weight(w), "float": float(w)}
            for k, w in mu.sorted_atoms()]


def measure_from_json(data: dict, host=None, base: Path | None = None) -> Measure:
    if not isinstance(data, dict) or "atoms" not in data:
        raise StructureError("measure JSON needs an \"atoms\" list")
    if host is None:
        ref = data.get("hypergroup")
        if ref is None:
            raise StructureError("measure JSON has no hypergroup and none was given")
        if isinstance(ref, str) and base is not None and not Path(ref).is_absolute():
            ref = base / ref
        host = load_hypergroup(ref)
    atoms = {}
    exact = True
    for atom in data["atoms"]:
        try:
            key = host.decode_key(atom["element"])
            raw = atom["weight"]
        except (KeyError, TypeError, ValueError) as exc:
            raise StructureError(f"bad atom {atom!r}: {exc}") from None
        if isinstance(raw, float):
            exact = False
            w = raw
        else:
            w = parse_rational(raw)
        atoms[key] = atoms.get(key, 0) + w
    if not exact:
        atoms = {k: float(w) for k, w in atoms.items()}
    return Measure(host, atoms, exact=exact)


def load_measure(source, host=None) -> Measure:
    base = None if isinstance(source, dict) else Path(source).parent
    return measure_from_json(_read_json(source), host=host, base=base)


# -- groups -------------------------------------------------------------------

def load_group(source):
    """Group file ``{"size", "table", "labels"?}`` or a catalog name."""
    from .constructors import FiniteGroupTable, catalog_group

    if isinstance(source, str) and not source.endswith(".json") and not Path(source).exists():
        return catalog_group(source)
    data = _read_json(source)
    table = data.get("table")
    if table is None or data.get("size", len(table)) != len(table):
        raise StructureError("group JSON needs \"table\" consistent with \"size\"")
    return FiniteGroupTable(table, data.get("labels"), data.get("name", ""))
