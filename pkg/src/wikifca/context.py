"""Formal contexts extracted from a knowledge graph.

Rows are stored as Python ints used as bitsets over the attribute list (bit
``i`` set means the object has attribute ``i``); columns are derived lazily
as bitsets over the object list.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .kg import EntityId, KnowledgeGraph, eid


class Direction(Enum):
    SUBJECT = "subj"
    OBJECT = "obj"

    @classmethod
    def of(cls, d: Union[str, "Direction"]) -> "Direction":
        if isinstance(d, Direction):
            return d
        return {"subj": cls.SUBJECT, "subject": cls.SUBJECT,
                "obj": cls.OBJECT, "object": cls.OBJECT}[d]


@dataclass(frozen=True)
class Plain:
    property: EntityId

    def __str__(self):
        return str(self.property)


@dataclass(frozen=True)
class Directed:
    property: EntityId
    direction: Direction

    def __str__(self):
        return f"{self.property}@{self.direction.value}"


@dataclass(frozen=True)
class Qualified:
    """A directed property refined by one annotation ``qualifier=value``.

    ``qualifier`` is a property id in canonical text, or ``rank`` for the
    rank pseudo-annotation; ``value`` is the canonical text of the value.
    """

    property: EntityId
    direction: Direction
    qualifier: str
    value: str

    def __str__(self):
        return f"{self.property}@{self.direction.value}?{self.qualifier}={self.value}"


@dataclass(frozen=True)
class Classified:
    property: EntityId
    direction: Direction
    cls: EntityId

    def __str__(self):
        return f"{self.property}@{self.direction.value}:{self.cls}"


AttributeSpec = Union[Plain, Directed, Qualified, Classified]

_ATTR_RE = re.compile(r"^(P[1-9]\d*)(?:@(subj|obj)(?:\?([^=]+)=(.*)|:([QP][1-9]\d*))?)?$", re.S)


def parse_attribute(text: str) -> AttributeSpec:
    """Inverse of ``str`` on attribute specs."""
    m = _ATTR_RE.match(text)
    if not m:
        raise ValueError(f"not an attribute spec: {text!r}")
    p = eid(m.group(1))
    if m.group(2) is None:
        return Plain(p)
    d = Direction.of(m.group(2))
    if m.group(3) is not None:
        return Qualified(p, d, m.group(3), m.group(4))
    if m.group(5) is not None:
        return Classified(p, d, eid(m.group(5)))
    return Directed(p, d)


def _bits(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class FormalContext:
    objects: tuple
    attributes: tuple
    rows: tuple  # one int bitset over attributes per object

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "rows", tuple(self.rows))
        if len(self.rows) != len(self.objects):
            raise ValueError("one row per object required")
        if len(set(self.object_labels)) != len(self.objects):
            raise ValueError("object labels must be distinct")
        if len(set(self.attribute_labels)) != len(self.attributes):
            raise ValueError("attribute labels must be distinct")
        full = self.full_attributes
        for r in self.rows:
            if r < 0 or r & ~full:
                raise ValueError("incidence refers to a missing attribute")

    @classmethod
    def from_incidence(cls, objects: Sequence, attributes: Sequence,
                       incidence: Iterable[tuple[int, int]]) -> "FormalContext":
        rows = [0] * len(objects)
        for g, m in incidence:
            rows[g] |= 1 << m
        return cls(tuple(objects), tuple(attributes), tuple(rows))

    @classmethod
    def from_table(cls, objects: Sequence, attributes: Sequence,
                   table: Sequence[str]) -> "FormalContext":
        """Build from cross-table strings such as ``["xx.", ".x."]``."""
        rows = []
        for line in table:
            if len(line) != len(attributes):
                raise ValueError(f"row {line!r} has wrong width")
            rows.append(_bits(i for i, c in enumerate(line) if c in "xX"))
        return cls(tuple(objects), tuple(attributes), tuple(rows))

    @classmethod
    def empty(cls) -> "FormalContext":
        return cls((), (), ())

    @cached_property
    def object_labels(self) -> tuple:
        return tuple(str(g) for g in self.objects)

    @cached_property
    def attribute_labels(self) -> tuple:
        return tuple(str(m) for m in self.attributes)

    @cached_property
    def attribute_index(self) -> dict:
        return {label: i for i, label in enumerate(self.attribute_labels)}

    @cached_property
    def columns(self) -> tuple:
        # packed bytes per column; OR-ing into big ints object by object is quadratic
        width = (len(self.objects) + 7) // 8
        packed = [bytearray(width) for _ in self.attributes]
        for g, row in enumerate(self.rows):
            byte, bit = g >> 3, 1 << (g & 7)
            for m in iter_bits(row):
                packed[m][byte] |= bit
        return tuple(int.from_bytes(col, "little") for col in packed)

    @property
    def full_attributes(self) -> int:
        return (1 << len(self.attributes)) - 1

    @property
    def full_objects(self) -> int:
        return (1 << len(self.objects)) - 1

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.objects), len(self.attributes)

    def incidence(self, g: int) -> frozenset:
        """Attribute indices of object ``g``."""
        return frozenset(iter_bits(self.rows[g]))

    def pairs(self) -> set:
        return {(g, m) for g, row in enumerate(self.rows) for m in iter_bits(row)}

    def mask(self, labels: Iterable) -> int:
        """Attribute bitset from labels (or specs); unknown labels raise KeyError."""
        return _bits(self.attribute_index[str(a)] for a in labels)

    def names(self, mask: int) -> list:
        return [self.attribute_labels[i] for i in iter_bits(mask)]

    def table(self) -> list[str]:
        n = len(self.attributes)
        return ["".join("X" if row >> i & 1 else "." for i in range(n)) for row in self.rows]

    def restrict(self, objects: Sequence[int], attributes: Sequence[int]) -> "FormalContext":
        remap = {old: new for new, old in enumerate(attributes)}
        rows = []
        for g in objects:
            rows.append(_bits(remap[m] for m in iter_bits(self.rows[g]) if m in remap))
        return FormalContext(tuple(self.objects[g] for g in objects),
                             tuple(self.attributes[m] for m in attributes), tuple(rows))


@dataclass(frozen=True)
class ContextStats:
    objects: int
    attributes: int
    incidences: int
    density: Fraction

    def __str__(self):
        return (f"objects={self.objects} attributes={self.attributes} "
                f"incidences={self.incidences} density={float(self.density):.3f}")


def stats(k: FormalContext) -> ContextStats:
    n, m = k.shape
    inc = sum(r.bit_count() for r in k.rows)
    density = Fraction(inc, n * m) if n and m else Fraction(0)
    return ContextStats(n, m, inc, density)


def prune_empty(k: FormalContext) -> FormalContext:
    """Drop objects without attributes and attributes without objects."""
    while True:
        objs = [g for g, r in enumerate(k.rows) if r]
        used = 0
        for r in k.rows:
            used |= r
        attrs = list(iter_bits(used))
        if len(objs) == len(k.objects) and len(attrs) == len(k.attributes):
            return k
        k = k.restrict(objs, attrs)


def union_contexts(a: FormalContext, b: FormalContext) -> FormalContext:
    """Point-wise union; labels identify objects and attributes across contexts."""
    objects, obj_idx = list(a.objects), {l: i for i, l in enumerate(a.object_labels)}
    for g, label in zip(b.objects, b.object_labels):
        if label not in obj_idx:
            obj_idx[label] = len(objects)
            objects.append(g)
    attributes, attr_idx = list(a.attributes), dict(a.attribute_index)
    for m, label in zip(b.attributes, b.attribute_labels):
        if label not in attr_idx:
            attr_idx[label] = len(attributes)
            attributes.append(m)
    rows = list(a.rows) + [0] * (len(objects) - len(a.objects))
    bmap = [attr_idx[label] for label in b.attribute_labels]
    for label, row in zip(b.object_labels, b.rows):
        rows[obj_idx[label]] |= _bits(bmap[m] for m in iter_bits(row))
    return FormalContext(tuple(objects), tuple(attributes), tuple(rows))


# ---------------------------------------------------------------------------
# builders


def _assemble(g: KnowledgeGraph, incidence: Mapping) -> FormalContext:
    """Objects in first-appearance order, attributes by canonical text."""
    attributes = sorted({a for attrs in incidence.values() for a in attrs}, key=str)
    index = {a: i for i, a in enumerate(attributes)}
    fallback = len(g.order)
    objects = sorted((e for e, attrs in incidence.items() if attrs),
                     key=lambda e: (g.order.get(e, fallback), str(e)))
    rows = tuple(_bits(index[a] for a in incidence[e]) for e in objects)
    return prune_empty(FormalContext(tuple(objects), tuple(attributes), rows))


def _directed_props(props) -> list[tuple[EntityId, Direction]]:
    out = []
    for item in props:
        if isinstance(item, Directed):
            out.append((item.property, item.direction))
        else:
            p, d = item
            out.append((eid(p), Direction.of(d)))
    return out


def select_properties_by_class(g: KnowledgeGraph, cls: Union[str, EntityId]) -> set:
    c = eid(cls)
    return {e for e, classes in g.class_edges.items() if e.is_property and c in classes}


def build_plain(g: KnowledgeGraph, props: Iterable) -> FormalContext:
    props = [eid(p) for p in props]
    if not props:
        raise ValueError("property selection must be nonempty")
    incidence: dict = {}
    for p in props:
        attr = Plain(p)
        for t in g.W(p):
            incidence.setdefault(t.subject, set()).add(attr)
    return _assemble(g, incidence)


def build_directed(g: KnowledgeGraph, props: Iterable) -> FormalContext:
    props = _directed_props(props)
    if not props:
        raise ValueError("property selection must be nonempty")
    incidence: dict = {}
    for p, d in props:
        attr = Directed(p, d)
        for t in g.W(p):
            q = t.subject if d is Direction.SUBJECT else t.value.as_entity
            if q is not None:
                incidence.setdefault(q, set()).add(attr)
    return _assemble(g, incidence)


RANK_QUALIFIER = "rank"


def _annotations(t, include_rank: bool):
    for sn in t.annotation:
        yield str(sn.property), sn.value.canonical()
    if include_rank:
        yield RANK_QUALIFIER, t.rank.value


def build_qualified(
    g: KnowledgeGraph,
    props: Iterable,
    qualifier_filter: Optional[Iterable] = None,
    max_values_per_qualifier: Optional[int] = None,
    *,
    include_rank: bool = False,
) -> FormalContext:
    """One attribute per (property, direction, annotation) pair.

    ``qualifier_filter`` keeps only the named qualifier properties (use
    ``"rank"`` to admit the rank pseudo-annotation).  With
    ``max_values_per_qualifier=k`` only the ``k`` values seen on the most
    statements survive per (property, direction, qualifier); ties go to the
    smaller canonical text.
    """
    props = _directed_props(props)
    if not props:
        raise ValueError("property selection must be nonempty")
    if max_values_per_qualifier is not None and max_values_per_qualifier < 1:
        raise ValueError("max_values_per_qualifier must be positive")
    allowed = None
    if qualifier_filter is not None:
        allowed = {q if q == RANK_QUALIFIER else str(eid(q)) for q in qualifier_filter}

    hits: dict = {}
    freq: Counter = Counter()
    for p, d in props:
        for t in g.W(p):
            q = t.subject if d is Direction.SUBJECT else t.value.as_entity
            if q is None:
                continue
            for qp, qv in _annotations(t, include_rank):
                if allowed is not None and qp not in allowed:
                    continue
                attr = Qualified(p, d, qp, qv)
                hits.setdefault(q, set()).add(attr)
                freq[attr] += 1

    if max_values_per_qualifier is not None:
        groups: dict = {}
        for attr in freq:
            groups.setdefault((attr.property, attr.direction, attr.qualifier), []).append(attr)
        keep = set()
        for attrs in groups.values():
            attrs.sort(key=lambda a: (-freq[a], a.value))
            keep.update(attrs[:max_values_per_qualifier])
        hits = {q: attrs & keep for q, attrs in hits.items()}
    return _assemble(g, hits)


def build_classified(
    g: KnowledgeGraph,
    props: Iterable,
    class_filter: Optional[Iterable] = None,
) -> FormalContext:
    """Attributes (p, dir, c) for classes c of objects of p-statements."""
    props = _directed_props(props)
    if not props:
        raise ValueError("property selection must be nonempty")
    allowed = None if class_filter is None else {eid(c) for c in class_filter}
    incidence: dict = {}
    for p, d in props:
        for t in g.W(p):
            obj = t.value.as_entity
            if obj is None:
                continue
            q = t.subject if d is Direction.SUBJECT else obj
            for c in g.class_edges.get(obj, ()):
                if allowed is None or c in allowed:
                    incidence.setdefault(q, set()).add(Classified(p, d, c))
    return _assemble(g, incidence)


# ---------------------------------------------------------------------------
# Burmeister files


class ContextFormatError(ValueError):
    pass


def format_burmeister(k: FormalContext) -> str:
    for label in k.object_labels + k.attribute_labels:
        if "\n" in label or "\r" in label:
            raise ContextFormatError(f"label {label!r} contains a line break")
    n, m = k.shape
    lines = ["B", "", str(n), str(m), ""]
    lines += k.object_labels
    lines += k.attribute_labels
    lines += k.table()
    return "\n".join(lines) + "\n"


def parse_burmeister(text: str) -> FormalContext:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 5 or lines[0] != "B":
        raise ContextFormatError("not a Burmeister context (missing 'B' header)")
    try:
        n, m = int(lines[2]), int(lines[3])
    except ValueError as exc:
        raise ContextFormatError("bad object/attribute counts") from exc
    # some writers omit the blank line after the counts
    start = 5 if lines[4] == "" and len(lines) == 5 + 2 * n + m else 4
    if len(lines) != start + 2 * n + m:
        raise ContextFormatError(
            f"expected {start + 2 * n + m} lines for a {n}x{m} context, got {len(lines)}")
    objects = lines[start:start + n]
    attributes = lines[start + n:start + n + m]
    table = lines[start + n + m:]
    for row in table:
        if len(row) != m or set(row) - set("Xx."):
            raise ContextFormatError(f"bad context row {row!r}")
    try:
        return FormalContext.from_table(objects, attributes, table)
    except ValueError as exc:
        raise ContextFormatError(str(exc)) from exc


def write_context(k: FormalContext, path: Union[str, Path]) -> None:
    Path(path).write_text(format_burmeister(k), encoding="utf-8", newline="\n")


def read_context(path: Union[str, Path]) -> FormalContext:
    return parse_burmeister(Path(path).read_text(encoding="utf-8"))


def write_metadata(path: Union[str, Path], params: Mapping) -> None:
    """Flat ``key=value`` sidecar, keys sorted."""
    lines = [f"{k}={params[k]}" for k in sorted(params)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_metadata(path: Union[str, Path]) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line and not line.startswith("#"):
            key, _, value = line.partition("=")
            out[key] = value
    return out
