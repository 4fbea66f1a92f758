"""Statement store for Wikidata-style entity dumps.

A knowledge graph maps each property ``p`` to the set of ``p``-statements
``(subject, value, annotation)``.  Statements keep their rank and reference
count next to the annotation so that filtering stays cheap.

Dumps are read one record per line (the layout of the official JSON dumps),
so memory use is bounded by the largest single record.
"""

from __future__ import annotations

import bz2
import gzip
import json
import logging
import re
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from pathlib import Path
from typing import IO, Callable, Iterable, Iterator, Mapping, Optional, Union

logger = logging.getLogger(__name__)

_ENTITY_RE = re.compile(r"^([QP])([1-9][0-9]*)$")
_ENTITY_URI = "http://www.wikidata.org/entity/"


@dataclass(frozen=True, order=True, slots=True)
class EntityId:
    kind: str  # "Q" (item) or "P" (property)
    number: int

    def __post_init__(self):
        if self.kind not in ("Q", "P"):
            raise ValueError(f"bad entity kind {self.kind!r}")
        if self.number < 1:
            raise ValueError(f"entity number must be positive, got {self.number}")

    @classmethod
    def parse(cls, text: str) -> "EntityId":
        if text.startswith(_ENTITY_URI):
            text = text[len(_ENTITY_URI):]
        m = _ENTITY_RE.match(text.strip())
        if not m:
            raise ValueError(f"not an entity id: {text!r}")
        return cls(m.group(1), int(m.group(2)))

    @property
    def is_property(self) -> bool:
        return self.kind == "P"

    def __str__(self) -> str:
        return f"{self.kind}{self.number}"

    def __repr__(self) -> str:
        return f"EntityId({str(self)!r})"


def eid(text: Union[str, EntityId]) -> EntityId:
    """Shorthand for :meth:`EntityId.parse` that passes ids through."""
    return text if isinstance(text, EntityId) else EntityId.parse(text)


INSTANCE_OF = eid("P31")
SUBCLASS_OF = eid("P279")


class Rank(Enum):
    DEPRECATED = "deprecated"
    NORMAL = "normal"
    PREFERRED = "preferred"


class ValueTag(Enum):
    ENTITY = "entity"
    QUANTITY = "quantity"
    TIME = "time"
    COORDINATE = "coordinate"
    STRING = "string"
    MONOLINGUAL = "monolingual-text"
    URI = "uri"
    SOME_VALUE = "some-value"
    NO_VALUE = "no-value"


SPECIAL_TAGS = frozenset({ValueTag.SOME_VALUE, ValueTag.NO_VALUE})


def _decimal_text(d: Decimal) -> str:
    if d == 0:
        return "0"
    text = format(d, "f")  # exact; normalize() would round to the context precision
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def _time_text(timestamp: str, precision: int) -> str:
    """Truncate a Wikidata timestamp (``+1964-01-01T00:00:00Z``) to its precision."""
    sign = timestamp[0] if timestamp[:1] in "+-" else "+"
    body = timestamp.lstrip("+-")
    date, _, clock = body.partition("T")
    year, month, day = (date.split("-") + ["00", "00"])[:3]
    out = f"{sign}{int(year):04d}"
    if precision >= 10:
        out += f"-{month}"
    if precision >= 11:
        out += f"-{day}"
    if precision >= 12:
        clock = clock.rstrip("Z")
        parts = clock.split(":")
        out += "T" + ":".join(parts[: precision - 11])
    return out


@dataclass(frozen=True, slots=True)
class DataValue:
    """A statement value.  ``payload`` layout depends on ``tag``:

    entity: (EntityId,); quantity: (Decimal, unit EntityId or None);
    time: (timestamp str, precision int); coordinate: (lat, lon, globe EntityId);
    string/uri: (text,); monolingual-text: (text, lang); some/no-value: ().
    """

    tag: ValueTag
    payload: tuple = ()

    def __post_init__(self):
        if self.tag in SPECIAL_TAGS and self.payload:
            raise ValueError(f"{self.tag.value} carries no payload")

    @classmethod
    def entity(cls, e: Union[str, EntityId]) -> "DataValue":
        return cls(ValueTag.ENTITY, (eid(e),))

    @classmethod
    def quantity(cls, amount, unit: Optional[Union[str, EntityId]] = None) -> "DataValue":
        return cls(ValueTag.QUANTITY, (Decimal(str(amount)), eid(unit) if unit else None))

    @classmethod
    def time(cls, timestamp: str, precision: int = 11) -> "DataValue":
        return cls(ValueTag.TIME, (timestamp, precision))

    @classmethod
    def year(cls, year: int) -> "DataValue":
        sign = "-" if year < 0 else "+"
        return cls.time(f"{sign}{abs(year):04d}-00-00T00:00:00Z", 9)

    @classmethod
    def coordinate(cls, lat: float, lon: float, globe: Union[str, EntityId] = "Q2") -> "DataValue":
        return cls(ValueTag.COORDINATE, (float(lat), float(lon), eid(globe)))

    @classmethod
    def string(cls, text: str) -> "DataValue":
        return cls(ValueTag.STRING, (text,))

    @classmethod
    def uri(cls, text: str) -> "DataValue":
        return cls(ValueTag.URI, (text,))

    @classmethod
    def monolingual(cls, text: str, lang: str) -> "DataValue":
        return cls(ValueTag.MONOLINGUAL, (text, lang))

    @classmethod
    def some_value(cls) -> "DataValue":
        return cls(ValueTag.SOME_VALUE)

    @classmethod
    def no_value(cls) -> "DataValue":
        return cls(ValueTag.NO_VALUE)

    @property
    def is_special(self) -> bool:
        return self.tag in SPECIAL_TAGS

    @property
    def as_entity(self) -> Optional[EntityId]:
        return self.payload[0] if self.tag is ValueTag.ENTITY else None

    def canonical(self) -> str:
        t, p = self.tag, self.payload
        if t is ValueTag.ENTITY:
            return str(p[0])
        if t is ValueTag.QUANTITY:
            text = _decimal_text(p[0])
            return f"{text}~{p[1]}" if p[1] is not None else text
        if t is ValueTag.TIME:
            return _time_text(p[0], p[1])
        if t is ValueTag.COORDINATE:
            return f"{p[0]:.6f},{p[1]:.6f}@{p[2]}"
        if t in (ValueTag.STRING, ValueTag.URI):
            return p[0]
        if t is ValueTag.MONOLINGUAL:
            return f"{p[0]}@{p[1]}"
        return t.value

    def __str__(self) -> str:
        return self.canonical()


@dataclass(frozen=True, slots=True)
class Snak:
    property: EntityId
    value: DataValue

    def __post_init__(self):
        if not self.property.is_property:
            raise ValueError(f"snak property must be a property, got {self.property}")

    def __str__(self) -> str:
        return f"{self.property}={self.value.canonical()}"


_NO_ANNOTATION = frozenset()


@dataclass(frozen=True, slots=True)
class Statement:
    subject: EntityId
    property: EntityId
    value: DataValue
    annotation: frozenset = frozenset()
    rank: Rank = Rank.NORMAL
    references: int = 0

    def __post_init__(self):
        if not self.property.is_property:
            raise ValueError(f"statement property must be a property, got {self.property}")
        if not isinstance(self.annotation, frozenset) or not self.annotation:
            object.__setattr__(self, "annotation", frozenset(self.annotation) or _NO_ANNOTATION)
        if self.references < 0:
            raise ValueError("reference count must be non-negative")

    @property
    def object(self) -> DataValue:
        return self.value

    def __str__(self) -> str:
        ann = ", ".join(sorted(map(str, self.annotation)))
        return f"{self.property}({self.subject}, {self.value})@[{ann}; rank={self.rank.value}]"


# ---------------------------------------------------------------------------
# dump parsing


class DumpError(Exception):
    """Fatal problem with a dump stream."""


class TruncatedDumpError(DumpError):
    pass


class RecordError(ValueError):
    """A single malformed record; the caller decides whether to skip it."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def open_dump(path: Union[str, Path]) -> IO[bytes]:
    """Open a dump file, choosing the decompressor from the suffix."""
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    if path.suffix == ".bz2":
        return bz2.open(path, "rb")
    return open(path, "rb")


def _parse_datavalue(snak: dict) -> DataValue:
    kind = snak.get("snaktype", "value")
    if kind == "somevalue":
        return DataValue.some_value()
    if kind == "novalue":
        return DataValue.no_value()
    if kind != "value":
        raise ValueError(f"unknown snaktype {kind!r}")
    dv = snak["datavalue"]
    vtype, v = dv["type"], dv["value"]
    if vtype == "wikibase-entityid":
        ident = v.get("id") or ("Q" if v.get("entity-type") == "item" else "P") + str(v["numeric-id"])
        if ident[0] in "QP":
            return DataValue.entity(ident)
        return DataValue.string(ident)  # lexemes, forms, senses
    if vtype == "quantity":
        unit = v.get("unit", "1")
        return DataValue.quantity(Decimal(v["amount"]), None if unit == "1" else unit)
    if vtype == "time":
        return DataValue.time(v["time"], int(v.get("precision", 11)))
    if vtype == "globecoordinate":
        return DataValue.coordinate(v["latitude"], v["longitude"], v.get("globe") or "Q2")
    if vtype == "monolingualtext":
        return DataValue.monolingual(v["text"], v["language"])
    if vtype == "string":
        if snak.get("datatype") == "url":
            return DataValue.uri(v)
        return DataValue.string(v)
    raise ValueError(f"unsupported datavalue type {vtype!r}")


def _parse_claim(subject: EntityId, prop: EntityId, claim: dict) -> Statement:
    value = _parse_datavalue(claim["mainsnak"])
    annotation = set()
    for qprop, snaks in (claim.get("qualifiers") or {}).items():
        qp = eid(qprop)
        for qs in snaks:
            annotation.add(Snak(qp, _parse_datavalue(qs)))
    return Statement(
        subject=subject,
        property=prop,
        value=value,
        annotation=frozenset(annotation),
        rank=Rank(claim.get("rank", "normal")),
        references=len(claim.get("references") or ()),
    )


def parse_record(record: dict, selection=None) -> tuple[EntityId, list[Statement]]:
    """Turn one decoded entity record into ``(id, statements)``.

    ``selection`` may be a set of property ids or a mapping from their text
    form to the id; the mapping lets unselected claims be skipped unparsed.
    """
    subject = eid(record["id"])
    statements = []
    claims = record.get("claims") or {}
    if isinstance(claims, list):  # empty claims serialise as [] in the dumps
        claims = {}
    by_text = selection if isinstance(selection, dict) else None
    for prop, claim_list in claims.items():
        if by_text is not None:
            p = by_text.get(prop)
            if p is None:
                continue
        else:
            p = eid(prop)
            if selection is not None and p not in selection:
                continue
        for claim in claim_list:
            statements.append(_parse_claim(subject, p, claim))
    return subject, statements


_NONBLANK = re.compile(r"\S")


def parse_dump(
    stream: Iterable[bytes],
    selection: Union[str, Iterable[EntityId]] = "all",
    *,
    strict: bool = False,
    on_error: Optional[Callable[[RecordError], None]] = None,
) -> Iterator[tuple[EntityId, list[Statement]]]:
    """Lazily decode an entity dump, one ``(id, statements)`` pair per record.

    No statement filtering happens here.  A malformed record raises
    :class:`RecordError` when ``strict`` is set; otherwise it is passed to
    ``on_error`` (if given) and skipped.  A stream that opens with ``[`` but
    never closes it, or whose last line is cut mid-record, raises
    :class:`TruncatedDumpError`.
    """
    sel = None if selection == "all" else {str(p): p for p in map(eid, selection)}
    if sel is not None and not sel:
        raise ValueError("property selection must be nonempty or 'all'")
    opened = closed = False
    lineno = 0
    decode = json.JSONDecoder().raw_decode

    def report(err: RecordError, cause=None):
        if strict:
            raise err from cause
        if on_error:
            on_error(err)

    try:
        for raw in stream:
            lineno += 1
            complete = raw.endswith(b"\n" if isinstance(raw, bytes) else "\n")
            try:
                text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
            except UnicodeDecodeError as exc:
                report(RecordError(lineno, str(exc)), exc)
                continue
            del raw  # one copy of the line is enough while decoding
            m = _NONBLANK.search(text)
            if m is None:
                continue
            start = m.start()
            if closed:
                report(RecordError(lineno, "content after closing bracket"))
                continue
            if text[start] in "[]" and not text[start + 1:].strip():
                if text[start] == "[" and lineno == 1:
                    opened = True
                    continue
                if text[start] == "]":
                    closed = True
                    continue
            try:
                record, end = decode(text, start)
                if text[end:].strip() not in ("", ","):
                    raise RecordError(lineno, "trailing data after record")
                text = None
                parsed = parse_record(record, sel)
            except (ValueError, KeyError, TypeError, AttributeError) as exc:
                if not complete and isinstance(exc, json.JSONDecodeError):
                    raise TruncatedDumpError(f"record cut off at line {lineno}") from exc
                report(exc if isinstance(exc, RecordError) else RecordError(lineno, str(exc)), exc)
                continue
            finally:
                record = None
            yield parsed
            parsed = None
    except (EOFError, OSError) as exc:
        raise TruncatedDumpError(f"dump stream ended unexpectedly after line {lineno}") from exc
    if opened and not closed:
        raise TruncatedDumpError(f"missing closing bracket after line {lineno}")


# ---------------------------------------------------------------------------
# filtering and translation


def filter_statement(s: Statement) -> bool:
    """True to keep ``s``.  Deprecated statements and statements touching
    unknown/no value (in the main value or any qualifier) are dropped."""
    if s.rank is Rank.DEPRECATED or s.value.is_special:
        return False
    return not any(sn.value.is_special for sn in s.annotation)


@dataclass(frozen=True)
class Translation:
    target: EntityId
    qualifier: Optional[Snak] = None
    # companion statement on the original statement's object: (property, value)
    companion: Optional[tuple[EntityId, DataValue]] = None


TranslationMap = Mapping[EntityId, Translation]


def _t(target, qualifier=None, companion=None) -> Translation:
    q = Snak(eid(qualifier[0]), DataValue.entity(qualifier[1])) if qualifier else None
    c = (eid(companion[0]), DataValue.entity(companion[1])) if companion else None
    return Translation(eid(target), q, c)


# Deleted wiki44k-era properties and their current replacements.
DEFAULT_TRANSLATIONS: dict[EntityId, Translation] = {
    eid("P7"): _t("P3373"),  # brother -> sibling
    eid("P9"): _t("P3373"),  # sister -> sibling
    eid("P45"): _t("P1038", qualifier=("P1039", "Q167918")),  # grandparent -> relative
    eid("P70"): _t("P171", companion=("P105", "Q36602")),  # order -> parent taxon
    eid("P71"): _t("P171", companion=("P105", "Q35409")),  # family -> parent taxon
    eid("P107"): _t("P31"),  # main type (GND) -> instance of
    eid("P132"): _t("P31"),  # administrative entity type -> instance of
    eid("P134"): _t("P279"),  # language family -> subclass of
}


def apply_property_translations(s: Statement, t: TranslationMap) -> list[Statement]:
    tr = t.get(s.property)
    if tr is None:
        return [s]
    annotation = s.annotation | {tr.qualifier} if tr.qualifier else s.annotation
    out = [Statement(s.subject, tr.target, s.value, annotation, s.rank, s.references)]
    if tr.companion is not None and s.value.as_entity is not None:
        prop, value = tr.companion
        out.append(Statement(s.value.as_entity, prop, value, frozenset(), s.rank, 0))
    return out


_TRANSLATION_LINE = re.compile(
    r"^(?P<src>P\d+)\s*->\s*(?P<tgt>P\d+)"
    r"(?:\s+qualifier\s+(?P<qp>P\d+)=(?P<qv>\S+))?"
    r"(?:\s+companion\s+(?P<cp>P\d+)=(?P<cv>\S+))?\s*$"
)


def _value_from_text(text: str) -> DataValue:
    try:
        return DataValue.entity(text)
    except ValueError:
        return DataValue.string(text)


def load_translation_map(path: Union[str, Path]) -> dict[EntityId, Translation]:
    """Read ``SRC -> TGT [qualifier PROP=VALUE] [companion PROP=VALUE]`` lines."""
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _TRANSLATION_LINE.match(line)
        if not m:
            raise ValueError(f"{path}:{n}: cannot parse translation {line!r}")
        q = Snak(eid(m["qp"]), _value_from_text(m["qv"])) if m["qp"] else None
        c = (eid(m["cp"]), _value_from_text(m["cv"])) if m["cp"] else None
        out[eid(m["src"])] = Translation(eid(m["tgt"]), q, c)
    return out


def format_translation_map(t: TranslationMap) -> str:
    lines = []
    for src, tr in t.items():
        line = f"{src} -> {tr.target}"
        if tr.qualifier:
            line += f" qualifier {tr.qualifier}"
        if tr.companion:
            line += f" companion {tr.companion[0]}={tr.companion[1].canonical()}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def load_property_selection(path: Union[str, Path]) -> list[EntityId]:
    """One property id per line; ``#`` starts a comment."""
    props = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        p = eid(line)
        if not p.is_property:
            raise ValueError(f"{path}:{n}: {line} is not a property id")
        props.append(p)
    return props


# ---------------------------------------------------------------------------
# the graph


@dataclass(frozen=True)
class KnowledgeGraph:
    """Map from property to its (filtered) statements.

    ``relations`` preserves first-seen order per property.  ``order`` ranks
    subjects of kept statements by the position of their record in the dump,
    followed by entities that only occur as values; it fixes object order in
    derived contexts.
    Treat as immutable.
    """

    relations: Mapping[EntityId, tuple[Statement, ...]]
    class_edges: Mapping[EntityId, frozenset]
    order: Mapping[EntityId, int] = field(default_factory=dict)
    instance_of: EntityId = INSTANCE_OF
    subclass_of: EntityId = SUBCLASS_OF

    def W(self, p: Union[str, EntityId]) -> tuple[Statement, ...]:
        return self.relations.get(eid(p), ())

    @property
    def properties(self) -> list[EntityId]:
        return list(self.relations)

    def statements(self) -> Iterator[Statement]:
        for rel in self.relations.values():
            yield from rel

    def __len__(self) -> int:
        return sum(len(r) for r in self.relations.values())


def build_graph(
    records: Iterable[tuple[EntityId, list[Statement]]],
    translations: Optional[TranslationMap] = None,
    *,
    instance_of: EntityId = INSTANCE_OF,
    subclass_of: EntityId = SUBCLASS_OF,
) -> KnowledgeGraph:
    relations: dict[EntityId, dict[Statement, None]] = {}
    order: dict[EntityId, int] = {}  # subjects in record order
    values: dict[EntityId, None] = {}  # entity values, first mention first
    classes: dict[EntityId, set] = {}

    for subject, statements in records:
        for s in statements:
            rewritten = apply_property_translations(s, translations) if translations else [s]
            for t in rewritten:
                if not filter_statement(t):
                    continue
                relations.setdefault(t.property, {})[t] = None
                order.setdefault(t.subject, len(order))
                obj = t.value.as_entity
                if obj is not None:
                    values.setdefault(obj, None)
                    if t.property == instance_of:
                        classes.setdefault(t.subject, set()).add(obj)
    # entities that only occur as values go after all subjects
    for e in values:
        order.setdefault(e, len(order))
    del values
    return KnowledgeGraph(
        relations={p: tuple(r) for p, r in relations.items()},
        class_edges={e: frozenset(c) for e, c in classes.items()},
        order=order,
        instance_of=instance_of,
        subclass_of=subclass_of,
    )


def project(rel: Iterable[Statement], which: str) -> set:
    """Subject, object (value) or annotation projection of a relation."""
    if which == "subject":
        return {t.subject for t in rel}
    if which == "object":
        return {t.value for t in rel}
    if which == "annotation":
        return {t.annotation for t in rel}
    raise ValueError(f"unknown projection {which!r}")


def instances_of(g: KnowledgeGraph, e: Union[str, EntityId]) -> set:
    """Classes ``e`` is a direct instance of; no subclass reasoning."""
    return set(g.class_edges.get(eid(e), ()))


def load_graph(
    path: Union[str, Path],
    selection: Union[str, Iterable[EntityId]] = "all",
    translations: Optional[TranslationMap] = None,
    *,
    strict: bool = False,
    instance_of: EntityId = INSTANCE_OF,
) -> tuple[KnowledgeGraph, int]:
    """Parse and build in one go; returns the graph and the skipped-record count.

    The instance-of property is always read so classified contexts and
    class-based property selection work with a narrow selection.
    """
    skipped = 0

    def count(err):
        nonlocal skipped
        skipped += 1
        logger.warning("skipping malformed record: %s", err)

    if selection != "all":
        selection = set(selection) | {instance_of}
        if translations:
            selection |= set(translations)
    with open_dump(path) as fh:
        g = build_graph(
            parse_dump(fh, selection, strict=strict, on_error=count),
            translations,
            instance_of=instance_of,
        )
    return g, skipped
