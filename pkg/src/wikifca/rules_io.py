"""Text and JSON Lines serialisations for implication bases and rule sets.

Text lines look like ``A1,A2 -> B1,B2`` with optional tab-separated
``key=value`` fields; the conclusion lists only attributes not already in
the premise.  Labels are backslash-escaped so that commas, ``>``, ``#``, tabs
and newlines survive.  A ``# attributes:`` header records the universe.
JSON Lines files start with an ``{"attributes": [...]}`` record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

from .assoc import AssociationRule
from .context import iter_bits
from .fca import Implication, ImplicationBase

_ESCAPES = {"\\": "\\\\", ",": "\\,", ">": "\\>", "#": "\\#", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", ",": ",", ">": ">", "#": "#", "t": "\t", "n": "\n", "r": "\r"}
HEADER = "# attributes: "


class RuleFormatError(ValueError):
    pass


def escape(label: str) -> str:
    return "".join(_ESCAPES.get(c, c) for c in label)


def _split_unescaped(text: str, sep: str) -> list[str]:
    """Split on ``sep`` outside escapes; pieces stay escaped."""
    parts, cur, i = [], [], 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            cur.append(text[i:i + 2])
            i += 2
            continue
        if text.startswith(sep, i):
            parts.append("".join(cur))
            cur = []
            i += len(sep)
            continue
        cur.append(c)
        i += 1
    parts.append("".join(cur))
    return parts


def unescape(text: str) -> str:
    out, i = [], 0
    while i < len(text):
        c = text[i]
        if c == "\\":
            if i + 1 >= len(text) or text[i + 1] not in _UNESCAPES:
                raise RuleFormatError(f"bad escape in {text!r}")
            out.append(_UNESCAPES[text[i + 1]])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _labels(mask: int, attributes: Sequence[str]) -> list[str]:
    return [attributes[i] for i in iter_bits(mask)]


def _join(labels: Sequence[str]) -> str:
    return ",".join(escape(l) for l in labels)


def _rule_line(premise: list[str], conclusion: list[str], fields: dict) -> str:
    line = " ".join(x for x in (_join(premise), "->", _join(conclusion)) if x)
    for key, value in fields.items():
        line += f"\t{key}={value}"
    return line


@dataclass
class ParsedRule:
    premise: list
    conclusion: list
    fields: dict


def _parse_lines(text: str) -> tuple[Optional[list[str]], list[ParsedRule]]:
    universe, rules = None, []
    for n, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            continue
        if line.startswith(HEADER):
            body = line[len(HEADER):]
            universe = [unescape(x) for x in _split_unescaped(body, ",")] if body else []
            continue
        if line.startswith("#"):
            continue
        rule, *extra = _split_unescaped(line, "\t")
        sides = _split_unescaped(rule, "->")
        if len(sides) != 2:
            raise RuleFormatError(f"line {n}: expected 'premise -> conclusion', got {line!r}")
        premise, conclusion = sides
        # exactly one space separates each side from the arrow
        if premise and not premise.endswith(" ") or conclusion and not conclusion.startswith(" "):
            raise RuleFormatError(f"line {n}: expected single spaces around '->'")
        premise, conclusion = premise[:-1], conclusion[1:]
        fields = {}
        for f in extra:
            key, eq, value = f.partition("=")
            if not eq:
                raise RuleFormatError(f"line {n}: bad field {f!r}")
            fields[key] = value
        rules.append(ParsedRule(
            [unescape(x) for x in _split_unescaped(premise, ",")] if premise else [],
            [unescape(x) for x in _split_unescaped(conclusion, ",")] if conclusion else [],
            fields,
        ))
    return universe, rules


def _universe(universe, rules) -> list[str]:
    if universe is not None:
        return universe
    seen: dict = {}
    for r in rules:
        for label in r.premise + r.conclusion:
            seen.setdefault(label, None)
    return list(seen)


def _mask(labels, index, where) -> int:
    mask = 0
    for label in labels:
        if label not in index:
            raise RuleFormatError(f"{where}: attribute {label!r} not in the declared universe")
        mask |= 1 << index[label]
    return mask


# ---------------------------------------------------------------------------
# implication bases


def format_base(base: ImplicationBase, supports: Optional[Sequence[Fraction]] = None) -> str:
    attributes = list(base.attributes) or [str(i) for i in range(base.size)]
    lines = [HEADER + _join(attributes)]
    for j, imp in enumerate(base):
        fields = {"support": supports[j]} if supports is not None else {}
        lines.append(_rule_line(_labels(imp.premise, attributes),
                                _labels(imp.added, attributes), fields))
    return "\n".join(lines) + "\n"


def parse_base(text: str) -> tuple[ImplicationBase, Optional[list[Fraction]]]:
    universe, rules = _parse_lines(text)
    attributes = _universe(universe, rules)
    index = {a: i for i, a in enumerate(attributes)}
    imps, supports = [], []
    for j, r in enumerate(rules):
        imps.append(Implication(_mask(r.premise, index, f"rule {j + 1}"),
                                _mask(r.conclusion, index, f"rule {j + 1}")))
        if "support" in r.fields:
            supports.append(Fraction(r.fields["support"]))
    if supports and len(supports) != len(imps):
        raise RuleFormatError("support given for some rules only")
    return ImplicationBase(tuple(imps), len(attributes), tuple(attributes)), supports or None


def base_to_jsonl(base: ImplicationBase, supports: Optional[Sequence[Fraction]] = None) -> str:
    attributes = list(base.attributes) or [str(i) for i in range(base.size)]
    lines = [json.dumps({"attributes": attributes}, ensure_ascii=False)]
    for j, imp in enumerate(base):
        record = {"premise": _labels(imp.premise, attributes),
                  "conclusion": _labels(imp.added, attributes)}
        if supports is not None:
            record["support"] = str(supports[j])
        lines.append(json.dumps(record, ensure_ascii=False))
    return "\n".join(lines) + "\n"


def _jsonl_records(text: str) -> tuple[list, list]:
    records = [json.loads(line) for line in text.split("\n") if line.strip()]
    if not records or "attributes" not in records[0]:
        raise RuleFormatError("missing attributes header record")
    return records[0]["attributes"], records[1:]


def base_from_jsonl(text: str) -> tuple[ImplicationBase, Optional[list[Fraction]]]:
    attributes, records = _jsonl_records(text)
    index = {a: i for i, a in enumerate(attributes)}
    imps, supports = [], []
    for j, r in enumerate(records):
        imps.append(Implication(_mask(r["premise"], index, f"record {j + 1}"),
                                _mask(r["conclusion"], index, f"record {j + 1}")))
        if "support" in r:
            supports.append(Fraction(r["support"]))
    return ImplicationBase(tuple(imps), len(attributes), tuple(attributes)), supports or None


# ---------------------------------------------------------------------------
# association rules


def format_rules(rules: Sequence[AssociationRule], attributes: Sequence[str]) -> str:
    lines = [HEADER + _join(attributes)]
    for r in rules:
        lines.append(_rule_line(_labels(r.premise, attributes), _labels(r.conclusion, attributes),
                                {"support": r.support, "confidence": r.confidence}))
    return "\n".join(lines) + "\n"


def parse_rules(text: str) -> tuple[list[AssociationRule], list[str]]:
    universe, parsed = _parse_lines(text)
    attributes = _universe(universe, parsed)
    index = {a: i for i, a in enumerate(attributes)}
    rules = []
    for j, r in enumerate(parsed):
        try:
            supp, conf = Fraction(r.fields["support"]), Fraction(r.fields["confidence"])
        except KeyError as exc:
            raise RuleFormatError(f"rule {j + 1}: missing {exc.args[0]}") from exc
        rules.append(AssociationRule(_mask(r.premise, index, f"rule {j + 1}"),
                                     _mask(r.conclusion, index, f"rule {j + 1}"), supp, conf))
    return rules, attributes


def rules_to_jsonl(rules: Sequence[AssociationRule], attributes: Sequence[str]) -> str:
    lines = [json.dumps({"attributes": list(attributes)}, ensure_ascii=False)]
    for r in rules:
        lines.append(json.dumps({
            "premise": _labels(r.premise, attributes),
            "conclusion": _labels(r.conclusion, attributes),
            "support": str(r.support),
            "confidence": str(r.confidence),
        }, ensure_ascii=False))
    return "\n".join(lines) + "\n"


def rules_from_jsonl(text: str) -> tuple[list[AssociationRule], list[str]]:
    attributes, records = _jsonl_records(text)
    index = {a: i for i, a in enumerate(attributes)}
    rules = []
    for j, r in enumerate(records):
        rules.append(AssociationRule(
            _mask(r["premise"], index, f"record {j + 1}"),
            _mask(r["conclusion"], index, f"record {j + 1}"),
            Fraction(r["support"]), Fraction(r["confidence"])))
    return rules, attributes


def rules_table(rules: Sequence[AssociationRule], attributes: Sequence[str]) -> str:
    """Human-readable table: rule, support %, confidence %."""
    rows = [("rule", "supp%", "conf%")]
    for r in rules:
        text = "{%s} -> {%s}" % (", ".join(_labels(r.premise, attributes)),
                                 ", ".join(_labels(r.conclusion, attributes)))
        rows.append((text, f"{float(r.support) * 100:.3f}", f"{float(r.confidence) * 100:.1f}"))
    width = max(len(r[0]) for r in rows)
    return "\n".join(f"{a.ljust(width)}  {b:>8}  {c:>6}" for a, b, c in rows) + "\n"


# ---------------------------------------------------------------------------
# files


def _is_jsonl(path) -> bool:
    return Path(path).suffix in (".jsonl", ".json")


def write_base(path: Union[str, Path], base: ImplicationBase,
               supports: Optional[Sequence[Fraction]] = None) -> None:
    text = base_to_jsonl(base, supports) if _is_jsonl(path) else format_base(base, supports)
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def read_base(path: Union[str, Path]) -> tuple[ImplicationBase, Optional[list[Fraction]]]:
    text = Path(path).read_text(encoding="utf-8")
    return base_from_jsonl(text) if _is_jsonl(path) else parse_base(text)


def write_rules(path: Union[str, Path], rules: Sequence[AssociationRule],
                attributes: Sequence[str]) -> None:
    text = rules_to_jsonl(rules, attributes) if _is_jsonl(path) else format_rules(rules, attributes)
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def read_rules(path: Union[str, Path]) -> tuple[list[AssociationRule], list[str]]:
    text = Path(path).read_text(encoding="utf-8")
    return rules_from_jsonl(text) if _is_jsonl(path) else parse_rules(text)
