"""Regenerate the small dumps under tests/fixtures/.

mini.json      20 statements: the Taylor/Burton marriages, Frankfurt population,
               the deprecated Pluto classification, unknown/no value cases and a
               small family graph whose directed context is the
               isMother/godparent/mother cross table.
family.json    the family graph plus property records typed by a property class,
               for class-based selection.
mini.json.gz / mini.json.bz2   compressed copies of mini.json.
"""

import bz2
import gzip
import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def item(qid):
    return {"type": "wikibase-entityid",
            "value": {"entity-type": "item", "numeric-id": int(qid[1:]), "id": qid}}


def year(y):
    return {"type": "time", "value": {"time": f"+{y:04d}-00-00T00:00:00Z", "timezone": 0,
                                      "before": 0, "after": 0, "precision": 9,
                                      "calendarmodel": "http://www.wikidata.org/entity/Q1985727"}}


def day(text):
    return {"type": "time", "value": {"time": f"+{text}T00:00:00Z", "timezone": 0, "before": 0,
                                      "after": 0, "precision": 11,
                                      "calendarmodel": "http://www.wikidata.org/entity/Q1985727"}}


def quantity(amount):
    return {"type": "quantity", "value": {"amount": f"+{amount}", "unit": "1"}}


def snak(prop, value=None, kind="value"):
    s = {"snaktype": kind, "property": prop}
    if value is not None:
        s["datavalue"] = value
        s["datatype"] = {"wikibase-entityid": "wikibase-item"}.get(value["type"], value["type"])
    return s


def claim(prop, value=None, *, kind="value", rank="normal", qualifiers=(), refs=0):
    c = {"mainsnak": snak(prop, value, kind), "type": "statement", "rank": rank}
    if qualifiers:
        c["qualifiers"] = {}
        for qp, qv, *qk in qualifiers:
            c["qualifiers"].setdefault(qp, []).append(snak(qp, qv, qk[0] if qk else "value"))
    if refs:
        c["references"] = [{"snaks": {}} for _ in range(refs)]
    return c


def record(eid, *claims):
    grouped = {}
    for c in claims:
        grouped.setdefault(c["mainsnak"]["property"], []).append(c)
    kind = "property" if eid.startswith("P") else "item"
    return {"type": kind, "id": eid, "labels": {}, "claims": grouped}


# Q13909, Q4235, Q132616, Q9439 stand in for the four family members of the
# cross table; the mother/godparent links are made up so the table comes out.
AJ, MC, NW, V = "Q13909", "Q4235", "Q132616", "Q9439"
FAMILY = [
    record(AJ, claim("P25", item(V)), claim("P1290", item("Q100001")), claim("P31", item("Q5"))),
    record(MC, claim("P25", item(NW)), claim("P1290", item("Q100002"))),
    record(NW, claim("P25", item(AJ))),
    record(V, claim("P25", item(AJ)), claim("P1290", item("Q100003")), claim("P31", item("Q5"))),
]

MINI = [
    record("Q34851",
           claim("P26", item("Q151973"), qualifiers=[("P580", year(1964)), ("P582", year(1974))]),
           claim("P26", item("Q151973"), qualifiers=[("P580", year(1983)), ("P582", year(1984))]),
           claim("P31", item("Q5")),
           claim("P22", kind="somevalue")),
    record("Q151973",
           claim("P31", item("Q5")),
           claim("P40", kind="novalue"),
           claim("P26", item("Q34851"),
                 qualifiers=[("P580", year(1964)), ("P582", None, "novalue")])),
    record("Q1794",
           claim("P1082", quantity(736414), rank="preferred", refs=1,
                 qualifiers=[("P459", item("Q791801")), ("P585", day("2016-12-31"))]),
           claim("P1082", quantity(732688),
                 qualifiers=[("P459", item("Q791801")), ("P585", day("2015-12-31"))])),
    record("Q339",
           claim("P31", item("Q634"), rank="deprecated", qualifiers=[("P582", day("2006-09-13"))]),
           claim("P31", item("Q17362350"))),
] + FAMILY

# "Wikidata property to describe family relations" style class for P25/P1290
FAMILY_CLASS = "Q22964288"
FAMILY_PROPS = [
    record("P25", claim("P31", item(FAMILY_CLASS))),
    record("P1290", claim("P31", item(FAMILY_CLASS))),
    record("P26", claim("P31", item("Q18608871"))),
]


def dump_text(records):
    lines = ["["] + [json.dumps(r, separators=(",", ":")) + "," for r in records[:-1]]
    lines.append(json.dumps(records[-1], separators=(",", ":")))
    lines.append("]")
    return "\n".join(lines) + "\n"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    mini = dump_text(MINI)
    (OUT / "mini.json").write_text(mini)
    with gzip.open(OUT / "mini.json.gz", "wt") as fh:
        fh.write(mini)
    with bz2.open(OUT / "mini.json.bz2", "wt") as fh:
        fh.write(mini)
    (OUT / "family.json").write_text(dump_text(FAMILY_PROPS + FAMILY))
    (OUT / "family.props").write_text("# directed family selection\nP25\nP1290@subj\n")
    (OUT / "unused.props").write_text("P9999\n")
    (OUT / "spouse.props").write_text("P26\n")


if __name__ == "__main__":
    main()
