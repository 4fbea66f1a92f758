"""Acceptance checks, one per headline requirement.

Each check produces a single ``PASS``/``FAIL`` line with what it measured.
Under pytest the lines are gathered into a terminal summary section; run the
module as a script to print them directly.
"""

import json
import random
import sys
import time
import tracemalloc
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from wikifca.assoc import frequent_closed, luxenburger_base  # noqa: E402
from wikifca.context import (  # noqa: E402
    FormalContext, build_classified, build_directed, build_plain, build_qualified,
    read_context, union_contexts, write_context,
)
from wikifca.fca import (  # noqa: E402
    Implication, canonical_base, entails, is_valid, lin_closure, support, theory_oracle,
)
from wikifca.kg import build_graph, eid, load_graph, open_dump, parse_dump  # noqa: E402
from wikifca.pac import PacParams, pac_run  # noqa: E402
from wikifca.rules_io import read_base, read_rules, write_base, write_rules  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
pytestmark = pytest.mark.acceptance
RESULTS: list = []  # read by the terminal summary hook in conftest


def report(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    RESULTS.append(line)
    print(line, flush=True)
    return ok


# ---------------------------------------------------------------------------
# 1. the family cross table has the single implication {} -> {mother}


def check_cross_table_base():
    start = time.perf_counter()
    g, _ = load_graph(FIXTURES / "mini.json")
    k = build_directed(g, [("P25", "subj"), ("P25", "obj"), ("P1290", "subj")])
    base = canonical_base(k)
    elapsed = time.perf_counter() - start
    got = [(k.names(i.premise), k.names(i.added)) for i in base]
    ok = got == [([], ["P25@subj"])] and tuple(k.table()) == ("XXX", "X.X", ".XX", "XXX")
    ok = ok and elapsed < 1
    return report("cross-table canonical base", ok, f"base={got} in {elapsed:.3f}s")


# ---------------------------------------------------------------------------
# 2. canonical base against the brute-force theory


def check_canonical_base_oracle(count=500):
    rng = random.Random(20240501)
    start = time.perf_counter()
    failures, minimality_checked = [], 0
    for trial in range(count):
        k = oracles.random_context(rng, max_objects=10, max_attrs=7)
        base = list(canonical_base(k))
        sound = all(is_valid(k, i) for i in base)
        complete = all(entails(base, i) for i in theory_oracle(k))
        irredundant = all(not entails(base[:j] + base[j + 1:], i) for j, i in enumerate(base))
        premises = [oracles.to_set(i.premise) for i in base]
        pseudo = oracles.lectic_sorted(oracles.pseudo_intents(k), len(k.attributes))
        minimum = True
        if len(k.attributes) <= 4:
            minimality_checked += 1
            minimum = len(base) == oracles.min_complete_size(k)
        if not (sound and complete and irredundant and minimum and premises == pseudo):
            failures.append(trial)
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 300
    return report("canonical base vs theory oracle", ok,
                  f"{count} contexts, {len(failures)} failures, minimality checked on "
                  f"{minimality_checked}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 3. linear closure against the naive fixpoint


def check_lin_closure(count=1000):
    rng = random.Random(77)
    start = time.perf_counter()
    bad = 0
    for _ in range(count):
        n = rng.randint(0, 12)
        L = []
        for _ in range(rng.randint(0, 15)):
            P = rng.getrandbits(n) & rng.getrandbits(n) if n else 0
            L.append(Implication(P, rng.getrandbits(n) if n else 0))
        X = rng.getrandbits(n) if n else 0
        sets = [(oracles.to_set(i.premise), oracles.to_set(i.conclusion)) for i in L]
        if oracles.to_set(lin_closure(L, X)) != oracles.fixpoint(sets, oracles.to_set(X)):
            bad += 1
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 30
    return report("closure agreement", ok, f"{count} instances, {bad} mismatches, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# 4. Luxenburger base


def check_luxenburger(count=200):
    start = time.perf_counter()
    cross = FormalContext.from_table(("AJ", "MC", "NW", "V"), ("godparent", "isMother", "mother"),
                                     ["xxx", "x.x", ".xx", "xxx"])
    rules = luxenburger_base(cross, Fraction(1, 4), Fraction(3, 5))
    exact = (len(rules) == 4
             and sorted(r.support for r in rules) == [Fraction(1, 2)] * 2 + [Fraction(3, 4)] * 2
             and sorted(r.confidence for r in rules) == [Fraction(2, 3)] * 2 + [Fraction(3, 4)] * 2)
    rng = random.Random(31337)
    bad = 0
    for _ in range(count):
        k = oracles.random_context(rng, max_objects=10, max_attrs=8)
        if not k.objects:
            k = FormalContext.from_table(("g",), k.attributes, ["x" * len(k.attributes)])
        minsupp = rng.choice([Fraction(0), Fraction(1, 10), Fraction(1, 5), Fraction(1, 3)])
        minconf = rng.choice([Fraction(0), Fraction(1, 2), Fraction(3, 5), Fraction(4, 5)])
        lattice = frequent_closed(k, minsupp)
        nodes = oracles.frequent_closed(k, minsupp)
        same_nodes = {oracles.to_set(B): s for B, s in lattice.nodes.items()} == nodes
        got = {(oracles.to_set(r.premise), oracles.to_set(r.conclusion), r.support, r.confidence)
               for r in luxenburger_base(k, minsupp, minconf, lattice)}
        if not (same_nodes and got == oracles.luxenburger(k, minsupp, minconf)):
            bad += 1
    elapsed = time.perf_counter() - start
    ok = exact and bad == 0 and elapsed < 300
    return report("Luxenburger base", ok, f"cross table exact={exact}; {count} random contexts, "
                  f"{bad} mismatches, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 5. extraction fidelity against literal evaluation of the incidence formulas

PROPS = ["P22", "P25", "P26", "P31", "P40", "P1082", "P1290"]
DIRECTED = [(p, d) for p in PROPS for d in ("subj", "obj")]

# worked out by hand from the fixture: which rows/columns the formulas leave empty
EMPTY = {
    "plain": ({"Q5", "Q17362350", "Q100001", "Q100002", "Q100003"}, {"P22", "P40"}),
    "directed": (set(), {"P22@subj", "P22@obj", "P40@subj", "P40@obj", "P1082@obj"}),
    # population figures are quantities, so nothing sits in the object position
    "qualified": ({"Q339", "Q13909", "Q4235", "Q132616", "Q9439", "Q5", "Q17362350",
                   "Q100001", "Q100002", "Q100003"},
                  {"P1082@obj?P459=Q791801", "P1082@obj?P585=+2015-12-31",
                   "P1082@obj?P585=+2016-12-31"}),
    "classified": ({"Q1794", "Q339", "Q4235", "Q5", "Q17362350", "Q100001", "Q100002",
                    "Q100003"}, set()),
}


def candidate_columns(raw, problem):
    if problem == "plain":
        return set(PROPS)
    if problem == "directed":
        return {f"{p}@{d}" for p, d in DIRECTED}
    out = set()
    inst = oracles.W(raw, "P31")
    for p, d in DIRECTED:
        rel = oracles.W(raw, p)
        if problem == "qualified":
            out |= {f"{p}@{d}?{q}={v}" for _, _, a in rel for q, v in a}
        else:
            out |= {f"{p}@{d}:{c}" for _, o, _ in rel for s, c, _ in inst if s == o}
    return out


def check_extraction():
    start = time.perf_counter()
    path = FIXTURES / "mini.json"
    raw = oracles.raw_statements(path)
    total = sum(len(c) for line in path.read_text().splitlines()[1:-1]
                for c in json.loads(line.rstrip(","))["claims"].values())
    g, _ = load_graph(path)
    built = {
        "plain": build_plain(g, PROPS),
        "directed": build_directed(g, DIRECTED),
        "qualified": build_qualified(g, DIRECTED),
        "classified": build_classified(g, DIRECTED),
    }
    literal = {
        "plain": oracles.literal_plain(raw, PROPS),
        "directed": oracles.literal_directed(raw, DIRECTED),
        "qualified": oracles.literal_qualified(raw, DIRECTED),
        "classified": oracles.literal_classified(raw, DIRECTED),
    }
    E = oracles.entities(raw)
    problems = []
    for name, k in built.items():
        if oracles.labelled_pairs(k) != literal[name]:
            problems.append(f"{name} incidence")
        dropped_rows = E - set(k.object_labels)
        dropped_cols = candidate_columns(raw, name) - set(k.attribute_labels)
        if (dropped_rows, dropped_cols) != EMPTY[name]:
            problems.append(f"{name} pruning")
    elapsed = time.perf_counter() - start
    ok = not problems and total <= 20 and elapsed < 1
    return report("extraction fidelity", ok,
                  f"{total} statements, 4 builders, issues={problems or 'none'}, {elapsed:.3f}s")


# ---------------------------------------------------------------------------
# 6. PAC guarantee

PAC_ROWS = ["x.x..x", "xxx..x", "x..xx.", "xx..xx", "...x..",
            "xxx..x", ".x..x.", "....xx", "..xxx.", "...xxx"]


def exact_distance(k, base):
    imps = [(oracles.to_set(i.premise), oracles.to_set(i.conclusion)) for i in base]
    n = len(k.attributes)
    wrong = sum(1 for X in oracles.subsets(n) if oracles.fixpoint(imps, X) != oracles.closure(k, X))
    return Fraction(wrong, 2 ** n)


def check_pac(seeds=300, epsilon=0.2, delta=0.1):
    k = FormalContext.from_table([f"g{i}" for i in range(10)], list("abcdef"), PAC_ROWS)
    start = time.perf_counter()
    far, invalid = 0, 0
    for seed in range(seeds):
        base = pac_run(k, PacParams(epsilon, delta, seed)).base
        if exact_distance(k, base) > epsilon:
            far += 1
        if not all(is_valid(k, i) for i in base):
            invalid += 1
    elapsed = time.perf_counter() - start
    rate = far / seeds
    ok = rate <= 0.15 and invalid == 0 and elapsed < 120
    return report("PAC guarantee", ok, f"{seeds} seeds, {rate:.3f} beyond epsilon, "
                  f"{invalid} runs with invalid rules, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 7. format round trips over every fixture


def corpus_contexts():
    yield "cross", FormalContext.from_table(("AJ", "MC", "NW", "V"),
                                            ("godparent", "isMother", "mother"),
                                            ["xxx", "x.x", ".xx", "xxx"])
    for dump in ("mini.json", "mini.json.gz", "mini.json.bz2", "family.json"):
        g, _ = load_graph(FIXTURES / dump)
        props = [str(p) for p in g.properties]
        directed = [(p, d) for p in props for d in ("subj", "obj")]
        plain = build_plain(g, props)
        yield f"{dump}/plain", plain
        yield f"{dump}/directed", build_directed(g, directed)
        yield f"{dump}/qualified", build_qualified(g, directed, include_rank=True)
        yield f"{dump}/classified", build_classified(g, directed)
        yield f"{dump}/union", union_contexts(plain, build_directed(g, directed))


def round_trip(tmp, name, write, read):
    a, b = tmp / f"{name}.a", tmp / f"{name}.b"
    write(a)
    write(b, read(a))
    return a.read_bytes() == b.read_bytes()


def check_round_trips(tmp: Path):
    failures, files = [], 0
    for i, (name, k) in enumerate(corpus_contexts()):
        a, b = tmp / f"k{i}.cxt", tmp / f"k{i}b.cxt"
        write_context(k, a)
        write_context(read_context(a), b)
        files += 1
        if a.read_bytes() != b.read_bytes():
            failures.append(f"{name} context")
        if len(k.attributes) > 12 or not k.objects:
            continue
        supported = lambda base: [support(k, imp) for imp in base]  # noqa: E731
        bases = {"canonical": canonical_base(k),
                 "pac": pac_run(k, PacParams(0.1, 0.1, 0)).base}
        for kind, base in bases.items():
            for suffix in (".rules", ".jsonl"):
                p, q = tmp / f"k{i}{kind}{suffix}", tmp / f"k{i}{kind}b{suffix}"
                write_base(p, base, supported(base))
                write_base(q, *read_base(p))
                files += 1
                if p.read_bytes() != q.read_bytes():
                    failures.append(f"{name} {kind}{suffix}")
        rules = luxenburger_base(k, 0, 0)
        for suffix in (".rules", ".jsonl"):
            p, q = tmp / f"k{i}lux{suffix}", tmp / f"k{i}luxb{suffix}"
            write_rules(p, rules, k.attribute_labels)
            write_rules(q, *read_rules(p))
            files += 1
            if p.read_bytes() != q.read_bytes():
                failures.append(f"{name} lux{suffix}")
    return report("format round trips", not failures,
                  f"{files} files, failures={failures or 'none'}")


# ---------------------------------------------------------------------------
# 8. streaming memory bound

SELECTED = ("P25", "P1290")


def _claim(prop, target):
    return {"mainsnak": {"snaktype": "value", "property": prop, "datatype": "wikibase-item",
                         "datavalue": {"type": "wikibase-entityid",
                                       "value": {"entity-type": "item", "id": f"Q{target}"}}},
            "type": "statement", "rank": "normal"}


def write_synthetic_dumps(full: Path, kept: Path, records: int, seed: int = 0) -> int:
    """A dump with mostly irrelevant claims, plus the same dump cut down to the
    selected claims.  Returns the largest record size in bytes."""
    rng = random.Random(seed)
    largest = 0
    with open(full, "w") as fh, open(kept, "w") as kh:
        fh.write("[\n")
        kh.write("[\n")
        for i in range(1, records + 1):
            claims = {}
            for p in rng.sample(range(100, 900), rng.randint(2, 30)):
                claims[f"P{p}"] = [_claim(f"P{p}", rng.randint(1, records))
                                   for _ in range(rng.randint(1, 3))]
            selected = {}
            for p in SELECTED:
                if rng.random() < 0.2:
                    selected[p] = [_claim(p, rng.randint(1, records))]
            label = "x" * rng.randint(0, 400)
            record = {"type": "item", "id": f"Q{i}", "labels": {"en": {"value": label}},
                      "claims": {**claims, **selected}}
            tail = ",\n" if i < records else "\n"
            line = json.dumps(record, separators=(",", ":"))
            largest = max(largest, len(line.encode()) + len(tail))
            fh.write(line + tail)
            kh.write(json.dumps({"id": f"Q{i}", "claims": selected}, separators=(",", ":")) + tail)
        fh.write("]\n")
        kh.write("]\n")
    return largest


def traced_build(path: Path):
    tracemalloc.start()
    base = tracemalloc.get_traced_memory()[0]
    with open_dump(path) as fh:
        g = build_graph(parse_dump(fh, [eid(p) for p in SELECTED]))
    current, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    return g, current - base, peak - base


def check_streaming(tmp: Path, records=100_000):
    full, kept = tmp / "synthetic.json", tmp / "synthetic-kept.json"
    largest = write_synthetic_dumps(full, kept, records)
    warm = tmp / "warm.json"
    write_synthetic_dumps(warm, tmp / "warm-kept.json", 200, seed=1)
    traced_build(warm)  # import-time and cache allocations out of the way
    # the store alone: exactly the retained statements, nothing else to skip over
    g_kept, _, store_peak = traced_build(kept)
    start = time.perf_counter()
    g, retained, peak = traced_build(full)
    elapsed = time.perf_counter() - start
    bound = 10 * largest + store_peak
    ok = peak <= bound and elapsed < 60 and g == g_kept and len(g) > 0
    return report("streaming bound", ok,
                  f"{records} records, {len(g)} statements kept, largest record {largest} B, "
                  f"peak {peak} B <= {bound} B (10 x record + store peak {store_peak} B), "
                  f"retained {retained} B, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# pytest entry points


def test_cross_table_base():
    assert check_cross_table_base()


def test_canonical_base_oracle():
    assert check_canonical_base_oracle()


def test_lin_closure_agreement():
    assert check_lin_closure()


def test_luxenburger_correctness():
    assert check_luxenburger()


def test_extraction_fidelity():
    assert check_extraction()


def test_pac_guarantee():
    assert check_pac()


def test_format_round_trips(tmp_path):
    assert check_round_trips(tmp_path)


def test_streaming_bound(tmp_path):
    assert check_streaming(tmp_path)


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        results = [check_cross_table_base(), check_canonical_base_oracle(), check_lin_closure(),
                   check_luxenburger(), check_extraction(), check_pac(),
                   check_round_trips(Path(d)), check_streaming(Path(d))]
    sys.exit(0 if all(results) else 1)
