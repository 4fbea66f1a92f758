"""Command line front end: dump -> context -> bases.

Exit codes: 0 success (or entailed), 1 not entailed / validation failed,
2 usage or validation error, 3 I/O, parse failure or exhausted budget.
Progress goes to stderr; data goes to files and stdout.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import assoc, context as ctx, fca, kg, pac, rules_io

log = logging.getLogger("wikifca")

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
PROBLEMS = ("plain", "directed", "qualified", "classified", "union")


class UsageError(Exception):
    pass


class BudgetExceeded(Exception):
    pass


@dataclass
class JobConfig:
    command: str
    dump: Optional[Path] = None
    context: Optional[Path] = None
    rules: Optional[Path] = None
    problem: str = "plain"
    union_of: tuple = ("plain", "directed")
    properties: Optional[Path] = None
    property_class: Optional[str] = None
    directions: tuple = ("subj", "obj")
    translations: Optional[Path] = None
    default_translations: bool = False
    qualifier_props: Optional[list] = None
    max_qualifier_values: Optional[int] = None
    include_rank: bool = False
    class_filter: Optional[list] = None
    minsupp: Fraction = Fraction(0)
    minconf: Fraction = Fraction(0)
    epsilon: float = 0.1
    delta: float = 0.1
    seed: int = 0
    out: Optional[Path] = None
    strict: bool = False
    only_supported: bool = False
    wall_clock_budget: Optional[float] = None
    validate: bool = False
    query: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def check(self) -> None:
        if self.command == "context":
            if (self.properties is None) == (self.property_class is None):
                raise UsageError("give exactly one of --properties and --property-class")
            if self.problem not in PROBLEMS:
                raise UsageError(f"unknown problem {self.problem!r}")
            bad = [p for p in self.union_of if p not in PROBLEMS or p == "union"]
            if self.problem == "union" and (bad or not self.union_of):
                raise UsageError(f"--union-of takes incidences from {PROBLEMS[:-1]}, got {bad}")
            if self.max_qualifier_values is not None and self.max_qualifier_values < 1:
                raise UsageError("--max-qualifier-values must be positive")
        if self.minsupp < 0 or self.minconf < 0:
            raise UsageError("thresholds must be non-negative")
        if not 0 < self.epsilon <= 1 or not 0 < self.delta <= 1:
            raise UsageError("--epsilon and --delta must lie in (0, 1]")
        if not 0 <= self.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")


def _csv(text: str) -> list:
    return [x.strip() for x in text.split(",") if x.strip()]


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wikifca", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("context", help="extract a formal context from a dump")
    p.add_argument("--dump", type=Path, required=True)
    p.add_argument("--problem", choices=PROBLEMS, default="plain")
    p.add_argument("--union-of", type=_csv, default=["plain", "directed"],
                   help="incidences combined by --problem union")
    sel = p.add_mutually_exclusive_group(required=True)
    sel.add_argument("--properties", type=Path, help="file with one property id per line")
    sel.add_argument("--property-class", help="select properties that are instances of QID")
    p.add_argument("--directions", type=_csv, default=["subj", "obj"])
    p.add_argument("--translations", type=Path, help="property translation map file")
    p.add_argument("--default-translations", action="store_true",
                   help="rewrite the deleted wiki44k properties to their replacements")
    p.add_argument("--qualifier-props", type=_csv)
    p.add_argument("--max-qualifier-values", type=int)
    p.add_argument("--include-rank", action="store_true",
                   help="expose statement rank as a qualifier in qualified contexts")
    p.add_argument("--class-filter", type=_csv)
    p.add_argument("--instance-of", default="P31")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--strict", action="store_true", help="abort on malformed records")

    p = sub.add_parser("base", help="canonical base of a context")
    p.add_argument("--context", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--only-supported", action="store_true")
    p.add_argument("--wall-clock-budget", type=float, help="seconds")

    p = sub.add_parser("luxenburger", help="Luxenburger base of association rules")
    p.add_argument("--context", type=Path, required=True)
    p.add_argument("--minsupp", type=_fraction, required=True)
    p.add_argument("--minconf", type=_fraction, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("pac", help="probably approximately correct implication base")
    p.add_argument("--context", type=Path, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--validate", action="store_true",
                   help="check the Horn distance of the result against epsilon")

    p = sub.add_parser("entails", help="decide whether a rules file entails an implication")
    p.add_argument("--rules", type=Path, required=True)
    p.add_argument("query", help="e.g. 'godparent => mother'")
    return parser


def config_from_args(args: argparse.Namespace) -> JobConfig:
    cfg = JobConfig(command=args.command)
    for name, value in vars(args).items():
        if name in ("command", "verbose"):
            continue
        if hasattr(cfg, name):
            setattr(cfg, name, value)
        else:
            cfg.extra[name] = value
    if isinstance(cfg.union_of, list):
        cfg.union_of = tuple(cfg.union_of)
    if isinstance(cfg.directions, list):
        cfg.directions = tuple(cfg.directions)
    return cfg


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.name + suffix)


def _structured(path: Path) -> Path:
    return path.with_suffix(".jsonl") if path.suffix != ".jsonl" else path.with_suffix(".rules")


# ---------------------------------------------------------------------------
# commands


def _read_selection(path: Path) -> list:
    """Property ids, one per line, optionally suffixed ``@subj`` or ``@obj``."""
    out = []
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        prop, _, direction = line.partition("@")
        try:
            p = kg.eid(prop)
        except ValueError as exc:
            raise UsageError(f"{path}:{n}: {exc}") from exc
        if not p.is_property:
            raise UsageError(f"{path}:{n}: {prop} is not a property id")
        if direction and direction not in ("subj", "obj"):
            raise UsageError(f"{path}:{n}: direction must be subj or obj")
        out.append((p, direction or None))
    return out


def _selection(cfg: JobConfig, instance_of: kg.EntityId) -> list:
    if cfg.properties is not None:
        chosen = _read_selection(cfg.properties)
        if not chosen:
            raise UsageError(f"{cfg.properties} selects no properties")
        return chosen
    try:
        cls = kg.eid(cfg.property_class)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    log.info("scanning %s for properties of class %s", cfg.dump, cls)
    g, _ = kg.load_graph(cfg.dump, [instance_of], strict=cfg.strict, instance_of=instance_of)
    props = sorted(ctx.select_properties_by_class(g, cls))
    if not props:
        raise UsageError(f"no property is an instance of {cls}")
    log.info("class %s selects %d properties", cls, len(props))
    return [(p, None) for p in props]


def _build(problem: str, g: kg.KnowledgeGraph, chosen: list, cfg: JobConfig) -> ctx.FormalContext:
    props = list(dict.fromkeys(p for p, _ in chosen))
    directed = list(dict.fromkeys(
        (p, d) for p, given in chosen for d in ((given,) if given else cfg.directions)))
    if problem == "plain":
        return ctx.build_plain(g, props)
    if problem == "directed":
        return ctx.build_directed(g, directed)
    if problem == "qualified":
        return ctx.build_qualified(g, directed, cfg.qualifier_props, cfg.max_qualifier_values,
                                   include_rank=cfg.include_rank)
    if problem == "classified":
        return ctx.build_classified(g, directed, cfg.class_filter)
    raise UsageError(f"unknown problem {problem!r}")


def cmd_context(cfg: JobConfig) -> int:
    instance_of = kg.eid(cfg.extra.get("instance_of", "P31"))
    chosen = _selection(cfg, instance_of)
    props = list(dict.fromkeys(p for p, _ in chosen))
    translations = None
    if cfg.translations is not None:
        translations = kg.load_translation_map(cfg.translations)
    elif cfg.default_translations:
        translations = kg.DEFAULT_TRANSLATIONS
    started = time.monotonic()
    g, skipped = kg.load_graph(cfg.dump, props, translations, strict=cfg.strict,
                               instance_of=instance_of)
    log.info("loaded %d statements in %.1fs (%d malformed records skipped)",
             len(g), time.monotonic() - started, skipped)
    if cfg.problem == "union":
        parts = [_build(p, g, chosen, cfg) for p in cfg.union_of]
        k = parts[0]
        for part in parts[1:]:
            k = ctx.union_contexts(k, part)
    else:
        k = _build(cfg.problem, g, chosen, cfg)
    if not k.attributes:
        raise UsageError("empty context: no selected property is used in the dump")
    ctx.write_context(k, cfg.out)
    st = ctx.stats(k)
    meta = {
        "dump": cfg.dump, "problem": cfg.problem, "properties": ",".join(str(p) + (f"@{d}" if d else "") for p, d in chosen),
        "directions": ",".join(cfg.directions), "objects": st.objects,
        "attributes": st.attributes, "incidences": st.incidences, "density": st.density,
        "skipped_records": skipped, "instance_of": instance_of,
    }
    if cfg.problem == "union":
        meta["union_of"] = ",".join(cfg.union_of)
    if cfg.problem == "qualified":
        meta["qualifier_props"] = ",".join(cfg.qualifier_props or [])
        meta["max_qualifier_values"] = cfg.max_qualifier_values or ""
        meta["include_rank"] = cfg.include_rank
    if cfg.problem == "classified":
        meta["class_filter"] = ",".join(cfg.class_filter or [])
    if translations is not None:
        meta["translations"] = cfg.translations or "default"
    ctx.write_metadata(_sibling(cfg.out, ".meta"), meta)
    print(f"objects\t{st.objects}\nattributes\t{st.attributes}\n"
          f"incidences\t{st.incidences}\ndensity\t{float(st.density):.3f}")
    return EXIT_OK


def _load_context(path: Path) -> ctx.FormalContext:
    return ctx.read_context(path)


def cmd_base(cfg: JobConfig) -> int:
    k = _load_context(cfg.context)
    deadline = None if cfg.wall_clock_budget is None else time.monotonic() + cfg.wall_clock_budget
    found = []
    for imp in fca.iter_canonical_base(k):
        found.append(imp)
        if len(found) % 1000 == 0:
            log.info("%d implications so far", len(found))
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExceeded(f"wall-clock budget of {cfg.wall_clock_budget}s exhausted "
                                 f"after {len(found)} implications")
    base = fca.base_of(k, found)
    supports = [fca.support(k, imp) for imp in base] if k.objects else [Fraction(0)] * len(base)
    supported = sum(1 for s in supports if s > 0)
    if cfg.only_supported:
        keep = [j for j, s in enumerate(supports) if s > 0]
        base = fca.base_of(k, [base[j] for j in keep])
        supports = [supports[j] for j in keep]
    rules_io.write_base(cfg.out, base, supports)
    rules_io.write_base(_structured(cfg.out), base, supports)
    print(f"canonical_base\t{len(found)}\nsupported\t{supported}")
    return EXIT_OK


def cmd_luxenburger(cfg: JobConfig) -> int:
    k = _load_context(cfg.context)
    rules = assoc.luxenburger_base(k, cfg.minsupp, cfg.minconf)
    attrs = k.attribute_labels
    rules_io.write_rules(cfg.out, rules, attrs)
    rules_io.write_rules(_structured(cfg.out), rules, attrs)
    sys.stdout.write(rules_io.rules_table(rules, attrs))
    print(f"rules\t{len(rules)}")
    return EXIT_OK


def cmd_pac(cfg: JobConfig) -> int:
    k = _load_context(cfg.context)
    params = pac.PacParams(cfg.epsilon, cfg.delta, cfg.seed)
    run = pac.pac_run(k, params)
    supports = [fca.support(k, imp) for imp in run.base] if k.objects else None
    rules_io.write_base(cfg.out, run.base, supports)
    rules_io.write_base(_structured(cfg.out), run.base, supports)
    manifest = run.manifest()
    status = EXIT_OK
    if cfg.validate:
        if len(k.attributes) <= 20:
            dist = pac.horn_distance(run.base, k)
            manifest["horn_distance"] = dist
        else:
            est, err = pac.horn_distance_sampled(run.base, k, 100_000, seed=cfg.seed)
            dist = est
            manifest["horn_distance_estimate"] = est
            manifest["horn_distance_stderr"] = err
        ok = dist <= cfg.epsilon
        manifest["validation"] = "pass" if ok else "fail"
        status = EXIT_OK if ok else EXIT_NO
    ctx.write_metadata(_sibling(cfg.out, ".manifest"), manifest)
    print(f"pac_base\t{len(run.base)}\nequivalence_checks\t{run.equivalence_checks}")
    if "validation" in manifest:
        print(f"validation\t{manifest['validation']}")
    return status


def _parse_query(query: str, index: dict) -> fca.Implication:
    for arrow in ("=>", "->"):
        if arrow in query:
            left, right = query.split(arrow, 1)
            break
    else:
        raise UsageError(f"query must look like 'A,B => C', got {query!r}")

    def side(text):
        mask = 0
        for label in _csv(text):
            if label not in index:
                raise UsageError(f"unknown attribute {label!r}")
            mask |= 1 << index[label]
        return mask

    return fca.Implication(side(left), side(right))


def cmd_entails(cfg: JobConfig) -> int:
    base, _ = rules_io.read_base(cfg.rules)
    attrs = list(base.attributes)
    imp = _parse_query(cfg.query, {a: i for i, a in enumerate(attrs)})
    closed = fca.lin_closure(base, imp.premise)
    missing = imp.conclusion & ~closed
    names = lambda mask: ", ".join(attrs[i] for i in ctx.iter_bits(mask))  # noqa: E731
    if not missing:
        print(f"entailed; closure of premise: {{{names(closed)}}}")
        return EXIT_OK
    print(f"not entailed; missing: {{{names(missing)}}}; closure of premise: {{{names(closed)}}}")
    return EXIT_NO


COMMANDS = {
    "context": cmd_context,
    "base": cmd_base,
    "luxenburger": cmd_luxenburger,
    "pac": cmd_pac,
    "entails": cmd_entails,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    cfg = config_from_args(args)
    try:
        cfg.check()
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"wikifca: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, kg.DumpError, kg.RecordError, ctx.ContextFormatError,
            rules_io.RuleFormatError, BudgetExceeded, ValueError) as exc:
        print(f"wikifca: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
