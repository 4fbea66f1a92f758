"""Formal contexts and implication bases from Wikidata-style knowledge graphs."""

from .context import FormalContext, build_classified, build_directed, build_plain, build_qualified
from .fca import Implication, ImplicationBase, canonical_base, closure, lin_closure
from .kg import EntityId, KnowledgeGraph, Statement, build_graph, parse_dump

__version__ = "0.1.0"
