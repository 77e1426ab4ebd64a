"""nexuskb: a collaborative knowledge base management system.

Statements written in a frame-style notation are stored in one
specialization hierarchy, edited under a loss-less cooperative protocol,
scored by an argumentation-weighted usefulness measure, and replicated
between nodes through per-term nexus routing.
"""

from .notation import (  # noqa: F401
    ConceptNode,
    EmbeddedStatement,
    FlSyntaxError,
    Formality,
    Modality,
    ParseContext,
    Quantifier,
    QuantKind,
    RelationEdge,
    StatementGraph,
    Term,
    UnbalancedQuote,
    parse,
    parse_many,
    print_statement,
)

__version__ = "0.1.0"
