"""Ontology alignment toolkit.

Predicts equivalence mappings between the classes of two ontologies by
combining a sub-word inverted index for candidate selection, pluggable
label-pair scorers (exact match, edit similarity, a remote synonym
classifier), and structure/logic-based mapping extension and repair.
"""

__version__ = "0.1.0"

from ontomatch.ontology import (  # noqa: F401
    Ontology,
    OntologyClass,
    MappingSet,
    ScoredMapping,
    preprocess_label,
    load_ontology,
    load_mappings,
    save_mappings,
)
