"""In-memory ontology model: classes, labels, hierarchy, and mapping sets.

Two input formats are supported: a normalized ontology JSON (the canonical
format, see README) and a small RDF/XML subset that extracts label-style
annotations and subclass links between named classes.  Labels are always
run through :func:`preprocess_label` on load.
"""

from __future__ import annotations

import json
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, Literal

from ontomatch.errors import CycleError, ParseError, UnknownFormatError

log = logging.getLogger(__name__)

RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#"
RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
OWL_NS = "http://www.w3.org/2002/07/owl#"

DEFAULT_LABEL_PROPERTIES = (RDFS_LABEL + "label",)

_WS_RUN = re.compile(r"\s+")

Provenance = Literal["predicted", "extended", "given"]
MappingKind = Literal["reference-eq", "reference-ignored", "train", "val", "test", "output"]


def preprocess_label(raw: str) -> str:
    """Normalize a raw label: lowercase, underscores to spaces, collapsed whitespace."""
    return _WS_RUN.sub(" ", raw.lower().replace("_", " ")).strip()


@dataclass
class OntologyClass:
    """A named class with its preprocessed label set and direct hierarchy links."""

    id: int
    iri: str
    labels: list[str] = field(default_factory=list)
    parents: set[int] = field(default_factory=set)
    children: set[int] = field(default_factory=set)
    disjoint: set[int] = field(default_factory=set)
    declared: bool = True


class Ontology:
    """Immutable-after-load collection of classes indexed by dense id and by IRI."""

    def __init__(self, name: str):
        self.name = name
        self.classes: list[OntologyClass] = []
        self.iri_index: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self.classes)

    def add_class(self, iri: str, declared: bool = True) -> OntologyClass:
        if iri in self.iri_index:
            cls = self.classes[self.iri_index[iri]]
            cls.declared = cls.declared or declared
            return cls
        cls = OntologyClass(id=len(self.classes), iri=iri, declared=declared)
        self.classes.append(cls)
        self.iri_index[iri] = cls.id
        return cls

    def by_iri(self, iri: str) -> OntologyClass:
        return self.classes[self.iri_index[iri]]

    def labeled_ids(self) -> list[int]:
        """Ids of classes eligible for matching (non-empty label set), ascending."""
        return [c.id for c in self.classes if c.labels]

    def unlabeled_ids(self) -> list[int]:
        return [c.id for c in self.classes if not c.labels]

    def iri_of(self, cid: int) -> str:
        return self.classes[cid].iri

    def labels_of(self, cid: int) -> list[str]:
        return self.classes[cid].labels

    def siblings(self, cid: int) -> set[int]:
        """Classes other than ``cid`` that share at least one direct parent with it."""
        if cid < 0 or cid >= len(self.classes):
            raise KeyError(f"unknown class id {cid}")
        out: set[int] = set()
        for pid in self.classes[cid].parents:
            out.update(self.classes[pid].children)
        out.discard(cid)
        return out

    def disjoint_pairs(self, use_siblings: bool = True) -> set[tuple[int, int]]:
        """Assumed-disjoint class pairs: explicit declarations plus (optionally) siblings."""
        pairs: set[tuple[int, int]] = set()
        for c in self.classes:
            for d in c.disjoint:
                pairs.add((min(c.id, d), max(c.id, d)))
        if use_siblings:
            for c in self.classes:
                kids = sorted(c.children)
                for i in range(len(kids)):
                    for j in range(i + 1, len(kids)):
                        pairs.add((kids[i], kids[j]))
        return pairs

    def _finalize(self, path: str | None = None) -> None:
        """Derive child links, verify acyclicity, warn on unlabeled classes."""
        for c in self.classes:
            for pid in c.parents:
                self.classes[pid].children.add(c.id)
        cycle = self._find_cycle()
        if cycle is not None:
            raise CycleError([self.classes[cid].iri for cid in cycle])
        n_unlabeled = len(self.unlabeled_ids())
        if n_unlabeled:
            log.warning(
                "%s: %d class(es) have no labels and are excluded from prediction",
                path or self.name, n_unlabeled,
            )

    def _find_cycle(self) -> list[int] | None:
        """Iterative DFS over parent links; returns one cycle as a list of ids."""
        WHITE, GRAY, BLACK = 0, 1, 2
        color = [WHITE] * len(self.classes)
        for root in range(len(self.classes)):
            if color[root] != WHITE:
                continue
            stack: list[tuple[int, Iterable[int]]] = [(root, iter(sorted(self.classes[root].parents)))]
            color[root] = GRAY
            trail = [root]
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    if color[nxt] == GRAY:
                        return trail[trail.index(nxt):]
                    if color[nxt] == WHITE:
                        color[nxt] = GRAY
                        stack.append((nxt, iter(sorted(self.classes[nxt].parents))))
                        trail.append(nxt)
                        advanced = True
                        break
                if not advanced:
                    color[node] = BLACK
                    stack.pop()
                    trail.pop()
        return None


def load_ontology(path: str, label_properties: Iterable[str] = DEFAULT_LABEL_PROPERTIES) -> Ontology:
    """Load an ontology from normalized JSON or the supported RDF/XML subset."""
    with open(path, "rb") as f:
        head = f.read(512).lstrip()
    if head.startswith(b"{"):
        return _load_json(path)
    if head.startswith(b"<"):
        return _load_rdfxml(path, tuple(label_properties))
    raise UnknownFormatError(f"{path}: not normalized ontology JSON or RDF/XML")


def _ingest_class(onto: Ontology, iri: str, raw_labels: Iterable[str], parent_iris: Iterable[str],
                  disjoint_iris: Iterable[str] = ()) -> None:
    cls = onto.add_class(iri, declared=True)
    for raw in raw_labels:
        lab = preprocess_label(raw)
        if lab and lab not in cls.labels:
            cls.labels.append(lab)
    for piri in parent_iris:
        parent = onto.add_class(piri, declared=False)
        cls.parents.add(parent.id)
    for diri in disjoint_iris:
        other = onto.add_class(diri, declared=False)
        cls.disjoint.add(other.id)
        other.disjoint.add(cls.id)


def _load_json(path: str) -> Ontology:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path=path, line=e.lineno, column=e.colno) from e
    if not isinstance(doc, dict) or "classes" not in doc:
        raise ParseError("expected top-level object with a 'classes' array", path=path)
    onto = Ontology(name=str(doc.get("name", path)))
    declared: set[str] = set()
    for i, entry in enumerate(doc["classes"]):
        if not isinstance(entry, dict) or "iri" not in entry:
            raise ParseError(f"classes[{i}]: expected object with an 'iri'", path=path)
        iri = entry["iri"]
        if iri in declared:
            raise ParseError(f"classes[{i}]: duplicate declaration of {iri}", path=path)
        declared.add(iri)
        _ingest_class(
            onto, iri,
            entry.get("labels", []),
            entry.get("parents", []),
            entry.get("disjoint", []),
        )
    for c in onto.classes:
        if c.iri not in declared:
            log.warning("%s: %s referenced but never declared", path, c.iri)
    onto._finalize(path)
    return onto


def _load_rdfxml(path: str, label_properties: tuple[str, ...]) -> Ontology:
    try:
        tree = ET.parse(path)
    except ET.ParseError as e:
        line, col = e.position
        raise ParseError(e.msg.split(":")[0], path=path, line=line, column=col) from e
    root = tree.getroot()
    if root.tag != f"{{{RDF_NS}}}RDF":
        raise UnknownFormatError(f"{path}: root element is not rdf:RDF")
    onto = Ontology(name=path)
    about_attr = f"{{{RDF_NS}}}about"
    resource_attr = f"{{{RDF_NS}}}resource"
    subclass_tag = f"{{{RDFS_LABEL}}}subClassOf"
    # ElementTree expands QNames to {namespace}local; a property IRI ns#local
    # therefore appears as the tag {ns#}local.
    label_tags: set[str] = set()
    for p in label_properties:
        sep = "#" if "#" in p else "/"
        ns, local = p.rsplit(sep, 1)
        label_tags.add(f"{{{ns}{sep}}}{local}")
    for elem in root.findall(f"{{{OWL_NS}}}Class") + root.findall(f"{{{RDFS_LABEL}}}Class"):
        iri = elem.get(about_attr)
        if iri is None:
            continue  # blank node; out of the supported subset
        labels, parents = [], []
        for child in elem:
            if child.tag in label_tags and child.text:
                labels.append(child.text)
            elif child.tag == subclass_tag:
                parent_iri = child.get(resource_attr)
                if parent_iri:
                    parents.append(parent_iri)
        _ingest_class(onto, iri, labels, parents)
    if not onto.classes:
        log.warning("%s: no named classes found in RDF/XML input", path)
    onto._finalize(path)
    return onto


def save_ontology_json(onto: Ontology, path: str) -> None:
    """Write an ontology back out in the normalized JSON format."""
    classes = []
    for c in onto.classes:
        entry: dict = {"iri": c.iri, "labels": list(c.labels),
                       "parents": sorted(onto.iri_of(p) for p in c.parents)}
        if c.disjoint:
            entry["disjoint"] = sorted(onto.iri_of(d) for d in c.disjoint)
        classes.append(entry)
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"name": onto.name, "classes": classes}, f, indent=2, sort_keys=True)
        f.write("\n")


@dataclass(frozen=True)
class ScoredMapping:
    """A cross-ontology class pair with an equivalence score in [0, 1]."""

    source: int
    target: int
    score: float
    provenance: Provenance = "given"

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"mapping score {self.score} outside [0, 1]")

    def pair(self) -> tuple[int, int]:
        return (self.source, self.target)


class MappingSet:
    """Ordered, duplicate-free collection of scored mappings of one kind.

    Orientation convention: ``source`` always indexes the source ontology O
    and ``target`` the target ontology O', regardless of which direction the
    mappings were predicted in.
    """

    def __init__(self, kind: MappingKind = "output", entries: Iterable[ScoredMapping] = ()):
        self.kind = kind
        self.entries: list[ScoredMapping] = []
        self._pairs: set[tuple[int, int]] = set()
        for m in entries:
            self.add(m)

    def add(self, m: ScoredMapping) -> bool:
        """Append unless the (source, target) pair is already present."""
        if m.pair() in self._pairs:
            return False
        self.entries.append(m)
        self._pairs.add(m.pair())
        return True

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, pair: tuple[int, int]) -> bool:
        return pair in self._pairs

    def pairs(self) -> set[tuple[int, int]]:
        return set(self._pairs)

    def score_of(self, pair: tuple[int, int]) -> float:
        for m in self.entries:
            if m.pair() == pair:
                return m.score
        raise KeyError(pair)

    def with_kind(self, kind: MappingKind) -> "MappingSet":
        return MappingSet(kind, self.entries)


def load_mappings(path: str, o: Ontology, o2: Ontology, kind: MappingKind = "output") -> MappingSet:
    """Read a mapping TSV; unresolvable rows are skipped and counted, duplicates dropped."""
    ms = MappingSet(kind)
    skipped = 0
    n_rows = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) not in (2, 3):
                raise ParseError(f"expected 2 or 3 tab-separated columns, got {len(cols)}",
                                 path=path, line=lineno)
            n_rows += 1
            src_iri, tgt_iri = cols[0], cols[1]
            if src_iri not in o.iri_index or tgt_iri not in o2.iri_index:
                skipped += 1
                continue
            if len(cols) == 3:
                try:
                    score = float(cols[2])
                except ValueError as e:
                    raise ParseError(f"bad score {cols[2]!r}", path=path, line=lineno) from e
            else:
                score = 1.0
            ms.add(ScoredMapping(o.iri_index[src_iri], o2.iri_index[tgt_iri], score, "given"))
    if skipped:
        log.warning("%s: skipped %d row(s) with unresolvable IRIs", path, skipped)
    if n_rows == 0:
        log.warning("%s: mapping file contains no rows", path)
    ms.skipped_rows = skipped  # type: ignore[attr-defined]
    return ms


def save_mappings(ms: MappingSet, o: Ontology, o2: Ontology, path: str) -> None:
    """Write a mapping TSV in canonical order (source IRI, then target IRI)."""
    rows = sorted(
        (o.iri_of(m.source), o2.iri_of(m.target), m.score) for m in ms
    )
    with open(path, "w", encoding="utf-8") as f:
        for src_iri, tgt_iri, score in rows:
            f.write(f"{src_iri}\t{tgt_iri}\t{score!r}\n")
