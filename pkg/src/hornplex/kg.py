"""Knowledge-graph loading, indexing, and the filter index used by filtered evaluation.

Triples are stored with dense integer ids. Dictionaries map surface strings to
ids in first-seen order (train, then valid, then test), so indices are
reproducible for fixed input files. Duplicate triples are kept in the split
lists (they weight the loss) but deduplicated in the filter index.
"""

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

__all__ = [
    "Triple",
    "KnowledgeGraph",
    "TripleFileError",
    "load_triples",
    "build_graph",
    "load_graph",
    "write_triples",
    "write_dictionary",
    "read_dictionary",
]


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


class TripleFileError(ValueError):
    """Malformed triple file or unresolvable symbol; message carries the line number."""


def load_triples(path, dicts=None, frozen=False):
    """Read a TSV triple file (``head<TAB>relation<TAB>tail``, UTF-8, no header).

    ``dicts`` is an optional ``(entity_ids, relation_ids)`` pair of str->int
    maps. Unknown symbols extend the maps in first-seen order unless
    ``frozen`` is set, in which case they raise. Line order is preserved and
    duplicate lines yield duplicate triples.

    Returns ``(triples, (entity_ids, relation_ids))``.
    """
    if dicts is None:
        entity_ids: dict = {}
        relation_ids: dict = {}
    else:
        entity_ids, relation_ids = dicts

    def resolve(table, name, lineno, what):
        idx = table.get(name)
        if idx is None:
            if frozen:
                raise TripleFileError(
                    f"{path}:{lineno}: unknown {what} {name!r} with frozen dictionaries"
                )
            idx = len(table)
            table[name] = idx
        return idx

    triples = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise TripleFileError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            h, r, t = fields
            triples.append(
                Triple(
                    resolve(entity_ids, h, lineno, "entity"),
                    resolve(relation_ids, r, lineno, "relation"),
                    resolve(entity_ids, t, lineno, "entity"),
                )
            )
    return triples, (entity_ids, relation_ids)


@dataclass
class KnowledgeGraph:
    """Immutable-by-convention container for the three splits plus lookup indices.

    ``filter_index`` is the deduplicated union of all splits; ``by_relation``
    maps each relation id to its unique (head, tail) pairs in first-seen order;
    ``tails_of``/``heads_of`` index the filter set by (head, relation) and
    (relation, tail) for filtered ranking.
    """

    entity_ids: dict
    relation_ids: dict
    train: list
    valid: list
    test: list
    filter_index: frozenset = field(repr=False)
    by_relation: dict = field(repr=False)
    tails_of: dict = field(repr=False)
    heads_of: dict = field(repr=False)

    @property
    def num_entities(self):
        return len(self.entity_ids)

    @property
    def num_relations(self):
        return len(self.relation_ids)

    @property
    def entity_names(self):
        names = [None] * len(self.entity_ids)
        for name, idx in self.entity_ids.items():
            names[idx] = name
        return names

    @property
    def relation_names(self):
        names = [None] * len(self.relation_ids)
        for name, idx in self.relation_ids.items():
            names[idx] = name
        return names

    def all_triples(self):
        return self.train + self.valid + self.test


def build_graph(train, valid, test, dicts):
    """Assemble a KnowledgeGraph from split triple lists sharing ``dicts``.

    Raises IndexError if any triple index falls outside the dictionaries.
    """
    entity_ids, relation_ids = dicts
    n, m = len(entity_ids), len(relation_ids)
    splits = (train, valid, test)
    for split in splits:
        for t in split:
            if not (0 <= t.head < n and 0 <= t.tail < n):
                raise IndexError(f"entity index out of bounds in {t}")
            if not (0 <= t.relation < m):
                raise IndexError(f"relation index out of bounds in {t}")

    filter_index = set()
    by_relation: dict = {r: [] for r in range(m)}
    tails_of: dict = {}
    heads_of: dict = {}
    for split in splits:
        for t in split:
            if t in filter_index:
                continue
            filter_index.add(t)
            by_relation[t.relation].append((t.head, t.tail))
            tails_of.setdefault((t.head, t.relation), []).append(t.tail)
            heads_of.setdefault((t.relation, t.tail), []).append(t.head)

    return KnowledgeGraph(
        entity_ids=entity_ids,
        relation_ids=relation_ids,
        train=list(train),
        valid=list(valid),
        test=list(test),
        filter_index=frozenset(filter_index),
        by_relation=by_relation,
        tails_of=tails_of,
        heads_of=heads_of,
    )


def load_graph(train_path, valid_path=None, test_path=None):
    """Load up to three split files into a KnowledgeGraph (shared dictionaries)."""
    train, dicts = load_triples(train_path)
    valid = []
    if valid_path is not None:
        valid, dicts = load_triples(valid_path, dicts)
    test = []
    if test_path is not None:
        test, dicts = load_triples(test_path, dicts)
    return build_graph(train, valid, test, dicts)


def write_triples(path, triples, entity_names, relation_names):
    """Write triples back to the TSV format accepted by ``load_triples``."""
    with open(path, "w", encoding="utf-8") as handle:
        for t in triples:
            handle.write(
                f"{entity_names[t.head]}\t{relation_names[t.relation]}\t{entity_names[t.tail]}\n"
            )


def write_dictionary(path, names: Iterable[str]):
    """Dump a dictionary as ``<index><TAB><surface-string>`` lines."""
    with open(path, "w", encoding="utf-8") as handle:
        for idx, name in enumerate(names):
            handle.write(f"{idx}\t{name}\n")


def read_dictionary(path):
    """Read a dictionary dump back into a str->int map."""
    table = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise TripleFileError(f"{path}:{lineno}: expected 2 fields")
            table[fields[1]] = int(fields[0])
    return table
