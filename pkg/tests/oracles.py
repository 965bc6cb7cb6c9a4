"""Independent slow-path oracles used to cross-check the package's fast paths.

These deliberately avoid the indices and vectorized formulas of the library:
membership is a linear scan over the raw split lists, ranking materializes
and sorts whole candidate lists, and rule confidence enumerates entity tuples
exhaustively.
"""

from hornplex.kg import Triple
from hornplex.model import score


def naive_contains(kg, triple):
    """Linear scan over the concatenated split lists."""
    for split in (kg.train, kg.valid, kg.test):
        for t in split:
            if t == triple:
                return True
    return False


def brute_force_filtered_rank(table, kg, triple, side):
    """Materialize, filter, and sort the full candidate list; ties scored as
    the mean of the optimistic and pessimistic placement."""
    known = set(kg.train) | set(kg.valid) | set(kg.test)
    true_entity = triple.tail if side == "tail" else triple.head
    kept_scores = []
    for c in range(kg.num_entities):
        if side == "tail":
            cand = Triple(triple.head, triple.relation, c)
        else:
            cand = Triple(c, triple.relation, triple.tail)
        if c != true_entity and cand in known:
            continue
        kept_scores.append((score(table, cand), c))

    s_true = next(s for s, c in kept_scores if c == true_entity)
    ordered = sorted((s for s, _ in kept_scores), reverse=True)
    optimistic = 1 + sum(1 for s in ordered if s > s_true)
    pessimistic = sum(1 for s in ordered if s >= s_true)
    return (optimistic + pessimistic) / 2.0


def brute_force_report(table, kg, split, sides=("head", "tail"), hits=(1, 3, 10)):
    ranks = []
    for t in split:
        for side in sides:
            ranks.append(brute_force_filtered_rank(table, kg, t, side))
    mrr = sum(1.0 / r for r in ranks) / len(ranks)
    hits_at = {k: sum(1 for r in ranks if r <= k) / len(ranks) for k in hits}
    return ranks, mrr, hits_at


def enumerate_confidence(kg, rule):
    """Exhaustive enumeration of body groundings over all entity tuples."""
    known = set(kg.train) | set(kg.valid) | set(kg.test)
    n = kg.num_entities
    chains = [(x,) for x in range(n)]
    for rel in rule.body:
        chains = [
            chain + (z,)
            for chain in chains
            for z in range(n)
            if Triple(chain[-1], rel, z) in known
        ]
    if not chains:
        return None
    supported = sum(
        1 for chain in chains if Triple(chain[0], rule.head, chain[-1]) in known
    )
    return supported / len(chains)
