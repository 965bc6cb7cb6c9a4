"""Training: logistic loss, Horn-rule penalties, N3 regularization, AdaGrad.

The objective per optimizer step is

    sum_batch log(1 + exp(-y * score))                       (logistic)
  + mu * sum_rules lam * ( sum_l [Re(hb_l)/R^k - Re(r_l)/R]_+
                         + sum_l (Im(hb_l)/R^k - Im(r_l)/R)^2 )   (rule penalty)
  + eta * sum_touched_rows sum_l |c_l|^3                     (N3)

where hb is the element-wise complex product of the rule's body relation
vectors, R the relation modulus bound, and lam the rule confidence. The rule
penalty is zero exactly when every rule satisfies the real-part entailment
inequality component-wise and the imaginary parts match. After every AdaGrad
step the embeddings are projected back onto the feasible set, so the
constraints hold exactly throughout training.
"""

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from .evaluation import evaluate
from .kg import Triple
from .model import init_table, project, save_table, load_table

__all__ = [
    "TrainConfig",
    "LabeledBatch",
    "AdagradState",
    "RowGrads",
    "Gradients",
    "EpochRecord",
    "TrainingDiverged",
    "sample_negatives",
    "sample_negatives_batch",
    "logistic_loss",
    "rule_penalty",
    "n3_regularization",
    "adagrad_step",
    "merge_row_grads",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "write_training_log",
    "read_training_log",
]

ADAGRAD_EPS = 1e-10


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    batch_size: int = 100
    epochs: int = 100
    validate_every: int = 20
    mu: float = 0.0
    eta: float = 0.001
    negatives_per_positive: int = 10
    bound: float = 1.0
    dim: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.mu < 0 or self.eta < 0:
            raise ValueError("mu and eta must be non-negative")
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be at least 1")
        if self.bound <= 0:
            raise ValueError("bound must be positive")
        if self.dim < 1:
            raise ValueError("dim must be at least 1")


@dataclass
class LabeledBatch:
    triples: np.ndarray  # (B, 3) int
    labels: np.ndarray  # (B,) in {+1, -1}

    def __post_init__(self):
        self.triples = np.asarray(self.triples, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.triples.shape[0] != self.labels.shape[0]:
            raise ValueError("triples and labels must have equal length")
        if self.labels.size and not np.isin(self.labels, (-1.0, 1.0)).all():
            raise ValueError("labels must be +1 or -1")

    def __len__(self):
        return self.triples.shape[0]


@dataclass
class RowGrads:
    """Gradient blocks for a set of unique rows of one embedding matrix."""

    rows: np.ndarray  # (u,) unique int row indices
    re: np.ndarray  # (u, d)
    im: np.ndarray  # (u, d)

    @classmethod
    def empty(cls, dim):
        return cls(np.empty(0, dtype=np.int64), np.empty((0, dim)), np.empty((0, dim)))


@dataclass
class Gradients:
    entities: RowGrads
    relations: RowGrads


@dataclass
class AdagradState:
    ent_re_acc: np.ndarray
    ent_im_acc: np.ndarray
    rel_re_acc: np.ndarray
    rel_im_acc: np.ndarray
    epsilon: float = ADAGRAD_EPS

    @classmethod
    def zeros(cls, num_entities, num_relations, dim, epsilon=ADAGRAD_EPS):
        return cls(
            np.zeros((num_entities, dim)),
            np.zeros((num_entities, dim)),
            np.zeros((num_relations, dim)),
            np.zeros((num_relations, dim)),
            epsilon,
        )


class TrainingDiverged(RuntimeError):
    pass


def _encoded_filter(kg):
    """Sorted int64 codes of the filter index, cached on the graph."""
    codes = getattr(kg, "_filter_codes", None)
    if codes is None:
        n, m = kg.num_entities, kg.num_relations
        codes = np.fromiter(
            ((t.head * m + t.relation) * n + t.tail for t in kg.filter_index),
            dtype=np.int64,
            count=len(kg.filter_index),
        )
        codes.sort()
        kg._filter_codes = codes
    return codes


def _in_filter(kg, heads, rels, tails):
    codes = _encoded_filter(kg)
    n, m = kg.num_entities, kg.num_relations
    queries = (heads * m + rels) * n + tails
    pos = np.searchsorted(codes, queries)
    pos_clipped = np.minimum(pos, max(codes.size - 1, 0))
    if codes.size == 0:
        return np.zeros(queries.shape, dtype=bool)
    return (pos < codes.size) & (codes[pos_clipped] == queries)


def sample_negatives_batch(kg, positives, count, rng, max_attempts=100):
    """Corrupt each positive ``count`` times: fair coin per negative picks the
    head or tail slot, the slot entity is replaced by a uniform entity that
    differs from the original, and proposals colliding with the filter index
    are resampled up to ``max_attempts`` rounds (then accepted as-is).

    Returns an (B, count, 3) int array. Deterministic for a given ``rng``.
    """
    positives = np.asarray(positives, dtype=np.int64)
    B = positives.shape[0]
    n = kg.num_entities
    heads, rels, tails = positives[:, 0], positives[:, 1], positives[:, 2]

    corrupt_head = rng.integers(0, 2, size=(B, count)).astype(bool)
    orig = np.where(corrupt_head, heads[:, None], tails[:, None])
    ent = orig.copy()

    active = np.ones((B, count), dtype=bool)
    for _ in range(max_attempts):
        idx = np.nonzero(active)
        k = idx[0].size
        if k == 0:
            break
        if n > 1:
            prop = rng.integers(0, n - 1, size=k)
            prop = prop + (prop >= orig[idx])
        else:
            prop = orig[idx]
        ent[idx] = prop
        h = np.where(corrupt_head[idx], prop, heads[idx[0]])
        t = np.where(corrupt_head[idx], tails[idx[0]], prop)
        collides = _in_filter(kg, h, rels[idx[0]], t)
        nxt = np.zeros((B, count), dtype=bool)
        nxt[idx] = collides
        active = nxt
        if n <= 1:
            break

    out = np.empty((B, count, 3), dtype=np.int64)
    out[:, :, 0] = np.where(corrupt_head, ent, heads[:, None])
    out[:, :, 1] = rels[:, None]
    out[:, :, 2] = np.where(corrupt_head, tails[:, None], ent)
    return out


def sample_negatives(kg, positive, count, rng):
    """Negatives for one positive triple; see ``sample_negatives_batch``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    out = sample_negatives_batch(kg, np.asarray([positive]), count, rng)
    return [Triple(int(h), int(r), int(t)) for h, r, t in out[0]]


def _compact(indices, grads_re, grads_im):
    rows, inverse = np.unique(indices, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    starts = np.searchsorted(inverse[order], np.arange(rows.size))
    re = np.add.reduceat(grads_re[order], starts, axis=0)
    im = np.add.reduceat(grads_im[order], starts, axis=0)
    return RowGrads(rows, re, im)


def logistic_loss(table, batch):
    """Sum of log(1 + exp(-y * score)) over the batch, with gradients for the
    touched entity and relation rows. Stable for large |y * score|."""
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    h, r, t = batch.triples[:, 0], batch.triples[:, 1], batch.triples[:, 2]
    a, b = table.ent_re[h], table.ent_im[h]
    c, d = table.rel_re[r], table.rel_im[r]
    e, f = table.ent_re[t], table.ent_im[t]

    phi = np.einsum("ij,ij->i", a * c - b * d, e) + np.einsum(
        "ij,ij->i", a * d + b * c, f
    )
    z = batch.labels * phi
    exp_neg = np.exp(-np.abs(z))
    loss = float(np.sum(np.maximum(-z, 0.0) + np.log1p(exp_neg)))
    sigma_neg = np.where(z >= 0, exp_neg / (1.0 + exp_neg), 1.0 / (1.0 + exp_neg))
    coeff = (-batch.labels * sigma_neg)[:, None]

    g_h_re = coeff * (c * e + d * f)
    g_h_im = coeff * (c * f - d * e)
    g_r_re = coeff * (a * e + b * f)
    g_r_im = coeff * (a * f - b * e)
    g_t_re = coeff * (a * c - b * d)
    g_t_im = coeff * (a * d + b * c)

    entities = _compact(
        np.concatenate([h, t]),
        np.concatenate([g_h_re, g_t_re]),
        np.concatenate([g_h_im, g_t_im]),
    )
    relations = _compact(r, g_r_re, g_r_im)
    return loss, Gradients(entities, relations)


def _cmul(a_re, a_im, b_re, b_im):
    return a_re * b_re - a_im * b_im, a_re * b_im + a_im * b_re


def body_product(table, body):
    """Element-wise complex product of the body relation vectors."""
    hb_re = table.rel_re[body[0]].copy()
    hb_im = table.rel_im[body[0]].copy()
    for rel in body[1:]:
        hb_re, hb_im = _cmul(hb_re, hb_im, table.rel_re[rel], table.rel_im[rel])
    return hb_re, hb_im


def rule_penalty(table, rules):
    """Hinge + squared penalty for a collection of Horn rules.

    Per rule with confidence lam, body product hb and head r:
      lam * sum_l max(0, Re(hb_l)/R^k - Re(r_l)/R)      (real part, hinge)
    + lam * sum_l (Im(hb_l)/R^k - Im(r_l)/R)^2          (imaginary part)

    The caller applies the global coefficient mu. The subgradient of the
    hinge at zero is taken as zero, so exactly satisfied rules contribute no
    gradient. Returns (loss, RowGrads over the touched relation rows).
    """
    dim = table.dim
    R = table.bound
    loss = 0.0
    acc: dict = {}

    def add(rel, d_re, d_im):
        slot = acc.get(rel)
        if slot is None:
            acc[rel] = [d_re.copy(), d_im.copy()]
        else:
            slot[0] += d_re
            slot[1] += d_im

    for rule in rules:
        k = rule.length
        rk = R**k
        lam = rule.confidence
        body = rule.body

        # prefix[i] = product of body[:i]; suffix[i] = product of body[i:]
        pre_re = np.empty((k + 1, dim))
        pre_im = np.empty((k + 1, dim))
        suf_re = np.empty((k + 1, dim))
        suf_im = np.empty((k + 1, dim))
        pre_re[0], pre_im[0] = 1.0, 0.0
        suf_re[k], suf_im[k] = 1.0, 0.0
        for i in range(k):
            pre_re[i + 1], pre_im[i + 1] = _cmul(
                pre_re[i], pre_im[i], table.rel_re[body[i]], table.rel_im[body[i]]
            )
        for i in reversed(range(k)):
            suf_re[i], suf_im[i] = _cmul(
                table.rel_re[body[i]], table.rel_im[body[i]], suf_re[i + 1], suf_im[i + 1]
            )
        hb_re, hb_im = pre_re[k], pre_im[k]

        u = hb_re / rk - table.rel_re[rule.head] / R
        v = hb_im / rk - table.rel_im[rule.head] / R
        active = (u > 0).astype(np.float64)
        loss += lam * (float(np.sum(u * active)) + float(np.sum(v * v)))

        add(rule.head, lam * (-active / R), lam * (-2.0 * v / R))
        for j in range(k):
            c_re, c_im = _cmul(pre_re[j], pre_im[j], suf_re[j + 1], suf_im[j + 1])
            add(
                body[j],
                lam * (active * c_re + 2.0 * v * c_im) / rk,
                lam * (-active * c_im + 2.0 * v * c_re) / rk,
            )

    if not acc:
        return 0.0, RowGrads.empty(dim)
    rows = np.array(sorted(acc), dtype=np.int64)
    re = np.stack([acc[r][0] for r in rows])
    im = np.stack([acc[r][1] for r in rows])
    return loss, RowGrads(rows, re, im)


def n3_regularization(table, ent_rows, rel_rows):
    """Sum of cubed component moduli over the given rows; the gradient of
    |c|^3 is 3|c|*(re, im), zero at the origin. The caller applies eta."""
    ent_rows = np.asarray(ent_rows, dtype=np.int64)
    rel_rows = np.asarray(rel_rows, dtype=np.int64)
    loss = 0.0
    blocks = []
    for rows, re_arr, im_arr in (
        (ent_rows, table.ent_re, table.ent_im),
        (rel_rows, table.rel_re, table.rel_im),
    ):
        re, im = re_arr[rows], im_arr[rows]
        mod = np.hypot(re, im)
        loss += float(np.sum(mod**3))
        blocks.append(RowGrads(rows, 3.0 * mod * re, 3.0 * mod * im))
    return loss, Gradients(blocks[0], blocks[1])


def merge_row_grads(dim, parts):
    """Sum scaled RowGrads blocks: ``parts`` is a list of (RowGrads, scale)."""
    parts = [(g, s) for g, s in parts if g is not None and g.rows.size and s != 0.0]
    if not parts:
        return RowGrads.empty(dim)
    rows, inverse = np.unique(np.concatenate([g.rows for g, _ in parts]), return_inverse=True)
    re = np.zeros((rows.size, dim))
    im = np.zeros((rows.size, dim))
    offset = 0
    for g, s in parts:
        sl = inverse[offset : offset + g.rows.size]
        re[sl] += g.re * s
        im[sl] += g.im * s
        offset += g.rows.size
    return RowGrads(rows, re, im)


def adagrad_step(table, grads, state, lr):
    """Sparse AdaGrad: per touched coordinate, acc += g^2 then
    p -= lr * g / (sqrt(acc) + eps)."""
    updates = (
        (grads.entities, table.ent_re, table.ent_im, state.ent_re_acc, state.ent_im_acc),
        (grads.relations, table.rel_re, table.rel_im, state.rel_re_acc, state.rel_im_acc),
    )
    for g, p_re, p_im, acc_re, acc_im in updates:
        if g is None or g.rows.size == 0:
            continue
        rows = g.rows
        acc_re[rows] += g.re * g.re
        p_re[rows] -= lr * g.re / (np.sqrt(acc_re[rows]) + state.epsilon)
        acc_im[rows] += g.im * g.im
        p_im[rows] -= lr * g.im / (np.sqrt(acc_im[rows]) + state.epsilon)


@dataclass
class EpochRecord:
    epoch: int
    logistic: float
    rule_penalty: float
    n3: float
    total: float
    valid_mrr: float | None = None


def train(kg, rules, config: TrainConfig, step_callback=None):
    """Full training loop; returns (table, [EpochRecord, ...], AdagradState).

    Per epoch the train triples are shuffled (seeded), split into batches,
    each batch is extended with sampled negatives, and one AdaGrad step plus
    projection is taken on logistic + mu*rule_penalty + eta*N3. N3 covers the
    rows touched by the batch. ``step_callback(table, epoch, step)`` runs
    after each projection. Deterministic for fixed inputs and seed.
    """
    rules = list(rules)
    ss = np.random.SeedSequence(config.seed)
    init_ss, loop_ss = ss.spawn(2)
    table = init_table(
        kg.num_entities, kg.num_relations, config.dim, config.bound, seed=init_ss
    )
    state = AdagradState.zeros(kg.num_entities, kg.num_relations, config.dim)
    rng = np.random.default_rng(loop_ss)

    train_arr = np.asarray(kg.train, dtype=np.int64).reshape(-1, 3)
    num_train = train_arr.shape[0]
    records = []

    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(num_train)
        sums = {"logistic": 0.0, "rule": 0.0, "n3": 0.0}
        for step, start in enumerate(range(0, num_train, config.batch_size)):
            pos = train_arr[perm[start : start + config.batch_size]]
            negs = sample_negatives_batch(
                kg, pos, config.negatives_per_positive, rng
            ).reshape(-1, 3)
            batch = LabeledBatch(
                np.concatenate([pos, negs]),
                np.concatenate([np.ones(pos.shape[0]), -np.ones(negs.shape[0])]),
            )

            l_loss, l_grads = logistic_loss(table, batch)
            if config.mu > 0 and rules:
                r_loss, r_grads = rule_penalty(table, rules)
            else:
                r_loss, r_grads = 0.0, None
            if config.eta > 0:
                # N3 covers every row this step touches: batch rows, plus the
                # rule-touched relation rows when the penalty is active.
                ent_rows = np.unique(batch.triples[:, (0, 2)])
                if r_grads is not None and r_grads.rows.size:
                    rel_rows = np.unique(
                        np.concatenate([batch.triples[:, 1], r_grads.rows])
                    )
                else:
                    rel_rows = np.unique(batch.triples[:, 1])
                n_loss, n_grads = n3_regularization(table, ent_rows, rel_rows)
            else:
                n_loss, n_grads = 0.0, None

            total = l_loss + config.mu * r_loss + config.eta * n_loss
            if not np.isfinite(total):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch} batch {step}: "
                    f"logistic={l_loss} rule_penalty={r_loss} n3={n_loss}"
                )

            merged = Gradients(
                entities=merge_row_grads(
                    config.dim,
                    [
                        (l_grads.entities, 1.0),
                        (n_grads.entities if n_grads else None, config.eta),
                    ],
                ),
                relations=merge_row_grads(
                    config.dim,
                    [
                        (l_grads.relations, 1.0),
                        (r_grads, config.mu),
                        (n_grads.relations if n_grads else None, config.eta),
                    ],
                ),
            )
            adagrad_step(table, merged, state, config.learning_rate)
            project(table)
            if step_callback is not None:
                step_callback(table, epoch, step)

            sums["logistic"] += l_loss
            sums["rule"] += r_loss
            sums["n3"] += n_loss

        valid_mrr = None
        if config.validate_every >= 1 and epoch % config.validate_every == 0 and kg.valid:
            valid_mrr = evaluate(table, kg, kg.valid).mrr
        records.append(
            EpochRecord(
                epoch=epoch,
                logistic=sums["logistic"],
                rule_penalty=sums["rule"],
                n3=sums["n3"],
                total=sums["logistic"] + config.mu * sums["rule"] + config.eta * sums["n3"],
                valid_mrr=valid_mrr,
            )
        )
    return table, records, state


def save_checkpoint(path, table, state):
    """Embedding dump followed by the AdaGrad accumulator arrays."""
    with open(path, "wb") as handle:
        save_table(handle, table)
        handle.write(struct.pack("<d", state.epsilon))
        for arr in (state.ent_re_acc, state.ent_im_acc, state.rel_re_acc, state.rel_im_acc):
            handle.write(np.ascontiguousarray(arr, dtype=np.float64).tobytes())


def load_checkpoint(path):
    with open(path, "rb") as handle:
        table = load_table(handle)
        (epsilon,) = struct.unpack("<d", handle.read(8))
        n, m, d = table.num_entities, table.num_relations, table.dim

        def read_array(rows):
            buf = handle.read(rows * d * 8)
            if len(buf) != rows * d * 8:
                raise ValueError("truncated checkpoint")
            return np.frombuffer(buf, dtype=np.float64).reshape(rows, d).copy()

        state = AdagradState(
            read_array(n), read_array(n), read_array(m), read_array(m), epsilon
        )
    return table, state


def write_training_log(path, records, config_echo=None):
    """Newline-delimited JSON: an optional config record then one per epoch."""
    with open(path, "w", encoding="utf-8") as handle:
        if config_echo is not None:
            handle.write(json.dumps({"config": config_echo}, sort_keys=True) + "\n")
        for rec in records:
            handle.write(json.dumps(asdict(rec), sort_keys=True) + "\n")


def read_training_log(path):
    records = []
    config = None
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "config" in obj:
                config = obj["config"]
            else:
                records.append(EpochRecord(**obj))
    return records, config
