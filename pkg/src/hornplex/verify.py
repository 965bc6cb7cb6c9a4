"""Numerical verification of the per-dimension rule-injection inequalities.

The chain-composition claim states that when relation embeddings satisfy the
entailment construction (real part of the head at least the normalized body
product, imaginary parts equal) and entities realize the body triples with
aligned phases (each body step's phase sum is zero), the per-dimension score
of the head triple dominates the product of the body scores. Two
normalizations of that product appear in the source material -- by 2R for the
two-step composition form and by R for the general chain form -- and they do
not coincide; each checker reports its own form as primary and the other as
an informational count.

The checkers are randomized but seeded, so reports are reproducible. The
unrestricted search drops the phase alignment and reports how often the
inequality fails outside the proof regime (informational only). Negative
controls deliberately break the head construction to prove the checkers are
not vacuous.
"""

from dataclasses import dataclass

import numpy as np

from .model import project_relation_components

__all__ = [
    "TheoremReport",
    "check_sufficient_condition_composition",
    "check_sufficient_condition_horn",
    "counterexample_search_unrestricted",
    "numerical_gradient",
    "gradient_check",
    "format_report",
    "write_reports",
    "default_suite",
]

TOLERANCE = 1e-9


@dataclass
class TheoremReport:
    kind: str
    k: int
    d: int
    bound: float
    seed: int
    trials: int
    skipped: int
    violations: int
    violations_alt: int
    max_violation: float
    tolerance: float = TOLERANCE

    @property
    def checked(self):
        return self.trials - self.skipped

    @property
    def ok(self):
        return self.violations == 0


def _cmul(a_re, a_im, b_re, b_im):
    return a_re * b_re - a_im * b_im, a_re * b_im + a_im * b_re


def _phi(z0_re, z0_im, r_re, r_im, z1_re, z1_im):
    """Re(z0 * r * conj(z1)) element-wise."""
    p_re, p_im = _cmul(z0_re, z0_im, r_re, r_im)
    return p_re * z1_re + p_im * z1_im


def _entity_max_modulus(theta):
    """Largest modulus keeping both components of exp(i*theta) within [0, 1]."""
    return 1.0 / np.maximum(np.cos(theta), np.sin(theta))


def _sample_chain(rng, trials, k, d, bound):
    """Feasible body relations whose per-dimension phases sum to at most pi/2.

    The budgeted phases guarantee that entities realizing all body triples
    with aligned phases exist inside the entity box, which is the regime the
    chain inequality is proved in.
    """
    theta_total = rng.uniform(0.0, np.pi / 2.0, size=(trials, d))
    if k == 1:
        weights = np.ones((trials, d, 1))
    else:
        weights = rng.dirichlet(np.ones(k), size=(trials, d))
    theta_r = weights * theta_total[:, :, None]  # (trials, d, k)
    moduli = rng.uniform(0.0, bound, size=(trials, d, k))
    r_re = moduli * np.cos(theta_r)
    r_im = moduli * np.sin(theta_r)
    return theta_total, theta_r, r_re, r_im


def _construct_head(rng, r_re, r_im, bound, negative_control):
    """Head relation from the body product: real part gets non-negative slack
    (capped at the bound), imaginary part matches exactly. Dimensions the
    projection has to alter (modulus above the bound) invalidate the trial."""
    trials, d, k = r_re.shape
    hb_re = r_re[:, :, 0].copy()
    hb_im = r_im[:, :, 0].copy()
    for i in range(1, k):
        hb_re, hb_im = _cmul(hb_re, hb_im, r_re[:, :, i], r_im[:, :, i])
    # normalized product R * prod(r_i / R)
    hat_re = hb_re / bound ** (k - 1)
    hat_im = hb_im / bound ** (k - 1)

    if negative_control:
        head_re = np.zeros_like(hat_re)
    else:
        # Random non-negative slack, clipped to the modulus headroom so the
        # construction stays feasible (projection then only bites on
        # floating-point edge cases, which are skipped).
        headroom = np.maximum(np.sqrt(np.maximum(bound**2 - hat_im**2, 0.0)) - hat_re, 0.0)
        slack = np.minimum(rng.uniform(0.0, bound / 10.0, size=(trials, d)), headroom)
        head_re = np.minimum(bound, hat_re + slack)
    head_im = hat_im.copy()

    projected_re = head_re.copy()
    projected_im = head_im.copy()
    project_relation_components(projected_re, projected_im, bound)
    broken = (projected_re != head_re) | (projected_im != head_im)
    skip_trial = broken.any(axis=1)
    return hat_re, hat_im, projected_re, projected_im, skip_trial


def _aligned_entities(rng, theta_total, theta_r, cap_intermediate):
    """Entity chain z_0..z_k with telescoping phases: each body step's phase
    sum r_i + z_{i-1} - z_i is exactly zero. Intermediate moduli can be capped
    at 1 (the regime in which the R-normalized chain product is dominated)."""
    trials, d, k = theta_r.shape
    theta_z0 = rng.uniform(0.0, 1.0, size=(trials, d)) * (np.pi / 2.0 - theta_total)
    theta_z = np.empty((trials, d, k + 1))
    theta_z[:, :, 0] = theta_z0
    theta_z[:, :, 1:] = theta_z0[:, :, None] + np.cumsum(theta_r, axis=2)

    max_mod = _entity_max_modulus(theta_z)
    if cap_intermediate and k > 1:
        max_mod[:, :, 1:k] = np.minimum(max_mod[:, :, 1:k], 1.0)
    moduli = rng.uniform(0.0, 1.0, size=(trials, d, k + 1)) * max_mod
    return moduli * np.cos(theta_z), moduli * np.sin(theta_z)


def _body_scores(z_re, z_im, r_re, r_im):
    k = r_re.shape[2]
    return np.stack(
        [
            _phi(
                z_re[:, :, i],
                z_im[:, :, i],
                r_re[:, :, i],
                r_im[:, :, i],
                z_re[:, :, i + 1],
                z_im[:, :, i + 1],
            )
            for i in range(k)
        ],
        axis=2,
    )  # (trials, d, k)


def _finish(kind, k, d, bound, seed, trials, skip, excess, excess_alt, tolerance):
    keep = ~skip
    viol_dim = (excess > tolerance) & keep[:, None]
    viol_alt_dim = (excess_alt > tolerance) & keep[:, None]
    violations = int(viol_dim.any(axis=1).sum())
    max_violation = float(excess[viol_dim].max()) if violations else 0.0
    return TheoremReport(
        kind=kind,
        k=k,
        d=d,
        bound=bound,
        seed=seed,
        trials=trials,
        skipped=int(skip.sum()),
        violations=violations,
        violations_alt=int(viol_alt_dim.any(axis=1).sum()),
        max_violation=max_violation,
        tolerance=tolerance,
    )


def check_sufficient_condition_composition(
    d, bound=1.0, trials=10000, seed=0, negative_control=False, tolerance=TOLERANCE
):
    """Two-step chain check: |phi_1/(2R)| * |phi_2/(2R)| <= |phi_3/(2R)| + tol
    per dimension, with the head satisfying the entailment construction and
    phase-aligned entities. The R-normalized variant is counted as
    ``violations_alt``."""
    rng = np.random.default_rng(seed)
    k = 2
    theta_total, theta_r, r_re, r_im = _sample_chain(rng, trials, k, d, bound)
    _, _, head_re, head_im, skip = _construct_head(rng, r_re, r_im, bound, negative_control)
    z_re, z_im = _aligned_entities(rng, theta_total, theta_r, cap_intermediate=False)

    phi_body = _body_scores(z_re, z_im, r_re, r_im)
    phi_head = _phi(
        z_re[:, :, 0], z_im[:, :, 0], head_re, head_im, z_re[:, :, k], z_im[:, :, k]
    )

    lhs = np.abs(phi_body[:, :, 0] / (2 * bound)) * np.abs(phi_body[:, :, 1] / (2 * bound))
    rhs = np.abs(phi_head / (2 * bound))
    lhs_alt = np.abs(phi_body / bound).prod(axis=2)
    rhs_alt = phi_head / bound
    return _finish(
        "composition" if not negative_control else "composition-control",
        k,
        d,
        bound,
        seed,
        trials,
        skip,
        lhs - rhs,
        lhs_alt - rhs_alt,
        tolerance,
    )


def check_sufficient_condition_horn(
    k, d, bound=1.0, trials=10000, seed=0, negative_control=False, tolerance=TOLERANCE
):
    """Length-k chain check: prod_i(phi_i/R) <= phi_head/R + tol per dimension.

    Intermediate entity moduli are capped at 1: the R-normalized product picks
    up a factor |z_i|^2 per intermediate entity, so moduli above 1 escape the
    regime the inequality is proved in (the 2R-normalized variant, counted as
    ``violations_alt``, tolerates moduli up to sqrt(2))."""
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = np.random.default_rng(seed)
    theta_total, theta_r, r_re, r_im = _sample_chain(rng, trials, k, d, bound)
    _, _, head_re, head_im, skip = _construct_head(rng, r_re, r_im, bound, negative_control)
    z_re, z_im = _aligned_entities(rng, theta_total, theta_r, cap_intermediate=True)

    phi_body = _body_scores(z_re, z_im, r_re, r_im)
    phi_head = _phi(
        z_re[:, :, 0], z_im[:, :, 0], head_re, head_im, z_re[:, :, k], z_im[:, :, k]
    )

    lhs = (phi_body / bound).prod(axis=2)
    rhs = phi_head / bound
    lhs_alt = np.abs(phi_body / (2 * bound)).prod(axis=2)
    rhs_alt = np.abs(phi_head / (2 * bound))
    return _finish(
        "horn" if not negative_control else "horn-control",
        k,
        d,
        bound,
        seed,
        trials,
        skip,
        lhs - rhs,
        lhs_alt - rhs_alt,
        tolerance,
    )


def counterexample_search_unrestricted(
    k, d, bound=1.0, trials=10000, seed=0, tolerance=TOLERANCE
):
    """Same relation construction, but entities sampled feasibly WITHOUT the
    phase alignment; reports how often prod_i |phi_i/R| exceeds the signed
    phi_head/R. Informational: the alignment is a premise of the proof, not a
    consequence of the constraints."""
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = np.random.default_rng(seed)
    _, _, r_re, r_im = _sample_chain(rng, trials, k, d, bound)
    _, _, head_re, head_im, skip = _construct_head(rng, r_re, r_im, bound, False)

    theta_z = rng.uniform(0.0, np.pi / 2.0, size=(trials, d, k + 1))
    moduli = rng.uniform(0.0, 1.0, size=(trials, d, k + 1)) * _entity_max_modulus(theta_z)
    z_re = moduli * np.cos(theta_z)
    z_im = moduli * np.sin(theta_z)

    phi_body = _body_scores(z_re, z_im, r_re, r_im)
    phi_head = _phi(
        z_re[:, :, 0], z_im[:, :, 0], head_re, head_im, z_re[:, :, k], z_im[:, :, k]
    )

    lhs = np.abs(phi_body / bound).prod(axis=2)
    rhs = phi_head / bound
    lhs_alt = np.abs(phi_body / (2 * bound)).prod(axis=2)
    rhs_alt = np.abs(phi_head / (2 * bound))
    return _finish(
        "unrestricted", k, d, bound, seed, trials, skip, lhs - rhs, lhs_alt - rhs_alt, tolerance
    )


def numerical_gradient(f, x, step=1e-6):
    """Central finite differences of a scalar function, coordinate by coordinate."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        shift = np.zeros_like(x)
        shift.flat[i] = step
        grad.flat[i] = (f(x + shift) - f(x - shift)) / (2.0 * step)
    return grad


def _flatten_table(table):
    return np.concatenate(
        [table.ent_re.ravel(), table.ent_im.ravel(), table.rel_re.ravel(), table.rel_im.ravel()]
    )


def _unflatten_into(table, x):
    n, m, d = table.num_entities, table.num_relations, table.dim
    sizes = [n * d, n * d, m * d, m * d]
    offsets = np.cumsum([0] + sizes)
    table.ent_re = x[offsets[0] : offsets[1]].reshape(n, d).copy()
    table.ent_im = x[offsets[1] : offsets[2]].reshape(n, d).copy()
    table.rel_re = x[offsets[2] : offsets[3]].reshape(m, d).copy()
    table.rel_im = x[offsets[3] : offsets[4]].reshape(m, d).copy()


def _dense_gradient(table, ent_grads, rel_grads):
    n, m, d = table.num_entities, table.num_relations, table.dim
    g_ent_re = np.zeros((n, d))
    g_ent_im = np.zeros((n, d))
    g_rel_re = np.zeros((m, d))
    g_rel_im = np.zeros((m, d))
    if ent_grads is not None and ent_grads.rows.size:
        g_ent_re[ent_grads.rows] += ent_grads.re
        g_ent_im[ent_grads.rows] += ent_grads.im
    if rel_grads is not None and rel_grads.rows.size:
        g_rel_re[rel_grads.rows] += rel_grads.re
        g_rel_im[rel_grads.rows] += rel_grads.im
    return np.concatenate(
        [g_ent_re.ravel(), g_ent_im.ravel(), g_rel_re.ravel(), g_rel_im.ravel()]
    )


def gradient_check(
    function,
    table,
    step=1e-6,
    batch=None,
    rules=None,
    ent_rows=None,
    rel_rows=None,
    mu=1.0,
    eta=1.0,
):
    """Max relative error |analytic - numeric| / max(1, |analytic|) over all
    embedding coordinates, for ``function`` in {'logistic', 'rule_penalty',
    'n3', 'total'}. Raises on non-finite values."""
    from . import training

    if ent_rows is None:
        ent_rows = np.arange(table.num_entities)
    if rel_rows is None:
        rel_rows = np.arange(table.num_relations)

    def parts(tbl):
        if function == "logistic":
            loss, grads = training.logistic_loss(tbl, batch)
            return loss, grads.entities, grads.relations
        if function == "rule_penalty":
            loss, rel = training.rule_penalty(tbl, rules)
            return loss, None, rel
        if function == "n3":
            loss, grads = training.n3_regularization(tbl, ent_rows, rel_rows)
            return loss, grads.entities, grads.relations
        if function == "total":
            l_loss, l_grads = training.logistic_loss(tbl, batch)
            r_loss, r_grads = training.rule_penalty(tbl, rules)
            n_loss, n_grads = training.n3_regularization(tbl, ent_rows, rel_rows)
            ent = training.merge_row_grads(
                tbl.dim, [(l_grads.entities, 1.0), (n_grads.entities, eta)]
            )
            rel = training.merge_row_grads(
                tbl.dim,
                [(l_grads.relations, 1.0), (r_grads, mu), (n_grads.relations, eta)],
            )
            return l_loss + mu * r_loss + eta * n_loss, ent, rel
        raise ValueError(f"unknown function {function!r}")

    work = table.copy()
    loss, ent_g, rel_g = parts(work)
    analytic = _dense_gradient(work, ent_g, rel_g)

    def loss_at(x):
        probe = table.copy()
        _unflatten_into(probe, x)
        return parts(probe)[0]

    numeric = numerical_gradient(loss_at, _flatten_table(table), step)
    if not (np.isfinite(analytic).all() and np.isfinite(numeric).all() and np.isfinite(loss)):
        raise ValueError("non-finite values encountered during gradient check")
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))


def format_report(report):
    return (
        f"{report.kind} k={report.k} d={report.d} R={report.bound:g} "
        f"seed={report.seed} trials={report.trials} checked={report.checked} "
        f"skipped={report.skipped} violations={report.violations} "
        f"violations_alt={report.violations_alt} "
        f"max_violation={report.max_violation:.3e} tol={report.tolerance:g}"
    )


def write_reports(path, reports, extra=None):
    """One structured text record per configuration."""
    with open(path, "w", encoding="utf-8") as handle:
        if extra:
            for key in sorted(extra):
                handle.write(f"# {key} = {extra[key]}\n")
        for report in reports:
            handle.write(format_report(report) + "\n")


def default_suite(trials=10000, seed=0, bound=1.0, dims=(2, 8, 32), ks=(1, 2, 3)):
    """The acceptance configuration: composition and horn checks over the
    (k, d) grid plus negative controls. Returns (reports, controls, passed)
    where ``passed`` requires zero violations in every check and at least one
    violation in every control."""
    reports = []
    controls = []
    for d in dims:
        reports.append(
            check_sufficient_condition_composition(d, bound, trials=trials, seed=seed)
        )
        for k in ks:
            reports.append(
                check_sufficient_condition_horn(k, d, bound, trials=trials, seed=seed)
            )
    controls.append(
        check_sufficient_condition_composition(
            dims[0], bound, trials=trials, seed=seed, negative_control=True
        )
    )
    controls.append(
        check_sufficient_condition_horn(
            ks[-1], dims[0], bound, trials=trials, seed=seed, negative_control=True
        )
    )
    passed = all(r.violations == 0 for r in reports) and all(
        c.violations > 0 for c in controls
    )
    return reports, controls, passed
