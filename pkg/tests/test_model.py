import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hornplex.kg import Triple
from hornplex.model import (
    EmbeddingTable,
    export_table_csv,
    init_table,
    is_feasible,
    load_table,
    project,
    save_table,
    score,
    score_all_heads,
    score_all_tails,
    score_dim,
)

from conftest import make_feasible_table


def one_dim_table(e0, e1, r, bound=1.0):
    return EmbeddingTable(
        ent_re=np.array([[e0[0]], [e1[0]]], dtype=float),
        ent_im=np.array([[e0[1]], [e1[1]]], dtype=float),
        rel_re=np.array([[r[0]]], dtype=float),
        rel_im=np.array([[r[1]]], dtype=float),
        bound=bound,
    )


@pytest.mark.parametrize(
    "e0, e1, r, expected",
    [
        ((1, 0), (1, 0), (1, 0), 1.0),  # identity phases
        ((1, 1), (1, 0), (0.5, 0.5), 0.0),
        ((1, 0), (0, 1), (0, 1), 1.0),
    ],
)
def test_score_examples(e0, e1, r, expected):
    table = one_dim_table(e0, e1, r)
    assert score(table, Triple(0, 0, 1)) == pytest.approx(expected, abs=1e-15)


def test_score_dim_single_dimension_equals_score():
    table = one_dim_table((0.3, 0.8), (0.6, 0.1), (0.4, 0.9))
    t = Triple(0, 0, 1)
    assert score_dim(table, t, 0) == pytest.approx(score(table, t), abs=1e-15)


def test_score_dim_zero_relation_row():
    table = make_feasible_table(seed=1, dim=5)
    table.rel_re[0] = 0.0
    table.rel_im[0] = 0.0
    for l in range(5):
        assert score_dim(table, Triple(0, 0, 1), l) == 0.0


def test_score_dim_polar_form():
    table = make_feasible_table(seed=2, dim=8)
    t = Triple(3, 1, 7)
    for l in range(8):
        mods = []
        phases = []
        for re_arr, im_arr, idx in (
            (table.ent_re, table.ent_im, t.head),
            (table.rel_re, table.rel_im, t.relation),
            (table.ent_re, table.ent_im, t.tail),
        ):
            mods.append(np.hypot(re_arr[idx, l], im_arr[idx, l]))
            phases.append(np.arctan2(im_arr[idx, l], re_arr[idx, l]))
        expected = mods[0] * mods[1] * mods[2] * np.cos(phases[1] + phases[0] - phases[2])
        assert score_dim(table, t, l) == pytest.approx(expected, abs=1e-12)


def test_score_is_sum_of_dimension_scores():
    table = make_feasible_table(seed=3, dim=16)
    t = Triple(2, 1, 9)
    total = sum(score_dim(table, t, l) for l in range(16))
    assert abs(total - score(table, t)) < 1e-12 * 16


def test_score_dim_out_of_range():
    table = make_feasible_table(seed=0, dim=4)
    with pytest.raises(IndexError):
        score_dim(table, Triple(0, 0, 1), 4)


def test_score_all_tails_matches_scalar_small():
    table = make_feasible_table(seed=4, num_entities=3, dim=4)
    vec = score_all_tails(table, 0, 1)
    for j in range(3):
        assert abs(vec[j] - score(table, Triple(0, 1, j))) < 1e-12


def test_score_all_tails_matches_scalar_large():
    table = make_feasible_table(seed=5, num_entities=50, dim=6)
    vec = score_all_tails(table, 7, 2)
    worst = max(abs(vec[j] - score(table, Triple(7, 2, j))) for j in range(50))
    assert worst < 1e-12


def test_score_all_heads_matches_scalar():
    table = make_feasible_table(seed=6, num_entities=50, dim=6)
    vec = score_all_heads(table, 1, 4)
    worst = max(abs(vec[i] - score(table, Triple(i, 1, 4))) for i in range(50))
    assert worst < 1e-12


def test_score_all_tails_zero_head_row():
    table = make_feasible_table(seed=7)
    table.ent_re[2] = 0.0
    table.ent_im[2] = 0.0
    assert np.all(score_all_tails(table, 2, 0) == 0.0)


def test_project_clamps_entities():
    table = make_feasible_table(seed=8)
    table.ent_re[0, 0] = 1.7
    table.ent_im[0, 1] = -0.3
    project(table)
    assert table.ent_re[0, 0] == 1.0
    assert table.ent_im[0, 1] == 0.0


def test_project_radial_rescale():
    table = make_feasible_table(seed=9, dim=2)
    table.rel_re[0, 0] = 1.0
    table.rel_im[0, 0] = 1.0
    project(table)
    assert table.rel_re[0, 0] == pytest.approx(0.70710678, abs=1e-8)
    assert table.rel_im[0, 0] == pytest.approx(0.70710678, abs=1e-8)
    assert np.hypot(table.rel_re[0, 0], table.rel_im[0, 0]) <= 1.0


def test_project_fixed_point_on_feasible_table():
    table = make_feasible_table(seed=10)
    before = table.copy()
    project(table)
    assert np.array_equal(table.ent_re, before.ent_re)
    assert np.array_equal(table.rel_re, before.rel_re)
    assert np.array_equal(table.rel_im, before.rel_im)


@given(st.integers(0, 2**32 - 1), st.floats(0.5, 3.0))
def test_project_idempotent_bit_exact(seed, scale):
    rng = np.random.default_rng(seed)
    table = EmbeddingTable(
        ent_re=rng.normal(0, scale, (5, 3)),
        ent_im=rng.normal(0, scale, (5, 3)),
        rel_re=rng.normal(0, scale, (4, 3)),
        rel_im=rng.normal(0, scale, (4, 3)),
        bound=1.0,
    )
    project(table)
    assert is_feasible(table)
    once = table.copy()
    project(table)
    assert np.array_equal(table.ent_re, once.ent_re)
    assert np.array_equal(table.ent_im, once.ent_im)
    assert np.array_equal(table.rel_re, once.rel_re)
    assert np.array_equal(table.rel_im, once.rel_im)


def test_init_deterministic():
    a = init_table(10, 4, 6, 1.0, seed=42)
    b = init_table(10, 4, 6, 1.0, seed=42)
    assert np.array_equal(a.ent_re, b.ent_re)
    assert np.array_equal(a.rel_im, b.rel_im)


def test_init_feasible_without_projection():
    table = init_table(20, 5, 8, bound=0.7, seed=3)
    before = table.copy()
    assert is_feasible(table)
    project(table)
    assert np.array_equal(table.rel_re, before.rel_re)
    assert np.array_equal(table.ent_re, before.ent_re)


def test_init_component_mean():
    table = init_table(100, 4, 16, 1.0, seed=12)
    assert abs(table.ent_re.mean() - 0.5) < 0.02


def test_init_validates_arguments():
    with pytest.raises(ValueError):
        init_table(0, 1, 4)
    with pytest.raises(ValueError):
        init_table(1, 1, 4, bound=0.0)


@given(st.integers(0, 2**32 - 1))
def test_score_dim_bounded(seed):
    table = make_feasible_table(seed=seed, num_entities=6, num_relations=2, dim=4)
    t = Triple(0, 1, 5)
    for l in range(4):
        assert abs(score_dim(table, t, l)) <= 2.0 * table.bound + 1e-12
    assert abs(score(table, t)) <= 2.0 * table.bound * 4 + 1e-12


def test_save_load_round_trip(tmp_path):
    table = make_feasible_table(seed=13, num_entities=7, num_relations=3, dim=5)
    p = tmp_path / "emb.bin"
    save_table(p, table)
    loaded = load_table(p)
    assert loaded.bound == table.bound
    assert np.array_equal(loaded.ent_re, table.ent_re)
    assert np.array_equal(loaded.ent_im, table.ent_im)
    assert np.array_equal(loaded.rel_re, table.rel_re)
    assert np.array_equal(loaded.rel_im, table.rel_im)


def test_load_ignores_trailing_bytes(tmp_path):
    table = make_feasible_table(seed=14)
    buf = io.BytesIO()
    save_table(buf, table)
    buf.write(b"optimizer state trailer")
    buf.seek(0)
    loaded = load_table(buf)
    assert np.array_equal(loaded.ent_re, table.ent_re)


def test_load_rejects_bad_magic(tmp_path):
    p = tmp_path / "junk.bin"
    p.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValueError, match="magic"):
        load_table(p)


def test_csv_export(tmp_path):
    table = make_feasible_table(seed=15, num_entities=4, num_relations=2, dim=3)
    ents = tmp_path / "entities.csv"
    rels = tmp_path / "relations.csv"
    export_table_csv(table, ents, rels)
    lines = ents.read_text().strip().split("\n")
    assert lines[0] == "re_0,re_1,re_2,im_0,im_1,im_2"
    assert len(lines) == 5
    first = [float(x) for x in lines[1].split(",")]
    assert first[:3] == pytest.approx(list(table.ent_re[0]))
    assert first[3:] == pytest.approx(list(table.ent_im[0]))
