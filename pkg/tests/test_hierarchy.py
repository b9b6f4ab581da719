from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from convqft.hierarchy import (
    Hierarchy,
    ObservableFamily,
    check_observable,
    delta_embed,
    gelfand_transform,
    grid_size,
    lift_idempotent,
    observable_from_base,
    probe_projectors,
    pullback,
    pullback_identity_check,
    run_checks,
    simplex_grid,
)


def test_grid_counts():
    for n in range(1, 5):
        for m in range(1, 5):
            g = simplex_grid(n, m)
            assert len(g) == math.comb(m + n - 1, n - 1) == grid_size(n, m)
            assert np.allclose(g.sum(axis=1), 1) and np.all(g >= 0)
            assert len({tuple(r) for r in g}) == len(g)


def test_exact_grid():
    g = simplex_grid(3, 2, exact=True)
    assert all(sum(r) == 1 for r in g)
    assert all(isinstance(x, Fraction) for x in g.ravel())


class TestGelfand:
    def test_constant(self):
        h = Hierarchy(3, 3, 2)
        assert np.allclose(gelfand_transform(h, np.full(3, 2.5), 1), 2.5)

    def test_point_mass(self):
        h = Hierarchy(3, 2, 1)
        f = np.array([1.0, -2.0, 5.0])
        tg = gelfand_transform(h, f, 1)
        for w in range(3):
            assert tg[delta_embed(h, w, 0)] == f[w]

    def test_uniform_average(self):
        h = Hierarchy(2, 2, 1)
        tg = gelfand_transform(h, np.array([0.0, 2.0]), 1)
        mid = [i for i, r in enumerate(h.states[1]) if np.allclose(r, [0.5, 0.5])][0]
        assert tg[mid] == 1.0

    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), st.lists(st.floats(-10, 10), min_size=3, max_size=3))
    def test_linear(self, f, g):
        h = Hierarchy(3, 2, 1)
        f, g = np.array(f), np.array(g)
        assert np.allclose(gelfand_transform(h, 2 * f - g, 1), 2 * gelfand_transform(h, f, 1) - gelfand_transform(h, g, 1))

    @given(st.lists(st.floats(0, 10), min_size=3, max_size=3))
    def test_positive(self, f):
        h = Hierarchy(3, 2, 2)
        t1 = gelfand_transform(h, np.array(f), 1)
        assert np.all(t1 >= 0) and np.all(gelfand_transform(h, t1, 2) >= 0)


class TestDelta:
    def test_injective(self):
        h = Hierarchy(3, 2, 2)
        for lv in range(2):
            idx = [delta_embed(h, w, lv) for w in range(h.size(lv))]
            assert len(set(idx)) == len(idx)
            for w, i in enumerate(idx):
                row = h.states[lv + 1][i]
                assert row[w] == 1 and row.sum() == 1

    def test_off_grid(self):
        h = Hierarchy(2, 2, 2)
        with pytest.raises(ValueError, match="not a grid point"):
            delta_embed(h, [0.3, 0.7], 1)
        assert delta_embed(h, [0.5, 0.5], 1) >= 0
        with pytest.raises(ValueError):
            delta_embed(h, 9, 0)


class TestPullback:
    def test_exact(self):
        h = Hierarchy(3, 3, 2, exact=True)
        rng = np.random.default_rng(0)
        for lv in range(2):
            f = np.array([Fraction(int(k), 11) for k in rng.integers(-40, 40, h.size(lv))], dtype=object)
            assert pullback_identity_check(h, f, lv) == 0

    def test_float(self):
        h = Hierarchy(4, 50, 1)
        f = np.random.default_rng(1).normal(size=4)
        assert pullback_identity_check(h, f, 0) < 1e-14

    def test_constant(self):
        h = Hierarchy(3, 2, 2)
        assert pullback_identity_check(h, np.ones(6), 1) == 0


class TestIdempotent:
    @pytest.mark.parametrize("level", [0, 1])
    def test_probe_projectors(self, level):
        h = Hierarchy(3, 2, 2)
        for name, p in probe_projectors(h, level).items():
            lift = lift_idempotent(h, p, level)
            assert lift.idempotency_deviation() < 1e-12, name
            M = lift.matrix()
            assert np.max(np.abs(M @ M - M)) < 1e-12
            lifted, base = lift.rank_at_vertices()
            assert lifted == base

    def test_identity_lifts_to_identity_on_point_masses(self):
        h = Hierarchy(3, 2, 1)
        p = probe_projectors(h, 0)["identity"]
        lift = lift_idempotent(h, p, 0)
        G = np.random.default_rng(0).normal(size=(h.size(1), 2))
        out = lift(G)
        vi = h.vertex_index[1]
        assert np.allclose(out[vi], G[vi])
        # at a general state the value is the state average of G over point masses
        assert np.allclose(out, h.states[1] @ G[vi])

    def test_rejects_non_idempotent(self):
        h = Hierarchy(2, 2, 1)
        bad = np.broadcast_to(np.array([[1.0, 1.0], [0.0, 0.5]]), (2, 2, 2))
        with pytest.raises(ValueError, match="not idempotent"):
            lift_idempotent(h, bad, 0)


class TestObservable:
    def test_tower_compatible(self):
        h = Hierarchy(3, 2, 3)
        fam = observable_from_base(h, np.array([0.3, -1.0, 2.0]))
        assert check_observable(h, fam)

    def test_perturbed(self):
        h = Hierarchy(3, 2, 2)
        fam = observable_from_base(h, np.array([0.3, -1.0, 2.0]))
        fs = [f.copy() for f in fam.functions]
        fs[1][h.vertex_index[1][1]] += 1e-6
        assert not check_observable(h, ObservableFamily(fs))

    def test_point_base(self):
        h = Hierarchy(1, 3, 3)
        assert h.sizes() == [1, 1, 1, 1]
        fam = observable_from_base(h, np.array([4.2]))
        assert check_observable(h, fam)
        assert all(f[0] == 4.2 for f in fam.functions)


def test_pullback_is_restriction():
    h = Hierarchy(2, 3, 2)
    g = np.arange(h.size(2), dtype=float)
    assert np.array_equal(pullback(h, g, 1), g[h.vertex_index[2]])


@pytest.mark.parametrize("args", [(3, 2, 2), (4, 3, 1), (2, 3, 3), (1, 2, 3)])
def test_run_checks(args):
    rep = run_checks(*args)
    assert rep.ok, rep.failures()


def test_level_limit():
    with pytest.raises(ValueError):
        Hierarchy(2, 2, 4)
