import math
from functools import lru_cache

import numpy as np
import pytest

from orientedcp import harris, kinetics, lattice
from orientedcp.harris import (GraphicalRep, build, coupling_sweep,
                               duality_annealed, duality_check, duality_sweep,
                               dump_jsonl, load_jsonl, percolate_dual,
                               percolate_forward, removal_coupling_check,
                               thin_arrows)
from orientedcp.kinetics import Configuration
from orientedcp.lattice import BoxSpec
from orientedcp.weights import WeightDistribution, constant_field, sample_field


def _rep(box, marks_map=None, arrows_map=None, horizon=10.0):
    """Hand-built rep: marks_map {vertex_idx: times}, arrows {(src,dst): times}."""
    marks = tuple(np.array(sorted((marks_map or {}).get(i, ())), dtype=float)
                  for i in range(box.n_vertices))
    arrows = {e: np.array(sorted(ts), dtype=float)
              for e, ts in (arrows_map or {}).items() if ts}
    return GraphicalRep(box=box, field=constant_field(1.0, box), lam=1.0,
                        horizon=horizon, seed=None, marks=marks, arrows=arrows)


def test_build_lambda_zero_no_arrows():
    box = BoxSpec(d=2, side=4)
    rep = build(box, constant_field(1.0, box), 0.0, 5.0, seed=1)
    assert rep.arrows == {}


def test_build_determinism():
    box = BoxSpec(d=2, side=4)
    fld = sample_field(WeightDistribution.two_point(0.6), box, 5)
    a = build(box, fld, 0.7, 4.0, seed=10)
    b = build(box, fld, 0.7, 4.0, seed=10)
    assert all(np.array_equal(x, y) for x, y in zip(a.marks, b.marks))
    assert a.arrows.keys() == b.arrows.keys()
    assert all(np.array_equal(a.arrows[k], b.arrows[k]) for k in a.arrows)


def test_build_poisson_means():
    # per-edge arrow mean ~ horizon over ~10^4 edges; total marks ~ V*horizon
    box = BoxSpec(d=2, side=70)
    horizon = 10.0
    rep = build(box, constant_field(1.0, box), 1.0, horizon, seed=3)
    n_edges = 2 * 70 * 71
    arrow_total = sum(len(v) for v in rep.arrows.values())
    per_edge = arrow_total / n_edges
    assert abs(per_edge - horizon) <= 3.0 * math.sqrt(horizon / n_edges)
    mark_total = sum(len(m) for m in rep.marks)
    mean = box.n_vertices * horizon
    assert abs(mark_total - mean) <= 3.0 * math.sqrt(mean)


def test_zero_rate_edges_have_no_streams():
    box = BoxSpec(d=2, side=6)
    fld = sample_field(WeightDistribution.two_point(0.5), box, 8)
    rep = build(box, fld, 1.0, 6.0, seed=2)
    w = fld.weights
    for (x, y) in rep.arrows:
        assert w[x] > 0 and w[y] > 0


def test_percolate_fixtures():
    box = BoxSpec(d=2, side=4)
    e1 = lattice.vertex_index(box, (1, 0))
    empty = _rep(box)
    assert percolate_forward(empty, []) == frozenset()
    assert percolate_forward(empty, [0], t=5.0) == {0}
    one_arrow = _rep(box, arrows_map={(0, e1): [2.0]})
    assert percolate_forward(one_arrow, [0], t=3.0) == {0, e1}
    assert percolate_forward(one_arrow, [0], t=1.0) == {0}
    # dual mirrors with the edge direction reversed
    assert percolate_dual(one_arrow, [e1], t=3.0) == {0, e1}
    assert percolate_dual(one_arrow, [0], t=3.0) == {0}
    assert percolate_dual(empty, []) == frozenset()


def test_mark_clears_vertex():
    box = BoxSpec(d=2, side=4)
    e1 = lattice.vertex_index(box, (1, 0))
    rep = _rep(box, marks_map={0: [1.0]}, arrows_map={(0, e1): [2.0]})
    assert percolate_forward(rep, [0], t=3.0) == frozenset()
    rep2 = _rep(box, marks_map={0: [2.5]}, arrows_map={(0, e1): [2.0]})
    assert percolate_forward(rep2, [0], t=3.0) == {e1}


def test_duality_check_fixtures():
    box = BoxSpec(d=2, side=2)
    apex = box.n_vertices - 1
    assert duality_check(_rep(box)) == (True, True)
    marked = _rep(box, marks_map={apex: [1.0]})
    assert duality_check(marked) == (False, False)


def _oracle_infected(rep, site_idx, t):
    """Backward memoized reachability: all-infected start, is site hot at t?

    Independent of the scan implementations: searches the event DAG from the
    query point down to time 0.
    """
    marks = rep.marks
    inbound = {}
    for (u, v), ts in rep.arrows.items():
        inbound.setdefault(v, []).extend((float(s), u) for s in ts)

    @lru_cache(maxsize=None)
    def hot(v, t):
        last_mark = None
        for m in marks[v]:
            if m <= t:
                last_mark = float(m)
            else:
                break
        if last_mark is None:
            return True
        for s, u in inbound.get(v, ()):
            if last_mark < s <= t and hot(u, s):
                return True
        return False

    return hot(site_idx, t)


def test_duality_check_against_backward_oracle():
    box = BoxSpec(d=2, side=4)
    dist = WeightDistribution.two_point(0.7)
    apex = box.n_vertices - 1
    agree = 0
    for r in range(300):
        fld = sample_field(dist, box, [61, r])
        rep = build(box, fld, 0.8, 2.5, seed=[62, r])
        fwd, rev = duality_check(rep)
        want = _oracle_infected(rep, apex, rep.horizon)
        assert fwd == want
        assert rev == want
        agree += (fwd == rev)
    assert agree == 300


def test_percolate_matches_event_driven_engine():
    # same event structure pushed through the kinetics replay; <= 81 vertices
    box = BoxSpec(d=2, side=8)
    dist = WeightDistribution.two_point(0.6)
    for r in range(50):
        fld = sample_field(dist, box, [71, r])
        rep = build(box, fld, 0.9, 3.0, seed=[72, r])
        states = kinetics.run_on_events(Configuration.all_infected(box), rep)
        assert frozenset(np.flatnonzero(states == 1)) == percolate_forward(rep, "all")
        states0 = kinetics.run_on_events(Configuration.single_seed(box), rep)
        assert frozenset(np.flatnonzero(states0 == 1)) == percolate_forward(rep, [0])


def test_percolate_monotone_in_initial_set():
    box = BoxSpec(d=2, side=5)
    rng = np.random.default_rng(5)
    fld = constant_field(1.0, box)
    for r in range(60):
        rep = build(box, fld, 0.6, 2.0, seed=[81, r])
        a_mask = rng.random(box.n_vertices) < 0.3
        b_mask = a_mask | (rng.random(box.n_vertices) < 0.3)
        small = percolate_forward(rep, list(np.flatnonzero(a_mask)))
        big = percolate_forward(rep, list(np.flatnonzero(b_mask)))
        assert small <= big


def test_removal_coupling_fixtures_and_sweep():
    box = BoxSpec(d=2, side=2)
    assert removal_coupling_check(_rep(box))
    rep = coupling_sweep(WeightDistribution.constant(1.0), box, 1.0, 2.0,
                         400, seed=9)
    assert rep.failures == 0
    assert rep.rate == 1.0


def test_duality_sweep_and_jobs_invariance():
    box = BoxSpec(d=2, side=3)
    dist = WeightDistribution.two_point(0.7)
    one = duality_sweep(dist, box, 0.8, 2.0, 80, seed=33, jobs=1)
    two = duality_sweep(dist, box, 0.8, 2.0, 80, seed=33, jobs=2)
    assert one.failures == 0
    assert one == two


def test_duality_annealed_three_way():
    box = BoxSpec(d=2, side=4)
    dist = WeightDistribution.two_point(0.7)
    est = duality_annealed(dist, box, 0.8, 2.0, 600, seed=44)
    assert abs(est.p_forward_all - est.p_dual_process) <= \
        3.0 * est.joint_se("p_forward_all", "p_dual_process")
    assert abs(est.p_forward_all - est.p_forward_origin) <= \
        3.0 * est.joint_se("p_forward_all", "p_forward_origin")


def test_thin_arrows_nested_and_extremes():
    box = BoxSpec(d=2, side=5)
    rep = build(box, constant_field(1.0, box), 1.0, 5.0, seed=6)
    zero, part, full = thin_arrows(rep, [0.0, 0.5, 1.0], seed=7)
    assert zero.arrows == {}
    assert full.arrows.keys() == rep.arrows.keys()
    assert all(np.array_equal(full.arrows[k], rep.arrows[k]) for k in rep.arrows)
    assert part.lam == pytest.approx(0.5)
    for k, ts in part.arrows.items():
        assert set(ts) <= set(rep.arrows[k])
    kept = sum(len(v) for v in part.arrows.values())
    total = sum(len(v) for v in rep.arrows.values())
    assert abs(kept / total - 0.5) <= 3.0 * math.sqrt(0.25 / total)


def test_thinned_survival_is_nested():
    box = BoxSpec(d=2, side=5)
    fld = constant_field(1.0, box)
    for r in range(40):
        rep = build(box, fld, 1.2, 4.0, seed=[91, r])
        lo, hi = thin_arrows(rep, [0.3, 0.9], seed=[92, r])
        if percolate_forward(lo, [0]):
            assert percolate_forward(hi, [0])


def test_dump_load_roundtrip(tmp_path):
    box = BoxSpec(d=2, side=4)
    fld = sample_field(WeightDistribution.two_point(0.6), box, 12)
    rep = build(box, fld, 0.8, 3.0, seed=13)
    path = tmp_path / "rep.jsonl"
    dump_jsonl(rep, path)
    back = load_jsonl(path, box, fld, 0.8, 3.0)
    assert all(np.allclose(a, b) for a, b in zip(rep.marks, back.marks))
    assert rep.arrows.keys() == back.arrows.keys()
    assert all(np.allclose(rep.arrows[k], back.arrows[k]) for k in rep.arrows)
    assert percolate_forward(rep, "all") == percolate_forward(back, "all")
    assert duality_check(rep) == duality_check(back)
