"""Graphical event structures: shared randomness for coupled processes.

A GraphicalRep fixes, once and for all, rate-1 recovery marks on every vertex
timeline and Poisson arrow streams on every directed edge x -> x + e_i with
intensity lam * rho(x) * rho(y).  Reading the arrows forward in time yields
the forward process; reading the same structure with arrows reversed, or in
reversed time, yields the reversed process.  Because both readings are
reachability statements about one event diagram, the forward indicator
"apex infected at the horizon from the all-infected start" and the reversed
indicator "descendants of the apex still alive at time 0" agree for every
single realization, not just in distribution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import lattice
from .lattice import BoxSpec
from .weights import WeightDistribution, WeightField, sample_field, seed_key

_MARK, _ARROW = 0, 1


@dataclass(frozen=True)
class GraphicalRep:
    """Immutable marks-and-arrows structure on a box over [0, horizon]."""

    box: BoxSpec
    field: WeightField
    lam: float
    horizon: float
    seed: object
    marks: tuple          # per-vertex sorted arrays of recovery times
    arrows: dict          # (src_idx, dst_idx) -> sorted array of arrow times
    _cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def event_arrays(self):
        """Chronologically merged events as (times, kinds, a, b) lists.

        kind 0 is a recovery mark at vertex a; kind 1 an arrow a -> b.
        Built once and cached; the rep itself is never mutated.
        """
        if "events" not in self._cache:
            ts, kinds, aa, bb = [], [], [], []
            for x, tlist in enumerate(self.marks):
                ts.extend(tlist)
                kinds.extend([_MARK] * len(tlist))
                aa.extend([x] * len(tlist))
                bb.extend([-1] * len(tlist))
            for (x, y), tlist in self.arrows.items():
                ts.extend(tlist)
                kinds.extend([_ARROW] * len(tlist))
                aa.extend([x] * len(tlist))
                bb.extend([y] * len(tlist))
            order = np.lexsort((bb, aa, kinds, ts))
            t_arr = np.asarray(ts, dtype=np.float64)[order]
            self._cache["events"] = (
                t_arr.tolist(),
                np.asarray(kinds, dtype=np.int8)[order].tolist(),
                np.asarray(aa, dtype=np.int32)[order].tolist(),
                np.asarray(bb, dtype=np.int32)[order].tolist(),
            )
        return self._cache["events"]

    def n_events(self) -> int:
        return len(self.event_arrays()[0])


def _sorted_stream(flat: np.ndarray, counts: np.ndarray, horizon: float):
    """Cut one flat uniform draw into per-stream sorted time arrays."""
    out = []
    pos = 0
    for c in counts:
        seg = np.sort(flat[pos:pos + c]) * horizon
        out.append(seg)
        pos += c
    return out


def build(box: BoxSpec, fld: WeightField, lam: float, horizon: float, seed) -> GraphicalRep:
    """Sample the full event structure; bit-exact for equal seeds.

    Streams are drawn in a fixed order (all mark counts, all mark times,
    then arrow counts and times over the canonical edge order), so equal
    seeds give equal structures regardless of how they are later read.
    Edges with zero rate get no stream at all.
    """
    if lam < 0 or horizon <= 0:
        raise ValueError("need lam >= 0 and horizon > 0")
    if isinstance(seed, np.random.SeedSequence):
        rng = np.random.default_rng(seed)
        seed_val = seed.entropy
    else:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        seed_val = seed
    V = box.n_vertices
    rho = fld.weights

    mark_counts = rng.poisson(horizon, V)
    mark_flat = rng.random(int(mark_counts.sum()))
    marks = _sorted_stream(mark_flat, mark_counts, horizon)

    src, dst, _ = lattice.edge_table(box)
    rates = lam * rho[src] * rho[dst]
    live = np.flatnonzero(rates > 0)
    arrow_counts = rng.poisson(rates[live] * horizon)
    arrow_flat = rng.random(int(arrow_counts.sum()))
    streams = _sorted_stream(arrow_flat, arrow_counts, horizon)
    arrows = {}
    for k, e in enumerate(live):
        if len(streams[k]):
            arrows[(int(src[e]), int(dst[e]))] = streams[k]
    return GraphicalRep(box=box, field=fld, lam=lam, horizon=float(horizon),
                        seed=seed_val, marks=tuple(marks), arrows=arrows)


def _resolve_set(box: BoxSpec, vertices) -> np.ndarray:
    """Initial set as a bool mask; accepts 'all', vertex tuples, or indices."""
    mask = np.zeros(box.n_vertices, dtype=bool)
    if isinstance(vertices, str):
        if vertices != "all":
            raise ValueError(f"unknown vertex-set token {vertices!r}")
        mask[:] = True
        return mask
    for v in vertices:
        mask[v if isinstance(v, (int, np.integer)) else lattice.vertex_index(box, v)] = True
    return mask


def percolate_forward(rep: GraphicalRep, initial, t: float | None = None) -> frozenset:
    """Vertices infected at time t when the forward process starts from ``initial``.

    An arrow x -> y passes infection from x to y; a mark clears its vertex.
    The result is exactly the set of space-time reachability targets, so it
    is monotone in the initial set by construction.
    """
    t = rep.horizon if t is None else t
    st = _resolve_set(rep.box, initial)
    times, kinds, a, b = rep.event_arrays()
    for i in range(len(times)):
        if times[i] > t:
            break
        if kinds[i] == _MARK:
            st[a[i]] = False
        elif st[a[i]]:
            st[b[i]] = True
    return frozenset(int(v) for v in np.flatnonzero(st))


def percolate_dual(rep: GraphicalRep, initial, t: float | None = None) -> frozenset:
    """Forward-time run of the reversed process on the same event structure.

    Arrows are traversed head to tail: an arrow x -> y lets y infect x.
    """
    t = rep.horizon if t is None else t
    st = _resolve_set(rep.box, initial)
    times, kinds, a, b = rep.event_arrays()
    for i in range(len(times)):
        if times[i] > t:
            break
        if kinds[i] == _MARK:
            st[a[i]] = False
        elif st[b[i]]:
            st[a[i]] = True
    return frozenset(int(v) for v in np.flatnonzero(st))


def _reversed_reading_alive(rep: GraphicalRep, site_idx: int) -> bool:
    """Does the reversed-time reading from (site, horizon) reach time 0?

    Events are replayed newest first; an arrow x -> y is traversed from its
    head y back to its tail x, and a mark kills the dual particle on its
    vertex.  The original times order the replay directly, avoiding any
    horizon-minus-t rounding.
    """
    st = np.zeros(rep.box.n_vertices, dtype=bool)
    st[site_idx] = True
    alive = 1
    times, kinds, a, b = rep.event_arrays()
    for i in range(len(times) - 1, -1, -1):
        if kinds[i] == _MARK:
            if st[a[i]]:
                st[a[i]] = False
                alive -= 1
                if alive == 0:
                    return False
        elif st[b[i]] and not st[a[i]]:
            st[a[i]] = True
            alive += 1
    return alive > 0


def duality_check(rep: GraphicalRep, site=None) -> tuple[bool, bool]:
    """(forward indicator, reversed-reading indicator) on one realization.

    Forward: start all-infected, ask whether ``site`` is infected at the
    horizon.  Reversed: hang a single particle at (site, horizon) and chase
    arrows tail-ward down the same diagram, asking whether anything is still
    alive at time 0.  The two booleans must be equal realization by
    realization; ``site`` defaults to the apex so that both readings have
    room to propagate inside the box.
    """
    box = rep.box
    idx = lattice.vertex_index(box, box.apex if site is None else site) \
        if not isinstance(site, (int, np.integer)) else int(site)
    fwd = idx in percolate_forward(rep, "all")
    rev = _reversed_reading_alive(rep, idx)
    return fwd, rev


def removal_coupling_check(rep: GraphicalRep, site=None) -> bool:
    """Replay the plain and freezing processes jointly; verify containment.

    Both start from the same single seed (default: origin) and consume the
    same marks and arrows.  In the freezing variant a recovered vertex is
    removed for good and blocks reinfection.  The check asserts, after every
    single event, that the freezing variant's infected set is contained in
    the plain process's infected set; returns True when no event violates it.
    """
    box = rep.box
    start = box.origin if site is None else site
    idx = start if isinstance(start, (int, np.integer)) else lattice.vertex_index(box, start)
    plain = np.zeros(box.n_vertices, dtype=np.int8)
    frozen = np.zeros(box.n_vertices, dtype=np.int8)
    plain[idx] = frozen[idx] = 1
    times, kinds, a, b = rep.event_arrays()
    for i in range(len(times)):
        if kinds[i] == _MARK:
            x = a[i]
            if plain[x] == 1:
                plain[x] = 0
            if frozen[x] == 1:
                frozen[x] = -1
        else:
            x, y = a[i], b[i]
            if plain[x] == 1 and plain[y] == 0:
                plain[y] = 1
            if frozen[x] == 1 and frozen[y] == 0:
                frozen[y] = 1
        # containment must hold after every event, and only the flipped
        # vertices can break it
        for v in (a[i], b[i]):
            if v >= 0 and frozen[v] == 1 and plain[v] != 1:
                return False
    return True


@dataclass(frozen=True)
class DualityEstimate:
    """Annealed occupation probabilities from independent randomness."""

    p_forward_all: float      # apex infected at horizon, all-infected start
    p_dual_process: float     # reversed process from the apex alive at horizon
    p_forward_origin: float   # forward process from the origin alive at horizon
    se_forward_all: float
    se_dual_process: float
    se_forward_origin: float
    reps: int

    def joint_se(self, a: str = "p_forward_all", b: str = "p_dual_process") -> float:
        sa = getattr(self, "se_" + a[2:])
        sb = getattr(self, "se_" + b[2:])
        return math.sqrt(sa * sa + sb * sb)


def duality_annealed(dist: WeightDistribution, box: BoxSpec, lam: float,
                     horizon: float, reps: int, seed: int) -> DualityEstimate:
    """Estimate the three annealed indicators with separate random streams.

    Each replicate draws a fresh weight field and a fresh event structure.
    In the annealed law all three probabilities coincide: the first two by
    time reversal of one diagram, the last by the coordinate flip x -> apex - x
    that exchanges the two edge orientations without changing the i.i.d.
    environment.
    """
    apex = lattice.vertex_index(box, box.apex)
    key = seed_key(seed)
    counts = [0, 0, 0]
    for r in range(reps):
        fld = sample_field(dist, box, np.random.SeedSequence(key + [r, 0]))
        rep = build(box, fld, lam, horizon, np.random.SeedSequence(key + [r, 1]))
        if apex in percolate_forward(rep, "all"):
            counts[0] += 1

        fld = sample_field(dist, box, np.random.SeedSequence(key + [r, 2]))
        rep = build(box, fld, lam, horizon, np.random.SeedSequence(key + [r, 3]))
        if percolate_dual(rep, [apex]):
            counts[1] += 1

        fld = sample_field(dist, box, np.random.SeedSequence(key + [r, 4]))
        rep = build(box, fld, lam, horizon, np.random.SeedSequence(key + [r, 5]))
        if percolate_forward(rep, [0]):
            counts[2] += 1
    ps = [c / reps for c in counts]
    ses = [math.sqrt(p * (1.0 - p) / reps) for p in ps]
    return DualityEstimate(p_forward_all=ps[0], p_dual_process=ps[1],
                           p_forward_origin=ps[2], se_forward_all=ses[0],
                           se_dual_process=ses[1], se_forward_origin=ses[2],
                           reps=reps)


@dataclass(frozen=True)
class CheckReport:
    """Tally of a per-realization pass/fail check over independent replicates."""

    reps: int
    failures: int

    @property
    def rate(self) -> float:
        return 1.0 - self.failures / self.reps


def _check_chunk(args) -> int:
    what, desc, d, side, lam, horizon, key, r0, r1 = args
    dist = WeightDistribution.from_descriptor(desc)
    box = BoxSpec(d, side)
    bad = 0
    for r in range(r0, r1):
        fld = sample_field(dist, box, np.random.SeedSequence(key + [r, 0]))
        rep = build(box, fld, lam, horizon, np.random.SeedSequence(key + [r, 1]))
        if what == "duality":
            fwd, rev = duality_check(rep)
            bad += int(fwd != rev)
        else:
            bad += int(not removal_coupling_check(rep))
    return bad


def _sweep_check(what: str, dist: WeightDistribution, box: BoxSpec, lam: float,
                 horizon: float, reps: int, seed, jobs: int) -> CheckReport:
    # per-rep seeds are derived from the rep index alone, so the chunking
    # (and hence the jobs count) cannot change the tally
    key = seed_key(seed)
    jobs = max(1, int(jobs))
    if jobs == 1:
        bad = _check_chunk((what, dist.descriptor(), box.d, box.side,
                            lam, horizon, key, 0, reps))
        return CheckReport(reps=reps, failures=bad)
    from concurrent.futures import ProcessPoolExecutor
    edges = np.linspace(0, reps, jobs + 1).astype(int)
    work = [(what, dist.descriptor(), box.d, box.side, lam, horizon,
             key, int(edges[i]), int(edges[i + 1])) for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        bad = sum(pool.map(_check_chunk, work))
    return CheckReport(reps=reps, failures=bad)


def duality_sweep(dist: WeightDistribution, box: BoxSpec, lam: float,
                  horizon: float, reps: int, seed, jobs: int = 1) -> CheckReport:
    """Run duality_check on fresh realizations; count disagreements."""
    return _sweep_check("duality", dist, box, lam, horizon, reps, seed, jobs)


def coupling_sweep(dist: WeightDistribution, box: BoxSpec, lam: float,
                   horizon: float, reps: int, seed, jobs: int = 1) -> CheckReport:
    """Run removal_coupling_check on fresh realizations; count violations."""
    return _sweep_check("coupling", dist, box, lam, horizon, reps, seed, jobs)


def thin_arrows(rep: GraphicalRep, fractions, seed) -> list[GraphicalRep]:
    """Couple lower-rate structures by keeping each arrow with probability f.

    One uniform per arrow decides its fate for every requested fraction, so
    the returned reps are nested: every arrow kept at a smaller fraction is
    kept at any larger one.  Marks are shared untouched.  This realises the
    standard monotone coupling in the infection rate.
    """
    fr = [float(f) for f in fractions]
    if any(not 0.0 <= f <= 1.0 for f in fr):
        raise ValueError(f"fractions must lie in [0, 1]: {fr}")
    rng = np.random.default_rng(seed if isinstance(seed, np.random.SeedSequence)
                                else np.random.SeedSequence(seed))
    keys = sorted(rep.arrows.keys())
    unis = {k: rng.random(len(rep.arrows[k])) for k in keys}
    out = []
    for f in fr:
        arrows = {}
        for k in keys:
            kept = rep.arrows[k][unis[k] < f]
            if len(kept):
                arrows[k] = kept
        out.append(GraphicalRep(box=rep.box, field=rep.field, lam=rep.lam * f,
                                horizon=rep.horizon, seed=rep.seed,
                                marks=rep.marks, arrows=arrows))
    return out


def dump_jsonl(rep: GraphicalRep, path) -> None:
    """One JSON record per stream: marks keyed by site, arrows by edge."""
    box = rep.box
    with open(str(path), "w") as fh:
        for x, tlist in enumerate(rep.marks):
            if len(tlist) == 0:
                continue
            rec = {"kind": "mark", "site": list(lattice.index_vertex(box, x)),
                   "times": [float(t) for t in tlist]}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        for (x, y) in sorted(rep.arrows.keys()):
            rec = {"kind": "arrow",
                   "edge": [list(lattice.index_vertex(box, x)),
                            list(lattice.index_vertex(box, y))],
                   "times": [float(t) for t in rep.arrows[(x, y)]]}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_jsonl(path, box: BoxSpec, fld: WeightField, lam: float,
               horizon: float) -> GraphicalRep:
    """Rebuild a rep from a stream dump; context not stored in the dump."""
    marks = [np.empty(0)] * box.n_vertices
    arrows = {}
    with open(str(path)) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            times = np.asarray(rec["times"], dtype=np.float64)
            if rec["kind"] == "mark":
                marks[lattice.vertex_index(box, tuple(rec["site"]))] = times
            elif rec["kind"] == "arrow":
                x, y = (tuple(v) for v in rec["edge"])
                arrows[(lattice.vertex_index(box, x), lattice.vertex_index(box, y))] = times
            else:
                raise ValueError(f"unknown stream kind {rec['kind']!r}")
    return GraphicalRep(box=box, field=fld, lam=lam, horizon=float(horizon),
                        seed=None, marks=tuple(marks), arrows=arrows)
