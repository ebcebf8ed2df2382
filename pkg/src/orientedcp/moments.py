"""Second-moment machinery for open-path counts.

The lower-bound route replaces the full time evolution with a static
question.  Attach to every vertex its recovery clock T ~ Exp(1) and to every
edge x -> x + e_i a first-transmission clock U ~ Exp(lam * rho(x) * rho(y));
call the edge open when U <= T at the source.  Open paths of length n from
the origin are counted exactly per draw, and the first two moments of that
count admit closed forms through small transfer operators over the weight
support.  The inequality P(count >= 1) >= (E count)^2 / E count^2 then turns
the moment ratio into an explicit survival lower bound.

Both moments come in two independent flavours on purpose: exact transfer
recursions and direct Monte Carlo on the sampled clock structure.  Tests and
the acceptance suite compare them; neither is allowed to stand in for the
other.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import lattice
from .lattice import BoxSpec
from .weights import WeightDistribution, WeightField, sample_field


def edge_pass_probability(lam, a, b):
    """P(U <= T) for one edge: rate r = lam*a*b against a unit recovery.

    Equals r / (1 + r); zero rate gives zero.  Broadcasts over arrays.
    """
    r = lam * np.asarray(a, dtype=np.float64) * np.asarray(b, dtype=np.float64)
    return r / (1.0 + r)


def shared_source_pass_probability(lam, a, c, c_hat):
    """P(U1 <= T and U2 <= T) for two edges leaving one source of weight a.

    The recovery clock T is shared, so the joint law does not factorise;
    inclusion-exclusion over the independent transmission clocks gives the
    exact value.  Broadcasts over arrays.
    """
    r1 = lam * np.asarray(a, dtype=np.float64) * np.asarray(c, dtype=np.float64)
    r2 = lam * np.asarray(a, dtype=np.float64) * np.asarray(c_hat, dtype=np.float64)
    return 1.0 - 1.0 / (1.0 + r1) - 1.0 / (1.0 + r2) + 1.0 / (1.0 + r1 + r2)


@dataclass(frozen=True)
class PairFactor:
    value: float       # the number used by the calling recursion
    is_bound: bool     # True when value is the 2*g*g upper bound
    exact: float       # exact joint probability regardless of is_bound


def pair_factor(lam: float, a, c, b=None, c_hat=None, *, use_bound: bool = False) -> PairFactor:
    """One-step joint pass probability for the edges of a walk pair.

    Which optional weights are given encodes the geometry:
      - (a, c) only: both walks traverse the same edge, value g(a, c);
      - (a, c, c_hat): one source of weight a, distinct targets c and c_hat;
        exact by inclusion-exclusion, or the 2*g*g bound when use_bound;
      - (a, c, b, c_hat): distinct sources a and b, so the recovery clocks
        are independent and the value factorises g(a, c) * g(b, c_hat).
        Equal targets need no special case: only source clocks are shared.
    """
    if b is None and c_hat is None:
        v = float(edge_pass_probability(lam, a, c))
        return PairFactor(value=v, is_bound=False, exact=v)
    if b is None:
        exact = float(shared_source_pass_probability(lam, a, c, c_hat))
        if use_bound:
            bound = 2.0 * float(edge_pass_probability(lam, a, c)) \
                * float(edge_pass_probability(lam, a, c_hat))
            return PairFactor(value=bound, is_bound=True, exact=exact)
        return PairFactor(value=exact, is_bound=False, exact=exact)
    if c_hat is None:
        raise ValueError("a second source weight b requires its target c_hat")
    v = float(edge_pass_probability(lam, a, c)) * float(edge_pass_probability(lam, b, c_hat))
    return PairFactor(value=v, is_bound=False, exact=v)


class TransferOperator:
    """First-moment recursion over the weight support.

    With support values a_i carrying probabilities p_i, the matrix
    A[i, j] = p_j * g(a_i, a_j) propagates the conditional expectation of an
    open chain one step.  chain_expectation(n) is the probability that one
    fixed n-step path is fully open under i.i.d. vertex weights.
    """

    def __init__(self, dist: WeightDistribution, lam: float):
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        self.dist = dist
        self.lam = float(lam)
        self.values = np.asarray(dist.values, dtype=np.float64)
        self.probs = np.asarray(dist.probs, dtype=np.float64)
        self.gain = edge_pass_probability(lam, self.values[:, None], self.values[None, :])
        self.matrix = self.gain * self.probs[None, :]

    def chain_expectation(self, n: int) -> float:
        if n < 0:
            raise ValueError("chain length must be nonnegative")
        v = np.ones(len(self.values))
        for _ in range(n):
            v = self.matrix @ v
        return float(self.probs @ v)


def expected_path_count(dist: WeightDistribution, d: int, lam: float, n: int) -> float:
    """E[number of open n-step paths from the origin] = d^n * chain."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return float(d) ** n * TransferOperator(dist, lam).chain_expectation(n)


# ---------------------------------------------------------------------------
# sampled clock structures and exact per-draw counting

@dataclass(frozen=True)
class PathPercolation:
    """One draw of recovery and transmission clocks on a box.

    vertex_clocks[x] is the Exp(1) recovery draw; edge_clocks[i, x] the
    first-transmission draw on the edge x -> x + e_i, infinite where the
    rate vanishes or the neighbor leaves the box.
    """

    field: WeightField
    lam: float
    vertex_clocks: np.ndarray
    edge_clocks: np.ndarray

    def open_edges(self) -> np.ndarray:
        """(d, V) bool: edge open iff its clock beats the source recovery."""
        return self.edge_clocks <= self.vertex_clocks[None, :]


def sample_path_percolation(fld: WeightField, lam: float, seed) -> PathPercolation:
    """Draw all clocks in a fixed order; equal seeds give equal draws."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    box = fld.box
    rng = np.random.default_rng(seed if isinstance(seed, np.random.SeedSequence)
                                else np.random.SeedSequence(seed))
    V = box.n_vertices
    rho = fld.weights
    t_vertex = rng.standard_exponential(V)
    raw = rng.standard_exponential((box.d, V))
    nb = lattice.out_neighbor_indices(box)
    rates = np.zeros((box.d, V))
    for i in range(box.d):
        has = nb[:, i] >= 0
        rates[i, has] = lam * rho[has] * rho[nb[has, i]]
    with np.errstate(divide="ignore"):
        clocks = np.where(rates > 0.0, raw / np.where(rates > 0.0, rates, 1.0), np.inf)
    return PathPercolation(field=fld, lam=float(lam), vertex_clocks=t_vertex,
                           edge_clocks=clocks)


def count_paths(perc: PathPercolation, n: int) -> int:
    """Exact number of open n-step paths from the origin in one draw.

    Dynamic program over levels: every step raises the coordinate sum by
    one, so paths never revisit a vertex and counts at level k feed level
    k+1 only.  Needs n <= box side so the whole depth-n cone is present.
    """
    box = perc.field.box
    if n < 0:
        raise ValueError("path length must be nonnegative")
    if n > box.side:
        raise ValueError(f"paths of length {n} escape a box of side {box.side}")
    opn = perc.open_edges()
    nb = lattice.out_neighbor_indices(box)
    counts = np.zeros(box.n_vertices)
    counts[0] = 1.0
    for _ in range(n):
        new = np.zeros_like(counts)
        for i in range(box.d):
            src = np.flatnonzero(nb[:, i] >= 0)
            new[nb[src, i]] += counts[src] * opn[i, src]
        counts = new
    return int(round(counts.sum()))


@dataclass(frozen=True)
class PathCountEstimate:
    d: int
    n: int
    reps: int
    mean: float
    se_mean: float
    second_moment: float
    se_second: float

    @property
    def ratio(self) -> float:
        if self.mean <= 0.0:
            raise ValueError("mean path count is zero; ratio undefined")
        return self.second_moment / self.mean ** 2

    @property
    def se_ratio(self) -> float:
        r = self.ratio
        return r * math.sqrt((self.se_second / self.second_moment) ** 2
                             + (2.0 * self.se_mean / self.mean) ** 2)


def count_paths_mc(dist: WeightDistribution, d: int, lam: float, n: int,
                   reps: int, seed, batch: int = 2048) -> PathCountEstimate:
    """Monte Carlo moments of the open-path count by exact per-draw counting.

    Each replicate draws a fresh weight field and clock structure on the
    depth-n cone and runs the level dynamic program.  Batched; the draw
    order inside a batch is fixed, so results depend on (seed, batch) only.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    box = BoxSpec(d, max(n, 1))
    V = box.n_vertices
    nb = lattice.out_neighbor_indices(box)
    axis_src = [np.flatnonzero(nb[:, i] >= 0) for i in range(d)]
    axis_dst = [nb[axis_src[i], i] for i in range(d)]
    rng = np.random.default_rng(seed if isinstance(seed, np.random.SeedSequence)
                                else np.random.SeedSequence(seed))
    s1 = s2 = s4 = 0.0
    done = 0
    while done < reps:
        B = min(batch, reps - done)
        w = dist.sample(rng, (B, V))
        t_vertex = rng.standard_exponential((B, V))
        raw = rng.standard_exponential((B, d, V))
        counts = np.zeros((B, V))
        counts[:, 0] = 1.0
        for _ in range(n):
            new = np.zeros_like(counts)
            for i in range(d):
                src, dst = axis_src[i], axis_dst[i]
                rate = lam * w[:, src] * w[:, dst]
                opened = raw[:, i, src] <= rate * t_vertex[:, src]
                new[:, dst] += counts[:, src] * opened
            counts = new
        tot = counts.sum(axis=1)
        s1 += tot.sum()
        s2 += (tot ** 2).sum()
        s4 += (tot ** 4).sum()
        done += B
    mean = s1 / reps
    m2 = s2 / reps
    m4 = s4 / reps
    se_mean = math.sqrt(max(m2 - mean * mean, 0.0) / reps)
    se_second = math.sqrt(max(m4 - m2 * m2, 0.0) / reps)
    return PathCountEstimate(d=d, n=n, reps=reps, mean=mean, se_mean=se_mean,
                             second_moment=m2, se_second=se_second)


# ---------------------------------------------------------------------------
# exact pair expectations indexed by the coincidence pattern

def pair_chain_expectation(pattern, dist: WeightDistribution, lam: float,
                           use_bound: bool = False) -> float:
    """E[joint open probability of a walk pair] given where the walks meet.

    pattern[k] says whether the two walks occupy the same vertex after k
    steps; pattern[0] must be True since both start at the origin.  Because
    the coordinate sum grows by one per step, walks can only share a vertex
    at equal step counts, so the weight dependencies form a chain and a
    forward recursion over the support suffices.  State: a vector over the
    shared weight while the walks coincide, a matrix over the weight pair
    while they are apart.  use_bound swaps the exact split factor for its
    2*g*g upper bound everywhere a shared source splits.
    """
    pat = tuple(bool(x) for x in pattern)
    if len(pat) < 1 or not pat[0]:
        raise ValueError("pattern must start at a shared origin")
    a = np.asarray(dist.values, dtype=np.float64)
    p = np.asarray(dist.probs, dtype=np.float64)
    G = edge_pass_probability(lam, a[:, None], a[None, :])
    A = G * p[None, :]
    if use_bound:
        split3 = 2.0 * G[:, :, None] * G[:, None, :]
    else:
        split3 = shared_source_pass_probability(
            lam, a[:, None, None], a[None, :, None], a[None, None, :])
    split3 = split3 * p[None, :, None] * p[None, None, :]

    coin = p.copy()
    apart = None
    for k in range(1, len(pat)):
        if pat[k - 1] and pat[k]:
            coin = coin @ A
        elif pat[k - 1]:
            apart = np.einsum("i,icd->cd", coin, split3)
            coin = None
        elif not pat[k]:
            apart = A.T @ apart @ A
        else:
            coin = np.einsum("ij,ie,je->e", apart, G, G) * p
            apart = None
    return float(coin.sum() if coin is not None else apart.sum())


def _walk_positions(steps: np.ndarray, d: int) -> np.ndarray:
    """(W, n) axis choices -> (W, n, d) positions after each step."""
    return np.cumsum(np.eye(d, dtype=np.int16)[steps], axis=1)


def _patterns_between(pos_a: np.ndarray, pos_b: np.ndarray) -> np.ndarray:
    """(W, n+1) coincidence rows for aligned walk arrays; column 0 is True."""
    eq = (pos_a == pos_b).all(axis=-1)
    lead = np.ones((eq.shape[0], 1), dtype=bool)
    return np.concatenate([lead, eq], axis=1)


@dataclass(frozen=True)
class MomentRatio:
    d: int
    n: int
    value: float          # E count^2 / (E count)^2
    se: float             # 0 for the exact route
    method: str           # "exact" or "mc"
    numerator: float      # E count^2
    denominator: float    # (E count)^2


def path_count_moment_ratio(dist: WeightDistribution, d: int, lam: float, n: int,
                            walk_samples: int | None = None, seed=None,
                            use_bound: bool = False,
                            exhaustive_limit: int = 200_000) -> MomentRatio:
    """Second-moment ratio of the open-path count.

    E count^2 is a sum over ordered pairs of walks of the pair expectation,
    which depends on the pair only through its coincidence pattern.  With
    walk_samples=None all d^(2n) pairs are enumerated (refused above
    exhaustive_limit); otherwise the pattern is sampled by drawing that many
    independent uniform walk pairs, with a second evaluation under a cyclic
    relabeling of the second walk's axes to damp the variance.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    expected = expected_path_count(dist, d, lam, n)
    if expected <= 0.0:
        raise ValueError("expected path count is zero; ratio undefined")
    den = expected ** 2
    cache: dict[tuple, float] = {}

    def value_of(row) -> float:
        key = tuple(bool(v) for v in row)
        if key not in cache:
            cache[key] = pair_chain_expectation(key, dist, lam, use_bound=use_bound)
        return cache[key]

    if walk_samples is None:
        n_pairs = d ** (2 * n)
        if n_pairs > exhaustive_limit:
            raise ValueError(
                f"{n_pairs} walk pairs exceed exhaustive_limit={exhaustive_limit};"
                " pass walk_samples for a sampled estimate")
        steps = np.array(list(itertools.product(range(d), repeat=n)), dtype=np.int8)
        pos = _walk_positions(steps, d)
        total = 0.0
        for j in range(len(steps)):
            rows = _patterns_between(pos, pos[j][None, :, :])
            for row in rows:
                total += value_of(row)
        return MomentRatio(d=d, n=n, value=total / den, se=0.0, method="exact",
                           numerator=total, denominator=den)

    if walk_samples < 2:
        raise ValueError("walk_samples must be >= 2")
    rng = np.random.default_rng(seed if isinstance(seed, np.random.SeedSequence)
                                else np.random.SeedSequence(seed))
    steps_a = rng.integers(0, d, size=(walk_samples, n))
    steps_b = rng.integers(0, d, size=(walk_samples, n))
    pos_a = _walk_positions(steps_a, d)
    rows_plain = _patterns_between(pos_a, _walk_positions(steps_b, d))
    rows_turned = _patterns_between(pos_a, _walk_positions((steps_b + 1) % d, d))
    vals = np.fromiter((0.5 * (value_of(r1) + value_of(r2))
                        for r1, r2 in zip(rows_plain, rows_turned)),
                       dtype=np.float64, count=walk_samples)
    scale = float(d) ** (2 * n)
    num = scale * float(vals.mean())
    se_num = scale * float(vals.std(ddof=1)) / math.sqrt(walk_samples)
    return MomentRatio(d=d, n=n, value=num / den, se=se_num / den, method="mc",
                       numerator=num, denominator=den)


@dataclass(frozen=True)
class SurvivalBound:
    value: float                 # best second-moment lower bound found
    best_n: int                  # path length achieving it (0 if none)
    per_n: tuple                 # (n, ratio, bound) rows for n = 1..n_max

    def bound_at(self, n: int) -> float:
        for row in self.per_n:
            if row[0] == n:
                return row[2]
        raise KeyError(n)


def survival_lower_bound(dist: WeightDistribution, d: int, lam: float, n_max: int,
                         walk_samples: int | None = None, seed=None,
                         use_bound: bool = False,
                         exhaustive_limit: int = 200_000) -> SurvivalBound:
    """max over n <= n_max of (E count)^2 / E count^2, clipped to [0, 1].

    Each n gives P(some open n-path exists) >= 1/ratio, a valid lower bound
    on reaching level n; the max over n is reported with the full trace.
    n starts at 1: the empty path always exists and says nothing.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if expected_path_count(dist, d, lam, 1) <= 0.0:
        rows = tuple((n, math.inf, 0.0) for n in range(1, n_max + 1))
        return SurvivalBound(value=0.0, best_n=0, per_n=rows)
    rows = []
    best, best_n = 0.0, 0
    base = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    children = base.spawn(n_max) if walk_samples is not None else [None] * n_max
    for n in range(1, n_max + 1):
        r = path_count_moment_ratio(dist, d, lam, n, walk_samples=walk_samples,
                                    seed=children[n - 1], use_bound=use_bound,
                                    exhaustive_limit=exhaustive_limit)
        b = min(1.0, 1.0 / r.value)
        rows.append((n, r.value, b))
        if b > best:
            best, best_n = b, n
    return SurvivalBound(value=best, best_n=best_n, per_n=tuple(rows))
