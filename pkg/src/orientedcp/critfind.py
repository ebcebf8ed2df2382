"""Survival estimation, subcritical decay checks, and critical-rate scans.

Survival on a finite box is a proxy: the process starts from the origin
corner, the boundary absorbs (arrows leaving the box are dropped), and
"survived" means the infected set is nonempty at the horizon.  The proxy is
honest only together with its convergence protocol, so scans can re-probe
at doubled box side and horizon and report whether the estimate moved.

Reference rates: 1 / (d * E[rho^2]) serves both as the mean-field
prediction for the critical rate and as the provable floor below which the
weighted occupancy decays exponentially; scans must land above that floor
up to tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import harris, kinetics
from .errors import ScanError
from .kinetics import Configuration, run, weighted_origin_occupancy
from .lattice import BoxSpec
from .weights import WeightDistribution, sample_field, seed_key


@dataclass(frozen=True)
class SurvivalEstimate:
    lam: float
    d: int
    side: int
    horizon: float
    reps: int
    p_hat: float
    se: float
    box_converged: bool | None = None   # set only when a doubling check ran


def _survival_chunk(args) -> int:
    desc, d, side, lam, horizon, key, r0, r1 = args
    dist = WeightDistribution.from_descriptor(desc)
    box = BoxSpec(d=d, side=side)
    hits = 0
    for r in range(r0, r1):
        fld = sample_field(dist, box, np.random.SeedSequence(key + [r, 0]))
        res = run(Configuration.single_seed(box), fld, lam, horizon,
                  seed=np.random.SeedSequence(key + [r, 1]))
        hits += res.survived
    return hits


def survival_probability(dist: WeightDistribution, d: int, side: int, lam: float,
                         horizon: float, reps: int, seed,
                         jobs: int = 1) -> SurvivalEstimate:
    """Fresh weight field per replicate, infection from the origin corner.

    Replicate seeds depend on the replicate index only, so the answer is
    invariant under jobs (chunks just partition the index range).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    key = seed_key(seed)
    jobs = max(1, int(jobs))
    if jobs == 1:
        hits = _survival_chunk((dist.descriptor(), d, side, lam, horizon,
                                key, 0, reps))
    else:
        from concurrent.futures import ProcessPoolExecutor
        edges = np.linspace(0, reps, jobs + 1).astype(int)
        work = [(dist.descriptor(), d, side, lam, horizon, key,
                 int(edges[i]), int(edges[i + 1])) for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            hits = sum(pool.map(_survival_chunk, work))
    p = hits / reps
    return SurvivalEstimate(lam=float(lam), d=d, side=side, horizon=float(horizon),
                            reps=reps, p_hat=p, se=math.sqrt(p * (1.0 - p) / reps))


def survival_indicators_nested(dist: WeightDistribution, d: int, side: int,
                               lams, horizon: float, reps: int, seed):
    """Survival indicators at several rates on one shared event structure.

    The structure is built at the largest rate and thinned down, so for each
    replicate the indicator at a smaller rate implies the indicator at any
    larger one.  Returns (estimates ordered like ``lams``, (reps, k) bool
    matrix).  Replays the full event list per replicate; meant for small
    boxes where strict nesting is worth the cost.
    """
    lams = [float(l) for l in lams]
    if any(l <= 0 for l in lams):
        raise ValueError("rates must be positive")
    lam_max = max(lams)
    box = BoxSpec(d=d, side=side)
    key = seed_key(seed)
    ind = np.zeros((reps, len(lams)), dtype=bool)
    for r in range(reps):
        fld = sample_field(dist, box, np.random.SeedSequence(key + [r, 0]))
        rep = harris.build(box, fld, lam_max, horizon,
                           np.random.SeedSequence(key + [r, 1]))
        thinned = harris.thin_arrows(rep, [l / lam_max for l in lams],
                                     np.random.SeedSequence(key + [r, 2]))
        for k, th in enumerate(thinned):
            ind[r, k] = bool(harris.percolate_forward(th, [0]))
    ests = []
    for k, lam in enumerate(lams):
        p = float(ind[:, k].mean())
        ests.append(SurvivalEstimate(lam=lam, d=d, side=side, horizon=float(horizon),
                                     reps=reps, p_hat=p,
                                     se=math.sqrt(p * (1.0 - p) / reps)))
    return ests, ind


@dataclass(frozen=True)
class EnvelopeRow:
    t: float
    f_hat: float
    se: float
    envelope: float
    ok: bool


@dataclass(frozen=True)
class DecayReport:
    d: int
    lam: float
    rate_floor: float          # 1 / (d * E rho^2)
    envelope_rows: tuple
    envelope_ok: bool
    survival: SurvivalEstimate
    noise_floor: float
    below_floor: bool


def check_subcritical_decay(dist: WeightDistribution, d: int, lam_grid,
                            horizon: float, reps: int, seed,
                            times=(1.0, 2.0, 4.0), occupancy_reps: int | None = None,
                            survival_side: int = 10, noise_floor: float = 0.01,
                            ) -> list[DecayReport]:
    """Verify exponential decay below the mean-field rate, per grid point.

    For each rate: the weighted apex occupancy must sit under the
    exponential envelope mean * exp((d * lam * Erho^2 - 1) t) within 3
    standard errors at every requested time, and the survival proxy at the
    horizon must be under the noise floor.  Rates at or above the floor
    rate are rejected up front.
    """
    m2 = dist.second_moment
    if m2 <= 0:
        raise ValueError("weight law has zero second moment")
    floor_rate = 1.0 / (d * m2)
    lams = [float(l) for l in lam_grid]
    bad = [l for l in lams if l >= floor_rate]
    if bad:
        raise ValueError(f"rates {bad} are not below 1/(d*Erho^2) = {floor_rate:.6g}")
    key = seed_key(seed)
    out = []
    for k, lam in enumerate(lams):
        occ = weighted_origin_occupancy(dist, d, lam, times,
                                        occupancy_reps or reps, seed=key + [k, 0])
        rows = []
        for t, v, se in zip(occ.times, occ.values, occ.standard_errors):
            env = kinetics.decay_envelope(dist, d, lam, t)
            rows.append(EnvelopeRow(t=t, f_hat=v, se=se, envelope=env,
                                    ok=v <= env + 3.0 * se))
        surv = survival_probability(dist, d, survival_side, lam, horizon, reps,
                                    seed=key + [k, 1])
        out.append(DecayReport(d=d, lam=lam, rate_floor=floor_rate,
                               envelope_rows=tuple(rows),
                               envelope_ok=all(r.ok for r in rows),
                               survival=surv, noise_floor=noise_floor,
                               below_floor=surv.p_hat <= noise_floor))
    return out


def scan_defaults(d: int) -> dict:
    """Box side and horizon defaults tuned for desk-scale scans."""
    table = {2: (24, 24.0), 3: (12, 20.0), 4: (8, 18.0), 5: (7, 16.0)}
    if d in table:
        side, horizon = table[d]
    else:
        side, horizon = max(4, 14 // d + 3), 12.0
    return {"side": side, "horizon": horizon}


@dataclass(frozen=True)
class CritScanResult:
    d: int
    dist_label: str
    side: int
    horizon: float
    threshold: float
    tol: float
    bracket: tuple            # (lo, hi) at termination
    lam_hat: float
    status: str               # "converged" or "statistically_limited"
    trace: tuple              # SurvivalEstimate probes, in probe order
    mean_field_ref: float     # 1 / (d * E rho^2)
    lower_bound_ref: float    # same number, in its role as the decay floor
    box_converged: bool | None
    box_check: tuple          # () or (base, doubled) SurvivalEstimate pair

    @property
    def scaled(self) -> float:
        """lam_hat expressed in units of the mean-field rate."""
        return self.lam_hat / self.mean_field_ref


def estimate_critical_rate(dist: WeightDistribution, d: int,
                           side: int | None = None, horizon: float | None = None,
                           reps_per_probe: int = 2000, threshold: float = 0.05,
                           tol: float | None = None, seed=0,
                           bracket_budget: int = 6, check_box: bool = True,
                           jobs: int = 1) -> CritScanResult:
    """Bracket and bisect the rate where the survival proxy crosses threshold.

    Bracketing starts at (0.5, 2.0) times the mean-field rate and widens
    geometrically within budget; failure raises ScanError carrying the
    probe trace.  A bisection probe whose estimate is within 2 standard
    errors of the threshold is re-probed once at 4x replicates; if still
    inconclusive the scan stops early with status "statistically_limited".
    check_box re-probes the answer at doubled side and horizon and flags
    whether the estimate moved by more than 3 joint standard errors.
    """
    m2 = dist.second_moment
    if m2 <= 0:
        raise ValueError("weight law has zero second moment; nothing can spread")
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    mf = 1.0 / (d * m2)
    defaults = scan_defaults(d)
    side = side if side is not None else defaults["side"]
    horizon = horizon if horizon is not None else defaults["horizon"]
    tol = tol if tol is not None else 0.1 * mf
    if tol <= 0:
        raise ValueError("tol must be positive")
    key = seed_key(seed)
    trace = []
    counter = [0]

    def probe(lam: float, reps: int) -> SurvivalEstimate:
        est = survival_probability(dist, d, side, lam, horizon, reps,
                                   seed=key + [counter[0]], jobs=jobs)
        counter[0] += 1
        trace.append(est)
        return est

    # bracket ends sit far from the threshold, so a coarse read suffices;
    # full replicates are spent on the bisection probes only
    bracket_reps = max(reps_per_probe // 4, 200)
    lo, hi = 0.5 * mf, 2.0 * mf
    e_lo = probe(lo, bracket_reps)
    tries = 0
    while e_lo.p_hat > threshold:
        tries += 1
        if tries > bracket_budget:
            raise ScanError(f"no subcritical end below {lo:.6g}", trace)
        lo *= 0.5
        e_lo = probe(lo, bracket_reps)
    e_hi = probe(hi, bracket_reps)
    tries = 0
    while e_hi.p_hat < threshold:
        tries += 1
        if tries > bracket_budget:
            raise ScanError(f"no supercritical end up to {hi:.6g}", trace)
        hi *= 2.0
        e_hi = probe(hi, bracket_reps)

    status = "converged"
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        est = probe(mid, reps_per_probe)
        if abs(est.p_hat - threshold) < 2.0 * est.se:
            est = probe(mid, 4 * reps_per_probe)
            if abs(est.p_hat - threshold) < 2.0 * est.se:
                status = "statistically_limited"
                break
        if est.p_hat > threshold:
            hi = mid
        else:
            lo = mid
    lam_hat = 0.5 * (lo + hi)

    box_converged = None
    box_pair = ()
    if check_box:
        base = survival_probability(dist, d, side, lam_hat, horizon,
                                    reps_per_probe, seed=key + [900_000],
                                    jobs=jobs)
        doubled = survival_probability(dist, d, 2 * side, lam_hat, 2.0 * horizon,
                                       max(reps_per_probe // 4, 200),
                                       seed=key + [900_001], jobs=jobs)
        joint = math.sqrt(base.se ** 2 + doubled.se ** 2)
        box_converged = abs(base.p_hat - doubled.p_hat) <= 3.0 * max(joint, 1e-12)
        box_pair = (base, doubled)
    return CritScanResult(d=d, dist_label=dist.label, side=side, horizon=float(horizon),
                          threshold=threshold, tol=tol, bracket=(lo, hi),
                          lam_hat=lam_hat, status=status, trace=tuple(trace),
                          mean_field_ref=mf, lower_bound_ref=mf,
                          box_converged=box_converged, box_check=box_pair)
