"""Bounded i.i.d. vertex-weight laws and sampled weight fields.

Every law is a finite table of nonnegative support values with probabilities.
Continuous densities enter only through a quadrature discretisation, so all
moment computations downstream are exact sums over the table.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field as dc_field

import numpy as np

from .lattice import BoxSpec

_MAGIC = b"OCPW1\n"
_PROB_TOL = 1e-12


@dataclass(frozen=True)
class WeightDistribution:
    """Finite-support law of a single vertex weight.

    Parameters
    ----------
    values : tuple of float
        Support points, each in [0, bound].
    probs : tuple of float
        Probabilities, summing to 1 within 1e-12.
    kind : str
        Constructor tag, kept for serialization ("constant", "two_point",
        "table", "quadrature").
    strict : bool
        When True (default) require positive mass on positive values; the
        limit machinery divides by the second moment, which would vanish
        otherwise.  Degenerate all-zero laws are allowed with strict=False
        for boundary studies only.
    """

    values: tuple
    probs: tuple
    kind: str = "table"
    strict: bool = dc_field(default=True, repr=False)

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        prs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "probs", prs)
        if len(vals) == 0 or len(vals) != len(prs):
            raise ValueError("values and probs must be equal-length and nonempty")
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise ValueError(f"support must be finite and nonnegative: {vals}")
        if any(p < 0 for p in prs):
            raise ValueError(f"probabilities must be nonnegative: {prs}")
        if abs(sum(prs) - 1.0) > _PROB_TOL:
            raise ValueError(f"probabilities sum to {sum(prs)!r}, not 1")
        if self.strict and not any(v > 0 and p > 0 for v, p in zip(vals, prs)):
            raise ValueError(
                "law puts no mass on positive weights; pass strict=False "
                "if a degenerate environment is intended"
            )

    # -- constructors -------------------------------------------------

    @classmethod
    def constant(cls, c: float) -> "WeightDistribution":
        return cls((c,), (1.0,), kind="constant")

    @classmethod
    def two_point(cls, p: float, hi: float = 1.0, lo: float = 0.0,
                  strict: bool = True) -> "WeightDistribution":
        """Weight ``hi`` with probability p, else ``lo``."""
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        return cls((hi, lo), (p, 1.0 - p), kind="two_point", strict=strict)

    @classmethod
    def from_table(cls, values, probs, strict: bool = True) -> "WeightDistribution":
        return cls(tuple(values), tuple(probs), kind="table", strict=strict)

    @classmethod
    def from_density(cls, pdf, bound: float, nodes: int = 32) -> "WeightDistribution":
        """Gauss-Legendre discretisation of a density on [0, bound]."""
        if bound <= 0 or nodes < 1:
            raise ValueError("bound must be positive and nodes >= 1")
        x, w = np.polynomial.legendre.leggauss(nodes)
        x = 0.5 * bound * (x + 1.0)
        w = 0.5 * bound * w
        p = np.array([max(float(w_i * pdf(x_i)), 0.0) for x_i, w_i in zip(x, w)])
        total = p.sum()
        if total <= 0:
            raise ValueError("density integrates to zero on [0, bound]")
        return cls(tuple(x), tuple(p / total), kind="quadrature")

    # -- moments -------------------------------------------------------

    @property
    def mean(self) -> float:
        return float(sum(p * v for v, p in zip(self.values, self.probs)))

    @property
    def second_moment(self) -> float:
        return float(sum(p * v * v for v, p in zip(self.values, self.probs)))

    @property
    def bound(self) -> float:
        """Supremum of the support (largest value carrying mass)."""
        return float(max(v for v, p in zip(self.values, self.probs) if p > 0))

    @property
    def label(self) -> str:
        if self.kind == "constant":
            return f"constant({self.values[0]:g})"
        if self.kind == "two_point":
            return f"two_point(p={self.probs[0]:g},hi={self.values[0]:g},lo={self.values[1]:g})"
        pairs = ",".join(f"{v:g}:{p:g}" for v, p in zip(self.values, self.probs))
        if len(pairs) > 60:
            pairs = pairs[:57] + "..."
        return f"{self.kind}({pairs})"

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "values": list(self.values),
            "probs": list(self.probs),
            "strict": self.strict,
        }

    @classmethod
    def from_descriptor(cls, desc: dict) -> "WeightDistribution":
        return cls(tuple(desc["values"]), tuple(desc["probs"]),
                   kind=desc.get("kind", "table"),
                   strict=desc.get("strict", True))

    # -- sampling ------------------------------------------------------

    def cumulative(self) -> np.ndarray:
        cum = np.cumsum(np.asarray(self.probs, dtype=np.float64))
        cum[-1] = 1.0  # guard the top bin against rounding
        return cum

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        idx = np.searchsorted(self.cumulative(), rng.random(size), side="right")
        return np.asarray(self.values, dtype=np.float64)[idx]


def moments(dist: WeightDistribution) -> tuple[float, float, float]:
    """(mean, second moment, support bound) of the weight law."""
    return dist.mean, dist.second_moment, dist.bound


@dataclass(frozen=True)
class WeightField:
    """One sampled i.i.d. weight assignment on a box, immutable after creation."""

    box: BoxSpec
    weights: np.ndarray  # (n_vertices,) float64, row-major
    seed: int
    descriptor: dict = dc_field(default_factory=dict, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.box.n_vertices,):
            raise ValueError(f"weights shape {w.shape} != ({self.box.n_vertices},)")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def grid(self) -> np.ndarray:
        return self.weights.reshape(self.box.shape)


def seed_key(seed) -> list:
    """Normalize an int, int sequence, or SeedSequence to an entropy list.

    Derived streams are spelled seed_key(master) + [replicate, channel] and
    fed to SeedSequence, so every consumer composes the same way and the key
    stays JSON-serializable for manifests.
    """
    if isinstance(seed, np.random.SeedSequence):
        ent = seed.entropy
        return [int(v) for v in ent] if isinstance(ent, (list, tuple)) else [int(ent)]
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    if isinstance(seed, (list, tuple)):
        return [int(v) for v in seed]
    raise TypeError("seed must be an int, a sequence of ints, or a SeedSequence, "
                    f"got {type(seed).__name__}")


def sample_field(dist: WeightDistribution, box: BoxSpec, seed) -> WeightField:
    """Draw an i.i.d. field; the same seed regenerates it bit-exactly.

    ``seed`` is an int, a list of ints, or a SeedSequence; derived streams
    like (master, replicate) lists are welcome.
    """
    key = seed_key(seed)
    rng = np.random.default_rng(seed if isinstance(seed, np.random.SeedSequence)
                                else np.random.SeedSequence(seed))
    w = dist.sample(rng, box.n_vertices)
    stored = key[0] if len(key) == 1 else key
    return WeightField(box=box, weights=w, seed=stored, descriptor=dist.descriptor())


def constant_field(value: float, box: BoxSpec) -> WeightField:
    """Deterministic field, handy for unit fixtures."""
    w = np.full(box.n_vertices, float(value))
    desc = WeightDistribution.constant(value).descriptor() if value > 0 else \
        {"kind": "constant", "values": [float(value)], "probs": [1.0], "strict": False}
    return WeightField(box=box, weights=w, seed=0, descriptor=desc)


def save_field(fld: WeightField, path) -> None:
    """Flat binary dump (JSON header line + row-major float64 body) + sidecar."""
    header = {
        "d": fld.box.d,
        "side": fld.box.side,
        "seed": fld.seed,
        "descriptor": fld.descriptor,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    path = str(path)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(np.ascontiguousarray(fld.weights, dtype="<f8").tobytes())
    with open(path + ".json", "w") as fh:
        json.dump(header, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_field(path) -> WeightField:
    with open(str(path), "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"not a weight-field file: magic {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        box = BoxSpec(d=header["d"], side=header["side"])
        body = fh.read(8 * box.n_vertices)
        w = np.frombuffer(body, dtype="<f8")
        if w.size != box.n_vertices:
            raise ValueError("truncated weight-field body")
    return WeightField(box=box, weights=w.astype(np.float64), seed=header["seed"],
                       descriptor=header["descriptor"])
