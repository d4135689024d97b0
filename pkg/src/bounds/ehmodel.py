"""Energy-arrival laws, the harvest-use-store buffer and channel specifications."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, stats

from src.core.errors import DomainError
from src.utils.logger import get_logger
from src.utils.seeding import stream

logger = get_logger(__name__)

STOCHASTIC_TOL = 1e-12


class EnergyKind(str, enum.Enum):
    CONSTANT = "constant"
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"
    SCALED_BERNOULLI = "scaled_bernoulli"
    TRUNCATED_GAUSSIAN = "truncated_gaussian"


@dataclass(frozen=True)
class EnergyProcess:
    """I.i.d. nonnegative energy arrivals with their first three central moments.

    Build instances through the classmethod constructors; they compute the
    moments once and the instance is immutable afterwards.
    """

    kind: EnergyKind
    params: Tuple[Tuple[str, float], ...]
    mean: float
    variance: float
    third_central_abs: float

    def __post_init__(self) -> None:
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise DomainError("energy process mean must be positive and finite")
        if not (self.variance >= 0 and math.isfinite(self.variance)):
            raise DomainError("energy process variance must be finite and nonnegative")
        if not math.isfinite(self.third_central_abs):
            raise DomainError("energy process third absolute moment must be finite")

    @property
    def parameters(self) -> Dict[str, float]:
        return dict(self.params)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @classmethod
    def constant(cls, level: float) -> "EnergyProcess":
        if not level > 0:
            raise DomainError("constant energy level must be positive")
        return cls(EnergyKind.CONSTANT, (("level", float(level)),), float(level), 0.0, 0.0)

    @classmethod
    def uniform(cls, low: float, high: float) -> "EnergyProcess":
        if not (0 <= low < high):
            raise DomainError("uniform energy needs 0 <= low < high")
        half = 0.5 * (high - low)
        return cls(
            EnergyKind.UNIFORM,
            (("low", float(low)), ("high", float(high))),
            0.5 * (low + high),
            (high - low) ** 2 / 12.0,
            half**3 / 4.0,
        )

    @classmethod
    def exponential(cls, rate: float) -> "EnergyProcess":
        if not rate > 0:
            raise DomainError("exponential rate must be positive")
        scale = 1.0 / rate
        # E|X - 1|^3 = 12/e - 2 for a unit exponential
        return cls(
            EnergyKind.EXPONENTIAL,
            (("rate", float(rate)),),
            scale,
            scale**2,
            (12.0 / math.e - 2.0) * scale**3,
        )

    @classmethod
    def scaled_bernoulli(cls, p: float, level: float) -> "EnergyProcess":
        if not (0 < p <= 1) or not level > 0:
            raise DomainError("scaled_bernoulli needs 0 < p <= 1 and level > 0")
        q = 1.0 - p
        return cls(
            EnergyKind.SCALED_BERNOULLI,
            (("p", float(p)), ("level", float(level))),
            p * level,
            p * q * level**2,
            p * q * (q * q + p * p) * level**3,
        )

    @classmethod
    def truncated_gaussian(cls, mu: float, sd: float, floor: float = 0.0) -> "EnergyProcess":
        if not sd > 0 or floor < 0:
            raise DomainError("truncated_gaussian needs sd > 0 and floor >= 0")
        law = _truncnorm(mu, sd, floor)
        mean, variance = (float(v) for v in law.stats(moments="mv"))
        third = sum(
            integrate.quad(lambda e: abs(e - mean) ** 3 * law.pdf(e), lo, hi, limit=200)[0]
            for lo, hi in ((floor, mean), (mean, np.inf))
        )
        return cls(
            EnergyKind.TRUNCATED_GAUSSIAN,
            (("mu", float(mu)), ("sd", float(sd)), ("floor", float(floor))),
            mean,
            variance,
            float(third),
        )

    @classmethod
    def from_mapping(cls, spec: Mapping[str, Any]) -> "EnergyProcess":
        """Build from ``{"kind": ..., **params}``; ``mean_energy`` fills the natural parameter."""
        kind = EnergyKind(str(spec.get("kind", "constant")))
        mean = spec.get("mean_energy")
        try:
            if kind is EnergyKind.CONSTANT:
                return cls.constant(float(spec.get("level", mean)))
            if kind is EnergyKind.UNIFORM:
                return cls.uniform(float(spec["low"]), float(spec["high"]))
            if kind is EnergyKind.EXPONENTIAL:
                rate = spec.get("rate")
                return cls.exponential(float(rate) if rate is not None else 1.0 / float(mean))
            if kind is EnergyKind.SCALED_BERNOULLI:
                p = float(spec["p"])
                level = spec.get("level")
                return cls.scaled_bernoulli(p, float(level) if level is not None else float(mean) / p)
            return cls.truncated_gaussian(
                float(spec["mu"]), float(spec["sd"]), float(spec.get("floor", 0.0))
            )
        except (KeyError, TypeError) as exc:
            raise DomainError(f"incomplete parameters for {kind.value} energy process") from exc

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 0:
            raise DomainError("sample size must be nonnegative")
        p = self.parameters
        if self.kind is EnergyKind.CONSTANT:
            return np.full(n, p["level"])
        if self.kind is EnergyKind.UNIFORM:
            return rng.uniform(p["low"], p["high"], size=n)
        if self.kind is EnergyKind.EXPONENTIAL:
            return rng.exponential(1.0 / p["rate"], size=n)
        if self.kind is EnergyKind.SCALED_BERNOULLI:
            return p["level"] * (rng.random(n) < p["p"])
        law = _truncnorm(p["mu"], p["sd"], p["floor"])
        return np.asarray(law.rvs(size=n, random_state=rng), dtype=float)


def _truncnorm(mu: float, sd: float, floor: float) -> Any:
    return stats.truncnorm((floor - mu) / sd, np.inf, loc=mu, scale=sd)


@dataclass(frozen=True)
class AwgnSpec:
    noise_var: float

    def __post_init__(self) -> None:
        if not (self.noise_var > 0 and math.isfinite(self.noise_var)):
            raise DomainError("noise_var must be positive")


@dataclass(frozen=True)
class DmcSpec:
    """Row-stochastic W(y|x) with per-input energy cost Lambda(x)."""

    w: np.ndarray
    cost: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.w, dtype=float, copy=True)
        cost = np.array(self.cost, dtype=float, copy=True).reshape(-1)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise DomainError("channel matrix must be two-dimensional and nonempty")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("channel matrix entries must be finite and nonnegative")
        if np.any(np.abs(w.sum(axis=1) - 1.0) > STOCHASTIC_TOL):
            raise DomainError("each channel row must sum to 1")
        if cost.shape != (w.shape[0],):
            raise DomainError("cost vector length must equal the input alphabet size")
        if np.any(cost < 0) or not np.all(np.isfinite(cost)):
            raise DomainError("symbol costs must be finite and nonnegative")
        if not np.any(cost == 0):
            raise DomainError("at least one input symbol must have zero cost")
        w.setflags(write=False)
        cost.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "cost", cost)

    @property
    def input_size(self) -> int:
        return int(self.w.shape[0])

    @property
    def output_size(self) -> int:
        return int(self.w.shape[1])

    @property
    def zero_cost_symbols(self) -> np.ndarray:
        return np.flatnonzero(self.cost == 0)

    @classmethod
    def bsc(cls, crossover: float, cost: Sequence[float] = (0.0, 1.0)) -> "DmcSpec":
        if not (0 <= crossover <= 1):
            raise DomainError("crossover must lie in [0,1]")
        return cls(np.array([[1 - crossover, crossover], [crossover, 1 - crossover]]), np.asarray(cost))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DmcSpec):
            return NotImplemented
        return bool(np.array_equal(self.w, other.w) and np.array_equal(self.cost, other.cost))

    def __hash__(self) -> int:
        return hash((self.w.tobytes(), self.cost.tobytes(), self.w.shape))


@dataclass(frozen=True)
class BufferTrace:
    levels: np.ndarray
    outage_index: Optional[int] = None

    @property
    def outage(self) -> bool:
        return self.outage_index is not None


@dataclass(frozen=True)
class OutagePolicyResult:
    consumptions: np.ndarray
    trace: BufferTrace
    extras: Dict[str, Any] = field(default_factory=dict)


def sample_energies(proc: EnergyProcess, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise DomainError("n must be at least 1")
    return proc.sample(n, stream(seed, "energy"))


def _validate_walk(energies: Sequence[float], consumptions: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    e = np.asarray(energies, dtype=float).reshape(-1)
    c = np.asarray(consumptions, dtype=float).reshape(-1)
    if e.shape != c.shape:
        raise DomainError("energies and consumptions must have equal length")
    if np.any(e < 0) or np.any(c < 0):
        raise DomainError("energies and consumptions must be nonnegative")
    return e, c


def buffer_evolve(energies: Sequence[float], consumptions: Sequence[float]) -> BufferTrace:
    """B_i = (B_{i-1} + E_i - c_i)^+ from B_0 = 0, with the first infeasible slot.

    The recursion is a reflected walk, so levels are S_i - min(0, min_k S_k) for the
    running sum S of the increments. Outage is the first (1-based) i with S_i < 0.
    """
    e, c = _validate_walk(energies, consumptions)
    running = np.concatenate(([0.0], np.cumsum(e - c)))
    levels = running - np.minimum.accumulate(running)
    negative = np.flatnonzero(running[1:] < 0)
    outage = int(negative[0]) + 1 if negative.size else None
    return BufferTrace(levels=levels, outage_index=outage)


def apply_outage_policy(
    energies: Sequence[float], consumptions: Sequence[float]
) -> OutagePolicyResult:
    """Transmit as requested until the first infeasible slot, zero-energy symbols after."""
    e, c = _validate_walk(energies, consumptions)
    requested = buffer_evolve(e, c)
    effective = c.copy()
    if requested.outage_index is not None:
        effective[requested.outage_index - 1 :] = 0.0
    trace = buffer_evolve(e, effective)
    return OutagePolicyResult(
        consumptions=effective,
        trace=BufferTrace(levels=trace.levels, outage_index=requested.outage_index),
        extras={"silenced_slots": int(np.count_nonzero(effective != c))},
    )


__all__ = [
    "AwgnSpec",
    "BufferTrace",
    "DmcSpec",
    "EnergyKind",
    "EnergyProcess",
    "OutagePolicyResult",
    "apply_outage_policy",
    "buffer_evolve",
    "sample_energies",
]
