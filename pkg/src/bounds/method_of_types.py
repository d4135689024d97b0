"""Exhaustive method-of-types utilities for small alphabets and blocklengths."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterator, List, Sequence, Tuple

import numpy as np

from src.bounds.ehmodel import DmcSpec
from src.bounds.hypotest import beta_discrete_exact
from src.core.errors import DomainError

MAX_TYPE_LENGTH = 20
MAX_TYPE_ALPHABET = 4
MAX_SEQUENCES = 1 << 20

Sequence_ = Tuple[int, ...]


@dataclass(frozen=True)
class TypeVector:
    counts: Tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.counts) or sum(self.counts) != self.n:
            raise DomainError("type counts must be nonnegative and sum to n")

    @property
    def distribution(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n

    @property
    def class_size(self) -> int:
        size = math.factorial(self.n)
        for c in self.counts:
            size //= math.factorial(c)
        return size

    def total_cost(self, cost: Sequence[float]) -> float:
        return float(sum(c * float(l) for c, l in zip(self.counts, cost)))


def _check_regime(alphabet_size: int, n: int) -> None:
    if not (1 <= alphabet_size <= MAX_TYPE_ALPHABET) or not (1 <= n <= MAX_TYPE_LENGTH):
        raise DomainError(
            f"exhaustive type tools need alphabet_size <= {MAX_TYPE_ALPHABET} and n <= {MAX_TYPE_LENGTH}"
        )


def enumerate_types(alphabet_size: int, n: int) -> List[TypeVector]:
    """All compositions of n into ``alphabet_size`` parts (stars and bars)."""
    _check_regime(alphabet_size, n)
    types = []
    for bars in itertools.combinations(range(n + alphabet_size - 1), alphabet_size - 1):
        edges = (-1,) + bars + (n + alphabet_size - 1,)
        counts = tuple(edges[i + 1] - edges[i] - 1 for i in range(alphabet_size))
        types.append(TypeVector(counts, n))
    return types


def type_of_sequence(sequence: Sequence[int], alphabet_size: int) -> TypeVector:
    counts = [0] * alphabet_size
    for symbol in sequence:
        if not 0 <= symbol < alphabet_size:
            raise DomainError(f"symbol {symbol} outside the alphabet")
        counts[symbol] += 1
    return TypeVector(tuple(counts), len(sequence))


def type_class(tv: TypeVector) -> Iterator[Sequence_]:
    """Every sequence of type ``tv``, in lexicographic order."""

    def place(remaining: Tuple[int, ...], length: int) -> Iterator[Sequence_]:
        if length == 0:
            yield ()
            return
        for symbol, count in enumerate(remaining):
            if count:
                rest = remaining[:symbol] + (count - 1,) + remaining[symbol + 1 :]
                for tail in place(rest, length - 1):
                    yield (symbol,) + tail

    yield from place(tv.counts, tv.n)


def _all_sequences(alphabet_size: int, n: int) -> Iterator[Sequence_]:
    if alphabet_size**n > MAX_SEQUENCES:
        raise DomainError("too many sequences for exhaustive enumeration")
    return itertools.product(range(alphabet_size), repeat=n)


def _within_budget(total_cost: float, n: int, a: float) -> bool:
    return total_cost <= n * a + 1e-12 * max(1.0, n * a)


def ttt_sides(
    ch: DmcSpec, a: float, n: int, h: Callable[[Sequence_], float]
) -> Tuple[float, float]:
    """(sup over cost-feasible sequences, sup over feasible types of sup over their class)."""
    _check_regime(ch.input_size, n)
    cost = ch.cost
    by_sequence = max(
        h(x) for x in _all_sequences(ch.input_size, n) if _within_budget(float(sum(cost[i] for i in x)), n, a)
    )
    by_type = max(
        max(h(x) for x in type_class(tv))
        for tv in enumerate_types(ch.input_size, n)
        if _within_budget(tv.total_cost(cost), n, a)
    )
    return float(by_sequence), float(by_type)


def ttt_check(ch: DmcSpec, a: float, n: int, h: Callable[[Sequence_], float]) -> bool:
    lhs, rhs = ttt_sides(ch, a, n, h)
    return abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def product_distribution(marginals: Sequence[np.ndarray]) -> np.ndarray:
    """Flattened product law over the Cartesian product, last factor fastest."""
    return reduce(lambda acc, m: np.outer(acc, m).reshape(-1), marginals[1:], np.asarray(marginals[0], dtype=float))


def channel_output_law(ch: DmcSpec, x: Sequence_) -> np.ndarray:
    return product_distribution([ch.w[symbol] for symbol in x])


def likelihood_ratio_profile(ch: DmcSpec, q_y: Sequence[float], x: Sequence_) -> np.ndarray:
    """Rows (LR, P-mass, Q-mass) sorted by LR then masses; equal for permuted inputs."""
    q = np.asarray(q_y, dtype=float)
    p_law = channel_output_law(ch, x)
    q_law = product_distribution([q] * len(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q_law > 0, p_law / q_law, np.inf)
    profile = np.column_stack([ratio, p_law, q_law])
    order = np.lexsort((profile[:, 2], profile[:, 1], profile[:, 0]))
    return profile[order]


def beta_type_invariance_check(
    ch: DmcSpec, q_y: Sequence[float], tv: TypeVector, alpha: float
) -> float:
    """Spread (max - min) of beta_alpha(W^n(.|x), Q^n) over the type class of ``tv``."""
    if ch.input_size > 3 or ch.output_size > 3 or tv.n > 6:
        raise DomainError("beta invariance check is limited to alphabets <= 3 and n <= 6")
    q = np.asarray(q_y, dtype=float)
    q_law = product_distribution([q] * tv.n)
    betas = [beta_discrete_exact(channel_output_law(ch, x), q_law, alpha).beta for x in type_class(tv)]
    return float(max(betas) - min(betas))


__all__ = [
    "TypeVector",
    "beta_type_invariance_check",
    "channel_output_law",
    "enumerate_types",
    "likelihood_ratio_profile",
    "product_distribution",
    "ttt_check",
    "ttt_sides",
    "type_class",
    "type_of_sequence",
]
