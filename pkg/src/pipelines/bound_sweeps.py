"""Bound evaluation over blocklength grids, producing CSV-ready rows."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from src.bounds.awgn import AchParams, BoundMode, ConvParams, achievability, capacity_eh_awgn, converse
from src.bounds.dmc import eh_dmc_achievability, eh_dmc_converse
from src.bounds.ehmodel import AwgnSpec, DmcSpec, EnergyProcess
from src.core.errors import DomainError
from src.core.settings import get_settings
from src.utils.logger import get_logger

logger = get_logger(__name__)

Row = Dict[str, Any]


def n_grid(n_min: int, n_max: int, points: int) -> List[int]:
    """Geometric grid of distinct integer blocklengths from n_min to n_max."""
    if n_min < 1 or n_max < n_min or points < 1:
        raise DomainError("need 1 <= n_min <= n_max and points >= 1")
    if points == 1 or n_min == n_max:
        return [int(n_min)]
    return sorted({int(round(v)) for v in np.geomspace(n_min, n_max, points)})


def _fan_out(grid: Sequence[int], compute: Callable[[int], Row]) -> List[Row]:
    workers = get_settings().simulation.workers
    if workers <= 1 or len(grid) == 1:
        rows = [compute(n) for n in grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(compute, grid))
    return sorted(rows, key=lambda row: row["n"])


def awgn_row(
    proc: EnergyProcess,
    ch: AwgnSpec,
    n: int,
    epsilon: float,
    mode: BoundMode = BoundMode.EXPLICIT,
    lam: Optional[float] = None,
    berry_esseen_constant: Optional[float] = None,
    delta_n: Optional[float] = None,
    u_n: Optional[float] = None,
) -> Row:
    ach_kwargs: Dict[str, Any] = {"n_hat": n, "epsilon": epsilon, "lam": lam, "mode": mode}
    if berry_esseen_constant is not None:
        ach_kwargs["berry_esseen_constant"] = berry_esseen_constant
    ach = achievability(proc, ch, AchParams(**ach_kwargs))
    conv = converse(
        proc, ch, ConvParams(n=n, epsilon=epsilon, mode=mode, delta_n_override=delta_n, u_n_override=u_n)
    )
    nan = float("nan")
    return {
        "n": n,
        "epsilon": epsilon,
        "lambda_star": ach.diagnostics.get("lambda_star", nan),
        "mode": mode.value,
        "ach_log2M": ach.log2_M,
        "conv_log2M": conv.log2_M,
        "ach_rate": ach.log2_M / n,
        "conv_rate": conv.log2_M / n,
        "capacity_bits": capacity_eh_awgn(proc, ch),
        "N_n": ach.diagnostics.get("N_n", nan),
        "eps_n": ach.diagnostics.get("eps_n", nan),
        "delta_n": conv.diagnostics.get("delta_n", nan),
        "tau_n": conv.diagnostics.get("tau_n", nan),
        "zeta_n": conv.diagnostics.get("zeta_n", nan),
        "valid_ach": ach.valid,
        "valid_conv": conv.valid,
    }


def awgn_rows(
    proc: EnergyProcess, ch: AwgnSpec, epsilon: float, grid: Iterable[int], **kwargs: Any
) -> List[Row]:
    rows = _fan_out(list(grid), lambda n: awgn_row(proc, ch, n, epsilon, **kwargs))
    logger.info("sweeps.awgn.done", points=len(rows), invalid=sum(not r["valid_ach"] for r in rows))
    return rows


def dmc_row(
    ch: DmcSpec,
    proc: EnergyProcess,
    n: int,
    epsilon: float,
    eta: Optional[float] = None,
    lam: Optional[float] = None,
) -> Row:
    ach = eh_dmc_achievability(ch, proc, n, epsilon, lam)
    conv = eh_dmc_converse(ch, proc, n, epsilon, eta)
    return {
        "n": n,
        "epsilon": epsilon,
        "eta": conv.diagnostics["eta"],
        "C_ED_bits": conv.diagnostics["C_ED_bits"],
        "V_star": conv.diagnostics["V_star"],
        "ach_log2M": ach.log2_M,
        "conv_log2M": conv.log2_M,
        "multiplier": conv.diagnostics["multiplier"],
        "eps_R": conv.diagnostics["eps_R"],
        "valid_ach": ach.valid,
        "valid_conv": conv.valid,
    }


def dmc_rows(
    ch: DmcSpec, proc: EnergyProcess, epsilon: float, grid: Iterable[int], **kwargs: Any
) -> List[Row]:
    rows = _fan_out(list(grid), lambda n: dmc_row(ch, proc, n, epsilon, **kwargs))
    logger.info("sweeps.dmc.done", points=len(rows))
    return rows


def sweep(param: str, values: Sequence[Any], rows_for: Callable[[Any], List[Row]]) -> List[Row]:
    """Concatenate ``rows_for(value)`` per value with leading ``param``/``value`` columns."""
    if not values:
        raise DomainError("sweep needs at least one value")
    out: List[Row] = []
    for value in values:
        for row in rows_for(value):
            out.append({"param": param, "value": value, **row})
    return out


def backoff_exponent(rows: Sequence[Row], capacity_key: str = "capacity_bits", bound_key: str = "ach_log2M") -> float:
    """Slope of log(n C - log2 M) against log n over the valid rows (about 1/2 for a sqrt(n) back-off)."""
    pts = [
        (math.log(r["n"]), math.log(r["n"] * r[capacity_key] - r[bound_key]))
        for r in rows
        if math.isfinite(r[bound_key]) and r["n"] * r[capacity_key] - r[bound_key] > 0
    ]
    if len(pts) < 2:
        raise DomainError("need at least two rows with a positive back-off")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


__all__ = [
    "awgn_row",
    "awgn_rows",
    "backoff_exponent",
    "dmc_row",
    "dmc_rows",
    "n_grid",
    "sweep",
]
