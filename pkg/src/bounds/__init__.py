"""Finite-blocklength bounds for energy-harvesting channels."""

from .awgn import AchParams, BoundMode, BoundResult, ConvParams, achievability, capacity_eh_awgn, converse
from .dmc import blahut_arimoto_constrained, eh_dmc_achievability, eh_dmc_converse
from .ehmodel import AwgnSpec, DmcSpec, EnergyProcess

__all__ = [
    "AchParams",
    "AwgnSpec",
    "BoundMode",
    "BoundResult",
    "ConvParams",
    "DmcSpec",
    "EnergyProcess",
    "achievability",
    "blahut_arimoto_constrained",
    "capacity_eh_awgn",
    "converse",
    "eh_dmc_achievability",
    "eh_dmc_converse",
]
