"""Monte Carlo verification of the save-and-transmit error events."""

from .mcsim import (
    EndToEndReport,
    EventEstimate,
    SimConfig,
    end_to_end_code,
    simulate_confusion,
    simulate_events,
    simulate_info_density_cdf,
    simulate_outage,
    simulate_saving_phase,
)

__all__ = [
    "EndToEndReport",
    "EventEstimate",
    "SimConfig",
    "end_to_end_code",
    "simulate_confusion",
    "simulate_events",
    "simulate_info_density_cdf",
    "simulate_outage",
    "simulate_saving_phase",
]
