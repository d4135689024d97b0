"""Bound sweeps and the verification suite."""
