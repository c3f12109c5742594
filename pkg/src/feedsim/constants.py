"""Shared defaults. Seeds are fixed constants, never wall-clock derived."""

DEFAULT_SEED = 12345
DEFAULT_MC_SAMPLES = 1_000_000
