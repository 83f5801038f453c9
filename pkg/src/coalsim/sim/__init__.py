"""Exact simulation of the beta n-coalescent."""
from ._backend import BACKEND
from .chains import (
    BlockCountTrajectory,
    LabelledPartitionTrajectory,
    SpectrumTrajectory,
    restrict,
    simulate_block_count,
    simulate_labelled,
    simulate_spectrum,
)
from .ensemble import EnsembleStats, ExperimentSpec, SeedPolicy, run_ensemble

__all__ = [
    "BACKEND",
    "BlockCountTrajectory",
    "EnsembleStats",
    "ExperimentSpec",
    "LabelledPartitionTrajectory",
    "SeedPolicy",
    "SpectrumTrajectory",
    "restrict",
    "run_ensemble",
    "simulate_block_count",
    "simulate_labelled",
    "simulate_spectrum",
]
