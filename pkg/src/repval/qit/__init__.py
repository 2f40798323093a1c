"""Quantum information measures, the inequality battery and strategy rounding."""
from .measures import (
    bures_sq,
    classical_bures_sq,
    classical_fidelity,
    classical_relative_entropy,
    classical_relative_min_entropy,
    entropy,
    fidelity,
    multipartite_mutual_information,
    mutual_information,
    raz_check,
    relative_entropy,
    relative_min_entropy,
    shannon_entropy,
    uhlmann_unitary,
)
from .rounding import RoundingResult, strategy_rounding

__all__ = [
    "bures_sq", "classical_bures_sq", "classical_fidelity", "classical_relative_entropy",
    "classical_relative_min_entropy", "entropy", "fidelity", "multipartite_mutual_information",
    "mutual_information", "raz_check", "relative_entropy", "relative_min_entropy",
    "shannon_entropy", "uhlmann_unitary", "RoundingResult", "strategy_rounding",
]
