"""Central numeric tolerances.

All floating-point thresholds used anywhere in the library live in this one
record so that a test or scenario can tighten/loosen them in a single place.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # flag nesting V_i inside V_j checked via projector defect
    nesting: float = 1e-9
    # transversality margin below which flags count as non-transverse
    transversality: float = 1e-9
    # dedup resolution for limit-set point clouds (flag metric)
    dedup: float = 1e-6
    # singular-value gap ratio must exceed this for a well-defined flag
    gap_threshold: float = 1.0 + 1e-6
    # sliding window length for divergence verdicts on a sequence tail
    tail_window: int = 5
    # declared filling kernels must map this close to the identity
    kernel: float = 1e-10
    # limit flags of sequences tracked by one automaton path must agree to this
    fiber: float = 1e-3
    # matrix invertibility: reject when sigma_min/sigma_max is below this
    condition: float = 1e-12
    # safety inflation factor for sampled-boundary image radius bounds
    sampled_inflation: float = 1.10


DEFAULT_TOLS = Tolerances()
