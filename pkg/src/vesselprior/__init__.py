"""Generative functional priors for biaxial vessel constitutive laws."""

from .constitutive import (
    BiaxialStress,
    BiaxialStretch,
    FourFiberParams,
    StressField,
    cauchy_stress,
    pseudo_invariants,
    strain_energy,
    stress_grid,
)
from .synthgen import (
    MeasurementSet,
    ParamRanges,
    PriorDataset,
    SensorLayout,
    generate_dataset,
    grid_layout,
    line_layout,
    make_measurements,
    sample_params,
)

__version__ = "0.1.0"

__all__ = [
    "BiaxialStress", "BiaxialStretch", "FourFiberParams", "StressField",
    "cauchy_stress", "pseudo_invariants", "strain_energy", "stress_grid",
    "MeasurementSet", "ParamRanges", "PriorDataset", "SensorLayout",
    "generate_dataset", "grid_layout", "line_layout", "make_measurements",
    "sample_params",
]
