from sonomat.acoustics.arrays import (
    Frustum,
    PhaseSolution,
    TransducerArray,
    clamp_to_frustum,
    focus_phases,
    phases_for_points,
    resolve_focus,
)
from sonomat.acoustics.field import (
    Grid2D,
    field_slice,
    grid_to_csv,
    grid_to_pgm,
    pressure_at,
    pressure_at_points,
    write_grid,
)
from sonomat.acoustics.modulation import (
    FocalPath,
    ModulationState,
    am_envelope,
    stm_path,
)

__all__ = [
    "Frustum",
    "PhaseSolution",
    "TransducerArray",
    "clamp_to_frustum",
    "focus_phases",
    "phases_for_points",
    "resolve_focus",
    "Grid2D",
    "field_slice",
    "grid_to_csv",
    "grid_to_pgm",
    "pressure_at",
    "pressure_at_points",
    "write_grid",
    "FocalPath",
    "ModulationState",
    "am_envelope",
    "stm_path",
]
