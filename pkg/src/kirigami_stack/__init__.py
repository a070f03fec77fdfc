"""Fold voxelized meshes into single kirigami strips and stack them compactly."""

from .errors import KirigamiError
from .fold_kinematics import (
    FoldConfiguration,
    angles_for_placement,
    check_disjoint,
    folded_configuration,
    hinge_length,
    interpolate_configuration,
    strip_fk,
    thick_geometry,
)
from .mesh_io import parse_mesh, write_geometry
from .planfile import parse_plan, serialize_plan
from .stacker import (
    assign_uniform_plan,
    break_cycle,
    compactness_metrics,
    enumerate_nonuniform_plans,
    search_compactest,
    stack_forward_kinematics,
    validate_stacking,
)
from .stripifier import find_hamiltonian_cycle, validate_cycle
from .transformer import common_stacking, hinge_diff, verify_transform
from .voxel_surface import (
    build_panel_network,
    extract_outer_shell,
    network_from_cells,
    network_from_mesh,
    voxelize_surface,
)

__version__ = "0.1.0"

__all__ = [
    "FoldConfiguration",
    "KirigamiError",
    "angles_for_placement",
    "assign_uniform_plan",
    "break_cycle",
    "build_panel_network",
    "check_disjoint",
    "common_stacking",
    "compactness_metrics",
    "enumerate_nonuniform_plans",
    "extract_outer_shell",
    "find_hamiltonian_cycle",
    "folded_configuration",
    "hinge_diff",
    "hinge_length",
    "interpolate_configuration",
    "network_from_cells",
    "network_from_mesh",
    "parse_mesh",
    "parse_plan",
    "search_compactest",
    "serialize_plan",
    "stack_forward_kinematics",
    "strip_fk",
    "thick_geometry",
    "validate_cycle",
    "validate_stacking",
    "verify_transform",
    "voxelize_surface",
    "write_geometry",
]
