"""Crack-tip fields in porous elastic solids with density-dependent moduli."""

from .material import MaterialParams
from .meshkit import Mesh, PlateSpec, generate_cross_crack_plate, import_gmsh
from .picard import Loads, picard_solve

__all__ = ["MaterialParams", "Mesh", "PlateSpec", "generate_cross_crack_plate", "import_gmsh",
           "Loads", "picard_solve"]
