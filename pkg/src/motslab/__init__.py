"""Radial Jang equation blowup near a strictly stable MOTS.

Submodules: profile_expr, radial_data, foliation, jang_radial, barriers,
slice_geometry, penrose, spinor, cylinder_decay and cli. The package root
imports nothing heavy so that the command line can configure thread pools
before numpy loads.
"""

__version__ = "0.1.0"

__all__ = [
    "profile_expr",
    "radial_data",
    "foliation",
    "jang_radial",
    "barriers",
    "slice_geometry",
    "penrose",
    "spinor",
    "cylinder_decay",
    "cli",
]
