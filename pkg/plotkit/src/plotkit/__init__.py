"""Renders run logs and mesh dumps from the landscape-hp solver as figures.

Inputs are plain CSV/JSONL logs and text mesh dumps; this package never
imports the solver.
"""

from .io import ParseError, read_run_csv, read_mesh_dump, read_lab1d_csv
from .figures import slope_final_half, render

__all__ = ["ParseError", "read_run_csv", "read_mesh_dump",
           "read_lab1d_csv", "slope_final_half", "render", "KINDS"]

KINDS = ("envelope", "per-pair", "compare", "mesh",
         "lab1d-envelope", "lab1d-fourier")
