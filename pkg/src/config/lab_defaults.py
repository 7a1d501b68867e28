"""Numerical defaults for the Zygmund dilation lab.

This module centralizes the knobs shared by kernels, condition checkers,
operators and the lemma verifiers:
- dyadic index ranges for Ricci–Stein synthesis and Littlewood–Paley families
- quadrature orders and tolerances
- sweep shapes (log ranges, refinement factors, stability tolerance)
- Hölder exponents used by the default condition runs

Keeping everything here allows research iterations without sprinkling magic
numbers across the computation modules.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

# -----------------------------
# Dyadic synthesis
# -----------------------------

DEFAULT_J_RANGE: Tuple[int, int] = (-8, 8)  # inclusive
DEFAULT_K_RANGE: Tuple[int, int] = (-8, 8)

# RS term is skipped once its envelope falls below this fraction of the running sum
RS_SKIP_THRESHOLD = 1e-16

# spatial_compact bumps vanish identically past the support radius;
# fourier_exact bumps are treated as negligible past this many radii
FOURIER_BUMP_CUTOFF_RADIUS = 64.0

MOMENT_ORDER = 10

# -----------------------------
# Quadrature
# -----------------------------

GL_ORDER = 16
CELL_AVERAGE_ORDER = 4
QUAD_REL_TOL = 1e-6
QUAD_MAX_REFINE = 4

# improper limits are probed by delta = 2**-m, r = 2**m
IMPROPER_SCHEDULE_DEPTH = 20

# -----------------------------
# Condition sweeps
# -----------------------------

FD_RATIOS: Tuple[float, ...] = (0.25, 0.125)
LOG2_SAMPLE_RANGE: Tuple[float, float] = (-6.0, 6.0)
REFINEMENT_FACTORS: Tuple[int, ...] = (1, 2, 4)
STABILITY_TOL = 0.10  # last two C_hat within 10%

DEFAULT_THETA1 = 1.0
DEFAULT_THETA2 = 0.5

# -----------------------------
# Operator probes
# -----------------------------

PROBE_P_GRID: Tuple[float, ...] = (1.25, 1.5, 2.0, 3.0, 4.0)
# |f| below this fraction of max|f| counts as outside supp(f)
COVERAGE_REL_TOL = 1e-8
# Gauss-Legendre order per oscillatory sub-panel (panel width <= pi / (4 |freq|))
FOURIER_SCAN_ORDER = 8

# -----------------------------
# Littlewood–Paley
# -----------------------------

PAIR_ENVELOPE_L = 2.0
PAIR_ENVELOPE_M = 2.0
LP_REPORT_P: Tuple[float, ...] = (1.5, 2.0, 3.0)

# -----------------------------
# Inequality sweeps
# -----------------------------

DYADIC_SUM_WINDOW: Tuple[int, int] = (-60, 60)
DYADIC_SUM_MAX_WINDOW = 4096
DYADIC_SUM_BOUNDARY_TOL = 1e-15
# central-difference step as a fraction of |x_i|
RS_ESTIMATE_FD_STEP = 1.0 / 16.0
DECAY_INTEGRAL_AGREEMENT = 1e-10

# -----------------------------
# Condition families
# -----------------------------


@dataclass(frozen=True)
class FamilyShape:
    """Which axes a cancellation family integrates over and which it differences."""
    integrate: Tuple[int, ...]
    difference: Tuple[int, ...]


# axis indices are 0-based (x1 -> 0)
CANCELLATION_FAMILIES: Dict[str, FamilyShape] = {
    "C1a": FamilyShape(integrate=(0, 1, 2), difference=()),
    "C1b": FamilyShape(integrate=(0, 1), difference=(2,)),
    "C1c": FamilyShape(integrate=(1, 2), difference=(0,)),
    "C1d": FamilyShape(integrate=(0, 2), difference=(1,)),
    "C2a": FamilyShape(integrate=(0, 1, 2), difference=()),
    "C2b": FamilyShape(integrate=(0,), difference=(1, 2)),
    "C2c": FamilyShape(integrate=(1, 2), difference=(0,)),
    "C2pa": FamilyShape(integrate=(0, 1, 2), difference=()),
    "C2pb": FamilyShape(integrate=(1,), difference=(0, 2)),
    "C2pc": FamilyShape(integrate=(0, 2), difference=(1,)),
}

C3_FAMILIES: Tuple[str, ...] = ("C3a", "C3b", "C3c", "C3pa", "C3pb", "C3pc")
