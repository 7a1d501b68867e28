"""
Subcommand implementations. Each takes a validated RunConfig and a
ReportWriter and returns the number of non-converged quadratures it saw.
"""
from __future__ import annotations

import logging
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from src.cli.schemas import ConditionConfig, LPConfig, RunConfig
from src.config.lab_defaults import CANCELLATION_FAMILIES
from src.grid.field_io import write_field
from src.grid.grid import Grid3, inner_product, lp_norm, sample_field
from src.kernels.descriptors import load_kernel, save_descriptor
from src.kernels.kernels import KernelSpec
from src.operators.convolution import TruncatedConvolver
from src.operators.fourier_scan import FULL, fourier_bound_scan
from src.operators.probes import (
    gaussian_test_family,
    geometric_boxes,
    operator_norm_probe,
    truncation_convergence_probe,
)
from src.research.conditions import (
    AnnulusSweep,
    CancellationPlan,
    ConditionReport,
    HolderParams,
    SamplePlan,
    ScaleSweep,
    check_R,
    check_c3,
    check_cancellation,
    improper_schedule,
)
from src.research.lemmas import (
    RSEstimatePlan,
    decay_integral_sweep,
    dyadic_sum_sweep,
    oscillation_sweep,
    verify_rs_estimates,
)
from src.research.littlewood_paley import (
    LPFamily,
    almost_orthogonality_matrix,
    bump_convolution_envelope,
    calderon_reconstruct,
    decay_fit,
    plane_wave_field,
    square_function,
    square_function_ratios,
)
from src.services.report_writer import ReportWriter
from src.utils.errors import InvariantViolation, NonConvergenceError
from src.utils.math_utils import is_monotone_nondecreasing

logger = logging.getLogger(__name__)

# 描述文件回读校验的采样点数
ROUNDTRIP_POINTS = 100


def _grid(cfg: RunConfig) -> Grid3:
    return Grid3(tuple(cfg.grid.half_extent), tuple(cfg.grid.points))


def _flag(label: str, nonconverged: int, strict: bool) -> int:
    if nonconverged and strict:
        raise NonConvergenceError(f"{label}: {nonconverged} quadratures did not converge",
                                  detail={"task": label, "nonconverged": nonconverged})
    return nonconverged


# ========== synth ==========

def cmd_synthesize(cfg: RunConfig, writer: ReportWriter, workers: int = 1) -> int:
    """Write kernel and bump descriptors and check that the kernel file reads back identically."""
    kernel = cfg.kernel.build()
    bumps = cfg.bumps.build()
    kpath = save_descriptor(writer.out_dir / "kernel.json", kernel)
    bpath = save_descriptor(writer.out_dir / "bumps.json", bumps)
    writer.add_file(kpath)
    writer.add_file(bpath)

    rng = np.random.default_rng(cfg.seed)
    pts = rng.uniform(-4.0, 4.0, size=(ROUNDTRIP_POINTS, 3))
    pts[pts == 0.0] = 1.0
    reloaded = load_kernel(kpath)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        a = np.asarray(kernel(pts[:, 0], pts[:, 1], pts[:, 2]))
        b = np.asarray(reloaded(pts[:, 0], pts[:, 1], pts[:, 2]))
    if not np.array_equal(a, b, equal_nan=True):
        raise InvariantViolation("kernel descriptor does not evaluate identically after reload")
    writer.add("kernel", {"descriptor": kernel.to_dict(), "roundtrip_points": ROUNDTRIP_POINTS})
    writer.add("bumps", bumps.to_dict())
    return 0


# ========== check ==========

def _run_condition(kernel: KernelSpec, c: ConditionConfig, workers: int) -> ConditionReport:
    params = HolderParams(c.theta1, c.theta2)
    if c.id == "R":
        plan = SamplePlan(log2_range=tuple(c.log2_range), base_points=c.base_points,
                          fd_ratios=tuple(c.fd_ratios), refinement=tuple(c.refinement))
        return check_R(kernel, params, plan)
    plan = CancellationPlan(fixed_log2_range=tuple(c.fixed_log2_range), fixed_points=c.fixed_points,
                            fd_ratios=tuple(c.fd_ratios), refinement=tuple(c.refinement),
                            plus_one_c2pb=c.plus_one_c2pb, box_depth=c.box_depth)
    if c.id in CANCELLATION_FAMILIES:
        sweep = AnnulusSweep.geometric(c.annulus_log2_range[0], c.annulus_log2_range[1], c.annulus_points)
        return check_cancellation(kernel, c.id, sweep, params, plan, workers)
    scales = ScaleSweep(tuple(c.scale_log2_range), c.scale_points)
    return check_c3(kernel, c.id, tuple(c.nbf_seeds), scales, params, plan, workers)


def cmd_check(cfg: RunConfig, writer: ReportWriter, workers: int = 1) -> int:
    kernel = cfg.kernel.build()
    bad = 0
    for i, c in enumerate(cfg.conditions):
        name = f"{i:02d}_{c.id}"
        with writer.timed(name):
            report = _run_condition(kernel, c, workers)
        if not is_monotone_nondecreasing(report.refinement_history):
            raise InvariantViolation(f"{name}: C_hat history {report.refinement_history} is not monotone")
        logger.info(f"[check] {name}: C_hat={report.worst_ratio:.6g} stable={report.stable}")
        result: Dict[str, Any] = report.to_dict()
        if c.improper_depth and c.id in CANCELLATION_FAMILIES:
            values, settled = improper_schedule(kernel, c.id, depth=c.improper_depth)
            result["improper"] = {"values": values, "settled": settled}
        writer.add(name, result, report.samples)
        bad += _flag(name, report.nonconverged, cfg.output.strict)
    return bad


# ========== op ==========

def cmd_operator(cfg: RunConfig, writer: ReportWriter, workers: int = 1) -> int:
    kernel = cfg.kernel.build()
    grid = _grid(cfg)
    op = cfg.operator
    bad = 0

    scans: List[Dict[str, Any]] = []
    for i, s in enumerate(op.scans):
        if s.mode == FULL:
            schedule: List[Any] = [tuple(f) for f in (s.frequencies or [])]
        else:
            schedule = list(np.exp2(np.linspace(s.xi_log2_range[0], s.xi_log2_range[1], s.xi_points)))
        with writer.timed(f"scan_{i}"):
            scan = fourier_bound_scan(kernel, s.box.build(), schedule, s.mode, workers=workers)
        writer.add_csv(f"scan_{i}", scan.to_frame())
        scans.append(scan.to_dict())
        bad += _flag(f"scan_{i}", sum(1 for c in scan.converged if not c), cfg.output.strict)
    writer.add("scans", scans)

    probes: List[Dict[str, Any]] = []
    for i, p in enumerate(op.probes):
        box = p.box.build()
        family = gaussian_test_family(tuple(p.widths))
        conv = TruncatedConvolver(kernel, box, grid)
        rows = []
        results = []
        with writer.timed(f"probe_{i}"):
            for pv in p.p:
                res = operator_norm_probe(kernel, box, family, pv, grid, workers, convolver=conv)
                results.append(res.to_dict())
                rows.extend({"p": pv, "label": lbl, "ratio": r, "covered": c}
                            for lbl, r, c in zip(res.labels, res.ratios, res.covered))
        writer.add_csv(f"probe_{i}", pd.DataFrame(rows))
        probes.append({"box": box.to_dict(), "results": results})
    writer.add("probes", probes)

    if op.convergence is not None:
        cc = op.convergence
        boxes = [b.build() for b in cc.boxes] if cc.boxes else geometric_boxes(cc.m_lo, cc.m_hi)
        s2 = 2.0 * cc.width * cc.width
        f = sample_field(grid, lambda x1, x2, x3: np.exp(-(x1 * x1 + x2 * x2 + x3 * x3) / s2))
        with writer.timed("convergence"):
            conv_result = truncation_convergence_probe(kernel, f, boxes, workers)
        writer.add("convergence", conv_result)
        if not conv_result.decreasing:
            raise InvariantViolation(
                f"truncation distances are not strictly decreasing: {conv_result.distances}")
    else:
        writer.add("convergence", None)
    return bad


# ========== lp ==========

def _family(cfg: LPConfig, bumps) -> LPFamily:
    return LPFamily.from_ranges(bumps, tuple(cfg.j_range), tuple(cfg.k_range), cfg.theta1, cfg.theta2)


def cmd_lp(cfg: RunConfig, writer: ReportWriter, workers: int = 1) -> int:
    lp = cfg.lp
    grid = _grid(cfg)
    family = _family(lp, cfg.bumps.build())
    f = plane_wave_field(grid, lp.test_frequency)
    with writer.timed("square_function"):
        g = square_function(f, family)
        recon, residual = calderon_reconstruct(f, family)
        ratios = square_function_ratios(f, family, tuple(lp.ps))
    nf = lp_norm(f, 2.0)
    result: Dict[str, Any] = {
        "family": family.to_dict(),
        "isometry_ratio": lp_norm(g, 2.0) / nf if nf > 0 else 0.0,
        "reconstruction_residual": residual,
        "reconstruction_overlap": inner_product(f, recon) / (nf * nf) if nf > 0 else 0.0,
        "lp_ratios": {f"{p:g}": r for p, r in ratios.items()},
    }
    if cfg.output.write_fields:
        writer.add_file(write_field(writer.out_dir / "square_function.zfld", g))
        writer.add_file(write_field(writer.out_dir / "reconstruction.zfld", recon))
    writer.add("square_function", result)

    kernel = cfg.kernel.build()
    for mode in lp.modes:
        box = lp.sandwich_box.build() if lp.sandwich_box is not None else None
        with writer.timed(f"orthogonality_{mode}"):
            matrix = almost_orthogonality_matrix(family, mode, grid, kernel=kernel, box=box,
                                                 L=lp.L, M=lp.M, workers=workers)
        summary = matrix.to_dict()
        if lp.fit:
            sj, sk, resid = decay_fit(matrix)
            summary["fit"] = {"slope_j": sj, "slope_k": sk, "residual": resid}
        writer.add(f"orthogonality_{mode}", summary, matrix.to_frame())

    if lp.bump_envelope is not None:
        with writer.timed("bump_envelope"):
            env = bump_convolution_envelope(kernel, family.bumps, grid, lp.bump_envelope.build(),
                                            (lp.theta1, lp.theta2))
        writer.add("bump_envelope", env)
    return 0


# ========== lemmas ==========

def cmd_lemmas(cfg: RunConfig, writer: ReportWriter, workers: int = 1) -> int:
    lc = cfg.lemmas
    ref = tuple(lc.refinement)
    jobs: List[tuple] = []
    if lc.oscillation_count:
        jobs.append(("oscillation", lambda: oscillation_sweep(lc.oscillation_count, tuple(lc.oscillation_N),
                                                              cfg.seed, ref)))
    if lc.dyadic_count:
        jobs.append(("dyadic_sum", lambda: dyadic_sum_sweep(lc.dyadic_count, lc.epsilon, cfg.seed, ref)))
    jobs.append(("decay_integral", lambda: decay_integral_sweep(tuple(lc.decay_N), r_points=lc.decay_r_points,
                                                                k_range=tuple(lc.decay_k_range),
                                                                refinement=ref)))
    for name, job in jobs:
        with writer.timed(name):
            sweep = job()
        writer.add(name, sweep, sweep.to_frame())

    bad = 0
    if lc.rs_estimates:
        kernel = cfg.kernel.build()
        with writer.timed("rs_estimates"):
            sweeps = verify_rs_estimates(kernel, RSEstimatePlan(theta2=lc.rs_theta2), workers)
        for sw in sweeps:
            writer.add(f"rs_{sw.estimate}", sw, sw.to_frame())
            bad += sum(1 for r in sw.reports if not r.extras.get("converged", True))
        bad = _flag("rs_estimates", bad, cfg.output.strict)
    return bad


COMMANDS: Dict[str, Callable[[RunConfig, ReportWriter, int], int]] = {
    "synth": cmd_synthesize,
    "check": cmd_check,
    "op": cmd_operator,
    "lp": cmd_lp,
    "lemmas": cmd_lemmas,
}
