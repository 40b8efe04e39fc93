"""Exhaustive retention-aware search over (tiling scheme, operating point).

Every candidate is evaluated with the analytic energy model; the argmin is
returned together with the full sweep and a baseline report. The baseline
fixes the memory operation at maximum swing with literal-ceiling refresh
counting and no gating — the best a fixed memory operation can do — so the
optimized decision always dominates it.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

from .config import GemmWorkload, HardwareConfig, MemorySpec, VpdOperatingPoint
from .energy import EnergyReport, estimate_energy
from .lifetime import compute_lifetimes
from .tiling import TilingScheme, enumerate_tilings

DEFAULT_CANDIDATE_CAP = 10**6
DEFAULT_VDD_MV = 1000.0
DEFAULT_SWING_BETA = 0.8


class CandidateCapError(Exception):
    """The exhaustive sweep would exceed the configured candidate cap."""


@dataclass(frozen=True)
class SchedulingDecision:
    """Energy-optimal (scheme, operating point) plus everything it beat."""

    scheme: TilingScheme
    vpd_mv: float
    reference_voltage_mv: float
    report: EnergyReport
    sweep: tuple[EnergyReport, ...]
    baseline: EnergyReport
    refresh_policy: str
    gating_enabled: bool


def default_swing_model(
    vpd_mv: float, vdd_mv: float = DEFAULT_VDD_MV, beta: float = DEFAULT_SWING_BETA
) -> tuple[float, float]:
    """Read-bitline levels (data 1, data 0) for a pull-down target voltage.

    Data 1 holds the precharged bitline at VDD; data 0 is pulled down toward
    the target by the swing fraction `beta`.
    """
    return vdd_mv, vdd_mv - beta * (vdd_mv - vpd_mv)


def reference_voltage(
    pt: VpdOperatingPoint,
    swing_model: Callable[[float], tuple[float, float]] | None = None,
    *,
    vdd_mv: float = DEFAULT_VDD_MV,
    beta: float = DEFAULT_SWING_BETA,
) -> float:
    """Sense-amp reference: midpoint of the bitline swing between data 1 and 0."""
    if swing_model is None:
        v_data1, v_data0 = default_swing_model(pt.vpd_mv, vdd_mv, beta)
    else:
        v_data1, v_data0 = swing_model(pt.vpd_mv)
    return (v_data1 + v_data0) / 2.0


def _report_key(report: EnergyReport):
    return (report.e_total, report.vpd_mv) + report.scheme.sort_key()


def _evaluate_scheme(
    scheme: TilingScheme,
    w: GemmWorkload,
    h: HardwareConfig,
    spec: MemorySpec,
    policy: str,
    enable_gating: bool,
) -> tuple[list[EnergyReport], EnergyReport]:
    """Sweep reports for one scheme plus its fixed-max-swing baseline report."""
    profile = compute_lifetimes(scheme, h)
    reports = [
        estimate_energy(scheme, profile, pt, w, h, spec, policy=policy, enable_gating=enable_gating)
        for pt in spec.points
    ]
    baseline = estimate_energy(
        scheme, profile, spec.baseline_point, w, h, spec, policy="ceil", enable_gating=False
    )
    return reports, baseline


def _evaluate_batch(args) -> list[tuple[list[EnergyReport], EnergyReport]]:
    schemes, w, h, spec, policy, enable_gating = args
    return [_evaluate_scheme(s, w, h, spec, policy, enable_gating) for s in schemes]


def optimize(
    w: GemmWorkload,
    h: HardwareConfig,
    spec: MemorySpec,
    *,
    policy: str = "span",
    enable_gating: bool = True,
    max_candidates: int = DEFAULT_CANDIDATE_CAP,
    jobs: int = 1,
) -> SchedulingDecision:
    """Evaluate every (scheme, operating point) pair and return the argmin.

    Ties break toward lower vpd_mv, then lexicographic scheme order, so
    repeated runs and parallel runs return identical decisions.
    """
    schemes = enumerate_tilings(w, h)
    n_candidates = len(schemes) * len(spec.points)
    if n_candidates > max_candidates:
        raise CandidateCapError(
            f"{n_candidates} candidates exceed the cap of {max_candidates}; "
            "raise --max-candidates to search exhaustively"
        )

    if jobs > 1 and len(schemes) > 1:
        batches = [schemes[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batch_results = list(
                pool.map(
                    _evaluate_batch,
                    [(b, w, h, spec, policy, enable_gating) for b in batches],
                )
            )
        by_scheme: dict[tuple, tuple[list[EnergyReport], EnergyReport]] = {}
        for batch, results in zip(batches, batch_results):
            for scheme, result in zip(batch, results):
                by_scheme[scheme.sort_key()] = result
        results = [by_scheme[s.sort_key()] for s in schemes]
    else:
        results = [_evaluate_scheme(s, w, h, spec, policy, enable_gating) for s in schemes]

    sweep: list[EnergyReport] = []
    for reports, _ in results:
        sweep.extend(reports)
    chosen = min(sweep, key=_report_key)
    baseline = min((b for _, b in results), key=_report_key)

    return SchedulingDecision(
        scheme=chosen.scheme,
        vpd_mv=chosen.vpd_mv,
        reference_voltage_mv=reference_voltage(spec.point_at(chosen.vpd_mv)),
        report=chosen,
        sweep=tuple(sweep),
        baseline=baseline,
        refresh_policy=policy,
        gating_enabled=enable_gating,
    )
