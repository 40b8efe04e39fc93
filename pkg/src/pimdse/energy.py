"""Energy model for a (tiling scheme, operating point) candidate.

Total energy splits into the PIM macro part and the buffer part. The macro
part charges access plus processing-unit energy per row activation and
refresh energy per occupied row per refresh period survived; the buffer
part charges per-byte tile traffic plus per-byte refresh when the buffer
is eDRAM. Refresh skipping enters through the `span` counting policy (no
refresh when a tile's lifetime fits one retention period, none after last
use); sense-amplifier power gating scales the sense-amp share of access
energy by the workload's input bit sparsity.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .config import GemmWorkload, HardwareConfig, MemorySpec, VpdOperatingPoint
from .lifetime import LifetimeProfile, compute_lifetimes
from .tiling import TilingScheme, tile_extents

REFRESH_POLICIES = ("span", "ceil")

# Share of PIM-macro power spent on memory access at the max-swing point;
# the default processing-unit energy is derived to reproduce it.
MACRO_MEMORY_POWER_SHARE = 0.7198


@dataclass(frozen=True)
class OperandCounts:
    input: int
    weight: int
    output: int

    @property
    def total(self) -> int:
        return self.input + self.weight + self.output


@dataclass(frozen=True)
class EnergyReport:
    """All energy components for one (scheme, operating point) candidate."""

    scheme: TilingScheme
    vpd_mv: float
    e_total: float
    e_pim: float
    e_buffer: float
    e_overhead: float            # scheduler/controller fraction of pim + buffer
    e_pim_access: float
    e_pim_pu: float
    e_pim_refresh: float
    e_buffer_access: float
    e_buffer_refresh: float
    p_n: int                     # PIM row activations
    b_n_bytes: float             # buffer traffic in bytes
    refresh_events: OperandCounts
    refresh_rows_weight: int     # row-refresh operations in the macro


def _exact_ratio_ceil(lifetime_s: float, retention_s: float) -> int:
    # Fraction() keeps the binary floats exact so the boundary cases are stable.
    ratio = Fraction(lifetime_s) / Fraction(retention_s)
    return -(-ratio.numerator // ratio.denominator)


def refresh_count(lifetime_s: float, retention_s: float, policy: str = "span") -> int:
    """Refreshes a datum needs over its lifetime under a counting policy.

    `span` counts periodic refreshes strictly inside the lifetime: zero when
    the lifetime fits within one retention period, and never one at or past
    the moment of last use. `ceil` is the literal reading of the lifetime /
    retention ratio, which refreshes even data about to die.
    """
    if lifetime_s < 0:
        raise ValueError("lifetime_s must be >= 0")
    if retention_s <= 0:
        raise ValueError("retention_s must be > 0")
    if policy not in REFRESH_POLICIES:
        raise ValueError(f"unknown policy {policy!r}, expected one of {REFRESH_POLICIES}")
    if lifetime_s == 0:
        return 0
    count = _exact_ratio_ceil(lifetime_s, retention_s)
    if policy == "span":
        return max(0, count - 1)
    return count


def access_energy(pt: VpdOperatingPoint, gated_fraction: float = 0.0) -> float:
    """Per-activation access energy with sense-amp power gating applied.

    Gating zeroes the sense amplifier for the fraction of broadcast input
    bits that are zero; only the sense-amp share of access energy shrinks.
    """
    if not 0.0 <= gated_fraction <= 1.0:
        raise ValueError("gated_fraction must lie in [0, 1]")
    return pt.access_energy * (1.0 - pt.component_shares.sense_amp * gated_fraction)


def processing_unit_energy(
    h: HardwareConfig, w: GemmWorkload, baseline_access_energy: float = 1.0
) -> float:
    """Per-activation adder-tree/accumulator energy.

    Unless overridden via `h.pu_energy`, chosen so memory access makes up
    MACRO_MEMORY_POWER_SHARE of macro power at the max-swing point. The
    default is processing-type independent: equal-throughput bit-serial and
    bit-parallel units draw similar power.
    """
    if h.pu_energy is not None:
        return h.pu_energy
    share = MACRO_MEMORY_POWER_SHARE
    return baseline_access_energy * (1.0 - share) / share


def _weight_refresh_rows(scheme: TilingScheme, w: GemmWorkload, h: HardwareConfig) -> int:
    """Macro rows refreshed per refresh pass, summed over all weight residencies.

    Rows are counted at subarray granularity (one refresh operation per
    occupied subarray row), so narrow subarrays spread the same tile over
    proportionally more refresh operations.
    """
    total = 0
    for count_k, size_k in tile_extents(w.k_dim, scheme.shape.tk):
        for count_n, size_n in tile_extents(w.n_dim, scheme.shape.tn):
            rows = -(-(size_k * size_n * w.weight_bits) // h.subarray_cols)
            total += count_k * count_n * rows
    return total


def estimate_energy(
    scheme: TilingScheme,
    profile: LifetimeProfile,
    pt: VpdOperatingPoint,
    w: GemmWorkload,
    h: HardwareConfig,
    spec: MemorySpec,
    *,
    policy: str = "span",
    enable_gating: bool = True,
) -> EnergyReport:
    """Evaluate the full energy model for one candidate.

    Row activations follow from the cycle model (every cycle activates one
    ganged row). Buffer traffic is the minimal weight-stationary staging:
    each input tile loaded once, each weight tile staged through once, each
    output tile read and written per accumulation visit.
    """
    expected = compute_lifetimes(scheme, h)
    if (
        expected.input.lifetime_cycles != profile.input.lifetime_cycles
        or expected.weight.lifetime_cycles != profile.weight.lifetime_cycles
        or expected.output.lifetime_cycles != profile.output.lifetime_cycles
    ):
        raise ValueError("lifetime profile inconsistent with tiling scheme")

    gm, gk, gn = scheme.trip_counts
    serial = w.weight_bits if h.processing_type == "bit-serial" else 1
    p_n = w.input_bits * w.m_dim * w.k_dim * gn * serial

    gated = w.input_bit_sparsity if enable_gating else 0.0
    e_acc = access_energy(pt, gated)
    e_pu = processing_unit_energy(h, w, spec.baseline_point.access_energy)
    e_pim_access = e_acc * p_n
    e_pim_pu = e_pu * p_n

    count_weight = refresh_count(profile.weight.lifetime_s, pt.retention_s, policy)
    rows_weight = _weight_refresh_rows(scheme, w, h)
    e_pim_refresh = pt.refresh_energy * rows_weight * count_weight
    e_pim = e_pim_access + e_pim_pu + e_pim_refresh

    input_bytes = w.m_dim * w.k_dim * w.input_bits / 8.0
    staged_weight_bytes = w.k_dim * w.n_dim * w.weight_bits / 8.0
    output_bytes_resident = w.m_dim * w.n_dim * w.accum_bits / 8.0
    output_traffic = 2.0 * gk * output_bytes_resident   # read + write per visit
    b_n = input_bytes + staged_weight_bytes + output_traffic
    e_buffer_access = spec.buffer_access_energy * b_n

    if spec.buffer_kind == "edram":
        count_input = refresh_count(profile.input.lifetime_s, spec.buffer_retention_s, policy)
        count_output = refresh_count(profile.output.lifetime_s, spec.buffer_retention_s, policy)
        e_buffer_refresh = spec.buffer_refresh_energy * (
            input_bytes * count_input + output_bytes_resident * count_output
        )
    else:
        count_input = count_output = 0
        e_buffer_refresh = 0.0
    e_buffer = e_buffer_access + e_buffer_refresh

    e_overhead = h.scheduler_overhead_fraction * (e_pim + e_buffer)
    return EnergyReport(
        scheme=scheme,
        vpd_mv=pt.vpd_mv,
        e_total=e_pim + e_buffer + e_overhead,
        e_pim=e_pim,
        e_buffer=e_buffer,
        e_overhead=e_overhead,
        e_pim_access=e_pim_access,
        e_pim_pu=e_pim_pu,
        e_pim_refresh=e_pim_refresh,
        e_buffer_access=e_buffer_access,
        e_buffer_refresh=e_buffer_refresh,
        p_n=p_n,
        b_n_bytes=b_n,
        refresh_events=OperandCounts(
            input=gm * gk * count_input,
            weight=gk * gn * count_weight,
            output=gm * gn * count_output,
        ),
        refresh_rows_weight=rows_weight * count_weight,
    )


# ---------------------------------------------------------------------------
# Refresh-vs-access crossover analysis


def refresh_share(
    n_accesses: int,
    lifetime_s: float,
    retention_s: float,
    access_energy_per_op: float,
    refresh_energy_per_row: float,
    policy: str = "span",
) -> float:
    """Fraction of memory energy spent on refresh for one resident row."""
    refreshes = refresh_count(lifetime_s, retention_s, policy)
    e_refresh = refreshes * refresh_energy_per_row
    e_access = n_accesses * access_energy_per_op
    if e_refresh + e_access == 0:
        return 0.0
    return e_refresh / (e_refresh + e_access)


def crossover_access_count(
    lifetime_s: float,
    retention_s: float,
    access_energy_per_op: float,
    refresh_energy_per_row: float,
    policy: str = "span",
) -> float:
    """Access count at which refresh and access energy break even (closed form)."""
    refreshes = refresh_count(lifetime_s, retention_s, policy)
    return refreshes * refresh_energy_per_row / access_energy_per_op


def find_refresh_crossover(
    lifetime_s: float,
    retention_s: float,
    access_energy_per_op: float,
    refresh_energy_per_row: float,
    policy: str = "span",
    max_accesses: int = 10**6,
) -> int:
    """Smallest access count where refresh drops to at most half of memory energy."""
    for n in range(0, max_accesses + 1):
        if refresh_share(
            n, lifetime_s, retention_s, access_energy_per_op, refresh_energy_per_row, policy
        ) <= 0.5:
            return n
    raise RuntimeError(f"no crossover within {max_accesses} accesses")
