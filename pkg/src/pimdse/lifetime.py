"""Per-operand tile lifetime analysis for a tiling scheme.

A tile's lifetime is the span from its first to its last use in the
flattened loop nest, measured in tile-iterations and converted to cycles
and seconds. Tile identity is set by the dims that index the operand
(m,k for input; k,n for weight; m,n for output — the reduction dim k
extends output liveness but does not change which tile is live), so the
span grows with the trip counts of the identity-irrelevant loop levels.
Each tile has a single residency: loaded at first use, dead after last
use; load/drain cycles are folded into the per-tile cycle count.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .config import HardwareConfig
from .tiling import TilingScheme

IDENTITY_DIMS: dict[str, frozenset[str]] = {
    "input": frozenset({"m", "k"}),
    "weight": frozenset({"k", "n"}),
    "output": frozenset({"m", "n"}),
}
OPERANDS = ("input", "weight", "output")


@dataclass(frozen=True)
class OperandLifetime:
    span_tiles: int              # tile-iterations from first to last use, inclusive
    lifetime_cycles: int
    lifetime_s: float | None
    residencies: int             # distinct tile residencies over the whole GEMM
    relevance_set: frozenset[str]


@dataclass(frozen=True)
class LifetimeProfile:
    input: OperandLifetime
    weight: OperandLifetime
    output: OperandLifetime

    def operand(self, name: str) -> OperandLifetime:
        return getattr(self, name)


def tile_span(scheme: TilingScheme, operand: str) -> int:
    """Closed-form first-to-last-use span in tile-iterations.

    With trip counts G_i at loop levels outer to inner and W_i the product
    of trip counts strictly inner to level i, a tile is revisited whenever
    an identity-irrelevant level advances, so the flattened-index distance
    between first and last use is the sum of (G_i - 1) * W_i over the
    irrelevant levels.
    """
    identity = IDENTITY_DIMS[operand]
    by_dim = dict(zip(("m", "k", "n"), scheme.trip_counts))
    span = 1
    inner_weight = 1
    for dim in reversed(scheme.loop_order):
        if dim not in identity:
            span += (by_dim[dim] - 1) * inner_weight
        inner_weight *= by_dim[dim]
    return span


def _operand_lifetime(scheme: TilingScheme, operand: str) -> OperandLifetime:
    identity = IDENTITY_DIMS[operand]
    by_dim = dict(zip(("m", "k", "n"), scheme.trip_counts))
    residencies = 1
    for dim in identity:
        residencies *= by_dim[dim]
    span = tile_span(scheme, operand)
    return OperandLifetime(
        span_tiles=span,
        lifetime_cycles=span * scheme.cycles_per_tile,
        lifetime_s=None,
        residencies=residencies,
        relevance_set=identity,
    )


def compute_lifetimes(scheme: TilingScheme, h: HardwareConfig) -> LifetimeProfile:
    """Lifetime of every operand's tiles under `scheme`, in cycles and seconds."""
    profile = LifetimeProfile(
        input=_operand_lifetime(scheme, "input"),
        weight=_operand_lifetime(scheme, "weight"),
        output=_operand_lifetime(scheme, "output"),
    )
    return lifetime_to_seconds(profile, h.clock_hz)


def lifetime_to_seconds(profile: LifetimeProfile, clock_hz: float) -> LifetimeProfile:
    """Fill in wall-clock lifetimes; cycle fields are unchanged."""
    if clock_hz <= 0:
        raise ValueError("clock_hz must be > 0")
    return LifetimeProfile(
        **{
            name: replace(
                profile.operand(name),
                lifetime_s=profile.operand(name).lifetime_cycles / clock_hz,
            )
            for name in OPERANDS
        }
    )
