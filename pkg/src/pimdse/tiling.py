"""Tiling-scheme enumeration for tiled GEMM on the PIM macro.

A scheme is a loop order over (m, n, k) plus a tile shape (tm, tk, tn).
Weight tiles must fit the macro, input plus output tiles must fit the
unified buffer. Tile sizes are drawn from the divisors of each dimension;
an optional stride widens the candidate set, in which case the dimension
is padded up to the next tile multiple and edge tiles are clipped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .config import GemmWorkload, HardwareConfig

# All six loop orders, outermost dimension first, in lexicographic order.
LOOP_ORDERS: tuple[tuple[str, str, str], ...] = tuple(
    itertools.permutations(("k", "m", "n"))
)


class InfeasibleHardwareError(Exception):
    """The macro or buffer cannot hold even the smallest tile."""


@dataclass(frozen=True)
class TileShape:
    tm: int
    tk: int
    tn: int


@dataclass(frozen=True)
class TilingScheme:
    """A loop order plus tile shape with derived trip counts and cycle count."""

    loop_order: tuple[str, str, str]
    shape: TileShape
    trip_counts: tuple[int, int, int]   # (Gm, Gk, Gn)
    cycles_per_tile: int

    @property
    def gm(self) -> int:
        return self.trip_counts[0]

    @property
    def gk(self) -> int:
        return self.trip_counts[1]

    @property
    def gn(self) -> int:
        return self.trip_counts[2]

    @property
    def total_tiles(self) -> int:
        return self.gm * self.gk * self.gn

    def trips_in_loop_order(self) -> tuple[int, int, int]:
        """Trip counts reordered outermost loop first."""
        by_dim = {"m": self.gm, "k": self.gk, "n": self.gn}
        return tuple(by_dim[d] for d in self.loop_order)

    def sort_key(self):
        return (self.loop_order, self.shape.tm, self.shape.tk, self.shape.tn)


def cycles_per_tile(shape: TileShape, w: GemmWorkload, h: HardwareConfig) -> int:
    """Row activations (= cycles) to compute one full tile.

    Each input row is broadcast bit-serially; every input bit activates each
    of the tile's tk weight rows once. Bit-serial weights spread their bits
    over weight_bits rows, multiplying the activation count; all tn outputs
    are produced column-parallel within an activation.
    """
    base = shape.tm * w.input_bits * shape.tk
    if h.processing_type == "bit-serial":
        return base * w.weight_bits
    return base


def tile_candidates(dim: int, stride: int | None) -> list[int]:
    """Candidate tile sizes for one dimension: divisors, plus stride multiples."""
    sizes = {d for d in range(1, dim + 1) if dim % d == 0}
    if stride is not None:
        sizes.update(range(stride, dim + 1, stride))
    return sorted(sizes)


def trip_count(dim: int, tile: int) -> int:
    return -(-dim // tile)


def tile_extents(dim: int, tile: int) -> list[tuple[int, int]]:
    """Distinct effective tile sizes along a dimension as (count, size) pairs.

    Non-divisor tiles pad the dimension; the final clipped tile contributes
    its actual extent.
    """
    trips = trip_count(dim, tile)
    last = dim - (trips - 1) * tile
    if last == tile:
        return [(trips, tile)]
    return [(trips - 1, tile), (1, last)]


def _shape_feasible(shape: TileShape, w: GemmWorkload, h: HardwareConfig) -> bool:
    weight_bits = shape.tk * shape.tn * w.weight_bits
    if weight_bits > h.macro_bits:
        return False
    buffer_bits = shape.tm * shape.tk * w.input_bits + shape.tm * shape.tn * w.accum_bits
    return buffer_bits <= h.buffer_bits


def enumerate_tilings(w: GemmWorkload, h: HardwareConfig) -> list[TilingScheme]:
    """All capacity-feasible schemes, lexicographic by loop order then shape."""
    smallest = TileShape(1, 1, 1)
    if not _shape_feasible(smallest, w, h):
        raise InfeasibleHardwareError(
            f"a 1x1 weight tile ({w.weight_bits} bits) or 1x1 input/output tile "
            f"does not fit (macro {h.macro_bits} bits, buffer {h.buffer_bits} bits)"
        )
    shapes = []
    for tm in tile_candidates(w.m_dim, h.tile_stride):
        for tk in tile_candidates(w.k_dim, h.tile_stride):
            for tn in tile_candidates(w.n_dim, h.tile_stride):
                shape = TileShape(tm, tk, tn)
                if _shape_feasible(shape, w, h):
                    shapes.append(shape)
    schemes = []
    for order in LOOP_ORDERS:
        for shape in shapes:
            schemes.append(
                TilingScheme(
                    loop_order=order,
                    shape=shape,
                    trip_counts=(
                        trip_count(w.m_dim, shape.tm),
                        trip_count(w.k_dim, shape.tk),
                        trip_count(w.n_dim, shape.tn),
                    ),
                    cycles_per_tile=cycles_per_tile(shape, w, h),
                )
            )
    return schemes
