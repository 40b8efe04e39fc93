"""Discrete-event functional oracle for scheduling decisions.

Replays a decision's flattened loop nest at cell granularity one tile per
region: writes at first use, reads at every use, refreshes on the schedule
the decision implies, retirement at last use. Every read is checked
against the region's retention deadline, so a clean trace proves the
refresh schedule safe and a tampered retention table is caught as
violations. Timestamps are cycle indices compared in exact rational
arithmetic; no float drift can flip a deadline comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .config import GemmWorkload, HardwareConfig, MemorySpec
from .energy import refresh_count
from .lifetime import IDENTITY_DIMS, OPERANDS, compute_lifetimes
from .optimizer import SchedulingDecision
from .tiling import TilingScheme

_KIND_RANK = {"write": 0, "refresh": 1, "read": 2, "retire": 3}


@dataclass
class CellRegion:
    """One resident tile's worth of cells sharing write/refresh timing."""

    operand: str
    tile: tuple[int, ...]
    rows: int
    last_charge_time_s: float | None = None
    retention_deadline_s: float | None = None
    live: bool = False


@dataclass(frozen=True)
class SimEvent:
    time_s: float
    kind: str
    operand: str
    tile: tuple[int, ...]
    rows: int


@dataclass(frozen=True)
class Violation:
    operand: str
    tile: tuple[int, ...]
    time_s: float
    deadline_s: float


@dataclass
class SimTrace:
    """Counters and the violation list from one simulation."""

    row_activations: int = 0
    buffer_reads: int = 0
    writes: int = 0
    refreshes: int = 0
    refresh_counts: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def is_safe(self) -> bool:
        return not self.violations

    @property
    def total_reads(self) -> int:
        return self.row_activations + self.buffer_reads

    @property
    def total_events(self) -> int:
        return self.total_reads + self.writes + self.refreshes


def _decode(slot: int, trips_in_order: tuple[int, int, int]) -> tuple[int, int, int]:
    g1, g2, g3 = trips_in_order
    return (slot // (g2 * g3), (slot // g3) % g2, slot % g3)


def _effective(dim: int, tile: int, index: int) -> int:
    return min(tile, dim - index * tile)


def lifetime_oracle(scheme: TilingScheme, max_iterations: int = 10**6) -> dict[str, int]:
    """Measure per-operand first/last-use spans by walking the loop nest.

    Independent of the closed-form span: every slot is visited and each
    tile's first and last use recorded. All tiles of an operand share one
    span on the regular grid; that span is returned per operand.
    """
    total = scheme.total_tiles
    if total > max_iterations:
        raise RuntimeError(f"loop nest has {total} iterations, guard is {max_iterations}")
    by_dim = dict(zip(("m", "k", "n"), scheme.trip_counts))
    trips_in_order = tuple(by_dim[d] for d in scheme.loop_order)
    first: dict[str, dict] = {op: {} for op in OPERANDS}
    last: dict[str, dict] = {op: {} for op in OPERANDS}
    for slot in range(total):
        in_order = _decode(slot, trips_in_order)
        idx = dict(zip(scheme.loop_order, in_order))
        keys = {
            "input": (idx["m"], idx["k"]),
            "weight": (idx["k"], idx["n"]),
            "output": (idx["m"], idx["n"]),
        }
        for op, key in keys.items():
            first[op].setdefault(key, slot)
            last[op][key] = slot
    spans: dict[str, int] = {}
    for op in OPERANDS:
        measured = {last[op][k] - first[op][k] + 1 for k in first[op]}
        if len(measured) != 1:
            raise AssertionError(f"non-uniform spans for {op}: {sorted(measured)}")
        spans[op] = measured.pop()
    return spans


def refresh_oracle(lifetime_s: float, retention_s: float, policy: str = "span") -> int:
    """Count refreshes a periodic state machine emits over one lifetime.

    Walks retention deadlines explicitly instead of evaluating the ratio
    formula: `span` refreshes at each deadline the data outlives, `ceil`
    also refreshes at the deadline of the interval the data dies in.
    """
    if retention_s <= 0:
        raise ValueError("retention_s must be > 0")
    if lifetime_s < 0:
        raise ValueError("lifetime_s must be >= 0")
    life = Fraction(lifetime_s)
    period = Fraction(retention_s)
    count = 0
    deadline = period
    while True:
        if deadline < life:
            count += 1           # data lives past this deadline: refresh (both policies)
            deadline += period
        else:
            if policy == "ceil" and deadline - period < life:
                count += 1       # final interval intersected the lifetime
            return count


def _region_rows(operand: str, bits: int, h: HardwareConfig) -> int:
    # Row-equivalents at subarray-row granularity, for reporting only.
    return -(-bits // h.subarray_cols)


def simulate(
    decision: SchedulingDecision,
    w: GemmWorkload,
    h: HardwareConfig,
    spec: MemorySpec,
    *,
    physical_spec: MemorySpec | None = None,
    event_sink=None,
) -> SimTrace:
    """Replay a decision and check every read against retention deadlines.

    The refresh schedule always follows `spec` (what the decision planned
    against); `physical_spec` sets the retention the cells actually have,
    so passing a degraded table exposes reads the plan no longer covers.
    Violations are recorded as data, not raised.
    """
    if physical_spec is None:
        physical_spec = spec
    scheme = decision.scheme
    policy = decision.refresh_policy
    profile = compute_lifetimes(scheme, h)
    clock = Fraction(h.clock_hz)
    T = scheme.cycles_per_tile
    serial = w.weight_bits if h.processing_type == "bit-serial" else 1

    plan_point = spec.point_at(decision.vpd_mv)
    phys_point = physical_spec.point_at(decision.vpd_mv)
    sched_retention = {
        "input": spec.buffer_retention_s if spec.buffer_kind == "edram" else None,
        "weight": plan_point.retention_s,
        "output": spec.buffer_retention_s if spec.buffer_kind == "edram" else None,
    }
    phys_retention_cycles = {
        "input": Fraction(physical_spec.buffer_retention_s) * clock
        if physical_spec.buffer_kind == "edram"
        else None,
        "weight": Fraction(phys_point.retention_s) * clock,
        "output": Fraction(physical_spec.buffer_retention_s) * clock
        if physical_spec.buffer_kind == "edram"
        else None,
    }

    by_dim = dict(zip(("m", "k", "n"), scheme.trip_counts))
    trips_in_order = tuple(by_dim[d] for d in scheme.loop_order)
    dims = {"m": w.m_dim, "k": w.k_dim, "n": w.n_dim}
    tiles = {"m": scheme.shape.tm, "k": scheme.shape.tk, "n": scheme.shape.tn}

    regions: dict[tuple[str, tuple], CellRegion] = {}
    events: list[tuple] = []   # (time_cycles, rank, operand, tile, kind, count, rows)
    last_use: dict[tuple[str, tuple], int] = {}

    for slot in range(scheme.total_tiles):
        idx = dict(zip(scheme.loop_order, _decode(slot, trips_in_order)))
        eff = {d: _effective(dims[d], tiles[d], idx[d]) for d in ("m", "k", "n")}
        t_eff = eff["m"] * w.input_bits * eff["k"] * serial
        t0 = slot * T
        t_last = t0 + t_eff - 1
        tile_bits = {
            "input": eff["m"] * eff["k"] * w.input_bits,
            "weight": eff["k"] * eff["n"] * w.weight_bits,
            "output": eff["m"] * eff["n"] * w.accum_bits,
        }
        keys = {
            "input": (idx["m"], idx["k"]),
            "weight": (idx["k"], idx["n"]),
            "output": (idx["m"], idx["n"]),
        }
        for op in OPERANDS:
            rkey = (op, keys[op])
            rows = _region_rows(op, tile_bits[op], h)
            if rkey not in regions:
                regions[rkey] = CellRegion(operand=op, tile=keys[op], rows=rows)
                events.append((t0, _KIND_RANK["write"], op, keys[op], "write", 1, rows))
            if op == "weight":
                events.append((t_last, _KIND_RANK["read"], op, keys[op], "read", t_eff, rows))
            elif op == "input":
                events.append((t_last, _KIND_RANK["read"], op, keys[op], "read", 1, rows))
            else:
                events.append((t0, _KIND_RANK["read"], op, keys[op], "read", 1, rows))
                events.append((t_last, _KIND_RANK["write"], op, keys[op], "write", 1, rows))
            last_use[rkey] = t_last

    # Scheduled refreshes: the analytic count at the planned retention,
    # periodic from each region's first charge.
    trace = SimTrace()
    for (op, key), region in regions.items():
        retention = sched_retention[op]
        lifetime_s = profile.operand(op).lifetime_s
        if retention is None:
            count = 0
        else:
            count = refresh_count(lifetime_s, retention, policy)
        trace.refresh_counts[(op, key)] = count
        if count:
            charge0 = next(t for t, r, o, k, *_ in events if o == op and k == key and r == 0)
            period_cycles = Fraction(retention) * clock
            for j in range(1, count + 1):
                events.append(
                    (
                        charge0 + j * period_cycles,
                        _KIND_RANK["refresh"],
                        op,
                        key,
                        "refresh",
                        1,
                        region.rows,
                    )
                )
    for (op, key), t in last_use.items():
        events.append((t, _KIND_RANK["retire"], op, key, "retire", 1, regions[(op, key)].rows))

    events.sort(key=lambda e: (e[0], e[1]))

    charge: dict[tuple[str, tuple], object] = {}
    for time_cycles, _, op, key, kind, count, rows in events:
        rkey = (op, key)
        region = regions[rkey]
        if event_sink is not None:
            event_sink(
                {
                    "time_s": float(Fraction(time_cycles) / clock),
                    "kind": kind,
                    "operand": op,
                    "tile": list(key),
                    "rows": count if kind == "read" else rows,
                }
            )
        if kind == "write":
            charge[rkey] = time_cycles
            region.live = True
            trace.writes += 1
        elif kind == "refresh":
            charge[rkey] = time_cycles
            trace.refreshes += 1
        elif kind == "read":
            if op == "weight":
                trace.row_activations += count
            else:
                trace.buffer_reads += count
            last = charge.get(rkey)
            limit = phys_retention_cycles[op]
            if last is not None and limit is not None and time_cycles > last + limit:
                trace.violations.append(
                    Violation(
                        operand=op,
                        tile=key,
                        time_s=float(Fraction(time_cycles) / clock),
                        deadline_s=float((Fraction(last) + limit) / clock),
                    )
                )
        else:  # retire
            region.live = False
        if rkey in charge:
            region.last_charge_time_s = float(Fraction(charge[rkey]) / clock)
            limit = phys_retention_cycles[op]
            if limit is not None:
                region.retention_deadline_s = float((Fraction(charge[rkey]) + limit) / clock)
    return trace
