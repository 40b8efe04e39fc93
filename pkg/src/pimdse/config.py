"""Input descriptions for the exploration engine.

Workload shapes, the hardware template, and the per-VPD memory operating
table are all validated here. Energies are in normalized units where one
row activation at the maximum read-bitline swing (VPD = 0 mV) costs 1.0;
absolute calibration is an external scale factor applied by the user.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class ConfigError(ValueError):
    """Configuration rejected; `path` points at the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


PROCESSING_TYPES = ("bit-serial", "bit-parallel")
BUFFER_KINDS = ("edram", "sram")

# Normalized calibration anchors for the default operating table.
VPD_LEVELS_MV = (0.0, 200.0, 300.0, 400.0, 500.0)
ACCESS_ENERGY_RATIO_AT_MAX_VPD = 0.2869   # E(500 mV) / E(0 mV)
RETENTION_RATIO_AT_MAX_VPD = 0.09         # T(500 mV) / T(0 mV)
RETENTION_S_AT_ZERO_VPD = 100e-6
SENSE_AMP_SHARE_AT_ZERO_VPD = 0.1687
SENSE_AMP_SHARE_AT_MAX_VPD = 0.5014
RWL_RBL_SHARE_AT_ZERO_VPD = 0.5693
PULLDOWN_SHARE_AT_ZERO_VPD = 0.2214
WRITE_ENERGY_FRACTION = 0.6               # write cost relative to a max-swing access

DEFAULT_BUFFER_ACCESS_ENERGY_PER_BYTE = 1e-3
DEFAULT_BUFFER_REFRESH_ENERGY_PER_BYTE = 1.6e-3
DEFAULT_SCHEDULER_OVERHEAD_FRACTION = 0.0077


@dataclass(frozen=True)
class GemmWorkload:
    """One GEMM layer: output is (m_dim x n_dim) = (m_dim x k_dim) @ (k_dim x n_dim)."""

    m_dim: int
    k_dim: int
    n_dim: int
    input_bits: int = 8
    weight_bits: int = 8
    input_bit_sparsity: float = 0.0   # fraction of zero input bits, in [0, 1]
    label: str = ""

    @property
    def accum_bits(self) -> int:
        """Accumulator width needed for a full k reduction without overflow."""
        return self.input_bits + self.weight_bits + max(1, self.k_dim - 1).bit_length()


@dataclass(frozen=True)
class HardwareConfig:
    """PIM macro geometry, buffer capacity, and processing-unit setup."""

    subarray_rows: int
    subarray_cols: int
    subarrays_per_bank: int
    num_banks: int
    buffer_bytes: int
    macro_bytes: int
    clock_hz: float
    processing_type: str = "bit-parallel"
    scheduler_overhead_fraction: float = DEFAULT_SCHEDULER_OVERHEAD_FRACTION
    tile_stride: int | None = None   # widens the tile candidate set beyond divisors
    pu_energy: float | None = None   # per-activation override; None derives it from the access baseline

    @property
    def row_bits(self) -> int:
        """Bits delivered by one ganged row activation across all subarrays."""
        return self.subarray_cols * self.subarrays_per_bank * self.num_banks

    @property
    def macro_bits(self) -> int:
        return self.macro_bytes * 8

    @property
    def buffer_bits(self) -> int:
        return self.buffer_bytes * 8


@dataclass(frozen=True)
class ComponentShares:
    """Access-energy breakdown; the four shares sum to 1."""

    rwl_rbl_swing: float
    pulldown_driver: float
    sense_amp: float
    other: float

    def total(self) -> float:
        return self.rwl_rbl_swing + self.pulldown_driver + self.sense_amp + self.other


@dataclass(frozen=True)
class VpdOperatingPoint:
    """One row of the reconfigurable-eDRAM behavioral table."""

    vpd_mv: float
    access_energy: float          # per row activation, normalized
    component_shares: ComponentShares
    retention_s: float
    write_energy: float           # per row
    refresh_energy: float         # per row; a refresh is a read plus a write-back


@dataclass(frozen=True)
class MemorySpec:
    """Operating-point table plus the unified-buffer memory model.

    Buffer traffic is accounted per byte (the buffer is a plain memory,
    not a ganged PIM array); buffer_retention_s is ignored for sram.
    """

    points: tuple[VpdOperatingPoint, ...]
    buffer_kind: str = "edram"
    buffer_access_energy: float = DEFAULT_BUFFER_ACCESS_ENERGY_PER_BYTE
    buffer_refresh_energy: float = DEFAULT_BUFFER_REFRESH_ENERGY_PER_BYTE
    buffer_retention_s: float = RETENTION_S_AT_ZERO_VPD

    def point_at(self, vpd_mv: float) -> VpdOperatingPoint:
        for pt in self.points:
            if pt.vpd_mv == vpd_mv:
                return pt
        raise KeyError(f"no operating point at {vpd_mv} mV")

    @property
    def baseline_point(self) -> VpdOperatingPoint:
        """Lowest-VPD (maximum swing) point; access normalization anchor."""
        return self.points[0]


def default_memory_spec() -> MemorySpec:
    """Build the built-in calibrated operating table.

    Endpoints are anchored at VPD 0 and 500 mV; intermediate access energy
    and retention follow geometric interpolation, the sense-amp share is
    linear, and the remaining shares keep their VPD-0 proportions.
    """
    points = []
    non_sa_total = 1.0 - SENSE_AMP_SHARE_AT_ZERO_VPD
    for vpd in VPD_LEVELS_MV:
        frac = vpd / VPD_LEVELS_MV[-1]
        access = ACCESS_ENERGY_RATIO_AT_MAX_VPD ** frac
        retention = RETENTION_S_AT_ZERO_VPD * RETENTION_RATIO_AT_MAX_VPD ** frac
        sense_amp = SENSE_AMP_SHARE_AT_ZERO_VPD + frac * (
            SENSE_AMP_SHARE_AT_MAX_VPD - SENSE_AMP_SHARE_AT_ZERO_VPD
        )
        rest = 1.0 - sense_amp
        rwl_rbl = rest * RWL_RBL_SHARE_AT_ZERO_VPD / non_sa_total
        pulldown = rest * PULLDOWN_SHARE_AT_ZERO_VPD / non_sa_total
        other = 1.0 - sense_amp - rwl_rbl - pulldown
        write = WRITE_ENERGY_FRACTION
        points.append(
            VpdOperatingPoint(
                vpd_mv=vpd,
                access_energy=access,
                component_shares=ComponentShares(rwl_rbl, pulldown, sense_amp, other),
                retention_s=retention,
                write_energy=write,
                refresh_energy=write + access,
            )
        )
    spec = MemorySpec(points=tuple(points))
    _validate_memory_spec(spec, "default_memory_spec")
    return spec


# ---------------------------------------------------------------------------
# Validation


_MISSING = object()


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(path, message)


def _get(obj: dict, key: str, path: str, typ, default=_MISSING):
    if key not in obj:
        if default is not _MISSING:
            return default
        raise ConfigError(f"{path}.{key}", "missing required field")
    value = obj[key]
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if typ is int and isinstance(value, bool):
        raise ConfigError(f"{path}.{key}", "expected int, got bool")
    if not isinstance(value, typ):
        raise ConfigError(f"{path}.{key}", f"expected {typ.__name__}, got {type(value).__name__}")
    return value


def _validate_workload(w: GemmWorkload, path: str) -> None:
    for name in ("m_dim", "k_dim", "n_dim"):
        _require(getattr(w, name) >= 1, f"{path}.{name}", "must be >= 1")
    for name in ("input_bits", "weight_bits"):
        _require(getattr(w, name) >= 1, f"{path}.{name}", "must be >= 1")
    _require(
        0.0 <= w.input_bit_sparsity <= 1.0,
        f"{path}.input_bit_sparsity",
        "must lie in [0, 1]",
    )


def _validate_hardware(h: HardwareConfig, path: str) -> None:
    for name in ("subarray_rows", "subarray_cols", "subarrays_per_bank", "num_banks"):
        _require(getattr(h, name) >= 1, f"{path}.{name}", "must be >= 1")
    _require(h.buffer_bytes >= 1, f"{path}.buffer_bytes", "must be >= 1")
    _require(h.macro_bytes >= 1, f"{path}.macro_bytes", "must be >= 1")
    _require(h.clock_hz > 0, f"{path}.clock_hz", "must be > 0")
    cells = h.subarray_rows * h.subarray_cols * h.subarrays_per_bank * h.num_banks
    _require(
        cells == h.macro_bytes * 8,
        f"{path}.macro_bytes",
        f"capacity mismatch: subarray geometry holds {cells} cells, "
        f"macro_bytes implies {h.macro_bytes * 8}",
    )
    _require(
        h.processing_type in PROCESSING_TYPES,
        f"{path}.processing_type",
        f"must be one of {PROCESSING_TYPES}",
    )
    _require(
        0.0 <= h.scheduler_overhead_fraction < 0.05,
        f"{path}.scheduler_overhead_fraction",
        "must lie in [0, 0.05)",
    )
    if h.tile_stride is not None:
        _require(h.tile_stride >= 1, f"{path}.tile_stride", "must be >= 1 when set")
    if h.pu_energy is not None:
        _require(h.pu_energy >= 0, f"{path}.pu_energy", "must be >= 0 when set")


def _validate_point(pt: VpdOperatingPoint, path: str) -> None:
    _require(pt.access_energy > 0, f"{path}.access_energy", "must be > 0")
    _require(pt.retention_s > 0, f"{path}.retention_s", "must be > 0")
    _require(pt.write_energy >= 0, f"{path}.write_energy", "must be >= 0")
    _require(pt.refresh_energy >= 0, f"{path}.refresh_energy", "must be >= 0")
    shares = pt.component_shares
    for name in ("rwl_rbl_swing", "pulldown_driver", "sense_amp", "other"):
        _require(getattr(shares, name) >= 0, f"{path}.component_shares.{name}", "must be >= 0")
    _require(
        abs(shares.total() - 1.0) <= 1e-9,
        f"{path}.component_shares",
        f"shares sum to {shares.total()!r}, expected 1 within 1e-9",
    )


def _validate_memory_spec(spec: MemorySpec, path: str) -> None:
    _require(len(spec.points) >= 1, f"{path}.points", "at least one operating point required")
    for i, pt in enumerate(spec.points):
        _validate_point(pt, f"{path}.points[{i}]")
    for i in range(1, len(spec.points)):
        prev, cur = spec.points[i - 1], spec.points[i]
        p = f"{path}.points[{i}]"
        _require(cur.vpd_mv > prev.vpd_mv, f"{p}.vpd_mv", "vpd_mv must be strictly ascending")
        _require(
            cur.access_energy < prev.access_energy,
            f"{p}.access_energy",
            "access energy must strictly decrease with vpd_mv",
        )
        _require(
            cur.retention_s < prev.retention_s,
            f"{p}.retention_s",
            "retention must strictly decrease with vpd_mv",
        )
        _require(
            cur.component_shares.sense_amp > prev.component_shares.sense_amp,
            f"{p}.component_shares.sense_amp",
            "sense-amp share must strictly increase with vpd_mv",
        )
    _require(
        spec.buffer_kind in BUFFER_KINDS,
        f"{path}.buffer_kind",
        f"must be one of {BUFFER_KINDS}",
    )
    _require(spec.buffer_access_energy >= 0, f"{path}.buffer_access_energy", "must be >= 0")
    _require(spec.buffer_refresh_energy >= 0, f"{path}.buffer_refresh_energy", "must be >= 0")
    if spec.buffer_kind == "edram":
        _require(spec.buffer_retention_s > 0, f"{path}.buffer_retention_s", "must be > 0")


# ---------------------------------------------------------------------------
# Parsing and serialization


def _parse_workload(obj: dict, path: str) -> GemmWorkload:
    w = GemmWorkload(
        m_dim=_get(obj, "m_dim", path, int),
        k_dim=_get(obj, "k_dim", path, int),
        n_dim=_get(obj, "n_dim", path, int),
        input_bits=_get(obj, "input_bits", path, int, 8),
        weight_bits=_get(obj, "weight_bits", path, int, 8),
        input_bit_sparsity=_get(obj, "input_bit_sparsity", path, float, 0.0),
        label=_get(obj, "label", path, str, ""),
    )
    _validate_workload(w, path)
    return w


def _parse_hardware(obj: dict, path: str) -> HardwareConfig:
    stride = obj.get("tile_stride")
    if stride is not None and not isinstance(stride, int):
        raise ConfigError(f"{path}.tile_stride", "expected int or null")
    pu_energy = obj.get("pu_energy")
    if pu_energy is not None and not isinstance(pu_energy, (int, float)):
        raise ConfigError(f"{path}.pu_energy", "expected number or null")
    h = HardwareConfig(
        subarray_rows=_get(obj, "subarray_rows", path, int),
        subarray_cols=_get(obj, "subarray_cols", path, int),
        subarrays_per_bank=_get(obj, "subarrays_per_bank", path, int),
        num_banks=_get(obj, "num_banks", path, int),
        buffer_bytes=_get(obj, "buffer_bytes", path, int),
        macro_bytes=_get(obj, "macro_bytes", path, int),
        clock_hz=_get(obj, "clock_hz", path, float),
        processing_type=_get(obj, "processing_type", path, str, "bit-parallel"),
        scheduler_overhead_fraction=_get(
            obj, "scheduler_overhead_fraction", path, float, DEFAULT_SCHEDULER_OVERHEAD_FRACTION
        ),
        tile_stride=stride,
        pu_energy=float(pu_energy) if pu_energy is not None else None,
    )
    _validate_hardware(h, path)
    return h


def _parse_point(obj: dict, path: str) -> VpdOperatingPoint:
    shares_obj = _get(obj, "component_shares", path, dict)
    sp = f"{path}.component_shares"
    shares = ComponentShares(
        rwl_rbl_swing=_get(shares_obj, "rwl_rbl_swing", sp, float),
        pulldown_driver=_get(shares_obj, "pulldown_driver", sp, float),
        sense_amp=_get(shares_obj, "sense_amp", sp, float),
        other=_get(shares_obj, "other", sp, float),
    )
    access = _get(obj, "access_energy", path, float)
    write = _get(obj, "write_energy", path, float, WRITE_ENERGY_FRACTION)
    return VpdOperatingPoint(
        vpd_mv=_get(obj, "vpd_mv", path, float),
        access_energy=access,
        component_shares=shares,
        retention_s=_get(obj, "retention_s", path, float),
        write_energy=write,
        refresh_energy=_get(obj, "refresh_energy", path, float, write + access),
    )


def _parse_memory_spec(obj, path: str) -> MemorySpec:
    if obj == "default":
        return default_memory_spec()
    if not isinstance(obj, dict):
        raise ConfigError(path, 'expected an object or the string "default"')
    points_obj = _get(obj, "points", path, list)
    points = []
    for i, p in enumerate(points_obj):
        if not isinstance(p, dict):
            raise ConfigError(f"{path}.points[{i}]", "expected object")
        points.append(_parse_point(p, f"{path}.points[{i}]"))
    spec = MemorySpec(
        points=tuple(points),
        buffer_kind=_get(obj, "buffer_kind", path, str, "edram"),
        buffer_access_energy=_get(
            obj, "buffer_access_energy", path, float, DEFAULT_BUFFER_ACCESS_ENERGY_PER_BYTE
        ),
        buffer_refresh_energy=_get(
            obj, "buffer_refresh_energy", path, float, DEFAULT_BUFFER_REFRESH_ENERGY_PER_BYTE
        ),
        buffer_retention_s=_get(
            obj, "buffer_retention_s", path, float, RETENTION_S_AT_ZERO_VPD
        ),
    )
    _validate_memory_spec(spec, path)
    return spec


def parse_config(document) -> tuple[list[GemmWorkload], HardwareConfig, MemorySpec]:
    """Parse and validate a configuration document (JSON text or dict)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError("<document>", f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError("<document>", "top level must be an object")
    workloads_obj = _get(document, "workloads", "<document>", list)
    workloads = []
    for i, w in enumerate(workloads_obj):
        if not isinstance(w, dict):
            raise ConfigError(f"workloads[{i}]", "expected object")
        workloads.append(_parse_workload(w, f"workloads[{i}]"))
    hardware = _parse_hardware(_get(document, "hardware", "<document>", dict), "hardware")
    if "memory_spec" not in document:
        raise ConfigError("memory_spec", "missing required field")
    spec = _parse_memory_spec(document["memory_spec"], "memory_spec")
    return workloads, hardware, spec


def workload_to_dict(w: GemmWorkload) -> dict:
    return {
        "m_dim": w.m_dim,
        "k_dim": w.k_dim,
        "n_dim": w.n_dim,
        "input_bits": w.input_bits,
        "weight_bits": w.weight_bits,
        "input_bit_sparsity": w.input_bit_sparsity,
        "label": w.label,
    }


def hardware_to_dict(h: HardwareConfig) -> dict:
    out = {
        "subarray_rows": h.subarray_rows,
        "subarray_cols": h.subarray_cols,
        "subarrays_per_bank": h.subarrays_per_bank,
        "num_banks": h.num_banks,
        "buffer_bytes": h.buffer_bytes,
        "macro_bytes": h.macro_bytes,
        "clock_hz": h.clock_hz,
        "processing_type": h.processing_type,
        "scheduler_overhead_fraction": h.scheduler_overhead_fraction,
    }
    if h.tile_stride is not None:
        out["tile_stride"] = h.tile_stride
    if h.pu_energy is not None:
        out["pu_energy"] = h.pu_energy
    return out


def memory_spec_to_dict(spec: MemorySpec) -> dict:
    return {
        "points": [
            {
                "vpd_mv": pt.vpd_mv,
                "access_energy": pt.access_energy,
                "component_shares": {
                    "rwl_rbl_swing": pt.component_shares.rwl_rbl_swing,
                    "pulldown_driver": pt.component_shares.pulldown_driver,
                    "sense_amp": pt.component_shares.sense_amp,
                    "other": pt.component_shares.other,
                },
                "retention_s": pt.retention_s,
                "write_energy": pt.write_energy,
                "refresh_energy": pt.refresh_energy,
            }
            for pt in spec.points
        ],
        "buffer_kind": spec.buffer_kind,
        "buffer_access_energy": spec.buffer_access_energy,
        "buffer_refresh_energy": spec.buffer_refresh_energy,
        "buffer_retention_s": spec.buffer_retention_s,
    }


def config_to_dict(
    workloads: list[GemmWorkload], hardware: HardwareConfig, spec: MemorySpec
) -> dict:
    """Canonical serialization; parse_config(config_to_dict(...)) round-trips."""
    return {
        "workloads": [workload_to_dict(w) for w in workloads],
        "hardware": hardware_to_dict(hardware),
        "memory_spec": memory_spec_to_dict(spec),
    }
