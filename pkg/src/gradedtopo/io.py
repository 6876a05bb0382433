"""Run configuration files, result persistence and text field dumps.

The configuration format is a strict INI subset: known sections and keys
only, ``key = value`` lines, ``#`` or ``;`` comments. A run is either based
on a named case (section [case], other sections act as overrides) or fully
explicit via [mesh]/[material]/[optimizer]/[bc].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cases import BenchmarkCase, SweepResult, get_case
from .material import InterpolationSpec, IsotropicElasticity
from .mesh import StructuredQuadMesh
from .opt_single import RunRecord


class ConfigError(ValueError):
    """Configuration problem with the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


_SCHEMA = {
    "mesh": {"nx": int, "ny": int, "lx_mm": float, "ly_mm": float},
    "material": {"E_MPa": float, "nu": float, "beta": float, "p": float,
                 "gamma_phi": float},
    "optimizer": {"mode": str, "m": float, "kappa_phi": float,
                  "kappa_chi": float, "gamma_chi": float, "tau": float,
                  "tol": float, "max_iter": int, "phi0": float,
                  "chi0": float},
    "case": {"name": str, "load_factor": float},
    "bc": None,  # free-form fix/load lines
    "output": {"directory": str, "dump_every": int},
}

_GRADED_ONLY_KEYS = ("kappa_chi", "gamma_chi", "chi0")


@dataclass
class RunConfigFile:
    """Parsed and validated configuration document."""

    case_name: str | None
    sections: dict
    bc_entries: list  # (key, value, line) triples from [bc]
    output_dir: str
    dump_every: int
    warnings: list = field(default_factory=list)


def parse_config(text: str) -> RunConfigFile:
    """Parse a configuration document, rejecting unknown sections and keys."""
    sections: dict = {}
    bc_entries: list = []
    current: str | None = None
    seen_keys: set = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}",
                                  lineno)
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                raise ConfigError(f"unknown section [{name}]", lineno)
            if name in sections or (name == "bc" and bc_entries):
                raise ConfigError(f"duplicate section [{name}]", lineno)
            sections.setdefault(name, {})
            current = name
            continue
        if current is None:
            raise ConfigError(f"key outside any section: {raw.strip()!r}", lineno)
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}",
                              lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if current == "bc":
            if key not in ("fix", "load"):
                raise ConfigError(f"unknown [bc] entry {key!r}", lineno)
            bc_entries.append((key, value, lineno))
            continue
        schema = _SCHEMA[current]
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in section [{current}]",
                              lineno)
        if (current, key) in seen_keys:
            raise ConfigError(f"duplicate key {key!r} in section [{current}]",
                              lineno)
        seen_keys.add((current, key))
        caster = schema[key]
        try:
            sections[current][key] = caster(value) if caster is not str else value
        except ValueError:
            raise ConfigError(
                f"cannot parse {key} value {value!r} as {caster.__name__}",
                lineno) from None

    return _validate(sections, bc_entries)


def _require(sections: dict, section: str, keys) -> None:
    present = sections.get(section, {})
    missing = [k for k in keys if k not in present]
    if section not in sections:
        raise ConfigError(f"missing section [{section}]")
    if missing:
        raise ConfigError(
            f"section [{section}] is missing required keys: {', '.join(missing)}")


def _validate(sections: dict, bc_entries: list) -> RunConfigFile:
    case_name = sections.get("case", {}).get("name")
    warnings: list = []

    if case_name is None:
        _require(sections, "mesh", ("nx", "ny", "lx_mm", "ly_mm"))
        _require(sections, "material", ("E_MPa", "nu", "gamma_phi"))
        _require(sections, "optimizer", ("mode", "m", "kappa_phi", "tau",
                                         "tol", "max_iter", "phi0"))
        if not bc_entries:
            raise ConfigError("either [case] name or [bc] entries are required")
        mode = sections["optimizer"]["mode"]
        if mode == "graded":
            _require(sections, "optimizer", ("kappa_chi", "gamma_chi"))
            _require(sections, "material", ("beta",))
    else:
        mode = sections.get("optimizer", {}).get("mode")
        if bc_entries:
            raise ConfigError("[bc] entries cannot be combined with a named case")

    if mode is not None and mode not in ("single", "graded"):
        raise ConfigError(f"mode must be 'single' or 'graded', got {mode!r}")
    if mode == "single":
        for key in _GRADED_ONLY_KEYS:
            if key in sections.get("optimizer", {}):
                warnings.append(
                    f"key {key!r} is ignored in single-material mode")
                del sections["optimizer"][key]

    _require(sections, "output", ("directory",))
    output = sections["output"]
    dump_every = output.get("dump_every", 0)
    if dump_every < 0:
        raise ConfigError("dump_every must be >= 0")

    return RunConfigFile(case_name=case_name, sections=sections,
                         bc_entries=bc_entries,
                         output_dir=output["directory"],
                         dump_every=dump_every, warnings=warnings)


def build_case(config: RunConfigFile) -> BenchmarkCase:
    """Turn a parsed configuration into a runnable benchmark case."""
    overrides: dict = {}
    mesh_map = {"nx": "nx", "ny": "ny"}
    for key, target in mesh_map.items():
        if key in config.sections.get("mesh", {}):
            overrides[target] = config.sections["mesh"][key]
    for key in ("E_MPa", "nu", "beta", "p", "gamma_phi"):
        if key in config.sections.get("material", {}):
            overrides[key] = config.sections["material"][key]
    for key in ("mode", "m", "kappa_phi", "kappa_chi", "gamma_chi", "tau",
                "tol", "max_iter", "phi0", "chi0"):
        if key in config.sections.get("optimizer", {}):
            overrides[key] = config.sections["optimizer"][key]
    if "load_factor" in config.sections.get("case", {}):
        overrides["load_factor"] = config.sections["case"]["load_factor"]

    if config.case_name is not None:
        case = get_case(config.case_name)
        return case.with_overrides(**overrides)

    mesh_sec = config.sections["mesh"]
    material = IsotropicElasticity.from_young_poisson(
        config.sections["material"]["E_MPa"], config.sections["material"]["nu"])
    interp = InterpolationSpec(
        penalty=config.sections["material"].get("p", 3.0),
        gamma_phi=config.sections["material"]["gamma_phi"],
        beta=config.sections["material"].get("beta", 1.0))
    opt = config.sections["optimizer"]
    mode = opt["mode"]
    from .opt_graded import GradedConfig
    from .opt_single import OptConfig
    common = dict(m=opt["m"], kappa_phi=opt["kappa_phi"],
                  gamma_phi=config.sections["material"]["gamma_phi"],
                  tau=opt["tau"], tol=opt["tol"], max_iter=opt["max_iter"],
                  phi0=opt["phi0"])
    if mode == "graded":
        cfg = GradedConfig(kappa_chi=opt["kappa_chi"],
                           gamma_chi=opt["gamma_chi"],
                           chi0=opt.get("chi0"), **common)
    else:
        cfg = OptConfig(**common)

    fixes: list = []
    loads: list = []
    for key, value, lineno in config.bc_entries:
        parts = value.split()
        if key == "fix":
            if len(parts) != 2 or parts[0] not in ("left", "right", "bottom", "top") \
                    or parts[1] not in ("x", "y", "both"):
                raise ConfigError(
                    f"fix entries read 'fix = <edge> <x|y|both>', got {value!r}",
                    lineno)
            fixes.append((parts[0], parts[1]))
        else:
            if len(parts) not in (3, 4, 5) or parts[0] not in ("left", "right",
                                                               "bottom", "top"):
                raise ConfigError(
                    "load entries read 'load = <edge> <gx> <gy> "
                    f"[extent_mm] [start|end]', got {value!r}", lineno)
            try:
                gx, gy = float(parts[1]), float(parts[2])
                extent = float(parts[3]) if len(parts) >= 4 else None
            except ValueError:
                raise ConfigError(f"cannot parse load numbers in {value!r}",
                                  lineno) from None
            anchor = parts[4] if len(parts) == 5 else "start"
            if anchor not in ("start", "end"):
                raise ConfigError(f"load anchor must be start or end, got "
                                  f"{anchor!r}", lineno)
            loads.append((parts[0], gx, gy, extent, anchor))

    return BenchmarkCase(
        name="custom", nx=mesh_sec["nx"], ny=mesh_sec["ny"],
        lx=mesh_sec["lx_mm"], ly=mesh_sec["ly_mm"],
        material=material, interp=interp, config=cfg, mode=mode,
        fixes=tuple(fixes), loads=tuple(loads))


@dataclass(frozen=True)
class FieldDump:
    """A nodal scalar field with enough metadata to rebuild its grid."""

    name: str
    iteration: int
    nx_nodes: int
    ny_nodes: int
    lx: float
    ly: float
    values: np.ndarray

    @classmethod
    def from_mesh(cls, mesh: StructuredQuadMesh, name: str, iteration: int,
                  values: np.ndarray) -> "FieldDump":
        if values.shape != (mesh.n_nodes,):
            raise ValueError(
                f"field has {values.shape[0]} values, mesh has {mesh.n_nodes} nodes")
        return cls(name=name, iteration=iteration, nx_nodes=mesh.nx + 1,
                   ny_nodes=mesh.ny + 1, lx=mesh.lx, ly=mesh.ly,
                   values=np.asarray(values, dtype=float))


def write_field_dump(dump: FieldDump, path: Path | str) -> Path:
    """Write a field dump; values survive a round trip to 17 significant
    digits, one grid row per line from the bottom row up."""
    path = Path(path)
    rows = dump.values.reshape(dump.ny_nodes, dump.nx_nodes)
    with open(path, "w") as handle:
        handle.write(f"# field {dump.name} iteration {dump.iteration}\n")
        handle.write(f"# grid {dump.nx_nodes} {dump.ny_nodes} "
                     f"{dump.lx!r} {dump.ly!r}\n")
        for row in rows:
            handle.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    return path


def read_field_dump(path: Path | str) -> FieldDump:
    path = Path(path)
    with open(path) as handle:
        header1 = handle.readline().split()
        header2 = handle.readline().split()
        if len(header1) < 4 or header1[:2] != ["#", "field"]:
            raise ValueError(f"{path}: not a field dump (bad first header)")
        if len(header2) != 6 or header2[:2] != ["#", "grid"]:
            raise ValueError(f"{path}: not a field dump (bad grid header)")
        name = header1[2]
        iteration = int(header1[4])
        nx_nodes, ny_nodes = int(header2[2]), int(header2[3])
        lx, ly = float(header2[4]), float(header2[5])
        values = np.fromstring(handle.read(), sep=" ")
    expected = nx_nodes * ny_nodes
    if values.size != expected:
        raise ValueError(
            f"{path}: expected {expected} values, found {values.size}")
    return FieldDump(name=name, iteration=iteration, nx_nodes=nx_nodes,
                     ny_nodes=ny_nodes, lx=lx, ly=ly, values=values)


def raster_bytes(values: np.ndarray, nx_nodes: int, ny_nodes: int) -> bytes:
    """8-bit grayscale PGM (P5) of a [0, 1] field, one pixel per node.

    Pixel value is round-half-up of 255 * field; grid row 0 ends up at the
    top of the image.
    """
    grid = np.asarray(values, dtype=float).reshape(ny_nodes, nx_nodes)
    pixels = np.floor(255.0 * grid + 0.5)
    pixels = np.clip(pixels, 0, 255).astype(np.uint8)
    pixels = pixels[::-1]  # top image row = highest y row
    header = f"P5\n{nx_nodes} {ny_nodes}\n255\n".encode("ascii")
    return header + pixels.tobytes()


def write_raster(path: Path | str, dump: FieldDump) -> Path:
    path = Path(path)
    path.write_bytes(raster_bytes(dump.values, dump.nx_nodes, dump.ny_nodes))
    return path


LOG_COLUMNS = ("iter", "compliance", "volume", "m_chi", "delta_phi",
               "delta_chi")


def write_log_csv(path: Path | str, record: RunRecord) -> Path:
    """One row per iteration; columns not applicable to the run mode are
    left empty."""
    path = Path(path)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(LOG_COLUMNS)
        for row in record.rows:
            writer.writerow([
                row.iteration,
                _fmt(row.compliance),
                _fmt(row.volume),
                _fmt(row.m_chi),
                _fmt(row.delta_phi),
                _fmt(row.delta_chi),
            ])
    return path


def _fmt(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.12g}"


def write_sweep_csv(path: Path | str, sweep: SweepResult) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([sweep.axis, "compliance", "m_chi", "converged",
                         "iterations", "wall_time_s"])
        for row in sweep.rows:
            writer.writerow([
                _fmt(row.value), _fmt(row.compliance), _fmt(row.m_chi),
                "yes" if row.converged else "no",
                row.iterations, f"{row.wall_time_s:.3f}",
            ])
    return path


def write_outputs(out_dir: Path | str, mesh: StructuredQuadMesh,
                  record: RunRecord, fields: dict) -> list[Path]:
    """Persist a finished (or aborted) run: log.csv plus a final dump and
    raster per field."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [write_log_csv(out_dir / "log.csv", record)]
        for name, values in fields.items():
            dump = FieldDump.from_mesh(mesh, name, record.iterations, values)
            written.append(write_field_dump(dump, out_dir / f"{name}_final.txt"))
            written.append(write_raster(out_dir / f"{name}_final.pgm", dump))
    except OSError as err:
        raise OSError(f"cannot write outputs under {out_dir}: {err}") from err
    return written
