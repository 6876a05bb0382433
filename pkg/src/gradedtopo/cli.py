"""Command-line interface.

Subcommands: ``run`` (optimize from a config file), ``sweep`` (vary one
parameter of a named case), ``infill`` (map a grading-field dump onto a
manufacturing grid) and ``list-cases``. Exit codes: 0 success, 1 validation
error, 2 solver failure, 3 run finished at the iteration cap without
converging.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cases import get_case, list_cases, run_sweep
from .infill import infill_map, write_infill_csv
from .io import (
    ConfigError,
    FieldDump,
    build_case,
    parse_config,
    read_field_dump,
    write_field_dump,
    write_outputs,
    write_sweep_csv,
)
from .linalg import SolverFailure
from .opt_single import RunRecord

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_NOT_CONVERGED = 3


def exit_code_for(record: RunRecord) -> int:
    if record.error is not None:
        return EXIT_SOLVER
    return EXIT_OK if record.converged else EXIT_NOT_CONVERGED


def _parse_overrides(pairs) -> dict:
    overrides = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ValueError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        config = parse_config(text)
        for warning in config.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        case = build_case(config)
        if args.set:
            case = case.with_overrides(**_parse_overrides(args.set))
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION

    out_dir = Path(config.output_dir)
    mesh = case.build_mesh()
    dump_every = config.dump_every

    def dumper(iteration, phi, chi):
        if dump_every and iteration % dump_every == 0:
            out_dir.mkdir(parents=True, exist_ok=True)
            dump = FieldDump.from_mesh(mesh, "phi", iteration, phi)
            write_field_dump(dump, out_dir / f"phi_{iteration:06d}.txt")
            if chi is not None:
                dump = FieldDump.from_mesh(mesh, "chi", iteration, chi)
                write_field_dump(dump, out_dir / f"chi_{iteration:06d}.txt")

    try:
        state, record = case.run(on_iteration=dumper)
    except SolverFailure as err:
        print(f"error: solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER

    fields = {"phi": state.phi}
    if getattr(state, "chi", None) is not None:
        fields["chi"] = state.chi
    try:
        write_outputs(out_dir, mesh, record, fields)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION

    status = exit_code_for(record)
    if record.error is not None:
        print(f"error: solver failure after {record.iterations} iterations: "
              f"{record.error}", file=sys.stderr)
    elif not record.converged:
        print(f"run stopped at the iteration cap ({record.iterations}) "
              f"without converging", file=sys.stderr)
    else:
        print(f"converged after {record.iterations} iterations, "
              f"compliance {record.final_compliance:.6g}")
    return status


def _cmd_sweep(args) -> int:
    try:
        case = get_case(args.case)
        overrides = _parse_overrides(args.set)
        if overrides:
            case = case.with_overrides(**overrides)
        values = [float(v) for v in args.values.split(",") if v.strip()]
        if not values:
            raise ValueError("no sweep values given")
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        print(f"error: cannot create {out_dir}: {err}", file=sys.stderr)
        return EXIT_VALIDATION

    def save_run(value, state, record):
        run_dir = out_dir / f"{args.axis}_{value:g}"
        mesh = case.with_overrides(**{args.axis: value}).build_mesh()
        fields = {"phi": state.phi}
        if getattr(state, "chi", None) is not None:
            fields["chi"] = state.chi
        write_outputs(run_dir, mesh, record, fields)

    sweep = run_sweep(case, args.axis, values, on_run=save_run)
    write_sweep_csv(out_dir / "sweep.csv", sweep)
    for row in sweep.rows:
        label = "yes" if row.converged else "no"
        extra = f" error: {row.error}" if row.error else ""
        print(f"{args.axis}={row.value:g} compliance={row.compliance:.6g} "
              f"m_chi={row.m_chi:.4g} converged={label}{extra}")
    return EXIT_OK


def _cmd_infill(args) -> int:
    try:
        dump = read_field_dump(args.field)
        grid = infill_map(dump, args.cell)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out) if args.out else Path(args.field).with_suffix(".infill.csv")
    write_infill_csv(out, grid)
    print(f"{grid.n_cells[1]}x{grid.n_cells[0]} cells of {grid.cell_mm:g} mm, "
          f"solid fraction {grid.solid_fraction():.4f}")
    return EXIT_OK


def _cmd_list_cases(_args) -> int:
    for name in list_cases():
        print(name)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gradedtopo",
        description="Phase-field topology optimization with graded infill")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="optimize from a config file")
    p_run.add_argument("--config", required=True, help="path to an INI config")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a case parameter")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="vary one parameter of a case")
    p_sweep.add_argument("--case", required=True)
    p_sweep.add_argument("--axis", required=True,
                         help="parameter name, e.g. gamma_chi or beta")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values")
    p_sweep.add_argument("--out", default="sweep_out")
    p_sweep.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_infill = sub.add_parser("infill", help="map a grading dump to a grid")
    p_infill.add_argument("--field", required=True,
                          help="path to a chi field dump")
    p_infill.add_argument("--cell", type=float, required=True,
                          help="cell size in mm")
    p_infill.add_argument("--out", help="output CSV path")
    p_infill.set_defaults(func=_cmd_infill)

    p_list = sub.add_parser("list-cases", help="print known case names")
    p_list.set_defaults(func=_cmd_list_cases)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
