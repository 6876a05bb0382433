"""Named benchmark problems and the parameter-sweep runner.

Two families are built in: an end-loaded cantilever plate (2 x 1 mm at
slenderness 2, 64 elements per mm) and a half-model of a simply-supported
beam (100 x 50 mm) carrying a distributed top load. Every case fully
determines a run; sweeps re-run one case while varying a single named
parameter.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .elasticity import BoundaryConditions, edge_tractions, fix_edge
from .material import InterpolationSpec, IsotropicElasticity
from .mesh import StructuredQuadMesh, build_mesh
from .opt_graded import GradedConfig, run_graded
from .opt_single import OptConfig, RunRecord, run_single

# Traction footprint of the cantilever tip load, in mm along the right
# boundary measured from the bottom corner. Ten element edges at the
# reference resolution of 64 elements per mm.
CANTILEVER_LOAD_EXTENT_MM = 0.15625
CANTILEVER_ELEMENTS_PER_MM = 64


@dataclass(frozen=True)
class BenchmarkCase:
    """A fully specified optimization problem.

    ``loads`` holds (tag, gx, gy, extent, anchor) tuples; tractions are
    multiplied by ``load_factor`` when the boundary conditions are built.
    ``supports`` lists extra nodewise Dirichlet constraints as
    (node_rank, component) where node_rank indexes the bottom boundary row.
    """

    name: str
    nx: int
    ny: int
    lx: float
    ly: float
    material: IsotropicElasticity
    interp: InterpolationSpec
    config: OptConfig
    mode: str = "graded"
    fixes: tuple = ()
    loads: tuple = ()
    supports: tuple = ()
    load_factor: float = 1.0

    def build_mesh(self) -> StructuredQuadMesh:
        return build_mesh(self.nx, self.ny, self.lx, self.ly)

    def build_bc(self, mesh: StructuredQuadMesh) -> BoundaryConditions:
        dirichlet: list = []
        for tag, components in self.fixes:
            dirichlet.extend(fix_edge(mesh, tag, components))
        for rank, comp in self.supports:
            dirichlet.append((mesh.node_index(rank, 0), comp, 0.0))
        neumann: list = []
        for tag, gx, gy, extent, anchor in self.loads:
            g = (gx * self.load_factor, gy * self.load_factor)
            neumann.extend(edge_tractions(mesh, tag, g, extent=extent,
                                          anchor=anchor))
        return BoundaryConditions(dirichlet=tuple(dirichlet),
                                  neumann=tuple(neumann))

    def run(self, on_iteration=None):
        mesh = self.build_mesh()
        bc = self.build_bc(mesh)
        if self.mode == "single":
            return run_single(mesh, self.material, self.interp, bc,
                              self.config, on_iteration=on_iteration)
        return run_graded(mesh, self.material, self.interp, bc,
                          self.config, on_iteration=on_iteration)

    def with_overrides(self, **overrides) -> "BenchmarkCase":
        """Return a copy with named parameters replaced.

        Accepted keys: mesh (nx, ny), material (E_MPa, nu), interpolation
        (beta, p, gamma_phi), optimizer (m, kappa_phi, kappa_chi, gamma_chi,
        tau, tol, max_iter, phi0, chi0), plus mode and load_factor.
        """
        case = self
        for key, value in overrides.items():
            case = case._with_override(key, value)
        return case

    def _with_override(self, key: str, value) -> "BenchmarkCase":
        if key in ("nx", "ny"):
            return dataclasses.replace(self, **{key: int(value)})
        if key in ("mode",):
            if value not in ("single", "graded"):
                raise ValueError(f"mode must be single or graded, got {value!r}")
            return dataclasses.replace(self, mode=value,
                                       config=self._coerce_config(value))
        if key == "load_factor":
            return dataclasses.replace(self, load_factor=float(value))
        if key == "E_MPa":
            mat = IsotropicElasticity.from_young_poisson(float(value),
                                                         self.material.poisson)
            return dataclasses.replace(self, material=mat)
        if key == "nu":
            mat = IsotropicElasticity.from_young_poisson(self.material.young,
                                                         float(value))
            return dataclasses.replace(self, material=mat)
        if key == "beta":
            interp = dataclasses.replace(self.interp, beta=float(value))
            return dataclasses.replace(self, interp=interp)
        if key == "p":
            interp = dataclasses.replace(self.interp, penalty=float(value))
            return dataclasses.replace(self, interp=interp)
        if key == "gamma_phi":
            interp = dataclasses.replace(self.interp, gamma_phi=float(value))
            config = dataclasses.replace(self.config, gamma_phi=float(value))
            return dataclasses.replace(self, interp=interp, config=config)
        if key == "chi0":
            value = None if value is None else float(value)
            config = dataclasses.replace(self._graded_config(), chi0=value)
            return dataclasses.replace(self, config=config)
        if key in ("kappa_chi", "gamma_chi"):
            config = dataclasses.replace(self._graded_config(),
                                         **{key: float(value)})
            return dataclasses.replace(self, config=config)
        if key in ("m", "kappa_phi", "tau", "tol", "phi0"):
            config = dataclasses.replace(self.config, **{key: float(value)})
            return dataclasses.replace(self, config=config)
        if key == "max_iter":
            config = dataclasses.replace(self.config, max_iter=int(value))
            return dataclasses.replace(self, config=config)
        raise ValueError(f"unknown override parameter {key!r}")

    def _graded_config(self) -> GradedConfig:
        if isinstance(self.config, GradedConfig):
            return self.config
        return GradedConfig(**dataclasses.asdict(self.config))

    def _coerce_config(self, mode: str) -> OptConfig:
        if mode == "graded":
            return self._graded_config()
        return self.config


def cantilever_case(slenderness: float = 2.0, mode: str = "graded",
                    **overrides) -> BenchmarkCase:
    """End-loaded cantilever plate, height 1 mm, length slenderness mm.

    The left edge is fully clamped and a (0, -600) N/mm traction acts on the
    lowest stretch of the right edge. Mesh resolution is fixed at 64
    elements per mm so the element size is invariant under slenderness.
    """
    if slenderness <= 0.0:
        raise ValueError(f"slenderness must be positive, got {slenderness}")
    height = 1.0
    length = slenderness * height
    nx = int(round(CANTILEVER_ELEMENTS_PER_MM * length))
    ny = int(round(CANTILEVER_ELEMENTS_PER_MM * height))
    material = IsotropicElasticity.from_young_poisson(12500.0, 0.25)
    interp = InterpolationSpec(penalty=3.0, gamma_phi=0.02, beta=4.0)
    config = GradedConfig(m=0.45, kappa_phi=4.0, gamma_phi=0.02, tau=1e-6,
                          tol=0.01, max_iter=1000, phi0=0.5,
                          kappa_chi=4.0, gamma_chi=0.02)
    case = BenchmarkCase(
        name=f"cantilever_s{slenderness:g}",
        nx=nx, ny=ny, lx=length, ly=height,
        material=material, interp=interp, config=config, mode="graded",
        fixes=(("left", "both"),),
        loads=(("right", 0.0, -600.0, CANTILEVER_LOAD_EXTENT_MM, "start"),),
    )
    if mode != "graded":
        case = case.with_overrides(mode=mode)
        case = dataclasses.replace(case, name=case.name + "_single")
    return case.with_overrides(**overrides)


def simply_supported_case(load_factor: float = 1.0, beta: float = 3.0,
                          mode: str = "graded", **overrides) -> BenchmarkCase:
    """Half-model of a simply-supported beam under a distributed top load.

    The symmetry edge (right) blocks horizontal motion, the outer bottom
    corner node pair is supported vertically, and k * (0, -50) N/mm acts on
    the whole top edge.
    """
    material = IsotropicElasticity.from_young_poisson(2300.0, 0.35)
    interp = InterpolationSpec(penalty=3.0, gamma_phi=0.01, beta=beta)
    config = GradedConfig(m=0.4, kappa_phi=1.0, gamma_phi=0.01, tau=1e-6,
                          tol=0.01, max_iter=1000, phi0=0.5,
                          kappa_chi=1.0, gamma_chi=0.01)
    case = BenchmarkCase(
        name="simply_supported",
        nx=128, ny=64, lx=100.0, ly=50.0,
        material=material, interp=interp, config=config, mode="graded",
        fixes=(("right", "x"),),
        supports=((0, 1), (1, 1)),
        loads=(("top", 0.0, -50.0, None, "start"),),
        load_factor=load_factor,
    )
    if mode != "graded":
        case = case.with_overrides(mode=mode)
        case = dataclasses.replace(case, name=case.name + "_single")
    return case.with_overrides(**overrides)


CASE_REGISTRY = {
    "cantilever_s1": lambda: cantilever_case(slenderness=1.0),
    "cantilever_s2": lambda: cantilever_case(slenderness=2.0),
    "cantilever_s4": lambda: cantilever_case(slenderness=4.0),
    "cantilever_s2_single": lambda: cantilever_case(slenderness=2.0, mode="single"),
    "simply_supported": lambda: simply_supported_case(),
    "simply_supported_single": lambda: simply_supported_case(mode="single"),
}


def get_case(name: str) -> BenchmarkCase:
    try:
        factory = CASE_REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(CASE_REGISTRY))
        raise ValueError(f"unknown case {name!r}; known cases: {known}") from None
    return factory()


def list_cases() -> list[str]:
    return sorted(CASE_REGISTRY)


@dataclass
class SweepRow:
    value: float
    compliance: float
    m_chi: float
    converged: bool
    iterations: int
    wall_time_s: float
    error: str | None = None


@dataclass
class SweepResult:
    axis: str
    rows: list[SweepRow] = field(default_factory=list)

    def values(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])


def run_sweep(case: BenchmarkCase, axis: str, values,
              on_run=None) -> SweepResult:
    """Run one independent optimization per axis value.

    Individual run failures are recorded in their row and the sweep
    continues. Rows keep the order of the given values.
    """
    if len(values) == 0:
        raise ValueError("a sweep needs at least one axis value")
    result = SweepResult(axis=axis)
    for value in values:
        start = time.perf_counter()
        try:
            variant = case.with_overrides(**{axis: value})
            state, record = variant.run()
            wall = time.perf_counter() - start
            fraction = record.final_material_fraction
            if record.error is not None:
                row = SweepRow(value=float(value), compliance=math.nan,
                               m_chi=math.nan, converged=False,
                               iterations=record.iterations, wall_time_s=wall,
                               error=record.error)
            else:
                row = SweepRow(value=float(value),
                               compliance=record.final_compliance,
                               m_chi=fraction, converged=record.converged,
                               iterations=record.iterations, wall_time_s=wall)
            if on_run is not None:
                on_run(value, state, record)
        except (ValueError, RuntimeError) as err:
            wall = time.perf_counter() - start
            row = SweepRow(value=float(value), compliance=math.nan,
                           m_chi=math.nan, converged=False, iterations=0,
                           wall_time_s=wall, error=str(err))
        result.rows.append(row)
    return result
