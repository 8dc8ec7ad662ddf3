"""Matrix-free 3D FDTD Maxwell solver on staggered summation-by-parts grids.

Boundary conditions (PEC, PMC, Bloch-periodic) are enforced weakly through
simultaneous-approximation-term penalties, which gives a provable discrete
energy balance on the SBP norms.  The package also ships eigenvalue-based
numerical dispersion analysis of the fully discrete update and the usual
post-processing helpers (spectra, plane power flux, S-parameters, SAR).
"""

__version__ = "0.1.0"

from .constants import C0, EPS0, MU0
from .sbp import NodeGridKind, SbpOperatorPair, apply_d, assemble_dense, build_sbp_pair, verify_sbp
from .grids import (
    COMPONENTS,
    E_COMPONENTS,
    FACE_NAMES,
    FieldSet,
    GridSpec,
    H_COMPONENTS,
    component_shape,
    extract_face,
    scatter_face_add,
    storage_overhead,
)
from .materials import CurrentSource, MaterialGrid, Waveform
from .solver import (
    BoundaryKind,
    FluxProbe,
    PointProbe,
    RunResult,
    SatConfig,
    Simulation,
    cfl_max_dt,
)
from .diagnostics import SpectrumResult, field_energy, plane_power, s_parameters, sar_field, spectrum
from .dispersion import BlochPhases, build_amplification, error_metrics, numerical_wavenumbers
from .scenario import Scenario, ScenarioError, parse_scenario
from .outputs import RunManifest
