"""State-vector simulation and QAOA ground-state preparation for the 2D Z2
lattice gauge theory on a torus, with a dual transverse-field Ising engine
for larger sizes."""

from .lattice import LoopSpec, TorusLattice, build_lattice, noncontractible_loop, wilson_rectangle
from .statevector import (
    DensityMatrix,
    StateVector,
    apply_cnot,
    apply_one_qubit,
    apply_zz_phase,
    expect_pauli_string,
    fidelity,
    reduced_density_matrix,
    von_neumann_entropy,
)
from .circuits import (
    Circuit,
    CompilationError,
    Gate,
    Schedule,
    apply_string,
    compile_qaoa_step,
    prepare_electric_gs,
    prepare_toric_code_gs,
    qaoa_evolve_exact,
    run_circuit,
)
from .hamiltonian import (
    LGTHamiltonian,
    SpectrumResult,
    apply_hamiltonian,
    energy,
    ground_state,
    lowest_eigenpairs,
    sector_labels,
)
from .dualmodel import (
    DualTFIM,
    dual_electric_gs,
    dual_energy,
    dual_ground_state,
    dual_lowest_eigenpairs,
    dual_magnetic_gs,
    dual_qaoa_evolve,
    dual_wilson_expectation,
)
from .optimizer import (
    ObjectiveSpec,
    OptimizationResult,
    QAOAObjective,
    basin_hopping,
    grid_search_dt,
    linear_dqa_schedule,
    local_minimize,
    schedule_diagnostics,
    transfer_schedule,
    two_step_optimize,
)
from .observables import (
    CreutzResult,
    Tripartition,
    creutz_ratio,
    default_tripartition,
    make_tripartition,
    sector_energies,
    topological_entropy,
    wilson_scan,
)

__version__ = "0.1.0"
