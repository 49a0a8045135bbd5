"""Variational recovery of native-gate angles for stabilizer circuits.

The package prepares graph and GHZ states in a native {Rz, Rx, Rzx} basis,
injects frozen angle errors and per-moment Pauli noise, and recovers the
angle corrections by minimizing the summed stabilizer-expectation cost.
"""

__version__ = "0.1.0"

from .channels import (
    DepolarizingChannel,
    GenericChannel,
    NoiseLayout,
    PauliChannel,
    chi_factor,
    clifford_twirl,
    compose_depolarizing,
    conjugate_channel,
    depolarizing_as_pauli,
    effective_end_channel,
    pauli_twirl,
    sample_pauli_channel,
)
from .circuits import (
    CliffordCircuit,
    Moment,
    NativeGate,
    ParamCircuit,
    build_ghz_circuit,
    build_graph_circuit,
    gate_unitary,
    sample_coherent_errors,
    transpile,
)
from .cost import (
    CostReport,
    chi_scaled_cost,
    cost,
    delta_cost,
    gradient,
    hessian_fd,
    noisy_cost,
)
from .optimize import OptimizationTrace, OptimizerSettings, epsilon_metrics, minimize
from .pauli import (
    Graph,
    PauliString,
    StabilizerSet,
    commutes,
    decompose,
    ghz_stabilizers,
    graph_stabilizers,
    multiply,
)
from .simulator import (
    DensityMatrix,
    ResourceLimitError,
    StateVector,
    apply_channel,
    expectation,
    run_noisy,
    run_pure,
)

__all__ = [name for name in dir() if not name.startswith("_")]
