"""Classical simulation of variational quantum matrix product states (vqMPS)."""

__version__ = "0.1.0"

from .hamiltonian import PauliSum, build_xxz, dense, to_mpo  # noqa: E402
from .qmps import QmpsChain, QmpsSite, contract_expectation, random_chain  # noqa: E402
from .simulator import StateVector  # noqa: E402
from .sweep import SweepConfig, run_vqmps  # noqa: E402
from .variational import AnsatzCircuit, OptimizerConfig, vqe_ground  # noqa: E402

__all__ = [
    "AnsatzCircuit", "OptimizerConfig", "PauliSum", "QmpsChain", "QmpsSite", "StateVector",
    "SweepConfig", "build_xxz", "contract_expectation", "dense", "random_chain",
    "run_vqmps", "to_mpo", "vqe_ground",
]
