"""Simulation and verification toolkit for quantum-walk k-distinctness."""

__version__ = "0.1.0"

from .collision_driver import (CollisionResult, exponent_scan, pick_prime_power,
                               r_sweep, run_k_distinctness)
from .errors import (GengroverError, KDistinctError, ModeError, NotUnitaryError,
                     ParameterError, SizeCapError, StoreError)
from .instances import Instance, load_instance, planted_instance
from .ledger import QueryLedger
from .set_store import CanonicalStore, measure_failure_rate
from .spectral import eigenphases, gengrover_analysis, theta_table
from .walk_core import (SubspaceState, WalkParams, build_step_unitary, run_single_solution,
                        start_state, success_curve)

__all__ = [
    "CanonicalStore", "CollisionResult", "GengroverError", "Instance", "KDistinctError",
    "ModeError", "NotUnitaryError", "ParameterError", "QueryLedger", "SizeCapError",
    "StoreError", "SubspaceState", "WalkParams", "build_step_unitary", "eigenphases",
    "exponent_scan", "gengrover_analysis", "load_instance", "measure_failure_rate",
    "pick_prime_power", "planted_instance", "r_sweep", "run_k_distinctness",
    "run_single_solution", "start_state", "success_curve", "theta_table",
]
