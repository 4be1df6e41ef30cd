"""Simulation of Margolus, coloured and continuous-time quantum cellular automata."""
from .classical import BitRow, RuleTable, SecondOrderECA, eca_run, eca_step, reversible_block_to_mqca
from .cqca import Colouring, ColouredQCA, FieldCondition, FieldControlledUnitary, walk_cqca_example
from .ctqca import ContinuousQCA, CouplingMap, PiecewiseCTQCA, TrotterParams, flip_flop_example, pair_creation_example
from .decompose import GateOp, GateSequence, decompose_block, decompose_two_qubit
from .exceptions import (ConfigParseError, ConfigurationError, QCAError, ResourceError, UnsupportedStructureError,
                         UsageError)
from .lattice import Lattice, NeighbourhoodScheme
from .mqca import MargolusQCA, Tiling, pqca_from_cell_unitary, validate, walk_example
from .state import (DensityMatrix, StateVector, apply_local_unitary, basis_state, excitation_state, fidelity,
                    partial_trace, random_state, reduced_density, site_probability)
from .transpile import cqca_to_ctqca, cqca_to_mqca, ctqca_to_cqca, mqca_to_cqca
from .verify import (CheckReport, assemble_global, check_causality, check_consistency, check_translation,
                     check_unitarity)

__version__ = "0.1.0"

__all__ = [
    "apply_local_unitary",
    "assemble_global",
    "basis_state",
    "BitRow",
    "check_causality",
    "check_consistency",
    "check_translation",
    "check_unitarity",
    "CheckReport",
    "ColouredQCA",
    "Colouring",
    "ConfigParseError",
    "ConfigurationError",
    "ContinuousQCA",
    "CouplingMap",
    "cqca_to_ctqca",
    "cqca_to_mqca",
    "ctqca_to_cqca",
    "decompose_block",
    "decompose_two_qubit",
    "DensityMatrix",
    "eca_run",
    "eca_step",
    "excitation_state",
    "fidelity",
    "FieldCondition",
    "FieldControlledUnitary",
    "flip_flop_example",
    "GateOp",
    "GateSequence",
    "Lattice",
    "MargolusQCA",
    "mqca_to_cqca",
    "NeighbourhoodScheme",
    "pair_creation_example",
    "partial_trace",
    "PiecewiseCTQCA",
    "pqca_from_cell_unitary",
    "QCAError",
    "random_state",
    "reduced_density",
    "ResourceError",
    "reversible_block_to_mqca",
    "RuleTable",
    "SecondOrderECA",
    "site_probability",
    "StateVector",
    "Tiling",
    "TrotterParams",
    "UnsupportedStructureError",
    "UsageError",
    "validate",
    "walk_cqca_example",
    "walk_example",
]
