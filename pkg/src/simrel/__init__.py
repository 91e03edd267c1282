"""Simulation relations, interfaces and controller concretization for symbolic control."""
from .exceptions import (ComposabilityError, InfeasibleError, InvariantViolation,
                         ParameterError, RelationError, SimrelError, UsageError)
from .system import (BLOCKED, STALLED, TRUNCATED, BehaviorSet, FiniteSystem, GeneralSystem,
                     Trajectory, behavior, feedback_compose, feedback_composable,
                     is_trajectory, project, serial_compose, static_map)
from .relations import (ALL_TYPES, BinaryRelation, CheckReport, ExtendedRelation,
                        RelationType, check_relation, classify, extended_relation,
                        interface_input_map)
from .interface import (SIGNATURES, InterfaceSpec, augment, canonical_interface,
                        check_common_quantization, converse_regular, flatten_relation,
                        interface_frr_equivalence, lift_relation, validate_interface)
from .synthesis import (StaticController, controller_as_system, synthesize_reach,
                        synthesize_safety)
from .concretize import (ClosedLoopTrace, ConcretizedController, closed_loop_run,
                         concretize, verify_reproducibility)

__version__ = "0.1.0"
