"""Generate, verify and score finite-state machine reasoning problems."""

from fsmforge.core import SemanticFsm, StateMapping, Tier, tier_of
from fsmforge.guards import parse_guard, print_guard
from fsmforge.sim import Trace, run
from fsmforge.verify import check_equivalence, check_isomorphism
from fsmforge.yaml_io import parse_fsm_yaml, serialize_fsm_yaml

__version__ = "0.1.0"

__all__ = [
    "SemanticFsm",
    "StateMapping",
    "Tier",
    "Trace",
    "check_equivalence",
    "check_isomorphism",
    "parse_fsm_yaml",
    "parse_guard",
    "print_guard",
    "run",
    "serialize_fsm_yaml",
    "tier_of",
]
