"""Data-aware soundness checking for Data Petri nets with linear arithmetic guards."""

__version__ = "0.1.0"

from .bench import add_chained_vars, add_sequential_states
from .dpn import DPN
from .oracle import DomainBox, oracle_soundness
from .pnml import load_pnml, parse_pnml, to_pnml
from .soundness import CheckConfig, SoundnessChecker, SoundnessReport, check_sound

__all__ = [
    "CheckConfig", "DPN", "DomainBox", "SoundnessChecker", "SoundnessReport",
    "add_chained_vars", "add_sequential_states", "check_sound", "load_pnml",
    "oracle_soundness", "parse_pnml", "to_pnml",
]
