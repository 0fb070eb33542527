"""Event-by-event simulation of single-photon interference and EPRB experiments."""

from .analysis import AnalysisConfig, analyze, chsh, find_delta
from .config import RunConfig, parse_config
from .dlm import DlmBeamSplitter, MziNetwork, run_beam_splitter, run_mzi
from .eprb import StationConfig, StationDataset, run_experiment
from .rng import RandomStream, StreamRole

__all__ = [
    "AnalysisConfig", "analyze", "chsh", "find_delta",
    "RunConfig", "parse_config",
    "DlmBeamSplitter", "MziNetwork", "run_beam_splitter", "run_mzi",
    "StationConfig", "StationDataset", "run_experiment",
    "RandomStream", "StreamRole",
]
__version__ = "0.1.0"
