"""Estimating the qubit-light and light-mechanics couplings of a hybrid
optomechanical system from global and partial access."""

__version__ = "0.1.0"

from .dynamics import DecoherenceRates, TimeGrid
from .estimation import FisherRecord, StencilConfig, fisher_scan
from .hilbert import HilbertDims
from .model import InitialState, SystemParams

__all__ = [
    "DecoherenceRates",
    "FisherRecord",
    "HilbertDims",
    "InitialState",
    "StencilConfig",
    "SystemParams",
    "TimeGrid",
    "fisher_scan",
]
