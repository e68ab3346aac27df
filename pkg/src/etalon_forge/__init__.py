"""Design multistage fibre Fabry-Perot etalons by digital filter synthesis."""
from .errors import (DomainError, EtalonError, GridMismatchError, InsufficientPeaksError,
                     OutOfReflectorsError, RankDeficientError, SearchSpaceTooLarge)
from .model import EtalonConfig, RationalTF, Reflector, evaluate_profile, z_transfer_function
from .spectral import SpectralGrid, TransmissionProfile, make_grid

__version__ = "0.1.0"

__all__ = [
    "DomainError", "EtalonError", "GridMismatchError", "InsufficientPeaksError",
    "OutOfReflectorsError", "RankDeficientError", "SearchSpaceTooLarge",
    "EtalonConfig", "RationalTF", "Reflector", "evaluate_profile", "z_transfer_function",
    "SpectralGrid", "TransmissionProfile", "make_grid",
]
