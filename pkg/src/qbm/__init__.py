"""Zero-temperature quantum Brownian motion: master-equation coefficients,
fringe decoherence and the Gaussian upside-down oscillator."""
import logging

from .errors import (
    AnsatzBreakdownError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    IntegrationError,
    QBMError,
    RangeError,
    StiffnessError,
)
from .params import BathSpec, Orientation, SystemSpec

__version__ = "0.1.0"

__all__ = [
    "AnsatzBreakdownError",
    "BathSpec",
    "ConfigurationError",
    "ConvergenceError",
    "DomainError",
    "IntegrationError",
    "Orientation",
    "QBMError",
    "RangeError",
    "StiffnessError",
    "SystemSpec",
    "__version__",
]

logging.getLogger(__name__).addHandler(logging.NullHandler())
