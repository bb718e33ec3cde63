# -*- coding: utf-8 -*-
""" Exceptions raised by the dtc_floquet package
"""
from typing import Dict, Optional


class DtcFloquetError(Exception):
    """Base Class for dtc_floquet package"""

    _MESSAGE = "DTC Floquet error:"

    def __init__(self, error=None):
        self._error = error
        self._message = self._MESSAGE
        super().__init__(self._message)

    @property
    def error(self):
        return self._error

    def __str__(self):
        return f"{self._message} {self._error}"


class InvalidConfigError(DtcFloquetError):
    """Raised when a chain, noise or mitigation configuration is not valid"""

    _MESSAGE = "Invalid configuration:"


class UnsupportedSizeError(DtcFloquetError):
    """Raised when a register is too large for the requested engine"""

    _MESSAGE = "Unsupported register size:"


class UnsupportedModelError(DtcFloquetError):
    """Raised when the free-fermion engine receives an interacting model"""

    _MESSAGE = "Model not supported by the free-fermion engine:"


class NonInvertibleChannelError(DtcFloquetError):
    """Raised when a readout channel with mean flip probability >= 0.5 is inverted"""

    _MESSAGE = "Readout channel is not invertible:"


class DegenerateNormalizationError(DtcFloquetError):
    """Raised when |<Z>(0) - <Z>_final| vanishes and no normalization is possible"""

    _MESSAGE = "Degenerate normalization:"


class UndefinedVarianceError(DtcFloquetError):
    """Raised when fewer than two qubits enter a variance"""

    _MESSAGE = "Variance undefined:"


class SpectrumLengthError(DtcFloquetError):
    """Raised when a series cannot provide an exact half drive frequency bin"""

    _MESSAGE = "Spectrum not computable:"


class UnderdeterminedSystemError(DtcFloquetError):
    """Raised when tomography settings are not informationally complete"""

    _MESSAGE = "Tomography system is underdetermined:"


class LogBranchError(DtcFloquetError):
    """Raised when the principal matrix logarithm is ambiguous"""

    _MESSAGE = "Matrix logarithm branch failure:"


class CovarianceInvariantError(DtcFloquetError):
    """Raised when an evolved Majorana covariance is no longer physical"""

    _MESSAGE = "Covariance invariant violated:"


class EngineCapabilityError(DtcFloquetError):
    """Raised when an engine cannot run the requested experiment"""

    _MESSAGE = "Engine capability violation:"


class UnknownPresetError(DtcFloquetError):
    """Raised when a preset name is not known"""

    _MESSAGE = "Unknown preset:"


class SpecValidationError(DtcFloquetError):
    """Exception raised when an experiment spec does not follow the schema"""

    _MESSAGE = "Experiment spec is not valid:"

    def __init__(self, field_errors: Optional[Dict[str, str]] = None):
        self.field_errors = dict(field_errors or {})
        super().__init__(
            "; ".join(f"{field}: {msg}" for field, msg in self.field_errors.items())
        )
