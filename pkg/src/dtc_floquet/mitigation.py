# -*- coding: utf-8 -*-
""" Two-stage error mitigation of measured polarizations

Stage one removes readout errors, either from calibrated flip probabilities
or empirically by normalizing every series to |<Z>(0) - <Z>_final| = 1.
Stage two fits the exponential decay of an epsilon = 0 reference run, drops
qubits that decay too fast or do not follow the model, and rescales the
remaining series by the reference envelope.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import least_squares

from dtc_floquet.errors import (
    DegenerateNormalizationError,
    InvalidConfigError,
    NonInvertibleChannelError,
)
from dtc_floquet.noise import NoiseModel
from dtc_floquet.panel import Stage, TimeSeriesPanel

logger = logging.getLogger(__name__)

DEGENERATE_THRESHOLD = 1e-6
ZERO_AMPLITUDE = 1e-6
MIN_ENVELOPE = 1e-3

FORMULAS = ["literal", "decay-inverse"]


@dataclass(frozen=True)
class MitigationParams:
    """Cutoffs and windows of the mitigation scheme

    final_window defaults to an even count so that an alternating signal
    averages out of <Z>_final. rescale_start is the first rescaled step;
    when unset the decay-inverse formula rescales from t = 0 and the literal
    formula from skip_steps.
    """

    w0: float = 0.15
    wf: float = 0.1
    skip_steps: int = 13
    avg_window: int = 5
    final_window: int = 6
    formula: str = "decay-inverse"
    rms_bound: float = 0.05
    rescale_start: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.w0 <= 1.0:
            raise InvalidConfigError(f"w0={self.w0} is not in [0, 1]")
        if self.wf < 0 or (self.wf >= self.w0 and not self.w0 == self.wf == 0):
            raise InvalidConfigError(f"wf={self.wf} must satisfy 0 <= wf < w0={self.w0}")
        if self.skip_steps < 0 or self.avg_window < 1 or self.final_window < 1:
            raise InvalidConfigError("Window lengths must be positive")
        if self.formula not in FORMULAS:
            raise InvalidConfigError(f"Rescaling formula {self.formula} not in {FORMULAS}")
        if self.rms_bound <= 0:
            raise InvalidConfigError(f"rms_bound={self.rms_bound} must be positive")
        if self.rescale_start is not None and self.rescale_start < 0:
            raise InvalidConfigError(f"rescale_start={self.rescale_start} must not be negative")

    @property
    def first_rescaled_step(self) -> int:
        if self.rescale_start is not None:
            return self.rescale_start
        return 0 if self.formula == "decay-inverse" else self.skip_steps

    @property
    def span_floor(self) -> float:
        """Smallest |<Z>(0) - <Z>_final| normalized empirically"""
        return max(self.wf, DEGENERATE_THRESHOLD)

    def check_steps(self, n_steps: int) -> None:
        if self.skip_steps + self.avg_window > n_steps:
            raise InvalidConfigError(
                f"skip_steps + avg_window = {self.skip_steps + self.avg_window} "
                f"exceeds {n_steps} steps"
            )
        if self.final_window + 1 > n_steps + 1:
            raise InvalidConfigError(f"final_window={self.final_window} too long")

    def window(self, values: np.ndarray) -> np.ndarray:
        """Mean of |values| over the averaging window after the skipped steps"""
        stop = self.skip_steps + self.avg_window
        return np.mean(np.abs(values[..., self.skip_steps:stop]), axis=-1)

    def to_dict(self):
        return {
            "w0": self.w0,
            "wf": self.wf,
            "skip_steps": self.skip_steps,
            "avg_window": self.avg_window,
            "final_window": self.final_window,
            "formula": self.formula,
            "rms_bound": self.rms_bound,
            "rescale_start": self.rescale_start,
        }


@dataclass
class ExponentialFit:
    a: float
    b: float
    c: float
    rms_residual: float
    converged: bool

    def __call__(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return self.a * np.exp(-self.b * np.asarray(t, dtype=float)) + self.c


@dataclass
class MitigationReport:
    """Per-qubit diagnostics of one mitigation pass"""

    eta0: np.ndarray
    eta1: np.ndarray
    fits: List[Optional[ExponentialFit]]
    degenerate: np.ndarray
    thermal: np.ndarray
    retained: np.ndarray
    corrected: Optional[TimeSeriesPanel] = None
    params: MitigationParams = field(default_factory=MitigationParams)

    @property
    def eta_out_of_range(self) -> np.ndarray:
        eta = np.stack([self.eta0, self.eta1])
        return np.any((eta < 0) | (eta >= 0.5), axis=0)

    def to_frame(self) -> pd.DataFrame:
        def column(name):
            return [getattr(fit, name) if fit else np.nan for fit in self.fits]

        return pd.DataFrame(
            {
                "qubit": np.arange(len(self.fits)),
                "eta0": self.eta0,
                "eta1": self.eta1,
                "fit_a": column("a"),
                "fit_b": column("b"),
                "fit_c": column("c"),
                "fit_rms": column("rms_residual"),
                "fit_converged": [bool(fit and fit.converged) for fit in self.fits],
                "degenerate": self.degenerate,
                "thermal": self.thermal,
                "retained": self.retained,
            }
        )


def sign(values):
    """Sign with sign(0) = +1"""
    return np.where(np.asarray(values) >= 0, 1.0, -1.0)


def correct_measurement(z_meas, eta_bar, delta):
    """Invert the readout channel: (z_meas + delta) / (1 - 2 eta_bar)

    Raises:
        NonInvertibleChannelError: if eta_bar >= 0.5
    """
    if np.any(np.asarray(eta_bar) >= 0.5):
        raise NonInvertibleChannelError(f"mean flip probability {eta_bar} >= 0.5")
    return (np.asarray(z_meas) + delta) / (1.0 - 2.0 * np.asarray(eta_bar))


def _final_and_span(
    series: np.ndarray, final_window: int, min_span: float = DEGENERATE_THRESHOLD
) -> Tuple[float, float]:
    series = np.asarray(series, dtype=float)
    if series.size < final_window + 1:
        raise InvalidConfigError(
            f"Series of length {series.size} shorter than final_window + 1"
        )
    final = float(np.mean(series[-final_window:]))
    span = abs(series[0] - final)
    if span < min_span:
        raise DegenerateNormalizationError(f"|<Z>(0) - <Z>_final| = {span:.3e} below {min_span:.1e}")
    return final, span


def normalize_empirical(
    series: np.ndarray, final_window: int = 6, min_span: float = DEGENERATE_THRESHOLD
) -> np.ndarray:
    """(m - <Z>_final) / |m(0) - <Z>_final|, so that |value(0)| = 1

    Raises:
        DegenerateNormalizationError: if the span is below min_span
    """
    final, span = _final_and_span(series, final_window, min_span)
    return (np.asarray(series, dtype=float) - final) / span


def extract_eta(series: np.ndarray, final_window: int = 6) -> Tuple[float, float]:
    """Empirical readout flip probabilities of one measured series"""
    final, span = _final_and_span(series, final_window)
    eta0 = (1.0 - span - final) / 2.0
    eta1 = (1.0 - span + final) / 2.0
    if not (0 <= eta0 < 0.5 and 0 <= eta1 < 0.5):
        logger.warning("Empirical eta out of range: eta0=%.4f eta1=%.4f", eta0, eta1)
    return eta0, eta1


def fit_reference_decay(series: np.ndarray, rms_bound: float = 0.05) -> ExponentialFit:
    """Fit 1/2 [|m| + 1] = a exp(-b t) + c on an epsilon = 0 reference series

    The target is the sign-aligned 1/2 [m + sign(m)], so an alternating echo
    becomes a smooth decay. The target lies in [1/2, 1]: a and c are bounded
    to [0, 1] and b to b >= 0, and b is set to 0 when the amplitude a
    vanishes. A fit stopped by the evaluation limit still converges when its
    residual is within rms_bound.
    """
    values = np.asarray(series, dtype=float)
    target = 0.5 * (np.abs(values) + 1.0)
    t = np.arange(values.size, dtype=float)
    guess = [
        float(np.clip(target[0] - target[-1], 0.0, 1.0)),
        1.0 / max(values.size - 1, 1),
        float(np.clip(target[-1], 0.0, 1.0)),
    ]

    def residuals(p):
        return p[0] * np.exp(-p[1] * t) + p[2] - target

    try:
        result = least_squares(residuals, guess, bounds=([0.0, 0.0, 0.0], [1.0, np.inf, 1.0]))
    except ValueError as err:
        logger.warning("Reference fit failed: %s", err)
        return ExponentialFit(np.nan, np.nan, np.nan, np.inf, False)
    a, b, c = (float(v) for v in result.x)
    if abs(a) < ZERO_AMPLITUDE:
        a, b = 0.0, 0.0
    rms = float(np.sqrt(np.mean(residuals([a, b, c]) ** 2)))
    converged = result.status >= 0 and rms <= rms_bound
    if rms > rms_bound:
        logger.warning("Reference fit residual rms=%.3e above the bound %.3e", rms, rms_bound)
    elif not converged:
        logger.warning("Reference fit stopped: %s", result.message)
    elif result.status == 0:
        logger.debug("Reference fit hit %d evaluations, accepted at rms=%.3e", result.nfev, rms)
    return ExponentialFit(a, b, c, rms, converged)


def filter_qubits(
    reference: TimeSeriesPanel,
    params: MitigationParams,
    fits: Optional[List[Optional[ExponentialFit]]] = None,
) -> np.ndarray:
    """Retain qubits whose windowed reference |m| reaches w0 and whose fit converged"""
    params.check_steps(reference.n_steps)
    if fits is None:
        fits = [fit_reference_decay(row, params.rms_bound) for row in reference.values]
    converged = np.array([bool(fit and fit.converged) for fit in fits])
    retained = (params.window(reference.values) >= params.w0) & converged
    logger.info("%d of %d qubits retained", int(retained.sum()), retained.size)
    return retained


def _rescale_series(
    values: np.ndarray, ratio: float, fit: ExponentialFit, params: MitigationParams
) -> np.ndarray:
    out = values.copy()
    start = params.first_rescaled_step
    t = np.arange(start, values.size)
    m = values[start:]
    s = sign(m)
    if params.formula == "literal":
        out[start:] = ratio * (m + s) / fit(t) - s
    else:
        envelope = 2.0 * fit(t) - 1.0
        safe = envelope > MIN_ENVELOPE
        out[start:] = np.where(safe, s * np.abs(m) / np.where(safe, envelope, 1.0), m)
    return out


def rescale_magnetization(
    panel: TimeSeriesPanel,
    reference: TimeSeriesPanel,
    fits: List[Optional[ExponentialFit]],
    retained: np.ndarray,
    params: MitigationParams,
) -> Tuple[TimeSeriesPanel, np.ndarray]:
    """Rescale retained, non-thermal qubits by their reference decay

    Returns:
        Tuple[TimeSeriesPanel, np.ndarray]: fully mitigated panel and the
        thermal flags (qubits left unrescaled because |m| <= wf)
    """
    params.check_steps(panel.n_steps)
    retained = np.asarray(retained, dtype=bool).copy()
    mean_eps = params.window(panel.values)
    mean_ref = params.window(reference.values)
    thermal = np.abs(mean_eps) <= params.wf
    values = panel.values.copy()
    for qubit in range(panel.n_qubits):
        fit = fits[qubit] if qubit < len(fits) else None
        if retained[qubit] and (fit is None or not fit.converged):
            logger.warning("Qubit %d has no usable reference fit, dropped", qubit)
            retained[qubit] = False
        if not retained[qubit] or thermal[qubit]:
            continue
        ratio = mean_eps[qubit] / mean_ref[qubit]
        values[qubit] = _rescale_series(values[qubit], ratio, fit, params)
    mitigated = panel.evolve(
        values,
        stage=Stage.FULLY_MITIGATED,
        retained=retained,
        metadata={**panel.metadata, "mitigation": params.to_dict()},
    )
    return mitigated, thermal


def measurement_stage(
    raw: TimeSeriesPanel, params: MitigationParams, noise: Optional[NoiseModel] = None
) -> Tuple[TimeSeriesPanel, np.ndarray]:
    """Readout correction of a raw panel

    Calibrated flip probabilities are used when a noise model is given,
    otherwise every series is normalized empirically. A series whose span
    falls below the readout floor is flagged degenerate and left raw.

    Returns:
        Tuple[TimeSeriesPanel, np.ndarray]: corrected panel and degenerate flags
    """
    degenerate = np.zeros(raw.n_qubits, dtype=bool)
    if noise is not None:
        values = correct_measurement(raw.values, noise.eta_bar[:, None], noise.delta[:, None])
    else:
        values = raw.values.copy()
        for qubit, series in enumerate(raw.values):
            try:
                values[qubit] = normalize_empirical(series, params.final_window, params.span_floor)
            except DegenerateNormalizationError as err:
                logger.warning("Qubit %d not normalized: %s", qubit, err)
                degenerate[qubit] = True
    corrected = raw.evolve(values, stage=Stage.MEASUREMENT_CORRECTED)
    return corrected, degenerate


def mitigate(
    raw: TimeSeriesPanel,
    reference: TimeSeriesPanel,
    params: Optional[MitigationParams] = None,
    noise: Optional[NoiseModel] = None,
) -> Tuple[TimeSeriesPanel, MitigationReport]:
    """Full mitigation of an epsilon run against its epsilon = 0 reference

    Args:
        raw (TimeSeriesPanel): raw panel of the epsilon run
        reference (TimeSeriesPanel): raw panel of the epsilon = 0 run
        params (MitigationParams, optional): cutoffs and windows.
        noise (NoiseModel, optional): calibrated readout errors; empirical
            normalization when omitted.

    Returns:
        Tuple[TimeSeriesPanel, MitigationReport]: fully mitigated panel and
        per-qubit diagnostics
    """
    params = params or MitigationParams()
    if raw.n_qubits != reference.n_qubits or raw.n_steps != reference.n_steps:
        raise InvalidConfigError("Run and reference panels differ in shape")
    params.check_steps(raw.n_steps)

    eta = np.full((2, raw.n_qubits), np.nan)
    for qubit, series in enumerate(reference.values):
        try:
            eta[:, qubit] = extract_eta(series, params.final_window)
        except DegenerateNormalizationError as err:
            logger.warning("Qubit %d has no empirical eta: %s", qubit, err)

    corrected, degenerate = measurement_stage(raw, params, noise)
    corrected_ref, degenerate_ref = measurement_stage(reference, params, noise)
    degenerate |= degenerate_ref

    fits: List[Optional[ExponentialFit]] = [
        None if degenerate[q] else fit_reference_decay(series, params.rms_bound)
        for q, series in enumerate(corrected_ref.values)
    ]
    retained = filter_qubits(corrected_ref, params, fits) & ~degenerate
    mitigated, thermal = rescale_magnetization(corrected, corrected_ref, fits, retained, params)
    report = MitigationReport(
        eta0=eta[0],
        eta1=eta[1],
        fits=fits,
        degenerate=degenerate,
        thermal=thermal,
        retained=mitigated.retained_mask(),
        corrected=corrected,
        params=params,
    )
    return mitigated, report
