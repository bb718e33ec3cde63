# -*- coding: utf-8 -*-
""" Autocorrelators, subharmonic spectra, decay constants and epsilon sweeps
"""
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import fft

from dtc_floquet.errors import (
    InvalidConfigError,
    SpectrumLengthError,
    UndefinedVarianceError,
)
from dtc_floquet.mitigation import MitigationParams, mitigate
from dtc_floquet.noise import default_workers
from dtc_floquet.panel import Observable, TimeSeriesPanel
from dtc_floquet.pipeline import ChainTemplate, PipelineOptions, run_pipeline

logger = logging.getLogger(__name__)

MIN_SPECTRUM_STEPS = 8
MIN_DECAY_POINTS = 4
DECAY_FLOOR = 1e-3

PHASE_DIAGRAM_COLUMNS = ["epsilon", "var_h", "delta_bar", "n_retained"]


@dataclass
class SpectralResult:
    """Two-sided DFT amplitudes |X_k| / L; frequencies in units of the drive"""

    frequencies: np.ndarray
    amplitudes: np.ndarray
    h: np.ndarray

    @property
    def half_drive_bin(self) -> int:
        return self.frequencies.size // 2

    def one_sided(self):
        stop = self.half_drive_bin + 1
        return self.frequencies[:stop], self.amplitudes[:, :stop]

    def to_frame(self) -> pd.DataFrame:
        frequencies, amplitudes = self.one_sided()
        n_qubits = amplitudes.shape[0]
        return pd.DataFrame(
            {
                "qubit": np.repeat(np.arange(n_qubits), frequencies.size),
                "frequency": np.tile(frequencies, n_qubits),
                "amplitude": amplitudes.ravel(),
            }
        )


@dataclass
class DecayResult:
    delta: np.ndarray
    delta_bar: float
    fit_ok: np.ndarray


def autocorrelator(
    panel: TimeSeriesPanel, initial_bits: Optional[Sequence[int]] = None
) -> TimeSeriesPanel:
    """z_i(0) <Z_i(t)> using the ideal initial bits"""
    bits = panel.initial_bits if initial_bits is None else tuple(initial_bits)
    if len(bits) != panel.n_qubits:
        raise InvalidConfigError(f"{len(bits)} bits for {panel.n_qubits} qubits")
    signs = 1.0 - 2.0 * np.asarray(bits, dtype=float)
    return panel.evolve(signs[:, None] * panel.values, observable=Observable.AUTOCORRELATOR)


def qubit_average(panel: TimeSeriesPanel) -> np.ndarray:
    """Mean over retained qubits at every step"""
    mask = panel.retained_mask()
    if not mask.any():
        return np.full(panel.n_steps + 1, np.nan)
    return panel.values[mask].mean(axis=0)


def spectrum(panel: TimeSeriesPanel, skip_steps: int = 0) -> SpectralResult:
    """Rectangular-window DFT of t = 1 + skip_steps .. n_steps

    Normalized by the window length so that (-1)^t has h = 1 and the squared
    amplitudes sum to the mean square of the series.

    Raises:
        SpectrumLengthError: if the window is odd or shorter than 8 steps
    """
    window = panel.values[:, 1 + skip_steps:]
    length = window.shape[1]
    if length < MIN_SPECTRUM_STEPS:
        raise SpectrumLengthError(f"{length} steps, at least {MIN_SPECTRUM_STEPS} needed")
    if length % 2:
        raise SpectrumLengthError(f"{length} steps leave no bin at half the drive frequency")
    amplitudes = np.abs(fft.fft(window, axis=1)) / length
    frequencies = np.arange(length) / length
    return SpectralResult(frequencies, amplitudes, amplitudes[:, length // 2].copy())


def mean_amplitudes(spectral: SpectralResult, retained: Optional[np.ndarray] = None) -> np.ndarray:
    """Amplitude spectrum averaged over the retained qubits"""
    mask = np.ones(spectral.h.size, dtype=bool) if retained is None else np.asarray(retained)
    if not mask.any():
        return np.full(spectral.frequencies.size, np.nan)
    return spectral.amplitudes[mask].mean(axis=0)


def variance_h(spectral: SpectralResult, retained: Optional[np.ndarray] = None) -> float:
    """Population variance of h over retained qubits, exactly 0 for equal h"""
    mask = np.ones(spectral.h.size, dtype=bool) if retained is None else np.asarray(retained)
    if mask.sum() < 2:
        raise UndefinedVarianceError(f"{int(mask.sum())} retained qubits")
    h = spectral.h[mask]
    return float(np.var(h - h[0]))


def decay_constants(
    panel: TimeSeriesPanel, skip_steps: int = 13, retained: Optional[np.ndarray] = None
) -> DecayResult:
    """Exponential decay rates from a linear fit of log|value| for t >= skip_steps"""
    if panel.n_steps <= skip_steps + MIN_DECAY_POINTS:
        raise InvalidConfigError(
            f"{panel.n_steps} steps too short for a decay fit after {skip_steps} steps"
        )
    mask = panel.retained_mask() if retained is None else np.asarray(retained, dtype=bool)
    t = panel.times[skip_steps:]
    delta = np.zeros(panel.n_qubits)
    fit_ok = np.zeros(panel.n_qubits, dtype=bool)
    for qubit, series in enumerate(np.abs(panel.values[:, skip_steps:])):
        usable = series >= DECAY_FLOOR
        if usable.sum() < MIN_DECAY_POINTS:
            continue
        slope, _ = np.polyfit(t[usable], np.log(series[usable]), 1)
        delta[qubit] = max(-slope, 0.0)
        fit_ok[qubit] = True
    selected = fit_ok & mask
    delta_bar = float(delta[selected].mean()) if selected.any() else float("nan")
    return DecayResult(delta=delta, delta_bar=delta_bar, fit_ok=fit_ok)


def evaluate_panel(panel: TimeSeriesPanel, skip_steps: int = 13, spectrum_skip: int = 0) -> dict:
    """Var(h), mean decay constant and retained count of one panel"""
    correlator = autocorrelator(panel)
    retained = correlator.retained_mask()
    try:
        var_h = variance_h(spectrum(correlator, spectrum_skip), retained)
    except UndefinedVarianceError as err:
        logger.warning("Var(h) undefined: %s", err)
        var_h = float("nan")
    decay = decay_constants(correlator, skip_steps, retained)
    return {"var_h": var_h, "delta_bar": decay.delta_bar, "n_retained": int(retained.sum())}


def _sweep_point(
    template: ChainTemplate, epsilon: float, point: int, realization: int, options: PipelineOptions
) -> dict:
    config, initial = template.realize(epsilon, point, realization)
    result = run_pipeline(config, initial, options, config.seed)
    metrics = evaluate_panel(result.panel(options.stage), options.mitigation.skip_steps)
    return {"epsilon": epsilon, "realization": realization, **metrics}


def sweep_epsilon(
    epsilons: Iterable[float],
    template: ChainTemplate,
    options: PipelineOptions,
    n_realizations: int = 1,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """Phase diagram: Var(h) and mean decay constant per epsilon

    Sweep points and disorder realizations run in parallel; per-point
    metrics are averaged over realizations.

    Returns:
        pd.DataFrame: columns epsilon, var_h, delta_bar, n_retained
    """
    epsilons = [float(e) for e in epsilons]
    if not epsilons or any(not 0.0 <= e <= 1.0 for e in epsilons):
        raise InvalidConfigError(f"Epsilon grid {epsilons} is not valid")
    if n_realizations < 1:
        raise InvalidConfigError(f"n_realizations={n_realizations} must be positive")
    workers = default_workers() if workers is None else workers
    # trajectories of a point stay serial when points run in parallel
    point_options = options if workers == 1 else _serial(options)
    logger.info("Sweep of %d points x %d realizations", len(epsilons), n_realizations)
    rows = Parallel(n_jobs=workers)(
        delayed(_sweep_point)(template, epsilon, point, realization, point_options)
        for point, epsilon in enumerate(epsilons)
        for realization in range(n_realizations)
    )
    frame = pd.DataFrame(rows).groupby("epsilon", sort=False)[PHASE_DIAGRAM_COLUMNS[1:]].mean()
    return frame.reset_index()[PHASE_DIAGRAM_COLUMNS]


def _serial(options: PipelineOptions) -> PipelineOptions:
    return replace(options, workers=1)


def critical_epsilon(phase_diagram: pd.DataFrame) -> float:
    """Grid argmax of Var(h)"""
    if phase_diagram["var_h"].isna().all():
        raise UndefinedVarianceError("no sweep point has a defined Var(h)")
    return float(phase_diagram.loc[phase_diagram["var_h"].idxmax(), "epsilon"])


def scan_cutoffs(
    raw: TimeSeriesPanel,
    reference: TimeSeriesPanel,
    w0_values: Iterable[float],
    params: Optional[MitigationParams] = None,
    wf_ratio: float = 2.0 / 3.0,
) -> pd.DataFrame:
    """Re-mitigate one run over a range of w0 with wf = wf_ratio * w0"""
    params = params or MitigationParams()
    rows = []
    for w0 in w0_values:
        scanned = replace(params, w0=float(w0), wf=float(w0) * wf_ratio)
        mitigated, _ = mitigate(raw, reference, scanned)
        rows.append({"w0": scanned.w0, "wf": scanned.wf, **evaluate_panel(mitigated, params.skip_steps)})
    return pd.DataFrame(rows, columns=["w0", "wf", "var_h", "delta_bar", "n_retained"])
