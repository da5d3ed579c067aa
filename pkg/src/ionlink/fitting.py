"""Sinusoid fitting and the common scan-result container.

All scans in this package oscillate with a period that is known a priori
(waveplate scans at four times the plate angle, analysis-phase scans at the
phase itself, parity scans at twice the phase), so fits are plain linear least
squares on ``(cos, sin, 1)`` regressors; no iterative optimizer is involved.

Fit model: ``y = offset + amplitude * sin(k * x - phase)`` with
``amplitude >= 0`` and ``phase`` in ``[0, 2*pi)``.  With this convention a
scan of an ion heralded into ``(|down> + e^{i phi}|up>)/sqrt(2)`` fits to
``phase == phi``.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SinusoidFit:
    amplitude: float
    phase: float
    offset: float
    residual_rms: float
    degenerate: bool = False

    def value(self, x, angular_frequency: float):
        return self.offset + self.amplitude * np.sin(
            angular_frequency * np.asarray(x) - self.phase)


def fit_sinusoid(x, y, angular_frequency: float) -> SinusoidFit:
    """Least-squares fit of ``offset + A sin(k x - phase)`` at known ``k``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be matching 1-d arrays")
    finite = np.isfinite(y)
    x, y = x[finite], y[finite]
    if x.size < 3:
        raise ValueError("need at least 3 finite points to fit a sinusoid")
    design = np.column_stack([np.sin(angular_frequency * x),
                              np.cos(angular_frequency * x),
                              np.ones_like(x)])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    a_sin, a_cos, offset = coef
    amplitude = float(np.hypot(a_sin, a_cos))
    degenerate = bool(rank < 3)
    if amplitude < 1e-14:
        phase = 0.0
        degenerate = True
    else:
        # y = A sin(kx - phase): coeff of sin is A cos(phase), of cos is -A sin(phase)
        phase = float(np.arctan2(-a_cos, a_sin)) % TWO_PI
    resid = y - design @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return SinusoidFit(amplitude=amplitude, phase=phase, offset=float(offset),
                       residual_rms=rms, degenerate=degenerate)


@dataclass(frozen=True)
class ScanResult:
    """Grid of a control parameter vs measured values, with sinusoid fits.

    ``series`` maps column name to the measured values; ``fits`` holds one
    fit per series.  ``contrast`` is defined by the producing scan (twice the
    fitted amplitude for probability scans, the amplitude itself for parity
    scans) and is recorded here so downstream bounds do not re-derive it.
    """

    control: np.ndarray
    series: Mapping[str, np.ndarray]
    fits: Mapping[str, SinusoidFit]
    angular_frequency: float
    contrast: float
    control_label: str = "control_value"
    flags: tuple[str, ...] = ()

    def to_csv(self, header_lines: tuple[str, ...] = ()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        names = list(self.series)
        buf.write(",".join([self.control_label] + names) + "\n")
        for i, c in enumerate(self.control):
            row = [f"{c:.12g}"] + [f"{self.series[n][i]:.12g}" for n in names]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def fit_summary(self) -> dict:
        out = {
            "angular_frequency": self.angular_frequency,
            "contrast": self.contrast,
            "flags": list(self.flags),
            "fits": {},
        }
        for name, f in self.fits.items():
            out["fits"][name] = {
                "amplitude": f.amplitude,
                "phase": f.phase,
                "offset": f.offset,
                "residual_rms": f.residual_rms,
                "degenerate": f.degenerate,
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.fit_summary(), sort_keys=True, indent=2)
