"""Parity analysis, the two-ion fidelity lower bound, and budget ledgers.

The analysis pulses are global (both ions see identical rotations), which
limits tomography to fidelity bounds relative to the plus Bell state; the
singlet is invariant under global rotations and cannot be analyzed this way.

Parity-scan structure for a two-ion state rho under global pi/2 pulses:

* one pulse, phase scanned: the parity oscillates at twice the phase with the
  amplitude set by the even coherence rho(dndn, upup), while the odd coherence
  only shifts the constant offset - so the single-pulse contrast bounds the
  undesired even coherence;
* a first pulse at phase 0 converts the odd coherence into an even one, so
  the two-pulse scan contrast measures the wanted coherences.

The fidelity lower bound combines odd populations, two-pulse contrast and the
single-pulse contrast as ``F >= (pops + C2 - C1)/2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import HardwareConfig
from .fitting import ScanResult, fit_sinusoid
from .ion_photon import dephasing_infidelity, raman_rotation
from .quantum import DensityMatrix, apply_unitary

TWO_ION_DIMS = (2, 2)
# little-endian basis order of the two-ion register (ion A is bit 0):
# index 0 = down,down ; 1 = up,down ; 2 = down,up ; 3 = up,up
IDX_DD, IDX_UD, IDX_DU, IDX_UU = 0, 1, 2, 3
PARITY_DIAG = np.array([1.0, -1.0, -1.0, 1.0])


def parity(populations) -> float:
    """Signed population sum P(dd) + P(uu) - P(ud) - P(du)."""
    pops = np.asarray(populations, dtype=float)
    if pops.shape != (4,):
        raise ValueError("populations must be a 4-vector")
    if abs(pops.sum() - 1.0) > 1e-9:
        raise ValueError(f"populations must sum to 1, got {pops.sum()!r}")
    return float(PARITY_DIAG @ pops)


def _global_rotation(phase: float) -> np.ndarray:
    r = raman_rotation(phase)
    return np.kron(r, r)


def apply_analysis_pulse(rho: DensityMatrix, phase: float) -> DensityMatrix:
    """Global pi/2 pulse of the given phase on both ions."""
    if rho.dims != TWO_ION_DIMS:
        raise ValueError("expects a two-ion state")
    return apply_unitary(rho, _global_rotation(phase))


def _randomize_odd_phase(rho: DensityMatrix) -> DensityMatrix:
    """Average over the free-evolution phase of the odd subspace.

    Models analyzing heralds without phase alignment: every coherence with a
    phase that winds with delta*t averages to zero; only populations and the
    even coherence rho(dd, uu) survive.
    """
    m = np.zeros_like(rho.matrix)
    for i in (IDX_DD, IDX_UD, IDX_DU, IDX_UU):
        m[i, i] = rho.matrix[i, i]
    m[IDX_DD, IDX_UU] = rho.matrix[IDX_DD, IDX_UU]
    m[IDX_UU, IDX_DD] = rho.matrix[IDX_UU, IDX_DD]
    return DensityMatrix(m, TWO_ION_DIMS)


def parity_scan(rho: DensityMatrix, phases, pulses: str = "two",
                randomize_bell_phase: bool = False) -> ScanResult:
    """Parity vs analysis phase under global pi/2 pulses, fitted at period pi.

    ``pulses="one"`` scans the phase of a single pulse; ``"two"`` applies a
    fixed phase-0 pulse first (converting the odd Bell state to the even one)
    and scans the second pulse's phase.  Contrast is the fitted amplitude.
    """
    if rho.dims != TWO_ION_DIMS:
        raise ValueError("parity_scan expects a two-ion state")
    if pulses not in ("one", "two"):
        raise ValueError("pulses must be 'one' or 'two'")
    state = _randomize_odd_phase(rho) if randomize_bell_phase else rho
    if pulses == "two":
        state = apply_unitary(state, _global_rotation(0.0))
    grid = np.asarray(phases, dtype=float)
    values = np.empty_like(grid)
    for i, phi in enumerate(grid):
        rotated = apply_unitary(state, _global_rotation(phi))
        values[i] = float(PARITY_DIAG @ np.real(np.diag(rotated.matrix)))
    fit = fit_sinusoid(grid, values, 2.0)
    flags = ("fit_degenerate",) if fit.degenerate else ()
    return ScanResult(control=grid, series={"parity": values}, fits={"parity": fit},
                      angular_frequency=2.0, contrast=fit.amplitude,
                      control_label="control_value", flags=flags)


@dataclass(frozen=True)
class FidelityBoundInputs:
    """Measured ingredients of the two-ion fidelity lower bound."""

    odd_populations: float
    two_pulse_contrast: float
    one_pulse_contrast: float

    def __post_init__(self):
        for name in ("odd_populations", "two_pulse_contrast", "one_pulse_contrast"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


def fidelity_lower_bound(inputs: FidelityBoundInputs) -> float:
    """``(odd populations + two-pulse contrast - one-pulse contrast) / 2``.

    The one-pulse contrast is treated purely as a measured scalar bounding the
    nuisance even coherence; it is subtracted in full.
    """
    value = 0.5 * (inputs.odd_populations + inputs.two_pulse_contrast
                   - inputs.one_pulse_contrast)
    return min(1.0, max(0.0, value))


@dataclass(frozen=True)
class BudgetLedger:
    """Named additive contributions with their total."""

    entries: tuple[tuple[str, float], ...]
    total: float

    def __init__(self, entries):
        entries = tuple((str(k), float(v)) for k, v in entries)
        total = sum(v for _, v in entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "total", total)
        if abs(self.total - sum(v for _, v in entries)) > 1e-12:
            raise ValueError("total must equal the sum of contributions")

    def as_dict(self) -> dict:
        out = dict(self.entries)
        out["total"] = self.total
        return out

    def to_text(self) -> str:
        width = max(len(k) for k, _ in self.entries + (("total", 0.0),))
        lines = [f"{k:<{width}}  {100.0 * v:6.3f} %" for k, v in self.entries]
        lines.append(f"{'total':<{width}}  {100.0 * self.total:6.3f} %")
        return "\n".join(lines)


def error_budget(cfg: HardwareConfig) -> BudgetLedger:
    """First-order additive infidelity budget of the heralded two-ion state.

    polarization: exact Werner-admixture propagation of both sources' photon
    depolarizing through the swap, ``(3/4)(1 - (1-pA)(1-pB))``.
    coherence: pair dephasing over the analysis delay at the configured
    envelope.  other: wavepacket-overlap contrast loss plus the incoherent
    dark-count and double-excitation admixtures.

    The full multiplicative composition lives in ``swap.swapped_state``; the
    two are compared in tests, not conflated.
    """
    w_pol = 1.0 - (1.0 - cfg.pol_mixing_a) * (1.0 - cfg.pol_mixing_b)
    polarization = 0.75 * w_pol
    coherence = dephasing_infidelity(cfg.analysis_delay, cfg.t2_star_bell,
                                     cfg.bell_coherence_envelope)
    other = (0.5 * (1.0 - cfg.temporal_overlap)
             + 0.75 * cfg.dark_herald_weight()
             + 0.75 * cfg.double_excitation_prob)
    return BudgetLedger([("polarization", polarization),
                         ("coherence", coherence),
                         ("other", other)])


# Printed per-stage efficiencies of the photon collection chain, in path
# order from state preparation to detector.
DEFAULT_EFFICIENCY_CHAIN = (
    ("optical pumping", 0.96),
    ("pulsed excitation", 0.96),
    ("useful branching ratio", 0.732),
    ("objective solid angle", 0.20),
    ("trap-rod clearance", 0.97),
    ("objective transmission", 0.91),
    ("fiber coupling", 0.30),
    ("detector quantum efficiency", 0.71),
)


@dataclass(frozen=True)
class EfficiencyReport:
    """Multiplicative efficiency chain with per-stage attribution."""

    stages: tuple[tuple[str, float, float], ...]  # (label, factor, running)
    total: float

    def as_dict(self) -> dict:
        return {
            "stages": [{"label": l, "factor": f, "running": r}
                       for l, f, r in self.stages],
            "total": self.total,
        }

    def to_text(self) -> str:
        width = max(len(l) for l, _, _ in self.stages)
        lines = [f"{l:<{width}}  {f:7.4f}  -> {100.0 * r:7.4f} %"
                 for l, f, r in self.stages]
        lines.append(f"{'total':<{width}}  {'':7}     {100.0 * self.total:7.4f} %")
        return "\n".join(lines)


def efficiency_budget(chain=DEFAULT_EFFICIENCY_CHAIN) -> EfficiencyReport:
    """Running product of a chain of ``(label, factor)`` efficiencies."""
    stages = []
    running = 1.0
    for item in chain:
        label, factor = item
        if not 0.0 < factor <= 1.0:
            raise ValueError(f"factor for {label!r} must be in (0, 1], got {factor}")
        running *= factor
        stages.append((label, float(factor), running))
    return EfficiencyReport(stages=tuple(stages), total=running)
