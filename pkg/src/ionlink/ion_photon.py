"""Ion-photon entangled pair generation and its characterization scans.

The heralded pair lives on the register ``(ion, photon)`` with the ideal state
``(|H>|down> + e^{i phase}|V>|up>)/sqrt(2)``.  Imperfections modeled here:

* polarization mixing in the imaging path, as a depolarizing channel of
  configurable strength on the photon qubit;
* optical-pumping and excitation failures, which in the sigma+ excitation
  scheme produce no collectable photon and therefore scale the per-attempt
  success probability without contaminating the heralded state (see
  :func:`emit_ion_photon_state`);
* qubit dephasing with a Gaussian contrast envelope, and contrast loss from
  averaging the analysis phase over a finite photon detection window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .fitting import ScanResult, fit_sinusoid
from .quantum import (
    DensityMatrix,
    PureState,
    apply_channel,
    apply_unitary,
    depolarizing_channel,
    ket,
    lift,
    partial_trace,
    superposition,
)

TWO_PI = 2.0 * np.pi

# subsystem indices of the pair register
ION = 0
PHOTON = 1
PAIR_DIMS = (2, 2)

# photon basis values (H = 0, V = 1); ion basis (down = 0, up = 1)
H, V = 0, 1
DOWN, UP = 0, 1

P_UP = np.diag([0.0, 1.0]).astype(complex)
P_DOWN = np.diag([1.0, 0.0]).astype(complex)


@dataclass(frozen=True)
class SourceParams:
    """Per-source parameters of one ion-photon interface.

    ``collection_efficiency`` is the all-in probability that an attempt yields
    a detected photon (it already includes state preparation, branching and
    every optical loss).  ``wrong_branch_emission`` is the relative
    probability that an attempt with failed optical pumping still emits a
    collectable photon; it is zero for sigma+ pulsed excitation, where the
    wrongly pumped state has no excited level to reach, and is kept as an
    explicit knob for schemes where that argument fails.
    """

    pump_fidelity: float = 0.96
    excite_prob: float = 0.96
    pol_mixing: float = 0.0
    superposition_phase: float = 0.0
    collection_efficiency: float = 0.023
    wrong_branch_emission: float = 0.0

    def __post_init__(self):
        for name in ("pump_fidelity", "excite_prob", "pol_mixing",
                     "collection_efficiency", "wrong_branch_emission"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not 0.0 <= self.superposition_phase < TWO_PI:
            raise ValueError("superposition_phase must be in [0, 2*pi)")

    @property
    def state_prep_efficiency(self) -> float:
        """Attempt-success scaling from pumping and excitation alone."""
        return self.pump_fidelity * self.excite_prob


def ideal_pair_state(phase: float = 0.0) -> PureState:
    """``(|H,down> + e^{i phase} |V,up>)/sqrt(2)`` on (ion, photon)."""
    return superposition(
        [(1.0, (DOWN, H)), (np.exp(1j * phase), (UP, V))], PAIR_DIMS)


def emit_ion_photon_state(params: SourceParams) -> DensityMatrix:
    """Heralded ion-photon state of one source, photon detected.

    The wrong-branch admixture (pump failure leaving the ion in |up>, giving
    classically correlated |H,up> / |V,down> emission with no coherence to the
    main branch) enters with its heralded weight, i.e. scaled by the relative
    emission probability of the wrong branch.  With the default
    ``wrong_branch_emission = 0`` the heralded state is independent of the
    pump fidelity, which then only rescales the attempt success probability.
    """
    rho = ideal_pair_state(params.superposition_phase).density().matrix.copy()
    bad = params.wrong_branch_emission * (1.0 - params.pump_fidelity)
    good = params.pump_fidelity
    if bad > 0.0:
        w = bad / (good + bad)
        wrong = 0.5 * (ket((UP, H)).density().matrix + ket((DOWN, V)).density().matrix)
        rho = (1.0 - w) * rho + w * wrong
    state = DensityMatrix(rho, PAIR_DIMS)
    if params.pol_mixing > 0.0:
        ch = depolarizing_channel(params.pol_mixing).on_subsystem(PHOTON, PAIR_DIMS)
        state = apply_channel(state, ch)
    return state


def waveplate_unitary(kind: str, angle: float) -> np.ndarray:
    """Jones matrix of a retarder with its fast axis rotated by ``angle``.

    Retardance is pi for ``"half"`` and pi/2 for ``"quarter"``; the matrix is
    ``R(angle) @ diag(1, exp(i*retardance)) @ R(-angle)`` up to global phase.
    """
    if kind == "half":
        retardance = np.pi
    elif kind == "quarter":
        retardance = np.pi / 2.0
    else:
        raise ValueError(f"unknown waveplate kind {kind!r}")
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]], dtype=complex)
    return rot @ np.diag([1.0, np.exp(1j * retardance)]) @ rot.conj().T


def raman_rotation(phase: float, angle: float = np.pi / 2.0) -> np.ndarray:
    """Qubit rotation ``exp(-i angle/2 (cos(phase) sx + sin(phase) sy))``."""
    c = np.cos(angle / 2.0)
    s = np.sin(angle / 2.0)
    return np.array([
        [c, -1j * np.exp(-1j * phase) * s],
        [-1j * np.exp(1j * phase) * s, c],
    ])


def correlation_scan(state: DensityMatrix, hwp_angles) -> ScanResult:
    """Conditional P(ion up | photon in V) and (... | H) vs half-wave-plate angle.

    The photon passes a half-wave plate at each angle and is then split on a
    H/V polarizer; both conditionals are fitted with period 90 degrees in the
    plate angle.  Contrast is the mean fitted peak-to-peak swing of the two
    branches, which for pure photon depolarizing of strength p equals 1 - p.
    """
    if state.dims != PAIR_DIMS:
        raise ValueError("correlation_scan expects an (ion, photon) pair state")
    angles = np.asarray(hwp_angles, dtype=float)
    proj_up = lift(P_UP, ION, PAIR_DIMS)
    proj_h = lift(P_DOWN, PHOTON, PAIR_DIMS)   # photon H = 0
    proj_v = lift(P_UP, PHOTON, PAIR_DIMS)     # photon V = 1
    p_up_v = np.empty_like(angles)
    p_up_h = np.empty_like(angles)
    flags = []
    for i, theta in enumerate(angles):
        u = lift(waveplate_unitary("half", theta), PHOTON, PAIR_DIMS)
        rotated = apply_unitary(state, u)
        for proj_pol, out in ((proj_v, p_up_v), (proj_h, p_up_h)):
            marginal = float(np.real(np.trace(proj_pol @ rotated.matrix)))
            if marginal < 1e-12:
                out[i] = np.nan
                if "zero_marginal" not in flags:
                    flags.append("zero_marginal")
                continue
            joint = float(np.real(np.trace(proj_up @ proj_pol @ rotated.matrix)))
            out[i] = joint / marginal
    k = 4.0  # period pi/2 in plate angle
    fits = {"p_up_given_V": fit_sinusoid(angles, p_up_v, k),
            "p_up_given_H": fit_sinusoid(angles, p_up_h, k)}
    if any(f.degenerate for f in fits.values()):
        flags.append("fit_degenerate")
    contrast = float(np.mean([2.0 * f.amplitude for f in fits.values()]))
    return ScanResult(control=angles,
                      series={"p_up_given_V": p_up_v, "p_up_given_H": p_up_h},
                      fits=fits, angular_frequency=k, contrast=contrast,
                      control_label="control_value", flags=tuple(flags))


def heralded_ion_state(state: DensityMatrix, sign: int) -> DensityMatrix:
    """Ion state heralded by detecting the photon in ``(|H> + sign |V>)/sqrt2``.

    This is the diagonal-basis detection reached by a half-wave plate rotating
    the polarization by 45 degrees; for the ideal pair it yields
    ``(|down> + sign e^{i phase} |up>)/sqrt(2)``.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    diag = superposition([(1.0, (H,)), (float(sign), (V,))], (2,))
    proj = lift(np.outer(diag.amplitudes, diag.amplitudes.conj()), PHOTON, PAIR_DIMS)
    weighted = proj @ state.matrix @ proj
    w = float(np.real(np.trace(weighted)))
    if w < 1e-15:
        raise ValueError("herald outcome has zero probability")
    collapsed = DensityMatrix(0.5 * (weighted + weighted.conj().T) / w, PAIR_DIMS)
    return partial_trace(collapsed, keep=[ION])


def coherence_scan(state: DensityMatrix, analysis_phases) -> ScanResult:
    """P(up) after a pi/2 rotation of variable phase, fitted with period 2 pi.

    For the heralded superposition ``(|down> + e^{i phi}|up>)/sqrt(2)`` the
    fitted phase equals phi and the contrast (twice the fitted amplitude)
    equals the coherence magnitude, which bounds the pair fidelity from below.
    """
    if state.dims != (2,):
        raise ValueError("coherence_scan expects a single-qubit ion state")
    phases = np.asarray(analysis_phases, dtype=float)
    p_up = np.empty_like(phases)
    for i, phi in enumerate(phases):
        rotated = apply_unitary(state, raman_rotation(phi))
        p_up[i] = float(np.real(rotated.matrix[UP, UP]))
    fit = fit_sinusoid(phases, p_up, 1.0)
    flags = ("fit_degenerate",) if fit.degenerate else ()
    return ScanResult(control=phases, series={"p_up": p_up}, fits={"p_up": fit},
                      angular_frequency=1.0, contrast=2.0 * fit.amplitude,
                      control_label="control_value", flags=flags)


def dephasing_infidelity(t: float, t2_star: float, envelope: str = "gaussian") -> float:
    """Infidelity of an equal superposition after dephasing for time ``t``.

    The contrast envelope is Gaussian, ``exp(-(t/T2*)^2)``, except where an
    exponential envelope is requested (used for the entangled-pair coherence,
    whose slow differential drift is better described by a plain decay).
    Returns ``(1 - envelope(t)) / 2``.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t2_star <= 0:
        raise ValueError("T2* must be positive")
    if envelope == "gaussian":
        env = math.exp(-((t / t2_star) ** 2))
    elif envelope == "exponential":
        env = math.exp(-t / t2_star)
    else:
        raise ValueError(f"unknown envelope {envelope!r}")
    return 0.5 * (1.0 - env)


def phase_averaging_infidelity(window: float, qubit_freq: float) -> float:
    """Contrast loss from a uniform analysis-phase spread over the detection window.

    ``(1 - sinc(w T / 2)) / 2`` with ``sinc(x) = sin(x)/x``; ``qubit_freq``
    is the qubit splitting in rad/s and ``window`` the detection window in s.
    """
    if window < 0:
        raise ValueError("window must be nonnegative")
    x = 0.5 * qubit_freq * window
    if x == 0.0:
        return 0.0
    return 0.5 * (1.0 - math.sin(x) / x)


def qubit_freq_for_averaging_error(target: float, window: float) -> float:
    """Qubit splitting (rad/s) at which the window-averaging error equals ``target``."""
    if not 0.0 < target < 0.5:
        raise ValueError("target must be in (0, 0.5)")
    if window <= 0:
        raise ValueError("window must be positive")

    def f(omega):
        return phase_averaging_infidelity(window, omega) - target

    lo, hi = 1e-6 / window, 2.0 * np.pi / window
    return float(brentq(f, lo, hi, xtol=1e-6 / window, rtol=1e-14))


def correlated_populations(state: DensityMatrix) -> float:
    """Population in the correlated branches ``|H,down>`` and ``|V,up>``."""
    if state.dims != PAIR_DIMS:
        raise ValueError("expects an (ion, photon) pair state")
    m = state.matrix
    i_hd = 0b00  # photon H, ion down
    i_vu = 0b11
    return float(np.real(m[i_hd, i_hd] + m[i_vu, i_vu]))


def fidelity_upper_bound(correlation_contrast: float) -> float:
    """Upper bound ``(1 + C)/2`` from the correlation-scan contrast."""
    return min(1.0, max(0.0, 0.5 * (1.0 + correlation_contrast)))


def fidelity_lower_bound_pair(correlated_pops: float, coherence_contrast: float) -> float:
    """Lower bound ``(populations + coherence contrast)/2``.

    Standard two-scan bound: the correlated populations cap the diagonal part
    of the overlap and the coherence contrast caps the off-diagonal part.
    The exact bound used in the modeled experiment's cited analysis is not
    restated there; this convention is documented and checked against the
    reference values as a consistency test only.
    """
    return min(1.0, max(0.0, 0.5 * (correlated_pops + coherence_contrast)))
