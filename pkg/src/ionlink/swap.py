"""Bell-state-analyzer heralding and the heralded two-ion state.

Photon interference is modeled at the outcome-distribution level: the fiber
beamsplitter erases which-path information, and a coincidence of one H and one
V detection projects the photon pair onto one of the two polarization Bell
states ``(|HV> +/- |VH>)/sqrt(2)`` - same-side coincidences onto the symmetric
combination, opposite-side onto the antisymmetric one.  HH and VV patterns
herald nothing.  The absolute sign assignment (same side -> +1) is a
documented convention; the experiment fixes only the relative rule.

Phase bookkeeping: projecting two ideal pairs onto the photon Bell states
leaves the ions in ``(|down,up> + sign e^{i phi}|up,down>)/sqrt(2)``, where
``phi`` is a difference of the two source phases whose sign depends on where
the V-branch phase of each source is referenced.  The reference two-ion form uses
``phi = phi_B - phi_A`` while the single-ion coherence scans fit ``+phi_j``
per source; these two conventions cannot be derived from each other without
unstated reference choices, so ``HardwareConfig.swap_phase_convention``
selects the orientation (default ``"b_minus_a"``, the reference form), and the
state construction applies it consistently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import HardwareConfig
from .ion_photon import SourceParams, emit_ion_photon_state
from .quantum import (
    DensityMatrix,
    PureState,
    apply_channel,
    apply_unitary,
    dephasing_channel,
    partial_trace,
    superposition,
    tensor,
)

TWO_PI = 2.0 * np.pi

# full register: (ion A, photon A, ion B, photon B)
FULL_DIMS = (2, 2, 2, 2)
ION_A, PHOTON_A, ION_B, PHOTON_B = range(4)
TWO_ION_DIMS = (2, 2)

DOWN, UP = 0, 1
H, V = 0, 1


@dataclass(frozen=True)
class Detection:
    polarization: str  # "H" or "V"
    side: int          # beamsplitter output side, 1 or 2

    def __post_init__(self):
        if self.polarization not in ("H", "V"):
            raise ValueError(f"polarization must be H or V, got {self.polarization!r}")
        if self.side not in (1, 2):
            raise ValueError(f"side must be 1 or 2, got {self.side!r}")


@dataclass(frozen=True)
class CoincidencePattern:
    """Two detections within one attempt window."""

    first: Detection
    second: Detection

    @property
    def same_side(self) -> bool:
        return self.first.side == self.second.side


def herald_sign(pattern: CoincidencePattern) -> int | None:
    """+1 for same-side HV, -1 for opposite-side HV, None otherwise.

    Only two of the four photon Bell states produce an H+V coincidence, so HH
    and VV patterns do not herald.
    """
    pols = {pattern.first.polarization, pattern.second.polarization}
    if pols != {"H", "V"}:
        return None
    return +1 if pattern.same_side else -1


@dataclass(frozen=True)
class SwapErrorParams:
    """Residual swap errors beyond the per-source polarization mixing."""

    temporal_overlap: float = 1.0
    dark_count_prob: float = 0.0
    double_excitation_prob: float = 0.0

    def __post_init__(self):
        for name in ("temporal_overlap", "dark_count_prob", "double_excitation_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    @classmethod
    def from_config(cls, cfg: HardwareConfig) -> "SwapErrorParams":
        return cls(temporal_overlap=cfg.temporal_overlap,
                   dark_count_prob=cfg.dark_count_prob,
                   double_excitation_prob=cfg.double_excitation_prob)


def success_probability(eta_a: float, eta_b: float) -> float:
    """Per-attempt herald probability ``eta_a * eta_b / 2``.

    The factor 1/2 is the fraction of photon Bell states the analyzer heralds.
    """
    if not (0.0 <= eta_a <= 1.0 and 0.0 <= eta_b <= 1.0):
        raise ValueError("efficiencies must be in [0, 1]")
    return 0.5 * eta_a * eta_b


def bell_phase(delta: float, t: float, phase: float) -> float:
    """Accumulated superposition phase ``(delta*t + phase) mod 2*pi``."""
    return float((delta * t + phase) % TWO_PI)


def phase_alignment_delay(delta: float, phase: float, target: float = 0.0) -> float:
    """Smallest ``t >= 0`` with ``(delta*t + phase) mod 2*pi == target``.

    Raises ValueError when ``delta == 0`` and the phases cannot be aligned.
    Note: evaluating this with the reference source phases and frequency
    difference gives 731 us, not the reference 210 us wait; the discrepancy is a
    phase-convention ambiguity and ``target=pi`` (which swaps the herald
    signs) reproduces that wait to within a few percent.
    """
    residual = (target - phase) % TWO_PI
    if residual < 1e-15 or TWO_PI - residual < 1e-15:
        return 0.0
    if delta == 0.0:
        raise ValueError("delta is zero and phase is not already aligned")
    if delta < 0.0:
        residual = residual - TWO_PI
    return float(residual / delta)


def bell_state(sign: int, phase: float = 0.0) -> PureState:
    """``(|down,up> + sign e^{i phase} |up,down>)/sqrt(2)`` on (ion A, ion B)."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    return superposition(
        [(1.0, (DOWN, UP)), (sign * np.exp(1j * phase), (UP, DOWN))], TWO_ION_DIMS)


def _photon_bell_herald_projector(sign: int) -> np.ndarray:
    """Projector onto (photons in Psi^sign) x (identity on both ions)."""
    vecs = []
    for a in (DOWN, UP):
        for b in (DOWN, UP):
            vecs.append(superposition(
                [(1.0, (a, H, b, V)), (float(sign), (a, V, b, H))], FULL_DIMS))
    proj = np.zeros((16, 16), dtype=complex)
    for v in vecs:
        proj += np.outer(v.amplitudes, v.amplitudes.conj())
    return proj


def swapped_state(src_a: SourceParams, src_b: SourceParams, sign: int, t: float,
                  err: SwapErrorParams, cfg: HardwareConfig) -> DensityMatrix:
    """Two-ion state heralded by an H+V coincidence, ``t`` seconds afterwards.

    Composition: each source emits its (possibly polarization-mixed) pair, the
    photons are projected onto the heralded Bell state, the photons are traced
    out, and then, in order, the free-evolution phase ``delta * t``, the pair
    dephasing at the configured envelope, the wavepacket-overlap coherence
    scaling and the incoherent dark-count / double-excitation admixtures are
    applied.  With all errors off and ``delta*t + phi = 0 (mod 2*pi)`` the
    result is exactly the odd Bell state of the given sign.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    orientation = 1.0 if cfg.swap_phase_convention == "a_minus_b" else -1.0
    pair_a = emit_ion_photon_state(replace(
        src_a, superposition_phase=(orientation * src_a.superposition_phase) % TWO_PI))
    pair_b = emit_ion_photon_state(replace(
        src_b, superposition_phase=(orientation * src_b.superposition_phase) % TWO_PI))
    full = tensor(pair_a, pair_b)
    proj = _photon_bell_herald_projector(sign)
    weighted = proj @ full.matrix @ proj
    w = float(np.real(np.trace(weighted)))
    if w < 1e-15:
        raise ValueError("herald outcome has zero probability")
    heralded = DensityMatrix(0.5 * (weighted + weighted.conj().T) / w, FULL_DIMS)
    ions = partial_trace(heralded, keep=[ION_A, ION_B])

    # free evolution: relative phase delta*t on |up,down> vs |down,up>
    half = 0.5 * cfg.delta * t
    u = np.kron(np.diag([1.0, np.exp(-1j * half)]),    # ion B (high bits)
                np.diag([1.0, np.exp(+1j * half)]))    # ion A (low bits)
    ions = apply_unitary(ions, u)

    # pair dephasing: differential phase noise at the configured envelope
    gamma = cfg.bell_coherence_factor(t)
    if gamma < 1.0:
        ions = apply_channel(ions, dephasing_channel(gamma).on_subsystem(0, TWO_ION_DIMS))
    # finite wavepacket overlap scales the interference coherence
    if err.temporal_overlap < 1.0:
        ions = apply_channel(
            ions, dephasing_channel(err.temporal_overlap).on_subsystem(0, TWO_ION_DIMS))

    # incoherent admixtures: a fake herald carries no ion correlation
    mat = ions.matrix.copy()
    p_true = success_probability(src_a.collection_efficiency,
                                 src_b.collection_efficiency)
    if err.dark_count_prob > 0.0:
        w_dark = err.dark_count_prob / (p_true + err.dark_count_prob)
        mat = (1.0 - w_dark) * mat + w_dark * np.eye(4) / 4.0
    if err.double_excitation_prob > 0.0:
        w_x = err.double_excitation_prob
        mat = (1.0 - w_x) * mat + w_x * np.eye(4) / 4.0
    return DensityMatrix(mat, TWO_ION_DIMS)


def swapped_state_from_config(cfg: HardwareConfig, sign: int = +1,
                              t: float | None = None) -> DensityMatrix:
    """Heralded two-ion state at the configured analysis delay."""
    if t is None:
        t = cfg.analysis_delay
    return swapped_state(cfg.source_a(), cfg.source_b(), sign, t,
                         SwapErrorParams.from_config(cfg), cfg)


def aligned_state_from_config(cfg: HardwareConfig, sign: int = +1) -> DensityMatrix:
    """Heralded state analyzed at the phase-alignment delay for its sign.

    Waiting until ``delta*t + phi = 0 (mod 2*pi)`` turns a +1 herald into the
    plus Bell state; a -1 herald needs ``delta*t + phi = pi``, which absorbs
    the sign, so both heralds are analyzed as ``|Psi+>``.
    """
    target = 0.0 if sign == +1 else np.pi
    t = phase_alignment_delay(cfg.delta, cfg.swap_phase(), target=target)
    return swapped_state_from_config(cfg, sign=sign, t=t)


@dataclass(frozen=True)
class HeraldStats:
    """Tallies from attempt-level herald sampling."""

    attempts: int
    heralds: int
    plus_signs: int

    @property
    def herald_fraction(self) -> float:
        return self.heralds / self.attempts if self.attempts else 0.0


def simulate_heralds(eta_a: float, eta_b: float, attempts: int,
                     rng: np.random.Generator, chunk: int = 1_000_000) -> HeraldStats:
    """Monte Carlo of the attempt loop at the detection-outcome level.

    Each attempt collects a photon from each source independently; on a
    coincidence, the photon polarizations are uniform (each source's photon
    marginal is maximally mixed), so half the coincidences give the H+V
    patterns that herald, with the two signs equally likely.
    """
    if attempts < 1:
        raise ValueError("attempts must be at least 1")
    heralds = 0
    plus = 0
    remaining = attempts
    while remaining > 0:
        n = min(chunk, remaining)
        remaining -= n
        coincidence = (rng.random(n) < eta_a) & (rng.random(n) < eta_b)
        k = int(coincidence.sum())
        if k == 0:
            continue
        is_herald = rng.random(k) < 0.5
        h = int(is_herald.sum())
        heralds += h
        plus += int((rng.random(h) < 0.5).sum())
    return HeraldStats(attempts=attempts, heralds=heralds, plus_signs=plus)


def sample_coincidence_pattern(rng: np.random.Generator) -> CoincidencePattern:
    """One coincidence pattern for an ideal pair of interfering photons.

    Polarizations are pairwise uniform; for H+V pairs the beamsplitter side
    correlation follows the Bell-state decomposition (same/opposite sides
    equally likely for indistinguishable photons).
    """
    pol_first = "H" if rng.random() < 0.5 else "V"
    pol_second = "H" if rng.random() < 0.5 else "V"
    side_first = 1 if rng.random() < 0.5 else 2
    if pol_first != pol_second:
        same = rng.random() < 0.5
        side_second = side_first if same else (3 - side_first)
    else:
        side_second = 1 if rng.random() < 0.5 else 2
    return CoincidencePattern(Detection(pol_first, side_first),
                              Detection(pol_second, side_second))
