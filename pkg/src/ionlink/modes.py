"""Equilibrium structure and collective normal modes of a linear ion chain.

The chain sits in a static axial harmonic potential plus mutual Coulomb
repulsion.  Mass scaling at fixed trap settings: the axial spring constant
``m * w_z^2`` is species-independent (static potential, equal charges), so
equilibrium positions are mass-independent; the radial (pseudopotential)
secular frequency scales as ``1/m``, i.e. the radial spring constant is
``(m_ref * w_r_ref)^2 / m``.

Participation conventions: the mass-weighted symmetric eigenproblem
``D = M^{-1/2} H M^{-1/2}`` yields the orthonormal participation matrix ``b``
(``b^T b = b b^T = I``, the normalization stated with the eigenproblem).
Experimental tables usually print the physical displacement patterns instead:
``u ~ M^{-1/2} b`` with each mode rescaled to a unit vector.  ModeTable
carries both; comparisons against printed tables use ``displacement``.

Mode ordering follows the printed convention: axial modes ascending in
frequency, radial modes descending.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

ECH = 1.602176634e-19       # elementary charge, C
AMU = 1.66053906660e-27     # atomic mass unit, kg
EPS0 = 8.8541878128e-12     # vacuum permittivity
K_COUL = ECH**2 / (4.0 * np.pi * EPS0)

MASS_YB_171 = 170.936330    # amu
MASS_BA_138 = 137.905247    # amu

# Default calibration targets: measured mode table of the Yb-Ba-Ba chain used
# for sympathetic cooling (frequencies in Hz; axial ascending, radial
# descending).  The displacement entries are units-normalized per mode, laid
# out as [ion, mode] with ions ordered (Yb, Ba, Ba) along the axis.
YB_BA_BA_MASSES = (MASS_YB_171, MASS_BA_138, MASS_BA_138)
YB_BA_BA_AXIAL_HZ = (353e3, 604e3, 872e3)
YB_BA_BA_RADIAL_HZ = (868e3, 737e3, 606e3)
YB_BA_BA_AXIAL_DISPLACEMENT = (
    (0.614, 0.640, 0.300),
    (0.567, -0.126, -0.840),
    (0.549, -0.758, 0.453),
)
YB_BA_BA_RADIAL_DISPLACEMENT = (
    (0.178, 0.412, 0.847),
    (0.587, 0.672, -0.512),
    (0.790, -0.615, 0.144),
)


@dataclass(frozen=True)
class ChainSpec:
    """Chain composition and the single-reference-ion secular frequencies."""

    masses_amu: tuple[float, ...]
    axial_freq_ref: float       # Hz, single reference ion
    radial_freq_ref: float      # Hz, single reference ion
    reference_mass_amu: float = MASS_BA_138

    def __post_init__(self):
        if len(self.masses_amu) < 1:
            raise ValueError("need at least one ion")
        if any(m <= 0 for m in self.masses_amu):
            raise ValueError("masses must be positive")
        if self.axial_freq_ref <= 0 or self.radial_freq_ref <= 0:
            raise ValueError("reference frequencies must be positive")
        if self.reference_mass_amu <= 0:
            raise ValueError("reference mass must be positive")

    @property
    def n_ions(self) -> int:
        return len(self.masses_amu)

    @property
    def masses_kg(self) -> np.ndarray:
        return np.asarray(self.masses_amu, dtype=float) * AMU

    @property
    def axial_spring(self) -> float:
        """Species-independent axial spring constant m_ref * w_z_ref^2."""
        return self.reference_mass_amu * AMU * (2.0 * np.pi * self.axial_freq_ref) ** 2

    def radial_springs(self) -> np.ndarray:
        """Per-ion radial spring constants (m_ref * w_r_ref)^2 / m_i."""
        m_ref = self.reference_mass_amu * AMU
        return (m_ref * 2.0 * np.pi * self.radial_freq_ref) ** 2 / self.masses_kg


def equilibrium_positions(spec: ChainSpec, max_iterations: int = 500) -> np.ndarray:
    """Axial equilibrium positions (meters) by damped Newton iteration.

    Equal charges make the equilibria independent of the masses; the natural
    length scale is ``(K_COUL / axial_spring)^(1/3)``.
    """
    n = spec.n_ions
    if n == 1:
        return np.zeros(1)
    ell = (K_COUL / spec.axial_spring) ** (1.0 / 3.0)
    u = np.linspace(-(n - 1) / 2.0, (n - 1) / 2.0, n)
    for _ in range(max_iterations):
        grad = u.copy()
        hess = np.eye(n)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                d = u[i] - u[j]
                grad[i] -= np.sign(d) / d**2
                inv3 = 2.0 / abs(d) ** 3
                hess[i, i] += inv3
                hess[i, j] = -inv3
        step = np.linalg.solve(hess, grad)
        # damping keeps the ordering when the initial guess is far off
        scale = min(1.0, 0.5 * np.min(np.abs(np.diff(u))) / max(np.max(np.abs(step)), 1e-300))
        u = u - scale * step
        if np.linalg.norm(grad) < 1e-14:
            return u * ell
    raise RuntimeError(f"equilibrium search did not converge in {max_iterations} iterations")


def _coulomb_curvatures(z: np.ndarray) -> np.ndarray:
    n = len(z)
    c = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                c[i, j] = K_COUL / abs(z[i] - z[j]) ** 3
    return c


def _hessian(spec: ChainSpec, z: np.ndarray, direction: str) -> np.ndarray:
    n = spec.n_ions
    c = _coulomb_curvatures(z)
    if direction == "axial":
        h = np.diag(np.full(n, spec.axial_spring))
        h += 2.0 * (np.diag(c.sum(axis=1)) - c)
    elif direction == "radial":
        h = np.diag(spec.radial_springs())
        h -= np.diag(c.sum(axis=1)) - c
    else:
        raise ValueError(f"direction must be axial or radial, got {direction!r}")
    return h


@dataclass(frozen=True)
class ModeTable:
    """Normal-mode frequencies and participation of one trap direction."""

    direction: str
    frequencies: np.ndarray          # Hz, per mode
    participation: np.ndarray        # orthonormal b, [ion, mode]
    displacement: np.ndarray         # unit-norm displacement patterns, [ion, mode]
    masses_amu: tuple[float, ...]

    @property
    def n_modes(self) -> int:
        return self.frequencies.size

    def eigen_residuals(self, spec: ChainSpec, z: np.ndarray) -> np.ndarray:
        """Relative residual of ``H u = w^2 M u`` per mode (u = M^-1/2 b)."""
        h = _hessian(spec, z, self.direction)
        m = spec.masses_kg
        out = np.empty(self.n_modes)
        for k in range(self.n_modes):
            u = self.participation[:, k] / np.sqrt(m)
            w2 = (2.0 * np.pi * self.frequencies[k]) ** 2
            res = h @ u - w2 * (m * u)
            out[k] = np.linalg.norm(res) / np.linalg.norm(h @ u)
        return out

    def to_csv(self, header_lines: tuple[str, ...] = ()) -> str:
        """Table layout: one row per mode, species columns then frequency."""
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        cols = [f"ion{i}_mass{m:g}" for i, m in enumerate(self.masses_amu)]
        buf.write("mode," + ",".join(cols) + ",frequency_khz\n")
        for k in range(self.n_modes):
            entries = [f"{self.displacement[i, k]:.3f}" for i in range(len(self.masses_amu))]
            buf.write(f"{self.direction}_{k + 1}," + ",".join(entries)
                      + f",{self.frequencies[k] / 1e3:.1f}\n")
        return buf.getvalue()


def normal_modes(spec: ChainSpec, direction: str) -> ModeTable:
    """Solve the mass-weighted eigenproblem for one trap direction.

    Raises ValueError with the offending mode named if a radial mode is
    unstable (nonpositive squared frequency).
    """
    z = equilibrium_positions(spec)
    h = _hessian(spec, z, direction)
    m = spec.masses_kg
    d = h / np.sqrt(np.outer(m, m))
    w2, b = np.linalg.eigh(d)  # ascending
    if direction == "radial":
        order = np.argsort(w2)[::-1]  # printed convention: descending
        w2, b = w2[order], b[:, order]
    for k, val in enumerate(w2):
        if val <= 0:
            raise ValueError(
                f"unstable configuration: {direction} mode {k + 1} has "
                f"omega^2 = {val:.3e} <= 0 (weaken the axial confinement)")
    freqs = np.sqrt(w2) / (2.0 * np.pi)
    # sign convention: largest-magnitude component positive per mode
    for k in range(b.shape[1]):
        idx = np.argmax(np.abs(b[:, k]))
        if b[idx, k] < 0:
            b[:, k] = -b[:, k]
    disp = b / np.sqrt(m)[:, None]
    disp = disp / np.linalg.norm(disp, axis=0, keepdims=True)
    return ModeTable(direction=direction, frequencies=freqs, participation=b,
                     displacement=disp, masses_amu=tuple(spec.masses_amu))


@dataclass(frozen=True)
class CoolantCoupling:
    mode_index: int
    frequency: float
    participation: float
    below_floor: bool


def coolant_coupling_report(table: ModeTable, coolant_index: int,
                            floor: float = 0.1) -> list[CoolantCoupling]:
    """Coolant participation magnitude per mode, flagging weakly coupled modes.

    Participation here is the printed (displacement) convention, since the
    flag is about how much the coolant actually moves in each mode.
    """
    if not 0 <= coolant_index < len(table.masses_amu):
        raise ValueError("coolant index out of range")
    out = []
    for k in range(table.n_modes):
        amp = abs(float(table.displacement[coolant_index, k]))
        out.append(CoolantCoupling(mode_index=k, frequency=float(table.frequencies[k]),
                                   participation=amp, below_floor=amp < floor))
    return out


def calibrate_reference_frequencies(
        masses_amu=YB_BA_BA_MASSES,
        axial_targets_hz=YB_BA_BA_AXIAL_HZ,
        radial_targets_hz=YB_BA_BA_RADIAL_HZ,
        reference_mass_amu: float = MASS_BA_138) -> ChainSpec:
    """Fit the single-ion reference frequencies to a measured mode table.

    The single-ion frequencies behind a published table are often not printed;
    this least-squares fit recovers them.  Axial frequencies scale linearly
    with the axial reference (closed-form fit); the radial reference is found
    by a bounded scalar minimization.
    """
    probe = ChainSpec(masses_amu=tuple(masses_amu), axial_freq_ref=1e5,
                      radial_freq_ref=1e6, reference_mass_amu=reference_mass_amu)
    ax = np.asarray(axial_targets_hz, dtype=float)
    ratios = normal_modes(probe, "axial").frequencies / 1e5
    axial_ref = float(ratios @ ax / (ratios @ ratios))

    rad = np.asarray(radial_targets_hz, dtype=float)

    def cost(fr: float) -> float:
        spec = ChainSpec(masses_amu=tuple(masses_amu), axial_freq_ref=axial_ref,
                         radial_freq_ref=fr, reference_mass_amu=reference_mass_amu)
        try:
            freqs = normal_modes(spec, "radial").frequencies
        except ValueError:
            return 1e30
        return float(np.sum((freqs - rad) ** 2))

    guess = float(np.max(rad))
    res = minimize_scalar(cost, bounds=(0.5 * guess, 3.0 * guess),
                          method="bounded", options={"xatol": 1e-4})
    return ChainSpec(masses_amu=tuple(masses_amu), axial_freq_ref=axial_ref,
                     radial_freq_ref=float(res.x),
                     reference_mass_amu=reference_mass_amu)
