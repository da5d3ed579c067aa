"""Dense complex linear algebra for small qubit registers.

This module is the single home of the register conventions used across the
package:

* Register order for the full link is ``(ion A, photon A, ion B, photon B)``.
  Smaller registers (an ion-photon pair, a two-ion state) use the same
  left-to-right ordering of their subsystems.
* Index mapping is little-endian: subsystem ``k`` of a register with
  subsystem dimensions ``dims`` contributes ``value * prod(dims[:k])`` to the
  flat basis index, so subsystem 0 varies fastest.  Equivalently,
  ``tensor(a, b)`` places ``b``'s subsystems in the high part of the index.
* Qubit basis labels: ion ``|down> = 0``, ``|up> = 1``; photon polarization
  ``|H> = 0``, ``|V> = 1``.

All operations are pure functions; states are treated as immutable (the
wrapped arrays are marked read-only).  Randomness always enters through an
explicit :class:`numpy.random.Generator`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Register size cap: the modeled system never exceeds 2 ions + 2 photons.
MAX_DIM = 16

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
CHANNEL_TOL = 1e-10
PROJECTOR_TOL = 1e-10

ID2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _frozen_array(values, dtype=complex) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _normalize_dims(dim: int, dims: Sequence[int] | None) -> tuple[int, ...]:
    if dims is None:
        dims = (dim,)
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"subsystem dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != dim:
        raise ValueError(f"dims {dims} do not factor dimension {dim}")
    return dims


def basis_index(values: Sequence[int], dims: Sequence[int]) -> int:
    """Flat index of the computational basis state with the given subsystem
    values, little-endian (subsystem 0 in the lowest place)."""
    if len(values) != len(dims):
        raise ValueError("one value per subsystem required")
    index = 0
    stride = 1
    for v, d in zip(values, dims):
        if not 0 <= v < d:
            raise ValueError(f"value {v} out of range for dimension {d}")
        index += v * stride
        stride *= d
    return index


@dataclass(frozen=True)
class PureState:
    """Normalized state vector over a register of subsystems."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, amplitudes, dims: Sequence[int] | None = None):
        amps = _frozen_array(amplitudes)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be a vector")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", _normalize_dims(amps.size, dims))
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state vector not normalized: |psi| = {norm!r}")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()),
                             self.dims)


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one Hermitian PSD matrix with a declared subsystem factorization."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, matrix, dims: Sequence[int] | None = None):
        mat = _frozen_array(matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("density matrix must be square")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "dims", _normalize_dims(mat.shape[0], dims))
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > HERMITIAN_TOL:
            raise ValueError(f"matrix not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        tr = mat.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace is {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(mat).min()
        if lo < -PSD_TOL:
            raise ValueError(f"matrix not positive semidefinite: min eigenvalue {lo:.3e}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, psi: PureState) -> "DensityMatrix":
        return psi.density()

    @classmethod
    def maximally_mixed(cls, dims: Sequence[int]) -> "DensityMatrix":
        dims = tuple(dims)
        d = int(np.prod(dims))
        return cls(np.eye(d, dtype=complex) / d, dims)


def ket(values: Sequence[int], dims: Sequence[int] = None) -> PureState:
    """Computational basis state, e.g. ``ket([0, 1])`` for |down, up-or-V>."""
    if dims is None:
        dims = (2,) * len(values)
    d = int(np.prod(dims))
    amps = np.zeros(d, dtype=complex)
    amps[basis_index(values, dims)] = 1.0
    return PureState(amps, dims)


def superposition(terms: Iterable[tuple[complex, Sequence[int]]],
                  dims: Sequence[int]) -> PureState:
    """Normalized superposition of computational basis states.

    ``terms`` is an iterable of ``(amplitude, subsystem_values)`` pairs.
    """
    dims = tuple(dims)
    d = int(np.prod(dims))
    amps = np.zeros(d, dtype=complex)
    for amplitude, values in terms:
        amps[basis_index(values, dims)] += amplitude
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise ValueError("superposition has zero norm")
    return PureState(amps / norm, dims)


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    """Kronecker product; ``b``'s subsystems are appended above ``a``'s."""
    dim = a.dim * b.dim
    if dim > MAX_DIM:
        raise ValueError(f"register dimension {dim} exceeds cap {MAX_DIM}")
    # little-endian layout: the later register occupies the high index bits
    return DensityMatrix(np.kron(b.matrix, a.matrix), a.dims + b.dims)


def lift(op: np.ndarray, index: int, dims: Sequence[int]) -> np.ndarray:
    """Embed an operator acting on subsystem ``index`` into the full register."""
    dims = tuple(dims)
    if not 0 <= index < len(dims):
        raise ValueError(f"subsystem index {index} out of range for {dims}")
    op = np.asarray(op, dtype=complex)
    if op.shape != (dims[index], dims[index]):
        raise ValueError("operator shape does not match subsystem dimension")
    low = int(np.prod(dims[:index], dtype=int))
    high = int(np.prod(dims[index + 1:], dtype=int))
    return np.kron(np.eye(high, dtype=complex), np.kron(op, np.eye(low, dtype=complex)))


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state over the subsystems in ``keep`` (register order preserved)."""
    n = len(rho.dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"subsystem index out of range: keep={keep}, n={n}")
    rev = rho.dims[::-1]
    t = rho.matrix.reshape(rev + rev)
    # einsum labels: row label of subsystem k is k; col label is n+k if kept,
    # else k (tracing pairs the row and column axes of discarded subsystems)
    row = [k for k in range(n - 1, -1, -1)]
    col = [n + k if k in keep else k for k in range(n - 1, -1, -1)]
    kept_rev = sorted(keep, reverse=True)
    out = [k for k in kept_rev] + [n + k for k in kept_rev]
    reduced = np.einsum(t, row + col, out)
    d = int(np.prod([rho.dims[k] for k in keep]))
    return DensityMatrix(reduced.reshape(d, d), tuple(rho.dims[k] for k in keep))


def apply_unitary(rho: DensityMatrix, u: np.ndarray) -> DensityMatrix:
    u = np.asarray(u, dtype=complex)
    return DensityMatrix(u @ rho.matrix @ u.conj().T, rho.dims)


@dataclass(frozen=True)
class KrausChannel:
    """Trace-preserving channel given by a family of Kraus operators."""

    operators: tuple[np.ndarray, ...]

    def __init__(self, operators: Iterable[np.ndarray]):
        ops = tuple(_frozen_array(k) for k in operators)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise ValueError("all Kraus operators must be square and dim-matched")
        total = sum(k.conj().T @ k for k in ops)
        dev = np.max(np.abs(total - np.eye(d)))
        if dev > CHANNEL_TOL:
            raise ValueError(f"channel not trace preserving: |sum K^dag K - I| = {dev:.3e}")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def on_subsystem(self, index: int, dims: Sequence[int]) -> "KrausChannel":
        return KrausChannel(lift(k, index, dims) for k in self.operators)


def apply_channel(rho: DensityMatrix, channel: KrausChannel) -> DensityMatrix:
    if channel.dim != rho.dim:
        raise ValueError(f"channel dim {channel.dim} != state dim {rho.dim}")
    out = np.zeros_like(rho.matrix)
    for k in channel.operators:
        out = out + k @ rho.matrix @ k.conj().T
    # re-symmetrize round-off so repeated channel application stays valid
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out, rho.dims)


def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel([np.eye(dim, dtype=complex)])


def depolarizing_channel(p: float) -> KrausChannel:
    """Single-qubit depolarizing, convention ``rho -> (1-p) rho + p I/2``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing strength must be in [0, 1]")
    return KrausChannel([
        np.sqrt(1.0 - 0.75 * p) * ID2,
        np.sqrt(0.25 * p) * SIGMA_X,
        np.sqrt(0.25 * p) * SIGMA_Y,
        np.sqrt(0.25 * p) * SIGMA_Z,
    ])


def dephasing_channel(coherence_scale: float) -> KrausChannel:
    """Single-qubit phase damping that scales off-diagonals by the given factor.

    ``coherence_scale = 1`` is the identity; ``0`` removes all coherence.
    """
    lam = float(coherence_scale)
    if not -1.0 <= lam <= 1.0:
        raise ValueError("coherence scale must be in [-1, 1]")
    return KrausChannel([
        np.sqrt((1.0 + lam) / 2.0) * ID2,
        np.sqrt((1.0 - lam) / 2.0) * SIGMA_Z,
    ])


def projector(psi: PureState) -> np.ndarray:
    return np.outer(psi.amplitudes, psi.amplitudes.conj())


def computational_projectors(dims: Sequence[int]) -> list[np.ndarray]:
    d = int(np.prod(dims))
    return [np.diag((np.arange(d) == i).astype(complex)) for i in range(d)]


def fidelity_pure(rho: DensityMatrix, psi: PureState) -> float:
    """Overlap ``<psi| rho |psi>``, clamped to [0, 1]."""
    if rho.dim != psi.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {psi.dim}")
    val = float(np.real(psi.amplitudes.conj() @ rho.matrix @ psi.amplitudes))
    return min(1.0, max(0.0, val))


def measure_projective(rho: DensityMatrix, projectors: Sequence[np.ndarray],
                       rng: np.random.Generator) -> tuple[int, DensityMatrix]:
    """Sample one projective outcome (Born rule) and collapse the state."""
    projs = [np.asarray(p, dtype=complex) for p in projectors]
    total = sum(projs)
    dev = np.max(np.abs(total - np.eye(rho.dim)))
    if dev > PROJECTOR_TOL:
        raise ValueError(f"projectors incomplete: |sum P - I| = {dev:.3e}")
    probs = np.array([max(0.0, float(np.real(np.trace(p @ rho.matrix)))) for p in projs])
    s = probs.sum()
    if abs(s - 1.0) > PROJECTOR_TOL:
        raise ValueError(f"Born probabilities sum to {s!r}")
    probs = probs / s
    outcome = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    outcome = min(outcome, len(projs) - 1)
    p = projs[outcome]
    collapsed = p @ rho.matrix @ p / probs[outcome]
    collapsed = 0.5 * (collapsed + collapsed.conj().T)
    return outcome, DensityMatrix(collapsed, rho.dims)
