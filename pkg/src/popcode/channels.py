"""Single-mode state constructors, channels, and the heterodyne measurement.

Provides thermal and displaced-thermal states, the quantum-limited
amplifier (built constructively: two-mode squeezer on state ⊗ vacuum,
ancilla traced out), photon-number truncation, and heterodyne sampling.

The amplifier's measured behaviour is authoritative: amplitude gain is
sqrt(gamma) and the output thermal parameter is [γβ + (γ−1)(1−β)]/γ,
both properties of the constructive definition (they follow from the
mean-photon map n̄ → γn̄ + γ−1).

The heterodyne outcome density is ((1−β)/π)·exp(−(1−β)|â−α|²), a
normalized probability law (it is the state's Husimi function).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .fock import CutoffError, ModeState, displacement_matrix


@dataclass(frozen=True)
class ModeParams:
    """Chart (alpha, beta) of a displaced thermal state: D_a thermal(b) D_a†."""

    alpha: complex
    beta: float

    def __post_init__(self):
        alpha = complex(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", float(self.beta))
        if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
            raise ValueError("alpha must be finite")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")

    @property
    def mean_photon(self) -> float:
        return abs(self.alpha) ** 2 + self.beta / (1.0 - self.beta)


def make_thermal(beta: float, cutoff: int) -> ModeState:
    """Thermal state diag((1−β)β^j), j ≤ cutoff; tail mass β^{cutoff+1} recorded
    as leak, never renormalized."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    j = np.arange(cutoff + 1, dtype=float)
    diag = (1.0 - beta) * beta**j
    leak = float(beta ** (cutoff + 1))
    return ModeState(matrix=np.diag(diag.astype(np.complex128)), cutoff=cutoff, leak=leak)


def make_displaced_thermal(params: ModeParams, cutoff: int) -> ModeState:
    """Displaced thermal state D_α thermal(β) D_α† at the given cutoff."""
    if not isinstance(params, ModeParams):
        params = ModeParams(*params)
    base = make_thermal(params.beta, cutoff)
    if params.alpha == 0:
        return base
    d = displacement_matrix(params.alpha, cutoff).matrix
    out = d @ base.matrix @ d.conj().T
    out = 0.5 * (out + out.conj().T)
    leak = max(base.leak, min(1.0, 1.0 - float(np.trace(out).real)))
    return ModeState(matrix=out, cutoff=cutoff, leak=leak)


@dataclass(frozen=True)
class TruncationChannel:
    """Channel ρ ↦ P_K ρ P_K + (1 − Tr[P_K ρ P_K])|0⟩⟨0| with P_K the projector
    onto photon number ≤ keep.  Exactly trace preserving."""

    keep: int

    def __post_init__(self):
        if self.keep < 0:
            raise ValueError("keep must be >= 0")

    def kept_mass(self, state: ModeState) -> float:
        """Tr[ρ P_K]: weight surviving the projector."""
        self._check(state)
        k = min(self.keep, state.cutoff)
        return float(np.trace(state.matrix[: k + 1, : k + 1]).real)

    def envelope(self, state: ModeState) -> float:
        """Gentle-measurement bound (3/2)·sqrt(1 − Tr[ρ P_K]) on the trace-distance
        error of this channel."""
        return 1.5 * math.sqrt(max(0.0, 1.0 - self.kept_mass(state)))

    def _check(self, state: ModeState):
        if state.modes != 1:
            raise ValueError("truncation channel acts on single-mode states")
        if self.keep > state.cutoff:
            raise CutoffError(
                f"truncation level {self.keep} exceeds state cutoff {state.cutoff}"
            )

    def __call__(self, state: ModeState) -> ModeState:
        self._check(state)
        k = self.keep
        out = np.zeros_like(state.matrix)
        out[: k + 1, : k + 1] = state.matrix[: k + 1, : k + 1]
        lost = float(np.trace(state.matrix).real) - float(np.trace(out).real)
        out[0, 0] += max(0.0, lost)
        return ModeState(matrix=out, cutoff=state.cutoff, leak=state.leak)


def truncation_channel(keep: int) -> TruncationChannel:
    """Photon-number truncation channel keeping at most ``keep`` photons."""
    return TruncationChannel(keep=keep)


truncate_P = truncation_channel


def _squeezer_band(r: float, diff: int, cutoff: int) -> np.ndarray:
    """Column 0 of exp(G_d) on one photon-number-difference sector of the
    two-mode squeezer, i.e. amplitudes ⟨diff+j, j| S(r) |diff, 0⟩.

    G_d is real antisymmetric tridiagonal; conjugating by diag(i^j) turns it
    into i·T with T real symmetric tridiagonal, so the column comes from a
    tridiagonal eigensolve.
    """
    size = cutoff - diff + 1
    if size == 1:
        return np.ones(1, dtype=np.complex128)
    j = np.arange(size - 1, dtype=float)
    off = r * np.sqrt((diff + j + 1.0) * (j + 1.0))
    lam, vec = eigh_tridiagonal(np.zeros(size), off)
    # exp(G)[:,0] = diag(i^-j) V exp(i lam) V^T e0 scaled by i^0
    col = vec @ (np.exp(1j * lam) * vec[0, :])
    phases = (-1j) ** np.arange(size)
    return phases * col


_KRAUS_CACHE: dict[tuple[float, int], list[np.ndarray]] = {}


def _amplifier_bands(gamma: float, cutoff: int) -> list[np.ndarray]:
    """Kraus bands of the amplifier: band[j][m] = ⟨m+j| K_j |m⟩.

    K_j = ⟨j|_B S(r) |0⟩_B with r = arccosh(sqrt(γ)); each K_j is supported on
    the j-th subdiagonal.  Bands with total weight below 1e-18 are dropped,
    keeping the channel trace preserving to well under 1e-9.
    """
    key = (float(gamma), int(cutoff))
    cached = _KRAUS_CACHE.get(key)
    if cached is not None:
        return cached
    r = math.acosh(math.sqrt(gamma))
    cols = [_squeezer_band(r, m, cutoff) for m in range(cutoff + 1)]
    bands = []
    residual = np.ones(cutoff + 1)
    for j in range(cutoff + 1):
        band = np.zeros(cutoff + 1 - j, dtype=np.complex128)
        for m in range(cutoff + 1 - j):
            band[m] = cols[m][j]
        residual[: cutoff + 1 - j] -= np.abs(band) ** 2
        bands.append(band)
        if np.max(residual) < 1e-18:
            break
    _KRAUS_CACHE[key] = bands
    return bands


@dataclass(frozen=True)
class Amplifier:
    """Quantum-limited amplifier: trace out the ancilla of a two-mode squeezer
    (r = arccosh(sqrt(γ))) applied to state ⊗ vacuum.

    Amplitude gain sqrt(γ); thermal parameter map beta_out.  Needs cutoff
    headroom of roughly twice the expected output mean photon number.
    """

    gamma: float

    def __post_init__(self):
        if self.gamma < 1.0:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")

    @property
    def gain(self) -> float:
        """Amplitude gain on ⟨a⟩."""
        return math.sqrt(self.gamma)

    def beta_out(self, beta: float) -> float:
        """Output thermal parameter: follows from n̄ → γn̄ + γ−1."""
        g = self.gamma
        return (g * beta + (g - 1.0) * (1.0 - beta)) / g

    def kraus(self, cutoff: int) -> list[np.ndarray]:
        """Dense Kraus operators at the given cutoff (mainly for tests)."""
        bands = _amplifier_bands(self.gamma, cutoff)
        ops = []
        for j, band in enumerate(bands):
            k = np.zeros((cutoff + 1, cutoff + 1), dtype=np.complex128)
            m = np.arange(cutoff + 1 - j)
            k[m + j, m] = band
            ops.append(k)
        return ops

    def __call__(self, state: ModeState) -> ModeState:
        if state.modes != 1:
            raise ValueError("amplifier acts on single-mode states")
        if self.gamma == 1.0:
            return state
        n = state.cutoff + 1
        bands = _amplifier_bands(self.gamma, state.cutoff)
        out = np.zeros((n, n), dtype=np.complex128)
        for j, band in enumerate(bands):
            block = state.matrix[: n - j, : n - j]
            out[j:, j:] += (band[:, None] * band.conj()[None, :]) * block
        out = 0.5 * (out + out.conj().T)
        leak = max(state.leak, min(1.0, 1.0 - float(np.trace(out).real)))
        return ModeState(matrix=out, cutoff=state.cutoff, leak=leak)


def amplifier(gamma: float) -> Amplifier:
    """Quantum-limited amplifier channel of power gain gamma ≥ 1."""
    return Amplifier(gamma=gamma)


@dataclass(frozen=True)
class HeterodyneSample:
    """One heterodyne outcome: the complex estimate and its density."""

    value: complex
    pdf_at_value: float

    def __post_init__(self):
        if self.pdf_at_value < 0:
            raise ValueError("pdf_at_value must be >= 0")


def heterodyne_pdf(params: ModeParams):
    """Outcome density of heterodyne on the displaced thermal state:
    pdf(â) = ((1−β)/π)·exp(−(1−β)|â−α|²).  Returns a vectorized callable."""
    if not isinstance(params, ModeParams):
        params = ModeParams(*params)
    one_minus = 1.0 - params.beta
    alpha = params.alpha

    def pdf(a_hat):
        a_hat = np.asarray(a_hat, dtype=np.complex128)
        out = (one_minus / math.pi) * np.exp(-one_minus * np.abs(a_hat - alpha) ** 2)
        if out.ndim == 0:
            return float(out)
        return out

    return pdf


def heterodyne_sample(params: ModeParams, rng: np.random.Generator) -> HeterodyneSample:
    """Draw â = α + g, g complex Gaussian with per-axis variance 1/(2(1−β))."""
    if not isinstance(params, ModeParams):
        params = ModeParams(*params)
    sigma = math.sqrt(1.0 / (2.0 * (1.0 - params.beta)))
    re = rng.normal(loc=params.alpha.real, scale=sigma)
    im = rng.normal(loc=params.alpha.imag, scale=sigma)
    value = complex(re, im)
    return HeterodyneSample(value=value, pdf_at_value=heterodyne_pdf(params)(value))
