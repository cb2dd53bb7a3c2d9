"""Truncated Fock-space linear algebra for one or two bosonic modes.

States are density matrices in the photon-number basis with a hard cutoff
(dimension cutoff+1 per mode).  Every unitary constructor exponentiates the
*truncated* generator, so the returned matrix is exactly unitary on the
truncated space; agreement with the untruncated operator degrades only near
the cutoff.  States carry a ``leak`` field recording trace lost to
truncation along a pipeline; nothing here ever renormalizes silently.

Beam-splitter convention: ``beam_splitter_unitary(tau)`` acts on coherent
amplitudes as

    (a1, a2) -> (cos(tau) a1 + sin(tau) a2, -sin(tau) a1 + cos(tau) a2)

so a pair of equal coherent amplitudes merges into (sqrt(2) a, 0) at
tau = pi/4.  This amplitude action is the contract every protocol in this
package relies on; the generator used is tau * (a1^dag a2 - a1 a2^dag).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-10
PSD_TOL = 1e-9
UNITARITY_TOL = 1e-8
TRACE_TOL = 1e-9


class CutoffError(ValueError):
    """A requested operation cannot be represented at the configured cutoff."""


def _as_readonly(matrix: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(matrix, dtype=np.complex128)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ModeState:
    """Density matrix of one or two modes at a hard photon-number cutoff.

    ``leak`` is the recorded truncation leakage: trace satisfies
    1 - leak - tol <= trace <= 1 + tol and is never silently renormalized.
    """

    matrix: np.ndarray
    cutoff: int
    modes: int = 1
    leak: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_readonly(self.matrix))
        if self.modes not in (1, 2):
            raise ValueError(f"modes must be 1 or 2, got {self.modes}")
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")
        dim = (self.cutoff + 1) ** self.modes
        if self.matrix.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match cutoff "
                f"{self.cutoff} with {self.modes} mode(s)"
            )
        herm = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"matrix is not Hermitian within tolerance: {herm:.3e}")
        tr = float(np.trace(self.matrix).real)
        if tr > 1.0 + TRACE_TOL:
            raise ValueError(f"trace {tr} exceeds 1")
        if tr < 1.0 - self.leak - 1e-7:
            raise ValueError(
                f"trace {tr} below 1 - leak ({1.0 - self.leak}); leak not recorded"
            )
        if not (0.0 <= self.leak <= 1.0):
            raise ValueError(f"leak must lie in [0, 1], got {self.leak}")

    @classmethod
    def from_matrix(cls, matrix, cutoff, modes=1, leak=0.0) -> "ModeState":
        """Construct from an untrusted matrix, additionally checking positivity."""
        state = cls(matrix=np.asarray(matrix), cutoff=cutoff, modes=modes, leak=leak)
        min_eig = float(np.linalg.eigvalsh(state.matrix)[0])
        if min_eig < -PSD_TOL:
            raise ValueError(f"matrix has negative eigenvalue {min_eig:.3e}")
        return state

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** self.modes

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def mean_photon(self) -> float:
        """Tr[rho n] for a single mode; total photon number for two modes."""
        n = np.arange(self.cutoff + 1, dtype=float)
        if self.modes == 1:
            return float(np.real(np.diag(self.matrix)) @ n)
        tot = (n[:, None] + n[None, :]).reshape(-1)
        return float(np.real(np.diag(self.matrix)) @ tot)

    def first_moment(self) -> complex:
        """Tr[rho a] for a single-mode state."""
        if self.modes != 1:
            raise ValueError("first_moment is defined for single-mode states")
        a = annihilation(self.cutoff)
        return complex(np.trace(self.matrix @ a))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


@dataclass(frozen=True)
class FockOperator:
    """Matrix acting on the truncated Fock space of one or two modes.

    ``unitary_margin`` is the photon-number margin below the cutoff on which
    the sub-block unitarity check is performed.  All constructors in this
    module exponentiate truncated anti-Hermitian generators, which are
    exactly unitary on the whole truncated space, so they use margin 0.
    """

    matrix: np.ndarray
    cutoff: int
    modes: int = 1
    unitary_flag: bool = True
    unitary_margin: int = 0

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_readonly(self.matrix))
        if self.modes not in (1, 2):
            raise ValueError(f"modes must be 1 or 2, got {self.modes}")
        dim = (self.cutoff + 1) ** self.modes
        if self.matrix.shape != (dim, dim):
            raise ValueError("operator shape does not match cutoff/modes")
        if self.unitary_flag:
            sub = self._sub_block_indices()
            prod = self.matrix.conj().T @ self.matrix
            dev = np.max(np.abs(prod[np.ix_(sub, sub)] - np.eye(len(sub))))
            if dev > UNITARITY_TOL:
                raise ValueError(
                    f"operator fails sub-block unitarity check: {dev:.3e}"
                )

    def _sub_block_indices(self):
        top = self.cutoff - self.unitary_margin
        if top < 0:
            raise ValueError("unitary_margin exceeds cutoff")
        if self.modes == 1:
            return np.arange(top + 1)
        n = np.arange(self.cutoff + 1)
        keep = (n[:, None] <= top) & (n[None, :] <= top)
        return np.flatnonzero(keep.reshape(-1))

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** self.modes

    def dagger(self) -> "FockOperator":
        return FockOperator(
            matrix=self.matrix.conj().T,
            cutoff=self.cutoff,
            modes=self.modes,
            unitary_flag=self.unitary_flag,
            unitary_margin=self.unitary_margin,
        )


def annihilation(cutoff: int) -> np.ndarray:
    """Truncated annihilation operator: a|n> = sqrt(n)|n-1>."""
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    a = np.zeros((cutoff + 1, cutoff + 1), dtype=np.complex128)
    ns = np.arange(1, cutoff + 1)
    a[ns - 1, ns] = np.sqrt(ns)
    return a


_DISPLACEMENT_EIG_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _displacement_eigensystem(cutoff: int):
    """Eigendecomposition of H = -i(a^dag - a), cached per cutoff."""
    cached = _DISPLACEMENT_EIG_CACHE.get(cutoff)
    if cached is None:
        a = annihilation(cutoff)
        h = -1j * (a.conj().T - a)
        lam, vec = np.linalg.eigh(h)
        cached = (lam, vec)
        _DISPLACEMENT_EIG_CACHE[cutoff] = cached
    return cached


def recommended_displacement_cutoff(alpha: complex) -> int:
    r = abs(alpha)
    return math.ceil(4.0 * (r * r + r + 1.0))


def displacement_matrix(alpha: complex, cutoff: int) -> FockOperator:
    """Displacement D(alpha) = exp(alpha a^dag - conj(alpha) a), truncated.

    Built from the eigendecomposition of the truncated generator:
    D(alpha) = R_phi exp(i |alpha| H) R_phi^dag with H = -i(a^dag - a) and
    R_phi = diag(exp(i phi n)), phi = arg(alpha).  Exactly unitary on the
    truncated space.
    """
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise ValueError("alpha must be finite")
    if cutoff == 0 and abs(alpha) > 0.5:
        raise ValueError("cutoff 0 cannot represent |alpha| > 0.5")
    if cutoff < recommended_displacement_cutoff(alpha):
        warnings.warn(
            f"cutoff {cutoff} below recommended "
            f"{recommended_displacement_cutoff(alpha)} for |alpha|={abs(alpha):.3g}; "
            "expect truncation leakage",
            stacklevel=2,
        )
    lam, vec = _displacement_eigensystem(cutoff)
    r = abs(alpha)
    core = (vec * np.exp(1j * r * lam)) @ vec.conj().T
    if alpha != 0 and r > 0:
        phi = math.atan2(alpha.imag, alpha.real)
        phase = np.exp(1j * phi * np.arange(cutoff + 1))
        core = (phase[:, None] * core) * phase.conj()[None, :]
    return FockOperator(matrix=core, cutoff=cutoff, modes=1)


def displacement_columns(alpha: complex, n_cols: int, cutoff: int) -> np.ndarray:
    """First n_cols columns of ``displacement_matrix(alpha, cutoff)`` built
    from the cached generator eigensystem without forming the full matrix.

    Columns of the truncated unitary have norm exactly 1; they agree with
    the untruncated operator's columns wherever the displaced number state
    keeps negligible weight near the cutoff (each column norm restricted to
    low rows certifies this per use)."""
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise ValueError("alpha must be finite")
    if n_cols < 1 or n_cols > cutoff + 1:
        raise ValueError("need 1 <= n_cols <= cutoff + 1")
    lam, vec = _displacement_eigensystem(cutoff)
    r = abs(alpha)
    right = vec.conj().T[:, :n_cols].copy()
    if alpha != 0 and r > 0:
        phi = math.atan2(alpha.imag, alpha.real)
        phase = np.exp(1j * phi * np.arange(cutoff + 1))
        right *= phase.conj()[None, :n_cols]
        return (phase[:, None] * vec) @ (np.exp(1j * r * lam)[:, None] * right)
    return vec @ (np.exp(1j * r * lam)[:, None] * right)


def _two_mode_index(n1, n2, cutoff):
    return n1 * (cutoff + 1) + n2


def beam_splitter_unitary(tau: float, cutoff: int) -> FockOperator:
    """Two-mode beam splitter exp(tau (a1^dag a2 - a1 a2^dag)), truncated.

    Acts on coherent amplitudes as
    (a1, a2) -> (cos tau a1 + sin tau a2, -sin tau a1 + cos tau a2).
    The generator conserves total photon number, so it is exponentiated
    block by block over the total-photon sectors of the truncated space.
    """
    tau = float(tau)
    if not -math.pi <= tau <= math.pi:
        raise ValueError("tau must lie in [-pi, pi]")
    d = cutoff + 1
    full = np.zeros((d * d, d * d), dtype=np.complex128)
    for total in range(2 * cutoff + 1):
        lo = max(0, total - cutoff)
        hi = min(total, cutoff)
        size = hi - lo + 1
        idx = np.array(
            [_two_mode_index(n1, total - n1, cutoff) for n1 in range(lo, hi + 1)]
        )
        if size == 1:
            full[idx[0], idx[0]] = 1.0
            continue
        gen = np.zeros((size, size), dtype=np.complex128)
        for j in range(size - 1):
            n1 = lo + j
            n2 = total - n1
            # a1^dag a2 : (n1, n2) -> (n1+1, n2-1)
            amp = tau * math.sqrt((n1 + 1) * n2)
            gen[j + 1, j] = amp
            gen[j, j + 1] = -amp
        lam, vec = np.linalg.eigh(-1j * gen)
        block = (vec * np.exp(1j * lam)) @ vec.conj().T
        full[np.ix_(idx, idx)] = block
    return FockOperator(matrix=full, cutoff=cutoff, modes=2)


def squeezer_block(r: float, diff: int, cutoff: int) -> np.ndarray:
    """exp of the truncated two-mode-squeeze generator on one photon-number
    difference sector.

    The generator r (a^dag b^dag - a b) conserves n_a - n_b; for difference
    ``diff`` >= 0 the sector basis is {|diff + j, j> : j = 0..cutoff-diff}
    and the restricted generator is real tridiagonal antisymmetric.
    """
    size = cutoff - diff + 1
    gen = np.zeros((size, size), dtype=np.complex128)
    for j in range(size - 1):
        amp = r * math.sqrt((diff + j + 1) * (j + 1))
        gen[j + 1, j] = amp
        gen[j, j + 1] = -amp
    lam, vec = np.linalg.eigh(-1j * gen)
    return (vec * np.exp(1j * lam)) @ vec.conj().T


def two_mode_squeezer(r: float, cutoff: int) -> FockOperator:
    """Two-mode squeezer exp(r (a^dag b^dag - a b)), truncated.

    Exponentiated per photon-number-difference sector (the generator
    conserves n_a - n_b), so the result is exactly unitary on the truncated
    space.
    """
    r = float(r)
    if not math.isfinite(r):
        raise ValueError("r must be finite")
    d = cutoff + 1
    full = np.zeros((d * d, d * d), dtype=np.complex128)
    for diff in range(cutoff + 1):
        block = squeezer_block(r, diff, cutoff)
        size = block.shape[0]
        idx_pos = np.array(
            [_two_mode_index(diff + j, j, cutoff) for j in range(size)]
        )
        full[np.ix_(idx_pos, idx_pos)] = block
        if diff > 0:
            idx_neg = np.array(
                [_two_mode_index(j, diff + j, cutoff) for j in range(size)]
            )
            full[np.ix_(idx_neg, idx_neg)] = block
    return FockOperator(matrix=full, cutoff=cutoff, modes=2)


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Number-basis amplitudes of |alpha>: exp(-|a|^2/2) a^k / sqrt(k!)."""
    ks = np.arange(cutoff + 1)
    alpha = complex(alpha)
    if alpha == 0:
        vec = np.zeros(cutoff + 1, dtype=np.complex128)
        vec[0] = 1.0
        return vec
    from scipy.special import gammaln

    logmod = ks * math.log(abs(alpha)) - 0.5 * gammaln(ks + 1.0) - 0.5 * abs(alpha) ** 2
    phase = np.exp(1j * ks * math.atan2(alpha.imag, alpha.real))
    return np.exp(logmod) * phase


def displaced_number_columns(alpha: complex, n_cols: int, cutoff: int) -> np.ndarray:
    """Columns <j|D(alpha)|k> for j = 0..cutoff, k = 0..n_cols-1 of the
    *untruncated* displacement operator, via the exact recurrence
    D|k+1> = (a^dag - conj(alpha)) D|k> / sqrt(k+1).

    Unlike ``displacement_matrix`` these rows are entries of the
    infinite-dimensional unitary, so 1 minus a column's squared norm is
    exactly the weight that D(alpha)|k> carries above the row cutoff."""
    if n_cols < 1 or n_cols > cutoff + 1:
        raise ValueError("need 1 <= n_cols <= cutoff + 1")
    cols = np.zeros((cutoff + 1, n_cols), dtype=np.complex128)
    cols[:, 0] = coherent_amplitudes(alpha, cutoff)
    root = np.sqrt(np.arange(1.0, cutoff + 1.0))
    a_conj = complex(alpha).conjugate()
    for k in range(n_cols - 1):
        v = cols[:, k]
        nxt = -a_conj * v
        nxt[1:] += root * v[:-1]
        cols[:, k + 1] = nxt / math.sqrt(k + 1.0)
    return cols


def tensor(a: ModeState, b: ModeState) -> ModeState:
    """Two-mode product state; both factors must share a cutoff."""
    if a.modes != 1 or b.modes != 1:
        raise ValueError("tensor composes two single-mode states")
    if a.cutoff != b.cutoff:
        raise ValueError("tensor factors must share a cutoff")
    leak = min(1.0, a.leak + b.leak)
    return ModeState(
        matrix=np.kron(a.matrix, b.matrix), cutoff=a.cutoff, modes=2, leak=leak
    )


def partial_trace(state: ModeState, keep: int) -> ModeState:
    """Trace out one mode of a two-mode state; ``keep`` is 1 or 2."""
    if state.modes != 2:
        raise ValueError("partial_trace requires a two-mode state")
    if keep not in (1, 2):
        raise ValueError("keep must be 1 or 2")
    d = state.cutoff + 1
    m = state.matrix.reshape(d, d, d, d)
    if keep == 1:
        red = np.einsum("ikjk->ij", m)
    else:
        red = np.einsum("kikj->ij", m)
    red = 0.5 * (red + red.conj().T)
    return ModeState(matrix=red, cutoff=state.cutoff, modes=1, leak=state.leak)


def apply(op_or_channel, state: ModeState) -> ModeState:
    """Apply a FockOperator (U rho U^dag) or a channel object to a state."""
    if isinstance(op_or_channel, FockOperator):
        op = op_or_channel
        if op.modes != state.modes or op.cutoff != state.cutoff:
            raise ValueError("operator and state dimensions do not match")
        out = op.matrix @ state.matrix @ op.matrix.conj().T
        out = 0.5 * (out + out.conj().T)
        leak = max(state.leak, min(1.0, 1.0 - float(np.trace(out).real)))
        return ModeState(matrix=out, cutoff=state.cutoff, modes=state.modes, leak=leak)
    if callable(op_or_channel):
        return op_or_channel(state)
    raise TypeError(f"cannot apply object of type {type(op_or_channel)!r}")
