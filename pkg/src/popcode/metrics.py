"""Distance measures between truncated-Fock states and their closed forms.

Conventions:

- ``trace_distance``: half trace norm, ½‖ρ₁ − ρ₂‖₁.
- ``hellinger_distance``: √(2 − 2·Tr(√ρ₁ √ρ₂)), built on the affinity
  Tr(√ρ₁√ρ₂).
- ``bures_distance``: √(2 − 2·Tr|√ρ₁ √ρ₂|), built on the root fidelity
  Tr|√ρ₁√ρ₂| (sum of singular values).

Affinity ≤ root fidelity always, so hellinger ≥ bures, with equality
exactly when the states commute.

For the pair (thermal(β), displaced-thermal(α, β)) both distances have
exact closed forms √(2 − 2·exp(−|α|²/(2γ))) with γ_B = (1+β)/(1−β) for
Bures and γ_H = (1+√β)²/(2(1−β)) for Hellinger; ``closed_form_bures`` and
``closed_form_hellinger`` evaluate these.  They are fast advisory paths:
matrix computations remain authoritative in protocol error reports.

Matrix square roots floor eigenvalues at 0 first: truncation noise
produces −1e-12-scale eigenvalues that would poison the square root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import svdvals

from .fock import ModeState

GAP_TOL = 1e-8


def _as_matrix(state) -> np.ndarray:
    if isinstance(state, ModeState):
        return state.matrix
    return np.asarray(state, dtype=np.complex128)


def _check_pair(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def _sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(matrix)
    lam = np.maximum(lam, 0.0)
    return (vec * np.sqrt(lam)) @ vec.conj().T


def trace_distance(a, b) -> float:
    """½‖a − b‖₁ via eigenvalue sum of the Hermitian difference."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    _check_pair(ma, mb)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(ma - mb))))


def hellinger_distance(a, b) -> float:
    """√(2 − 2·Tr(√a √b))."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    _check_pair(ma, mb)
    affinity = float(np.trace(_sqrt_psd(ma) @ _sqrt_psd(mb)).real)
    return math.sqrt(max(0.0, 2.0 - 2.0 * affinity))


def bures_distance(a, b) -> float:
    """√(2 − 2·Tr|√a √b|)."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    _check_pair(ma, mb)
    root_fid = float(np.sum(svdvals(_sqrt_psd(ma) @ _sqrt_psd(mb))))
    return math.sqrt(max(0.0, 2.0 - 2.0 * root_fid))


@dataclass(frozen=True)
class DistanceReport:
    """Trace, Bures, and Hellinger distances of one state pair."""

    trace: float
    bures: float
    hellinger: float

    def __post_init__(self):
        if not -1e-9 <= self.trace <= 1.0 + 1e-9:
            raise ValueError(f"trace distance {self.trace} outside [0, 1]")
        root2 = math.sqrt(2.0) + 1e-9
        if not -1e-9 <= self.bures <= root2:
            raise ValueError(f"bures distance {self.bures} outside [0, sqrt(2)]")
        if not -1e-9 <= self.hellinger <= root2:
            raise ValueError(f"hellinger distance {self.hellinger} outside [0, sqrt(2)]")
        if self.hellinger < self.bures - GAP_TOL:
            raise ValueError(
                f"hellinger {self.hellinger} < bures {self.bures} beyond tolerance"
            )


def distance_report(a, b) -> DistanceReport:
    """All three distances of a pair in one report."""
    return DistanceReport(
        trace=trace_distance(a, b),
        bures=bures_distance(a, b),
        hellinger=hellinger_distance(a, b),
    )


def closed_form_bures(alpha: complex, beta: float) -> float:
    """Exact Bures distance between thermal(β) and displaced-thermal(α, β)."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    gamma_b = (1.0 + beta) / (1.0 - beta)
    return math.sqrt(max(0.0, 2.0 - 2.0 * math.exp(-abs(alpha) ** 2 / (2.0 * gamma_b))))


def closed_form_hellinger(alpha: complex, beta: float) -> float:
    """Exact Hellinger distance between thermal(β) and displaced-thermal(α, β)."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    rt = math.sqrt(beta)
    gamma_h = (1.0 + rt) ** 2 / (2.0 * (1.0 - beta))
    return math.sqrt(max(0.0, 2.0 - 2.0 * math.exp(-abs(alpha) ** 2 / (2.0 * gamma_h))))


def classical_memory_error_bound(d_h: float, d_b: float) -> float:
    """(d_h − d_b)²/8: lower bound on the per-state recovery error of any
    protocol that stores the pair in a commuting (purely classical) memory.
    The gap vanishes iff the pair commutes, so only genuinely quantum pairs
    force a positive bound."""
    if d_h < d_b - GAP_TOL:
        raise ValueError(f"d_h {d_h} < d_b {d_b} beyond tolerance")
    gap = max(0.0, d_h - d_b)
    return gap * gap / 8.0


def thermal_trace_distance(beta1: float, beta2: float) -> float:
    """Exact ½‖thermal(β₁) − thermal(β₂)‖₁ in closed form.

    Geometric photon-number laws cross exactly once, so the half trace norm
    is β₂^{j+1} − β₁^{j+1} at the crossing index j; evaluating the crossing's
    floor/ceil neighbours and taking the max absorbs rounding.
    """
    for b in (beta1, beta2):
        if not 0.0 <= b < 1.0:
            raise ValueError(f"thermal parameter must lie in [0, 1), got {b}")
    b1, b2 = sorted((float(beta1), float(beta2)))
    if b1 == b2:
        return 0.0
    if b1 == 0.0:
        return b2
    j_star = math.log((1.0 - b2) / (1.0 - b1)) / math.log(b1 / b2)
    best = 0.0
    base = max(0, math.floor(j_star) - 1)
    for j in (base, base + 1, base + 2):
        best = max(best, b2 ** (j + 1) - b1 ** (j + 1))
    return best
