"""Exact error evaluation for the interval codec on many-copy thermal states.

The codec measures the total photon number m of n thermal modes, stores
only the index of the interval containing m (t+1 = ⌊n^{1/2+δ}⌋ intervals:
L_0 = {0}, then t−1 intervals of width ⌊n^{(1−δ)/2}⌋, then an unbounded
tail), and decodes by sampling a total uniformly inside the stored interval
and a photon-number vector uniformly among those with that total.  The tail
interval decodes to the single vector with all of its smallest total in the
first mode.

Both the n-mode input thermal(β)^{⊗n} and the decoder output are diagonal
with weights depending only on m, so the n-mode trace distance collapses to
a one-dimensional sum over m: with P_m the negative-binomial law of the
total and W̄_i the mean of P over interval i,

    error = ½ Σ_{i<t} Σ_{m∈L_i} |P_m − W̄_i|  +  (W_t − p_t),

where W_t is the tail mass and p_t the weight of the tail's decode vector.
Everything is evaluated in the log domain over an adaptive support whose
neglected tail is below 1e-12; float rounding on the huge log magnitudes
adds ~1e-10 relative noise at the largest n, far below the errors measured.

Floors and ceilings of real powers are taken with 1e-12 relative slack to
absorb floating-point dust on exact powers (e.g. 1024^0.7 = 128).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

EPS_REL = 1e-12
SUPPORT_TAIL = 1e-12


def eps_floor(x: float) -> int:
    """floor with 1e-12 relative slack toward +inf."""
    return int(math.floor(x * (1.0 + EPS_REL)))


def eps_ceil(x: float) -> int:
    """ceil with 1e-12 relative slack toward -inf."""
    return int(math.ceil(x * (1.0 - EPS_REL)))


@dataclass(frozen=True)
class IntervalScheme:
    """Partition of the totals: L_0 = {0}; L_i = {(i−1)w+1 … iw} for 0<i<t;
    L_t = the tail {(t−1)w+1, …}.  t = 0 degenerates to one all-covering
    interval."""

    n: int
    delta: float
    t: int
    width: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.t < 0 or self.width < 1:
            raise ValueError("invalid interval scheme")

    @property
    def tail_start(self) -> int:
        """Smallest total in the tail interval (0 when t = 0)."""
        if self.t == 0:
            return 0
        return (self.t - 1) * self.width + 1


def interval_scheme(n: int, delta: float) -> IntervalScheme:
    """Scheme with t+1 = ⌊n^{1/2+δ}⌋ intervals of width ⌊n^{(1−δ)/2}⌋."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if delta <= 0:
        raise ValueError("delta must be > 0")
    t_plus_1 = max(1, eps_floor(float(n) ** (0.5 + delta)))
    width = max(1, eps_floor(float(n) ** ((1.0 - delta) / 2.0)))
    return IntervalScheme(n=n, delta=delta, t=t_plus_1 - 1, width=width)


def interval_index(scheme: IntervalScheme, m: int) -> int:
    """Index i with m ∈ L_i."""
    if m < 0:
        raise ValueError("m must be >= 0")
    if scheme.t == 0 or m == 0:
        return 0
    return min(scheme.t, (m - 1) // scheme.width + 1)


def codec_memory_bits(scheme: IntervalScheme) -> float:
    """log₂(t+1): bits needed to store the interval index."""
    return math.log2(scheme.t + 1)


@dataclass(frozen=True)
class PhotonTotalLaw:
    """Negative-binomial law of the total photon number of n thermal modes:
    log-weights of P_m = C(n+m−1, m)(1−β)ⁿβ^m over m = 0..support_end, the
    support chosen adaptively so the neglected tail is below 1e-12."""

    n: int
    beta: float
    log_weights: np.ndarray

    def __post_init__(self):
        total = float(np.exp(self.log_weights).sum())
        if not 1.0 - 1e-9 <= total <= 1.0 + 1e-9:
            raise ValueError(f"law sums to {total}, outside 1 ± 1e-9")

    @property
    def support_end(self) -> int:
        return len(self.log_weights) - 1

    @classmethod
    def build(cls, n: int, beta: float, tail_bound: float = SUPPORT_TAIL,
              min_support: int = 0) -> "PhotonTotalLaw":
        if n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 < beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {beta}")
        mean = n * beta / (1.0 - beta)
        sigma = math.sqrt(n * beta) / (1.0 - beta)
        m_end = max(int(mean + 12.0 * sigma) + 20, min_support)
        while True:
            # pmf ratio β(n+m)/(m+1) decreases in m, so past the mode the
            # tail is dominated by a geometric series; this bound is immune
            # to rounding noise in the re-exponentiated sum
            ratio = beta * (n + m_end) / (m_end + 1.0)
            if ratio < 1.0:
                lw = _log_negative_binomial(n, beta, m_end)
                tail = math.exp(lw[-1]) * ratio / (1.0 - ratio)
                if tail < tail_bound:
                    return cls(n=n, beta=beta, log_weights=lw)
            m_end = int(m_end * 1.5) + 50


def _log_negative_binomial(n: int, beta: float, m_end: int) -> np.ndarray:
    m = np.arange(m_end + 1, dtype=float)
    return (
        n * math.log1p(-beta)
        + m * math.log(beta)
        + gammaln(n + m)
        - gammaln(m + 1.0)
        - gammaln(float(n))
    )


def exact_codec_error(n: int, beta: float, delta: float) -> float:
    """Exact trace distance between thermal(β)^{⊗n} and its decode∘encode
    image under the interval codec, via the one-dimensional collapse."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    if beta == 0.0:
        return 0.0
    scheme = interval_scheme(n, delta)
    t, w = scheme.t, scheme.width
    log_p_tail_vec = n * math.log1p(-beta) + scheme.tail_start * math.log(beta)
    if t == 0:
        return min(1.0, max(0.0, 1.0 - math.exp(log_p_tail_vec)))

    m_tail = scheme.tail_start
    law = PhotonTotalLaw.build(n, beta)
    support = law.support_end
    if support >= m_tail - 1:
        m_top = m_tail - 1
    else:
        # extend to the end of the interval containing the support
        i_top = interval_index(scheme, support)
        m_top = min(m_tail - 1, i_top * w)
        if m_top > support:
            law = PhotonTotalLaw.build(n, beta, min_support=m_top)
    probs = np.exp(law.log_weights[: m_top + 1])

    if m_top >= 1:
        # interval mean over L_0 = {0} then width-w blocks
        starts = np.arange(1, m_top + 1, w)
        block_sums = np.add.reduceat(probs[1:], starts - 1)
        means = np.repeat(block_sums / w, w)[:m_top]
        main = 0.5 * float(np.abs(probs[1:] - means).sum())
    else:
        main = 0.0

    tail_mass = max(0.0, 1.0 - float(probs.sum()))
    tail_term = max(0.0, tail_mass - math.exp(log_p_tail_vec))
    return min(1.0, main + tail_term)
