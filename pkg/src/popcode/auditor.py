"""Memory lower bounds and ledger audits for compression protocols.

Any protocol with vanishing error can transmit messages: place a mesh of
parameter points with per-axis spacing log2(n)/sqrt(n), count at least
T * (sqrt(n)/log2 n)^f, encode a message as a mesh point's n-copy state,
compress, decompress, and discriminate.  Fano's inequality then forces the
memory to carry at least (f/2) log2 n - f log2 log2 n bits, which every
ledger of the simulated protocols must meet.  The discrimination error
feeding Fano is either 0 (asymptotic regime) or the analytic envelope
n^(-C log2(n)/16) with C fitted from the family's trace-distance expansion
|rho_a - rho_b|_1 ~ C |a - b|_inf at small separations; the underlying
measurement is never simulated, only its bound arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .metrics import trace_distance
from .protocols import MemoryLedger, case_param_counts


@dataclass(frozen=True)
class MeshSpec:
    """Mesh geometry on an f-parameter family: per-axis spacing
    log2(n)/sqrt(n) and a count lower bound T * (sqrt(n)/log2 n)^f.
    T is family-dependent and unspecified by the theory; it enters the
    bit bounds only as the additive constant f-independent log2(T)."""

    n: int
    f: int
    theta0: tuple[float, ...] | None = None
    t_theta: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.f < 1:
            raise ValueError("f must be >= 1")
        if self.t_theta <= 0.0:
            raise ValueError("t_theta must be > 0")
        if self.count_lower_bound < 1.0:
            raise ValueError(
                f"mesh count bound {self.count_lower_bound:.3g} below 1; "
                "n too small for this f"
            )

    @property
    def spacing(self) -> float:
        return math.log2(self.n) / math.sqrt(self.n)

    @property
    def count_lower_bound(self) -> float:
        return self.t_theta * (math.sqrt(self.n) / math.log2(self.n)) ** self.f


@dataclass(frozen=True)
class MeshDistanceReport:
    """Minimum pairwise distinguishability over a mesh sample."""

    min_distance: float
    pairs_evaluated: int
    c_fit: float


def min_mesh_distance(
    points: Sequence[np.ndarray],
    evaluator: Callable[[np.ndarray], np.ndarray],
    max_pairs: int = 2000,
) -> MeshDistanceReport:
    """Minimum pairwise trace distance over the mesh points, plus the
    Euclidean-expansion constant C fitted through the origin against
    |theta - theta'|_inf on the smallest-separation quartile of pairs.

    All pairs are used when their number is within ``max_pairs``; larger
    meshes are sampled by even striding, with the evaluated count reported.
    """
    if len(points) < 2:
        raise ValueError("mesh must contain at least 2 points")
    arrays = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    states = [np.asarray(evaluator(p)) for p in arrays]
    pairs = [(i, j) for i in range(len(arrays)) for j in range(i + 1, len(arrays))]
    if len(pairs) > max_pairs:
        stride = math.ceil(len(pairs) / max_pairs)
        pairs = pairs[::stride]
    seps = np.array([float(np.max(np.abs(arrays[i] - arrays[j]))) for i, j in pairs])
    dists = np.array([trace_distance(states[i], states[j]) for i, j in pairs])
    positive = seps > 0
    if not positive.any():
        c_fit = float("nan")
    else:
        cut = np.quantile(seps[positive], 0.25)
        small = positive & (seps <= cut)
        c_fit = float((dists[small] * seps[small]).sum() / (seps[small] ** 2).sum())
    return MeshDistanceReport(
        min_distance=float(dists.min()),
        pairs_evaluated=len(pairs),
        c_fit=c_fit,
    )


def fano_lower_bound(
    mesh_size: float | None = None,
    p_err: float = 0.0,
    f: int | None = None,
    n: int | None = None,
    t_theta: float = 1.0,
) -> float:
    """Mutual-information lower bound (1 - p) log2 |M| + p log2 p in bits.

    ``mesh_size`` may be given directly; otherwise it is the mesh count
    bound of ``MeshSpec(n, f, t_theta=t_theta)``.
    """
    if not 0.0 <= p_err < 1.0:
        raise ValueError("p_err must lie in [0, 1)")
    if mesh_size is None:
        if f is None or n is None:
            raise ValueError("provide mesh_size or both f and n")
        mesh_size = MeshSpec(n=n, f=f, t_theta=t_theta).count_lower_bound
    if mesh_size < 1.0:
        raise ValueError("mesh_size must be >= 1")
    entropy = 0.0 if p_err == 0.0 else -p_err * math.log2(p_err)
    return (1.0 - p_err) * math.log2(mesh_size) - entropy


def n_enc_lower_bound(f: int, n: int) -> float:
    """Asymptotic memory floor (f/2) log2 n - f log2 log2 n in bits."""
    if f < 1 or n < 3:
        raise ValueError("need f >= 1 and n >= 3")
    bits = math.log2(n)
    return 0.5 * f * bits - f * math.log2(bits)


def discrimination_error_bound(n: int, c_fit: float) -> float:
    """Analytic envelope n^(-C log2(n)/16) on the mesh discrimination
    error, clipped to 1."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if c_fit <= 0.0:
        raise ValueError("c_fit must be > 0")
    return min(1.0, float(n) ** (-c_fit * math.log2(n) / 16.0))


@dataclass(frozen=True)
class AuditReport:
    """Ledger-vs-bound verdict for one protocol configuration."""

    mutual_information_bound: float
    n_enc_bound: float
    ledger_total: float
    slack: float
    verdict: str

    def __post_init__(self):
        expected = "pass" if self.ledger_total >= self.n_enc_bound else "fail"
        if self.verdict != expected:
            raise ValueError("verdict must reflect ledger_total vs n_enc_bound")
        if abs(self.slack - (self.ledger_total - self.n_enc_bound)) > 1e-9:
            raise ValueError("slack must equal ledger_total - n_enc_bound")


def audit(
    ledger: MemoryLedger,
    f: int,
    n: int,
    delta: float,
    case: int | None = None,
    p_err: float = 0.0,
    t_theta: float = 1.0,
) -> AuditReport:
    """Check a protocol's ledger against the asymptotic memory floor.

    Qubits count as bits (Holevo accounting).  When ``case`` is given, f
    must equal that case's independent-parameter count.
    """
    if f < 1:
        raise ValueError("f must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if case is not None and case_param_counts(case) != f:
        raise ValueError(
            f"case {case} has {case_param_counts(case)} independent "
            f"parameters, not {f}"
        )
    total = ledger.total_bits
    bound = n_enc_lower_bound(f, n)
    return AuditReport(
        mutual_information_bound=fano_lower_bound(p_err=p_err, f=f, n=n, t_theta=t_theta),
        n_enc_bound=bound,
        ledger_total=total,
        slack=total - bound,
        verdict="pass" if total >= bound else "fail",
    )
