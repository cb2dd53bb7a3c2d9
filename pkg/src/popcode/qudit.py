"""Finite-dimensional (qudit) side of the compression theory: generic-state
construction, the local Gaussian target of many-copy asymptotics, the
classical-register compressor/amplifier/decoder, the error exponent kappa,
tomography simulation, and the quantum-parameter witness.

A generic qudit state is rho_theta = U_xi rho_0(mu) U_xi^dag with strictly
decreasing positive spectrum mu and U_xi generated by the pair operators
T^I_{j,k} = i E_{j,k} - i E_{k,j} and T^R_{k,j} = E_{j,k} + E_{k,j} scaled
by 1/sqrt(mu_j - mu_k).  Around a point theta_0, n copies are equivalent
(up to an O(n^-kappa) correction handled analytically, never simulated) to
a Gaussian block N(delta_mu, V) times one displaced thermal mode per pair
(j, k) with alpha_{j,k} = (dxi^I + i dxi^R)/(2 sqrt(mu_j - mu_k)) and
beta_{j,k} = mu_k / mu_j.  V is the inverse Fisher information of the
spectrum family in the (mu_1..mu_{d-1}) chart, F = diag(1/mu_j) + J/mu_d.

kappa(x) is the supremum over y > 0, z in ((1+x)/2, 1), eta > max(0, x-y)
of min{(1-z-eta)/2, (1-3x)/4 - y, (2-9 eta)/24}.  The constraint set is
open, so the optimizer works in the slack chart (y, t_z, t_eta) with
z = (1+x)/2 + t_z and eta = max(0, x-y) + t_eta: a full grid at step 1e-3
followed by per-coordinate refinement with the step halved down to 1e-9.
The returned certificate is a strictly feasible point achieving the
reported value, which therefore lower-bounds the supremum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize
from scipy.stats import norm

from .channels import ModeParams, make_displaced_thermal, make_thermal
from .metrics import bures_distance, hellinger_distance
from .protocols import _frame_need, _next32

_UNITARY_TOL = 1e-9
_SPECTRUM_TOL = 1e-12
KAPPA_DOMAIN_END = 2.0 / 9.0


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr)
    out.setflags(write=False)
    return out


def pair_list(d: int) -> tuple[tuple[int, int], ...]:
    """Lexicographic (j, k) pairs, 1-indexed, j < k <= d."""
    return tuple((j, k) for j in range(1, d + 1) for k in range(j + 1, d + 1))


def generator_imag(j: int, k: int, d: int) -> np.ndarray:
    """T^I_{j,k} = i E_{j,k} - i E_{k,j} (Hermitian)."""
    out = np.zeros((d, d), dtype=np.complex128)
    out[j - 1, k - 1] = 1j
    out[k - 1, j - 1] = -1j
    return out


def generator_real(j: int, k: int, d: int) -> np.ndarray:
    """T^R_{k,j} = E_{j,k} + E_{k,j} (Hermitian)."""
    out = np.zeros((d, d), dtype=np.complex128)
    out[j - 1, k - 1] = 1.0
    out[k - 1, j - 1] = 1.0
    return out


@dataclass(frozen=True)
class QuditParametrization:
    """Point theta = (xi, mu) of the generic-state family.

    ``mu`` is the full spectrum (strictly decreasing, positive, sums to 1);
    ``xi`` has one (xi_R, xi_I) row per pair in ``pair_list(d)`` order.
    """

    d: int
    mu: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        mu = np.asarray(self.mu, dtype=float)
        if mu.shape != (self.d,):
            raise ValueError(f"mu must have shape ({self.d},)")
        if np.any(np.diff(mu) >= -_SPECTRUM_TOL) or mu[-1] <= 0.0:
            raise ValueError("spectrum must be strictly decreasing and positive")
        if abs(float(mu.sum()) - 1.0) > 1e-9:
            raise ValueError("spectrum must sum to 1")
        n_pairs = self.d * (self.d - 1) // 2
        xi = np.asarray(self.xi, dtype=float)
        if xi.shape != (n_pairs, 2):
            raise ValueError(f"xi must have shape ({n_pairs}, 2)")
        object.__setattr__(self, "mu", _readonly(mu))
        object.__setattr__(self, "xi", _readonly(xi))

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return pair_list(self.d)

    def hamiltonian(self) -> np.ndarray:
        """Hermitian generator H with U_xi = exp(iH)."""
        h = np.zeros((self.d, self.d), dtype=np.complex128)
        for (j, k), (xi_r, xi_i) in zip(self.pairs, self.xi):
            scale = 1.0 / math.sqrt(self.mu[j - 1] - self.mu[k - 1])
            h += scale * (
                xi_i * generator_imag(j, k, self.d) + xi_r * generator_real(j, k, self.d)
            )
        return h

    def unitary(self) -> np.ndarray:
        u = expm(1j * self.hamiltonian())
        err = np.max(np.abs(u @ u.conj().T - np.eye(self.d)))
        if err > _UNITARY_TOL:
            raise ValueError(f"U_xi deviates from unitarity by {err:.3e}")
        return u


def build_qudit_state(param: QuditParametrization) -> np.ndarray:
    """rho_theta = U_xi diag(mu) U_xi^dag."""
    u = param.unitary()
    return (u * param.mu) @ u.conj().T


def spectrum_fisher_information(mu: np.ndarray) -> np.ndarray:
    """Multinomial Fisher information in the (mu_1..mu_{d-1}) chart with
    mu_d dependent: F = diag(1/mu_j) + J/mu_d."""
    mu = np.asarray(mu, dtype=float)
    head = mu[:-1]
    return np.diag(1.0 / head) + 1.0 / mu[-1]


@dataclass(frozen=True)
class GaussianTarget:
    """Local Gaussian equivalent of n copies near theta_0: a classical
    normal block over the spectrum shift and one displaced thermal mode
    per eigenbasis pair."""

    delta_mu: np.ndarray
    V: np.ndarray
    mode_params: Mapping[tuple[int, int], ModeParams]

    def __post_init__(self):
        delta_mu = _readonly(np.asarray(self.delta_mu, dtype=float))
        v = np.asarray(self.V, dtype=float)
        if v.shape != (len(delta_mu), len(delta_mu)):
            raise ValueError("V must be square and match delta_mu")
        if np.max(np.abs(v - v.T)) > 1e-12:
            raise ValueError("V must be symmetric")
        if np.linalg.eigvalsh(v).min() <= 0.0:
            raise ValueError("V must be positive definite")
        for (j, k), params in self.mode_params.items():
            if not 0.0 < params.beta < 1.0:
                raise ValueError(f"beta for pair ({j},{k}) must lie in (0, 1)")
        object.__setattr__(self, "delta_mu", delta_mu)
        object.__setattr__(self, "V", _readonly(v))
        object.__setattr__(self, "mode_params", MappingProxyType(dict(self.mode_params)))


def qlan_target(
    theta0: QuditParametrization,
    delta_theta: tuple[np.ndarray, np.ndarray],
    n: int,
) -> GaussianTarget:
    """Gaussian target at theta = theta_0 + delta_theta/sqrt(n).

    ``delta_theta`` is (delta_xi, delta_mu) with delta_xi shaped like
    theta0.xi and delta_mu of length d-1.  Shifts beyond the widest
    admissible local neighborhood (sup norm n^(1/9)) trigger a warning,
    not an error: the map itself stays well defined.
    """
    delta_xi = np.asarray(delta_theta[0], dtype=float)
    delta_mu = np.asarray(delta_theta[1], dtype=float)
    if delta_xi.shape != theta0.xi.shape:
        raise ValueError("delta_xi must match theta0.xi in shape")
    if delta_mu.shape != (theta0.d - 1,):
        raise ValueError(f"delta_mu must have shape ({theta0.d - 1},)")
    if n < 2:
        raise ValueError("n must be >= 2")
    sup = max(
        float(np.max(np.abs(delta_xi))) if delta_xi.size else 0.0,
        float(np.max(np.abs(delta_mu))) if delta_mu.size else 0.0,
    )
    if sup > float(n) ** (1.0 / 9.0):
        warnings.warn(
            f"shift sup norm {sup:.3g} exceeds the local neighborhood "
            f"n^(1/9) = {float(n) ** (1.0 / 9.0):.3g}",
            stacklevel=2,
        )
    mu = theta0.mu
    modes = {}
    for idx, (j, k) in enumerate(theta0.pairs):
        root = math.sqrt(mu[j - 1] - mu[k - 1])
        d_r, d_i = delta_xi[idx]
        modes[(j, k)] = ModeParams(
            alpha=complex(d_i, d_r) / (2.0 * root),
            beta=float(mu[k - 1] / mu[j - 1]),
        )
    v = np.linalg.inv(spectrum_fisher_information(mu))
    v = 0.5 * (v + v.T)
    return GaussianTarget(delta_mu=delta_mu, V=v, mode_params=modes)


@dataclass(frozen=True)
class IdealQlanChannel:
    """Exact bookkeeping swap between the n-copy neighborhood of theta_0
    and its Gaussian target.  The genuine physical channels carry an
    O(n^-kappa) error; reports add that term analytically instead of
    simulating the isometries."""

    theta0: QuditParametrization
    n: int

    def forward(self, delta_theta: tuple[np.ndarray, np.ndarray]) -> GaussianTarget:
        return qlan_target(self.theta0, delta_theta, self.n)

    def backward(self, target: GaussianTarget) -> tuple[np.ndarray, np.ndarray]:
        """Recover (delta_xi, delta_mu) from a target built at theta0."""
        mu = self.theta0.mu
        delta_xi = np.zeros_like(np.asarray(self.theta0.xi))
        for idx, (j, k) in enumerate(self.theta0.pairs):
            root = math.sqrt(mu[j - 1] - mu[k - 1])
            alpha = target.mode_params[(j, k)].alpha
            delta_xi[idx, 0] = 2.0 * root * alpha.imag
            delta_xi[idx, 1] = 2.0 * root * alpha.real
        return delta_xi, np.array(target.delta_mu)


# ---------------------------------------------------------------------------
# kappa exponent


@dataclass(frozen=True)
class KappaParams:
    """Strictly feasible certificate point for the kappa optimization."""

    x: float
    y: float
    z: float
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.x < KAPPA_DOMAIN_END:
            raise ValueError(f"x must lie in [0, 2/9), got {self.x}")
        if not (1.0 + self.x) / 2.0 < self.z < 1.0:
            raise ValueError("z must lie in ((1+x)/2, 1)")
        if self.y <= 0.0:
            raise ValueError("y must be > 0")
        if self.eta <= 0.0 or self.eta <= self.x - self.y:
            raise ValueError("eta must satisfy eta > 0 and eta > x - y")

    def value(self) -> float:
        return min(
            (1.0 - self.z - self.eta) / 2.0,
            (1.0 - 3.0 * self.x) / 4.0 - self.y,
            (2.0 - 9.0 * self.eta) / 24.0,
        )


def _kappa_slack_value(x: float, y: float, t_z: float, t_eta: float) -> float:
    z = (1.0 + x) / 2.0 + t_z
    eta = max(0.0, x - y) + t_eta
    return min(
        (1.0 - z - eta) / 2.0,
        (1.0 - 3.0 * x) / 4.0 - y,
        (2.0 - 9.0 * eta) / 24.0,
    )


@lru_cache(maxsize=512)
def kappa_certificate(x: float, grid_step: float = 1e-3) -> KappaParams:
    """Grid search plus coordinate refinement in the slack chart.

    The grid covers y, t_z = z - (1+x)/2, and t_eta = eta - max(0, x-y) at
    ``grid_step``; refinement then halves a per-coordinate step from
    grid_step down to 1e-9.  Every visited point is strictly feasible, so
    the certificate's value is an honest lower bound on the supremum.
    """
    if not 0.0 <= x < KAPPA_DOMAIN_END:
        raise ValueError(f"x must lie in [0, 2/9), got {x}")
    y_max = max((1.0 - 3.0 * x) / 4.0, 2.0 * grid_step)
    tz_max = 1.0 - (1.0 + x) / 2.0
    teta_max = 2.0 / 9.0
    y_grid = np.arange(grid_step, y_max, grid_step)
    tz_grid = np.arange(grid_step, tz_max, grid_step)
    teta_grid = np.arange(grid_step, teta_max, grid_step)
    best = (-math.inf, grid_step, grid_step, grid_step)
    b_y = (1.0 - 3.0 * x) / 4.0 - y_grid
    for t_z in tz_grid:
        a_base = (1.0 - (1.0 + x) / 2.0 - t_z) / 2.0
        eta = np.maximum(0.0, x - y_grid)[:, None] + teta_grid[None, :]
        vals = np.minimum(
            np.minimum(a_base - eta / 2.0, b_y[:, None]),
            (2.0 - 9.0 * eta) / 24.0,
        )
        flat = int(np.argmax(vals))
        iy, ie = divmod(flat, len(teta_grid))
        if vals[iy, ie] > best[0]:
            best = (float(vals[iy, ie]), float(y_grid[iy]), float(t_z), float(teta_grid[ie]))
    _, y, t_z, t_eta = best
    floor = 1e-12
    step = grid_step
    while step > 1e-9:
        improved = True
        while improved:
            improved = False
            for idx in range(3):
                point = [y, t_z, t_eta]
                for sign in (1.0, -1.0):
                    trial = list(point)
                    trial[idx] = max(floor, trial[idx] + sign * step)
                    val = _kappa_slack_value(x, *trial)
                    if val > _kappa_slack_value(x, y, t_z, t_eta) + 1e-15:
                        y, t_z, t_eta = trial
                        improved = True
        step *= 0.5
    # the objective is a min of planes; coordinate moves stall on the ridge
    # where two terms tie, so polish with a derivative-free simplex search
    floor_pt = np.array([floor, floor, floor])
    res = minimize(
        lambda p: -_kappa_slack_value(x, *np.maximum(p, floor_pt)),
        np.array([y, t_z, t_eta]),
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000},
    )
    cand = np.maximum(res.x, floor_pt)
    if _kappa_slack_value(x, *cand) > _kappa_slack_value(x, y, t_z, t_eta):
        y, t_z, t_eta = (float(v) for v in cand)
    return KappaParams(
        x=x,
        y=y,
        z=(1.0 + x) / 2.0 + t_z,
        eta=max(0.0, x - y) + t_eta,
    )


def kappa(x: float) -> float:
    """Error exponent of the local Gaussian approximation."""
    return kappa_certificate(x).value()


# ---------------------------------------------------------------------------
# classical register


@dataclass(frozen=True)
class GaussianLaw:
    """Mean/covariance spec of the classical register distribution."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (len(mean), len(mean)):
            raise ValueError("cov must be square and match mean")
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise ValueError("cov must be symmetric")
        if np.linalg.eigvalsh(cov).min() <= 0.0:
            raise ValueError("cov must be positive definite")
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "cov", _readonly(cov))

    @property
    def dim(self) -> int:
        return len(self.mean)


@dataclass(frozen=True)
class LatticeLaw:
    """Discrete law after truncation to the hypercube |u|_inf <= n^(d/2)
    and rounding to the lattice of spacing n^(-d/2); excess mass sits on
    the origin."""

    n: int
    delta: float
    spacing: float
    points: np.ndarray
    probs: np.ndarray
    memory_bits: float

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if points.ndim != 2 or len(points) != len(probs):
            raise ValueError("points and probs must align")
        if probs.min() < -1e-12 or abs(float(probs.sum()) - 1.0) > 1e-9:
            raise ValueError("probs must be a probability vector")
        object.__setattr__(self, "points", _readonly(points))
        object.__setattr__(self, "probs", _readonly(np.clip(probs, 0.0, None)))

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _axis_cells(n: int, delta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lattice coordinates and clipped cell edges along one axis."""
    half_box = float(n) ** (delta / 2.0)
    spacing = float(n) ** (-delta / 2.0)
    z_max = int(math.floor(half_box / spacing + 0.5 + 1e-12))
    zs = np.arange(-z_max, z_max + 1)
    centers = zs * spacing
    lows = np.maximum(centers - 0.5 * spacing, -half_box)
    highs = np.minimum(centers + 0.5 * spacing, half_box)
    return centers, lows, highs


def classical_compress(law: GaussianLaw, n: int, delta: float) -> LatticeLaw:
    """Truncate-and-round channel on the classical register.

    Cell masses are exact 1-D normal integrals per axis (diagonal
    covariance required beyond one dimension; the targets produced by
    ``qlan_target`` can be whitened upstream when they are not).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    f = law.dim
    off_diag = law.cov - np.diag(np.diag(law.cov))
    if f > 1 and np.max(np.abs(off_diag)) > 1e-12:
        raise ValueError("multi-axis compression requires diagonal covariance")
    centers, lows, highs = _axis_cells(n, delta)
    per_axis = []
    for axis in range(f):
        mean = law.mean[axis]
        sd = math.sqrt(law.cov[axis, axis])
        per_axis.append(norm.cdf(highs, mean, sd) - norm.cdf(lows, mean, sd))
    count = len(centers) ** f
    if count > 1 << 20:
        raise ValueError(f"lattice of {count} points exceeds the desk-scale cap")
    grids = np.meshgrid(*([centers] * f), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    prob_grids = np.meshgrid(*per_axis, indexing="ij")
    probs = np.ones(count)
    for g in prob_grids:
        probs = probs * g.ravel()
    excess = max(0.0, 1.0 - float(probs.sum()))
    origin = int(np.argmin(np.abs(points).sum(axis=1)))
    probs = probs.copy()
    probs[origin] += excess
    spacing = float(n) ** (-delta / 2.0)
    return LatticeLaw(
        n=n,
        delta=delta,
        spacing=spacing,
        points=points,
        probs=probs,
        memory_bits=f * math.log2(len(centers)),
    )


def classical_decode(
    point: np.ndarray, n: int, delta: float, rng: np.random.Generator
) -> np.ndarray:
    """Uniform draw from the shrinking hypercube |u - t|_inf <= n^(-d/2)/2."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    half = 0.5 * float(n) ** (-delta / 2.0)
    return point + rng.uniform(-half, half, size=point.shape)


def classical_amplify(law, gamma: float):
    """Pushforward of the register under u -> sqrt(gamma) u."""
    if gamma < 1.0:
        raise ValueError("gamma must be >= 1")
    root = math.sqrt(gamma)
    if isinstance(law, GaussianLaw):
        return GaussianLaw(mean=root * np.array(law.mean), cov=gamma * np.array(law.cov))
    if isinstance(law, LatticeLaw):
        return LatticeLaw(
            n=law.n,
            delta=law.delta,
            spacing=root * law.spacing,
            points=root * np.array(law.points),
            probs=np.array(law.probs),
            memory_bits=law.memory_bits,
        )
    raise TypeError(f"unsupported law type {type(law).__name__}")


# ---------------------------------------------------------------------------
# tomography


def _tomography_bases(d: int) -> list[np.ndarray]:
    """Computational basis plus two superposition bases per index pair;
    informationally complete for any d."""
    bases = [np.eye(d, dtype=np.complex128)]
    root = math.sqrt(0.5)
    for j in range(d):
        for k in range(j + 1, d):
            for phase in (1.0, 1j):
                u = np.eye(d, dtype=np.complex128)
                u[j, j] = root
                u[k, j] = root * phase
                u[j, k] = root
                u[k, k] = -root * phase
                bases.append(u)
    return bases


def _project_to_simplex(values: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    srt = np.sort(values)[::-1]
    cumul = np.cumsum(srt) - 1.0
    ks = np.arange(1, len(values) + 1)
    mask = srt - cumul / ks > 0
    rho = int(np.nonzero(mask)[0][-1])
    tau = cumul[rho] / (rho + 1)
    return np.clip(values - tau, 0.0, None)


def tomography_sim(rho: np.ndarray, copies: int, rng: np.random.Generator) -> np.ndarray:
    """Linear-inversion estimate from per-copy projective measurements in a
    fixed informationally complete basis set, projected to the nearest
    density matrix (eigenvalue simplex projection)."""
    rho = np.asarray(rho, dtype=np.complex128)
    d = rho.shape[0]
    if rho.shape != (d, d):
        raise ValueError("rho must be square")
    if copies < d * d:
        raise ValueError(f"need at least d^2 = {d * d} copies, got {copies}")
    bases = _tomography_bases(d)
    shares = [copies // len(bases)] * len(bases)
    for i in range(copies % len(bases)):
        shares[i] += 1
    freqs = []
    for u, share in zip(bases, shares):
        probs = np.clip(np.real(np.diag(u.conj().T @ rho @ u)), 0.0, None)
        probs = probs / probs.sum()
        counts = rng.multinomial(share, probs)
        freqs.append(counts / share)
    estimate = np.diag(freqs[0].astype(np.complex128))
    idx = 1
    for j in range(d):
        for k in range(j + 1, d):
            re_part = 0.5 * (freqs[idx][j] - freqs[idx][k])
            im_part = 0.5 * (freqs[idx + 1][k] - freqs[idx + 1][j])
            estimate[j, k] = re_part + 1j * im_part
            estimate[k, j] = re_part - 1j * im_part
            idx += 2
    vals, vecs = np.linalg.eigh(estimate)
    vals = _project_to_simplex(vals)
    return (vecs * vals) @ vecs.conj().T


# ---------------------------------------------------------------------------
# quantum-parameter witness


def quantum_parameter_witness(
    theta0: QuditParametrization,
    s: float,
    pair: tuple[int, int] = (1, 2),
    component: str = "R",
) -> float:
    """Lower bound (1/8)(d_H - d_B)^2 on the error of any classical-memory
    protocol, from perturbing one quantum parameter by s.

    The perturbed pair's Gaussian mode is thermal(beta) against the
    displaced thermal (alpha(s), beta); the bound is computed from matrix
    Hellinger and Bures distances on an adaptive Fock window.  Classical
    perturbations (component "mu") keep the family jointly diagonal, where
    the two distances coincide, so the witness is exactly zero.
    """
    if component == "mu":
        return 0.0
    if component not in ("R", "I"):
        raise ValueError("component must be 'R', 'I', or 'mu'")
    j, k = pair
    if not 1 <= j < k <= theta0.d:
        raise ValueError(f"pair must satisfy 1 <= j < k <= d, got {pair}")
    if s == 0.0:
        return 0.0
    mu = theta0.mu
    root = math.sqrt(mu[j - 1] - mu[k - 1])
    # thermal-vs-displaced distances depend on the displacement only through
    # its modulus (phase covariance), so canonicalize: s and -s, R and I all
    # produce bit-identical bounds
    amp = abs(s) / (2.0 * root)
    beta = float(mu[k - 1] / mu[j - 1])
    cutoff = _next32(max(_frame_need(amp, beta), 32))
    thermal = make_thermal(beta, cutoff)
    displaced = make_displaced_thermal(ModeParams(alpha=complex(amp, 0.0), beta=beta), cutoff)
    gap = hellinger_distance(thermal, displaced) - bures_distance(thermal, displaced)
    return 0.125 * gap * gap
