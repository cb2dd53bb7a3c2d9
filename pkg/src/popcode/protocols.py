"""End-to-end simulation of the eight compression cases for identically
prepared displaced thermal states, in the reduced one-tracked-mode picture.

A balanced beam-splitter cascade maps n copies of rho_{alpha,beta} exactly
to rho_{sqrt(n)*alpha,beta} tensored with n-1 undisplaced thermal modes, so
the simulator never materializes the n-mode product.  A protocol run taps
one mode (amplitude sqrt(n^a)*alpha with a = 1-delta for the full-alpha
cases and 1-delta/2 for the phase/modulus cases), heterodynes it, rounds
the estimate onto the case's lattice, displaces the tracked mode by the
stored estimate, truncates to K photons, and on decode re-displaces and
amplifies with gamma_n chosen so that gamma_n * (n - n^a) = n exactly.

Per Monte-Carlo draw the tracked-mode error is the exact trace distance
between the reconstructed state and the target rho_{sqrt(n)(alpha-est)},
computed in the lab frame on an adaptively sized Fock window.  For cases
with independent beta, the tap mode consumed by the measurement is
re-prepared as thermal(beta_hat) before the interval codec runs, so each
draw adds thermal_trace_distance(beta_hat, beta) plus the deterministic
codec error on n-1 modes (triangle inequality; both are exact quantities).

Memory ledgers evaluate the per-case bit formulas: 0.5*L classical bits per
independent displacement parameter for the estimate, (0.5+delta)*L for the
thermal codec when beta is independent, and delta*L qubits per independent
displacement parameter for the truncated mode, L = log2(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import erfc

from .channels import ModeParams, amplifier, heterodyne_sample, truncation_channel
from .fock import CutoffError, ModeState, displacement_columns
from .metrics import thermal_trace_distance, trace_distance
from .thermal_codec import eps_floor, exact_codec_error

CUTOFF_CAP = 4096
FRAME_TAIL_TOL = 1e-11
THERMAL_WEIGHT_TOL = 1e-16

# case id -> (thermal codec present, independent displacement parameter count)
_CASE_COUNTS = {
    0: (0, 0),
    1: (1, 0),
    2: (0, 2),
    3: (1, 2),
    4: (0, 1),
    5: (1, 1),
    6: (0, 1),
    7: (1, 1),
}

_ALPHA_CASES = (2, 3)
_PHASE_CASES = (4, 5)
_RADIAL_CASES = (6, 7)
_BETA_UNKNOWN_CASES = (1, 3, 5, 7)


def case_param_counts(case: int) -> int:
    """Number of independent real parameters for a case (displacement
    components plus one when beta is independent)."""
    if case not in _CASE_COUNTS:
        raise ValueError(f"case must be 0..7, got {case}")
    f_c, f_q = _CASE_COUNTS[case]
    return f_c + f_q


@dataclass(frozen=True)
class ParamRanges:
    """Bounds of the parameter family a protocol must cover."""

    alpha_max: float = 1.0
    beta_max: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.alpha_max < 64.0:
            raise ValueError("alpha_max must lie in (0, 64)")
        if not 0.0 <= self.beta_max < 1.0:
            raise ValueError("beta_max must lie in [0, 1)")


@dataclass(frozen=True)
class ProtocolConfig:
    """Full description of one protocol run."""

    case: int
    n: int
    delta: float
    true_params: ModeParams
    param_ranges: ParamRanges = field(default_factory=ParamRanges)
    cutoff: int | None = None
    seed: int = 0
    mc_samples: int = 200

    def __post_init__(self):
        if self.case not in _CASE_COUNTS:
            raise ValueError(f"case must be 0..7, got {self.case}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        # the theory wants delta in (0, 2/9); accepted range is deliberately
        # wider so desk-scale grids can probe past the proof's comfort zone
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if abs(self.true_params.alpha) > self.param_ranges.alpha_max:
            raise ValueError("true |alpha| exceeds param_ranges.alpha_max")
        if self.true_params.beta > self.param_ranges.beta_max:
            raise ValueError("true beta exceeds param_ranges.beta_max")
        if self.cutoff is not None and not 8 <= self.cutoff <= CUTOFF_CAP:
            raise ValueError(f"explicit cutoff must lie in [8, {CUTOFF_CAP}]")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        if not 0 <= self.seed < 2**63:
            raise ValueError("seed must fit in a 63-bit unsigned value")

    @property
    def tap_exponent(self) -> float:
        return 1.0 - self.delta if self.case in _ALPHA_CASES else 1.0 - self.delta / 2.0

    @property
    def gamma(self) -> float:
        """Amplifier gain parameter; gamma * (n - n^a) = n exactly."""
        expo = self.delta if self.case in _ALPHA_CASES else self.delta / 2.0
        return 1.0 / (1.0 - float(self.n) ** (-expo))

    @property
    def truncation_k(self) -> int:
        expo = 2.0 * self.delta if self.case in _ALPHA_CASES else self.delta
        return eps_floor(float(self.n) ** expo)

    @property
    def window_radius(self) -> float:
        """Heterodyne concentration radius n^(-1/2 + 3 delta/4)."""
        return float(self.n) ** (-0.5 + 0.75 * self.delta)


@dataclass(frozen=True)
class MemoryLedger:
    """Classical-bit and qubit accounting of one protocol run."""

    cbits: float
    qubits: float
    breakdown: Mapping[str, float]

    def __post_init__(self):
        if any(v < 0 for v in self.breakdown.values()):
            raise ValueError("breakdown components must be >= 0")
        cb = sum(v for k, v in self.breakdown.items() if k.startswith("cbits."))
        qb = sum(v for k, v in self.breakdown.items() if k.startswith("qubits."))
        if abs(cb - self.cbits) > 1e-9 or abs(qb - self.qubits) > 1e-9:
            raise ValueError("ledger totals must equal the breakdown sums")
        object.__setattr__(self, "breakdown", MappingProxyType(dict(self.breakdown)))

    @property
    def cbits_ceil(self) -> int:
        """Integer bits a serializer would allocate."""
        return math.ceil(self.cbits - 1e-12)

    @property
    def qubits_ceil(self) -> int:
        return math.ceil(self.qubits - 1e-12)

    @property
    def total_bits(self) -> float:
        """Qubits counted as bits for lower-bound comparisons."""
        return self.cbits + self.qubits


@dataclass(frozen=True)
class RunResult:
    """Monte-Carlo outcome of one protocol run."""

    epsilon_hat: float
    epsilon_stderr: float
    ledger: MemoryLedger
    diagnostics: Mapping[str, float]

    def __post_init__(self):
        if not 0.0 <= self.epsilon_hat <= 1.0 + 3.0 * self.epsilon_stderr:
            raise ValueError("epsilon_hat must lie in [0, 1 + 3*stderr]")
        if self.epsilon_stderr < 0.0:
            raise ValueError("epsilon_stderr must be >= 0")
        object.__setattr__(self, "diagnostics", MappingProxyType(dict(self.diagnostics)))


def ledger_for(case: int, n: int, delta: float) -> MemoryLedger:
    """Per-case memory formulas in bits, with labeled breakdown."""
    if case not in _CASE_COUNTS:
        raise ValueError(f"case must be 0..7, got {case}")
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    f_c, f_q = _CASE_COUNTS[case]
    bits = math.log2(n)
    breakdown = {
        "cbits.estimate": 0.5 * f_q * bits,
        "cbits.codec": f_c * (0.5 + delta) * bits,
        "qubits.truncation": f_q * delta * bits,
    }
    return MemoryLedger(
        cbits=breakdown["cbits.estimate"] + breakdown["cbits.codec"],
        qubits=breakdown["qubits.truncation"],
        breakdown=breakdown,
    )


@dataclass(frozen=True)
class _Lattice1D:
    """Uniform cell lattice; values round to the containing cell's center,
    boundary values toward the smaller index (wrapping when periodic)."""

    lo: float
    h: float
    cells: int
    wrap: bool = False

    def round(self, value: float) -> float:
        idx = math.ceil((value - self.lo) / self.h) - 1
        if self.wrap:
            idx %= self.cells
        else:
            idx = min(max(idx, 0), self.cells - 1)
        return self.lo + (idx + 0.5) * self.h


def _lattices(config: ProtocolConfig):
    m_cells = math.ceil(math.sqrt(config.n))
    reach = config.param_ranges.alpha_max + 0.5
    if config.case in _ALPHA_CASES:
        axis = _Lattice1D(lo=-reach, h=2.0 * reach / m_cells, cells=m_cells)
        return axis, axis
    if config.case in _PHASE_CASES:
        return (_Lattice1D(lo=0.0, h=2.0 * math.pi / m_cells, cells=m_cells, wrap=True),)
    return (_Lattice1D(lo=0.0, h=reach / m_cells, cells=m_cells),)


def _round_estimate(config: ProtocolConfig, a_hat: complex) -> complex:
    """Project the raw estimate onto the case's lattice."""
    lats = _lattices(config)
    if config.case in _ALPHA_CASES:
        return complex(lats[0].round(a_hat.real), lats[1].round(a_hat.imag))
    if config.case in _PHASE_CASES:
        phase = math.atan2(a_hat.imag, a_hat.real) % (2.0 * math.pi)
        return abs(config.true_params.alpha) * complex(
            math.cos(lats[0].round(phase)), math.sin(lats[0].round(phase))
        )
    radius = lats[0].round(abs(a_hat))
    alpha = config.true_params.alpha
    phase = math.atan2(alpha.imag, alpha.real) if alpha != 0 else 0.0
    return radius * complex(math.cos(phase), math.sin(phase))


def _thermal_weights(beta: float) -> np.ndarray:
    """Geometric photon-number weights down to THERMAL_WEIGHT_TOL."""
    if beta == 0.0:
        return np.ones(1)
    dim = max(1, math.ceil(math.log(THERMAL_WEIGHT_TOL) / math.log(beta)))
    ks = np.arange(dim + 1)
    return (1.0 - beta) * beta**ks


def _frame_need(amp: float, beta: float) -> int:
    """Fock window holding a displaced thermal of amplitude amp with
    diagonal tail mass far below FRAME_TAIL_TOL."""
    nbar = beta / (1.0 - beta)
    mean = amp * amp + nbar
    var = amp * amp * (2.0 * nbar + 1.0) + nbar * (nbar + 1.0)
    return math.ceil(mean + 12.0 * math.sqrt(var + 1.0) + 20.0)


def _next32(value: int) -> int:
    return ((value + 31) // 32) * 32


def _displaced_thermal_block(u: complex, weights: np.ndarray, frame: int) -> np.ndarray:
    """rho_{u,beta} on the frame, built from exact displacement columns."""
    cols = displacement_columns(u, len(weights), frame)
    block = (cols * weights) @ cols.conj().T
    return 0.5 * (block + block.conj().T)


def _top_mass(matrix: np.ndarray, rows: int = 8) -> float:
    return float(np.real(np.trace(matrix[-rows:, -rows:])))


class _TrackedModePipeline:
    """Per-run quantum machinery: frames, truncation, amplifier, targets."""

    def __init__(self, config: ProtocolConfig):
        self.gamma = config.gamma
        self.k_trunc = config.truncation_k
        self.beta = config.true_params.beta
        self.weights = _thermal_weights(self.beta)
        self.forced = config.cutoff
        self.amp = amplifier(self.gamma)

    def _frame_for(self, u: complex, v: complex) -> int:
        need = max(_frame_need(abs(u), self.beta), _frame_need(abs(v), self.beta))
        need = max(need, len(self.weights) + 8)
        frame = _next32(need)
        if self.forced is not None:
            if self.forced < need:
                raise CutoffError(
                    f"explicit cutoff {self.forced} cannot hold displacement "
                    f"|u|={max(abs(u), abs(v)):.3f} (needs >= {need})"
                )
            frame = self.forced
        if frame > CUTOFF_CAP:
            raise CutoffError(
                f"required frame {frame} exceeds the cutoff cap {CUTOFF_CAP}"
            )
        return frame

    def epsilon_quantum(self, u: complex, v: complex) -> tuple[float, float, int]:
        """Exact trace distance between A^gamma(P_K(rho_{u})) and rho_{v},
        with the truncation's dumped mass and the frame used."""
        frame = self._frame_for(u, v)
        for _ in range(5):
            stored = _displaced_thermal_block(u, self.weights, frame)
            target = _displaced_thermal_block(v, self.weights, frame)
            if max(_top_mass(stored), _top_mass(target)) > FRAME_TAIL_TOL:
                if self.forced is not None:
                    raise CutoffError(
                        f"explicit cutoff {self.forced} leaves displaced-state "
                        "mass at the frame edge"
                    )
                frame = _next32(int(frame * 1.4) + 32)
                if frame > CUTOFF_CAP:
                    raise CutoffError(
                        f"required frame exceeds the cutoff cap {CUTOFF_CAP}"
                    )
                continue
            state = ModeState(matrix=stored, cutoff=frame)
            if self.k_trunc < frame:
                channel = truncation_channel(self.k_trunc)
                leak = max(0.0, 1.0 - channel.kept_mass(state))
                state = channel(state)
            else:
                # the window itself certifies no weight above K
                leak = 0.0
            rebuilt = self.amp(state)
            if _top_mass(rebuilt.matrix) > FRAME_TAIL_TOL:
                if self.forced is not None:
                    raise CutoffError(
                        f"explicit cutoff {self.forced} leaves amplified "
                        "mass at the frame edge"
                    )
                frame = _next32(int(frame * 1.4) + 32)
                if frame > CUTOFF_CAP:
                    raise CutoffError(
                        f"required frame exceeds the cutoff cap {CUTOFF_CAP}"
                    )
                continue
            eps = trace_distance(rebuilt.matrix, target)
            return min(1.0, eps), leak, frame
        raise CutoffError("frame growth did not stabilize below the cap")


def _draw_rng(seed: int, draw: int) -> Generator:
    """Per-draw stream, independent of worker scheduling."""
    return Generator(Philox(key=np.array([seed, draw], dtype=np.uint64)))


def run_case(config: ProtocolConfig) -> RunResult:
    """Simulate encoder, memory, and decoder for one configuration."""
    ledger = ledger_for(config.case, config.n, config.delta)
    alpha = config.true_params.alpha
    beta = config.true_params.beta
    n = config.n

    if config.case == 0:
        return RunResult(0.0, 0.0, ledger, {"codec_error": 0.0})
    if config.case == 1:
        eps = exact_codec_error(n, beta, config.delta)
        return RunResult(eps, 0.0, ledger, {"codec_error": eps})

    beta_unknown = config.case in _BETA_UNKNOWN_CASES
    eps_codec = exact_codec_error(n - 1, beta, config.delta) if beta_unknown else 0.0
    tap_scale = math.sqrt(float(n) ** config.tap_exponent)
    c_keep = math.sqrt(n - float(n) ** config.tap_exponent)
    root_n = math.sqrt(n)
    radius = config.window_radius
    pipeline = _TrackedModePipeline(config)
    # noise is drawn in the tap-amplitude frame: the outcome law is the same
    # (circular symmetry) but realized draws then rotate covariantly with
    # alpha, so commensurate phase rotations leave every draw invariant
    tap_frame = complex(1.0, 0.0)
    if alpha != 0:
        tap_frame = alpha / abs(alpha)
    tap_params = ModeParams(alpha=tap_scale * abs(alpha), beta=beta)

    draws = np.empty(config.mc_samples)
    leaks = np.empty(config.mc_samples)
    frames = np.empty(config.mc_samples, dtype=int)
    eps_q_all = np.empty(config.mc_samples)
    tails = 0
    beta_hats = []
    thermal_mismatches = []
    for i in range(config.mc_samples):
        rng = _draw_rng(config.seed, i)
        sample = heterodyne_sample(tap_params, rng)
        a_hat = sample.value * tap_frame / tap_scale
        if abs(a_hat - alpha) > radius:
            tails += 1
        a_star = _round_estimate(config, a_hat)
        residual = alpha - a_star
        eps_q, leak, frame = pipeline.epsilon_quantum(c_keep * residual, root_n * residual)
        eps_thermal = 0.0
        if beta_unknown:
            counts = rng.geometric(1.0 - beta, size=n - 1) - 1
            mean_count = float(counts.mean())
            beta_hat = mean_count / (1.0 + mean_count)
            beta_hats.append(beta_hat)
            eps_thermal = thermal_trace_distance(beta_hat, beta)
            thermal_mismatches.append(eps_thermal)
        draws[i] = min(1.0, eps_q + eps_thermal + eps_codec)
        leaks[i] = leak
        frames[i] = frame
        eps_q_all[i] = eps_q

    stderr = float(draws.std(ddof=1) / math.sqrt(len(draws))) if len(draws) > 1 else 0.0
    diagnostics = {
        "codec_error": eps_codec,
        "quantum_error_mean": float(eps_q_all.mean()),
        "leakage_mean": float(leaks.mean()),
        "leakage_max": float(leaks.max()),
        "heterodyne_tail_fraction": tails / config.mc_samples,
        "frame_cutoff_max": float(frames.max()),
    }
    if beta_unknown:
        hats = np.asarray(beta_hats)
        diagnostics["beta_hat_mean"] = float(hats.mean())
        diagnostics["beta_hat_std"] = float(hats.std(ddof=1)) if len(hats) > 1 else 0.0
        diagnostics["thermal_mismatch_mean"] = float(np.mean(thermal_mismatches))
        # two candidate asymptotic variances for the N-sample MLE, reported
        # side by side: per-sample geometric Fisher information 1/(b(1-b)^2)
        # vs the displayed alternative (b^2+1)/(b(1-b)^3)
        samples = n - 1
        diagnostics["beta_var_predicted_geometric"] = (
            beta * (1.0 - beta) ** 2 / samples
        )
        diagnostics["beta_var_predicted_displayed"] = (
            beta * (1.0 - beta) ** 3 / ((beta * beta + 1.0) * samples)
        )
    return RunResult(float(draws.mean()), stderr, ledger, diagnostics)


def error_budget(config: ProtocolConfig) -> dict[str, float]:
    """Certified upper-bound components for a configuration's error.

    heterodyne_tail: closed-form mass outside the concentration window;
    amplifier: exact thermal mismatch of the gain channel; truncation:
    exact loss at the worst in-window residual; codec and the MLE slack
    terms appear for independent-beta cases.  The sum bounds epsilon_hat
    up to Monte-Carlo noise.
    """
    alpha = config.true_params.alpha
    beta = config.true_params.beta
    n = config.n
    budget = {
        "heterodyne_tail": 0.0,
        "amplifier": 0.0,
        "truncation": 0.0,
        "codec": 0.0,
        "mle_tail": 0.0,
        "mle_shift": 0.0,
    }
    if config.case == 0:
        budget["total"] = 0.0
        return budget
    if config.case in _BETA_UNKNOWN_CASES:
        copies = n if config.case == 1 else n - 1
        budget["codec"] = exact_codec_error(copies, beta, config.delta)
        if config.case != 1:
            scale = float(n) ** (config.delta / 2.0)
            sigma = math.sqrt(beta) * (1.0 - beta) / math.sqrt(n - 1)
            budget["mle_tail"] = float(erfc(scale / math.sqrt(2.0)))
            shifted = min(beta + scale * sigma, 0.5 * (1.0 + beta))
            budget["mle_shift"] = thermal_trace_distance(shifted, beta)
    if config.case != 1:
        radius = config.window_radius
        tap_power = float(n) ** config.tap_exponent
        budget["heterodyne_tail"] = math.exp(-(1.0 - beta) * tap_power * radius**2)
        budget["amplifier"] = thermal_trace_distance(
            amplifier(config.gamma).beta_out(beta), beta
        )
        budget["truncation"] = _worst_window_truncation(config)
    budget["total"] = sum(v for k, v in budget.items() if k != "total")
    return budget


def _worst_window_truncation(config: ProtocolConfig) -> float:
    """Exact truncation error at the largest in-window lattice residual."""
    lats = _lattices(config)
    radius = config.window_radius
    if config.case in _ALPHA_CASES:
        quant = lats[0].h * math.sqrt(0.5)
    elif config.case in _PHASE_CASES:
        quant = abs(config.true_params.alpha) * 0.5 * lats[0].h
    else:
        quant = 0.5 * lats[0].h
    c_keep = math.sqrt(config.n - float(config.n) ** config.tap_exponent)
    worst = c_keep * (radius + quant)
    beta = config.true_params.beta
    weights = _thermal_weights(beta)
    frame = _next32(max(_frame_need(worst, beta), len(weights) + 8))
    if frame > CUTOFF_CAP:
        raise CutoffError(f"required frame {frame} exceeds the cutoff cap {CUTOFF_CAP}")
    k_trunc = config.truncation_k
    if k_trunc >= frame:
        return 0.0
    block = _displaced_thermal_block(worst, weights, frame)
    state = ModeState(matrix=block, cutoff=frame)
    truncated = truncation_channel(k_trunc)(state)
    return trace_distance(truncated.matrix, block)
