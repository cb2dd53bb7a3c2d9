"""Protocol simulator: ledgers, lattices, determinism, and error budgets."""

import math

import numpy as np
import pytest

from popcode.channels import ModeParams
from popcode.fock import CutoffError
from popcode.protocols import (
    MemoryLedger,
    ParamRanges,
    ProtocolConfig,
    RunResult,
    _Lattice1D,
    case_param_counts,
    error_budget,
    ledger_for,
    run_case,
)
from popcode.thermal_codec import exact_codec_error


def _config(case, n, delta=0.3, alpha=0.3 + 0.0j, beta=0.2, mc=25, seed=7, **kw):
    return ProtocolConfig(
        case=case,
        n=n,
        delta=delta,
        true_params=ModeParams(alpha=alpha, beta=beta),
        mc_samples=mc,
        seed=seed,
        **kw,
    )


# --- parameter counting and ledgers -------------------------------------------


def test_case_param_counts():
    expected = {0: 0, 1: 1, 2: 2, 3: 3, 4: 1, 5: 2, 6: 1, 7: 2}
    for case, f in expected.items():
        assert case_param_counts(case) == f
    with pytest.raises(ValueError):
        case_param_counts(8)


@pytest.mark.parametrize("n", [100, 10000])
@pytest.mark.parametrize("delta", [0.1, 0.3])
def test_ledger_bit_formulas(n, delta):
    bits = math.log2(n)
    expected = {
        0: (0.0, 0.0),
        1: ((0.5 + delta) * bits, 0.0),
        2: (bits, 2 * delta * bits),
        3: ((1.5 + delta) * bits, 2 * delta * bits),
        4: (0.5 * bits, delta * bits),
        5: ((1.0 + delta) * bits, delta * bits),
        6: (0.5 * bits, delta * bits),
        7: ((1.0 + delta) * bits, delta * bits),
    }
    for case, (cbits, qubits) in expected.items():
        ledger = ledger_for(case, n, delta)
        assert ledger.cbits == pytest.approx(cbits, abs=1e-12)
        assert ledger.qubits == pytest.approx(qubits, abs=1e-12)
        assert ledger.total_bits == pytest.approx(cbits + qubits, abs=1e-12)
        assert set(ledger.breakdown) == {
            "cbits.estimate",
            "cbits.codec",
            "qubits.truncation",
        }


def test_ledger_ceilings():
    ledger = ledger_for(2, 10000, 0.3)
    assert ledger.cbits_ceil == 14  # log2(10^4) = 13.2877
    assert ledger.qubits_ceil == 8  # 2 * 0.3 * 13.2877 = 7.9726
    exact = ledger_for(2, 1024, 0.5)  # cbits = 10 exactly
    assert exact.cbits_ceil == 10


def test_memory_ledger_validates_breakdown():
    with pytest.raises(ValueError, match="breakdown"):
        MemoryLedger(cbits=1.0, qubits=0.0, breakdown={"cbits.estimate": 2.0})
    with pytest.raises(ValueError):
        MemoryLedger(cbits=1.0, qubits=0.0, breakdown={"cbits.estimate": -1.0})


# --- configuration validation ---------------------------------------------------


def test_protocol_config_validation():
    with pytest.raises(ValueError, match="case"):
        _config(9, 100)
    with pytest.raises(ValueError, match="n must"):
        _config(2, 1)
    with pytest.raises(ValueError, match="delta"):
        _config(2, 100, delta=0.0)
    with pytest.raises(ValueError, match="delta"):
        _config(2, 100, delta=1.0)
    with pytest.raises(ValueError, match="alpha_max"):
        _config(2, 100, alpha=2.0)
    with pytest.raises(ValueError, match="cutoff"):
        _config(2, 100, cutoff=4)
    with pytest.raises(ValueError, match="mc_samples"):
        _config(2, 100, mc=0)
    with pytest.raises(ValueError, match="seed"):
        _config(2, 100, seed=-1)
    with pytest.raises(ValueError, match="beta_max"):
        _config(2, 100, beta=0.97)


def test_param_ranges_widen_alpha():
    cfg = ProtocolConfig(
        case=2,
        n=100,
        delta=0.3,
        true_params=ModeParams(alpha=2.0, beta=0.2),
        param_ranges=ParamRanges(alpha_max=2.5),
    )
    assert cfg.param_ranges.alpha_max == 2.5


@pytest.mark.parametrize("case", [2, 4, 6])
@pytest.mark.parametrize("n", [100, 10000, 65536])
def test_gamma_compensates_tap_exactly(case, n):
    cfg = _config(case, n)
    tapped = float(n) ** cfg.tap_exponent
    assert cfg.gamma * (n - tapped) == pytest.approx(n, rel=1e-13)


def test_tap_exponent_and_truncation_by_family():
    full = _config(2, 10000, delta=0.3)
    assert full.tap_exponent == pytest.approx(0.7)
    assert full.truncation_k == int(10000**0.6)
    single = _config(4, 10000, delta=0.3)
    assert single.tap_exponent == pytest.approx(0.85)
    assert single.truncation_k == int(10000**0.3)
    assert full.window_radius == pytest.approx(10000.0 ** (-0.5 + 0.225))


# --- lattice rounding -----------------------------------------------------------


def test_lattice_rounds_to_cell_centers():
    lat = _Lattice1D(lo=-1.0, h=0.5, cells=4)
    assert lat.round(-0.9) == pytest.approx(-0.75)
    assert lat.round(-0.3) == pytest.approx(-0.25)
    assert lat.round(0.3) == pytest.approx(0.25)
    assert lat.round(0.9) == pytest.approx(0.75)


def test_lattice_boundary_goes_to_smaller_index():
    lat = _Lattice1D(lo=0.0, h=1.0, cells=4)
    assert lat.round(1.0) == pytest.approx(0.5)
    assert lat.round(1.0 + 1e-12) == pytest.approx(1.5)


def test_lattice_clamps_out_of_range():
    lat = _Lattice1D(lo=0.0, h=1.0, cells=4)
    assert lat.round(-5.0) == pytest.approx(0.5)
    assert lat.round(9.0) == pytest.approx(3.5)


def test_lattice_wraps_when_periodic():
    lat = _Lattice1D(lo=0.0, h=0.25 * 2 * math.pi, cells=4, wrap=True)
    assert lat.round(2 * math.pi + 0.1) == lat.round(0.1)
    assert lat.round(-0.1) == lat.round(2 * math.pi - 0.1)


def test_lattice_negation_symmetry():
    lat = _Lattice1D(lo=-1.5, h=0.3, cells=10)
    for v in (-1.4, -0.7, 0.01, 0.44, 1.3):
        assert lat.round(-v) == pytest.approx(-lat.round(v))


# --- run_case ------------------------------------------------------------------


def test_case_zero_is_free_and_errorless():
    result = run_case(_config(0, 100, alpha=0.0, beta=0.2))
    assert result.epsilon_hat == 0.0
    assert result.epsilon_stderr == 0.0
    assert result.ledger.cbits == 0.0
    assert result.ledger.qubits == 0.0


def test_case_one_equals_exact_codec_error():
    cfg = _config(1, 4096, alpha=0.0, beta=0.3, delta=0.2)
    result = run_case(cfg)
    assert result.epsilon_hat == exact_codec_error(4096, 0.3, 0.2)
    assert result.epsilon_stderr == 0.0
    assert result.diagnostics["codec_error"] == result.epsilon_hat


def test_run_case_deterministic():
    a = run_case(_config(2, 400, mc=20))
    b = run_case(_config(2, 400, mc=20))
    assert a.epsilon_hat == b.epsilon_hat
    assert a.epsilon_stderr == b.epsilon_stderr
    assert dict(a.diagnostics) == dict(b.diagnostics)


def test_run_case_seed_changes_draws():
    a = run_case(_config(2, 100, mc=20, seed=1))
    b = run_case(_config(2, 100, mc=20, seed=2))
    assert a.epsilon_hat != b.epsilon_hat


def test_phase_rotation_invariance_case_two():
    # a quarter-turn maps the square lattice onto itself, so every draw's
    # error is identical
    a = run_case(_config(2, 400, alpha=0.3 + 0.0j, mc=15))
    b = run_case(_config(2, 400, alpha=0.3j, mc=15))
    assert a.epsilon_hat == pytest.approx(b.epsilon_hat, abs=1e-13)


def test_phase_rotation_invariance_case_four():
    cfg = _config(4, 400, alpha=0.5 + 0.0j, mc=15)
    cells = math.ceil(math.sqrt(400))
    step = 2.0 * math.pi / cells
    rotated = 0.5 * complex(math.cos(step), math.sin(step))
    a = run_case(cfg)
    b = run_case(_config(4, 400, alpha=rotated, mc=15))
    assert a.epsilon_hat == pytest.approx(b.epsilon_hat, abs=1e-13)


def test_epsilon_decreases_with_n_case_two():
    eps = [run_case(_config(2, n, mc=30)).epsilon_hat for n in (100, 1000)]
    assert eps[0] > eps[1]


def test_beta_unknown_cases_track_beta_hat():
    result = run_case(_config(3, 400, mc=25))
    assert "beta_hat_mean" in result.diagnostics
    assert result.diagnostics["beta_hat_mean"] == pytest.approx(0.2, abs=0.05)
    assert result.diagnostics["codec_error"] == exact_codec_error(399, 0.2, 0.3)
    known = run_case(_config(2, 400, mc=25))
    assert "beta_hat_mean" not in known.diagnostics


def test_beta_estimator_variance_predictions_reported():
    result = run_case(_config(3, 400, mc=60))
    beta, samples = 0.2, 399
    geo = result.diagnostics["beta_var_predicted_geometric"]
    alt = result.diagnostics["beta_var_predicted_displayed"]
    assert geo == beta * (1.0 - beta) ** 2 / samples
    assert alt == beta * (1.0 - beta) ** 3 / ((beta * beta + 1.0) * samples)
    # the empirical spread should be on the scale of one of the predictions,
    # which differ from each other by (b^2+1)/(1-b)
    empirical = result.diagnostics["beta_hat_std"] ** 2
    assert 0.3 * alt < empirical < 3.0 * geo


def test_radial_case_runs_and_reports():
    result = run_case(_config(6, 400, alpha=0.5, mc=20))
    assert 0.0 <= result.epsilon_hat <= 1.0
    assert result.diagnostics["frame_cutoff_max"] >= 32


def test_forced_small_cutoff_raises():
    with pytest.raises(CutoffError):
        run_case(_config(2, 10000, mc=3, cutoff=8))


def test_run_result_validation():
    ledger = ledger_for(0, 100, 0.3)
    with pytest.raises(ValueError):
        RunResult(epsilon_hat=1.5, epsilon_stderr=0.0, ledger=ledger, diagnostics={})
    with pytest.raises(ValueError):
        RunResult(epsilon_hat=0.5, epsilon_stderr=-0.1, ledger=ledger, diagnostics={})


def test_run_ledger_matches_formula():
    result = run_case(_config(2, 10000, mc=2))
    assert result.ledger.cbits == pytest.approx(math.log2(10000), abs=1e-12)
    assert result.ledger.qubits == pytest.approx(0.6 * math.log2(10000), abs=1e-12)


# --- error budget ----------------------------------------------------------------


@pytest.mark.parametrize("case", [2, 4, 6])
def test_budget_bounds_measured_error(case):
    cfg = _config(case, 1000, mc=40)
    result = run_case(cfg)
    budget = error_budget(cfg)
    assert budget["total"] >= result.epsilon_hat - 3.0 * result.epsilon_stderr


def test_budget_bounds_measured_error_with_codec():
    cfg = _config(5, 400, mc=30)
    result = run_case(cfg)
    budget = error_budget(cfg)
    assert budget["total"] >= result.epsilon_hat - 3.0 * result.epsilon_stderr
    assert budget["codec"] == exact_codec_error(399, 0.2, 0.3)
    assert budget["mle_tail"] > 0.0
    assert budget["mle_shift"] > 0.0


def test_budget_labels_and_trivial_cases():
    keys = {
        "heterodyne_tail",
        "amplifier",
        "truncation",
        "codec",
        "mle_tail",
        "mle_shift",
        "total",
    }
    assert set(error_budget(_config(2, 1000))) == keys
    free = error_budget(_config(0, 1000, alpha=0.0))
    assert free["total"] == 0.0
    codec_only = error_budget(_config(1, 1000, alpha=0.0, beta=0.3))
    assert codec_only["total"] == codec_only["codec"]
    assert codec_only["amplifier"] == 0.0
