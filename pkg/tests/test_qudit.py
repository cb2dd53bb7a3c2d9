"""Qudit family, Gaussian targets, kappa exponent, classical register,
tomography, and the quantum-parameter witness."""

import math

import numpy as np
import pytest
from scipy.stats import norm

from popcode.channels import ModeParams
from popcode.metrics import closed_form_bures, closed_form_hellinger, trace_distance
from popcode.qudit import (
    GaussianLaw,
    GaussianTarget,
    IdealQlanChannel,
    KappaParams,
    QuditParametrization,
    _project_to_simplex,
    build_qudit_state,
    classical_amplify,
    classical_compress,
    classical_decode,
    kappa,
    kappa_certificate,
    pair_list,
    qlan_target,
    quantum_parameter_witness,
    spectrum_fisher_information,
    tomography_sim,
)

D2 = QuditParametrization(d=2, mu=np.array([0.7, 0.3]), xi=np.array([[0.4, -0.2]]))
D3 = QuditParametrization(
    d=3,
    mu=np.array([0.5, 0.3, 0.2]),
    xi=np.array([[0.3, 0.1], [-0.2, 0.4], [0.05, -0.15]]),
)


def _expm_taylor(h: np.ndarray, terms: int = 80) -> np.ndarray:
    out = np.eye(h.shape[0], dtype=complex)
    term = np.eye(h.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ (1j * h) / k
        out = out + term
    return out


def test_pair_list_order():
    assert pair_list(3) == ((1, 2), (1, 3), (2, 3))
    assert pair_list(2) == ((1, 2),)


def test_parametrization_validation():
    with pytest.raises(ValueError, match="decreasing"):
        QuditParametrization(d=2, mu=np.array([0.3, 0.7]), xi=np.zeros((1, 2)))
    with pytest.raises(ValueError, match="sum"):
        QuditParametrization(d=2, mu=np.array([0.8, 0.3]), xi=np.zeros((1, 2)))
    with pytest.raises(ValueError, match="shape"):
        QuditParametrization(d=3, mu=np.array([0.5, 0.3, 0.2]), xi=np.zeros((2, 2)))
    assert not D2.mu.flags.writeable


@pytest.mark.parametrize("param", [D2, D3])
def test_build_qudit_state_matches_taylor_oracle(param):
    rho = build_qudit_state(param)
    u = _expm_taylor(param.hamiltonian())
    oracle = (u * param.mu) @ u.conj().T
    assert np.max(np.abs(rho - oracle)) < 1e-12


def test_build_qudit_state_preserves_spectrum():
    rho = build_qudit_state(D3)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    eigs = np.sort(np.linalg.eigvalsh(rho))
    assert np.max(np.abs(eigs - np.sort(D3.mu))) < 1e-12


def test_spectrum_fisher_information_d2_closed_form():
    # with mu2 = 1 - mu1 the information is 1/(mu1 mu2), so V = mu1 mu2
    f = spectrum_fisher_information(np.array([0.7, 0.3]))
    assert f.shape == (1, 1)
    assert f[0, 0] == pytest.approx(1.0 / 0.21)
    v = np.linalg.inv(f)
    assert v[0, 0] == pytest.approx(0.21)


def test_spectrum_fisher_information_d3_inverse_property():
    f = spectrum_fisher_information(D3.mu)
    expected = np.diag([2.0, 1 / 0.3]) + 5.0
    assert np.max(np.abs(f - expected)) < 1e-12


# --- Gaussian target -------------------------------------------------------------


def test_qlan_target_mode_parameters():
    delta_xi = np.array([[0.4, 0.6]])  # (dR, dI)
    target = qlan_target(D2, (delta_xi, np.array([0.1])), n=10000)
    mode = target.mode_params[(1, 2)]
    root = math.sqrt(0.4)
    assert mode.alpha == pytest.approx(complex(0.6, 0.4) / (2 * root))
    assert mode.beta == pytest.approx(0.3 / 0.7)
    assert target.V[0, 0] == pytest.approx(0.21)
    assert target.delta_mu[0] == 0.1


def test_qlan_target_warns_outside_neighborhood():
    wide = np.array([[9.0, 0.0]])
    with pytest.warns(UserWarning, match="neighborhood"):
        qlan_target(D2, (wide, np.array([0.0])), n=100)


def test_qlan_target_validates_shapes():
    with pytest.raises(ValueError):
        qlan_target(D2, (np.zeros((2, 2)), np.array([0.0])), n=100)
    with pytest.raises(ValueError):
        qlan_target(D2, (np.zeros((1, 2)), np.array([0.0, 0.0])), n=100)


def test_ideal_qlan_channel_roundtrip():
    chan = IdealQlanChannel(theta0=D3, n=4096)
    delta_xi = np.array([[0.3, -0.4], [0.2, 0.1], [-0.5, 0.25]])
    delta_mu = np.array([0.05, -0.03])
    recovered_xi, recovered_mu = chan.backward(chan.forward((delta_xi, delta_mu)))
    assert np.max(np.abs(recovered_xi - delta_xi)) < 1e-12
    assert np.max(np.abs(recovered_mu - delta_mu)) < 1e-12


def test_gaussian_target_validates_covariance():
    with pytest.raises(ValueError):
        GaussianTarget(
            delta_mu=np.array([0.0]),
            V=np.array([[-1.0]]),
            mode_params={(1, 2): ModeParams(alpha=0.0, beta=0.4)},
        )


# --- kappa ------------------------------------------------------------------------


def _kappa_closed_form(x: float) -> float:
    # solving the three-plane program by hand: the eta > 0 floor binds up to
    # x = 2/21 where the value is 1/12; past it the B = C balance gives
    # eta = (42x - 4)/33 and value (17 - 63x)/132
    if x <= 2.0 / 21.0:
        return 1.0 / 12.0
    return (17.0 - 63.0 * x) / 132.0


def test_kappa_matches_closed_form_on_subgrid():
    for x in np.linspace(0.0, 2.0 / 9.0, 12, endpoint=False):
        assert kappa(float(x)) == pytest.approx(_kappa_closed_form(float(x)), abs=1e-9)


def test_kappa_certificate_is_feasible_and_achieves_value():
    cert = kappa_certificate(0.15)
    # KappaParams validates strict feasibility on construction
    assert isinstance(cert, KappaParams)
    assert cert.value() == kappa(0.15)
    assert (1.0 + cert.x) / 2.0 < cert.z < 1.0
    assert cert.y > 0.0
    assert cert.eta > max(0.0, cert.x - cert.y)


def test_kappa_domain_validation():
    with pytest.raises(ValueError):
        kappa(2.0 / 9.0)
    with pytest.raises(ValueError):
        kappa(-0.01)
    with pytest.raises(ValueError):
        KappaParams(x=0.1, y=0.1, z=0.5, eta=0.1)  # z below (1+x)/2


def test_kappa_non_increasing_locally():
    xs = [0.0, 0.05, 0.1, 0.15, 0.2]
    vals = [kappa(x) for x in xs]
    for lo, hi in zip(vals[1:], vals[:-1]):
        assert lo <= hi + 1e-6


# --- classical register -------------------------------------------------------------


def test_gaussian_law_validation():
    with pytest.raises(ValueError):
        GaussianLaw(mean=np.array([0.0]), cov=np.array([[0.0]]))
    with pytest.raises(ValueError):
        GaussianLaw(mean=np.array([0.0, 0.0]), cov=np.array([[1.0]]))


def test_classical_compress_cell_masses_match_quadrature():
    law = GaussianLaw(mean=np.array([1.0]), cov=np.array([[0.21]]))
    lattice = classical_compress(law, n=10000, delta=0.4)
    assert len(lattice.points) == 81
    assert float(lattice.probs.sum()) == pytest.approx(1.0, abs=1e-12)
    # independent quadrature of the normal density over three interior cells
    sd = math.sqrt(0.21)
    h = lattice.spacing
    for idx in (30, 40, 50):
        c = lattice.points[idx, 0]
        xs = np.linspace(c - h / 2, c + h / 2, 2001)
        mass = np.trapezoid(norm.pdf(xs, 1.0, sd), xs)
        assert lattice.probs[idx] == pytest.approx(mass, abs=1e-9)


def test_classical_compress_memory_bits():
    law = GaussianLaw(mean=np.array([0.0]), cov=np.array([[1.0]]))
    lattice = classical_compress(law, n=10000, delta=0.4)
    assert lattice.memory_bits == pytest.approx(math.log2(81))


def test_classical_compress_requires_diagonal_covariance():
    law = GaussianLaw(
        mean=np.zeros(2), cov=np.array([[1.0, 0.5], [0.5, 1.0]])
    )
    with pytest.raises(ValueError, match="diagonal"):
        classical_compress(law, n=100, delta=0.4)


def test_classical_compress_rejects_oversized_lattice():
    law = GaussianLaw(mean=np.zeros(2), cov=np.eye(2))
    with pytest.raises(ValueError, match="cap"):
        classical_compress(law, n=10**8, delta=0.5)


def test_compress_decode_total_variation(rng):
    # TV between N(1, 0.21) and the decode of its compression, by quadrature
    # of the two densities over each lattice cell
    law = GaussianLaw(mean=np.array([1.0]), cov=np.array([[0.21]]))
    lattice = classical_compress(law, n=10000, delta=0.4)
    sd = math.sqrt(0.21)
    h = lattice.spacing
    tv = 0.0
    covered = 0.0
    for c, p in zip(lattice.points[:, 0], lattice.probs):
        xs = np.linspace(c - h / 2, c + h / 2, 201)
        diff = np.abs(p / h - norm.pdf(xs, 1.0, sd))
        tv += np.trapezoid(diff, xs)
        covered += np.trapezoid(norm.pdf(xs, 1.0, sd), xs)
    tv = 0.5 * (tv + (1.0 - covered))
    assert tv <= 0.05
    # and a Monte-Carlo sanity check of the actual decode draw
    idx = rng.choice(len(lattice.probs), size=4000, p=lattice.probs)
    draws = np.array(
        [classical_decode(lattice.points[i], 10000, 0.4, rng)[0] for i in idx]
    )
    assert draws.mean() == pytest.approx(1.0, abs=0.05)
    assert draws.std() == pytest.approx(sd, abs=0.05)


def test_classical_decode_stays_in_cell(rng):
    half = 0.5 * 10000.0 ** (-0.2)
    for _ in range(200):
        out = classical_decode(np.array([0.3, -0.2]), 10000, 0.4, rng)
        assert np.max(np.abs(out - np.array([0.3, -0.2]))) <= half


def test_classical_amplify_gaussian():
    law = GaussianLaw(mean=np.array([1.0]), cov=np.array([[0.21]]))
    same = classical_amplify(law, 1.0)
    assert same.mean[0] == 1.0 and same.cov[0, 0] == 0.21
    amped = classical_amplify(law, 1.1)
    assert amped.mean[0] == pytest.approx(math.sqrt(1.1))
    assert amped.cov[0, 0] == pytest.approx(0.231)


def test_classical_amplify_lattice():
    law = GaussianLaw(mean=np.array([0.0]), cov=np.array([[1.0]]))
    lattice = classical_compress(law, n=400, delta=0.4)
    amped = classical_amplify(lattice, 1.21)
    assert amped.spacing == pytest.approx(1.1 * lattice.spacing)
    assert np.max(np.abs(amped.points - 1.1 * lattice.points)) < 1e-12
    assert np.array_equal(amped.probs, lattice.probs)
    assert amped.memory_bits == lattice.memory_bits
    with pytest.raises(ValueError):
        classical_amplify(lattice, 0.5)
    with pytest.raises(TypeError):
        classical_amplify(np.zeros(3), 1.1)


# --- tomography --------------------------------------------------------------------


def test_project_to_simplex_properties(rng):
    for _ in range(50):
        v = rng.normal(size=6) * 3.0
        p = _project_to_simplex(v)
        assert p.min() >= 0.0
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        # variational inequality of the Euclidean projection
        q = rng.dirichlet(np.ones(6))
        assert float((v - p) @ (q - p)) <= 1e-9
    already = np.array([0.2, 0.3, 0.5])
    assert np.max(np.abs(_project_to_simplex(already) - already)) < 1e-12


def test_tomography_recovers_pure_qubit(rng):
    psi = np.array([1.0, 1.0]) / math.sqrt(2.0)
    rho = np.outer(psi, psi.conj())
    dists = []
    for _ in range(20):
        est = tomography_sim(rho, 100000, rng)
        assert np.trace(est).real == pytest.approx(1.0, abs=1e-9)
        assert np.linalg.eigvalsh(est).min() >= -1e-12
        dists.append(trace_distance(est, rho))
    assert max(dists) < 0.02


def test_tomography_recovers_qutrit(rng):
    rho = build_qudit_state(D3)
    est = tomography_sim(rho, 400000, rng)
    assert trace_distance(est, rho) < 0.02


def test_tomography_requires_enough_copies(rng):
    with pytest.raises(ValueError, match="copies"):
        tomography_sim(np.eye(2) / 2.0, 3, rng)


# --- witness ------------------------------------------------------------------------


def _witness_oracle(s: float) -> float:
    amp = abs(s) / (2.0 * math.sqrt(0.4))
    beta = 0.3 / 0.7
    gap = closed_form_hellinger(amp, beta) - closed_form_bures(amp, beta)
    return 0.125 * gap * gap


@pytest.mark.parametrize(
    "s,pinned",
    [(0.5, 3.457761e-6), (1.0, 1.197239e-5), (2.0, 2.668334e-5)],
)
def test_witness_matches_closed_form(s, pinned):
    val = quantum_parameter_witness(D2, s)
    assert val == pytest.approx(_witness_oracle(s), abs=1e-10)
    assert val == pytest.approx(pinned, rel=1e-5)


def test_witness_increasing_in_shift():
    vals = [quantum_parameter_witness(D2, s) for s in (0.5, 1.0, 2.0)]
    assert vals[0] < vals[1] < vals[2]


def test_witness_symmetries():
    plus = quantum_parameter_witness(D2, 1.0, component="R")
    minus = quantum_parameter_witness(D2, -1.0, component="R")
    imag = quantum_parameter_witness(D2, 1.0, component="I")
    assert plus == minus
    assert plus == imag


def test_witness_classical_perturbation_is_zero():
    assert quantum_parameter_witness(D2, 1.0, component="mu") == 0.0
    assert quantum_parameter_witness(D2, 0.0) == 0.0


def test_witness_validates_pair_and_component():
    with pytest.raises(ValueError):
        quantum_parameter_witness(D2, 1.0, pair=(2, 1))
    with pytest.raises(ValueError):
        quantum_parameter_witness(D2, 1.0, component="X")
    # any pair follows the same closed form with its own gap and ratio
    for j, k in pair_list(3):
        amp = 1.0 / (2.0 * math.sqrt(D3.mu[j - 1] - D3.mu[k - 1]))
        beta = D3.mu[k - 1] / D3.mu[j - 1]
        gap = closed_form_hellinger(amp, beta) - closed_form_bures(amp, beta)
        assert quantum_parameter_witness(D3, 1.0, pair=(j, k)) == pytest.approx(
            0.125 * gap * gap, abs=1e-10
        )
