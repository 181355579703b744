import numpy as np
import pytest

from greenvox import (LorentzPole, PermittivityModel, PrincipalValueQuadrature,
                      coupling_alpha_tilde, eval_eps, kk_residual, scaled_contrast)

SINGLE = PermittivityModel(poles=(LorentzPole(omega0=2.0, omegap=1.3, gamma=0.25),))
TWO_POLE = PermittivityModel(poles=(LorentzPole(omega0=1.2, omegap=0.9, gamma=0.15),
                                    LorentzPole(omega0=3.0, omegap=1.6, gamma=0.4)))
DRUDE = PermittivityModel(poles=(LorentzPole(omega0=0.0, omegap=1.5, gamma=0.3),))
VACUUM = PermittivityModel()


def test_pole_invariants():
    with pytest.raises(ValueError):
        LorentzPole(omega0=1.0, omegap=1.0, gamma=0.0)
    with pytest.raises(ValueError):
        LorentzPole(omega0=-1.0, omegap=1.0, gamma=0.1)
    with pytest.raises(ValueError):
        LorentzPole(omega0=1.0, omegap=-0.5, gamma=0.1)


def test_vacuum_is_unity():
    assert eval_eps(VACUUM, 0.7) == 1.0 + 0.0j


def test_high_frequency_limit():
    w = 1e6 * 2.0
    assert abs(eval_eps(SINGLE, w) - 1.0) < 1e-10


def test_single_pole_at_resonance_closed_form():
    p = SINGLE.poles[0]
    got = eval_eps(SINGLE, p.omega0)
    assert got == pytest.approx(1.0 + 1j * p.omegap**2 / (p.gamma * p.omega0), rel=1e-14)


def test_rejects_nonpositive_frequency():
    with pytest.raises(ValueError):
        eval_eps(SINGLE, 0.0)
    with pytest.raises(ValueError):
        eval_eps(SINGLE, -1.0)


def test_schwarz_reflection_of_closed_form():
    """Re eps even / Im eps odd for the closed form extended to -omega."""
    def eps_any_sign(model, w):
        e = 1.0 + 0.0j
        for p in model.poles:
            e += p.omegap**2 / (p.omega0**2 - w**2 - 1j * p.gamma * w)
        return e

    rng = np.random.default_rng(3)
    for w in rng.uniform(0.1, 6.0, size=20):
        plus = eval_eps(TWO_POLE, w)
        minus = eps_any_sign(TWO_POLE, -w)
        assert minus == pytest.approx(np.conj(plus), rel=1e-14)
        assert plus.imag > 0.0


def test_alpha_tilde_vacuum_and_roundtrip():
    assert coupling_alpha_tilde(VACUUM, 1.3) == 0.0
    rng = np.random.default_rng(11)
    for nu in rng.uniform(0.05, 8.0, size=25):
        a2 = coupling_alpha_tilde(TWO_POLE, nu) ** 2
        assert a2 * np.pi / (2 * nu) == pytest.approx(eval_eps(TWO_POLE, nu).imag, rel=1e-12)


def test_alpha_tilde_drude_closed_form():
    wp, g = 1.5, 0.3
    for nu in (0.2, 0.9, 3.7):
        expected = (2.0 / np.pi) * wp**2 * g * nu**2 / (nu**4 + g**2 * nu**2)
        assert coupling_alpha_tilde(DRUDE, nu) ** 2 == pytest.approx(expected, rel=1e-12)


def test_scaled_contrast_scales_eps_minus_one():
    for s in (0.5, 0.25, 0.0):
        scaled = scaled_contrast(TWO_POLE, s)
        for w in (0.4, 1.2, 2.9):
            assert eval_eps(scaled, w) - 1.0 == pytest.approx(
                s * (eval_eps(TWO_POLE, w) - 1.0), rel=1e-13, abs=1e-15)


def test_kk_vacuum_exact_zero():
    assert kk_residual(VACUUM, 1.0) == 0.0


def test_kk_single_pole_small_residual():
    lam = 1.7
    rel = kk_residual(SINGLE, lam) / abs(eval_eps(SINGLE, lam) - 1.0)
    assert rel < 1e-6


def test_kk_residual_decreases_under_refinement():
    lam = 2.4
    base = PrincipalValueQuadrature(n_nodes=8)
    quads = [base, base.refine(2), base.refine(4)]
    res = [kk_residual(TWO_POLE, lam, q) for q in quads]
    floor = 1e-13 * abs(eval_eps(TWO_POLE, lam) - 1.0)
    assert res[1] < res[0] or res[1] < floor
    assert res[2] < res[1] or res[2] < floor


def test_kk_residual_across_pole_configurations():
    corpus = [SINGLE, TWO_POLE, DRUDE,
              PermittivityModel(poles=(LorentzPole(0.5, 2.0, 0.05),)),
              PermittivityModel(poles=(LorentzPole(4.0, 0.3, 1.5),))]
    for model in corpus:
        for lam in (0.6, 1.9):
            rel = kk_residual(model, lam) / abs(eval_eps(model, lam) - 1.0)
            assert rel < 1e-6, f"{model} at {lam}: {rel}"


def test_pv_requires_bracketing():
    from greenvox.permittivity import principal_value_integral

    with pytest.raises(ValueError, match="bracket"):
        principal_value_integral(lambda x: 1.0 / (x - 5.0), 5.0, [0.0, 1.0])
