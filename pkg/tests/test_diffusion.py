import numpy as np
import pytest

from duomod.diffusion import (
    AnalyticGaussianDenoiser,
    NoiseSchedule,
    ddpm_step,
    estimate_clean,
    eps_to_score,
    forward_diffuse,
    make_schedule,
    reverse_chain,
)
from duomod.errors import BadStepCount, ShapeMismatch
from duomod.rng import stream


def test_minimal_linear_schedule():
    s = make_schedule(2, "linear")
    assert s.alpha_bar.shape == (2,)
    assert s.alpha_bar[1] < s.alpha_bar[0] < 1.0


def test_cosine_schedule_terminal_mass():
    s = make_schedule(50, "cosine")
    assert s.alpha_bar_at(50) < 0.01
    assert s.alpha_bar_at(0) == 1.0
    assert s.alpha_bar_at(1) > 0.99


def test_linear_schedule_matches_running_product():
    s = make_schedule(50, "linear")
    betas = np.linspace(1e-4, 0.02, 50)
    prod = 1.0
    for b in betas:
        prod *= 1.0 - b
    assert abs(s.alpha_bar_at(50) - prod) < 1e-15


def test_schedule_rejects_bad_T():
    with pytest.raises(BadStepCount):
        make_schedule(1, "linear")
    with pytest.raises(BadStepCount):
        make_schedule(10, "nope")


def test_strided_subschedule_consistency():
    s = make_schedule(50, "cosine")
    sub = s.strided(10)
    assert sub.T == 10
    assert sub.base_step(10) == 50
    assert sub.base_step(1) == 1
    for j in range(1, 11):
        assert abs(sub.alpha_bar_at(j) - s.alpha_bar_at(sub.base_step(j))) < 1e-12


def test_forward_diffuse_identity_at_t0():
    s = make_schedule(50, "cosine")
    x0 = np.array([1.0, -2.0, 3.0])
    out = forward_diffuse(x0, 0, np.ones(3), s)
    assert np.allclose(out, x0, atol=1e-15)


def test_forward_diffuse_zero_noise():
    s = make_schedule(50, "cosine")
    x0 = np.array([1.0, -2.0, 3.0])
    t = 20
    out = forward_diffuse(x0, t, np.zeros(3), s)
    assert np.allclose(out, np.sqrt(s.alpha_bar_at(t)) * x0, atol=1e-15)


def test_forward_diffuse_moments_monte_carlo():
    s = make_schedule(50, "cosine")
    rng = stream(3, "fd-mc")
    t = 25
    x0 = 0.7
    n = 100_000
    eps = rng.standard_normal(n)
    samples = forward_diffuse(np.full(n, x0), t, eps, s)
    ab = s.alpha_bar_at(t)
    se_mean = np.sqrt(1.0 - ab) / np.sqrt(n)
    assert abs(samples.mean() - np.sqrt(ab) * x0) < 3 * se_mean
    assert abs(samples.var() - (1.0 - ab)) < 0.02


def test_forward_diffuse_shape_mismatch():
    s = make_schedule(10, "linear")
    with pytest.raises(ShapeMismatch):
        forward_diffuse(np.zeros(3), 5, np.zeros(4), s)


def test_ddpm_step_exact_inversion_at_t1():
    s = make_schedule(50, "cosine")
    rng = stream(5, "ddpm-inv")
    x0 = rng.standard_normal(8)
    eps = rng.standard_normal(8)
    x1 = forward_diffuse(x0, 1, eps, s)
    rec = ddpm_step(x1, eps, 1, s, np.zeros(8))
    assert np.abs(rec - x0).max() < 1e-6


def test_ddpm_zero_noise_is_deterministic():
    s = make_schedule(50, "cosine").strided(10)
    den = AnalyticGaussianDenoiser(mean=np.zeros(4), std=1.0, schedule=s)

    def run(seed):
        rng = stream(seed, "det")
        x = rng.standard_normal(4)
        for t in range(s.T, 0, -1):
            x = ddpm_step(x, den(x, t), t, s, np.zeros(4))
        return x

    assert np.array_equal(run(9), run(9))


def test_full_reverse_chain_matches_target_gaussian():
    s = make_schedule(50, "cosine")
    den = AnalyticGaussianDenoiser(mean=np.zeros(1), std=1.0, schedule=s)
    rng = stream(7, "chain-mc")
    n = 10_000
    samples = reverse_chain(lambda x, t: den(x, t), (n, 1), s, rng).ravel()
    assert abs(samples.mean()) < 4.0 / np.sqrt(n)
    assert abs(samples.var() - 1.0) < 0.1


def test_eps_to_score_zero_and_linearity():
    s = make_schedule(50, "cosine")
    assert np.allclose(eps_to_score(np.zeros(5), 10, s), 0.0)
    rng = stream(11, "score-lin")
    eps = rng.standard_normal(5)
    assert np.allclose(eps_to_score(3.0 * eps, 10, s), 3.0 * eps_to_score(eps, 10, s), atol=1e-15)


def test_eps_to_score_matches_perturbed_gaussian_score():
    s = make_schedule(50, "cosine")
    rng = stream(13, "score-analytic")
    m, sd = 0.4, 0.7
    den = AnalyticGaussianDenoiser(mean=np.full(6, m), std=sd, schedule=s)
    for t in range(1, 51):
        x = rng.standard_normal(6)
        score = eps_to_score(den(x, t), t, s)
        ab = s.alpha_bar_at(t)
        expected = -(x - np.sqrt(ab) * m) / (ab * sd**2 + 1.0 - ab)
        assert np.abs(score - expected).max() < 1e-9


def test_estimate_clean_inverts_forward():
    s = make_schedule(50, "cosine")
    rng = stream(17, "clean-inv")
    for _ in range(1000):
        t = int(rng.integers(1, 51))
        x0 = rng.standard_normal(4)
        eps = rng.standard_normal(4)
        x_t = forward_diffuse(x0, t, eps, s)
        rec = estimate_clean(x_t, eps, t, s)
        assert np.abs(rec - x0).max() < 1e-6


def test_estimate_clean_zero_eps():
    s = make_schedule(50, "cosine")
    x = np.array([2.0, -1.0])
    t = 30
    assert np.allclose(estimate_clean(x, np.zeros(2), t, s),
                       x / np.sqrt(s.alpha_bar_at(t)), atol=1e-15)
