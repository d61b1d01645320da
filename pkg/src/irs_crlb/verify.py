"""Self-checks comparing the analytic routines against independent oracles."""

from dataclasses import dataclass

import numpy as np

from .fisher import assemble_full_fim, fim_blocks, fim_from_h, fim_oracle, no_irs_fim, scene_mean_fn
from .geometry import ChannelSet
from .optimizer import DesignProblem, penalized_gradient, penalized_objective
from .signal_model import RadarParams, TargetParams


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    error: float
    tolerance: float

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<40s} max error {self.error:.3e} (tol {self.tolerance:.0e})"


def random_scene(rng, k, n, m=None):
    """Random well-scaled scene with ``k`` IRS paths and ``n`` pulses.

    Dopplers are spread over ``[-0.5, 0.5)`` with a minimum gap so the FIM is
    comfortably nonsingular.
    """
    radar = RadarParams(n, waveform=np.exp(1j * rng.uniform(0, 2 * np.pi, n)) * rng.uniform(0.5, 1.5, n))
    h = (rng.standard_normal(k + 1) + 1j * rng.standard_normal(k + 1)) / np.sqrt(2)
    h = h / np.abs(h) * rng.uniform(0.5, 2.0, k + 1)
    alpha = (rng.standard_normal(k + 1) + 1j * rng.standard_normal(k + 1)) / np.sqrt(2)
    alpha = alpha / np.abs(alpha) * rng.uniform(0.5, 2.0, k + 1)
    while True:
        nu = rng.uniform(-0.5, 0.5, k + 1)
        if k == 0 or np.min(np.diff(np.sort(nu))) > 0.6 / (k + 1):
            break
    return radar, ChannelSet.from_vector(h), TargetParams(alpha, nu)


def relative_entry_error(a, b):
    """``max |a_ij - b_ij| / sqrt(b_ii b_jj)``: entrywise error on the correlation scale."""
    d = np.sqrt(np.abs(np.diag(b)))
    return float(np.max(np.abs(a - b) / np.outer(d, d)))


def check_fim_oracle(seed=0, sizes=((1, 8), (2, 16), (3, 16)), sigma2=0.5, tol=1e-6):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k, n in sizes:
        radar, channels, target = random_scene(rng, k, n)
        analytic = assemble_full_fim(fim_blocks(radar, channels, target, sigma2))
        oracle = fim_oracle(scene_mean_fn(radar, channels), sigma2, target.zeta)
        worst = max(worst, relative_entry_error(analytic, oracle))
    return CheckResult("FIM vs finite-difference Slepian-Bangs", worst <= tol, worst, tol)


def check_fim_from_h(seed=1, count=10, tol=1e-10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        k = int(rng.integers(1, 4))
        radar, channels, target = random_scene(rng, k, 16)
        sigma2 = float(rng.uniform(0.1, 2.0))
        ref = fim_blocks(radar, channels, target, sigma2)
        alt = fim_from_h(channels, radar, target.alpha, target.nu, sigma2)
        for a, b in ((alt.f_aa, ref.f_aa), (alt.f_nn, ref.f_nn)):
            worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
    return CheckResult("channel-form FIM vs sensing-matrix FIM", worst <= tol, worst, tol)


def check_no_irs(tol=1e-12):
    f_aa0, _ = no_irs_fim(RadarParams(8), 1.0, 1.0, 0.13, 1.0)
    _, f_nn0 = no_irs_fim(RadarParams(4), 1.0, 1.0, -0.2, 1.0)
    err = max(float(np.max(np.abs(f_aa0 - 16 * np.eye(2)))), abs(f_nn0 - 28.0))
    return CheckResult("no-IRS closed forms", err <= tol, err, tol)


def random_problem(rng, k, m, n=16):
    radar, channels, target = random_scene(rng, k, n)
    couplings = []
    for _ in range(k):
        u = np.exp(1j * rng.uniform(0, 2 * np.pi, m))
        couplings.append(np.outer(u, u))
    return DesignProblem(radar, channels.h_los, couplings, target.alpha, target.nu, float(rng.uniform(0.2, 2.0)))


def gradient_error(problem, h, phases, eta, step=1e-6):
    """Relative error of the analytic penalized-objective gradient against central differences."""
    grad_h, grad_ph = penalized_gradient(h, phases, eta, problem)
    analytic = np.concatenate((grad_h.real, grad_h.imag, grad_ph.ravel()))

    def g(hh, pp):
        return penalized_objective(hh, pp, eta, problem, include_los=False)

    numeric = []
    for part in (1.0, 1j):
        for k in range(1, h.size):
            dh = np.zeros_like(h)
            dh[k] = step * part
            numeric.append((g(h + dh, phases) - g(h - dh, phases)) / (2 * step))
    for idx in np.ndindex(phases.shape):
        dp = np.zeros_like(phases)
        dp[idx] = step
        numeric.append((g(h, phases + dp) - g(h, phases - dp)) / (2 * step))
    numeric = np.array(numeric)
    return float(np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric))


def check_gradients(seed=2, count=20, tol=1e-5):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        k = int(rng.integers(1, 4))
        m = int(rng.integers(1, 6))
        problem = random_problem(rng, k, m)
        phases = rng.uniform(0, 2 * np.pi, (k, m))
        h = problem.full_h(problem.consistent_h(phases) + 0.3 * (rng.standard_normal(k) + 1j * rng.standard_normal(k)))
        eta = rng.uniform(0.1, 2.0, k)
        worst = max(worst, gradient_error(problem, h, phases, eta))
    return CheckResult("penalized-objective gradients", worst <= tol, worst, tol)


def run_all():
    return [check_no_irs(), check_fim_oracle(), check_fim_from_h(), check_gradients()]
