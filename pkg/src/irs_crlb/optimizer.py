"""Doppler-aware IRS phase design by penalized alternating optimization.

The surrogate ``f(h) = Tr(F_aa^-1) + Tr(F_nn^-1)`` is minimized over the
channel vector ``h`` with the coupling ``h_k = v_k^T S_k v_k`` relaxed into a
quadratic penalty. The penalty weights follow a continuation schedule until
the coupling residual drops below ``residual_eps``.

The reflectivity part of the surrogate factors as
``sigma2 * sum_k [G^-1]_kk / |h_k|^2``. The LoS term of that sum does not
depend on the design and is usually many orders of magnitude larger than the
rest (LoS path loss ~1e-13), so the optimizer works on the design-dependent
part only; :func:`surrogate_objective` still reports the full value.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
import logging

import numpy as np

from .errors import InvalidArgumentError, InvalidStateError, NonConvergenceError
from .fisher import MAX_CONDITION, assemble_full_fim, crlb, equilibrated_inverse, fim_blocks, gram_matrices
from .geometry import TWO_PI, ChannelSet
from .signal_model import NoiseModel, TargetParams

logger = logging.getLogger(__name__)

BARRIER = 1e30


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs of the alternating optimization.

    ``penalty_init`` is dimensionless: the initial weight of panel k is
    ``penalty_init * f0 / gmax_k^2`` where ``f0`` is the design-dependent
    objective at the starting point and ``gmax_k`` the largest gain panel k
    can reach. This keeps the schedule independent of noise level and units.
    """

    max_outer_iters: int = 20
    inner_max_iters: int = 200
    inner_grad_tol: float = 1e-9
    residual_eps: float = 1e-6
    penalty_init: float = 1e-2
    penalty_growth: float = 10.0
    penalty_rounds: int = 12
    seed: int = 0
    restarts: int = 4
    armijo_slope: float = 1e-4
    armijo_shrink: float = 0.5
    stall_rtol: float = 1e-10
    polish_iters: int = 500

    def __post_init__(self):
        if min(self.inner_grad_tol, self.residual_eps, self.penalty_init) <= 0:
            raise InvalidArgumentError("tolerances and initial penalty must be positive")
        if self.penalty_growth <= 1:
            raise InvalidArgumentError("penalty_growth must exceed 1")
        if self.restarts < 1 or self.max_outer_iters < 1 or self.penalty_rounds < 1:
            raise InvalidArgumentError("iteration counts must be >= 1")


@dataclass(frozen=True)
class DesignProblem:
    """Everything the phase design needs: radar, LoS gain, couplings and target.

    ``couplings[k]`` is the ``M x M`` matrix ``S`` of IRS ``k + 1``.
    """

    radar: object
    h_los: complex
    couplings: tuple
    alpha: np.ndarray
    nu: np.ndarray
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(np.asarray(s, dtype=complex) for s in self.couplings))
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=complex).ravel())
        object.__setattr__(self, "nu", np.asarray(self.nu, dtype=float).ravel())
        if self.alpha.size != self.irs_count + 1 or self.nu.size != self.irs_count + 1:
            raise InvalidArgumentError("alpha and nu need one entry per path")
        if self.sigma2 <= 0:
            raise InvalidArgumentError("sigma2 must be positive")

    @property
    def irs_count(self):
        return len(self.couplings)

    @cached_property
    def _grams(self):
        g, g_dot = gram_matrices(self.radar, self.nu)
        # constant diagonal sum |x_i|^2, so G is already equilibrated
        if np.linalg.cond(g) > MAX_CONDITION:
            return g, g_dot, None
        return g, g_dot, np.diag(np.linalg.inv(g)).real

    @cached_property
    def max_gains(self):
        """``(sum_m |u_m|)^2`` per panel, the largest reachable ``|v^T S v|``."""
        return np.array([np.sum(np.sqrt(np.abs(np.diag(s)))) ** 2 for s in self.couplings])

    def with_sigma2(self, sigma2):
        return DesignProblem(self.radar, self.h_los, self.couplings, self.alpha, self.nu, sigma2)

    def full_h(self, h_nlos):
        return np.concatenate(([self.h_los], np.asarray(h_nlos, dtype=complex)))

    def consistent_h(self, phases):
        """NLoS gains ``v_k^T S_k v_k`` implied by ``phases`` (shape ``K x M``)."""
        return np.array([_quad(np.exp(1j * np.asarray(ph)), s) for ph, s in zip(phases, self.couplings)])

    def los_offset(self):
        _, _, g_inv_diag = self._grams
        if g_inv_diag is None:
            return BARRIER
        return self.sigma2 * g_inv_diag[0] / abs(self.h_los) ** 2


def _quad(v, s):
    return complex(v @ s @ v)


@dataclass
class OptimizerState:
    h: np.ndarray
    phases: np.ndarray
    eta: np.ndarray
    scale: float
    objective_trace: list = field(default_factory=list)
    trace_rounds: list = field(default_factory=list)
    residual: float = np.inf


@dataclass(frozen=True)
class DesignResult:
    optimal_phases: np.ndarray
    achieved_surrogate: float
    achieved_trace_crlb: float
    constraint_residual: float
    iterations_used: int
    converged: bool = True
    objective_trace: tuple = ()
    trace_rounds: tuple = ()
    h: np.ndarray = None


# ---------------------------------------------------------------------------
# objective and gradients


def _design_surrogate(h, problem, with_grad=False):
    """Design-dependent part of the surrogate and its gradient wrt the NLoS gains.

    The gradient is returned as the complex vector ``df/dRe(h_k) + j df/dIm(h_k)``
    for ``k = 1..K``.
    """
    h = np.asarray(h, dtype=complex)
    _, g_dot, g_inv_diag = problem._grams
    k = problem.irs_count
    bad = (BARRIER, np.zeros(k, dtype=complex)) if with_grad else BARRIER
    if g_inv_diag is None or not np.all(np.isfinite(h)) or np.any(h == 0):
        return bad
    s2 = problem.sigma2
    mag2 = np.abs(h) ** 2
    t_aa = s2 * np.sum(g_inv_diag[1:] / mag2[1:])

    d = problem.alpha * h
    f_nn = (2.0 / s2) * (d.conj()[:, None] * g_dot * d[None, :]).real
    inv, cond = equilibrated_inverse(f_nn)
    if inv is None or cond > MAX_CONDITION:
        return bad
    value = t_aa + float(np.trace(inv))
    if not with_grad:
        return value

    grad_aa = -2.0 * s2 * g_inv_diag * h / mag2**2
    w = inv @ inv
    dq_dd_conj = -(2.0 / s2) * ((w * g_dot) @ d)
    grad_nn = 2.0 * problem.alpha.conj() * dq_dd_conj
    return value, (grad_aa + grad_nn)[1:]


def surrogate_objective(h, problem):
    """``Tr(F_aa^-1) + Tr(F_nn^-1)`` for channel vector ``h`` (LoS entry first).

    Returns the barrier value ``1e30`` when either block is singular.
    """
    h = np.asarray(getattr(h, "h", h), dtype=complex)
    value = _design_surrogate(h, problem)
    if value >= BARRIER:
        return BARRIER
    return value + problem.los_offset()


def design_objective(h, problem):
    """Design-dependent part of :func:`surrogate_objective`.

    The LoS reflectivity term ``sigma2 [G^-1]_00 / |h_0|^2`` does not depend
    on the phases but can exceed the rest by 25 orders of magnitude, so
    comparisons between designs should use this value.
    """
    return _design_surrogate(np.asarray(getattr(h, "h", h), dtype=complex), problem)


def _penalty(h_nlos, phases, eta, problem, with_grad=False):
    residuals = []
    grads = []
    for hk, ph, s in zip(h_nlos, phases, problem.couplings):
        v = np.exp(1j * ph)
        sv = s @ v
        delta = hk - v @ sv
        residuals.append(delta)
        if with_grad:
            grads.append(4.0 * (delta.conjugate() * v * sv).imag)
    residuals = np.asarray(residuals, dtype=complex)
    value = float(np.sum(eta * np.abs(residuals) ** 2))
    if with_grad:
        return value, residuals, grads
    return value, residuals


def penalized_objective(h, phases, eta, problem, include_los=True):
    """``f(h) + sum_k eta_k |h_k - v_k^T S_k v_k|^2``.

    ``h`` holds all K+1 gains; ``phases`` is ``K x M``. With
    ``include_los=False`` the design-independent LoS reflectivity term is
    left out, which is what the optimizer actually descends on.
    """
    h = np.asarray(h, dtype=complex)
    f = surrogate_objective(h, problem) if include_los else _design_surrogate(h, problem)
    pen, _ = _penalty(np.asarray(h)[1:], phases, np.asarray(eta, dtype=float), problem)
    return f + pen


def penalized_gradient(h, phases, eta, problem):
    """Analytic gradient of :func:`penalized_objective`.

    Returns
    -------
    grad_h : ndarray of complex, shape (K,)
        ``dg/dRe(h_k) + j dg/dIm(h_k)`` for the NLoS gains.
    grad_phases : ndarray, shape (K, M)
    """
    h = np.asarray(h, dtype=complex)
    eta = np.asarray(eta, dtype=float)
    _, grad_f = _design_surrogate(h, problem, with_grad=True)
    _, residuals, grad_pen = _penalty(h[1:], phases, eta, problem, with_grad=True)
    grad_h = grad_f + 2.0 * eta * residuals
    grad_phases = np.array([e * g for e, g in zip(eta, grad_pen)])
    return grad_h, grad_phases


# ---------------------------------------------------------------------------
# inner solver


def _gradient_descent(fun, x0, config, step0=1.0):
    """Steepest descent with Armijo backtracking. ``fun`` returns ``(value, grad)``."""
    x = np.array(x0, dtype=float)
    fx, gx = fun(x)
    step = step0
    it = 0
    for it in range(1, config.inner_max_iters + 1):
        gnorm2 = float(gx @ gx)
        if np.sqrt(gnorm2) <= config.inner_grad_tol:
            break
        accepted = False
        t = step
        for _ in range(60):
            x_new = x - t * gx
            f_new, g_new = fun(x_new)
            if f_new <= fx - config.armijo_slope * t * gnorm2:
                accepted = True
                break
            t *= config.armijo_shrink
        if not accepted:
            break
        decrease = fx - f_new
        x, fx, gx = x_new, f_new, g_new
        step = 2.0 * t
        if decrease <= 1e-16 * max(abs(fx), 1e-300):
            break
    return x, fx, it


def _normalized_g(state, problem, h_nlos=None, phases=None):
    h_nlos = state.h[1:] if h_nlos is None else h_nlos
    phases = state.phases if phases is None else phases
    f = _design_surrogate(problem.full_h(h_nlos), problem)
    pen, _ = _penalty(h_nlos, phases, state.eta, problem)
    return (f + pen) / state.scale


def minimize_over_h(state, problem, config):
    """Descend on the NLoS gains with the phases held fixed.

    The LoS gain stays at ``problem.h_los``. Variables are the real and
    imaginary parts of ``h_k / gmax_k``.
    """
    g0 = _normalized_g(state, problem)
    if not np.isfinite(g0) or g0 * state.scale >= BARRIER:
        raise InvalidStateError("objective is not finite at the current state")
    gmax = problem.max_gains
    k = problem.irs_count

    def fun(x):
        h_nlos = (x[:k] + 1j * x[k:]) * gmax
        h = problem.full_h(h_nlos)
        f, grad_f = _design_surrogate(h, problem, with_grad=True)
        if f >= BARRIER:
            return np.inf, np.zeros_like(x)
        pen, residuals = _penalty(h_nlos, state.phases, state.eta, problem)
        grad = (grad_f + 2.0 * state.eta * residuals) * gmax / state.scale
        return (f + pen) / state.scale, np.concatenate((grad.real, grad.imag))

    z = state.h[1:] / gmax
    x, _, _ = _gradient_descent(fun, np.concatenate((z.real, z.imag)), config)
    return problem.full_h((x[:k] + 1j * x[k:]) * gmax)


def minimize_over_phases(state, problem, config):
    """Descend on the unconstrained angles, one panel at a time.

    Only the penalty depends on the phases and it separates across panels.
    Returns phases wrapped into ``[0, 2*pi)``.
    """
    phases = np.array(state.phases, dtype=float)
    for k, (hk, s) in enumerate(zip(state.h[1:], problem.couplings)):
        eta = state.eta[k]
        if eta == 0:
            continue
        scale = state.scale

        def fun(ph, hk=hk, s=s, eta=eta):
            v = np.exp(1j * ph)
            sv = s @ v
            delta = hk - v @ sv
            value = eta * abs(delta) ** 2 / scale
            grad = 4.0 * eta * (delta.conjugate() * v * sv).imag / scale
            return value, grad

        phases[k], _, _ = _gradient_descent(fun, phases[k], config)
    return np.mod(phases, TWO_PI)


# ---------------------------------------------------------------------------
# outer loop


def _run_single(problem, config, phases0):
    k = problem.irs_count
    h = problem.full_h(problem.consistent_h(phases0))
    f0 = _design_surrogate(h, problem)
    if not np.isfinite(f0) or f0 >= BARRIER:
        raise InvalidStateError("initial design makes the FIM singular")
    eta = config.penalty_init * f0 / problem.max_gains**2
    state = OptimizerState(h=h, phases=np.array(phases0, dtype=float), eta=eta, scale=f0)
    iterations = 0

    for rnd in range(config.penalty_rounds):
        g_prev = _normalized_g(state, problem) * state.scale
        state.objective_trace.append(g_prev)
        state.trace_rounds.append(rnd)
        for _ in range(config.max_outer_iters):
            iterations += 1
            state.h = minimize_over_h(state, problem, config)
            state.objective_trace.append(_normalized_g(state, problem) * state.scale)
            state.trace_rounds.append(rnd)
            state.phases = minimize_over_phases(state, problem, config)
            g = _normalized_g(state, problem) * state.scale
            state.objective_trace.append(g)
            state.trace_rounds.append(rnd)
            if abs(g_prev - g) <= config.stall_rtol * abs(g):
                break
            g_prev = g
        state.residual = float(np.max(np.abs(state.h[1:] - problem.consistent_h(state.phases))))
        logger.debug("round %d: eta=%s residual=%.3g", rnd, state.eta, state.residual)
        if state.residual <= config.residual_eps:
            break
        state.eta = state.eta * config.penalty_growth
    return state, iterations


def _polish(state, problem, config):
    """Descend on the phases with the constraint eliminated, ``h_k = v_k^T S_k v_k``.

    Near a penalty solution the h and phase blocks are tightly coupled and AO
    crawls along the constraint. This stage moves both together and keeps the
    residual at zero. Values are appended to the objective trace as one more
    round.
    """
    k = problem.irs_count
    shape = state.phases.shape

    def fun(x):
        ph = x.reshape(shape)
        grad = np.zeros(shape)
        h_nlos = []
        dh = []
        for row, s in zip(ph, problem.couplings):
            v = np.exp(1j * row)
            sv = s @ v
            h_nlos.append(v @ sv)
            dh.append(2j * v * sv)
        f, grad_h = _design_surrogate(problem.full_h(h_nlos), problem, with_grad=True)
        if f >= BARRIER:
            return np.inf, grad.ravel()
        for i in range(k):
            grad[i] = (grad_h[i].conjugate() * dh[i]).real
        return f / state.scale, grad.ravel() / state.scale

    cfg = replace(config, inner_max_iters=config.polish_iters)
    start = fun(state.phases.ravel())[0]
    x, fx, _ = _gradient_descent(fun, state.phases.ravel(), cfg)
    rnd = state.trace_rounds[-1] + 1 if state.trace_rounds else 0
    state.objective_trace.extend((start * state.scale, fx * state.scale))
    state.trace_rounds.extend((rnd, rnd))
    state.phases = np.mod(x.reshape(shape), TWO_PI)
    state.h = problem.full_h(problem.consistent_h(state.phases))
    state.residual = float(np.max(np.abs(state.h[1:] - problem.consistent_h(state.phases))))
    return state


def trace_crlb_of_design(phases, problem):
    """Total CRLB trace with the channel rebuilt from the phases."""
    return _design_crlb(phases, problem).trace_total


def _design_crlb(phases, problem):
    channels = ChannelSet(problem.h_los, problem.consistent_h(phases))
    target = TargetParams(problem.alpha, problem.nu)
    blocks = fim_blocks(problem.radar, channels, target, NoiseModel(sigma2=problem.sigma2))
    return crlb(assemble_full_fim(blocks))


def alternating_optimize(problem, config=OptimizerConfig()):
    """Design IRS phases minimizing the A-optimality surrogate.

    Runs ``config.restarts`` independent starts from uniform random phases and
    keeps the converged one with the smallest surrogate.

    Raises
    ------
    NonConvergenceError
        If no restart reaches ``residual <= residual_eps``; the best design
        found is attached to the exception.
    """
    if problem.irs_count < 1:
        raise InvalidArgumentError("phase design needs at least one IRS")
    rng = np.random.default_rng(config.seed)
    best = None
    best_key = None
    for _ in range(config.restarts):
        phases0 = [rng.uniform(0.0, TWO_PI, s.shape[0]) for s in problem.couplings]
        try:
            state, iterations = _run_single(problem, config, np.array(phases0))
        except InvalidStateError:
            continue
        if state.residual <= config.residual_eps and config.polish_iters > 0:
            state = _polish(state, problem, config)
        h = problem.full_h(problem.consistent_h(state.phases))
        design_value = _design_surrogate(h, problem)
        key = (state.residual > config.residual_eps, design_value)
        if best_key is None or key < best_key:
            best, best_key = (state, iterations, h), key
    if best is None:
        raise NonConvergenceError("every restart started from a singular design")

    state, iterations, h = best
    surrogate = surrogate_objective(h, problem)
    try:
        trace = trace_crlb_of_design(state.phases, problem)
    except ValueError:
        trace = np.inf
    result = DesignResult(
        optimal_phases=state.phases,
        achieved_surrogate=surrogate,
        achieved_trace_crlb=trace,
        constraint_residual=state.residual,
        iterations_used=iterations,
        converged=state.residual <= config.residual_eps,
        objective_trace=tuple(state.objective_trace),
        trace_rounds=tuple(state.trace_rounds),
        h=state.h,
    )
    if not result.converged:
        raise NonConvergenceError(
            f"coupling residual {state.residual:.3g} above {config.residual_eps:.3g}",
            result=result,
            trace=list(state.objective_trace),
        )
    return result
