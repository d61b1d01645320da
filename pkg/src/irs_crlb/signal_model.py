"""Slow-time Doppler model ``y = A alpha + w`` for the LoS and IRS-assisted paths."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class RadarParams:
    """Pulse train seen in slow time.

    Attributes
    ----------
    pulse_count : int
        Number of pulses N in the CPI.
    pri : float
        Pulse repetition interval in seconds. Only used to convert between
        Doppler in Hz and normalized Doppler.
    waveform : ndarray of complex, shape (N,)
        Slow-time code ``x``. Defaults to all ones.
    """

    pulse_count: int
    pri: float = 1e-4
    waveform: np.ndarray = None

    def __post_init__(self):
        if self.pulse_count < 2:
            raise InvalidArgumentError("at least two pulses are needed to observe Doppler")
        if self.pri <= 0:
            raise InvalidArgumentError("PRI must be positive")
        x = self.waveform
        x = np.ones(self.pulse_count, dtype=complex) if x is None else np.asarray(x, dtype=complex).ravel().copy()
        if x.size != self.pulse_count:
            raise InvalidArgumentError(f"waveform has {x.size} samples, expected {self.pulse_count}")
        if not np.all(np.isfinite(x)) or not np.any(x):
            raise InvalidArgumentError("waveform must be finite and not identically zero")
        x.setflags(write=False)
        object.__setattr__(self, "waveform", x)

    def normalized_doppler(self, f_doppler):
        return 2.0 * np.pi * np.asarray(f_doppler) * self.pri


@dataclass(frozen=True)
class TargetParams:
    alpha: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=complex).ravel().copy()
        nu = np.asarray(self.nu, dtype=float).ravel().copy()
        if alpha.size != nu.size:
            raise InvalidArgumentError("alpha and nu must have the same length")
        if np.any(nu < -0.5) or np.any(nu >= 0.5):
            raise InvalidArgumentError("normalized Doppler must lie in [-0.5, 0.5)")
        alpha.setflags(write=False)
        nu.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "nu", nu)

    @property
    def path_count(self):
        return self.alpha.size

    @property
    def zeta(self):
        """Real parameter vector ``[Re(alpha), Im(alpha), nu]``."""
        return np.concatenate((self.alpha.real, self.alpha.imag, self.nu))


class NoiseModel:
    """Circular complex Gaussian noise with covariance ``R`` (or ``sigma2 * I``).

    Parameters
    ----------
    sigma2 : float, optional
        White-noise variance. ``0`` is accepted for noiseless synthesis but is
        rejected by every Fisher-information routine.
    covariance : ndarray, optional
        Full Hermitian positive-definite covariance.
    """

    def __init__(self, sigma2=None, covariance=None):
        if (sigma2 is None) == (covariance is None):
            raise InvalidArgumentError("give exactly one of sigma2 or covariance")
        self.sigma2 = None
        self.covariance = None
        if sigma2 is not None:
            sigma2 = float(sigma2)
            if not np.isfinite(sigma2) or sigma2 < 0:
                raise InvalidArgumentError(f"noise variance must be >= 0, got {sigma2}")
            self.sigma2 = sigma2
        else:
            r = np.array(covariance, dtype=complex)
            if r.ndim != 2 or r.shape[0] != r.shape[1]:
                raise InvalidArgumentError("covariance must be square")
            scale = max(np.max(np.abs(r)), np.finfo(float).tiny)
            if np.max(np.abs(r - r.conj().T)) > 1e-12 * scale:
                raise InvalidArgumentError("covariance is not Hermitian")
            r = 0.5 * (r + r.conj().T)
            if np.linalg.eigvalsh(r)[0] <= 0:
                raise InvalidArgumentError("covariance is not positive definite")
            self.covariance = r

    @property
    def is_white(self):
        return self.sigma2 is not None

    def __repr__(self):
        if self.is_white:
            return f"NoiseModel(sigma2={self.sigma2!r})"
        return f"NoiseModel(covariance=<{self.covariance.shape[0]}x{self.covariance.shape[0]}>)"

    def matrix(self, n):
        if self.is_white:
            return self.sigma2 * np.eye(n, dtype=complex)
        self._check_size(n)
        return self.covariance

    def inverse(self, n):
        """``R^-1`` for an ``n``-sample observation; requires ``R`` positive definite."""
        if self.is_white:
            if self.sigma2 <= 0:
                raise InvalidArgumentError("Fisher information needs sigma2 > 0")
            return np.eye(n, dtype=complex) / self.sigma2
        self._check_size(n)
        return np.linalg.inv(self.covariance)

    def scaled(self, c):
        if self.is_white:
            return NoiseModel(sigma2=c * self.sigma2)
        return NoiseModel(covariance=c * self.covariance)

    def _check_size(self, n):
        if self.covariance.shape[0] != n:
            raise InvalidArgumentError(
                f"covariance is {self.covariance.shape[0]}x{self.covariance.shape[0]}, observation has {n} samples"
            )


def doppler_steering(nu, n):
    if n < 1:
        raise InvalidArgumentError("pulse count must be >= 1")
    return np.exp(1j * np.arange(n) * nu)


def doppler_steering_derivative(nu, n):
    """Elementwise ``d p(nu) / d nu = j i exp(j i nu)``."""
    i = np.arange(n)
    return 1j * i * doppler_steering(nu, n)


def doppler_matrix(nu, n):
    """``P(nu)`` with one Doppler steering vector per column."""
    nu = np.asarray(nu, dtype=float).ravel()
    return np.exp(1j * np.outer(np.arange(n), nu))


def doppler_matrix_derivative(nu, n):
    i = np.arange(n)[:, None]
    return 1j * i * doppler_matrix(nu, n)


def _check_dims(radar, channels, nu):
    nu = np.asarray(nu, dtype=float).ravel()
    if nu.size != channels.irs_count + 1:
        raise InvalidArgumentError(f"{nu.size} Doppler values for {channels.irs_count + 1} paths")
    return nu


def sensing_matrix(radar, channels, nu):
    """``A = x h^T * P(nu)``; column k is ``h_k (x * p(nu_k))``."""
    nu = _check_dims(radar, channels, nu)
    x = radar.waveform
    return np.outer(x, channels.h) * doppler_matrix(nu, radar.pulse_count)


def sensing_matrix_derivative(radar, channels, nu):
    """Column k is ``d a_k / d nu_k = h_k (x * p'(nu_k))``."""
    nu = _check_dims(radar, channels, nu)
    x = radar.waveform
    return np.outer(x, channels.h) * doppler_matrix_derivative(nu, radar.pulse_count)


def synthesize_received(a, target, noise, seed):
    """Draw ``y = A alpha + w`` with ``w ~ CN(0, R)``.

    The noise is ``L z`` with ``L`` the Cholesky factor of ``R`` and ``z``
    i.i.d. ``CN(0, 1)`` from ``numpy.random.default_rng(seed)``.
    """
    a = np.asarray(a, dtype=complex)
    n, paths = a.shape
    if paths != target.path_count:
        raise InvalidArgumentError(f"sensing matrix has {paths} columns, target has {target.path_count} paths")
    mean = a @ target.alpha
    if noise.is_white and noise.sigma2 == 0:
        return mean
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    if noise.is_white:
        return mean + np.sqrt(noise.sigma2) * z
    try:
        chol = np.linalg.cholesky(noise.matrix(n))
    except np.linalg.LinAlgError as exc:
        raise InvalidArgumentError("covariance is not positive definite") from exc
    return mean + chol @ z
