"""Fisher information and CRLB for joint reflectivity/Doppler estimation.

Parameters are ordered ``zeta = [Re(alpha) (K+1), Im(alpha) (K+1), nu (K+1)]``
throughout.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, SingularFimError
from .signal_model import (
    NoiseModel,
    doppler_matrix,
    doppler_matrix_derivative,
    doppler_steering,
    doppler_steering_derivative,
    sensing_matrix,
    sensing_matrix_derivative,
)

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class FimBlocks:
    f_aa: np.ndarray
    f_an: np.ndarray
    f_nn: np.ndarray

    @property
    def path_count(self):
        return self.f_nn.shape[0]


@dataclass(frozen=True)
class CrlbResult:
    crlb: np.ndarray
    trace_total: float
    trace_alpha_block: float
    trace_nu_block: float
    surrogate: float
    condition: float


def _noise_inverse(noise, n):
    if not isinstance(noise, NoiseModel):
        noise = NoiseModel(sigma2=noise)
    try:
        return noise.inverse(n)
    except np.linalg.LinAlgError as exc:
        raise InvalidArgumentError("noise covariance is singular") from exc


def fim_alpha_alpha(a, noise):
    """Reflectivity block ``[[2Re M, -2Im M], [2Im M, 2Re M]]`` with ``M = A^H R^-1 A``."""
    a = np.asarray(a, dtype=complex)
    m = a.conj().T @ _noise_inverse(noise, a.shape[0]) @ a
    re, im = 2.0 * m.real, 2.0 * m.imag
    return np.block([[re, -im], [im, re]])


def fim_alpha_nu(a, a_dot, noise, alpha):
    """Cross block of shape ``2(K+1) x (K+1)``.

    Entry ``(m, n)`` of the real-part rows is ``2 Re{[A^H R^-1 A']_mn alpha_n}``;
    the imaginary-part rows carry ``2 Im{...}``.
    """
    a = np.asarray(a, dtype=complex)
    alpha = np.asarray(alpha, dtype=complex)
    c = a.conj().T @ _noise_inverse(noise, a.shape[0]) @ np.asarray(a_dot, dtype=complex)
    c = c * alpha[None, :]
    return np.vstack((2.0 * c.real, 2.0 * c.imag))


def fim_nu_nu(a_dot, noise, alpha):
    a_dot = np.asarray(a_dot, dtype=complex)
    alpha = np.asarray(alpha, dtype=complex)
    d = a_dot.conj().T @ _noise_inverse(noise, a_dot.shape[0]) @ a_dot
    return 2.0 * (alpha.conj()[:, None] * d * alpha[None, :]).real


def fim_blocks(radar, channels, target, noise):
    """All three FIM blocks for a scene, through the sensing matrix and its derivative."""
    a = sensing_matrix(radar, channels, target.nu)
    a_dot = sensing_matrix_derivative(radar, channels, target.nu)
    return FimBlocks(
        f_aa=fim_alpha_alpha(a, noise),
        f_an=fim_alpha_nu(a, a_dot, noise, target.alpha),
        f_nn=fim_nu_nu(a_dot, noise, target.alpha),
    )


def gram_matrices(radar, nu):
    """``G = P^H Diag(x)^2 P`` and ``G' = P'^H Diag(x)^2 P'`` (with ``|x|^2`` weights)."""
    n = radar.pulse_count
    w = np.abs(radar.waveform) ** 2
    p = doppler_matrix(nu, n)
    p_dot = doppler_matrix_derivative(nu, n)
    g = p.conj().T @ (w[:, None] * p)
    g_dot = p_dot.conj().T @ (w[:, None] * p_dot)
    return g, g_dot


def fim_from_h(h, radar, alpha, nu, sigma2):
    """Reflectivity and Doppler blocks written in terms of the channel vector.

    Valid for white noise only. ``f_an`` of the returned blocks is ``None``.

    Parameters
    ----------
    h : ChannelSet or array_like of complex, shape (K+1,)
    radar : RadarParams
    alpha : array_like of complex, shape (K+1,)
    nu : array_like of float, shape (K+1,)
    sigma2 : float
    """
    if sigma2 <= 0:
        raise InvalidArgumentError("sigma2 must be positive")
    h = np.asarray(getattr(h, "h", h), dtype=complex).ravel()
    alpha = np.asarray(alpha, dtype=complex).ravel()
    nu = np.asarray(nu, dtype=float).ravel()
    p = h.size
    if alpha.size != p or nu.size != p:
        raise InvalidArgumentError("h, alpha and nu must have the same length")

    g, g_dot = gram_matrices(radar, nu)
    hh_t = np.outer(h, h.conj()).T
    one_j = np.array([[1.0, 1j]])
    f_aa = (2.0 / sigma2) * np.kron(np.kron(one_j.conj().T, one_j), hh_t * g).real

    eye = np.eye(p)
    # selector Z = [e_1 e_1^T, ..., e_P e_P^T]
    z = np.hstack([np.outer(eye[k], eye[k]) for k in range(p)])
    alpha_kron = np.kron(alpha[:, None], eye)
    inner = z.conj().T @ (hh_t * g_dot) @ z
    f_nn = (2.0 / sigma2) * (alpha_kron.conj().T @ inner @ alpha_kron).real
    return FimBlocks(f_aa=f_aa, f_an=None, f_nn=f_nn)


def assemble_full_fim(blocks):
    if blocks.f_an is None:
        raise InvalidArgumentError("full FIM needs the cross block")
    f_aa, f_an, f_nn = blocks.f_aa, blocks.f_an, blocks.f_nn
    p = f_nn.shape[0]
    if f_aa.shape != (2 * p, 2 * p) or f_an.shape != (2 * p, p):
        raise InvalidArgumentError("inconsistent FIM block shapes")
    return np.block([[f_aa, f_an], [f_an.T, f_nn]])


def split_full_fim(full):
    p = full.shape[0] // 3
    return FimBlocks(f_aa=full[: 2 * p, : 2 * p], f_an=full[: 2 * p, 2 * p :], f_nn=full[2 * p :, 2 * p :])


def equilibrated_inverse(f):
    """Inverse of a symmetric PD matrix computed on its unit-diagonal rescaling.

    Path gains span many orders of magnitude (LoS loss ~1e-13), so the raw
    condition number says nothing about identifiability. The inverse is taken
    of ``D^-1/2 F D^-1/2`` and mapped back.

    Returns
    -------
    inverse : ndarray
    condition : float
        2-norm condition number of the rescaled matrix.
    """
    f = np.asarray(f, dtype=float)
    diag = np.diag(f)
    if np.any(~np.isfinite(f)) or np.any(diag <= 0):
        return None, np.inf
    d = 1.0 / np.sqrt(diag)
    dd = np.outer(d, d)
    fs = f * dd
    lam, vec = np.linalg.eigh(0.5 * (fs + fs.T))
    if lam[0] <= 0:
        return None, np.inf
    cond = float(lam[-1] / lam[0])
    inv = (vec / lam) @ vec.T * dd
    return 0.5 * (inv + inv.T), cond


def crlb(full_fim):
    """Invert the full FIM and summarize the bound.

    Raises
    ------
    SingularFimError
        If the equilibrated condition number exceeds ``1e12``.
    """
    full_fim = np.asarray(full_fim, dtype=float)
    inv, cond = equilibrated_inverse(full_fim)
    if inv is None or cond > MAX_CONDITION:
        raise SingularFimError(f"FIM is singular (condition {cond:.3g}); parameters are not identifiable", cond)
    blocks = split_full_fim(full_fim)
    p = blocks.path_count
    inv_aa, cond_aa = equilibrated_inverse(blocks.f_aa)
    inv_nn, cond_nn = equilibrated_inverse(blocks.f_nn)
    if inv_aa is None or inv_nn is None:
        raise SingularFimError("diagonal FIM block is singular", max(cond_aa, cond_nn))
    return CrlbResult(
        crlb=inv,
        trace_total=float(np.trace(inv)),
        trace_alpha_block=float(np.trace(inv[: 2 * p, : 2 * p])),
        trace_nu_block=float(np.trace(inv[2 * p :, 2 * p :])),
        surrogate=float(np.trace(inv_aa) + np.trace(inv_nn)),
        condition=cond,
    )


def no_irs_fim(radar, h_los, alpha0, nu0, sigma2):
    """Closed-form LoS-only blocks under white noise.

    Returns ``(f_aa0, f_nn0)``: ``2|h|^2 ||x*p||^2 / sigma2 * I_2`` and
    ``2|alpha0 h|^2 ||x*p'||^2 / sigma2``.
    """
    if sigma2 <= 0:
        raise InvalidArgumentError("sigma2 must be positive")
    n = radar.pulse_count
    x = radar.waveform
    energy = np.sum(np.abs(x * doppler_steering(nu0, n)) ** 2)
    energy_dot = np.sum(np.abs(x * doppler_steering_derivative(nu0, n)) ** 2)
    f_aa0 = 2.0 * abs(h_los) ** 2 * energy / sigma2 * np.eye(2)
    f_nn0 = 2.0 * abs(alpha0 * h_los) ** 2 * energy_dot / sigma2
    return f_aa0, float(f_nn0)


def fim_oracle(mean_fn, noise, zeta0, step=1e-6):
    """Slepian-Bangs FIM with central-difference derivatives of the mean.

    ``[F]_mn = 2 Re{(d mu/d zeta_m)^H R^-1 (d mu/d zeta_n)}``; the covariance
    term vanishes because ``R`` does not depend on the parameters.

    Parameters
    ----------
    mean_fn : callable
        Maps a real parameter vector to the complex mean ``mu``.
    noise : NoiseModel or float
    zeta0 : array_like of float
    step : float
        Absolute central-difference step applied to every parameter.
    """
    if step <= 0:
        raise InvalidArgumentError("step must be positive")
    zeta0 = np.asarray(zeta0, dtype=float).ravel()
    cols = []
    for i in range(zeta0.size):
        dz = np.zeros_like(zeta0)
        dz[i] = step
        cols.append((np.asarray(mean_fn(zeta0 + dz)) - np.asarray(mean_fn(zeta0 - dz))) / (2.0 * step))
    jac = np.column_stack(cols)
    r_inv = _noise_inverse(noise, jac.shape[0])
    f = 2.0 * (jac.conj().T @ r_inv @ jac).real
    return 0.5 * (f + f.T)


def scene_mean_fn(radar, channels):
    """``zeta -> A(nu) alpha`` for a fixed radar and channel, for use with :func:`fim_oracle`."""
    p = channels.irs_count + 1

    def mean(zeta):
        alpha = zeta[:p] + 1j * zeta[p : 2 * p]
        nu = zeta[2 * p :]
        return sensing_matrix(radar, channels, nu) @ alpha

    return mean
