"""2-D scene geometry, IRS steering and the radar-IRS-target-IRS-radar channel.

Every IRS is a uniform linear array lying along the x-axis. Bearings are
measured from the array normal on the side of the observed point (``+y`` for
points above the panel, ``-y`` for points below) and are positive clockwise.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateChannelError, InvalidArgumentError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Position2D:
    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise InvalidArgumentError(f"non-finite position ({self.x}, {self.y})")

    def distance_to(self, other):
        return float(np.hypot(other.x - self.x, other.y - self.y))

    def as_array(self):
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class IrsPanel:
    """Phase configuration of one IRS with unit amplitude reflection.

    Phases are wrapped into ``[0, 2*pi)`` on construction.
    """

    phases: np.ndarray
    spacing_ratio: float = 0.5

    def __post_init__(self):
        phases = np.mod(np.asarray(self.phases, dtype=float).ravel(), TWO_PI)
        if phases.size == 0:
            raise InvalidArgumentError("an IRS panel needs at least one element")
        if not np.all(np.isfinite(phases)):
            raise InvalidArgumentError("non-finite IRS phase")
        # wrap can round up to exactly 2*pi
        phases[phases >= TWO_PI] = 0.0
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)

    @property
    def element_count(self):
        return self.phases.size

    @property
    def reflection(self):
        """Unimodular reflection vector ``v = diag(Phi)``."""
        return np.exp(1j * self.phases)


@dataclass(frozen=True)
class ChannelSet:
    h_los: complex
    h_nlos: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __post_init__(self):
        h_nlos = np.asarray(self.h_nlos, dtype=complex).ravel().copy()
        if not (np.isfinite(self.h_los) and np.all(np.isfinite(h_nlos))):
            raise InvalidArgumentError("non-finite channel coefficient")
        h_nlos.setflags(write=False)
        object.__setattr__(self, "h_los", complex(self.h_los))
        object.__setattr__(self, "h_nlos", h_nlos)

    @property
    def irs_count(self):
        return self.h_nlos.size

    @property
    def h(self):
        """All K+1 path gains, LoS first."""
        return np.concatenate(([self.h_los], self.h_nlos))

    @classmethod
    def from_vector(cls, h):
        h = np.asarray(h, dtype=complex).ravel()
        return cls(h[0], h[1:])


def steering_vector(theta, m, spacing_ratio=0.5):
    """ULA response ``[1, e^{j 2 pi d/lambda sin(theta)}, ...]`` of length ``m``."""
    if m < 1:
        raise InvalidArgumentError(f"element count must be >= 1, got {m}")
    i = np.arange(m)
    return np.exp(1j * TWO_PI * spacing_ratio * i * np.sin(theta))


def _bearing(origin, point):
    dx = point.x - origin.x
    dy = point.y - origin.y
    if dx == 0.0 and dy == 0.0:
        raise InvalidArgumentError("bearing to a coincident point is undefined")
    if dy >= 0.0:
        return float(np.arctan2(dx, dy))
    # point behind the panel: measure from the -y normal, clockwise
    return float(np.arctan2(-dx, -dy))


def angles_from_positions(radar, irs, target):
    """Bearings ``(theta_ir, theta_ti)`` of the radar and target seen from an IRS.

    Parameters
    ----------
    radar, irs, target : Position2D

    Returns
    -------
    theta_ir, theta_ti : float
        Radians in ``(-pi/2, pi/2]`` for points off the array axis.
    """
    return _bearing(irs, radar), _bearing(irs, target)


def path_loss(distance, l0_db=-30.0, d0=1.0, beta0=2.5):
    """Distance-dependent gain ``L0 * (d / d0)^-beta0`` with ``L0`` given in dB."""
    if distance <= 0:
        raise InvalidArgumentError(f"distance must be positive, got {distance}")
    if d0 <= 0:
        raise InvalidArgumentError(f"reference distance must be positive, got {d0}")
    return 10.0 ** (l0_db / 10.0) * (distance / d0) ** (-beta0)


def phase_matrix(panel):
    return np.diag(panel.reflection)


def coupling_matrix(theta_ir, theta_ti, m, spacing_ratio=0.5):
    """Symmetric rank-one matrix ``S = u u^T`` with ``u = b(theta_ir) * b(theta_ti)``.

    ``v^T S v`` reproduces the round-trip channel of a panel with reflection
    vector ``v``.
    """
    u = steering_vector(theta_ir, m, spacing_ratio) * steering_vector(theta_ti, m, spacing_ratio)
    return np.outer(u, u)


def nlos_channel_direct(panel, theta_ir, theta_ti):
    m = panel.element_count
    b_ir = steering_vector(theta_ir, m, panel.spacing_ratio)
    b_ti = steering_vector(theta_ti, m, panel.spacing_ratio)
    phi = phase_matrix(panel)
    return complex((b_ir @ phi @ b_ti) * (b_ti @ phi @ b_ir))


def nlos_channel_quadratic(v, s, atol=1e-9):
    v = np.asarray(v, dtype=complex)
    if np.any(np.abs(np.abs(v) - 1.0) > atol):
        raise InvalidArgumentError("reflection vector is not unimodular")
    return complex(v @ s @ v)


def cophasing_phases(s):
    """Phases maximizing ``|v^T S v|`` for a rank-one coupling matrix.

    Aligns every term of ``u^T v`` so that ``|v^T S v| = (sum |u_m|)^2``.
    """
    u = _rank_one_factor(s)
    return np.mod(-np.angle(u), TWO_PI)


def _rank_one_factor(s):
    # S = u u^T: column 0 is u_0 * u, and u_0^2 = S_00
    u0 = np.sqrt(s[0, 0] + 0j)
    if u0 == 0:
        raise InvalidArgumentError("coupling matrix has a zero leading entry")
    return s[:, 0] / u0


def lsr(alpha, channels):
    """LoS-to-NLoS link strength ratio ``|a0 h_LoS|^2 / sum_k |a_k h_k|^2``."""
    alpha = np.asarray(alpha, dtype=complex)
    nlos_power = np.sum(np.abs(alpha[1:] * channels.h_nlos) ** 2)
    if nlos_power <= 0:
        raise DegenerateChannelError("NLoS received power is zero")
    return float(np.abs(alpha[0] * channels.h_los) ** 2 / nlos_power)


def scale_reflectivities(raw_alpha, channels, gamma):
    """Rescale reflectivities so the LSR equals ``gamma``.

    The LoS coefficient is scaled to ``|a0 h_LoS|^2 = gamma`` and the NLoS
    coefficients share one factor so that ``sum_k |a_k h_k|^2 = 1``. Phases of
    ``raw_alpha`` are kept.
    """
    raw_alpha = np.asarray(raw_alpha, dtype=complex).ravel()
    if gamma <= 0:
        raise InvalidArgumentError(f"gamma must be positive, got {gamma}")
    k = channels.irs_count
    if k < 1:
        raise InvalidArgumentError("reflectivity scaling needs at least one IRS path")
    if raw_alpha.size != k + 1:
        raise InvalidArgumentError(f"expected {k + 1} reflectivities, got {raw_alpha.size}")
    if raw_alpha[0] == 0 or channels.h_los == 0:
        raise DegenerateChannelError("LoS path has zero gain")
    if np.any((channels.h_nlos == 0) & (raw_alpha[1:] != 0)):
        raise DegenerateChannelError("NLoS channel gain is zero")
    nlos_power = np.sum(np.abs(raw_alpha[1:] * channels.h_nlos) ** 2)
    if nlos_power <= 0:
        raise DegenerateChannelError("NLoS received power is zero")

    out = np.empty_like(raw_alpha)
    out[0] = raw_alpha[0] * np.sqrt(gamma) / np.abs(raw_alpha[0] * channels.h_los)
    out[1:] = raw_alpha[1:] / np.sqrt(nlos_power)
    return out
