"""System parameters and per-realization SINR expressions.

The network is a two-user power-domain NOMA downlink: a multi-antenna base
station serves a near user (U1) directly and a far user (U2) through a
full-duplex decode-and-forward relay.  All channel power gains are stored
pre-scaled by the transmit SNR (gamma = rho * |h|^2), so the SINR expressions
below never multiply by a power term.

Every function in this module is a pure function of its arguments and safe to
call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemParams",
    "DerivedParams",
    "ChannelRealization",
    "InfeasibleThresholdError",
    "derive",
    "psi",
    "sinr_relay",
    "sinr_u1_decode_u2",
    "sinr_u1",
    "snr_u2",
    "sinr_e2e_u2",
]


class InfeasibleThresholdError(ValueError):
    """The far user's SIC condition cannot hold at any SINR.

    Raised when a2 - a1*theta <= 0: the decode-U2 SINR a2*g/(a1*g + ...) is
    bounded above by a2/a1, so a threshold at or beyond that bound can never
    be met.
    """


@dataclass(frozen=True)
class SystemParams:
    """All scalar model constants.

    Attributes
    ----------
    a1, a2 : float
        Power-allocation coefficients for the near and far user.  Must
        satisfy a1 + a2 = 1 and a1 < a2.
    rho_s, rho_r : float
        Linear transmit SNR of the base station and of the relay.
    n_t : int
        Base-station transmit antennas.
    m_r, m_t : int
        Relay receive / transmit antennas under the static split.  The relay
        carries m_r + m_t physical antennas in total.
    var_su1, var_sr, var_ru1, var_ru2 : float
        Rayleigh channel variances of the BS->U1, BS->relay, relay->U1 and
        relay->U2 links.
    var_si : float
        Residual self-interference variance at the full-duplex relay.
    k1 : float
        Strength coefficient of the relay->U1 inter-user interference
        channel (its effective variance is k1 * var_ru1).
    rate_target_u1, rate_target_u2 : float
        Target rates R1, R2 in bit/s/Hz.
    """

    a1: float
    a2: float
    rho_s: float
    rho_r: float
    n_t: int
    m_r: int
    m_t: int
    var_su1: float
    var_sr: float
    var_ru1: float
    var_ru2: float
    var_si: float
    k1: float
    rate_target_u1: float
    rate_target_u2: float

    def __post_init__(self) -> None:
        if not (self.a1 > 0 and self.a2 > 0):
            raise ValueError("power-allocation coefficients must be positive")
        if abs(self.a1 + self.a2 - 1.0) > 1e-12:
            raise ValueError("a1 + a2 must equal 1")
        if not self.a1 < self.a2:
            raise ValueError("a1 < a2 violated")
        for name in ("rho_s", "rho_r", "var_su1", "var_sr", "var_ru1",
                     "var_ru2", "var_si", "k1"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("n_t", "m_r", "m_t"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def m_total(self) -> int:
        return self.m_r + self.m_t


@dataclass(frozen=True)
class DerivedParams:
    """Threshold and mean-gain quantities derived from :class:`SystemParams`.

    ``zeta`` is the single threshold on the interference-normalized ratio
    g_su1 / (g_ru1 + 1) below which the near user is in outage: the larger of
    psi(theta2) (needed to decode the far user's symbol) and theta1 / a1
    (needed to decode its own symbol afterwards).  When ``feasible`` is
    False, theta2 exceeds the a2/a1 ceiling and zeta is +inf.
    """

    theta1: float
    theta2: float
    zeta: float
    gbar_su1: float
    gbar_sr: float
    gbar_ru1: float
    gbar_ru2: float
    gbar_si: float
    feasible: bool


def derive(params: SystemParams) -> DerivedParams:
    """Compute thresholds and mean channel gains for a parameter set."""
    theta1 = 2.0 ** params.rate_target_u1 - 1.0
    theta2 = 2.0 ** params.rate_target_u2 - 1.0
    feasible = params.a2 - params.a1 * theta2 > 0.0
    if feasible:
        zeta = max(psi(theta2, params), theta1 / params.a1)
    else:
        zeta = math.inf
    return DerivedParams(
        theta1=theta1,
        theta2=theta2,
        zeta=zeta,
        gbar_su1=params.rho_s * params.var_su1,
        gbar_sr=params.rho_s * params.var_sr,
        gbar_ru1=params.rho_r * params.k1 * params.var_ru1,
        gbar_ru2=params.rho_r * params.var_ru2,
        gbar_si=params.rho_r * params.var_si,
        feasible=feasible,
    )


def psi(theta: float, params: SystemParams) -> float:
    """SIC feasibility map: the g_su1/(g_ru1+1)-domain threshold equivalent
    to requiring the decode-U2 SINR to exceed ``theta``.

    psi(theta) = theta / (a2 - a1*theta); strictly increasing on
    [0, a2/a1).  Raises :class:`InfeasibleThresholdError` when
    a2 - a1*theta <= 0.
    """
    denom = params.a2 - params.a1 * theta
    if denom <= 0.0:
        raise InfeasibleThresholdError(
            f"threshold {theta} at or beyond the a2/a1 = "
            f"{params.a2 / params.a1:g} SIC ceiling"
        )
    return theta / denom


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of all channel power gains (linear, pre-scaled by SNR).

    ``g_sr``, ``g_si``, ``g_ru1`` and ``g_ru2`` are indexed by *global* relay
    antenna indices 0..M-1 so that a dynamic receive/transmit partition can
    reuse a single draw.  Under the static split, receive antennas are
    indices 0..m_r-1 and transmit antennas m_r..M-1.

    ``g_si[k, j]`` is the self-interference gain from transmit antenna k into
    receive antenna j; the diagonal is never read since an antenna is not
    simultaneously transmitting and receiving.
    """

    g_su1: np.ndarray  # (n_t,)
    g_sr: np.ndarray   # (n_t, M)
    g_si: np.ndarray   # (M, M)
    g_ru1: np.ndarray  # (M,)
    g_ru2: np.ndarray  # (M,)


# Broadcasting formula helpers.  The batch (vectorized) selection code and
# the scalar per-realization operations below share these so the exact same
# floating-point expression is evaluated everywhere.

def sinr_relay_v(g_sr, g_si, params: SystemParams):
    """Decode SINR at the relay: a2*g_sr / (a1*g_sr + g_si + 1)."""
    return params.a2 * g_sr / (params.a1 * g_sr + g_si + 1.0)


def sinr_u1_decode_u2_v(g_su1, g_ru1, params: SystemParams):
    """SINR at U1 when decoding the far user's symbol."""
    return params.a2 * g_su1 / (params.a1 * g_su1 + g_ru1 + 1.0)


def sinr_u1_v(g_su1, g_ru1, params: SystemParams):
    """SINR at U1 for its own symbol, after cancelling the far user's."""
    return params.a1 * g_su1 / (g_ru1 + 1.0)


def _check_index(idx: int, size: int, label: str) -> None:
    if not 0 <= idx < size:
        raise IndexError(f"{label} index {idx} out of range [0, {size})")


def sinr_relay(real: ChannelRealization, i: int, j: int, k: int,
               params: SystemParams) -> float:
    """Relay decode SINR for BS antenna i, relay receive j, relay transmit k.

    Strictly below a2/a1 for any finite gains.
    """
    _check_index(i, real.g_sr.shape[0], "BS antenna")
    _check_index(j, real.g_sr.shape[1], "relay receive antenna")
    _check_index(k, real.g_si.shape[0], "relay transmit antenna")
    return float(sinr_relay_v(real.g_sr[i, j], real.g_si[k, j], params))


def sinr_u1_decode_u2(real: ChannelRealization, i: int, k: int,
                      params: SystemParams) -> float:
    """SINR at U1 decoding the far user's symbol, under inter-user
    interference from relay transmit antenna k."""
    _check_index(i, real.g_su1.shape[0], "BS antenna")
    _check_index(k, real.g_ru1.shape[0], "relay transmit antenna")
    return float(sinr_u1_decode_u2_v(real.g_su1[i], real.g_ru1[k], params))


def sinr_u1(real: ChannelRealization, i: int, k: int,
            params: SystemParams) -> float:
    """SINR at U1 for its own symbol."""
    _check_index(i, real.g_su1.shape[0], "BS antenna")
    _check_index(k, real.g_ru1.shape[0], "relay transmit antenna")
    return float(sinr_u1_v(real.g_su1[i], real.g_ru1[k], params))


def snr_u2(real: ChannelRealization, k: int) -> float:
    """Received SNR at U2 from relay transmit antenna k."""
    _check_index(k, real.g_ru2.shape[0], "relay transmit antenna")
    return float(real.g_ru2[k])


def sinr_e2e_u2(real: ChannelRealization, i: int, j: int, k: int,
                params: SystemParams) -> float:
    """End-to-end SINR of the far user: the weakest of the U1-decode,
    relay-decode and relay->U2 stages."""
    return min(
        sinr_u1_decode_u2(real, i, k, params),
        sinr_relay(real, i, j, k, params),
        snr_u2(real, k),
    )
