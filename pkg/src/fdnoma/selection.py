"""Antenna-selection schemes.

Each scheme picks one BS transmit antenna (i), one relay receive antenna (j)
and one relay transmit antenna (k) per channel realization:

* ``max-u1``       -- maximize the near user's SINR, then patch up the relay
                      hop with the remaining receive-antenna choice.
* ``max-u2``       -- sequential selection favouring the far user: strongest
                      relay->U2 link, then weakest self-interference into the
                      chosen transmit antenna, then strongest BS->relay link.
* ``qos-static``   -- two-stage QoS provisioning: restrict to the set A of
                      triples whose end-to-end far-user SINR meets the target
                      rate, then maximize the near user's SINR inside A.
* ``qos-dyn-*``    -- QoS provisioning with dynamic receive/transmit
                      clustering of the relay antennas (exhaustive partition
                      search, or a greedy growth chain).
* ``optimum``      -- exhaustive per-realization sum-rate maximizer.
* ``optimum-u2``   -- exhaustive per-realization far-user SINR maximizer.
* ``random``       -- uniform independent antenna indices.

Ties break toward the lowest index everywhere (they have probability zero
under continuous fading).  All functions are pure; ``random`` takes its RNG
explicitly.  Scalar functions operate on one :class:`ChannelRealization`;
``*_batch`` variants operate on a :class:`ChannelBatch` and return per-trial
index arrays, and are verified against the scalar versions in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from .channel import ChannelBatch
from .model import (
    ChannelRealization,
    SystemParams,
    derive,
    sinr_relay_v,
    sinr_u1_decode_u2_v,
    sinr_u1_v,
)

__all__ = [
    "AntennaDecision",
    "BatchDecision",
    "SchemeOptions",
    "SCHEME_NAMES",
    "decide",
    "decide_batch",
    "iter_partitions",
    "chain_partitions",
    "select_max_u1",
    "select_max_u2",
    "select_qos_static",
    "select_qos_dynamic",
    "select_optimum",
    "select_optimum_u2",
    "select_random",
]

SCHEME_NAMES = (
    "max-u1",
    "max-u2",
    "qos-static",
    "qos-dyn-alg1",
    "qos-dyn-exhaustive",
    "optimum",
    "optimum-u2",
    "random",
)


@dataclass(frozen=True)
class AntennaDecision:
    """Selected antenna indices for one realization.

    ``j_star`` and ``k_star`` are global relay antenna indices.  ``partition``
    is the (receive, transmit) index split, present only for the dynamic
    clustering schemes.  ``qos_feasible`` is set by the QoS schemes: False
    means the feasibility set A was empty and the indices are the max-u1
    fallback decision.
    """

    i_star: int
    j_star: int
    k_star: int
    partition: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    qos_feasible: bool | None = None


@dataclass(frozen=True)
class BatchDecision:
    """Per-trial selected indices for a batch of realizations."""

    i: np.ndarray
    j: np.ndarray
    k: np.ndarray
    feasible: np.ndarray | None = None  # QoS schemes only
    part_id: np.ndarray | None = None   # dynamic schemes only
    partitions: list[tuple[tuple[int, ...], tuple[int, ...]]] | None = None


@dataclass(frozen=True)
class SchemeOptions:
    """Behavioural switches shared by the QoS schemes.

    ``qos_fallback`` controls how metric code accounts the near user on
    realizations with empty A ("max-u1": evaluate on the fallback triple;
    "zero": count zero U1 rate).  Selection itself always returns the max-u1
    fallback indices.  ``alg1_growth`` picks the greedy chain direction for
    the dynamic clustering heuristic.
    """

    qos_fallback: str = "max-u1"
    alg1_growth: str = "rx"

    def __post_init__(self) -> None:
        if self.qos_fallback not in ("max-u1", "zero"):
            raise ValueError(f"unknown qos_fallback {self.qos_fallback!r}")
        if self.alg1_growth not in ("rx", "tx"):
            raise ValueError(f"unknown alg1_growth {self.alg1_growth!r}")


def static_split(params: SystemParams) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Static partition convention: receive antennas are relay indices
    0..m_r-1, transmit antennas m_r..M-1."""
    return (tuple(range(params.m_r)),
            tuple(range(params.m_r, params.m_total)))


def iter_partitions(m: int) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All 2^m - 2 (receive, transmit) splits with both sides non-empty.

    Enumerated by transmit-set size ascending, then lexicographically, which
    fixes the tie-breaking order of the exhaustive dynamic search.
    """
    if m < 2:
        raise ValueError("dynamic clustering needs at least 2 relay antennas")
    antennas = range(m)
    for tx_size in range(1, m):
        for tx in combinations(antennas, tx_size):
            rx = tuple(a for a in antennas if a not in tx)
            yield rx, tx


def chain_partitions(m: int, growth: str = "rx") \
        -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Greedy growth chain of m - 1 partitions.

    ``growth="rx"`` grows the receive set from index 0 upward (so the chain
    passes through every prefix split, including the static one);
    ``growth="tx"`` grows the transmit set instead.
    """
    if m < 2:
        raise ValueError("dynamic clustering needs at least 2 relay antennas")
    chain = []
    for size in range(1, m):
        prefix = tuple(range(size))
        rest = tuple(range(size, m))
        if growth == "rx":
            chain.append((prefix, rest))
        elif growth == "tx":
            chain.append((rest, prefix))
        else:
            raise ValueError(f"unknown growth direction {growth!r}")
    return chain


# ---------------------------------------------------------------------------
# scalar schemes
# ---------------------------------------------------------------------------

def select_max_u1(real: ChannelRealization, params: SystemParams) -> AntennaDecision:
    """Near-user-first selection on the static split.

    The U1 objective a1*g_su1[i]/(g_ru1[k]+1) is separable, so i* is the
    strongest BS->U1 antenna and k* the weakest interfering transmit antenna;
    j* then maximizes the relay decode SINR for that (i*, k*).
    """
    rx, tx = static_split(params)
    i_star = int(np.argmax(real.g_su1))
    k_star = tx[int(np.argmin(real.g_ru1[list(tx)]))]
    relay = sinr_relay_v(real.g_sr[i_star, list(rx)],
                         real.g_si[k_star, list(rx)], params)
    j_star = rx[int(np.argmax(relay))]
    return AntennaDecision(i_star=i_star, j_star=j_star, k_star=k_star)


def select_max_u2(real: ChannelRealization, params: SystemParams) -> AntennaDecision:
    """Far-user-first sequential selection on the static split.

    k* maximizes the relay->U2 gain; j* minimizes the self-interference into
    k*; i* maximizes the BS->relay gain toward j*.  This is the analyzed
    sequential realization, not an exhaustive search of the far-user SINR
    (see :func:`select_optimum_u2` for that).
    """
    rx, tx = static_split(params)
    k_star = tx[int(np.argmax(real.g_ru2[list(tx)]))]
    j_star = rx[int(np.argmin(real.g_si[k_star, list(rx)]))]
    i_star = int(np.argmax(real.g_sr[:, j_star]))
    return AntennaDecision(i_star=i_star, j_star=j_star, k_star=k_star)


def _qos_decide(real: ChannelRealization, params: SystemParams, theta2: float,
                rx: Sequence[int], tx: Sequence[int]) \
        -> tuple[float, tuple[int, int, int]] | None:
    """Two-stage QoS decision restricted to one (rx, tx) partition.

    Returns (U1 SINR, (i, j, k)) of the best feasible triple, or None when
    the feasibility set A is empty.  Stage 2 maximizes the U1 SINR over (i, k)
    pairs appearing in A; stage 3 maximizes the relay decode SINR over the
    A-consistent receive antennas.
    """
    n_t = real.g_su1.shape[0]
    best_val = -np.inf
    best_ik: tuple[int, int] | None = None
    for i in range(n_t):
        for k in tx:
            g12 = sinr_u1_decode_u2_v(real.g_su1[i], real.g_ru1[k], params)
            if not (g12 >= theta2 and real.g_ru2[k] >= theta2):
                continue
            if not any(
                sinr_relay_v(real.g_sr[i, j], real.g_si[k, j], params) >= theta2
                for j in rx
            ):
                continue
            val = sinr_u1_v(real.g_su1[i], real.g_ru1[k], params)
            if val > best_val:
                best_val = val
                best_ik = (i, k)
    if best_ik is None:
        return None
    i_star, k_star = best_ik
    best_relay = -np.inf
    j_star = rx[0]
    for j in rx:
        relay = sinr_relay_v(real.g_sr[i_star, j], real.g_si[k_star, j], params)
        if relay >= theta2 and relay > best_relay:
            best_relay = relay
            j_star = j
    return float(best_val), (i_star, j_star, k_star)


def select_qos_static(real: ChannelRealization, params: SystemParams) -> AntennaDecision:
    """QoS provisioning on the static split.

    Falls back to the max-u1 decision with ``qos_feasible=False`` when no
    triple meets the far user's target; metric code treats such realizations
    as far-user outages regardless of the fallback.
    """
    theta2 = derive(params).theta2
    rx, tx = static_split(params)
    found = _qos_decide(real, params, theta2, rx, tx)
    if found is None:
        fb = select_max_u1(real, params)
        return AntennaDecision(i_star=fb.i_star, j_star=fb.j_star,
                               k_star=fb.k_star, qos_feasible=False)
    _, (i_star, j_star, k_star) = found
    return AntennaDecision(i_star=i_star, j_star=j_star, k_star=k_star,
                           qos_feasible=True)


def select_qos_dynamic(real: ChannelRealization, params: SystemParams,
                       mode: str = "exhaustive",
                       growth: str = "rx") -> AntennaDecision:
    """QoS provisioning with dynamic receive/transmit clustering.

    ``mode="exhaustive"`` searches all 2^M - 2 partitions; ``mode="algorithm1"``
    searches only the M - 1 partitions of the greedy growth chain.  Either
    way the per-partition decision follows the static two-stage rule and the
    best feasible partition by U1 SINR wins, so the exhaustive mode dominates
    the chain mode, which in turn dominates the static split (the chain
    contains it when growing the receive set).
    """
    m = params.m_total
    if m < 2:
        raise ValueError("dynamic clustering needs at least 2 relay antennas")
    theta2 = derive(params).theta2
    if mode == "exhaustive":
        partitions: Sequence = list(iter_partitions(m))
    elif mode == "algorithm1":
        partitions = chain_partitions(m, growth)
    else:
        raise ValueError(f"unknown dynamic mode {mode!r}")
    best_val = -np.inf
    best: tuple[tuple[int, int, int], tuple] | None = None
    for rx, tx in partitions:
        found = _qos_decide(real, params, theta2, rx, tx)
        if found is not None and found[0] > best_val:
            best_val = found[0]
            best = (found[1], (rx, tx))
    if best is None:
        fb = select_max_u1(real, params)
        return AntennaDecision(i_star=fb.i_star, j_star=fb.j_star,
                               k_star=fb.k_star, partition=static_split(params),
                               qos_feasible=False)
    (i_star, j_star, k_star), partition = best
    return AntennaDecision(i_star=i_star, j_star=j_star, k_star=k_star,
                           partition=partition, qos_feasible=True)


def select_optimum(real: ChannelRealization, params: SystemParams) -> AntennaDecision:
    """Exhaustive per-realization maximizer of the instantaneous sum rate
    log2(1+g1) + log2(1+g2) over all triples of the static split."""
    rx, tx = static_split(params)
    best_val = -np.inf
    best = (0, rx[0], tx[0])
    for i in range(params.n_t):
        for j in rx:
            for k in tx:
                g1 = sinr_u1_v(real.g_su1[i], real.g_ru1[k], params)
                g2 = min(
                    sinr_u1_decode_u2_v(real.g_su1[i], real.g_ru1[k], params),
                    sinr_relay_v(real.g_sr[i, j], real.g_si[k, j], params),
                    real.g_ru2[k],
                )
                val = np.log2(1.0 + g1) + np.log2(1.0 + g2)
                if val > best_val:
                    best_val = val
                    best = (i, j, k)
    return AntennaDecision(i_star=best[0], j_star=best[1], k_star=best[2])


def select_optimum_u2(real: ChannelRealization, params: SystemParams) -> AntennaDecision:
    """Exhaustive per-realization maximizer of the far user's end-to-end
    SINR over all triples of the static split."""
    rx, tx = static_split(params)
    best_val = -np.inf
    best = (0, rx[0], tx[0])
    for i in range(params.n_t):
        for j in rx:
            for k in tx:
                val = min(
                    sinr_u1_decode_u2_v(real.g_su1[i], real.g_ru1[k], params),
                    sinr_relay_v(real.g_sr[i, j], real.g_si[k, j], params),
                    real.g_ru2[k],
                )
                if val > best_val:
                    best_val = val
                    best = (i, j, k)
    return AntennaDecision(i_star=best[0], j_star=best[1], k_star=best[2])


def select_random(real: ChannelRealization, params: SystemParams,
                  rng: np.random.Generator) -> AntennaDecision:
    """Uniform independent indices on the static split."""
    rx, tx = static_split(params)
    i_star = int(rng.integers(0, params.n_t))
    j_star = rx[int(rng.integers(0, params.m_r))]
    k_star = tx[int(rng.integers(0, params.m_t))]
    return AntennaDecision(i_star=i_star, j_star=j_star, k_star=k_star)


def decide(scheme: str, real: ChannelRealization, params: SystemParams,
           options: SchemeOptions = SchemeOptions(),
           rng: np.random.Generator | None = None) -> AntennaDecision:
    """Dispatch a scheme by its CLI name."""
    if scheme == "max-u1":
        return select_max_u1(real, params)
    if scheme == "max-u2":
        return select_max_u2(real, params)
    if scheme == "qos-static":
        return select_qos_static(real, params)
    if scheme == "qos-dyn-alg1":
        return select_qos_dynamic(real, params, mode="algorithm1",
                                  growth=options.alg1_growth)
    if scheme == "qos-dyn-exhaustive":
        return select_qos_dynamic(real, params, mode="exhaustive")
    if scheme == "optimum":
        return select_optimum(real, params)
    if scheme == "optimum-u2":
        return select_optimum_u2(real, params)
    if scheme == "random":
        if rng is None:
            raise ValueError("random scheme needs an explicit RNG")
        return select_random(real, params, rng)
    raise ValueError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# batch (vectorized) schemes
# ---------------------------------------------------------------------------

def _rows(n: int) -> np.ndarray:
    return np.arange(n)


def _partition_sinrs(batch: ChannelBatch, params: SystemParams,
                     rx: Sequence[int], tx: Sequence[int]):
    """Per-trial SINR tensors of one partition.

    Returns gam12 (n, n_t, Kt), gamR (n, n_t, Jr, Kt), gru2 (n, Kt) and the
    U1 objective (n, n_t, Kt).
    """
    rx = np.asarray(rx)
    tx = np.asarray(tx)
    g_su1 = batch.g_su1[:, :, None]              # (n, n_t, 1)
    g_ru1_tx = batch.g_ru1[:, tx][:, None, :]    # (n, 1, Kt)
    gam12 = sinr_u1_decode_u2_v(g_su1, g_ru1_tx, params)
    obj = sinr_u1_v(g_su1, g_ru1_tx, params)
    g_sr_rx = batch.g_sr[:, :, rx][:, :, :, None]            # (n, n_t, Jr, 1)
    g_si_jk = batch.g_si[:, tx][:, :, rx]                    # (n, Kt, Jr)
    g_si_jk = np.transpose(g_si_jk, (0, 2, 1))[:, None, :, :]  # (n, 1, Jr, Kt)
    gamR = sinr_relay_v(g_sr_rx, g_si_jk, params)
    gru2_tx = batch.g_ru2[:, tx]
    return gam12, gamR, gru2_tx, obj


def select_max_u1_batch(batch: ChannelBatch, params: SystemParams) -> BatchDecision:
    rx, tx = static_split(params)
    rx_a, tx_a = np.asarray(rx), np.asarray(tx)
    n = len(batch)
    rows = _rows(n)
    i = batch.g_su1.argmax(axis=1)
    k = tx_a[batch.g_ru1[:, tx_a].argmin(axis=1)]
    g_sr_sel = batch.g_sr[rows[:, None], i[:, None], rx_a[None, :]]
    g_si_sel = batch.g_si[rows[:, None], k[:, None], rx_a[None, :]]
    relay = sinr_relay_v(g_sr_sel, g_si_sel, params)
    j = rx_a[relay.argmax(axis=1)]
    return BatchDecision(i=i, j=j, k=k)


def select_max_u2_batch(batch: ChannelBatch, params: SystemParams) -> BatchDecision:
    rx, tx = static_split(params)
    rx_a, tx_a = np.asarray(rx), np.asarray(tx)
    n = len(batch)
    rows = _rows(n)
    k = tx_a[batch.g_ru2[:, tx_a].argmax(axis=1)]
    j = rx_a[batch.g_si[rows, k][:, rx_a].argmin(axis=1)]
    i = batch.g_sr[rows, :, j].argmax(axis=1)
    return BatchDecision(i=i, j=j, k=k)


def _qos_stage23_batch(batch: ChannelBatch, params: SystemParams, theta2: float,
                       rx: Sequence[int], tx: Sequence[int]):
    """Vectorized two-stage QoS decision for one partition.

    Returns (value, i, j, k) arrays; value is -inf on trials with empty A.
    """
    rx_a, tx_a = np.asarray(rx), np.asarray(tx)
    n = len(batch)
    rows = _rows(n)
    gam12, gamR, gru2_tx, obj = _partition_sinrs(batch, params, rx, tx)
    ok = ((gam12[:, :, None, :] >= theta2)
          & (gamR >= theta2)
          & (gru2_tx[:, None, None, :] >= theta2))    # (n, n_t, Jr, Kt)
    pair_ok = ok.any(axis=2)                          # (n, n_t, Kt)
    masked = np.where(pair_ok, obj, -np.inf)
    flat = masked.reshape(n, -1)
    arg = flat.argmax(axis=1)
    value = flat[rows, arg]
    i_loc, k_loc = np.divmod(arg, tx_a.size)
    j_vals = gamR[rows, i_loc, :, k_loc]              # (n, Jr)
    j_mask = ok[rows, i_loc, :, k_loc]
    j_loc = np.where(j_mask, j_vals, -np.inf).argmax(axis=1)
    return value, i_loc, rx_a[j_loc], tx_a[k_loc]


def select_qos_static_batch(batch: ChannelBatch, params: SystemParams) -> BatchDecision:
    theta2 = derive(params).theta2
    rx, tx = static_split(params)
    value, i, j, k = _qos_stage23_batch(batch, params, theta2, rx, tx)
    feasible = np.isfinite(value)
    if not feasible.all():
        fb = select_max_u1_batch(batch, params)
        bad = ~feasible
        i = np.where(bad, fb.i, i)
        j = np.where(bad, fb.j, j)
        k = np.where(bad, fb.k, k)
    return BatchDecision(i=i, j=j, k=k, feasible=feasible)


def select_qos_dynamic_batch(batch: ChannelBatch, params: SystemParams,
                             mode: str = "exhaustive",
                             growth: str = "rx") -> BatchDecision:
    m = params.m_total
    if m < 2:
        raise ValueError("dynamic clustering needs at least 2 relay antennas")
    theta2 = derive(params).theta2
    if mode == "exhaustive":
        partitions = list(iter_partitions(m))
    elif mode == "algorithm1":
        partitions = chain_partitions(m, growth)
    else:
        raise ValueError(f"unknown dynamic mode {mode!r}")
    n = len(batch)
    best_val = np.full(n, -np.inf)
    best_i = np.zeros(n, dtype=np.intp)
    best_j = np.zeros(n, dtype=np.intp)
    best_k = np.zeros(n, dtype=np.intp)
    part_id = np.full(n, -1, dtype=np.intp)
    for pid, (rx, tx) in enumerate(partitions):
        value, i, j, k = _qos_stage23_batch(batch, params, theta2, rx, tx)
        upd = value > best_val
        if upd.any():
            best_val[upd] = value[upd]
            best_i[upd] = i[upd]
            best_j[upd] = j[upd]
            best_k[upd] = k[upd]
            part_id[upd] = pid
    feasible = np.isfinite(best_val)
    if not feasible.all():
        fb = select_max_u1_batch(batch, params)
        bad = ~feasible
        best_i = np.where(bad, fb.i, best_i)
        best_j = np.where(bad, fb.j, best_j)
        best_k = np.where(bad, fb.k, best_k)
    return BatchDecision(i=best_i, j=best_j, k=best_k, feasible=feasible,
                         part_id=part_id, partitions=partitions)


def _exhaustive_objective(batch: ChannelBatch, params: SystemParams,
                          sum_rate: bool) -> BatchDecision:
    rx, tx = static_split(params)
    rx_a, tx_a = np.asarray(rx), np.asarray(tx)
    n = len(batch)
    gam12, gamR, gru2_tx, _ = _partition_sinrs(batch, params, rx, tx)
    gam2 = np.minimum(np.minimum(gam12[:, :, None, :], gamR),
                      gru2_tx[:, None, None, :])
    if sum_rate:
        g_su1 = batch.g_su1[:, :, None]
        g_ru1_tx = batch.g_ru1[:, tx_a][:, None, :]
        gam1 = sinr_u1_v(g_su1, g_ru1_tx, params)
        objective = np.log2(1.0 + gam1)[:, :, None, :] + np.log2(1.0 + gam2)
    else:
        objective = gam2
    arg = objective.reshape(n, -1).argmax(axis=1)
    i, rem = np.divmod(arg, rx_a.size * tx_a.size)
    j_loc, k_loc = np.divmod(rem, tx_a.size)
    return BatchDecision(i=i, j=rx_a[j_loc], k=tx_a[k_loc])


def select_optimum_batch(batch: ChannelBatch, params: SystemParams) -> BatchDecision:
    return _exhaustive_objective(batch, params, sum_rate=True)


def select_optimum_u2_batch(batch: ChannelBatch, params: SystemParams) -> BatchDecision:
    return _exhaustive_objective(batch, params, sum_rate=False)


def select_random_batch(batch: ChannelBatch, params: SystemParams,
                        rng: np.random.Generator) -> BatchDecision:
    rx, tx = static_split(params)
    n = len(batch)
    i = rng.integers(0, params.n_t, size=n)
    j = np.asarray(rx)[rng.integers(0, params.m_r, size=n)]
    k = np.asarray(tx)[rng.integers(0, params.m_t, size=n)]
    return BatchDecision(i=i, j=j, k=k)


def decide_batch(scheme: str, batch: ChannelBatch, params: SystemParams,
                 options: SchemeOptions = SchemeOptions(),
                 rng: np.random.Generator | None = None) -> BatchDecision:
    """Dispatch a vectorized scheme by its CLI name."""
    if scheme == "max-u1":
        return select_max_u1_batch(batch, params)
    if scheme == "max-u2":
        return select_max_u2_batch(batch, params)
    if scheme == "qos-static":
        return select_qos_static_batch(batch, params)
    if scheme == "qos-dyn-alg1":
        return select_qos_dynamic_batch(batch, params, mode="algorithm1",
                                        growth=options.alg1_growth)
    if scheme == "qos-dyn-exhaustive":
        return select_qos_dynamic_batch(batch, params, mode="exhaustive")
    if scheme == "optimum":
        return select_optimum_batch(batch, params)
    if scheme == "optimum-u2":
        return select_optimum_u2_batch(batch, params)
    if scheme == "random":
        if rng is None:
            raise ValueError("random scheme needs an explicit RNG")
        return select_random_batch(batch, params, rng)
    raise ValueError(f"unknown scheme {scheme!r}")
