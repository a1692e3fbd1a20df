"""Seedable i.i.d. Rayleigh-fading channel generation.

Rayleigh fading means every power gain rho*|h|^2 is exponentially distributed
with mean equal to the matching entry of :class:`~fdnoma.model.DerivedParams`
(the relay->U1 interference link uses the k1-scaled variance).

Determinism contract: a generator is identified by ``(seed, stream_id)`` and
its draws are defined by consuming a counter-based Philox stream in a fixed
layout, so identical ``(seed, stream_id, draw index)`` yields a bit-identical
realization.  ``draw_batch(n)`` produces exactly the same sequence as n
successive ``draw()`` calls, which lets parallel Monte-Carlo chunks own
disjoint streams without any coordination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ChannelRealization, SystemParams, derive

__all__ = ["ChannelGenerator", "ChannelBatch"]

# stream_id values at or above this bound are reserved for auxiliary streams
# (e.g. the random-selection scheme), keeping them disjoint from channel use.
AUX_STREAM_BASE = 1 << 62


@dataclass(frozen=True)
class ChannelBatch:
    """A stack of channel realizations with a leading trial axis."""

    g_su1: np.ndarray  # (n, n_t)
    g_sr: np.ndarray   # (n, n_t, M)
    g_si: np.ndarray   # (n, M, M)
    g_ru1: np.ndarray  # (n, M)
    g_ru2: np.ndarray  # (n, M)

    def __len__(self) -> int:
        return self.g_su1.shape[0]

    def realization(self, t: int) -> ChannelRealization:
        """View trial ``t`` as a single :class:`ChannelRealization`."""
        return ChannelRealization(
            g_su1=self.g_su1[t],
            g_sr=self.g_sr[t],
            g_si=self.g_si[t],
            g_ru1=self.g_ru1[t],
            g_ru2=self.g_ru2[t],
        )


class ChannelGenerator:
    """Draws i.i.d. exponential channel-gain realizations.

    Parameters
    ----------
    params : SystemParams
        Model constants; fixes array shapes and gain means.
    seed : int
        64-bit base seed shared by all streams of one experiment.
    stream_id : int
        Sub-stream index (< 2**62); distinct ids give independent streams.
    """

    def __init__(self, params: SystemParams, seed: int, stream_id: int = 0):
        if not 0 <= seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")
        if not 0 <= stream_id < AUX_STREAM_BASE:
            raise ValueError("stream_id out of range")
        self.params = params
        self.seed = seed
        self.stream_id = stream_id
        d = derive(params)
        nt, m = params.n_t, params.m_total
        # Per-draw variate layout: g_su1, g_sr (row-major), g_si (row-major),
        # g_ru1, g_ru2.  Changing this layout changes every stream.
        self._nt, self._m = nt, m
        self._per_draw = nt + nt * m + m * m + 2 * m
        self._means = d
        self._rng = np.random.Generator(
            np.random.Philox(key=np.array([seed, stream_id], dtype=np.uint64))
        )

    def clone(self, stream_id: int) -> "ChannelGenerator":
        """A fresh generator on the same seed with a new sub-stream."""
        return ChannelGenerator(self.params, self.seed, stream_id)

    def draw(self) -> ChannelRealization:
        """Draw the next single realization of this stream."""
        return self.draw_batch(1).realization(0)

    def draw_batch(self, n: int) -> ChannelBatch:
        """Draw the next ``n`` realizations as stacked arrays."""
        if n < 1:
            raise ValueError("batch size must be >= 1")
        nt, m = self._nt, self._m
        d = self._means
        # Inverse-CDF exponentials from the 64-bit uniform stream; one row of
        # the (n, per_draw) block per realization, so batch and sequential
        # drawing consume the stream identically.
        block = self._rng.standard_exponential((n, self._per_draw),
                                               method="inv")
        pos = 0

        def take(count: int) -> np.ndarray:
            nonlocal pos
            out = block[:, pos:pos + count]
            pos += count
            return out

        g_su1 = take(nt) * d.gbar_su1
        g_sr = take(nt * m).reshape(n, nt, m) * d.gbar_sr
        g_si = take(m * m).reshape(n, m, m) * d.gbar_si
        g_ru1 = take(m) * d.gbar_ru1
        g_ru2 = take(m) * d.gbar_ru2
        return ChannelBatch(g_su1=g_su1, g_sr=g_sr, g_si=g_si,
                            g_ru1=g_ru1, g_ru2=g_ru2)


def selection_rng(seed: int, stream_id: int) -> np.random.Generator:
    """Independent uniform stream for randomized antenna selection.

    Keyed into the reserved auxiliary range so it never collides with the
    channel streams of the same experiment.
    """
    key = np.array([seed, AUX_STREAM_BASE + stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
