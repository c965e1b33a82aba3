"""Shared builders for synthetic channels with controlled delays."""

import numpy as np

from damlink.channel import ChannelSet, PathComponent, UEChannel


def rank1_gain(rng, m_r, m_t, scale=1.0):
    u = rng.standard_normal(m_r) + 1j * rng.standard_normal(m_r)
    v = rng.standard_normal(m_t) + 1j * rng.standard_normal(m_t)
    return scale * np.outer(u, v) / np.sqrt(2.0)


def full_rank_gain(rng, m_r, m_t, scale=1.0):
    return scale * (rng.standard_normal((m_r, m_t)) + 1j * rng.standard_normal((m_r, m_t)))


def make_channel_set(
    rng, m_r, m_t, delay_lists, frac_lists=None, T=5e-9, scale=1.0, full_rank=False
):
    """Channel set with prescribed integer delays and optional fractions of T.

    ``delay_lists`` is one list of strictly increasing integers per UE;
    ``frac_lists`` holds matching fractional offsets in units of T within
    (-1/2, 1/2], defaulting to zero.  Gains are rank-1 outer products like the
    production model unless ``full_rank`` is set.
    """
    gain_of = full_rank_gain if full_rank else rank1_gain
    ues = []
    for k, n_list in enumerate(delay_lists):
        fracs = frac_lists[k] if frac_lists is not None else [0.0] * len(n_list)
        paths = []
        for n, frac in zip(n_list, fracs):
            tau_f = frac * T
            paths.append(
                PathComponent(
                    gain=gain_of(rng, m_r, m_t, scale),
                    tau_s=n * T + tau_f,
                    n=int(n),
                    tau_f_s=tau_f,
                )
            )
        ues.append(UEChannel(paths=tuple(paths), ue_index=k))
    return ChannelSet(ues=tuple(ues))


def random_delay_channel_set(
    rng, m_r, m_t, K, L, span=30, fractional=True, T=5e-9, scale=1.0, full_rank=False
):
    delay_lists = [
        np.sort(rng.choice(np.arange(span + 1), size=L, replace=False)).tolist()
        for _ in range(K)
    ]
    frac_lists = None
    if fractional:
        frac_lists = [rng.uniform(-0.5, 0.5, L).tolist() for _ in range(K)]
    return make_channel_set(
        rng, m_r, m_t, delay_lists, frac_lists, T=T, scale=scale, full_rank=full_rank
    )
