"""Baseband waveform synthesis and PAPR statistics.

Single-carrier delay-aligned transmission superposes one pulse-shaped,
pre-delayed symbol stream per compensated path; OFDM superposes one stream
per (UE, subcarrier).  The per-antenna peak-to-average power ratio is
measured on the oversampled post-filter waveform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .channel import ChannelSet, SimConfig
from .delay_design import DelayPlan
from .pulse import rrc_taps

__all__ = [
    "Waveform",
    "PaprResult",
    "qam4_map",
    "synthesize_dam_waveform",
    "synthesize_ofdm_waveform",
    "synthesize_strongest_path_waveform",
    "papr_blocks",
    "papr_ccdf",
    "ccdf_from_paprs",
    "SYNTH_SPAN_SYMBOLS",
]

# RRC truncation for synthesis; analysis windows are configured separately.
SYNTH_SPAN_SYMBOLS = 16


@dataclass
class Waveform:
    """Per-antenna complex baseband samples at rate oversample / T."""

    samples: np.ndarray  # (n_antennas, n_samples)
    oversample: int

    @property
    def n_antennas(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class PaprResult:
    papr: np.ndarray           # linear, one entry per (block, antenna)
    thresholds_db: np.ndarray
    ccdf: np.ndarray


def qam4_map(bits) -> np.ndarray:
    """Gray-mapped 4-QAM: bit pair (b1, b0) -> ((1-2 b1) + j (1-2 b0)) / sqrt2."""
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.size % 2 != 0:
        raise ValueError("bit stream must be 1-D with even length")
    if not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0 or 1")
    b1 = bits[0::2].astype(float)
    b0 = bits[1::2].astype(float)
    return ((1.0 - 2.0 * b1) + 1j * (1.0 - 2.0 * b0)) / np.sqrt(2.0)


def _stream_delays(plan_or_delays) -> list[int]:
    if isinstance(plan_or_delays, DelayPlan):
        return list(plan_or_delays.kappa)
    return [int(v) for v in plan_or_delays]


def _shape_streams(streams: np.ndarray, delays, oversample: int, beta: float) -> np.ndarray:
    """Upsample, delay and RRC-filter unit-rate streams; trims filter edges.

    Returns (n_streams, (n_symbols + max_delay) * oversample) samples whose
    first sample corresponds to symbol time 0.
    """
    streams = np.atleast_2d(streams)
    n_streams, n_sym = streams.shape
    delays = np.asarray(delays, dtype=int)
    max_delay = int(delays.max()) if delays.size else 0
    total = (n_sym + max_delay) * oversample
    up = np.zeros((n_streams, total), dtype=complex)
    for s in range(n_streams):
        start = delays[s] * oversample
        up[s, start : start + n_sym * oversample : oversample] = streams[s]
    taps = rrc_taps(beta, oversample, SYNTH_SPAN_SYMBOLS)
    shaped = fftconvolve(up, taps[None, :], mode="full", axes=1)
    lead = SYNTH_SPAN_SYMBOLS * oversample
    return shaped[:, lead : lead + total]


def synthesize_dam_waveform(symbols, beamformers, plans, cfg: SimConfig) -> Waveform:
    """Superpose per-path beamformed, pre-delayed streams on every antenna.

    ``symbols`` is (K, n_symbols); ``plans`` supplies one delay per stream of
    each UE (a DelayPlan or a plain delay sequence); the stacked transmit
    vectors come from ``beamformers.f_bar``.
    """
    symbols = np.asarray(symbols, dtype=complex)
    K = symbols.shape[0]
    m_t = cfg.M_t
    streams = []
    delays = []
    weights = []
    for k in range(K):
        kappa = _stream_delays(plans[k])
        f_bar = beamformers.f_bar[k]
        if f_bar.size != m_t * len(kappa):
            raise ValueError("beamformer length does not match stream count")
        for i, d in enumerate(kappa):
            streams.append(symbols[k])
            delays.append(d)
            weights.append(f_bar[i * m_t : (i + 1) * m_t])
    shaped = _shape_streams(np.array(streams), delays, cfg.oversample, cfg.beta)
    samples = np.asarray(weights).T @ shaped
    return Waveform(samples=samples, oversample=cfg.oversample)


def synthesize_ofdm_waveform(symbols, beamformers, cfg: SimConfig) -> Waveform:
    """Beamform per subcarrier, IDFT, prepend cyclic prefixes, shape with RRC.

    ``symbols`` is (K, n_ofdm_symbols, M); the serialized sample stream runs
    at rate 1/T before oversampled pulse shaping with the same filter as the
    single-carrier waveform.
    """
    symbols = np.asarray(symbols, dtype=complex)
    K, n_ofdm, M = symbols.shape
    if M != cfg.M:
        raise ValueError(f"expected {cfg.M} subcarriers, got {M}")
    spectrum = np.einsum("kdm,kmt->dmt", symbols, beamformers.v)
    time = np.fft.ifft(spectrum, axis=1, norm="ortho")            # (D, M, M_t)
    with_cp = np.concatenate([time[:, M - cfg.G_cp :, :], time], axis=1)
    serial = with_cp.reshape(n_ofdm * (M + cfg.G_cp), -1).T        # (M_t, N)
    shaped = _shape_streams(serial, np.zeros(serial.shape[0], int), cfg.oversample, cfg.beta)
    return Waveform(samples=shaped, oversample=cfg.oversample)


def synthesize_strongest_path_waveform(
    symbols, channels: ChannelSet, P: float, cfg: SimConfig
) -> Waveform:
    """One eigen-beamformed stream per UE on its strongest path, no delays."""
    symbols = np.asarray(symbols, dtype=complex)
    K = symbols.shape[0]
    weights = []
    for k in range(K):
        ue = channels.ues[k]
        strongest = max(ue.paths, key=lambda p: np.linalg.norm(p.gain))
        _, _, vh = np.linalg.svd(strongest.gain, full_matrices=False)
        weights.append(np.sqrt(P / K) * vh[0].conj())
    shaped = _shape_streams(symbols, np.zeros(K, int), cfg.oversample, cfg.beta)
    samples = np.asarray(weights).T @ shaped
    return Waveform(samples=samples, oversample=cfg.oversample)


def papr_blocks(waveform: Waveform, block_symbols: int) -> np.ndarray:
    """Per-(block, antenna) PAPR max|x|^2 / mean|x|^2, linear scale."""
    if waveform.samples.size == 0:
        raise ValueError("empty waveform")
    block = block_symbols * waveform.oversample
    n_blocks = waveform.samples.shape[1] // block
    if n_blocks == 0:
        raise ValueError("waveform shorter than one block")
    x = waveform.samples[:, : n_blocks * block]
    p = np.abs(x) ** 2
    p = p.reshape(p.shape[0], n_blocks, block)
    return (p.max(axis=2) / p.mean(axis=2)).T  # (n_blocks, n_antennas)


def ccdf_from_paprs(paprs, thresholds_db) -> PaprResult:
    paprs = np.asarray(paprs, dtype=float).ravel()
    thresholds_db = np.asarray(thresholds_db, dtype=float)
    papr_db = 10.0 * np.log10(paprs)
    ccdf = np.array([(papr_db > th).mean() for th in thresholds_db])
    return PaprResult(papr=paprs, thresholds_db=thresholds_db, ccdf=ccdf)


def papr_ccdf(waveform: Waveform, block_symbols: int, thresholds_db) -> PaprResult:
    """Exceedance probability of the per-block-per-antenna PAPR in dB."""
    return ccdf_from_paprs(papr_blocks(waveform, block_symbols), thresholds_db)
