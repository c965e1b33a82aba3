"""Effective channels, beamformers and SINRs for delay-aligned transmission.

Three pipelines share this module:

* double-side eigen-beamforming on integer delays, built from per-pair
  effective-channel tensors grouped by residual delay difference;
* BS-side eigen-beamforming under fractional delays, built from
  raised-cosine-weighted block matrices;
* ISI-zero-forcing transmission with alternating MMSE updates of the
  receive and transmit vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, UEChannel
from .delay_design import DelayPlan, InfeasibleError
from .numerics import RANK_TOL, null_space_basis
from .pulse import build_rho_table

__all__ = [
    "BeamformerSet",
    "PairTensor",
    "EffectiveChannelTensor",
    "FractionalEffectiveChannels",
    "PowerTerms",
    "IsiZfState",
    "assemble_effective_channels",
    "eigen_beamform_doubleside",
    "bs_side_kappa",
    "bs_side_rho_tables",
    "assemble_bs_side",
    "power_terms",
    "eigen_beamform_bs_side",
    "null_space_projection",
    "mmse_receive_update",
    "mmse_transmit_update",
    "isi_zf_alternating",
]


@dataclass
class BeamformerSet:
    """Stacked per-UE transmit and receive vectors under a shared power budget."""

    f_bar: list[np.ndarray]
    w_bar: list[np.ndarray]
    power: float

    def total_transmit_power(self) -> float:
        return float(sum(np.linalg.norm(f) ** 2 for f in self.f_bar))


@dataclass(frozen=True)
class PairTensor:
    """Blocks of one (receiving UE, transmitting UE) pair keyed by delay lag."""

    delta_min: int
    delta_max: int
    blocks: dict  # q -> (M_r * R_k, M_t * I_kprime)

    def block(self, q: int, shape) -> np.ndarray:
        found = self.blocks.get(q)
        return found if found is not None else np.zeros(shape, dtype=complex)


@dataclass(frozen=True)
class EffectiveChannelTensor:
    pairs: dict  # (k, kprime) -> PairTensor
    plans: tuple[DelayPlan, ...]
    M_r: int
    M_t: int

    @property
    def K(self) -> int:
        return len(self.plans)


def assemble_effective_channels(
    channels: ChannelSet, plans: list[DelayPlan] | tuple[DelayPlan, ...]
) -> EffectiveChannelTensor:
    """Group every (branch, stream, path) product by its residual delay lag.

    For receiving UE k and transmitting UE k', path l heard on branch r from
    stream i arrives with lag q = n_kl + kappa_{k'i} + mu_{kr} - n_{k,max}
    relative to UE k's alignment target; the block matrix at lag q holds
    H_kl in block (r, i).
    """
    if len(plans) != channels.K:
        raise ValueError("one delay plan per UE")
    M_r, M_t = channels.M_r, channels.M_t
    pairs = {}
    for k, ue in enumerate(channels.ues):
        plan_k = plans[k]
        if plan_k.n_max != ue.n_max:
            raise ValueError(f"plan for UE {k} does not target its latest path")
        for kp, _ in enumerate(channels.ues):
            plan_kp = plans[kp]
            blocks: dict[int, np.ndarray] = {}
            count = 0
            for r, mu in enumerate(plan_k.mu):
                for i, kappa in enumerate(plan_kp.kappa):
                    for l, path in enumerate(ue.paths):
                        q = path.n + kappa + mu - plan_k.n_max
                        blk = blocks.get(q)
                        if blk is None:
                            blk = np.zeros((M_r * plan_k.R, M_t * plan_kp.I), dtype=complex)
                            blocks[q] = blk
                        blk[r * M_r : (r + 1) * M_r, i * M_t : (i + 1) * M_t] = path.gain
                        count += 1
            if count != plan_k.R * plan_kp.I * ue.L:
                raise AssertionError("placement count mismatch")
            qs = blocks.keys()
            pairs[(k, kp)] = PairTensor(delta_min=min(qs), delta_max=max(qs), blocks=blocks)
    return EffectiveChannelTensor(pairs=pairs, plans=tuple(plans), M_r=M_r, M_t=M_t)


def _top_singular_pair(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u, _, vh = np.linalg.svd(a, full_matrices=False)
    return u[:, 0], vh[0].conj()


def eigen_beamform_doubleside(
    tensor: EffectiveChannelTensor, P: float, sigma2: float
) -> tuple[BeamformerSet, np.ndarray]:
    """Top singular pair of each UE's aligned block as transmit/receive vectors.

    Transmit vectors share the budget equally (P/K each); the SINR counts all
    misaligned same-UE lags and every lag of the other UEs.
    """
    if P <= 0.0 or sigma2 <= 0.0:
        raise ValueError("P and sigma2 must be positive")
    K = tensor.K
    v_list, w_list = [], []
    for k in range(K):
        pair = tensor.pairs[(k, k)]
        shape = (tensor.M_r * tensor.plans[k].R, tensor.M_t * tensor.plans[k].I)
        u, v = _top_singular_pair(pair.block(0, shape))
        v_list.append(v)
        w_list.append(u)
    frob = math.sqrt(sum(float(np.linalg.norm(v) ** 2) for v in v_list))
    f_list = [np.sqrt(P) * v / frob for v in v_list]

    sinrs = np.empty(K)
    for k in range(K):
        w = w_list[k]
        pair_self = tensor.pairs[(k, k)]
        shape_self = (w.size, f_list[k].size)
        signal = abs(np.vdot(w, pair_self.block(0, shape_self) @ f_list[k])) ** 2
        interference = 0.0
        for q, blk in pair_self.blocks.items():
            if q != 0:
                interference += abs(np.vdot(w, blk @ f_list[k])) ** 2
        for kp in range(K):
            if kp == k:
                continue
            for blk in tensor.pairs[(k, kp)].blocks.values():
                interference += abs(np.vdot(w, blk @ f_list[kp])) ** 2
        sinrs[k] = signal / (interference + sigma2 * float(np.linalg.norm(w) ** 2))
    return BeamformerSet(f_bar=f_list, w_bar=w_list, power=P), sinrs


# ---------------------------------------------------------------------------
# BS-side pipeline with fractional delays
# ---------------------------------------------------------------------------


def bs_side_kappa(ue: UEChannel) -> list[int]:
    """Transmit-side delays aligning each path to the UE's latest path."""
    return [ue.n_max - n for n in ue.n_list]


def bs_side_rho_tables(
    channels: ChannelSet, window: int, T: float, beta: float
) -> dict:
    """Correlation tables for every (receiving, transmitting) UE pair."""
    tables = {}
    for k, ue in enumerate(channels.ues):
        for kp, ue_p in enumerate(channels.ues):
            tables[(k, kp)] = build_rho_table(ue, ue_p, bs_side_kappa(ue_p), window, T, beta)
    return tables


@dataclass(frozen=True)
class FractionalEffectiveChannels:
    """Raised-cosine-weighted block matrices over a symmetric lag window.

    ``h_rho[k][n]`` couples each stream through its own aligned path,
    ``h_hat[k][n]`` through the same UE's other paths, and
    ``h_cross[(k, kp)][n]`` couples UE kp's streams into UE k.
    """

    window: int
    h_rho: tuple[np.ndarray, ...]   # per UE (2W+1, M_r, M_t * L_k)
    h_hat: tuple[np.ndarray, ...]   # per UE (2W+1, M_r, M_t * L_k)
    h_cross: dict                   # (k, kp) -> (2W+1, M_r, M_t * L_kp)

    @property
    def K(self) -> int:
        return len(self.h_rho)


def _blockize(gains: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Combine per-path gains (L, M_r, M_t) with weights (L, I, 2W+1) into
    lag-indexed block rows (2W+1, M_r, I * M_t)."""
    out = np.einsum("lrt,lin->nirt", gains, weights)
    n_lags, n_blocks, m_r, m_t = out.shape
    return out.transpose(0, 2, 1, 3).reshape(n_lags, m_r, n_blocks * m_t)


def assemble_bs_side(channels: ChannelSet, tables: dict) -> FractionalEffectiveChannels:
    """Build the aligned, cross-path and cross-UE block matrices per lag."""
    windows = {t.window for t in tables.values()}
    if len(windows) != 1:
        raise ValueError("all correlation tables must share one window")
    window = windows.pop()

    h_rho, h_hat = [], []
    h_cross = {}
    for k, ue in enumerate(channels.ues):
        gains = ue.gains
        tab = tables[(k, k)].values  # (L, L, 2W+1)
        diag_only = np.zeros_like(tab)
        idx = np.arange(ue.L)
        diag_only[idx, idx] = tab[idx, idx]
        h_rho.append(_blockize(gains, diag_only))
        h_hat.append(_blockize(gains, tab - diag_only))
        for kp, ue_p in enumerate(channels.ues):
            if kp != k:
                h_cross[(k, kp)] = _blockize(gains, tables[(k, kp)].values)
    return FractionalEffectiveChannels(
        window=window, h_rho=tuple(h_rho), h_hat=tuple(h_hat), h_cross=h_cross
    )


@dataclass(frozen=True)
class PowerTerms:
    desired: float
    isi_aligned: float   # own streams through their own paths, off-sample lags
    isi_cross: float     # own streams through the UE's other paths
    iui: float

    @property
    def interference(self) -> float:
        return self.isi_aligned + self.isi_cross + self.iui


def _lag_couplings(w: np.ndarray, h: np.ndarray, f: np.ndarray) -> np.ndarray:
    return (h @ f) @ w.conj()


def power_terms(
    F: FractionalEffectiveChannels, w_list, f_list
) -> list[PowerTerms]:
    """Decompose each UE's received power into desired/ISI/IUI components."""
    out = []
    center = F.window
    for k in range(F.K):
        a = _lag_couplings(w_list[k], F.h_rho[k], f_list[k])
        b = _lag_couplings(w_list[k], F.h_hat[k], f_list[k])
        desired = abs(a[center]) ** 2
        isi_aligned = float(np.sum(np.abs(a) ** 2) - desired)
        isi_cross = float(np.sum(np.abs(b) ** 2))
        iui = 0.0
        for kp in range(F.K):
            if kp != k:
                c = _lag_couplings(w_list[k], F.h_cross[(k, kp)], f_list[kp])
                iui += float(np.sum(np.abs(c) ** 2))
        out.append(
            PowerTerms(desired=float(desired), isi_aligned=isi_aligned,
                       isi_cross=isi_cross, iui=iui)
        )
    return out


def eigen_beamform_bs_side(
    F: FractionalEffectiveChannels, P: float, sigma2: float
) -> tuple[BeamformerSet, np.ndarray]:
    """Eigen-beamforming on the zero-lag aligned block of each UE."""
    if P <= 0.0 or sigma2 <= 0.0:
        raise ValueError("P and sigma2 must be positive")
    center = F.window
    v_list, w_list = [], []
    for k in range(F.K):
        u, v = _top_singular_pair(F.h_rho[k][center])
        v_list.append(v)
        w_list.append(u)
    frob = math.sqrt(sum(float(np.linalg.norm(v) ** 2) for v in v_list))
    f_list = [np.sqrt(P) * v / frob for v in v_list]

    terms = power_terms(F, w_list, f_list)
    sinrs = np.array(
        [
            t.desired / (t.interference + sigma2 * float(np.linalg.norm(w_list[k]) ** 2))
            for k, t in enumerate(terms)
        ]
    )
    return BeamformerSet(f_bar=f_list, w_bar=w_list, power=P), sinrs


# ---------------------------------------------------------------------------
# ISI zero-forcing with alternating MMSE updates
# ---------------------------------------------------------------------------


def _total_paths(channels: ChannelSet) -> int:
    return sum(ue.L for ue in channels.ues)


def zf_feasible(channels: ChannelSet) -> bool:
    return channels.M_t >= channels.M_r * (_total_paths(channels) - 1) + 1


def null_space_projection(channels: ChannelSet, k: int, l: int, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis orthogonal to every path matrix except UE k's path l.

    A transmit vector drawn from this span is invisible to all other paths of
    all UEs, enforcing the zero-forcing conditions by construction.
    """
    L_tot = _total_paths(channels)
    if not zf_feasible(channels):
        raise InfeasibleError(
            "zero-forcing infeasible: requires M_t >= M_r * (L_tot - 1) + 1, "
            f"got M_t={channels.M_t}, M_r={channels.M_r}, L_tot={L_tot}"
        )
    rows = [
        path.gain
        for kp, ue in enumerate(channels.ues)
        for lp, path in enumerate(ue.paths)
        if (kp, lp) != (k, l)
    ]
    stacked = np.concatenate(rows, axis=0) if rows else np.zeros((0, channels.M_t))
    return null_space_basis(stacked, tol)


@dataclass
class IsiZfState:
    """State of the alternating optimization over ZF-projected beamformers."""

    bases: list[list[np.ndarray]]     # per (UE, path) null-space basis
    b_bar: list[np.ndarray]           # per UE reduced transmit vector
    w: list[np.ndarray]               # per UE receive vector (unit norm)
    trace: list[float]                # objective value per iteration
    iterations: int

    def f_bar(self, channels: ChannelSet) -> list[np.ndarray]:
        """Full stacked transmit vectors f_kl = basis_kl @ b_kl."""
        out = []
        for k, ue in enumerate(channels.ues):
            pieces = []
            offset = 0
            for l in range(ue.L):
                dim = self.bases[k][l].shape[1]
                pieces.append(self.bases[k][l] @ self.b_bar[k][offset : offset + dim])
                offset += dim
            out.append(np.concatenate(pieces))
        return out

    def to_beamformer_set(self, channels: ChannelSet, P: float) -> BeamformerSet:
        return BeamformerSet(f_bar=self.f_bar(channels), w_bar=list(self.w), power=P)


def _projected_channels(channels: ChannelSet, bases, tables) -> list[np.ndarray]:
    """Per-UE lag-indexed matrices [H_kl basis_kl rho_ll[n]]_l, (2W+1, M_r, sum N_t)."""
    out = []
    for k, ue in enumerate(channels.ues):
        tab = tables[(k, k)].values
        effective = [ue.paths[l].gain @ bases[k][l] for l in range(ue.L)]
        blocks = [
            eff[None, :, :] * tab[l, l][:, None, None]
            for l, eff in enumerate(effective)
        ]
        out.append(np.concatenate(blocks, axis=2))
    return out


def _solve_hermitian(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # the noise floor keeps these positive definite; guard anyway
    try:
        return np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(a) @ rhs


def mmse_receive_update(h_tilde, b_bar, sigma2: float) -> list[np.ndarray]:
    """SINR-optimal receive vectors for fixed transmit vectors."""
    out = []
    for h, b in zip(h_tilde, b_bar):
        center = (h.shape[0] - 1) // 2
        y = h @ b  # (2W+1, M_r)
        yy = y.T @ y.conj()
        y0 = y[center]
        cov = yy - np.outer(y0, y0.conj()) + sigma2 * np.eye(h.shape[1], dtype=complex)
        w = _solve_hermitian(cov, y0)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            w = np.zeros(h.shape[1], dtype=complex)
            w[0] = 1.0
        else:
            w = w / norm
        out.append(w)
    return out


def mmse_transmit_update(h_tilde, w_list, P: float, sigma2: float) -> list[np.ndarray]:
    """SINR-optimal reduced transmit vectors at fixed per-UE power P/K."""
    K = len(h_tilde)
    out = []
    for h, w in zip(h_tilde, w_list):
        center = (h.shape[0] - 1) // 2
        g = np.matmul(w.conj(), h).conj()  # g[n] = h[n]^H w, shape (2W+1, D)
        g0 = g[center]
        # exact Nyquist zeros blank most lags for integer delays; skip them
        active = np.any(g != 0.0, axis=1)
        g_act = g[active]
        gg = g_act.T @ g_act.conj()
        reg = sigma2 * (K / P) * float(np.linalg.norm(w) ** 2)
        cov = gg - np.outer(g0, g0.conj()) + reg * np.eye(h.shape[2], dtype=complex)
        b = _solve_hermitian(cov, g0)
        norm = np.linalg.norm(b)
        if norm == 0.0:
            b = np.zeros(h.shape[2], dtype=complex)
            b[0] = 1.0
            norm = 1.0
        out.append(np.sqrt(P / K) * b / norm)
    return out


def isi_zf_sinrs(h_tilde, w_list, b_bar, sigma2: float) -> np.ndarray:
    sinrs = np.empty(len(h_tilde))
    for k, (h, w, b) in enumerate(zip(h_tilde, w_list, b_bar)):
        center = (h.shape[0] - 1) // 2
        coup = (h @ b) @ w.conj()
        desired = abs(coup[center]) ** 2
        isi = float(np.sum(np.abs(coup) ** 2) - desired)
        sinrs[k] = desired / (isi + sigma2 * float(np.linalg.norm(w) ** 2))
    return sinrs


def isi_zf_alternating(
    channels: ChannelSet,
    P: float,
    sigma2: float,
    T: float,
    beta: float,
    window: int,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> tuple[IsiZfState, np.ndarray, float]:
    """Alternate MMSE receive/transmit updates on the ZF-projected channels.

    Starts from equal power split across each UE's reduced dimensions; stops
    when the relative sum-rate increase drops below ``tol`` or after
    ``max_iter`` iterations.  The objective trace is non-decreasing.
    """
    K = channels.K
    bases = [
        [null_space_projection(channels, k, l) for l in range(ue.L)]
        for k, ue in enumerate(channels.ues)
    ]
    tables = {
        (k, k): build_rho_table(ue, ue, bs_side_kappa(ue), window, T, beta)
        for k, ue in enumerate(channels.ues)
    }
    h_tilde = _projected_channels(channels, bases, tables)

    b_bar = []
    for h in h_tilde:
        dim = h.shape[2]
        b_bar.append(np.sqrt(P / K / dim) * np.ones(dim, dtype=complex))
    # matched-filter receive start keeps the initial state usable as-is
    w_list = []
    for h, b in zip(h_tilde, b_bar):
        center = (h.shape[0] - 1) // 2
        w0 = h[center] @ b
        norm = np.linalg.norm(w0)
        if norm == 0.0:
            w0 = np.zeros(h.shape[1], dtype=complex)
            w0[0] = 1.0
            norm = 1.0
        w_list.append(w0 / norm)

    def objective(w, b):
        return float(np.sum(np.log2(1.0 + isi_zf_sinrs(h_tilde, w, b, sigma2))))

    trace = [objective(w_list, b_bar)]
    iterations = 0
    if math.isfinite(tol):
        for _ in range(max_iter):
            w_list = mmse_receive_update(h_tilde, b_bar, sigma2)
            b_bar = mmse_transmit_update(h_tilde, w_list, P, sigma2)
            obj = objective(w_list, b_bar)
            prev = trace[-1]
            trace.append(obj)
            iterations += 1
            if obj - prev < tol * max(abs(prev), 1e-300):
                break

    state = IsiZfState(
        bases=bases, b_bar=b_bar, w=w_list, trace=trace, iterations=iterations
    )
    sinrs = isi_zf_sinrs(h_tilde, w_list, b_bar, sigma2)
    return state, sinrs, float(np.sum(np.log2(1.0 + sinrs)))
