"""Seeded Monte Carlo experiments and result serialization.

Every experiment kind evaluates all of its schemes on the identical channel
draw per trial (paired comparison); per-trial seeds come from a splittable
counter scheme so parallel execution reproduces sequential results exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .beamforming import (
    assemble_bs_side,
    assemble_effective_channels,
    bs_side_kappa,
    bs_side_rho_tables,
    eigen_beamform_bs_side,
    eigen_beamform_doubleside,
    isi_zf_alternating,
    zf_feasible,
)
from .channel import ChannelSet, ConfigError, SimConfig, generate_channel_set
from .delay_design import InfeasibleError, choose_compensation_counts, solve_compensation_delays
from .ofdm import (
    dam_effective_rate,
    ofdm_effective_rate,
    ofdm_eigen,
    ofdm_overhead_factor,
    ofdm_zf_waterfill,
)
from .waveform import (
    ccdf_from_paprs,
    papr_blocks,
    qam4_map,
    synthesize_dam_waveform,
    synthesize_ofdm_waveform,
    synthesize_strongest_path_waveform,
)

__all__ = [
    "EXPERIMENT_KINDS",
    "ExperimentSpec",
    "ResultRow",
    "ResultTable",
    "ParseError",
    "parse_config",
    "run_experiment",
    "write_table_csv",
    "write_json_sidecar",
    "write_ccdf_csv",
    "papr_at_exceedance",
]

EXPERIMENT_KINDS = (
    "se_vs_power_doubleside",
    "se_vs_power_bsside",
    "se_vs_power_fractional",
    "papr_ccdf",
)

SCHEMA_VERSION = 1

DEFAULT_POWER_GRID = (10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0)

PAPR_THRESHOLDS_DB = np.round(np.arange(0.0, 14.0 + 1e-9, 0.1), 3)


class ParseError(ValueError):
    """Configuration file errors, annotated with the offending key path."""


@dataclass
class ExperimentSpec:
    kind: str
    config: SimConfig = field(default_factory=SimConfig)
    grid: tuple[float, ...] = DEFAULT_POWER_GRID
    sweep: str = "P_dbm"
    trials: int = 100
    seed: int = 0
    out: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ParseError(f"experiment.kind: unknown kind {self.kind!r}")
        if not self.grid:
            raise ParseError("experiment.grid: must be non-empty")
        if self.trials < 1:
            raise ParseError("experiment.trials: must be >= 1")
        if self.sweep != "P_dbm":
            raise ParseError(f"experiment.sweep: unsupported sweep {self.sweep!r}")


@dataclass(frozen=True)
class ResultRow:
    sweep_value: float
    scheme: str
    mean: float
    stderr: float
    trials: int
    infeasible: bool = False


@dataclass
class ResultTable:
    kind: str
    rows: list[ResultRow]
    samples: dict            # (sweep_value, scheme) -> list of per-trial metrics
    config: SimConfig
    seed: int
    sweep: str = "P_dbm"
    ccdf: dict | None = None  # papr kind: scheme -> ccdf array over PAPR_THRESHOLDS_DB
    meta: dict = field(default_factory=dict)


def trial_seed(base_seed: int, sweep_idx: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=base_seed, spawn_key=(sweep_idx, trial))


# ---------------------------------------------------------------------------
# Per-trial scheme evaluation
# ---------------------------------------------------------------------------


def _doubleside_plan_rates(channels: ChannelSet, cfg: SimConfig, I_rule) -> float | None:
    """Effective rate of double-side eigen-beamforming with per-UE counts from I_rule."""
    plans = []
    for ue in channels.ues:
        I = I_rule(ue.L)
        R = ue.L + 1 - I
        if not (1 <= I <= cfg.M_t and 1 <= R <= cfg.M_r):
            return None
        plans.append(solve_compensation_delays(ue.n_list, I, R))
    tensor = assemble_effective_channels(channels, plans)
    _, sinrs = eigen_beamform_doubleside(tensor, cfg.p_watts(), cfg.sigma2_watts())
    return dam_effective_rate(sinrs, cfg)


def _eval_doubleside(channels: ChannelSet, cfg: SimConfig) -> dict:
    def auto_rule(L):
        return choose_compensation_counts(cfg.M_t, cfg.M_r, L).I

    out = {}
    try:
        out["dam-eigen-auto"] = _doubleside_plan_rates(channels, cfg, auto_rule)
    except InfeasibleError:
        out["dam-eigen-auto"] = None
    out["dam-eigen-bs"] = _doubleside_plan_rates(channels, cfg, lambda L: L)
    out["dam-eigen-ue"] = _doubleside_plan_rates(channels, cfg, lambda L: 1)
    _, sinrs = ofdm_eigen(channels, cfg.M, cfg.p_watts(), cfg.sigma2_watts())
    out["ofdm-eigen"] = ofdm_effective_rate(sinrs, cfg)
    return out


def _eval_bsside(channels: ChannelSet, cfg: SimConfig) -> dict:
    P, sigma2 = cfg.p_watts(), cfg.sigma2_watts()
    out = {}
    tables = bs_side_rho_tables(channels, cfg.rho_window, cfg.T, cfg.beta)
    F = assemble_bs_side(channels, tables)
    _, sinrs = eigen_beamform_bs_side(F, P, sigma2)
    out["dam-eigen"] = dam_effective_rate(sinrs, cfg)
    if zf_feasible(channels):
        _, zf_sinrs, _ = isi_zf_alternating(
            channels, P, sigma2, cfg.T, cfg.beta, cfg.rho_window
        )
        out["dam-isizf"] = dam_effective_rate(zf_sinrs, cfg)
    else:
        out["dam-isizf"] = None
    _, eig_sinrs = ofdm_eigen(channels, cfg.M, P, sigma2)
    out["ofdm-eigen"] = ofdm_effective_rate(eig_sinrs, cfg)
    try:
        _, _, zf_rate = ofdm_zf_waterfill(channels, cfg.M, P, sigma2)
        out["ofdm-zf-wf"] = ofdm_overhead_factor(cfg) * zf_rate
    except InfeasibleError:
        out["ofdm-zf-wf"] = None
    return out


_KIND_EVAL = {
    "se_vs_power_doubleside": (_eval_doubleside, True),
    "se_vs_power_bsside": (_eval_bsside, True),
    "se_vs_power_fractional": (_eval_bsside, False),
}


def _run_sweep(spec: ExperimentSpec, threads: int) -> ResultTable:
    evaluate, integer_delays = _KIND_EVAL[spec.kind]

    def one_trial(j: int, t: int):
        cfg_j = dataclasses.replace(spec.config, P_dbm=spec.grid[j])
        channels = generate_channel_set(cfg_j, trial_seed(spec.seed, j, t), integer_delays)
        return j, t, evaluate(channels, cfg_j)

    tasks = [(j, t) for j in range(len(spec.grid)) for t in range(spec.trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda jt: one_trial(*jt), tasks))
    else:
        outcomes = [one_trial(j, t) for j, t in tasks]

    per_cell: dict = {}
    for j, t, metrics in sorted(outcomes, key=lambda r: (r[0], r[1])):
        for scheme, value in metrics.items():
            per_cell.setdefault((j, scheme), []).append(value)

    rows = []
    samples = {}
    schemes = sorted({scheme for (_, scheme) in per_cell})
    for j, value in enumerate(spec.grid):
        for scheme in schemes:
            cell = per_cell.get((j, scheme), [])
            valid = np.array([v for v in cell if v is not None], dtype=float)
            samples[(value, scheme)] = cell
            if valid.size == 0:
                rows.append(
                    ResultRow(value, scheme, float("nan"), float("nan"), 0, infeasible=True)
                )
                continue
            mean = float(valid.mean())
            stderr = float(valid.std(ddof=1) / np.sqrt(valid.size)) if valid.size > 1 else 0.0
            rows.append(ResultRow(value, scheme, mean, stderr, int(valid.size)))

    meta = {}
    if spec.kind == "se_vs_power_doubleside":
        try:
            choice = choose_compensation_counts(spec.config.M_t, spec.config.M_r, spec.config.L)
            meta["count_choice"] = choice._asdict()
        except InfeasibleError as err:
            meta["count_choice"] = str(err)
    return ResultTable(
        kind=spec.kind, rows=rows, samples=samples, config=spec.config, seed=spec.seed,
        meta=meta,
    )


# ---------------------------------------------------------------------------
# PAPR experiment
# ---------------------------------------------------------------------------


def _dam_papr(channels, cfg, rng, n_blocks, block_symbols):
    tables = bs_side_rho_tables(channels, cfg.rho_window, cfg.T, cfg.beta)
    F = assemble_bs_side(channels, tables)
    bf, _ = eigen_beamform_bs_side(F, cfg.p_watts(), cfg.sigma2_watts())
    kappas = [bs_side_kappa(ue) for ue in channels.ues]
    pad = 32 + max(max(k) for k in kappas)
    chunk = max(1, 5_000_000 // (block_symbols * cfg.oversample * cfg.M_t))
    paprs = []
    done = 0
    while done < n_blocks:
        blocks = min(chunk, n_blocks - done)
        n_sym = blocks * block_symbols + 2 * pad
        sym = np.stack(
            [qam4_map(rng.integers(0, 2, 2 * n_sym)) for _ in range(cfg.K)]
        )
        wf = synthesize_dam_waveform(sym, bf, kappas, cfg)
        start = pad * cfg.oversample
        wf.samples = wf.samples[:, start : start + blocks * block_symbols * cfg.oversample]
        paprs.append(papr_blocks(wf, block_symbols))
        done += blocks
    return np.concatenate(paprs, axis=0)


def _ofdm_papr(channels, cfg, rng, n_blocks, block_symbols):
    bf, _ = ofdm_eigen(channels, cfg.M, cfg.p_watts(), cfg.sigma2_watts())
    chunk = max(1, 5_000_000 // (block_symbols * cfg.oversample * cfg.M_t))
    paprs = []
    done = 0
    while done < n_blocks:
        blocks = min(chunk, n_blocks - done)
        bits = rng.integers(0, 2, (cfg.K, blocks + 2, 2 * cfg.M))
        sym = np.stack(
            [
                np.stack([qam4_map(bits[k, d]) for d in range(blocks + 2)])
                for k in range(cfg.K)
            ]
        )
        wf = synthesize_ofdm_waveform(sym, bf, cfg)
        start = block_symbols * cfg.oversample  # drop the edge-transient blocks
        wf.samples = wf.samples[:, start : start + blocks * block_symbols * cfg.oversample]
        paprs.append(papr_blocks(wf, block_symbols))
        done += blocks
    return np.concatenate(paprs, axis=0)


def _strongest_papr(channels, cfg, rng, n_blocks, block_symbols):
    pad = 32
    chunk = max(1, 5_000_000 // (block_symbols * cfg.oversample * cfg.M_t))
    paprs = []
    done = 0
    while done < n_blocks:
        blocks = min(chunk, n_blocks - done)
        n_sym = blocks * block_symbols + 2 * pad
        sym = np.stack(
            [qam4_map(rng.integers(0, 2, 2 * n_sym)) for _ in range(cfg.K)]
        )
        wf = synthesize_strongest_path_waveform(sym, channels, cfg.p_watts(), cfg)
        start = pad * cfg.oversample
        wf.samples = wf.samples[:, start : start + blocks * block_symbols * cfg.oversample]
        paprs.append(papr_blocks(wf, block_symbols))
        done += blocks
    return np.concatenate(paprs, axis=0)


def papr_at_exceedance(thresholds_db, ccdf, level: float = 1e-2) -> float:
    """Linearly interpolated PAPR (dB) where the CCDF crosses ``level``."""
    thresholds_db = np.asarray(thresholds_db, dtype=float)
    ccdf = np.asarray(ccdf, dtype=float)
    below = np.nonzero(ccdf <= level)[0]
    if below.size == 0:
        return float(thresholds_db[-1])
    i = below[0]
    if i == 0:
        return float(thresholds_db[0])
    c0, c1 = ccdf[i - 1], ccdf[i]
    t0, t1 = thresholds_db[i - 1], thresholds_db[i]
    if c0 == c1:
        return float(t1)
    return float(t0 + (t1 - t0) * (c0 - level) / (c0 - c1))


def _run_papr(spec: ExperimentSpec) -> ResultTable:
    cfg = spec.config
    n_blocks = spec.trials
    block_symbols = cfg.M + cfg.G_cp  # like-for-like duration across schemes
    channels = generate_channel_set(cfg, trial_seed(spec.seed, 0, 0), integer_delays=False)
    runners = {
        "dam": _dam_papr,
        "ofdm": _ofdm_papr,
        "strongest-path": _strongest_papr,
    }
    rows = []
    samples = {}
    ccdfs = {}
    for idx, (scheme, runner) in enumerate(runners.items()):
        rng = np.random.default_rng(trial_seed(spec.seed, 1, idx))
        paprs = runner(channels, cfg, rng, n_blocks, block_symbols)
        result = ccdf_from_paprs(paprs, PAPR_THRESHOLDS_DB)
        ccdfs[scheme] = result.ccdf
        level_db = papr_at_exceedance(PAPR_THRESHOLDS_DB, result.ccdf, 1e-2)
        rows.append(ResultRow(cfg.P_dbm, scheme, level_db, 0.0, int(paprs.shape[0])))
        samples[(cfg.P_dbm, scheme)] = (10.0 * np.log10(paprs.ravel())).tolist()
    return ResultTable(
        kind=spec.kind,
        rows=rows,
        samples=samples,
        config=cfg,
        seed=spec.seed,
        ccdf=ccdfs,
    )


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ResultTable:
    """Execute one experiment kind; deterministic for a fixed spec."""
    if spec.kind == "papr_ccdf":
        return _run_papr(spec)
    return _run_sweep(spec, threads)


# ---------------------------------------------------------------------------
# Config parsing and serialization
# ---------------------------------------------------------------------------

_EXPERIMENT_KEYS = {"kind", "grid", "sweep", "trials", "seed", "out"}


def parse_config(path, kind: str | None = None) -> ExperimentSpec:
    """Load a JSON config with ``system`` and ``experiment`` sections.

    Unknown keys are rejected with their full key path; system values run
    through the same validation as directly constructed configurations.
    """
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"invalid JSON in {path}: {err}") from err
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    unknown = set(doc) - {"system", "experiment"}
    if unknown:
        raise ParseError(f"{sorted(unknown)[0]}: unknown section")

    system = doc.get("system", {})
    known_fields = {f.name for f in dataclasses.fields(SimConfig)}
    for key in system:
        if key not in known_fields:
            raise ParseError(f"system.{key}: unknown key")
    try:
        cfg = SimConfig(**system)
    except ConfigError as err:
        raise ParseError(f"system: {err}") from err

    experiment = doc.get("experiment", {})
    for key in experiment:
        if key not in _EXPERIMENT_KEYS:
            raise ParseError(f"experiment.{key}: unknown key")
    resolved_kind = kind or experiment.get("kind")
    if resolved_kind is None:
        raise ParseError("experiment.kind: missing (give a kind or a CLI subcommand)")
    grid = tuple(float(v) for v in experiment.get("grid", DEFAULT_POWER_GRID))
    return ExperimentSpec(
        kind=resolved_kind,
        config=cfg,
        grid=grid,
        sweep=experiment.get("sweep", "P_dbm"),
        trials=int(experiment.get("trials", 100)),
        seed=int(experiment.get("seed", 0)),
        out=experiment.get("out"),
    )


def write_table_csv(table: ResultTable, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep_value", "scheme", "mean", "stderr", "trials"])
        for row in table.rows:
            writer.writerow(
                [row.sweep_value, row.scheme,
                 "infeasible" if row.infeasible else repr(row.mean),
                 repr(row.stderr), row.trials]
            )


def write_json_sidecar(table: ResultTable, path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": table.kind,
        "seed": table.seed,
        "sweep": table.sweep,
        "version": __version__,
        "config": dataclasses.asdict(table.config),
        "meta": table.meta,
        "rows": [dataclasses.asdict(r) for r in table.rows],
        "samples": {
            f"{value}|{scheme}": vals for (value, scheme), vals in table.samples.items()
        },
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def write_ccdf_csv(table: ResultTable, path) -> None:
    if table.ccdf is None:
        raise ValueError("table has no CCDF data")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold_db", "ccdf_dam", "ccdf_ofdm", "ccdf_strongest"])
        for i, th in enumerate(PAPR_THRESHOLDS_DB):
            writer.writerow(
                [f"{th:.1f}", repr(float(table.ccdf["dam"][i])),
                 repr(float(table.ccdf["ofdm"][i])),
                 repr(float(table.ccdf["strongest-path"][i]))]
            )
