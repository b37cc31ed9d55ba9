"""Monte Carlo campaign: drops x fading realizations x scan epochs.

Each drop redraws all positions, builds the cluster assignment once, then
sweeps ``n_fading`` coherence intervals. One scan epoch elapses per fading
realization. All per-interval math is batched over the fading axis and the
reductions run through :mod:`cfisac.kernels`.

Random streams are derived from (seed, drop, purpose[, entity]) tuples, so
drops are order-independent and experiment arms that share a seed see
identical layouts, shadowing and fading draws (common random numbers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np
from scipy.special import gammainccinv

from . import kernels
from .channel import (
    ArrayGeometry,
    complex_normal,
    psd_sqrt,
    steering_bank,
    view_angle_kernel,
)
from .clustering import ClusterAssignment, build_assignment
from .config import ConfigError, ExperimentConfig, VALID_MODES
from .deployment import NetworkLayout, ScanSchedule, build_scan_schedule, generate_layout
from .metrics import FronthaulLoad, detection_rates, empirical_cdf, fronthaul_load

# purposes of the per-drop random substreams
_S_LAYOUT, _S_SHADOW, _S_SCHED, _S_FADING, _S_SYMBOL, _S_NOISE, _S_RCS, _S_DIRECT = range(8)

ZF_FALLBACK_TOL = 1e-9


def _stream(cfg: ExperimentConfig, drop: int, purpose: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, drop, purpose, *extra])


def ue_ap_gains(
    layout: NetworkLayout, cfg: ExperimentConfig, rng: np.random.Generator
) -> np.ndarray:
    """Large-scale linear gains of every UE-AP link (NLoS + optional shadowing)."""
    d = np.linalg.norm(layout.ues[:, None, :] - layout.aps[None, :, :], axis=2)
    d = np.maximum(d, 1.0)
    pl = 36.7 * np.log10(d) + 22.7 + 26.0 * np.log10(cfg.carrier_ghz)
    if cfg.shadowing_enabled and cfg.shadowing_std_db > 0:
        pl = pl + rng.normal(0.0, cfg.shadowing_std_db, size=d.shape)
    return 10.0 ** (-pl / 10.0)


def _los_gains(points: np.ndarray, ap_positions: np.ndarray, f_ghz: float) -> np.ndarray:
    """One-way LoS linear gains between points and APs, shape (P, M)."""
    d = np.linalg.norm(points[:, None, :] - ap_positions[None, :, :], axis=2)
    d = np.maximum(d, 1.0)
    pl = 22.0 * np.log10(d) + 28.0 + 20.0 * np.log10(f_ghz)
    return 10.0 ** (-pl / 10.0)


@dataclass
class DropDiagnostics:
    power_dev_max: float = 0.0
    zf_leakage_max: float = 0.0
    zf_fallbacks: int = 0
    zf_beams: int = 0

    def merge(self, other: "DropDiagnostics") -> "DropDiagnostics":
        return DropDiagnostics(
            power_dev_max=max(self.power_dev_max, other.power_dev_max),
            zf_leakage_max=max(self.zf_leakage_max, other.zf_leakage_max),
            zf_fallbacks=self.zf_fallbacks + other.zf_fallbacks,
            zf_beams=self.zf_beams + other.zf_beams,
        )


@dataclass
class DropResult:
    drop_index: int
    rates_bps: np.ndarray  # (F, K)
    sensing_snr_db: np.ndarray  # (F, L)
    statistics: np.ndarray  # (F, L)
    thresholds: np.ndarray  # (F, L)
    decisions: np.ndarray  # (F, L) bool
    truths: np.ndarray  # (F, L) bool
    fronthaul: FronthaulLoad
    diagnostics: DropDiagnostics
    layout: NetworkLayout
    assignment: ClusterAssignment


@dataclass
class ResultSet:
    """Aggregated samples of one experiment arm."""

    label: str
    config: ExperimentConfig
    rates_bps: np.ndarray  # (D, F, K)
    sensing_snr_db: np.ndarray  # (D, F, L)
    statistics: np.ndarray
    thresholds: np.ndarray
    decisions: np.ndarray
    truths: np.ndarray
    fronthaul_max: int
    fronthaul_mean: float
    diagnostics: DropDiagnostics

    def rate_cdf(self):
        return empirical_cdf(self.rates_bps.ravel())

    def snr_cdf(self):
        return empirical_cdf(self.sensing_snr_db.ravel())

    def detection(self):
        return detection_rates(self.decisions.ravel(), self.truths.ravel())

    def median_rate(self) -> float:
        return float(np.median(self.rates_bps))

    def median_snr_db(self) -> float:
        return float(np.median(self.sensing_snr_db))

    def sample_rows(self) -> Iterable[tuple[int, int, str, float]]:
        """Flatten to (drop, entity, metric, value) rows in a fixed order."""
        n_drops = self.rates_bps.shape[0]
        for d in range(n_drops):
            for f in range(self.rates_bps.shape[1]):
                for k in range(self.rates_bps.shape[2]):
                    yield d, k, "rate_bps", self.rates_bps[d, f, k]
            for name, arr in (
                ("sensing_snr_db", self.sensing_snr_db),
                ("statistic", self.statistics),
                ("decision", self.decisions),
            ):
                for f in range(arr.shape[1]):
                    for l in range(arr.shape[2]):
                        yield d, l, name, float(arr[d, f, l])

    def detection_rows(self) -> Iterable[tuple]:
        for d in range(self.statistics.shape[0]):
            for f in range(self.statistics.shape[1]):
                for l in range(self.statistics.shape[2]):
                    yield (
                        d,
                        f,
                        l,
                        self.statistics[d, f, l],
                        self.thresholds[d, f, l],
                        int(self.decisions[d, f, l]),
                        int(self.truths[d, f, l]),
                        self.sensing_snr_db[d, f, l],
                    )


class _DropContext:
    """Per-drop precomputed geometry, gains and bookkeeping."""

    def __init__(
        self,
        cfg: ExperimentConfig,
        layout: NetworkLayout,
        assignment: ClusterAssignment,
        schedule: ScanSchedule,
        gains: np.ndarray,
    ):
        self.cfg = cfg
        self.layout = layout
        self.assignment = assignment
        self.schedule = schedule
        geom = ArrayGeometry(cfg.n_antennas, cfg.spacing_wavelengths)
        f_ghz = cfg.carrier_ghz

        # flat cell table: per-region offsets into the concatenated cell list
        offsets = []
        centers = []
        total = 0
        for region in layout.regions:
            offsets.append(total)
            total += len(region.cells)
            centers.extend(c.center for c in region.cells)
        self.cell_offsets = offsets
        self.cell_centers = np.array(centers)
        self.n_epochs = schedule.n_epochs

        # schedule in global cell ids: (n_epochs, L)
        self.cell_of = schedule.epochs + np.array(offsets)[None, :]

        # AP-side banks toward every cell center and every true target
        self.a_cell = steering_bank(geom, layout.aps, layout.broadsides, self.cell_centers)
        self.g_cell = _los_gains(self.cell_centers, layout.aps, f_ghz)
        if len(layout.targets):
            self.a_tgt = steering_bank(geom, layout.aps, layout.broadsides, layout.targets)
            self.sqrt_g_tgt = np.sqrt(_los_gains(layout.targets, layout.aps, f_ghz))
        else:
            self.a_tgt = np.zeros((0, cfg.m_aps, cfg.n_antennas), dtype=complex)
            self.sqrt_g_tgt = np.zeros((0, cfg.m_aps))

        # ground truth per cell: a target footprint inside the cell bounds
        truth = np.zeros(total, dtype=bool)
        for t, l in enumerate(layout.target_regions):
            region = layout.regions[l]
            for ci, cell in enumerate(region.cells):
                if cell.contains_xy(layout.targets[t, 0], layout.targets[t, 1]):
                    truth[offsets[l] + ci] = True
        self.truth_cell = truth

        # RCS mixing: product-kernel square roots over the global rx/tx sets
        self.rx_all = np.asarray(assignment.rx_aps, dtype=int)
        self.tx_all = np.asarray(assignment.tx_aps, dtype=int)
        corr = cfg.angular_corr_rad
        self.s_rx_sqrt = []
        self.s_tx_sqrt = []
        for t in range(len(layout.targets)):
            self.s_rx_sqrt.append(
                psd_sqrt(view_angle_kernel(layout.targets[t], layout.aps[self.rx_all], corr))
            )
            self.s_tx_sqrt.append(
                psd_sqrt(view_angle_kernel(layout.targets[t], layout.aps[self.tx_all], corr))
            )

        # cluster membership resolved to positions inside rx_all/tx_all
        self.cluster_tx = []
        self.cluster_rx = []
        self.cluster_tx_pos = []
        self.cluster_rx_pos = []
        for tx_c, rx_c in assignment.sensing_clusters:
            tx_c = np.asarray(tx_c, dtype=int)
            rx_c = np.asarray(rx_c, dtype=int)
            self.cluster_tx.append(tx_c)
            self.cluster_rx.append(rx_c)
            self.cluster_tx_pos.append(np.searchsorted(self.tx_all, tx_c))
            self.cluster_rx_pos.append(np.searchsorted(self.rx_all, rx_c))

        # hypothesized reflectivity covariance per cell (cluster tx APs)
        self.r_cell = [None] * total
        self.r_region = []
        for l, region in enumerate(layout.regions):
            tx_c = self.cluster_tx[l]
            for ci in range(len(region.cells)):
                cid = offsets[l] + ci
                self.r_cell[cid] = cfg.sigma_rcs2_m2 * view_angle_kernel(
                    self.cell_centers[cid], layout.aps[tx_c], corr
                )
            self.r_region.append(
                np.stack([self.r_cell[offsets[l] + ci] for ci in range(len(region.cells))])
            )

        # per-AP power split; the sensing beam absorbs the rounding residual
        m_total = cfg.m_aps
        self.n_served = np.array([len(assignment.served[m]) for m in range(m_total)])
        self.sensing_flag = assignment.pointing >= 0
        self.ue_share = np.zeros(m_total)
        self.eta0 = np.zeros(m_total)
        rho = cfg.sensing_power_fraction
        for m in range(m_total):
            n = self.n_served[m]
            if self.sensing_flag[m]:
                if n == 0:
                    self.eta0[m] = cfg.p_max_w
                else:
                    share = (
                        cfg.p_max_w / (n + 1) if rho is None else (1.0 - rho) * cfg.p_max_w / n
                    )
                    self.ue_share[m] = share
                    self.eta0[m] = max(cfg.p_max_w - n * share, 0.0)
            elif n > 0:
                self.ue_share[m] = cfg.p_max_w / n

        self.amp = np.zeros((cfg.k_ues, m_total))
        for k, aps in enumerate(assignment.serving):
            self.amp[k, aps] = np.sqrt(self.ue_share[aps])
        self.sqrt_eta0 = np.sqrt(self.eta0)

        # serving sets in CSR form for the numba kernel
        counts = [len(a) for a in assignment.serving]
        self.serving_indptr = np.zeros(cfg.k_ues + 1, dtype=np.int64)
        np.cumsum(counts, out=self.serving_indptr[1:])
        self.serving_aps = (
            np.concatenate(assignment.serving).astype(np.int64)
            if cfg.k_ues
            else np.zeros(0, dtype=np.int64)
        )

        self.sensing_tx = np.flatnonzero(self.sensing_flag).astype(np.int64)

        # strongest served UEs per sensing AP, the ZF annulment order
        self.annul = {}
        if cfg.beamformer == "ZF" and cfg.k_zf > 0:
            for m in self.sensing_tx:
                served = assignment.served[m]
                if len(served) == 0:
                    self.annul[int(m)] = np.zeros(0, dtype=int)
                    continue
                order = np.lexsort((served, -gains[served, m]))
                n_null = min(cfg.k_zf, len(served), cfg.n_antennas - 1)
                self.annul[int(m)] = served[order[:n_null]]

        self.power_dev_max = 0.0
        active = (self.n_served > 0) | self.sensing_flag
        budget = self.n_served * self.ue_share + self.eta0
        if np.any(active):
            self.power_dev_max = float(np.max(np.abs(budget[active] - cfg.p_max_w)))


def _sense_beams(
    ctx: _DropContext, h: np.ndarray, epoch_cells: np.ndarray
) -> tuple[np.ndarray, DropDiagnostics]:
    """Sensing beams of every sensing AP for every fading realization.

    MF beams are the cell-center steering vectors; ZF beams additionally
    project out the annulled served-UE channels (QR basis) before
    renormalizing, falling back to MF when the projection vanishes.
    """
    cfg = ctx.cfg
    n_fading, _, m_total, n_ant = h.shape
    w0 = np.zeros((n_fading, m_total, n_ant), dtype=complex)
    diag = DropDiagnostics(power_dev_max=ctx.power_dev_max)
    inv_sqrt_n = 1.0 / math.sqrt(n_ant)
    for l in range(len(ctx.cluster_tx)):
        members = [int(m) for m in ctx.sensing_tx if ctx.assignment.pointing[m] == l]
        if not members:
            continue
        cells_l = epoch_cells[:, l]
        a_mf = ctx.a_cell[cells_l][:, members]  # (F, n_m, N) cell-matched steering
        zf_members = [
            (i, m)
            for i, m in enumerate(members)
            if ctx.annul.get(m, np.zeros(0, dtype=int)).size > 0
        ]
        w0[:, members] = a_mf * inv_sqrt_n
        if not zf_members:
            continue
        for i, m in zf_members:
            annul = ctx.annul[m]
            diag.zf_beams += n_fading
            a = a_mf[:, i]  # (F, N)
            basis = np.linalg.qr(h[:, annul, m, :].swapaxes(1, 2))[0]  # (F, N, a)
            w = a - np.einsum(
                "fna,fa->fn", basis, np.einsum("fna,fn->fa", basis.conj(), a), optimize=True
            )
            norms = np.linalg.norm(w, axis=1)
            fallback = norms <= ZF_FALLBACK_TOL * math.sqrt(n_ant)
            diag.zf_fallbacks += int(fallback.sum())
            w = np.where(
                fallback[:, None], a * inv_sqrt_n, w / np.maximum(norms, 1e-300)[:, None]
            )
            w0[:, m] = w
            ok = ~fallback
            if ok.any():
                leak = np.abs(
                    np.einsum("fan,fn->fa", h[ok][:, annul, m, :].conj(), w[ok], optimize=True)
                )
                diag.zf_leakage_max = max(diag.zf_leakage_max, float(leak.max()))
    return w0, diag


def run_drop(cfg: ExperimentConfig, drop_index: int) -> DropResult:
    """Simulate one drop: layout, clustering, then the batched fading sweep."""
    cfg.validate()
    layout = generate_layout(cfg, _stream(cfg, drop_index, _S_LAYOUT))
    gains = ue_ap_gains(layout, cfg, _stream(cfg, drop_index, _S_SHADOW))
    assignment = build_assignment(layout, gains, cfg)
    schedule = build_scan_schedule(layout.regions, _stream(cfg, drop_index, _S_SCHED))
    ctx = _DropContext(cfg, layout, assignment, schedule, gains)

    n_fading, k_ues, m_total, n_ant = cfg.n_fading, cfg.k_ues, cfg.m_aps, cfg.n_antennas
    n_regions = cfg.l_regions
    n_targets = len(layout.targets)
    sigma2 = cfg.sigma_z2_w

    h = np.sqrt(gains)[None, :, :, None] * complex_normal(
        _stream(cfg, drop_index, _S_FADING), (n_fading, k_ues, m_total, n_ant)
    )
    beams = h / np.linalg.norm(h, axis=3, keepdims=True)
    w_amp = beams * ctx.amp[None, :, :, None]

    # one scan epoch per fading realization, cycling through the sweep
    epoch_cells = ctx.cell_of[np.arange(n_fading) % ctx.n_epochs]  # (F, L) global ids

    w0, diagnostics = _sense_beams(ctx, h, epoch_cells)

    # Swerling-I reflectivities: constant over the coherence interval,
    # drawn jointly over all (rx, tx) pairs through the angular kernel
    n_rx_all, n_tx_all = len(ctx.rx_all), len(ctx.tx_all)
    ab = np.zeros((n_fading, n_targets, n_rx_all, n_tx_all), dtype=complex)
    sigma_rcs = math.sqrt(cfg.sigma_rcs2_m2)
    for t in range(n_targets):
        g = complex_normal(_stream(cfg, drop_index, _S_RCS, t), (n_fading, n_rx_all, n_tx_all))
        alpha = sigma_rcs * np.einsum(
            "ab,fbc,cd->fad", ctx.s_rx_sqrt[t], g, ctx.s_tx_sqrt[t], optimize=True
        )
        amp2 = ctx.sqrt_g_tgt[t, ctx.rx_all][:, None] * ctx.sqrt_g_tgt[t, ctx.tx_all][None, :]
        ab[:, t] = alpha * amp2[None, :, :]

    symbol_rng = _stream(cfg, drop_index, _S_SYMBOL)
    noise_rng = _stream(cfg, drop_index, _S_NOISE)

    direct = None
    if cfg.direct_residual > 0.0:
        direct = _direct_channel_bank(cfg, ctx, drop_index)

    # communication side is snapshot-independent: SINR uses beams and powers
    a_mat = kernels.cross_gains(h, w_amp, ctx.serving_indptr, ctx.serving_aps)
    w0_amp = ctx.sqrt_eta0[None, :, None] * w0
    leak = kernels.sense_leakage(h, w0_amp, ctx.sensing_tx)
    diag_gain = np.abs(np.einsum("fkk->fk", a_mat)) ** 2
    interference = (np.abs(a_mat) ** 2).sum(axis=2) - diag_gain
    sinr = diag_gain / (interference + leak + sigma2)
    rates = cfg.bandwidth_hz * np.log2(1.0 + sinr)

    stat = np.zeros((n_fading, n_regions))
    snr_lin = np.zeros((n_fading, n_regions))
    ranks = np.zeros((n_fading, n_regions), dtype=int)
    for _ in range(cfg.n_snapshots):
        x = np.exp(2j * np.pi * symbol_rng.random((n_fading, k_ues)))
        x0 = np.exp(2j * np.pi * symbol_rng.random((n_fading, m_total)))
        noise = math.sqrt(sigma2) * complex_normal(noise_rng, (n_fading, m_total, n_ant))

        s_tx = np.einsum("fkmn,fk->fmn", w_amp, x, optimize=True)
        s_tx += (ctx.sqrt_eta0[None, :, None] * w0) * x0[:, :, None]

        if n_targets:
            c = np.einsum(
                "tpn,fpn->ftp", ctx.a_tgt[:, ctx.tx_all].conj(), s_tx[:, ctx.tx_all], optimize=True
            )
            echo = kernels.echo_mix(ctx.a_tgt[:, ctx.rx_all], ab, c)
        else:
            echo = np.zeros((n_fading, n_rx_all, n_ant), dtype=complex)
        y = echo + noise[:, ctx.rx_all]
        if direct is not None:
            y = y + cfg.direct_residual * np.einsum(
                "fprni,fpi->frn", direct, s_tx[:, ctx.tx_all], optimize=True
            )

        for l in range(n_regions):
            _detect_region(cfg, ctx, l, epoch_cells[:, l], s_tx, y, stat, snr_lin, ranks)

    snr_lin /= cfg.n_snapshots
    thresholds = _threshold_table(ranks, sigma2, cfg.pfa_target)
    decisions = stat > thresholds
    truths = ctx.truth_cell[epoch_cells]

    return DropResult(
        drop_index=drop_index,
        rates_bps=rates,
        sensing_snr_db=10.0 * np.log10(np.maximum(snr_lin, 1e-300)),
        statistics=stat,
        thresholds=thresholds,
        decisions=decisions,
        truths=truths,
        fronthaul=fronthaul_load(assignment),
        diagnostics=diagnostics,
        layout=layout,
        assignment=assignment,
    )


def _detect_region(cfg, ctx, l, cells_l, s_tx, y, stat, snr_lin, ranks):
    """Accumulate the fused statistic / SNR / rank of one region's tests."""
    tx_c = ctx.cluster_tx[l]
    rx_pos = ctx.cluster_rx_pos[l]
    rx_c = ctx.cluster_rx[l]
    n_rx = len(rx_c)
    n_ant = cfg.n_antennas
    # dictionary columns beta * (a_tx^H s) * a_rx at each realization's cell
    a_tx_f = ctx.a_cell[cells_l][:, tx_c]  # (F, n_tx, N)
    proj = np.einsum("fpn,fpn->fp", a_tx_f.conj(), s_tx[:, tx_c], optimize=True)
    g_f = ctx.g_cell[cells_l]  # (F, M)
    betas = g_f[:, rx_c, None] * g_f[:, None, tx_c]  # (F, n_rx, n_tx)
    coef = betas * proj[:, None, :]
    d_mat = ctx.a_cell[cells_l][:, rx_c][:, :, :, None] * coef[:, :, None, :]
    u, sv, _ = np.linalg.svd(d_mat, full_matrices=False)
    keep = sv > cfg.rank_tol * sv[..., :1]
    proj_y = np.einsum("fmnr,fmn->fmr", u.conj(), y[:, rx_pos], optimize=True)
    stat[:, l] += ((np.abs(proj_y) ** 2) * keep).sum(axis=(1, 2))
    ranks[:, l] += keep.sum(axis=(1, 2))
    # trace(D^H D R) with the shared rank-one factor: ||a_rx||^2 = N exactly
    r_f = ctx.r_region[l][cells_l - ctx.cell_offsets[l]]  # (F, n_tx, n_tx)
    quad = np.einsum("fmi,fij,fmj->f", coef, r_f, coef.conj(), optimize=True).real
    snr_lin[:, l] += n_ant * quad / (n_rx * n_ant * cfg.sigma_z2_w)


def _threshold_table(ranks: np.ndarray, sigma2: float, pfa: float) -> np.ndarray:
    thresholds = np.zeros_like(ranks, dtype=float)
    for r in np.unique(ranks):
        thresholds[ranks == r] = sigma2 * float(gammainccinv(max(int(r), 1), pfa))
    return thresholds


def _direct_channel_bank(cfg: ExperimentConfig, ctx: _DropContext, drop_index: int) -> np.ndarray:
    """Rician direct AP-to-AP channels for the residual-subtraction experiments."""
    geom = ArrayGeometry(cfg.n_antennas, cfg.spacing_wavelengths)
    layout = ctx.layout
    tx_pos = layout.aps[ctx.tx_all]
    rx_pos = layout.aps[ctx.rx_all]
    g = _los_gains(tx_pos, rx_pos, cfg.carrier_ghz)  # (n_tx, n_rx): points=tx, arrays=rx
    a_rx = steering_bank(
        geom, layout.aps[ctx.rx_all], layout.broadsides[ctx.rx_all], tx_pos
    )  # (n_tx, n_rx, N): rx arrays looking at tx points
    a_tx = steering_bank(
        geom, layout.aps[ctx.tx_all], layout.broadsides[ctx.tx_all], rx_pos
    )  # (n_rx, n_tx, N)
    los = a_rx[:, :, :, None] * a_tx.transpose(1, 0, 2).conj()[:, :, None, :]  # (n_tx, n_rx, N, N)
    k_lin = cfg.rician_k_linear
    w = complex_normal(
        _stream(cfg, drop_index, _S_DIRECT),
        (cfg.n_fading, len(ctx.tx_all), len(ctx.rx_all), cfg.n_antennas, cfg.n_antennas),
    )
    scale = np.sqrt(g)[None, :, :, None, None]
    return scale * (
        math.sqrt(k_lin / (k_lin + 1.0)) * los[None] + math.sqrt(1.0 / (k_lin + 1.0)) * w
    )


def run_experiment(cfg: ExperimentConfig, label: str = "run") -> ResultSet:
    """Run every drop sequentially and aggregate into a ResultSet."""
    cfg.validate()
    drops = [run_drop(cfg, d) for d in range(cfg.n_drops)]
    return _aggregate(cfg, label, drops)


def _aggregate(cfg: ExperimentConfig, label: str, drops: list[DropResult]) -> ResultSet:
    diag = DropDiagnostics()
    for dr in drops:
        diag = diag.merge(dr.diagnostics)
    rs = ResultSet(
        label=label,
        config=cfg,
        rates_bps=np.stack([d.rates_bps for d in drops]),
        sensing_snr_db=np.stack([d.sensing_snr_db for d in drops]),
        statistics=np.stack([d.statistics for d in drops]),
        thresholds=np.stack([d.thresholds for d in drops]),
        decisions=np.stack([d.decisions for d in drops]),
        truths=np.stack([d.truths for d in drops]),
        fronthaul_max=max(d.fronthaul.max_load for d in drops),
        fronthaul_mean=float(np.mean([d.fronthaul.mean_load for d in drops])),
        diagnostics=diag,
    )
    expected = cfg.n_drops * cfg.n_fading
    assert rs.rates_bps.size == expected * cfg.k_ues
    assert rs.statistics.size == expected * cfg.l_regions
    return rs


# --- experiment presets ------------------------------------------------------


def preset_mode_comparison(cfg: ExperimentConfig) -> dict[str, ResultSet]:
    """The four clustering modes under common random numbers."""
    return {
        mode: run_experiment(replace(cfg, mode=mode), label=mode.lower()) for mode in VALID_MODES
    }


def preset_rx_sweep(cfg: ExperimentConfig, rx_counts: list[int]) -> dict[str, ResultSet]:
    """Vary the receive-AP count at a fixed per-region cluster size."""
    cluster_size = cfg.m_tx_per_region + cfg.m_rx_per_region
    arms = {}
    for rx in rx_counts:
        if rx < 1:
            raise ConfigError("receive-AP counts must be >= 1")
        if rx >= cluster_size:
            raise ConfigError(
                f"rx={rx} leaves no transmit AP in a cluster of size {cluster_size}"
            )
        arm_cfg = replace(cfg, m_rx_per_region=rx, m_tx_per_region=cluster_size - rx)
        arms[f"rx{rx}"] = run_experiment(arm_cfg, label=f"rx{rx}")
    return arms


def preset_beamformer_comparison(
    cfg: ExperimentConfig, k_zf_values: list[int]
) -> dict[str, ResultSet]:
    """Matched-filter sensing beams against partial zero-forcing variants."""
    for k_zf in k_zf_values:
        if not 0 <= k_zf <= cfg.n_antennas - 1:
            raise ConfigError(f"k_zf={k_zf} must lie in [0, {cfg.n_antennas - 1}]")
    arms = {"mf": run_experiment(replace(cfg, beamformer="MF"), label="mf")}
    for k_zf in k_zf_values:
        arm_cfg = replace(cfg, beamformer="ZF", k_zf=k_zf)
        arms[f"zf-k{k_zf}"] = run_experiment(arm_cfg, label=f"zf-k{k_zf}")
    return arms
