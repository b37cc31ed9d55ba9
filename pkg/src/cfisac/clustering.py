"""AP mode partition, user-centric serving sets and target-centric clusters.

Four scalability modes are supported:
  UTC  user-and-target-centric: UEs served by their q strongest APs, each
       region sensed by a small dedicated AP cluster.
  UC   user-centric only: scalable UE serving, sensing by all APs.
  TC   target-centric only: dedicated sensing clusters, UEs served by all
       transmit APs.
  CF   pure cell-free: both tasks non-scalable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, ExperimentConfig, VALID_MODES
from .deployment import NetworkLayout

USER_CENTRIC_MODES = ("UTC", "UC")
TARGET_CENTRIC_MODES = ("UTC", "TC")


@dataclass
class ClusterAssignment:
    """Immutable drop-level clustering decision.

    tx_aps / rx_aps partition all APs; serving[k] lists the transmit APs of
    UE k; served[m] the inverse relation; sensing_clusters[l] the APs that
    inspect region l (a (tx tuple, rx tuple) pair); pointing[m] the region
    whose current cell the sensing beam of transmit AP m illuminates (-1 for
    APs with no sensing role).
    """

    tx_aps: np.ndarray
    rx_aps: np.ndarray
    serving: list[np.ndarray]
    served: list[np.ndarray]
    sensing_clusters: list[tuple[np.ndarray, np.ndarray]]
    pointing: np.ndarray


def _ranked_by_distance(
    candidates: np.ndarray, positions: np.ndarray, center_xy: tuple[float, float]
) -> np.ndarray:
    d = np.hypot(positions[candidates, 0] - center_xy[0], positions[candidates, 1] - center_xy[1])
    # ties broken by lower AP index
    return candidates[np.lexsort((candidates, d))]


def assign_ap_modes(
    layout: NetworkLayout, mode: str, m_tx_per_region: int, m_rx_per_region: int
) -> tuple[np.ndarray, np.ndarray, list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Split APs into transmit/receive roles and build per-region clusters.

    Scalable sensing (UTC/TC): regions claim APs once, in ascending region
    index; the m_rx closest APs to the region center receive, the next m_tx
    transmit, and those m_tx + m_rx APs form the region's cluster. Unclaimed
    APs stay in transmit mode with no sensing role.

    Non-scalable sensing (UC/CF): the same receive selection runs per region,
    but every cluster contains all APs, so all transmit APs illuminate and
    all receive APs listen for every region; each transmit AP points its
    sensing beam at the cells of its nearest region.
    """
    if mode not in VALID_MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    if m_rx_per_region < 1:
        raise ConfigError("need at least one receive AP per region")
    if m_tx_per_region < 1:
        raise ConfigError("need at least one transmit sensing AP per region")
    m_total = len(layout.aps)
    n_regions = len(layout.regions)
    target_centric = mode in TARGET_CENTRIC_MODES
    need = (m_tx_per_region + m_rx_per_region if target_centric else m_rx_per_region) * n_regions
    if need > m_total or (not target_centric and need >= m_total):
        raise ConfigError(
            f"{m_total} APs cannot satisfy {n_regions} regions with "
            f"(tx={m_tx_per_region}, rx={m_rx_per_region}) in mode {mode}"
        )

    unclaimed = np.ones(m_total, dtype=bool)
    rx_all: list[int] = []
    pointing = np.full(m_total, -1, dtype=int)
    cluster_members: list[tuple[list[int], list[int]]] = []
    for region in layout.regions:
        ranked = _ranked_by_distance(np.flatnonzero(unclaimed), layout.aps, region.center_xy)
        rx_here = ranked[:m_rx_per_region]
        unclaimed[rx_here] = False
        rx_all.extend(int(m) for m in rx_here)
        if target_centric:
            tx_here = ranked[m_rx_per_region : m_rx_per_region + m_tx_per_region]
            unclaimed[tx_here] = False
            pointing[tx_here] = region.index
            cluster_members.append((sorted(int(m) for m in tx_here), sorted(int(m) for m in rx_here)))
        else:
            cluster_members.append(([], sorted(int(m) for m in rx_here)))

    rx_aps = np.array(sorted(rx_all), dtype=int)
    tx_aps = np.setdiff1d(np.arange(m_total), rx_aps)

    clusters: list[tuple[np.ndarray, np.ndarray]] = []
    if target_centric:
        for tx_here, rx_here in cluster_members:
            clusters.append((np.array(tx_here, dtype=int), np.array(rx_here, dtype=int)))
    else:
        # every AP senses every region; beams point at the nearest region
        centers = np.array([r.center_xy for r in layout.regions])
        for m in tx_aps:
            d = np.hypot(centers[:, 0] - layout.aps[m, 0], centers[:, 1] - layout.aps[m, 1])
            pointing[m] = int(np.argmin(d))
        for _ in layout.regions:
            clusters.append((tx_aps.copy(), rx_aps.copy()))

    return tx_aps, rx_aps, clusters, pointing


def associate_ues(
    large_scale: np.ndarray, tx_aps: np.ndarray, q: int, mode: str
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Build serving sets M_k and the inverse served sets K_m.

    User-centric modes pick each UE's q transmit APs with the largest
    large-scale gain (ties broken by lower AP index); TC/CF serve every UE
    from every transmit AP.
    """
    if mode not in VALID_MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    k_ues, m_total = large_scale.shape
    if mode in USER_CENTRIC_MODES:
        if q > len(tx_aps):
            raise ConfigError(f"q={q} exceeds the {len(tx_aps)} available transmit APs")
        serving = []
        gains_tx = large_scale[:, tx_aps]
        for k in range(k_ues):
            order = np.lexsort((tx_aps, -gains_tx[k]))
            serving.append(np.sort(tx_aps[order[:q]]))
    else:
        serving = [tx_aps.copy() for _ in range(k_ues)]

    served: list[np.ndarray] = [np.zeros(0, dtype=int)] * m_total
    buckets: dict[int, list[int]] = {}
    for k, aps in enumerate(serving):
        for m in aps:
            buckets.setdefault(int(m), []).append(k)
    for m, ks in buckets.items():
        served[m] = np.array(ks, dtype=int)
    return serving, served


def build_assignment(
    layout: NetworkLayout, large_scale: np.ndarray, config: ExperimentConfig
) -> ClusterAssignment:
    tx_aps, rx_aps, clusters, pointing = assign_ap_modes(
        layout, config.mode, config.m_tx_per_region, config.m_rx_per_region
    )
    serving, served = associate_ues(large_scale, tx_aps, config.q_serving, config.mode)
    return ClusterAssignment(
        tx_aps=tx_aps,
        rx_aps=rx_aps,
        serving=serving,
        served=served,
        sensing_clusters=clusters,
        pointing=pointing,
    )


def sensing_cluster_for_cell(
    assignment: ClusterAssignment, region: int
) -> tuple[np.ndarray, np.ndarray]:
    """Transmit and receive AP subsets inspecting the region's current cell."""
    if region < 0 or region >= len(assignment.sensing_clusters):
        raise ValueError(f"region {region} out of range")
    return assignment.sensing_clusters[region]


def assignment_to_text(assignment: ClusterAssignment) -> str:
    """Dump for deployment inspection: AP modes/regions, then serving lists."""
    lines = []
    rx_set = set(int(m) for m in assignment.rx_aps)
    for m in range(len(assignment.pointing)):
        mode = "rx" if m in rx_set else "tx"
        lines.append(f"ap {m} {mode} {assignment.pointing[m]}")
    for k, aps in enumerate(assignment.serving):
        lines.append(f"ue {k} {','.join(str(int(m)) for m in aps)}")
    return "\n".join(lines) + "\n"
