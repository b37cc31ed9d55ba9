"""Communication SINR/rate, detection rates, fronthaul accounting, CDFs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelRealization
from .clustering import ClusterAssignment
from .precoding import BeamformingPlan


@dataclass
class CdfCurve:
    """Empirical CDF: sorted sample values with probabilities i/n."""

    values: np.ndarray
    probabilities: np.ndarray

    def quantile(self, p: float) -> float:
        idx = int(np.searchsorted(self.probabilities, p, side="left"))
        return float(self.values[min(idx, len(self.values) - 1)])

    @property
    def median(self) -> float:
        return self.quantile(0.5)


@dataclass
class FronthaulLoad:
    """Sensing scalars each receive AP ships to the CPU per epoch."""

    per_ap: dict[int, int]
    max_load: int
    mean_load: float


def communication_sinr(
    channels: ChannelRealization,
    plan: BeamformingPlan,
    assignment: ClusterAssignment,
    ue: int,
    sigma_z2: float,
) -> float:
    """Downlink SINR of one UE with coherent combining across its serving APs.

    Useful power |sum_{m in M_k} sqrt(eta) h^H w|^2 against the same coherent
    sums toward every other UE, the sensing-beam leakage of every transmit
    AP, and thermal noise.
    """
    signal = 0.0 + 0.0j
    for m in assignment.serving[ue]:
        key = (ue, int(m))
        signal += math.sqrt(plan.powers[key]) * (
            channels.h[key].conj() @ plan.comm_beams[key]
        )
    interference = 0.0
    for j in range(len(assignment.serving)):
        if j == ue:
            continue
        cross = 0.0 + 0.0j
        for m in assignment.serving[j]:
            cross += math.sqrt(plan.powers[(j, int(m))]) * (
                channels.h[(ue, int(m))].conj() @ plan.comm_beams[(j, int(m))]
            )
        interference += abs(cross) ** 2
    sensing = 0.0
    for m, eta0 in plan.sense_powers.items():
        if eta0 > 0.0:
            sensing += eta0 * abs(channels.h[(ue, m)].conj() @ plan.sense_beams[m]) ** 2
    return abs(signal) ** 2 / (interference + sensing + sigma_z2)


def rate_bps(sinr: float, bandwidth_hz: float) -> float:
    """Shannon rate B log2(1 + SINR)."""
    if sinr < 0:
        raise ValueError("sinr must be non-negative")
    return bandwidth_hz * math.log2(1.0 + sinr)


def detection_rates(
    decisions: Sequence[bool], truths: Sequence[bool]
) -> tuple[Optional[float], Optional[float]]:
    """(detection fraction over true-target cells, false-alarm fraction over empty cells).

    A side with no samples yields None rather than a misleading zero.
    """
    decisions = np.asarray(decisions, dtype=bool)
    truths = np.asarray(truths, dtype=bool)
    if decisions.shape != truths.shape or decisions.size == 0:
        raise ValueError("decision and truth logs must be nonempty and aligned")
    n_present = int(truths.sum())
    n_absent = int((~truths).sum())
    pd = float(decisions[truths].sum() / n_present) if n_present else None
    pfa = float(decisions[~truths].sum() / n_absent) if n_absent else None
    return pd, pfa


def fronthaul_load(assignment: ClusterAssignment) -> FronthaulLoad:
    """Per-epoch sensing fronthaul: one scalar per cluster a receive AP sits in."""
    per_ap = {}
    for m in assignment.rx_aps:
        per_ap[int(m)] = sum(
            1 for _, rx in assignment.sensing_clusters if int(m) in set(int(x) for x in rx)
        )
    loads = list(per_ap.values())
    return FronthaulLoad(per_ap=per_ap, max_load=max(loads), mean_load=float(np.mean(loads)))


def empirical_cdf(samples: Sequence[float]) -> CdfCurve:
    values = np.sort(np.asarray(samples, dtype=float))
    if values.size == 0:
        raise ValueError("cannot build a CDF from zero samples")
    probabilities = np.arange(1, values.size + 1) / values.size
    return CdfCurve(values=values, probabilities=probabilities)


# --- file emission -----------------------------------------------------------


def write_samples_csv(path: str | Path, rows) -> None:
    """One sample per row: drop, entity, metric, value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["drop", "entity", "metric", "value"])
        for drop, entity, metric, value in rows:
            writer.writerow([drop, entity, metric, repr(float(value))])


def write_cdf_csv(path: str | Path, curve: CdfCurve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "probability"])
        for v, p in zip(curve.values, curve.probabilities):
            writer.writerow([repr(float(v)), repr(float(p))])
