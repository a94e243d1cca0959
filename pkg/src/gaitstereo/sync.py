"""Two-wearable clock model, offset estimation and stream alignment.

Offsets are estimated NTP-style: each probe is a request/response exchange
with the reference (server) clock, and assuming symmetric paths the client
offset is ``client_mid - server_mid``.  The median over probes is reported.
Only a constant offset is corrected; drift is simulated but not removed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import AlignmentError, MalformedSequenceError
from .temporal import HEEL_STRIKE, FootfallEvent, sort_events, validate_events

UDP_RTT_MEAN = 0.004169  # s, measured round trip of a 48-bit message
MESSAGE_BITS = 48
PROBE_SPACING = 0.05  # s between probes


@dataclass(frozen=True)
class ClockModel:
    offset: float = 0.0
    drift_rate: float = 0.0
    jitter_sigma: float = 0.0

    def __post_init__(self):
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be >= 0")

    def read(self, true_t, rng: Optional[np.random.Generator] = None):
        """Device clock reading at reference time ``true_t`` (jittered if ``rng``)."""
        t = np.asarray(true_t, dtype=float)
        dev = t * (1.0 + self.drift_rate) + self.offset
        if rng is not None and self.jitter_sigma > 0:
            dev = dev + rng.normal(0.0, self.jitter_sigma, np.shape(t))
        return dev


@dataclass
class SyncEstimate:
    offset_estimate: float
    rtt_samples: list = field(default_factory=list)

    def rtt_stats(self) -> dict:
        if not self.rtt_samples:
            return {"min": None, "median": None, "max": None}
        r = np.asarray(self.rtt_samples)
        return {"min": float(r.min()), "median": float(np.median(r)), "max": float(r.max())}


def estimate_offset(
    client: ClockModel,
    n_probes: int = 64,
    seed: int = 0,
    rtt_mean: float = UDP_RTT_MEAN,
    path_jitter: float = 0.0,
) -> SyncEstimate:
    """Simulate ``n_probes`` request/response exchanges and estimate the offset.

    ``path_jitter`` adds independent exponential queueing delay to each
    direction, which breaks the symmetric-path assumption and shows up as
    residual error.
    """
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    rng = np.random.default_rng(seed)
    samples, rtts = [], []
    for i in range(n_probes):
        t0 = i * PROBE_SPACING
        d_up = d_down = rtt_mean / 2.0
        if path_jitter > 0:
            d_up += rng.exponential(path_jitter)
            d_down += rng.exponential(path_jitter)
        server_mid = t0 + d_up  # receive and reply at the same instant
        c0 = client.read(t0, rng)
        c3 = client.read(t0 + d_up + d_down, rng)
        samples.append(float((c0 + c3) / 2.0 - server_mid))
        rtts.append(float(c3 - c0))
    return SyncEstimate(float(np.median(samples)), rtts)


def correct(t, est: SyncEstimate):
    """Map device timestamps onto the reference timeline."""
    return np.asarray(t, dtype=float) - est.offset_estimate if np.ndim(t) else float(t) - est.offset_estimate


def align_streams(
    left_events: Iterable[FootfallEvent],
    right_events: Iterable[FootfallEvent],
    left_est: SyncEstimate,
    right_est: SyncEstimate,
) -> list[FootfallEvent]:
    """Offset-correct each device's events and merge them onto one timeline.

    Raises :class:`AlignmentError` if the result breaks per-foot alternation
    or if heel strikes no longer alternate between feet.
    """
    if left_est is None or right_est is None:
        raise ValueError("sync estimates are required for both devices")
    merged = [
        FootfallEvent(e.foot, e.kind, e.t - left_est.offset_estimate) for e in left_events
    ] + [FootfallEvent(e.foot, e.kind, e.t - right_est.offset_estimate) for e in right_events]
    merged = sort_events(merged)
    try:
        validate_events(merged)
    except MalformedSequenceError as exc:
        raise AlignmentError(f"aligned streams are inconsistent: {exc}") from exc
    heel = [e for e in merged if e.kind == HEEL_STRIKE]
    for a, b in zip(heel, heel[1:]):
        if a.foot == b.foot:
            raise AlignmentError(
                f"two {a.foot} heel strikes at {a.t:.6f} and {b.t:.6f} s without an "
                "opposite heel strike between them; offsets inconsistent"
            )
    return merged


def sync_report(estimates: dict) -> dict:
    """JSON-ready per-device offset and RTT statistics."""
    return {
        "message_bits": MESSAGE_BITS,
        "devices": {
            name: {
                "offset_estimate": est.offset_estimate,
                "n_probes": len(est.rtt_samples),
                "rtt": est.rtt_stats(),
            }
            for name, est in estimates.items()
        },
    }


def estimate_from_report(entry: dict) -> SyncEstimate:
    """Rebuild an estimate (without raw RTT samples) from a report entry."""
    return SyncEstimate(float(entry["offset_estimate"]), [])
