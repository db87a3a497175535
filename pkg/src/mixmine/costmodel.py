"""Analytic communication cost and its comparison with measured traffic.

The analytic formulas count bytes per mining iteration:

* masked-sum protocol: ``phi * H * N * (1 + L)``.  That is N uploads of H
  entries of L bytes, plus H one-unit aggregates broadcast to N sites.
* Paillier-based mixer protocol: ``2 * phi * N * H * K``.

The formula charges one byte per broadcast aggregate.  On the real wire an
aggregate can exceed the modulus, so it is sent at twice the alpha width.
:func:`reconcile` reports that gap instead of hiding it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

from .transport import ChannelMetrics


@dataclass(frozen=True)
class CostParams:
    """N sites, H itemsets per round, L bytes per entry, K bytes per item, phi ciphertext ratio."""

    N: int
    H: float
    L: float = 2
    K: float = 3
    phi: float = 1

    def __post_init__(self):
        for name in ("N", "H", "L", "K"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.phi < 1:
            raise ValueError("phi is a ciphertext/plaintext ratio and must be >= 1")


def payload_proposed(p: CostParams):
    return p.phi * p.H * p.N * (1 + p.L)


def payload_yizhang(p: CostParams):
    return 2 * p.phi * p.N * p.H * p.K


OP_COUNTS = {
    "proposed": {"exp": 0, "basic": 4},
    "yizhang": {"exp": 4, "basic": 13},
    "key_bits": {"proposed": 80, "yizhang": 1024},
}


def op_counts() -> dict:
    """Static operation-count and key-size comparison."""
    return json.loads(json.dumps(OP_COUNTS))


def table1(N: int, H: int) -> dict:
    """The headline comparison at L=2, K=3, phi=1."""
    p = CostParams(N, H, L=2, K=3, phi=1)
    ops = op_counts()
    return {
        "N": N,
        "H": H,
        "communication_proposed": payload_proposed(p),
        "communication_yizhang": payload_yizhang(p),
        "exp_ops_proposed": ops["proposed"]["exp"],
        "exp_ops_yizhang": ops["yizhang"]["exp"],
        "key_bits_proposed": ops["key_bits"]["proposed"],
        "key_bits_yizhang": ops["key_bits"]["yizhang"],
    }


def _pct(measured, analytic) -> float:
    if analytic == 0:
        return 0.0 if measured == 0 else float("inf")
    return 100.0 * (measured - analytic) / analytic


def reconcile(
    measured: ChannelMetrics,
    p: CostParams,
    wire_overhead: int = 0,
    *,
    rounds: Iterable[tuple[int, int]] | None = None,
) -> list[dict]:
    """Per-round measured payload vs the analytic formulas.

    Args:
        measured: Metrics from a finished session.
        p: Cost parameters.  ``H`` is replaced per round by the actual
            candidate count and ``L`` should be the alpha width in bytes.
        wire_overhead: Extra bytes per frame to report next to the header
            bytes (e.g. channel expansion).  Never added to the comparison.
        rounds: ``(round, candidate_count)`` pairs.  Defaults to every
            measured round, with H taken from the upload size.

    Returns:
        One dict per round with keys ``round``, ``measured_upload``,
        ``measured_broadcast``, ``analytic_proposed``, ``analytic_yizhang``,
        ``deviation_pct`` and the itemized terms.
    """
    if rounds is None:
        width = p.L if p.L else 1
        rounds = [
            (r, int(m.site_to_mixer_payload // (p.N * width)) if p.N else 0)
            for r, m in sorted(measured.rounds.items())
            if r >= 0
        ]
    report = []
    for r, h in rounds:
        m = measured.round(r)
        q = CostParams(p.N, h, p.L, p.K, p.phi)
        analytic = payload_proposed(q)
        analytic_upload = q.phi * q.N * q.L * q.H
        analytic_broadcast = q.phi * q.H * q.N
        measured_total = m.site_to_mixer_payload + m.mixer_to_sites_payload
        frames = m.site_to_mixer_messages + m.mixer_to_sites_messages
        report.append(
            {
                "round": r,
                "candidates": h,
                "measured_upload": m.site_to_mixer_payload,
                "measured_broadcast": m.mixer_to_sites_payload,
                "analytic_proposed": analytic,
                "analytic_yizhang": payload_yizhang(q),
                "analytic_upload": analytic_upload,
                "analytic_broadcast": analytic_broadcast,
                "deviation_pct": _pct(measured_total, analytic),
                "upload_deviation_pct": _pct(m.site_to_mixer_payload, analytic_upload),
                "broadcast_deviation_pct": _pct(m.mixer_to_sites_payload, analytic_broadcast),
                "header_bytes": m.site_to_mixer_header + m.mixer_to_sites_header,
                "wire_overhead_bytes": wire_overhead * frames,
            }
        )
    return report


def format_report(rows: list[dict]) -> str:
    """Fixed-width text table of :func:`reconcile` rows."""
    cols = [
        ("round", "round"),
        ("H", "candidates"),
        ("upload", "measured_upload"),
        ("bcast", "measured_broadcast"),
        ("phiHN(1+L)", "analytic_proposed"),
        ("2phiNHK", "analytic_yizhang"),
        ("dev%", "deviation_pct"),
        ("bcast dev%", "broadcast_deviation_pct"),
        ("headers", "header_bytes"),
    ]
    lines = ["  ".join(f"{name:>11}" for name, _ in cols)]
    for row in rows:
        cells = []
        for _, key in cols:
            v = row[key]
            cells.append(f"{v:>11.1f}" if isinstance(v, float) else f"{v:>11}")
        lines.append("  ".join(cells))
    return "\n".join(lines)
