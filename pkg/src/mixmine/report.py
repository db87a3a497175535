"""Human and JSON renderings of a finished session."""

from __future__ import annotations

import datetime as _dt
import json
from fractions import Fraction

from .costmodel import CostParams, format_report, reconcile, table1
from .session import MiningResult


def _dec(x: Fraction) -> str:
    return f"{float(x):.6f}"


def build_report(result: MiningResult, parameters: dict, *, timestamp: bool = True) -> dict:
    """JSON-ready report.  ``parameters`` must not contain the seed."""
    if any("seed" in k for k in parameters):
        raise ValueError("refusing to put the seed into a report")
    total = result.total_size
    n = parameters["sites"]
    entry = parameters["entry_bytes"]
    rows = reconcile(
        result.metrics,
        CostParams(n, 0, L=entry, K=3, phi=1),
        rounds=[(r.round, r.candidate_count) for r in result.rounds],
    )
    avg_h = round(sum(r.candidate_count for r in result.rounds if r.round > 0) / max(1, len(result.rounds) - 1))
    out = {
        "parameters": parameters,
        "total_transactions": total,
        "frequent_itemsets": [
            {"items": list(s), "count": c, "support": _dec(Fraction(c, total))}
            for fs in result.frequents
            for s, c in fs.entries
        ],
        "rules": [
            {
                "antecedent": list(r.antecedent),
                "consequent": list(r.consequent),
                "count": r.count,
                "antecedent_count": r.antecedent_count,
                "support": _dec(r.support),
                "confidence": _dec(r.confidence),
            }
            for r in result.rules
        ],
        "rounds": [vars(r).copy() for r in result.rounds],
        "metrics": result.metrics.to_dict(),
        "reconciliation": rows,
        "table1": table1(n, max(avg_h, 1)),
    }
    if timestamp:
        out["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return out


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def format_text(report: dict) -> str:
    p = report["parameters"]
    lines = [
        f"sites={p['sites']} modulus={p['modulus']} bit_length={p['bit_length']} "
        f"minsup={p['minsup']} minconf={p['minconf']} transport={p['transport']}",
        f"transactions: {report['total_transactions']}",
        "",
        "frequent itemsets:",
    ]
    for e in report["frequent_itemsets"]:
        lines.append(f"  {{{', '.join(map(str, e['items']))}}}  count={e['count']}  support={e['support']}")
    lines += ["", "rules:"]
    for r in report["rules"]:
        lines.append(
            f"  {{{', '.join(map(str, r['antecedent']))}}} => {{{', '.join(map(str, r['consequent']))}}}"
            f"  support={r['support']}  confidence={r['confidence']}"
        )
    if not report["rules"]:
        lines.append("  (none)")
    lines += ["", "communication per round (bytes):", format_report(report["reconciliation"]), ""]
    t = report["table1"]
    lines += [
        f"comparison at N={t['N']}, H={t['H']}, L=2, K=3, phi=1:",
        f"  communication  proposed={t['communication_proposed']}  yizhang={t['communication_yizhang']}",
        f"  exp. ops       proposed={t['exp_ops_proposed']}  yizhang={t['exp_ops_yizhang']}",
        f"  key bits       proposed={t['key_bits_proposed']}  yizhang={t['key_bits_yizhang']}",
    ]
    return "\n".join(lines) + "\n"
