"""Machine-readable result documents and aligned text tables.

Documents are JSON with sorted keys. Everything that may differ between two
runs with identical inputs (wall time, thread count, timestamps) lives under
the single top-level ``"runtime"`` key.
"""

from __future__ import annotations

import datetime as _dt
import json

from flmdep.config import spec_to_dict
from flmdep.simgen import MethodSpec

FORMAT_VERSION = 1


def _runtime(seconds, threads):
    return {
        "seconds": round(float(seconds), 6),
        "threads": int(threads),
        "finished_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def strip_runtime(doc):
    return {k: v for k, v in doc.items() if k != "runtime"}


def _label(key):
    return MethodSpec.parse(key).label


# --------------------------------------------------------------------------
# scenario reports
# --------------------------------------------------------------------------


def scenario_document(reports, threads=1):
    scenarios = []
    for rep in reports:
        cells = [
            {
                "method": key,
                "label": _label(key),
                "kn": kn,
                "alpha": alpha,
                "rejections": count,
                "rate": rate,
                "se": se,
            }
            for key, kn, alpha, count, rate, se in rep.cells()
        ]
        scenarios.append({"spec": spec_to_dict(rep.spec), "cells": cells})
    return {
        "kind": "scenario-report",
        "version": FORMAT_VERSION,
        "scenarios": scenarios,
        "runtime": _runtime(sum(r.runtime for r in reports), threads),
    }


def _column_headers(columns):
    """Two header rows: method label (only on its first column) and kn."""
    top, sub = [], []
    prev = None
    for key, kn in columns:
        top.append(_label(key) if key != prev else "")
        sub.append("" if kn is None else str(kn))
        prev = key
    return top, sub


def _render(rows, left_headers, top, sub, width=7):
    lead = [max(len(h), *(len(r[i]) for r, _ in rows)) for i, h in enumerate(left_headers)]
    widths = [max(width, len(t), len(s), *(len(v[j]) for _, v in rows))
              for j, (t, s) in enumerate(zip(top, sub))]

    def line(left, cells):
        return ("  ".join(c.rjust(w) for c, w in zip(left, lead)) + "  "
                + " ".join(c.rjust(w) for c, w in zip(cells, widths)))

    lines = [line([""] * len(lead), top), line(left_headers, sub)]
    lines.append("-" * len(lines[-1]))
    lines.extend(line(left, values) for left, values in rows)
    return "\n".join(lines) + "\n"


def scenario_table(doc):
    """Rejection percentages laid out as rows (n, alpha) x columns (method, kn).

    Scenarios sharing the same columns are stacked into one table.
    """
    blocks = []
    current_cols, rows, title = None, [], None
    for sc in doc["scenarios"]:
        spec = sc["spec"]
        cols = tuple(dict.fromkeys((c["method"], c["kn"]) for c in sc["cells"]))
        if cols != current_cols and rows:
            blocks.append((title, current_cols, rows))
            rows = []
        current_cols = cols
        head = spec["name"] or "scenario"
        if spec["theta"] == "zero":
            head += " (H0, sigma=%g)" % spec["sigma0"]
        else:
            head += f" (theta={spec['theta']}, r={spec['r']:g}"
            if spec["local_alternative"] is not None:
                head += f", delta_n=n^{spec['local_alternative']:g}"
            head += ")"
        title = head + f"  ns={spec['ns']} B={spec['B']} seed={spec['seed']}"
        lookup = {(c["method"], c["kn"], c["alpha"]): c["rate"] for c in sc["cells"]}
        for i, alpha in enumerate(spec["alpha"]):
            left = [str(spec["n"]) if i == 0 else "", f"{100 * alpha:g}%"]
            values = [f"{100 * lookup[(m, kn, alpha)]:.1f}" for m, kn in cols]
            rows.append((left, values))
    if rows:
        blocks.append((title, current_cols, rows))
    out = []
    for title, cols, rows in blocks:
        top, sub = _column_headers(cols)
        out.append(title + "\n" + _render(rows, ["n", "alpha"], top, sub))
    return "\n".join(out)


# --------------------------------------------------------------------------
# test results
# --------------------------------------------------------------------------


def outcome_record(outcome, method_key, alpha=None):
    stat = outcome.statistic
    m = outcome.method
    rec = {
        "method": method_key,
        "label": _label(method_key),
        "statistic": stat.kind.value,
        "kn": stat.kn,
        "value": stat.value,
        "sigma_hat": stat.sigma_hat,
        "p_value": outcome.p_value,
        "calibration": m.kind.value,
        "B": None if m.kind.value == "asymptotic" else m.replicates,
        "seed": None if m.kind.value == "asymptotic" else m.seed,
        "multiplier": m.multiplier.value if m.kind.value == "wild" else None,
        "variance_mode": m.variance_mode.value if MethodSpec.parse(method_key).uses_variance_mode else None,
        "redraws": outcome.redraws,
    }
    if "precursor_m" in outcome.extra:
        rec["precursor_m"] = outcome.extra["precursor_m"]
    if alpha is not None:
        rec["reject"] = {f"{a:g}": outcome.p_value <= a for a in alpha}
    return rec


def result_document(inputs, settings, records, seconds, threads=1):
    return {
        "kind": "test-result",
        "version": FORMAT_VERSION,
        "inputs": inputs,
        "settings": settings,
        "results": records,
        "runtime": _runtime(seconds, threads),
    }


def result_table(doc):
    """One row of p-values, columns (method, kn), like a real-data summary."""
    cols = tuple(dict.fromkeys((r["method"], r["kn"]) for r in doc["results"]))
    lookup = {(r["method"], r["kn"]): r["p_value"] for r in doc["results"]}
    top, sub = _column_headers(cols)
    inputs = doc["inputs"]
    row = ([f"{inputs['n']}"], [f"{lookup[c]:.3f}" for c in cols])
    return "p-values\n" + _render([row], ["n"], top, sub)


def render(doc):
    if doc.get("kind") == "scenario-report":
        return scenario_table(doc)
    if doc.get("kind") == "test-result":
        return result_table(doc)
    raise ValueError(f"unknown document kind {doc.get('kind')!r}")
