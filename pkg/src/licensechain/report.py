"""Human-readable renderings of conflict reports and metrics documents.

Machine output is always the JSON document; these renderers add the table
views (top conflicting license pairs per dependency layer, and the
approach-by-collection metrics grid).
"""

from __future__ import annotations

from typing import Mapping, Sequence

_LAYER_TITLES = {
    "uses_model": "OSS -> LLM",
    "trained_on": "LLM -> Dataset",
    "derived_from_base": "LLM -> LLM",
}


def _format_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(cells):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(row) for row in rows)
    return "\n".join(out)


def render_conflict_table(document: Mapping) -> str:
    """Tabulate a ConflictReport document: totals, then ranked conflicting
    license pairs per dependency layer."""
    totals = document.get("totals", {})
    lines = [
        f"chains: {totals.get('chains_total', 0)} total, "
        f"{totals.get('chains_conflicted', 0)} conflicted "
        f"({100.0 * totals.get('conflict_rate', 0.0):.1f}%)",
    ]
    layers = totals.get("layers", {})
    if layers:
        lines.append(
            "layers: "
            + ", ".join(f"{name.replace('_', '-')}: {count}" for name, count in sorted(layers.items()))
        )
    top_pairs = document.get("top_pairs", {})
    for group in sorted(top_pairs):
        lines.append("")
        lines.append(f"Conflicting license pairs ({_LAYER_TITLES.get(group, group)}):")
        rows = [
            [
                entry["downstream"],
                entry["upstream"],
                str(entry["count"]),
                f"{100.0 * entry['share']:.2f}%",
            ]
            for entry in top_pairs[group]
        ]
        lines.append(_format_table(["Downstream", "Upstream", "Count", "Share"], rows))
    skipped = document.get("skipped_edges", [])
    if skipped:
        lines.append("")
        lines.append(f"skipped edges (missing-license policy): {len(skipped)}")
    return "\n".join(lines)


def render_metrics_table(document: Mapping) -> str:
    """Tabulate a metrics document: one row per approach, P/R/F1 columns
    per collection."""
    collections = document.get("collections") or sorted(
        {c for rows in document.get("approaches", {}).values() for c in rows}
    )
    headers = ["Approach"]
    for collection in collections:
        headers.extend([f"{collection} P", f"{collection} R", f"{collection} F1"])
    rows = []
    for approach in sorted(document.get("approaches", {})):
        row = [approach]
        per_collection = document["approaches"][approach]
        for collection in collections:
            metrics = per_collection.get(collection)
            if metrics is None:
                row.extend(["-", "-", "-"])
            else:
                row.extend(
                    [
                        f"{metrics['precision']:.3f}",
                        f"{metrics['recall']:.3f}",
                        f"{metrics['f1']:.3f}",
                    ]
                )
        rows.append(row)
    return _format_table(headers, rows)


def render_distribution_table(distribution: Mapping[str, Sequence]) -> str:
    lines = []
    for group, rows in distribution.items():
        lines.append(f"[{group}]")
        table_rows = [[row.label, str(row.count), f"{100.0 * row.share:.1f}%"] for row in rows]
        lines.append(_format_table(["License", "Count", "Share"], table_rows))
        lines.append("")
    return "\n".join(lines).rstrip()
