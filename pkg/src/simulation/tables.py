"""
Rejection-rate tables

Rows are (family, scheme, p) and carry every n that shares the p, since the
lattice sizes differ slightly from the other designs. Value columns are the
designs (size experiments) or links (power experiments), first under the
chi2-based rule, then under the normal-based rule.
"""

import json
from typing import Dict, List, Set, Tuple

import pandas as pd

from src.models.simulation import ErrorFamily, HeteroScheme, Link, McCellResult, McReport
from src.models.weight_matrix import DesignTag

FORMATS = ('csv', 'json', 'markdown')
RULES = (('chi2', 'reject_rate_chi2'), ('normal', 'reject_rate_normal'))
LEADING_COLUMNS = ('family', 'scheme', 'n', 'p')

_DESIGN_ORDER = [d.value for d in DesignTag]
_LINK_ORDER = [link.value for link in Link]
_SCHEME_ORDER = [s.value for s in HeteroScheme]
_FAMILY_ORDER = [f.value for f in ErrorFamily]

RowKey = Tuple[str, str, int]


def _column_label(cell: McCellResult) -> str:
    return cell.design if cell.link == Link.NULL_LINEAR.value else cell.link


def _column_rank(label: str) -> Tuple[int, int]:
    if label in _DESIGN_ORDER:
        return 0, _DESIGN_ORDER.index(label)
    return 1, _LINK_ORDER.index(label)


def _row_rank(key: RowKey) -> Tuple[int, int, int]:
    family, scheme, p = key
    return _FAMILY_ORDER.index(family), _SCHEME_ORDER.index(scheme), p


def table_frame(report: McReport) -> pd.DataFrame:
    """Report as a wide DataFrame in table layout"""
    if not report.cells:
        raise ValueError("cannot tabulate an empty report")
    labels = sorted({_column_label(c) for c in report.cells}, key=_column_rank)
    values: Dict[RowKey, Dict[str, float]] = {}
    sizes: Dict[RowKey, Set[int]] = {}
    for cell in report.cells:
        key = (cell.family, cell.scheme, cell.p)
        row = values.setdefault(key, {})
        sizes.setdefault(key, set()).add(cell.n)
        for rule, attribute in RULES:
            row[f"{_column_label(cell)} {rule}"] = getattr(cell, attribute)

    records: List[Dict[str, object]] = []
    for key in sorted(values, key=_row_rank):
        family, scheme, p = key
        record = {
            'family': family,
            'scheme': HeteroScheme(scheme).label,
            'n': "/".join(str(n) for n in sorted(sizes[key])),
            'p': p,
        }
        for rule, _ in RULES:
            for label in labels:
                record[f"{label} {rule}"] = values[key].get(f"{label} {rule}")
        records.append(record)
    return pd.DataFrame.from_records(records)


def _markdown(frame: pd.DataFrame, report: McReport) -> str:
    header = list(frame.columns)
    lead = len(LEADING_COLUMNS)
    lines = [
        f"{report.kind.capitalize()} experiment: alpha={report.alpha}, reps={report.reps}, "
        f"master seed {report.master_seed}",
        "",
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" if i < lead else "---:" for i in range(len(header))) + "|",
    ]
    for row in frame.itertuples(index=False):
        cells = [str(v) if i < lead else ("" if pd.isna(v) else f"{v:.3f}")
                 for i, v in enumerate(row)]
        lines.append("| " + " | ".join(cells) + " |")
    failures = sum(cell.failures for cell in report.cells)
    lines += [
        "",
        f"Rates and Monte Carlo standard errors use the successful replications "
        f"of each cell ({failures} failed in total).",
    ]
    return "\n".join(lines) + "\n"


def emit_table(report: McReport, fmt: str = 'markdown') -> str:
    """Render a report as csv, json or markdown text"""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    if not report.cells:
        raise ValueError("cannot tabulate an empty report")
    if fmt == 'json':
        return json.dumps(report.to_dict(), indent=2) + "\n"
    frame = table_frame(report)
    if fmt == 'csv':
        return frame.to_csv(index=False, float_format='%.4f')
    return _markdown(frame, report)
