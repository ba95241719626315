"""
Render curve lists as text, CSV, JSON or LaTeX tables.
"""
import csv
import io
import json
import logging
import re
from itertools import groupby
from pathlib import Path
from typing import Iterable, List, Optional, Union

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from app import __version__
from app.config import TEMPLATE_DIR
from app.models.pydantic_models import CurveRecord, GoldenRow, OutputFormatEnum
from app.services.curves import render
from app.services.tables_io import COLUMNS

logger = logging.getLogger(__name__)

Row = Union[CurveRecord, GoldenRow]


def tex_signature(text: str) -> str:
    """Brace multi-digit exponents for math mode."""
    return re.sub(r"\^(\d+)", r"^{\1}", text)


_environment = Environment(
    loader=FileSystemLoader(str(TEMPLATE_DIR)),
    undefined=StrictUndefined,
    keep_trailing_newline=True,
)
_environment.filters["tex_signature"] = tex_signature


def row_dict(row: Row) -> dict:
    if isinstance(row, CurveRecord):
        signature = render(row.signature)
    else:
        signature = row.signature
    return {
        "degree": row.degree,
        "d_F": row.d_F,
        "field_index": row.field_index,
        "D": row.D,
        "N": row.N,
        "ideal_label": row.ideal_label,
        "signature": signature,
        "genus": row.genus,
    }


def _groups(rows: List[dict]) -> List[dict]:
    ordered = sorted(rows, key=lambda r: (r["genus"], r["degree"], r["d_F"], r["D"], r["N"], r["ideal_label"]))
    groups = []
    for genus, by_genus in groupby(ordered, key=lambda r: r["genus"]):
        by_genus = list(by_genus)
        fields = [(d_F, list(chunk)) for d_F, chunk in groupby(by_genus, key=lambda r: r["d_F"])]
        groups.append({"genus": genus, "count": len(by_genus), "fields": fields})
    return groups


def render_rows(rows: Iterable[Row], output_format: OutputFormatEnum = OutputFormatEnum.TEXT) -> str:
    data = [row_dict(r) for r in rows]
    if output_format == OutputFormatEnum.CSV:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(data)
        return buffer.getvalue()
    if output_format == OutputFormatEnum.JSON:
        return json.dumps(data, indent=2) + "\n"
    template_name = "curves.tex.j2" if output_format == OutputFormatEnum.TEX else "curves.txt.j2"
    template = _environment.get_template(template_name)
    return template.render(
        groups=_groups(data),
        max_genus=max((r["genus"] for r in data), default=0),
        version=__version__,
    )


def write_rows(
    rows: Iterable[Row], output_format: OutputFormatEnum, path: Optional[Path] = None
) -> str:
    """Render and optionally write to path; returns the rendered text."""
    text = render_rows(rows, output_format)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {output_format.value} output to {path}")
    return text
