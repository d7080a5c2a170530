"""
Output module for the quasidirac package.

Writes the figure tables produced by the CLI. Every number is rendered as a
decimal string at a fixed number of significant digits so that identical
runs give byte-identical files. CSV tables carry '#'-prefixed header
comments and a JSON sidecar echoing the resolved configuration; JSON output
embeds the same metadata next to the rows.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from quasidirac.dad import Dad
from quasidirac.precision import (
    CRat,
    PrecisionCtx,
    format_decimal,
    format_rational,
    re_im,
    required_digits,
)
from utils.config import MAX_OUTPUT_DIGITS

logger = logging.getLogger(__name__)

FORMAT_VERSION = "1.0"
OUTPUT_FORMATS = ("csv", "json")


def output_digits(spec: Any) -> int:
    """Significant digits written per number: min(required_digits(spec), QUASIDIRAC_MAX_OUTPUT_DIGITS)."""
    return min(required_digits(spec), MAX_OUTPUT_DIGITS)


def format_value(value: Any, digits: int) -> Optional[str]:
    """
    Render a real value as a decimal string; None stays None (an absent entry).

    Booleans and integers are written verbatim.
    """
    if value is None:
        return None
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format_decimal(value, digits)


def format_parts(value: Any, digits: int) -> List[str]:
    """Real and imaginary parts of a (possibly complex) value as decimal strings."""
    re, im = re_im(value)
    return [format_decimal(re, digits), format_decimal(im, digits)]


def exact_repr(value: Any) -> Optional[str]:
    """'p/q' rendering of an exact real value, None otherwise."""
    if isinstance(value, CRat):
        return format_rational(value) if value.is_real else None
    try:
        return format_rational(value)
    except ValueError:
        return None


def precision_record(ctx: PrecisionCtx, spec: Any) -> Dict[str, Any]:
    return {
        "mode": ctx.mode.value,
        "digits": ctx.digits,
        "required_digits": required_digits(spec),
        "output_digits": output_digits(spec),
    }


def dad_record(dad: Dad, digits: int) -> Dict[str, Any]:
    """JSON-ready description of a DAD with every number as a decimal string."""
    alpha_re, alpha_im = format_parts(dad.spec.alpha, digits)
    return {
        "K": dad.spec.K,
        "delta_x": format_value(dad.spec.delta_x, digits),
        "alpha_re": alpha_re,
        "alpha_im": alpha_im,
        "eta": [format_parts(e, digits) for e in dad.eta],
        "abs_sum": format_value(dad.abs_sum, digits),
        "abs_sum_error": format_value(dad.abs_sum_error, 6),
        "exact": dad.exact,
    }


def _dump_json(path: Path, payload: Dict[str, Any]) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(json.dumps(payload, indent=2, sort_keys=True, default=str))
        f.write("\n")


def write_report(stem: Path, payload: Dict[str, Any]) -> Path:
    """Write a JSON report to '<stem>.json'."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    path = stem.parent / f"{stem.name}.json"
    _dump_json(path, {"format_version": FORMAT_VERSION, **payload})
    logger.info(f"Report saved to {path}")
    return path


def write_table(
    stem: Path,
    columns: Sequence[str],
    rows: Sequence[Sequence[Any]],
    metadata: Dict[str, Any],
    output_format: str = "csv",
) -> List[Path]:
    """
    Write one figure table.

    Args:
        stem: Output path without suffix
        columns: Column names
        rows: Row values, already rendered as strings (None for absent entries)
        metadata: Resolved configuration, precision and per-table extras
        output_format: "csv" (table plus '<stem>.json' sidecar) or "json"

    Returns:
        Paths written

    Raises:
        ValueError: If the format is unknown
        OSError: If the files cannot be written
    """
    if output_format not in OUTPUT_FORMATS:
        raise ValueError(f"Unknown output format {output_format!r}; expected one of {OUTPUT_FORMATS}")

    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    record = {"format_version": FORMAT_VERSION, **metadata}

    if output_format == "json":
        path = stem.parent / f"{stem.name}.json"
        _dump_json(path, {**record, "columns": list(columns), "rows": [list(r) for r in rows]})
        logger.info(f"Results saved to {path}")
        return [path]

    path = stem.parent / f"{stem.name}.csv"
    frame = pd.DataFrame([list(r) for r in rows], columns=list(columns), dtype=object)
    with open(path, "w", newline="\n") as f:
        for key in ("command", "title"):
            if key in metadata:
                f.write(f"# {key}: {metadata[key]}\n")
        if "precision" in metadata:
            precision = metadata["precision"]
            f.write(f"# precision: {precision['mode']}, {precision['digits']} digits\n")
        f.write(f"# sidecar: {stem.name}.json\n")
        frame.to_csv(f, index=False, lineterminator="\n")

    sidecar = stem.parent / f"{stem.name}.json"
    _dump_json(sidecar, {**record, "columns": list(columns)})
    logger.info(f"Results saved to {path}")
    logger.info(f"Detailed metadata saved to {sidecar}")
    return [path, sidecar]
