"""Bit-exact persistence: SASE embedding files, label files, report JSON.

The SASE layout is little-endian throughout: magic "SASE", version u32,
n u64, m u32, d u32, dtype u8 (0 = float32), 7 reserved zero bytes, then the
payload row-major grouped example -> view -> dim. The header is 32 bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .types import (
    ClassResult,
    EmbeddingSet,
    FormatError,
    SelectionResult,
    ValidationError,
    validate,
)

__all__ = [
    "read_embeddings",
    "write_embeddings",
    "read_labels",
    "write_labels",
    "fnv1a64",
    "payload_checksum",
    "assignments_checksum",
    "report_document",
    "write_report",
    "read_report",
    "canonical_json",
]

MAGIC = b"SASE"
FORMAT_VERSION = 1
DTYPE_FLOAT32 = 0
_HEADER = struct.Struct("<4sIQIIB7s")
HEADER_SIZE = _HEADER.size  # 32

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def payload_checksum(embeddings: EmbeddingSet) -> str:
    """FNV-1a of the little-endian float32 payload, as 16 hex digits."""
    payload = np.ascontiguousarray(embeddings.values, dtype="<f4").tobytes()
    return format(fnv1a64(payload), "016x")


def assignments_checksum(assignments: np.ndarray) -> str:
    """FNV-1a of the assignment vector as little-endian int64, as 16 hex digits."""
    data = np.ascontiguousarray(assignments, dtype="<i8").tobytes()
    return format(fnv1a64(data), "016x")


def write_embeddings(embeddings: EmbeddingSet, path) -> None:
    n, m, d = embeddings.values.shape
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, n, m, d, DTYPE_FLOAT32, b"\x00" * 7)
    payload = np.ascontiguousarray(embeddings.values, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_embeddings(path) -> EmbeddingSet:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise FormatError(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    magic, version, n, m, d, dtype, _reserved = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype != DTYPE_FLOAT32:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    expected = n * m * d * 4
    got = len(raw) - HEADER_SIZE
    if got < expected:
        raise FormatError(f"{path}: truncated payload ({got} bytes, header promises {expected})")
    if got > expected:
        raise FormatError(f"{path}: oversized payload ({got} bytes, header promises {expected})")
    values = np.frombuffer(raw, dtype="<f4", offset=HEADER_SIZE).reshape(n, m, d)
    embeddings = EmbeddingSet(values.astype(np.float32, copy=False))
    validate(embeddings).raise_if_failed()
    return embeddings


def read_labels(path) -> list[int]:
    """Parse a UTF-8 label file, one integer per line."""
    text = Path(path).read_text(encoding="utf-8")
    labels: list[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            raise ValidationError(f"{path}:{lineno}: blank line in label file")
        try:
            labels.append(int(stripped))
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: not an integer: {stripped!r}") from None
    if not labels:
        raise ValidationError(f"{path}: empty label file")
    return labels


def write_labels(labels, path) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in labels), encoding="utf-8")


def _format_float(x: float) -> str:
    # 17 significant digits round-trip float64 exactly
    s = format(float(x), ".17g")
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def _format_scalar(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _format_float(float(value))
    if isinstance(value, str):
        return json.dumps(value)
    raise TypeError(f"unsupported scalar in report document: {type(value)!r}")


def _is_scalar(value) -> bool:
    return value is None or isinstance(value, (bool, int, float, str, np.integer, np.floating))


def _emit(value, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, item) in enumerate(value.items()):
            out.append(f"{inner}{json.dumps(key)}: ")
            _emit(item, indent + 1, out)
            out.append(",\n" if i < len(value) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(value, (list, tuple)):
        items = list(value)
        if not items:
            out.append("[]")
        elif all(_is_scalar(v) for v in items):
            out.append("[" + ", ".join(_format_scalar(v) for v in items) + "]")
        else:
            out.append("[\n")
            for i, item in enumerate(items):
                out.append(inner)
                _emit(item, indent + 1, out)
                out.append(",\n" if i < len(items) - 1 else "\n")
            out.append(pad + "]")
    else:
        out.append(_format_scalar(value))


def canonical_json(document) -> str:
    """Deterministic JSON text: insertion-ordered keys, floats at 17 significant digits.

    Parsing the text and emitting it again reproduces the same bytes.
    """
    out: list[str] = []
    _emit(document, 0, out)
    out.append("\n")
    return "".join(out)


def _diagnostics_document(diag) -> dict | None:
    if diag is None:
        return None
    return {
        "center_error": float(diag.center_error),
        "alignment_error": float(diag.alignment_error),
        "alignment_loss_subset": None
        if diag.alignment_loss_subset is None
        else float(diag.alignment_loss_subset),
        "alignment_loss_full": None
        if diag.alignment_loss_full is None
        else float(diag.alignment_loss_full),
    }


def _class_document(c: ClassResult) -> dict:
    doc = {
        "class_id": c.class_id,
        "size": c.size,
        "r_k": c.r_k,
        "final_size": c.final_size,
        "selected": list(c.selected),
        "objective_greedy": float(c.objective_greedy),
        "objective_refined": float(c.objective_refined),
        "diagnostics": _diagnostics_document(c.diagnostics),
    }
    if c.random_baseline is not None:
        b = c.random_baseline
        doc["random_baseline"] = {
            "count": b.count,
            "center_error_mean": float(b.center_error_mean),
            "alignment_error_mean": float(b.alignment_error_mean),
            "alignment_loss_subset_mean": None
            if b.alignment_loss_subset_mean is None
            else float(b.alignment_loss_subset_mean),
        }
    return doc


def report_document(result: SelectionResult) -> dict:
    """The report as a plain mapping, in the exact serialized key order."""
    cfg = result.config
    config_doc = {
        "budget_fraction": None if cfg.budget_fraction is None else float(cfg.budget_fraction),
        "budget_total": cfg.budget_total,
        "tau": float(cfg.tau),
        "refine": cfg.refine,
        "normalize": cfg.normalize,
        "seed": cfg.seed,
        "partition_source": result.partition_source,
        "partition_checksum": result.partition_checksum,
        "kmeans_K": cfg.kmeans_K,
        "kmeans_iters": cfg.kmeans_iters,
        "kmeans_tol": float(cfg.kmeans_tol),
        "baseline_count": cfg.baseline_count,
        "refine_scope": "class",
    }
    return {
        "schema_version": 1,
        "config": config_doc,
        "input_checksum": result.input_checksum,
        "classes": [_class_document(c) for c in result.classes],
        "total_selected": result.total_selected,
    }


def write_report(result: SelectionResult, path) -> None:
    Path(path).write_text(canonical_json(report_document(result)), encoding="utf-8")


def read_report(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema_version") != 1:
        raise FormatError(f"{path}: unsupported report schema")
    return doc
