"""JSONL manifest I/O: one UTF-8 JSON record per line, streamed."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import ValidationError


def read_manifest(path: str | Path) -> Iterator[dict]:
    """Stream records from a JSONL file; blank lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: bad JSON: {exc}") from exc


def write_manifest(path: str | Path, records: Iterable[Mapping]) -> int:
    """Write records as JSONL with a stable key order; returns the count."""
    count = 0
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            fh.write("\n")
            count += 1
    return count


def validate_record(record: Mapping) -> Mapping:
    """Check the manifest record contract before it enters a pipeline stage."""
    if "id" not in record or not isinstance(record["id"], str):
        raise ValidationError("record needs a string 'id'")
    modality = record.get("modality", "text")
    media = record.get("media", [])
    if (modality == "text") != (len(media) == 0):
        raise ValidationError(
            f"record {record['id']}: media list must be empty iff modality is text"
        )
    if not isinstance(record.get("conversations", None), list):
        raise ValidationError(f"record {record['id']}: needs a 'conversations' list")
    return record
