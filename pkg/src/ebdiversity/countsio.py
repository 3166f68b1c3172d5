"""Count-matrix CSV files: header of taxon names, one sample per row."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .model import CountVector

__all__ = ["CountMatrixFile", "DataError", "read_counts", "write_counts"]


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class CountMatrixFile:
    taxa: tuple[str, ...]
    rows: tuple[tuple[str, CountVector], ...]

    @property
    def k(self) -> int:
        return len(self.taxa)


def _parse(reader, source: str) -> CountMatrixFile:
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{source}: empty file") from None
    taxa = tuple(h.strip() for h in header[1:])
    if len(taxa) < 2:
        raise DataError(f"{source}: header must name at least two taxa after the sample-id column")
    if len(set(taxa)) != len(taxa):
        raise DataError(f"{source}: duplicate taxon names in header")
    rows = []
    seen = set()
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) != len(taxa) + 1:
            raise DataError(f"{source}: line {lineno}: expected {len(taxa)} counts, got {len(rec) - 1}")
        sid = rec[0].strip()
        if sid in seen:
            raise DataError(f"{source}: line {lineno}: duplicate sample id {sid!r}")
        seen.add(sid)
        counts = []
        for name, field in zip(taxa, rec[1:]):
            field = field.strip()
            try:
                v = int(field)
            except ValueError:
                raise DataError(
                    f"{source}: line {lineno}, taxon {name!r}: expected a nonnegative integer, got {field!r}"
                ) from None
            if v < 0:
                raise DataError(f"{source}: line {lineno}, taxon {name!r}: negative count {v}")
            counts.append(v)
        rows.append((sid, CountVector(counts)))
    return CountMatrixFile(taxa, tuple(rows))


def read_counts(path: str | Path) -> CountMatrixFile:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            return _parse(csv.reader(fh), str(path))
    except OSError as e:
        raise DataError(f"{path}: cannot read counts: {e.strerror}") from e


def parse_counts(text: str, source: str = "<counts>") -> CountMatrixFile:
    return _parse(csv.reader(io.StringIO(text)), source)


def write_counts(matrix: CountMatrixFile, path: str | Path | None = None, id_header: str = "sample") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([id_header, *matrix.taxa])
    for sid, x in matrix.rows:
        w.writerow([sid, *x.counts.tolist()])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
