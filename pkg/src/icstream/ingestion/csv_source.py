"""Streaming CSV ingestion.

The file is read row by row through ``csv.reader``; nothing is buffered
beyond the current row, so memory use does not grow with file length and
every row is read exactly once.

The label space cannot be inferred without reading the file, so
``open_csv`` requires ``class_names`` up front. When the caller genuinely
does not know it, ``scan_csv_labels`` performs one explicit extra pass; that
pass is a separate read by choice, never something the source does behind
the caller's back.
"""

from __future__ import annotations

import csv
from typing import Optional, Sequence, Tuple, Union

from ..core import FeatureKind, Schema
from ..errors import Io, ParseRow, SchemaMismatch
from .base import CSV, Origin, StreamSource
from .encoder import EncoderState, encode


def _open_handle(path):
    try:
        return open(path, "r", newline="")
    except OSError as exc:
        raise Io(f"cannot open {path}: {exc}") from exc


def _resolve_label_column(label_column, header_row, n_columns, path):
    if isinstance(label_column, str):
        if header_row is None:
            raise SchemaMismatch(
                f"{path}: label column named {label_column!r} needs a header row"
            )
        try:
            return header_row.index(label_column)
        except ValueError:
            raise SchemaMismatch(
                f"{path}: no column named {label_column!r} in header {header_row}"
            )
    idx = int(label_column)
    if idx < 0:
        idx += n_columns
    if not 0 <= idx < n_columns:
        raise SchemaMismatch(
            f"{path}: label column {label_column} outside {n_columns} columns"
        )
    return idx


class CsvSource(StreamSource):
    def __init__(self, path, schema, reader, handle, label_idx, label_to_index, start_line, encoder):
        super().__init__(schema, Origin(CSV, str(path)))
        self._path = path
        self._reader = reader
        self._handle = handle
        self._label_idx = label_idx
        self._label_to_index = label_to_index
        self._line = start_line
        self._encoder = encoder

    @property
    def encoder(self) -> EncoderState:
        return self._encoder

    def _produce(self):
        for row in self._reader:
            self._line += 1
            if not row:
                continue
            if len(row) != self.schema.n_features + 1:
                raise ParseRow(
                    self._line,
                    f"expected {self.schema.n_features + 1} columns, got {len(row)}",
                )
            raw_label = row[self._label_idx].strip()
            if raw_label not in self._label_to_index:
                raise ParseRow(self._line, f"unknown label value {raw_label!r}")
            values = row[: self._label_idx] + row[self._label_idx + 1 :]
            example = encode(
                self._encoder,
                values,
                self._label_to_index[raw_label],
                self.position,
            )
            return example.features, example.label
        self._handle.close()
        return None


def open_csv(
    path,
    *,
    class_names: Sequence[str],
    header: bool = True,
    label_column: Union[int, str] = -1,
    delimiter: str = ",",
    categorical_columns: Sequence[Union[int, str]] = (),
    normalize: bool = True,
) -> CsvSource:
    """Open a CSV file as a single-pass example stream.

    Parameters
    ----------
    class_names
        Label values in class-index order. Every label cell must be one of
        these strings.
    header
        Whether the first line names the columns.
    label_column
        Column holding the label, by index (negative counts from the end) or
        by header name.
    categorical_columns
        Feature columns to encode ordinally instead of numerically, by index
        (position among feature columns after removing the label) or header
        name.
    """
    class_names = tuple(str(c) for c in class_names)
    if len(set(class_names)) != len(class_names) or not class_names:
        raise SchemaMismatch(f"{path}: class_names must be non-empty and distinct")

    handle = _open_handle(path)
    reader = csv.reader(handle, delimiter=delimiter)
    header_row = None
    start_line = 0
    if header:
        try:
            header_row = next(reader)
        except StopIteration:
            handle.close()
            raise SchemaMismatch(f"{path}: header requested but file is empty")
        header_row = [cell.strip() for cell in header_row]
        start_line = 1
        n_columns = len(header_row)
    else:
        # peek one row to learn the width, then replay it
        try:
            first = next(reader)
        except StopIteration:
            first = None
        if first is None:
            handle.close()
            raise SchemaMismatch(f"{path}: cannot infer column count from empty file")
        n_columns = len(first)

        def _chain(first_row, rest):
            yield first_row
            yield from rest

        reader = _chain(first, reader)

    if n_columns < 2:
        handle.close()
        raise SchemaMismatch(f"{path}: need at least one feature and one label column")
    label_idx = _resolve_label_column(label_column, header_row, n_columns, path)

    if header_row is not None:
        feature_names = tuple(
            name for i, name in enumerate(header_row) if i != label_idx
        )
    else:
        feature_names = tuple(f"f{i}" for i in range(n_columns - 1))

    categorical = set()
    for col in categorical_columns:
        if isinstance(col, str):
            if col not in feature_names:
                handle.close()
                raise SchemaMismatch(f"{path}: no feature column named {col!r}")
            categorical.add(feature_names.index(col))
        else:
            if not 0 <= int(col) < len(feature_names):
                handle.close()
                raise SchemaMismatch(f"{path}: categorical column {col} out of range")
            categorical.add(int(col))

    schema = Schema(
        feature_names=feature_names,
        feature_kinds=tuple(
            FeatureKind.categorical() if i in categorical else FeatureKind.numeric()
            for i in range(len(feature_names))
        ),
        class_names=class_names,
    )
    encoder = EncoderState(schema, strict=False, normalize=normalize)
    label_to_index = {name: i for i, name in enumerate(class_names)}
    return CsvSource(
        path, schema, reader, handle, label_idx, label_to_index, start_line, encoder
    )


def scan_csv_labels(
    path,
    *,
    header: bool = True,
    label_column: Union[int, str] = -1,
    delimiter: str = ",",
) -> Tuple[str, ...]:
    """Collect the distinct label values of a CSV file, in first-seen order.

    This is a deliberate extra pass over the file for callers that do not
    know the label space; pass its result to ``open_csv`` afterwards.
    """
    handle = _open_handle(path)
    with handle:
        reader = csv.reader(handle, delimiter=delimiter)
        header_row = None
        if header:
            header_row = [cell.strip() for cell in next(reader, [])]
        label_idx = None
        seen = {}
        for line, row in enumerate(reader, start=2 if header else 1):
            if not row:
                continue
            if label_idx is None:
                label_idx = _resolve_label_column(
                    label_column, header_row, len(row), path
                )
            if len(row) <= label_idx:
                raise ParseRow(line, f"row has {len(row)} columns, label column missing")
            value = row[label_idx].strip()
            if value not in seen:
                seen[value] = None
    return tuple(seen)
