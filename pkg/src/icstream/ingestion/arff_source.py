"""Streaming ARFF ingestion.

Supports the classic subset: ``@relation``, ``@attribute`` with numeric
(``numeric``/``real``/``integer``) and nominal (``{a,b,...}``) types, and a
``@data`` section of comma-separated rows. Keywords are case-insensitive and
``%`` starts a comment. The last attribute is the class and must be nominal;
its declared values become the class names in declaration order. Sparse
``{index value}`` rows are out of scope and rejected.
"""

from __future__ import annotations

import csv
import re
from typing import List, Optional, Tuple

from ..core import FeatureKind, Schema
from ..errors import ArffSyntax, Io, UnsupportedAttribute
from .base import ARFF, Origin, StreamSource
from .encoder import EncoderState, encode

_NUMERIC_TYPES = {"numeric", "real", "integer"}

_ATTRIBUTE_RE = re.compile(
    r"""@attribute\s+ (?: '(?P<qname>[^']*)' | "(?P<dqname>[^"]*)" | (?P<name>\S+) ) \s+ (?P<type>.+)""",
    re.IGNORECASE | re.VERBOSE,
)


def _strip_comment(line: str) -> str:
    # a % outside quotes starts a comment; quoted values keep theirs
    out = []
    quote = None
    for ch in line:
        if quote:
            if ch == quote:
                quote = None
            out.append(ch)
        elif ch in "'\"":
            quote = ch
            out.append(ch)
        elif ch == "%":
            break
        else:
            out.append(ch)
    return "".join(out).strip()


def _parse_nominal(type_text: str, line_no: int) -> List[str]:
    inner = type_text.strip()
    if not (inner.startswith("{") and inner.endswith("}")):
        raise ArffSyntax(line_no, f"malformed nominal specification {type_text!r}")
    values = next(csv.reader([inner[1:-1]], skipinitialspace=True), [])
    values = [v.strip().strip("'\"") for v in values]
    if not values or any(not v for v in values):
        raise ArffSyntax(line_no, f"empty value in nominal specification {type_text!r}")
    if len(set(values)) != len(values):
        raise ArffSyntax(line_no, f"duplicate value in nominal specification {type_text!r}")
    return values


def _parse_header(lines, path):
    """Consume header lines up to and including @data; return declarations."""
    saw_relation = False
    attributes: List[Tuple[str, Optional[List[str]]]] = []
    for line_no, raw in lines:
        line = _strip_comment(raw)
        if not line:
            continue
        lowered = line.lower()
        if lowered.startswith("@relation"):
            saw_relation = True
        elif lowered.startswith("@attribute"):
            match = _ATTRIBUTE_RE.match(line)
            if not match:
                raise ArffSyntax(line_no, f"malformed attribute line {line!r}")
            name = match["qname"] or match["dqname"] or match["name"]
            type_text = match["type"].strip()
            if type_text.startswith("{"):
                attributes.append((name, _parse_nominal(type_text, line_no)))
            elif type_text.lower() in _NUMERIC_TYPES:
                attributes.append((name, None))
            else:
                raise UnsupportedAttribute(
                    f"line {line_no}: attribute {name!r} of type {type_text!r}"
                )
        elif lowered.startswith("@data"):
            if not saw_relation:
                raise ArffSyntax(line_no, "@data before @relation")
            if len(attributes) < 2:
                raise ArffSyntax(line_no, "need at least one feature and a class attribute")
            return attributes
        else:
            raise ArffSyntax(line_no, f"unexpected directive {line.split()[0]!r}")
    raise ArffSyntax(0, "no @data section")


class ArffSource(StreamSource):
    def __init__(self, path, schema, handle, lines, label_values, encoder):
        super().__init__(schema, Origin(ARFF, str(path)))
        self._path = path
        self._handle = handle
        self._lines = lines
        self._label_to_index = {v: i for i, v in enumerate(label_values)}
        self._encoder = encoder

    @property
    def encoder(self) -> EncoderState:
        return self._encoder

    def _produce(self):
        for line_no, raw in self._lines:
            line = _strip_comment(raw)
            if not line:
                continue
            if line.startswith("{"):
                raise ArffSyntax(line_no, "sparse data rows are not supported")
            row = next(csv.reader([line], skipinitialspace=True), [])
            row = [cell.strip().strip("'\"") for cell in row]
            if len(row) != self.schema.n_features + 1:
                raise ArffSyntax(
                    line_no,
                    f"expected {self.schema.n_features + 1} values, got {len(row)}",
                )
            raw_label = row[-1]
            if raw_label not in self._label_to_index:
                raise ArffSyntax(line_no, f"undeclared class value {raw_label!r}")
            example = encode(
                self._encoder, row[:-1], self._label_to_index[raw_label], self.position
            )
            return example.features, example.label
        self._handle.close()
        return None


def open_arff(path, *, normalize: bool = True) -> ArffSource:
    """Open an ARFF file as a single-pass example stream.

    The nominal declarations fix the categorical value order, so feature
    encoding is strict: an undeclared value in the data section is an error,
    not a new category.
    """
    try:
        handle = open(path, "r")
    except OSError as exc:
        raise Io(f"cannot open {path}: {exc}") from exc
    lines = enumerate(handle, start=1)
    try:
        attributes = _parse_header(lines, path)
    except Exception:
        handle.close()
        raise

    class_name, class_values = attributes[-1]
    if class_values is None:
        handle.close()
        raise UnsupportedAttribute(f"class attribute {class_name!r} must be nominal")

    feature_attrs = attributes[:-1]
    schema = Schema(
        feature_names=tuple(name for name, _ in feature_attrs),
        feature_kinds=tuple(
            FeatureKind.categorical(len(values)) if values is not None else FeatureKind.numeric()
            for _, values in feature_attrs
        ),
        class_names=tuple(class_values),
    )
    declared = {
        idx: values
        for idx, (_, values) in enumerate(feature_attrs)
        if values is not None
    }
    encoder = EncoderState(schema, strict=True, declared_values=declared, normalize=normalize)
    return ArffSource(path, schema, handle, lines, class_values, encoder)
