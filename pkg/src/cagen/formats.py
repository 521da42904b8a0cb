"""Instance documents and suite files.

Instance document (JSON)::

    {"strength": 2,
     "parameters": [{"name": "OS", "values": ["Windows", "MacOS"]}, 3, ...],
     "forbidden": [[["OS", "MacOS"], ["Browser", "Explorer"]]]}

``parameters`` may be replaced by ``"domains": [v1, v2, ...]``.  A bare
integer parameter gets the name ``p<i>`` and values ``"0" .. "v-1"``.
Forbidden entries name a parameter and a value by label or by index.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Any, Sequence

from .errors import InvalidInstanceError, InvalidSolutionError
from .model import CAInstance, TestConfig


class ParseError(InvalidInstanceError):
    pass


INSTANCE_FIELDS = {"strength", "parameters", "domains", "forbidden"}


def _decode(text: bytes | str) -> str:
    if isinstance(text, bytes):
        try:
            return text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"instance is not valid UTF-8: {exc}") from exc
    return text


def _load_json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def parse_instance(text: bytes | str, strength: int | None = None) -> CAInstance:
    doc = _load_json(_decode(text), "instance")
    if not isinstance(doc, dict):
        raise ParseError("instance: top level must be an object")
    unknown = set(doc) - INSTANCE_FIELDS
    if unknown:
        raise ParseError(f"instance: unknown field(s) {sorted(unknown)}")
    if "parameters" in doc and "domains" in doc:
        raise ParseError("instance: give either 'parameters' or 'domains', not both")
    t = doc.get("strength") if strength is None else strength
    if not _is_int(t):
        raise ParseError("instance.strength: expected an integer")

    names: list[str] | None = None
    value_names: list[list[str]] | None = None
    if "domains" in doc:
        domains = doc["domains"]
        if not isinstance(domains, list) or not all(_is_int(v) and v >= 1 for v in domains):
            raise ParseError("instance.domains: expected a list of integers >= 1")
    elif "parameters" in doc:
        params = doc["parameters"]
        if not isinstance(params, list) or not params:
            raise ParseError("instance.parameters: expected a non-empty list")
        domains, names, value_names = [], [], []
        for i, entry in enumerate(params):
            where = f"instance.parameters[{i}]"
            if _is_int(entry):
                if entry < 1:
                    raise ParseError(f"{where}: domain size must be >= 1")
                domains.append(entry)
                names.append(f"p{i}")
                value_names.append([str(j) for j in range(entry)])
            elif isinstance(entry, dict):
                extra = set(entry) - {"name", "values"}
                if extra:
                    raise ParseError(f"{where}: unknown field(s) {sorted(extra)}")
                name, values = entry.get("name"), entry.get("values")
                if not isinstance(name, str):
                    raise ParseError(f"{where}.name: expected a string")
                if not isinstance(values, list) or not values or not all(isinstance(v, str) for v in values):
                    raise ParseError(f"{where}.values: expected a non-empty list of strings")
                if len(set(values)) != len(values):
                    raise ParseError(f"{where}.values: duplicate value names")
                domains.append(len(values))
                names.append(name)
                value_names.append(list(values))
            else:
                raise ParseError(f"{where}: expected an object or an integer")
        if len(set(names)) != len(names):
            raise ParseError("instance.parameters: duplicate parameter names")
    else:
        raise ParseError("instance: missing 'parameters' (or 'domains')")

    forbidden = []
    raw = doc.get("forbidden", [])
    if not isinstance(raw, list):
        raise ParseError("instance.forbidden: expected a list")
    for i, pattern in enumerate(raw):
        where = f"instance.forbidden[{i}]"
        if not isinstance(pattern, list) or not pattern:
            raise ParseError(f"{where}: expected a non-empty list of [parameter, value] pairs")
        pairs = []
        for j, pair in enumerate(pattern):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ParseError(f"{where}[{j}]: expected [parameter, value]")
            p = _resolve_param(pair[0], names, len(domains), f"{where}[{j}]")
            v = _resolve_value(pair[1], p, domains, value_names, f"{where}[{j}]")
            pairs.append((p, v))
        if len({p for p, _ in pairs}) != len(pairs):
            raise ParseError(f"{where}: parameters must be distinct")
        forbidden.append(tuple(pairs))

    try:
        return CAInstance(
            strength=t,
            domains=tuple(domains),
            parameter_names=tuple(names) if names is not None else None,
            value_names=tuple(tuple(v) for v in value_names) if value_names is not None else None,
            forbidden=tuple(forbidden),
        )
    except InvalidInstanceError as exc:
        raise ParseError(f"instance: {exc}") from exc


def _resolve_param(ref, names, k, where) -> int:
    if _is_int(ref):
        if 0 <= ref < k:
            return ref
    elif isinstance(ref, str) and names is not None and ref in names:
        return names.index(ref)
    raise ParseError(f"{where}: unknown parameter {ref!r}")


def _resolve_value(ref, param, domains, value_names, where) -> int:
    if _is_int(ref):
        if 0 <= ref < domains[param]:
            return ref
    elif isinstance(ref, str) and value_names is not None and ref in value_names[param]:
        return value_names[param].index(ref)
    raise ParseError(f"{where}: unknown value {ref!r} for parameter {param}")


def instance_to_dict(instance: CAInstance) -> dict:
    params = []
    for i, v in enumerate(instance.domains):
        params.append({"name": instance.param_label(i),
                       "values": [instance.value_label(i, j) for j in range(v)]})
    return {
        "strength": instance.strength,
        "parameters": params,
        "forbidden": [[[instance.param_label(p), instance.value_label(p, v)] for p, v in pattern]
                      for pattern in instance.forbidden],
    }


# ---------------------------------------------------------------- suites


def suite_to_json(instance: CAInstance, tests: Sequence[TestConfig], analysis: dict | None = None,
                  stats: dict | None = None) -> str:
    """Pretty JSON with one line per test row."""
    rows = [
        json.dumps({"values": [instance.value_label(i, v) for i, v in enumerate(test)],
                    "indices": list(test)})
        for test in tests
    ]
    parts = [
        '  "parameters": ' + json.dumps([instance.param_label(i) for i in range(instance.k)]),
        f'  "size": {len(tests)}',
        '  "tests": [' + (("\n    " + ",\n    ".join(rows) + "\n  ") if rows else "") + "]",
    ]
    for key, value in (("analysis", analysis), ("stats", stats)):
        if value is not None:
            body = json.dumps(value, indent=2).replace("\n", "\n  ")
            parts.append(f'  "{key}": {body}')
    return "{\n" + ",\n".join(parts) + "\n}\n"


def suite_to_csv(instance: CAInstance, tests: Sequence[TestConfig]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([instance.param_label(i) for i in range(instance.k)])
    for test in tests:
        writer.writerow([instance.value_label(i, v) for i, v in enumerate(test)])
    return buf.getvalue()


def _row_from_labels(instance: CAInstance, row: Sequence, where: str) -> TestConfig:
    if len(row) != instance.k:
        raise InvalidSolutionError(f"{where}: expected {instance.k} entries, got {len(row)}")
    out = []
    for i, cell in enumerate(row):
        labels = [instance.value_label(i, j) for j in range(instance.domains[i])]
        if isinstance(cell, str) and cell in labels:
            out.append(labels.index(cell))
        elif _is_int(cell) and 0 <= cell < instance.domains[i]:
            out.append(cell)
        elif isinstance(cell, str) and cell.strip().lstrip("-").isdigit() and 0 <= int(cell) < instance.domains[i]:
            out.append(int(cell))
        else:
            raise InvalidSolutionError(f"{where}: unknown value {cell!r} for parameter {instance.param_label(i)}")
    return tuple(out)


def parse_suite(text: bytes | str, instance: CAInstance) -> list[TestConfig]:
    """Read a suite written as JSON (see ``suite_to_json``) or CSV with a header row."""
    text = _decode(text)
    stripped = text.lstrip()
    if stripped.startswith("{") or stripped.startswith("["):
        doc = _load_json(text, "suite")
        rows = doc.get("tests") if isinstance(doc, dict) else doc
        if not isinstance(rows, list):
            raise InvalidSolutionError("suite: expected a 'tests' list")
        tests = []
        for i, entry in enumerate(rows):
            where = f"suite.tests[{i}]"
            if isinstance(entry, dict):
                if "indices" in entry:
                    tests.append(_row_from_labels(instance, entry["indices"], where))
                elif "values" in entry:
                    tests.append(_row_from_labels(instance, entry["values"], where))
                else:
                    raise InvalidSolutionError(f"{where}: needs 'indices' or 'values'")
            elif isinstance(entry, list):
                tests.append(_row_from_labels(instance, entry, where))
            else:
                raise InvalidSolutionError(f"{where}: expected an object or a list")
        return tests
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r]
    if not rows:
        return []
    header = rows[0]
    expected = [instance.param_label(i) for i in range(instance.k)]
    if header != expected:
        raise InvalidSolutionError(f"suite CSV header {header} does not match parameters {expected}")
    return [_row_from_labels(instance, r, f"suite row {n + 2}") for n, r in enumerate(rows[1:])]
