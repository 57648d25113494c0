"""Retrieval runs: ranked lists, dissimilarity matrices, and gain vectors.

Run file grammar (one result per line, whitespace separated)::

    #@ method <label>            optional metadata directives
    #@ query_time_ms <number>
    #@ descriptor_bytes <int>
    # plain comment
    <query_id> <object_id> <score>

Lower scores rank first; ties are broken by ascending object id.

Matrix text grammar::

    <N>
    <id_1> ... <id_N>
    <row 1: N numbers>
    ...
    <row N: N numbers>

Tokens may wrap across lines. The CSV variant has an empty (or any) corner
cell followed by the ids in the first row, then one ``id,v1,...,vN`` row per
query. ``values[i][j]`` is the dissimilarity of object ``j`` to query ``i``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from shapeeval.dataset import Classification
from shapeeval.errors import InputError, InputWarning


@dataclass(frozen=True)
class RankedList:
    query: str
    ranking: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "ranking", tuple(self.ranking))
        if self.query in self.ranking:
            raise InputError(f"query {self.query!r} appears in its own ranking")
        if len(set(self.ranking)) != len(self.ranking):
            seen = set()
            dup = next(x for x in self.ranking if x in seen or seen.add(x))
            raise InputError(f"object {dup!r} ranked twice for query {self.query!r}")


@dataclass(frozen=True)
class RunMeta:
    """Cost figures reported by the submitter; carried through, never measured."""

    reported_query_time_ms: float | None = None
    descriptor_bytes: int | None = None


@dataclass(frozen=True)
class Run:
    name: str
    lists: dict[str, RankedList]
    method_label: str = ""
    meta: RunMeta | None = None

    def __post_init__(self):
        for key, lst in self.lists.items():
            if key != lst.query:
                raise InputError(f"run {self.name!r}: key {key!r} holds list for {lst.query!r}")

    def __len__(self) -> int:
        return len(self.lists)


@dataclass(frozen=True, eq=False)
class DissimilarityMatrix:
    ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        ids = tuple(self.ids)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "values", values)
        n = len(ids)
        if values.shape != (n, n):
            raise InputError(f"matrix shape {values.shape} does not match {n} ids")
        if len(set(ids)) != n:
            raise InputError("matrix ids are not unique")
        bad = np.argwhere(~np.isfinite(values) | (values < 0))
        if len(bad):
            i, j = (int(x) for x in bad[0])
            raise InputError(
                f"invalid dissimilarity {values[i, j]!r} at row {i + 1}, column {j + 1} "
                f"({ids[i]!r} -> {ids[j]!r}); values must be finite and >= 0"
            )

    def __eq__(self, other):
        if not isinstance(other, DissimilarityMatrix):
            return NotImplemented
        return self.ids == other.ids and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class GainVector:
    """Binary relevance of each ranked object; ``relevant_total`` is R."""

    gains: tuple[int, ...]
    relevant_total: int
    query: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gains", tuple(self.gains))
        if any(g not in (0, 1) for g in self.gains):
            raise ValueError("gains must be 0 or 1")
        if self.relevant_total < 0:
            raise ValueError("relevant_total must be non-negative")
        if sum(self.gains) > self.relevant_total:
            raise ValueError(
                f"{sum(self.gains)} relevant retrieved but relevant_total is {self.relevant_total}"
            )

    def __len__(self) -> int:
        return len(self.gains)


# -- run files -------------------------------------------------------------

_META_KEYS = {"method", "query_time_ms", "descriptor_bytes", "name"}


def parse_run(text: str, name: str = "run", source_path: str | None = None) -> Run:
    scored: dict[str, list[tuple[float, str]]] = {}
    seen: dict[tuple[str, str], int] = {}
    directives: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("#@"):
            parts = stripped[2:].split(None, 1)
            if len(parts) != 2 or parts[0] not in _META_KEYS:
                raise InputError(f"bad metadata directive {stripped!r}", source_path, lineno)
            directives[parts[0]] = parts[1].strip()
            continue
        content = stripped.split("#", 1)[0].strip()
        if not content:
            continue
        parts = content.split()
        if len(parts) != 3:
            raise InputError(
                f"expected 'query_id object_id score', got {len(parts)} fields",
                source_path,
                lineno,
            )
        query, obj, score_text = parts
        try:
            score = float(score_text)
        except ValueError:
            raise InputError(f"non-numeric score {score_text!r}", source_path, lineno) from None
        if math.isnan(score):
            raise InputError("score is NaN", source_path, lineno)
        if (query, obj) in seen:
            raise InputError(
                f"duplicate pair ({query}, {obj}), first on line {seen[query, obj]}",
                source_path,
                lineno,
            )
        seen[query, obj] = lineno
        bucket = scored.setdefault(query, [])
        if obj == query:
            warnings.warn(
                f"{source_path or name}:{lineno}: query {query!r} listed as its own result; dropped",
                InputWarning,
                stacklevel=2,
            )
            continue
        bucket.append((score, obj))

    meta = None
    try:
        if "query_time_ms" in directives or "descriptor_bytes" in directives:
            meta = RunMeta(
                float(directives["query_time_ms"]) if "query_time_ms" in directives else None,
                int(directives["descriptor_bytes"]) if "descriptor_bytes" in directives else None,
            )
    except ValueError as exc:
        raise InputError(f"bad metadata value: {exc}", source_path) from None

    lists = {q: RankedList(q, [obj for _, obj in sorted(items)]) for q, items in scored.items()}
    return Run(directives.get("name", name), lists, directives.get("method", ""), meta)


def load_run(path, name: str | None = None) -> Run:
    path = Path(path)
    text = _read_text(path)
    return parse_run(text, name or path.stem, str(path))


def serialize_run(run: Run, scores: dict[str, dict[str, float]] | None = None) -> str:
    """Render a run file. Without ``scores`` each object's rank is its score."""
    out = []
    if run.method_label:
        out.append(f"#@ method {run.method_label}\n")
    if run.meta is not None:
        if run.meta.reported_query_time_ms is not None:
            out.append(f"#@ query_time_ms {run.meta.reported_query_time_ms!r}\n")
        if run.meta.descriptor_bytes is not None:
            out.append(f"#@ descriptor_bytes {run.meta.descriptor_bytes}\n")
    for query, lst in run.lists.items():
        for rank, obj in enumerate(lst.ranking, start=1):
            score = scores[query][obj] if scores is not None else rank
            out.append(f"{query} {obj} {score!r}\n")
    return "".join(out)


def write_run(run: Run, path, scores=None) -> None:
    Path(path).write_text(serialize_run(run, scores), encoding="utf-8", newline="\n")


# -- matrices --------------------------------------------------------------

def _read_text(path: Path) -> str:
    try:
        return path.read_bytes().decode("utf-8-sig")
    except OSError as exc:
        raise InputError(f"cannot read: {exc.strerror}", str(path)) from exc
    except UnicodeDecodeError:
        raise InputError("file is not valid UTF-8", str(path)) from None


def _parse_number(token: str, path, lineno) -> float:
    try:
        value = float(token)
    except ValueError:
        raise InputError(f"non-numeric value {token!r}", path, lineno) from None
    return value


def parse_matrix(text: str, source_path: str | None = None) -> DissimilarityMatrix:
    first = next((ln for ln in text.splitlines() if ln.strip()), "")
    if "," in first:
        return _parse_matrix_csv(text, source_path)
    return _parse_matrix_text(text, source_path)


def _check_values(ids, rows, row_lines, path):
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            if not math.isfinite(v) or v < 0:
                raise InputError(
                    f"invalid dissimilarity {v!r} at row {i + 1}, column {j + 1} "
                    f"({ids[i]!r} -> {ids[j]!r})",
                    path,
                    row_lines[i],
                )


def _parse_matrix_text(text: str, path) -> DissimilarityMatrix:
    tokens = [
        (tok, lineno)
        for lineno, line in enumerate(text.splitlines(), start=1)
        for tok in line.split("#", 1)[0].split()
    ]
    if not tokens:
        raise InputError("matrix file is empty", path)
    head, head_line = tokens[0]
    try:
        n = int(head)
    except ValueError:
        raise InputError(f"expected object count, got {head!r}", path, head_line) from None
    if n < 1:
        raise InputError(f"object count must be positive, got {n}", path, head_line)
    if len(tokens) != 1 + n + n * n:
        last = tokens[-1][1]
        raise InputError(
            f"expected {n} ids and {n * n} values, found {len(tokens) - 1} tokens", path, last
        )
    ids = [tok for tok, _ in tokens[1 : 1 + n]]
    if len(set(ids)) != n:
        dup_line = next(
            ln for k, (tok, ln) in enumerate(tokens[1 : 1 + n]) if tok in ids[:k]
        )
        raise InputError("duplicate id in matrix header", path, dup_line)
    body = tokens[1 + n :]
    rows = []
    row_lines = []
    for i in range(n):
        chunk = body[i * n : (i + 1) * n]
        rows.append([_parse_number(tok, path, ln) for tok, ln in chunk])
        row_lines.append(chunk[0][1])
    _check_values(ids, rows, row_lines, path)
    return DissimilarityMatrix(tuple(ids), np.array(rows, dtype=float))


def _parse_matrix_csv(text: str, path) -> DissimilarityMatrix:
    reader = csv.reader(io.StringIO(text))
    records = [(reader.line_num, row) for row in reader if any(cell.strip() for cell in row)]
    if not records:
        raise InputError("matrix file is empty", path)
    header_line, header = records[0]
    ids = [cell.strip() for cell in header[1:]]
    n = len(ids)
    if n == 0 or len(set(ids)) != n or not all(ids):
        raise InputError("header row must list unique, non-empty ids", path, header_line)
    if len(records) - 1 != n:
        raise InputError(f"expected {n} data rows, found {len(records) - 1}", path)
    rows = []
    row_lines = []
    for i, (lineno, row) in enumerate(records[1:]):
        if len(row) != n + 1:
            raise InputError(f"expected {n + 1} cells, found {len(row)}", path, lineno)
        if row[0].strip() != ids[i]:
            raise InputError(
                f"row id {row[0].strip()!r} does not match column id {ids[i]!r}", path, lineno
            )
        rows.append([_parse_number(cell.strip(), path, lineno) for cell in row[1:]])
        row_lines.append(lineno)
    _check_values(ids, rows, row_lines, path)
    return DissimilarityMatrix(tuple(ids), np.array(rows, dtype=float))


def load_matrix(path) -> DissimilarityMatrix:
    path = Path(path)
    return parse_matrix(_read_text(path), str(path))


def serialize_matrix(m: DissimilarityMatrix, format: str = "text") -> str:
    if format == "text":
        out = [f"{len(m.ids)}\n", " ".join(m.ids) + "\n"]
        out.extend(" ".join(repr(float(v)) for v in row) + "\n" for row in m.values)
        return "".join(out)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["", *m.ids])
        for obj, row in zip(m.ids, m.values):
            writer.writerow([obj, *(repr(float(v)) for v in row)])
        return buf.getvalue()
    raise ValueError(f"unknown matrix format {format!r}")


def write_matrix(m: DissimilarityMatrix, path, format: str = "text") -> None:
    Path(path).write_text(serialize_matrix(m, format), encoding="utf-8", newline="\n")


def ranked_lists_from_matrix(
    m: DissimilarityMatrix, name: str = "run", method_label: str = ""
) -> Run:
    """One ranked list per id: ascending dissimilarity, ties by id, self excluded."""
    n = len(m.ids)
    id_rank = np.empty(n, dtype=np.int64)
    id_rank[np.argsort(np.array(m.ids, dtype=object), kind="stable")] = np.arange(n)
    lists = {}
    for i, query in enumerate(m.ids):
        order = np.lexsort((id_rank, m.values[i]))
        lists[query] = RankedList(query, tuple(m.ids[j] for j in order if j != i))
    return Run(name, lists, method_label)


def matrix_scores(m: DissimilarityMatrix) -> dict[str, dict[str, float]]:
    return {
        q: {obj: float(m.values[i, j]) for j, obj in enumerate(m.ids) if j != i}
        for i, q in enumerate(m.ids)
    }


def matrix_from_run(run: Run) -> DissimilarityMatrix:
    """Matrix whose entries are rank positions; needs complete rankings."""
    ids = tuple(sorted(run.lists))
    index = {obj: k for k, obj in enumerate(ids)}
    values = np.zeros((len(ids), len(ids)))
    for q, lst in run.lists.items():
        if len(lst.ranking) != len(ids) - 1 or not set(lst.ranking) <= index.keys():
            raise InputError(
                f"query {q!r} does not rank every other query id; cannot form a square matrix"
            )
        i = index[q]
        for rank, obj in enumerate(lst.ranking, start=1):
            values[i, index[obj]] = rank
    return DissimilarityMatrix(ids, values)


def gain_vector(lst: RankedList, c: Classification, strict: bool = False) -> GainVector:
    """Binary relevance of each ranked object; R is the query's class size minus one."""
    if lst.query not in c.entries:
        raise InputError(f"query {lst.query!r} is not in the classification")
    label = c.entries[lst.query]
    gains = []
    for obj in lst.ranking:
        other = c.entries.get(obj)
        if other is None:
            if strict:
                raise InputError(
                    f"ranked object {obj!r} (query {lst.query!r}) is not in the classification"
                )
            warnings.warn(
                f"ranked object {obj!r} (query {lst.query!r}) is unclassified; treated as irrelevant",
                InputWarning,
                stacklevel=2,
            )
        gains.append(1 if other == label else 0)
    return GainVector(tuple(gains), len(c.classes[label]) - 1, lst.query)
