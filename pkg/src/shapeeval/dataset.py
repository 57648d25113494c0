"""Ground-truth classifications: loading, validation, summary statistics.

Two on-disk formats are understood.

``simple``::

    # comment
    m1 chair
    m2 chair
    m3 table

One ``object_id class_label`` record per line, ``#`` starts a comment,
blank lines are ignored, UTF-8 with LF or CRLF endings.

``cla`` (Princeton Shape Benchmark style)::

    PSB 1
    <num_classes> <num_models>

    <class_name> <parent_name> <member_count>
    <object_id>
    ...

Hierarchy is flattened: parent links are ignored and classes declared with
zero members (pure interior nodes) are dropped.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from shapeeval.errors import InputError

FORMATS = ("simple", "cla")

_TOKEN = re.compile(r"^\S+$")


def _check_token(value: str, what: str, path=None, line=None) -> str:
    if not value or not _TOKEN.match(value):
        raise InputError(f"invalid {what} {value!r}", path, line)
    return value


@dataclass(frozen=True)
class Classification:
    """Object-to-class assignment for one benchmark.

    ``classes`` preserves the order in which classes (and their members) were
    first seen. Equality ignores where the data came from.
    """

    entries: dict[str, str]
    classes: dict[str, tuple[str, ...]]
    source_path: str = field(default="", compare=False)
    format_tag: str = field(default="simple", compare=False)

    @classmethod
    def from_classes(
        cls,
        classes: Mapping[str, Iterable[str]],
        source_path: str = "",
        format_tag: str = "simple",
    ) -> "Classification":
        entries: dict[str, str] = {}
        built: dict[str, tuple[str, ...]] = {}
        for label, members in classes.items():
            _check_token(label, "class label")
            members = tuple(members)
            for obj in members:
                _check_token(obj, "object id")
                if obj in entries:
                    raise InputError(
                        f"duplicate object id {obj!r} in classes "
                        f"{entries[obj]!r} and {label!r}"
                    )
                entries[obj] = label
            built[label] = members
        return cls(entries, built, source_path, format_tag)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, obj: object) -> bool:
        return obj in self.entries

    @property
    def object_ids(self) -> list[str]:
        """All object ids, class by class in file order."""
        return [obj for members in self.classes.values() for obj in members]

    def class_of(self, obj: str) -> str:
        return self.entries[obj]

    def class_size(self, label: str) -> int:
        return len(self.classes[label])


@dataclass(frozen=True)
class ClassStats:
    class_count: int
    object_count: int
    min_class_size: int | None
    max_class_size: int | None
    size_histogram: dict[int, int]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "warning" or "error"
    message: str
    subject: str = ""

    def __str__(self) -> str:
        return f"{self.severity}: {self.message}"


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _detect_format(text: str) -> str:
    for line in text.splitlines():
        stripped = _strip_comment(line)
        if stripped:
            return "cla" if stripped.split()[0] == "PSB" else "simple"
    return "simple"


def parse_classification(
    text: str, format: str = "auto", source_path: str = ""
) -> Classification:
    """Parse classification text; see the module docstring for the grammar."""
    if format == "auto":
        format = _detect_format(text)
    if format == "simple":
        return _parse_simple(text, source_path)
    if format == "cla":
        return _parse_cla(text, source_path)
    raise ValueError(f"unknown classification format {format!r}")


def load_classification(path, format: str = "auto") -> Classification:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read classification: {exc.strerror}", str(path)) from exc
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise InputError("classification is not valid UTF-8", str(path)) from exc
    return parse_classification(text, format, str(path))


def _parse_simple(text: str, source_path: str) -> Classification:
    path = source_path or None
    entries: dict[str, str] = {}
    classes: dict[str, list[str]] = {}
    first_seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        content = _strip_comment(line)
        if not content:
            continue
        parts = content.split()
        if len(parts) != 2:
            raise InputError(
                f"expected 'object_id class_label', got {len(parts)} fields", path, lineno
            )
        obj, label = parts
        if obj in entries:
            raise InputError(
                f"duplicate object id {obj!r} (first assigned to {entries[obj]!r} "
                f"on line {first_seen[obj]}, now {label!r})",
                path,
                lineno,
            )
        entries[obj] = label
        first_seen[obj] = lineno
        classes.setdefault(label, []).append(obj)
    if not entries:
        raise InputError("classification file is empty", path)
    return Classification(
        entries, {k: tuple(v) for k, v in classes.items()}, source_path, "simple"
    )


def _parse_cla(text: str, source_path: str) -> Classification:
    path = source_path or None
    lines = [
        (n, line.split())
        for n, line in enumerate(text.splitlines(), start=1)
        if line.strip()
    ]
    if not lines:
        raise InputError("classification file is empty", path)

    lineno, head = lines[0]
    if len(head) != 2 or head[0] != "PSB":
        raise InputError("cla file must start with 'PSB <version>'", path, lineno)
    if len(lines) < 2:
        raise InputError("missing '<num_classes> <num_models>' line", path, lineno + 1)
    lineno, counts = lines[1]
    try:
        declared_classes, declared_models = (int(x) for x in counts)
    except ValueError:
        raise InputError(
            "expected '<num_classes> <num_models>'", path, lineno
        ) from None

    entries: dict[str, str] = {}
    classes: dict[str, tuple[str, ...]] = {}
    seen_labels: set[str] = set()
    pos = 2
    n_blocks = 0
    while pos < len(lines):
        lineno, parts = lines[pos]
        if len(parts) != 3:
            raise InputError(
                "expected class header '<name> <parent> <count>'"
                + (
                    f"; class {label!r} may have more members than declared"
                    if n_blocks
                    else ""
                ),
                path,
                lineno,
            )
        label, _parent, count_text = parts
        try:
            count = int(count_text)
        except ValueError:
            raise InputError(f"non-integer member count {count_text!r}", path, lineno) from None
        if count < 0:
            raise InputError(f"negative member count {count}", path, lineno)
        if label in seen_labels:
            raise InputError(f"duplicate class {label!r}", path, lineno)
        seen_labels.add(label)
        n_blocks += 1
        pos += 1
        members = []
        for _ in range(count):
            if pos >= len(lines) or len(lines[pos][1]) != 1:
                where = lines[pos][0] if pos < len(lines) else None
                raise InputError(
                    f"class {label!r} declares {count} members but only "
                    f"{len(members)} follow",
                    path,
                    where,
                )
            member_line, (obj,) = lines[pos]
            if obj in entries:
                raise InputError(
                    f"duplicate object id {obj!r} (already in class {entries[obj]!r})",
                    path,
                    member_line,
                )
            entries[obj] = label
            members.append(obj)
            pos += 1
        if members:
            classes[label] = tuple(members)

    if n_blocks != declared_classes:
        raise InputError(
            f"header declares {declared_classes} classes but {n_blocks} are listed", path
        )
    if len(entries) != declared_models:
        raise InputError(
            f"header declares {declared_models} models but {len(entries)} are listed", path
        )
    if not entries:
        raise InputError("classification lists no objects", path)
    return Classification(entries, classes, source_path, "cla")


def serialize_classification(c: Classification, format: str = "simple") -> str:
    if format == "simple":
        return "".join(
            f"{obj} {label}\n" for label, members in c.classes.items() for obj in members
        )
    if format == "cla":
        out = ["PSB 1\n", f"{len(c.classes)} {len(c.entries)}\n"]
        for label, members in c.classes.items():
            out.append(f"\n{label} 0 {len(members)}\n")
            out.extend(f"{obj}\n" for obj in members)
        return "".join(out)
    raise ValueError(f"unknown classification format {format!r}")


def write_classification(c: Classification, path, format: str = "simple") -> None:
    Path(path).write_text(serialize_classification(c, format), encoding="utf-8", newline="\n")


def validate_classification(c: Classification) -> list[Diagnostic]:
    """Check invariants; returns an empty list for a well-formed classification."""
    out: list[Diagnostic] = []
    member_of: dict[str, str] = {}
    for label, members in c.classes.items():
        if not members:
            out.append(Diagnostic("error", f"class {label!r} is empty", label))
        elif len(members) == 1:
            out.append(
                Diagnostic(
                    "warning",
                    f"class {label!r} has a single member; its query has no relevant objects",
                    label,
                )
            )
        for obj in members:
            if obj in member_of:
                out.append(
                    Diagnostic(
                        "error",
                        f"object {obj!r} listed in classes {member_of[obj]!r} and {label!r}",
                        obj,
                    )
                )
                continue
            member_of[obj] = label
            assigned = c.entries.get(obj)
            if assigned is None:
                out.append(
                    Diagnostic("error", f"object {obj!r} in class {label!r} has no entry", obj)
                )
            elif assigned != label:
                out.append(
                    Diagnostic(
                        "error",
                        f"object {obj!r} listed under {label!r} but assigned to {assigned!r}",
                        obj,
                    )
                )
    for obj, label in c.entries.items():
        if obj not in member_of:
            out.append(
                Diagnostic("error", f"object {obj!r} is assigned no class", obj)
            )
    return out


def class_stats(c: Classification) -> ClassStats:
    sizes = [len(members) for members in c.classes.values()]
    histogram = dict(sorted(Counter(sizes).items()))
    return ClassStats(
        class_count=len(sizes),
        object_count=sum(sizes),
        min_class_size=min(sizes) if sizes else None,
        max_class_size=max(sizes) if sizes else None,
        size_histogram=histogram,
    )
