"""Abstract analysis results and their serializations."""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import Any, ClassVar

from .stack import Stack

JSON_SCHEMA_VERSION = 1


class _Structural:
    """Structural equality with a cached hash, for deep immutable trees."""

    def _values(self) -> tuple[Any, ...]:
        return tuple(getattr(self, f.name) for f in fields(self) if f.compare)  # type: ignore[arg-type]

    @cached_property
    def _hash(self) -> int:
        return hash((type(self).__name__, self._values()))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented
        assert isinstance(other, _Structural)
        return self._hash == other._hash and self._values() == other._values()


@dataclass(frozen=True, eq=False)
class Site(_Structural):
    """Label and stack identifying a labeled result; var is set for variable sites."""

    label: int
    stack: Stack
    var: str | None = None

    @cached_property
    def sort_key(self) -> tuple[Any, ...]:
        """Canonical ordering key."""
        return (self.label, self.var or "", self.stack.frames)

    def __str__(self) -> str:
        site = f"{self.var}@{self.label}" if self.var is not None else str(self.label)
        return f"⟨{site},{self.stack}⟩"


@dataclass(frozen=True, eq=False)
class AbsRes(_Structural):
    """Canonically ordered, duplicate-free set of atoms."""

    atoms: tuple[AbsAtom, ...]

    @classmethod
    def of(cls, atoms: Iterable[AbsAtom]) -> AbsRes:
        """Create a set from atoms in any order, dropping duplicates."""
        unique = dict.fromkeys(atoms)
        return cls(tuple(sorted(unique, key=lambda atom: atom.sort_key)))

    @classmethod
    def union(cls, results: Iterable[AbsRes]) -> AbsRes:
        """Union several sets."""
        return cls.of(atom for result in results for atom in result.atoms)

    @property
    def is_empty(self) -> bool:
        """Whether the set has no atoms."""
        return not self.atoms

    def __iter__(self) -> Iterator[AbsAtom]:
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def sort_key(self) -> tuple[Any, ...]:
        """Canonical ordering key."""
        return tuple(atom.sort_key for atom in self.atoms)

    @cached_property
    def has_stub(self) -> bool:
        """Whether a stub occurs anywhere inside."""
        return any(atom.has_stub for atom in self.atoms)

    def __str__(self) -> str:
        return render_inline(self)


EMPTY = AbsRes(())


@dataclass(frozen=True, eq=False)
class Guard(_Structural):
    """Path condition entry: result must equal value."""

    result: AbsRes
    value: bool

    @cached_property
    def sort_key(self) -> tuple[Any, ...]:
        """Canonical ordering key."""
        return (self.result.sort_key, self.value)


type PathCond = tuple[Guard, ...]


def extend_path(path: PathCond, guard: Guard) -> PathCond:
    """Conjoin a guard onto a path condition, keeping it duplicate-free."""
    return path if guard in path else (*path, guard)


class AbsAtom(_Structural):
    """Element of an abstract result set."""

    tag: ClassVar[int]

    @cached_property
    def sort_key(self) -> tuple[Any, ...]:
        """Canonical ordering key: constructor tag first."""
        return (self.tag, *self._key())

    def _key(self) -> tuple[Any, ...]:
        raise NotImplementedError

    @property
    def children(self) -> tuple[AbsRes, ...]:
        """Result sets directly inside this atom."""
        return ()

    def with_children(self, children: tuple[AbsRes, ...]) -> AbsAtom:  # noqa: ARG002
        """Return the atom rebuilt around new child sets."""
        return self

    @cached_property
    def has_stub(self) -> bool:
        """Whether a stub occurs anywhere inside."""
        return any(child.has_stub for child in self.children)


@dataclass(frozen=True, eq=False)
class FunAtom(AbsAtom):
    """Function with its (truncated) definition stack."""

    tag = 0
    label: int
    stack: Stack

    def _key(self) -> tuple[Any, ...]:
        return (self.label, self.stack.frames)


@dataclass(frozen=True, eq=False)
class IntAtom(AbsAtom):
    """Integer constant."""

    tag = 1
    value: int

    def _key(self) -> tuple[Any, ...]:
        return (self.value,)


@dataclass(frozen=True, eq=False)
class BoolAtom(AbsAtom):
    """Boolean constant."""

    tag = 2
    value: bool

    def _key(self) -> tuple[Any, ...]:
        return (self.value,)


@dataclass(frozen=True, eq=False)
class OpAtom(AbsAtom):
    """Binary operation over two result sets."""

    tag = 3
    left: AbsRes
    op: str
    right: AbsRes

    def _key(self) -> tuple[Any, ...]:
        return (self.left.sort_key, self.op, self.right.sort_key)

    @property
    def children(self) -> tuple[AbsRes, ...]:
        """Result sets directly inside this atom."""
        return (self.left, self.right)

    def with_children(self, children: tuple[AbsRes, ...]) -> AbsAtom:
        """Return the atom rebuilt around new child sets."""
        return OpAtom(children[0], self.op, children[1])


@dataclass(frozen=True, eq=False)
class RecordAtom(AbsAtom):
    """Record whose fields are result sets."""

    tag = 4
    fields: tuple[tuple[str, AbsRes], ...]

    def _key(self) -> tuple[Any, ...]:
        return tuple((name, value.sort_key) for name, value in self.fields)

    def get(self, name: str) -> AbsRes | None:
        """Return the field's result set, if present."""
        for field_name, value in self.fields:
            if field_name == name:
                return value
        return None

    @property
    def children(self) -> tuple[AbsRes, ...]:
        """Result sets directly inside this atom."""
        return tuple(value for _, value in self.fields)

    def with_children(self, children: tuple[AbsRes, ...]) -> AbsAtom:
        """Return the atom rebuilt around new child sets."""
        return RecordAtom(tuple(zip((name for name, _ in self.fields), children, strict=True)))


@dataclass(frozen=True, eq=False)
class ProjAtom(AbsAtom):
    """Projection of a field; site is the label of the projection in the program."""

    tag = 5
    record: AbsRes
    field: str
    site: int | None = field(default=None, compare=False)

    def _key(self) -> tuple[Any, ...]:
        return (self.record.sort_key, self.field)

    @property
    def children(self) -> tuple[AbsRes, ...]:
        """Result sets directly inside this atom."""
        return (self.record,)

    def with_children(self, children: tuple[AbsRes, ...]) -> AbsAtom:
        """Return the atom rebuilt around new child sets."""
        return ProjAtom(children[0], self.field, self.site)


@dataclass(frozen=True, eq=False)
class InspectAtom(AbsAtom):
    """Field presence test; site is the label of the inspection in the program."""

    tag = 6
    field: str
    record: AbsRes
    site: int | None = field(default=None, compare=False)

    def _key(self) -> tuple[Any, ...]:
        return (self.field, self.record.sort_key)

    @property
    def children(self) -> tuple[AbsRes, ...]:
        """Result sets directly inside this atom."""
        return (self.record,)

    def with_children(self, children: tuple[AbsRes, ...]) -> AbsAtom:
        """Return the atom rebuilt around new child sets."""
        return InspectAtom(self.field, children[0], self.site)


@dataclass(frozen=True, eq=False)
class Labeled(AbsAtom):
    """Result set carrying the parent label that its stubs refer back to."""

    tag = 7
    inner: AbsRes
    site: Site

    def _key(self) -> tuple[Any, ...]:
        return (self.site.sort_key, self.inner.sort_key)

    @property
    def children(self) -> tuple[AbsRes, ...]:
        """Result sets directly inside this atom."""
        return (self.inner,)

    def with_children(self, children: tuple[AbsRes, ...]) -> AbsAtom:
        """Return the atom rebuilt around new child sets."""
        return Labeled(children[0], self.site)


@dataclass(frozen=True, eq=False)
class Stub(AbsAtom):
    """Back-reference to the enclosing Labeled atom with the same site."""

    tag = 8
    site: Site

    def _key(self) -> tuple[Any, ...]:
        return (self.site.sort_key,)

    @cached_property
    def has_stub(self) -> bool:
        """Whether a stub occurs anywhere inside."""
        return True


@dataclass(frozen=True, eq=False)
class Guarded(AbsAtom):
    """Result set that only counts when the guard can hold."""

    tag = 9
    guard: Guard
    inner: AbsRes

    def _key(self) -> tuple[Any, ...]:
        return (self.guard.sort_key, self.inner.sort_key)

    @property
    def children(self) -> tuple[AbsRes, ...]:
        """Result sets directly inside this atom."""
        return (self.guard.result, self.inner)

    def with_children(self, children: tuple[AbsRes, ...]) -> AbsAtom:
        """Return the atom rebuilt around new child sets."""
        return Guarded(Guard(children[0], self.guard.value), children[1])


def single(atom: AbsAtom) -> AbsRes:
    """Return the one-atom set."""
    return AbsRes((atom,))


def iter_atoms(result: AbsRes) -> Iterator[AbsAtom]:
    """Yield every atom reachable from result once, in pre-order."""
    seen: set[int] = set()
    pending = list(reversed(result.atoms))
    while pending:
        atom = pending.pop()
        if id(atom) in seen:
            continue
        seen.add(id(atom))
        yield atom
        for child in reversed(atom.children):
            pending.extend(reversed(child.atoms))


def open_stubs(result: AbsRes, parents: frozenset[Site] = frozenset()) -> set[Site]:
    """Return the sites of stubs without a Labeled ancestor of the same site."""
    found: set[Site] = set()
    pending: list[tuple[AbsRes, frozenset[Site]]] = [(result, parents)]
    visited: set[tuple[int, frozenset[Site]]] = set()
    while pending:
        current, scope = pending.pop()
        if (id(current), scope) in visited or not current.has_stub:
            continue
        visited.add((id(current), scope))
        for atom in current.atoms:
            match atom:
                case Stub(site=site) if site not in scope:
                    found.add(site)
                case Labeled(inner=inner, site=site):
                    pending.append((inner, scope | {site}))
                case _:
                    pending.extend((child, scope) for child in atom.children)
    return found


def render_inline(result: AbsRes) -> str:
    """Render a result on one line."""
    return "{" + ", ".join(_inline_atom(atom) for atom in result.atoms) + "}"


def _inline_atom(atom: AbsAtom) -> str:  # noqa: PLR0911
    match atom:
        case FunAtom(label=label, stack=stack):
            return f"fun@{label}{stack}"
        case IntAtom(value=value):
            return str(value)
        case BoolAtom(value=value):
            return "true" if value else "false"
        case OpAtom(left=left, op=op, right=right):
            return f"({render_inline(left)} {op} {render_inline(right)})"
        case RecordAtom(fields=fields_):
            inner = "; ".join(f"{name} = {render_inline(value)}" for name, value in fields_)
            return f"rec{{{inner}}}"
        case ProjAtom(record=record, field=name):
            return f"{render_inline(record)}.{name}"
        case InspectAtom(field=name, record=record):
            return f"({name} in {render_inline(record)})"
        case Labeled(inner=inner, site=site):
            return f"{render_inline(inner)}^{site}"
        case Stub(site=site):
            return f"∘{site}"
        case Guarded(guard=guard, inner=inner):
            value = "true" if guard.value else "false"
            return f"({render_inline(guard.result)} = {value} ⊩ {render_inline(inner)})"
    return repr(atom)


def format_tree(result: AbsRes) -> str:
    """Render a result as an indented tree, one atom per line."""
    lines: list[str] = []
    _tree_lines(result, 0, lines)
    return "\n".join(lines) + "\n" if lines else "{}\n"


def _tree_lines(result: AbsRes, depth: int, lines: list[str]) -> None:
    for atom in result.atoms:
        _tree_atom(atom, depth, lines)


def _tree_atom(atom: AbsAtom, depth: int, lines: list[str]) -> None:
    pad = "  " * depth

    def block(title: str, inner: AbsRes) -> None:
        lines.append(f"{pad}  {title}:")
        _tree_lines(inner, depth + 2, lines)

    match atom:
        case FunAtom() | IntAtom() | BoolAtom():
            lines.append(pad + _inline_atom(atom))
        case OpAtom(left=left, op=op, right=right):
            lines.append(f"{pad}op {op}")
            block("left", left)
            block("right", right)
        case RecordAtom(fields=fields_):
            lines.append(f"{pad}record")
            for name, value in fields_:
                block(name, value)
        case ProjAtom(record=record, field=name):
            lines.append(f"{pad}project .{name}")
            _tree_lines(record, depth + 1, lines)
        case InspectAtom(field=name, record=record):
            lines.append(f"{pad}inspect {name}")
            _tree_lines(record, depth + 1, lines)
        case Labeled(inner=inner, site=site):
            lines.append(f"{pad}labeled {site}")
            _tree_lines(inner, depth + 1, lines)
        case Stub(site=site):
            lines.append(f"{pad}stub@{site}")
        case Guarded(guard=guard, inner=inner):
            lines.append(f"{pad}guarded = {'true' if guard.value else 'false'}")
            block("when", guard.result)
            block("then", inner)


def _site_json(site: Site) -> dict[str, Any]:
    return {"label": site.label, "var": site.var, "stack": list(site.stack.frames)}


def to_json(result: AbsRes) -> list[dict[str, Any]]:
    """Return the JSON-ready rendering of a result set."""
    return [_atom_json(atom) for atom in result.atoms]


def _atom_json(atom: AbsAtom) -> dict[str, Any]:  # noqa: PLR0911
    match atom:
        case FunAtom(label=label, stack=stack):
            return {"kind": "fun", "label": label, "stack": list(stack.frames)}
        case IntAtom(value=value):
            return {"kind": "int", "value": value}
        case BoolAtom(value=value):
            return {"kind": "bool", "value": value}
        case OpAtom(left=left, op=op, right=right):
            return {"kind": "op", "op": op, "left": to_json(left), "right": to_json(right)}
        case RecordAtom(fields=fields_):
            return {
                "kind": "record",
                "fields": {name: to_json(value) for name, value in fields_},
            }
        case ProjAtom(record=record, field=name):
            return {"kind": "project", "field": name, "record": to_json(record)}
        case InspectAtom(field=name, record=record):
            return {"kind": "inspect", "field": name, "record": to_json(record)}
        case Labeled(inner=inner, site=site):
            return {"kind": "labeled", "site": _site_json(site), "inner": to_json(inner)}
        case Stub(site=site):
            return {"kind": "stub", "site": _site_json(site)}
        case Guarded(guard=guard, inner=inner):
            return {
                "kind": "guarded",
                "guard": {"result": to_json(guard.result), "value": guard.value},
                "inner": to_json(inner),
            }
    msg = f"Cannot serialize {atom!r}"
    raise TypeError(msg)
