"""Interned call stacks of application labels."""

from __future__ import annotations

import sys
from collections.abc import Iterable, Iterator
from contextlib import contextmanager

from .const import RECURSION_LIMIT


class Stack:
    """
    Immutable call stack, head first.

    Stacks are created through a StackArena, which hash-conses them: within one
    arena two stacks with the same frames are the same object.
    """

    __slots__ = ("_arena", "_frames", "_hash", "head", "tail")

    def __init__(self, arena: StackArena, head: int | None, tail: Stack | None) -> None:
        """Create a stack node; use StackArena.push instead."""
        self._arena = arena
        self.head = head
        self.tail = tail
        self._frames: tuple[int, ...] = (
            () if head is None or tail is None else (head, *tail._frames)  # noqa: SLF001
        )
        self._hash = hash(self._frames)

    @property
    def arena(self) -> StackArena:
        """Arena the stack was interned in."""
        return self._arena

    @property
    def frames(self) -> tuple[int, ...]:
        """Frames as a tuple, most recent call first."""
        return self._frames

    @property
    def is_empty(self) -> bool:
        """Whether the stack has no frames."""
        return self.head is None

    def __len__(self) -> int:
        return len(self._frames)

    def __iter__(self) -> Iterator[int]:
        return iter(self._frames)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Stack):
            return NotImplemented
        if other._arena is self._arena:  # noqa: SLF001
            return False
        return self._frames == other._frames  # noqa: SLF001

    def __lt__(self, other: Stack) -> bool:
        return self._frames < other._frames  # noqa: SLF001

    def __str__(self) -> str:
        return "[" + ", ".join(str(label) for label in self._frames) + "]"

    def __repr__(self) -> str:
        return f"Stack({self})"


class StackArena:
    """Hash-consing table for the stacks of one evaluation or analysis session."""

    def __init__(self) -> None:
        """Create an arena holding only the empty stack."""
        self._table: dict[tuple[int, int], Stack] = {}
        self.empty = Stack(self, None, None)

    def push(self, label: int, stack: Stack) -> Stack:
        """Return the interned stack with label on top of stack."""
        assert stack.arena is self, "Stacks from different arenas cannot be combined"
        key = (label, id(stack))
        if (found := self._table.get(key)) is None:
            found = self._table[key] = Stack(self, label, stack)
        return found

    def from_frames(self, frames: Iterable[int]) -> Stack:
        """Return the interned stack with the given frames, most recent first."""
        stack = self.empty
        for label in reversed(tuple(frames)):
            stack = self.push(label, stack)
        return stack

    def adopt(self, stack: Stack) -> Stack:
        """Return the stack of this arena equal to a stack from any arena."""
        return stack if stack.arena is self else self.from_frames(stack.frames)

    def __len__(self) -> int:
        return len(self._table) + 1


@contextmanager
def recursion_headroom(limit: int = RECURSION_LIMIT) -> Iterator[None]:
    """Temporarily raise the interpreter recursion limit for deep derivations."""
    previous = sys.getrecursionlimit()
    sys.setrecursionlimit(max(previous, limit))
    try:
        yield
    finally:
        sys.setrecursionlimit(previous)
