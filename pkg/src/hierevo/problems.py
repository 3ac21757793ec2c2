"""Hierarchical Boolean-logic problems built from trees of two-input gates.

A problem takes 8 input bits, combines adjacent pairs with four first-level
gates, combines those results with two second-level gates, and reduces to a
single output bit with a root gate.  The six non-root gates are the problem's
sub-problems.

Input-pattern convention used everywhere in this package: pattern index
``k`` (0..255) encodes the inputs with bit i0 as the most significant bit,
so input ``j`` of pattern ``k`` is ``(k >> (7 - j)) & 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

N_INPUTS = 8
N_PATTERNS = 256

# Row k holds the 8 input bits of pattern k, i0 first.
INPUT_PATTERNS = np.array(
    [[(k >> (7 - j)) & 1 for j in range(N_INPUTS)] for k in range(N_PATTERNS)],
    dtype=np.uint8,
)


class Gate(enum.Enum):
    """Two-input Boolean gates.  EQU is logical equality (the negation of XOR)."""

    AND = "and"
    OR = "or"
    XOR = "xor"
    EQU = "equ"

    def apply(self, a, b):
        if self is Gate.AND:
            return a & b
        if self is Gate.OR:
            return a | b
        if self is Gate.XOR:
            return a ^ b
        return ~(a ^ b) if isinstance(a, np.ndarray) else 1 - (a ^ b)


@dataclass(frozen=True)
class SubProblem:
    """One non-root gate of a problem: its tree position and full truth vector."""

    index: int  # 0..3 first level, 4..5 second level
    label: str
    truth: np.ndarray  # bool, shape (256,)


@dataclass(frozen=True)
class LogicProblem:
    """A gate tree over 8 inputs: 4 first-level gates on adjacent input
    pairs, 2 second-level gates, and a root gate."""

    name: str
    level1: tuple[Gate, Gate, Gate, Gate]
    level2: tuple[Gate, Gate]
    root: Gate

    def gate_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Truth values of every gate for all 256 patterns.

        Returns (level1, level2, root) arrays of shape (256, 4), (256, 2)
        and (256,), all boolean.
        """
        bits = INPUT_PATTERNS.astype(bool)
        l1 = np.stack(
            [g.apply(bits[:, 2 * i], bits[:, 2 * i + 1]) for i, g in enumerate(self.level1)],
            axis=1,
        )
        l2 = np.stack(
            [g.apply(l1[:, 2 * i], l1[:, 2 * i + 1]) for i, g in enumerate(self.level2)],
            axis=1,
        )
        root = self.root.apply(l2[:, 0], l2[:, 1])
        return l1, l2, root

    @property
    def truth_vector(self) -> np.ndarray:
        """Boolean output of the full tree for all 256 patterns."""
        return _truth_vector(self)

    def truth(self, pattern) -> bool:
        """Evaluate the tree bottom-up on one 8-entry 0/1 pattern."""
        bits = [int(b) for b in pattern]
        if len(bits) != N_INPUTS or any(b not in (0, 1) for b in bits):
            raise ValueError("pattern must have exactly 8 entries in {0, 1}")
        l1 = [g.apply(bits[2 * i], bits[2 * i + 1]) for i, g in enumerate(self.level1)]
        l2 = [g.apply(l1[2 * i], l1[2 * i + 1]) for i, g in enumerate(self.level2)]
        return bool(self.root.apply(l2[0], l2[1]))

    def subproblems(self, include_root: bool = False) -> list[SubProblem]:
        """The six non-root gates in tree order, each with its truth vector.

        With ``include_root`` the root gate is appended as a seventh entry.
        """
        l1, l2, root = self.gate_tables()
        subs = []
        for i, g in enumerate(self.level1):
            subs.append(SubProblem(i, f"{g.name}(i{2 * i},i{2 * i + 1})", l1[:, i]))
        for i, g in enumerate(self.level2):
            subs.append(SubProblem(4 + i, f"{g.name}(g{2 * i},g{2 * i + 1})", l2[:, i]))
        if include_root:
            subs.append(SubProblem(6, f"{self.root.name}(h0,h1)", root))
        return subs


@lru_cache(maxsize=None)
def _truth_vector(problem: LogicProblem) -> np.ndarray:
    _, _, root = problem.gate_tables()
    root.setflags(write=False)
    return root


BUILTIN_PROBLEMS = {
    "and-xor-and": LogicProblem(
        "and-xor-and", (Gate.AND,) * 4, (Gate.XOR, Gate.XOR), Gate.AND
    ),
    "and-equ-and": LogicProblem(
        "and-equ-and", (Gate.AND,) * 4, (Gate.EQU, Gate.EQU), Gate.AND
    ),
    "or-xor-and": LogicProblem(
        "or-xor-and", (Gate.OR,) * 4, (Gate.XOR, Gate.XOR), Gate.AND
    ),
    "or-xor-equ-equ": LogicProblem(
        "or-xor-equ-equ", (Gate.OR,) * 4, (Gate.XOR, Gate.EQU), Gate.EQU
    ),
}


def get_problem(name: str) -> LogicProblem:
    try:
        return BUILTIN_PROBLEMS[name.lower()]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_PROBLEMS))
        raise KeyError(f"unknown problem {name!r}; known problems: {known}") from None


def default_layer_sizes(problem_name: str) -> tuple[int, ...]:
    """Default network layer sizes for a problem.

    The or-xor-equ-equ problem gets an extra hidden layer; the others use
    the standard 8/4/4/2/1 stack.
    """
    if problem_name.lower() == "or-xor-equ-equ":
        return (8, 4, 4, 4, 2, 1)
    return (8, 4, 4, 2, 1)
