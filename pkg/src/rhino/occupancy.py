"""Hand-occupancy states and the pattern algebra that drives skill chaining.

An occupancy records what each gripper holds (an object id or nothing).
Skills declare a start pattern (which occupancies they may start from) and
an end transition (how the occupancy changes on success).  Both are pairs
of per-hand atoms:

  pattern atom     "empty" | "any" | <object id>       (start conditions)
  transition atom  "-" (unchanged) | "empty" | <object id>   (end effects)

The textual forms used in scenario files spell object atoms by name.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

# Pattern atoms: object id (int), or one of the sentinels below.
EMPTY = "empty"
ANY = "any"
UNCHANGED = "-"

PatternAtom = Union[int, str]  # int object id, "empty", or "any"
TransitionAtom = Union[int, str]  # int object id, "empty", or "-"


@dataclass(frozen=True)
class HandOccupancy:
    """What each gripper currently holds: an object id, or None for empty."""

    left: int | None
    right: int | None

    def format(self, names: dict[int, str] | None = None) -> str:
        def one(v: int | None) -> str:
            if v is None:
                return "none"
            if names and v in names:
                return names[v]
            return str(v)

        return f"[{one(self.left)},{one(self.right)}]"


@dataclass(frozen=True)
class OccupancyPattern:
    """Per-hand start condition: 'empty', 'any', or a required object id."""

    left: PatternAtom
    right: PatternAtom


@dataclass(frozen=True)
class TransitionPattern:
    """Per-hand end effect: '-' keeps the hand, 'empty' clears it, an
    object id fills it."""

    left: TransitionAtom
    right: TransitionAtom


def atom_matches(held: int | None, atom: PatternAtom) -> bool:
    if atom == ANY:
        return True
    if atom == EMPTY:
        return held is None
    return held == atom


def matches(occ: HandOccupancy, pattern: OccupancyPattern) -> bool:
    """True when the occupancy satisfies the pattern hand-by-hand."""
    return atom_matches(occ.left, pattern.left) and atom_matches(occ.right, pattern.right)


def _apply_atom(held: int | None, atom: TransitionAtom) -> int | None:
    if atom == UNCHANGED:
        return held
    if atom == EMPTY:
        return None
    return int(atom)


def apply_transition(occ: HandOccupancy, transition: TransitionPattern) -> HandOccupancy:
    """Occupancy after a skill with this end transition succeeds."""
    return HandOccupancy(
        left=_apply_atom(occ.left, transition.left),
        right=_apply_atom(occ.right, transition.right),
    )


def parse_pattern_atom(text: str, object_ids: dict[str, int]) -> PatternAtom:
    if text in (EMPTY, ANY):
        return text
    if text in object_ids:
        return object_ids[text]
    raise ValueError(f"unknown pattern atom {text!r}")


def parse_transition_atom(text: str, object_ids: dict[str, int]) -> TransitionAtom:
    if text in (UNCHANGED, EMPTY):
        return text
    if text in object_ids:
        return object_ids[text]
    raise ValueError(f"unknown transition atom {text!r}")


def format_atom(atom: PatternAtom | TransitionAtom, names: dict[int, str]) -> str:
    if isinstance(atom, int):
        return names[atom]
    return atom
