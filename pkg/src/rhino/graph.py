"""Occupancy-transition graph and shortest skill-chain search.

Nodes are the concrete hand occupancies reachable from the scenario's
initial occupancy by applying manipulation skills whose start condition
matches.  Edges carry the skill that causes the transition (motion and
idle skills are recorded as identity edges for completeness but are never
used for chaining).

find_path returns the shortest manipulation-skill chain from a concrete
occupancy to any occupancy matching a goal pattern; among equal-length
chains the lexicographically smallest skill-id sequence wins, which makes
planning fully deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .occupancy import HandOccupancy, OccupancyPattern, apply_transition, matches
from .scenario import MANIPULATION, Scenario


@dataclass(frozen=True)
class Edge:
    source: HandOccupancy
    skill: int
    target: HandOccupancy


@dataclass(frozen=True)
class SkillPath:
    """A chain of skill ids and the occupancy it ends in."""

    skills: tuple[int, ...]
    terminal: HandOccupancy


class OccupancyGraph:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.nodes: list[HandOccupancy] = []
        self.edges: list[Edge] = []
        self._adjacency: dict[HandOccupancy, list[tuple[int, HandOccupancy]]] = {}
        self._build()

    def _build(self):
        sc = self.scenario
        manip = sorted(
            (s for s in sc.skills if s.kind == MANIPULATION), key=lambda s: s.id
        )
        others = sorted(
            (s for s in sc.skills if s.kind != MANIPULATION), key=lambda s: s.id
        )
        seen = {sc.initial_occupancy}
        queue = deque([sc.initial_occupancy])
        order: list[HandOccupancy] = []
        while queue:
            occ = queue.popleft()
            order.append(occ)
            out: list[tuple[int, HandOccupancy]] = []
            for s in manip:
                if not matches(occ, s.start):
                    continue
                nxt = apply_transition(occ, s.end)
                out.append((s.id, nxt))
                self.edges.append(Edge(source=occ, skill=s.id, target=nxt))
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
            self._adjacency[occ] = out
        self.nodes = order
        # identity edges for motion/idle skills whose start matches, for
        # inspection and DOT rendering completeness (not used in search)
        for occ in order:
            for s in others:
                if matches(occ, s.start):
                    self.edges.append(Edge(source=occ, skill=s.id, target=occ))

    def find_path(
        self, start: HandOccupancy, goal: OccupancyPattern
    ) -> SkillPath | None:
        """Shortest manipulation chain from start to an occupancy matching
        goal; ties broken by lexicographically smallest skill-id sequence.
        Returns None when no reachable occupancy matches.
        """
        if start not in self._adjacency:
            return None
        if matches(start, goal):
            return SkillPath(skills=(), terminal=start)
        # BFS with per-node expansion in ascending skill-id order; the first
        # time a node is reached, its path is both shortest and lex-minimal.
        best: dict[HandOccupancy, tuple[int, ...]] = {start: ()}
        queue = deque([start])
        while queue:
            occ = queue.popleft()
            path = best[occ]
            for skill_id, nxt in self._adjacency[occ]:
                if nxt in best:
                    continue
                best[nxt] = path + (skill_id,)
                if matches(nxt, goal):
                    return SkillPath(skills=best[nxt], terminal=nxt)
                queue.append(nxt)
        return None

    def to_dot(self) -> str:
        """Graphviz rendering: occupancy nodes, manipulation edges labeled
        by skill name."""
        sc = self.scenario
        names = sc.object_names()
        skill_names = {s.id: s.name for s in sc.skills}
        manip_ids = {s.id for s in sc.skills if s.kind == MANIPULATION}

        def node_id(occ: HandOccupancy) -> str:
            return occ.format(names).replace("[", "n_").replace("]", "").replace(",", "__")

        lines = [f'digraph "{sc.name}" {{', "  rankdir=LR;"]
        for occ in self.nodes:
            label = occ.format(names)
            shape = "doublecircle" if occ == sc.initial_occupancy else "ellipse"
            lines.append(f'  {node_id(occ)} [label="{label}", shape={shape}];')
        for e in self.edges:
            if e.skill not in manip_ids:
                continue
            lines.append(
                f'  {node_id(e.source)} -> {node_id(e.target)} '
                f'[label="{skill_names[e.skill]}"];'
            )
        lines.append("}")
        return "\n".join(lines) + "\n"
