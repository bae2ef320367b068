"""Hand-occupancy graph: how the planner reaches a skill it cannot start yet.

Manipulation skills are edges between occupancy states.  When the leader
asks for a skill whose start condition does not hold, the planner walks
the graph breadth-first and runs the shortest chain of enabling skills.
"""

from rhino import OccupancyGraph, load_bundled

scenario = load_bundled("dining")
graph = OccupancyGraph(scenario)

print(f"{len(graph.nodes)} occupancy states, {len(graph.edges)} edges\n")

# start: right hand already holds the sponge.  Goal: "Cheers", which needs
# the can in the right hand.  The planner must put the sponge down first.
start = next(n for n in graph.nodes if n.right == scenario.skill_by_name(
    "Pick Sponge").end.right)
goal = scenario.skill_by_name("Cheers").start

path = graph.find_path(start, goal)
print(f"from occupancy {start.format(scenario.object_names())}")
print(f"to the start condition of Cheers:")
for sid in path.skills:
    skill = scenario.skill(sid)
    print(f"  -> {skill.name}")
print(f"terminal occupancy: {path.terminal.format(scenario.object_names())}\n")

# the same graph, as DOT (paste into graphviz to draw it)
dot = graph.to_dot()
print("\n".join(dot.splitlines()[:8]))
print(f"... {len(dot.splitlines()) - 8} more lines")
