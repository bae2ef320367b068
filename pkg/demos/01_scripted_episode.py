"""Intentions in, events out: run one scripted dining episode.

The leader points at the can for two seconds, then cancels mid-grasp.
Everything below is deterministic: same script + same seed = same events.
"""

from rhino import load_bundled, run_script

scenario = load_bundled("dining")

# a script is a list of intention windows, in ticks (30 ticks = 1 s)
script = [
    {"from_tick": 0, "to_tick": 60, "intention": "Pointing Can"},
    {"from_tick": 60, "to_tick": 90, "intention": "Cancel"},
]

result = run_script(scenario, script, seed=7, ticks=300, scenario_ref="dining")

print(f"ran {result.header.ticks} ticks, {len(result.events)} events\n")
for event in result.events:
    seconds = event.tick / scenario.params.tick_rate
    print(f"  t={event.tick:4d} ({seconds:5.2f}s)  {event.kind:20s} {event.payload()}")

# the grasp was interrupted and rolled back, so both hands end empty
occ = result.world.occupancy
print(f"\nfinal occupancy: left={occ.left} right={occ.right}")
names = {o.id: o.name for o in scenario.objects}
for oid, loc in sorted(result.world.object_loc.items()):
    print(f"  {names[oid]:8s} at {'/'.join(str(p) for p in loc)}")
