"""The operator wire protocol, driven without a socket.

`rhino serve` exposes sessions over HTTP + WebSocket; every frame is a
small JSON object.  LiveSession is the piece behind the socket, so the
whole exchange can be shown synchronously: send the frames a console
would send, read the frames it would receive.
"""

import json

from rhino import load_bundled
from rhino.server import LiveSession, _Client

scenario = load_bundled("dining")
live = LiveSession("demo", scenario, "dining", seed=17, mode="direct",
                   model=None, model_ref=None, decimation=3)

# register one fake client; frames land in its queue instead of a socket
client = _Client()
live.clients["console"] = client
print("hello:", json.dumps(live.hello_frame())[:96], "...\n")

# what a console sends while the operator presses and holds "Pointing Can"
for frame in [
    {"t": "intention", "id": 2, "held": True},
    {"t": "step", "n": 20},
    {"t": "intention", "id": 2, "held": False},
    {"t": "step", "n": 40},
]:
    error = live.handle(frame)
    assert error is None, error

print("frames a connected console receives:")
while not client.queue.empty():
    frame = client.queue.get_nowait()
    if frame["t"] == "event":
        print(f"  event    t={frame['tick']:3d} {frame['kind']:18s} "
              + json.dumps({k: v for k, v in frame.items()
                            if k not in ('t', 'tick', 'kind')}))
    else:
        print(f"  snapshot t={frame['tick']:3d} phase={frame['phase']} "
              f"skill={frame['skill']} safe={frame['safety']['safe']}")

# the session trace is the same artifact a headless run would produce
print("\ntrace header:", live.trace_text().splitlines()[0][:96], "...")
