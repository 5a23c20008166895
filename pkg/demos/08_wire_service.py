"""Talk to the environment over its line-JSON wire protocol.

External trainers never import the simulator: they connect to a socket
(or pipe), send one JSON frame per line, and read one frame back. Sensor
grids travel as per-channel run-length codes over the cells of the sensing
disk. This script plays both sides in one process: a TCP server thread and
a plain-socket client.
"""

import json
import socket
import threading

from lcsim import EnvSession, decode_grid, serve_tcp

server = serve_tcp(EnvSession, host="127.0.0.1", port=0)
threading.Thread(target=server.serve_forever, daemon=True).start()
host, port = server.server_address[:2]
print(f"environment service on {host}:{port}")


with socket.create_connection((host, port)) as sk:
    rfile = sk.makefile("r", encoding="utf-8")

    def call(message: dict) -> dict:
        sk.sendall((json.dumps(message) + "\n").encode())
        return json.loads(rfile.readline())

    obs = call({"t": "reset", "seed": 5, "n_agents": 2,
                "width": 60, "height": 60})
    print(f"reset -> {obs['t']}, map starts at "
          f"c0={obs['info']['c0']} vertices")

    runs = obs["grids"][0]
    cells = sum(length for channel in runs for _, length in channel)
    grid = decode_grid(runs, grid_size=31)
    print(f"agent 0's grid arrived as {cells} run-length cells, "
          f"decoded shape {grid.shape}")

    for step in range(5):
        res = call({"t": "act", "actions": [
            {"vx": 2.0, "vy": 0.0, "comm": step == 4},
            {"vx": 0.0, "vy": 2.0},
        ]})
    print(f"after 5 steps: rewards {res['rewards']}, "
          f"group {res['group']:.1f}, comms {res['info']['comm_counts']}")

    err = call({"t": "act", "actions": [None]})
    print(f"malformed frame -> {err}")

    print(f"close -> {call({'t': 'close'})}")

server.shutdown()
server.server_close()
