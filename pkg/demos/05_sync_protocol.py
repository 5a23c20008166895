"""Share one map between agents through the metered sync service.

Each agent keeps a local complex plus a pending queue of observations.
A sync request pushes everything pending and pulls the records the agent
has not seen; the server charges exactly one communication unit per
request, however much it carries — batching is the whole cost game.
Requests carry ids so a retried message is answered from cache instead of
being charged (or inserted) twice.
"""

from lcsim import SyncClient, SyncServer

server = SyncServer(n_agents=2, remaining_ids=range(6))
scout, mapper = SyncClient(0), SyncClient(1)

scout.record_observation([0, 1, 2], 0)
scout.record_observation([2, 3], 1)
print(f"scout has {len(scout.pending)} observations queued")

delta = scout.sync(server)
print(f"scout syncs: server now at version {delta.new_version}, "
      f"comm charge {server.comm_counts}")

delta = mapper.sync(server)
print(f"mapper syncs empty-handed, receives {len(delta.records)} records, "
      f"charges {server.comm_counts}")
print(f"mapper's local counts now {mapper.complex.counts()} "
      f"== server {server.complex.counts()}")

# a lost reply: the client resends the same request id
request = scout.make_request()
first = server.handle_sync(request)
again = server.handle_sync(request)
print(f"\nretry answered from cache: {again is first}, "
      f"still charged once more only: {server.comm_counts}")
scout.apply_delta(again, sent_observations=len(request.observations))

mapper.record_observation([4, 5], 0)
mapper.sync(server)
print(f"\nafter mapper reports beacons 4 and 5: "
      f"complete={server.completion_check()}")
print("every remaining beacon is now a vertex of the shared map.")
