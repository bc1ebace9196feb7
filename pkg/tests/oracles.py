"""Independent reference computations shared by the test modules."""

from collections import defaultdict, deque
from itertools import product


def live_edge_frontier_law(g, v, p, t):
    """Law of the round-t frontier from source v, computed on the live-edge
    representation of the cascade.

    Every directed edge is independently live with probability p, and a node
    is activated at round k iff its live-path distance from v is k.  All
    2^(2m) live-edge subsets are enumerated, so keep 2m small.
    """
    arcs = [(int(a), int(b)) for a, b in g.edges()]
    arcs += [(b, a) for a, b in arcs]
    law = defaultdict(lambda: p * 0)
    q = 1 - p
    for live in product((False, True), repeat=len(arcs)):
        adj = defaultdict(list)
        for (a, b), on in zip(arcs, live):
            if on:
                adj[a].append(b)
        dist = {v: 0}
        dq = deque([v])
        while dq:
            a = dq.popleft()
            for b in adj[a]:
                if b not in dist:
                    dist[b] = dist[a] + 1
                    dq.append(b)
        k = sum(live)
        law[frozenset(u for u, d in dist.items() if d == t)] += p**k * q ** (len(arcs) - k)
    return dict(law)


def equidistant_meeting_point(tree):
    """Closest node equidistant to all frontier nodes, by definition.

    Nodes are the materialized activation tree plus one virtual inactive
    child hanging off every materialized node (standing in for the
    never-activated subtrees).  Distances are computed by BFS over the
    undirected tree.  Returns (node, depth) for the unique closest
    equidistant node, or None if the frontier has at most one node.
    """
    parent = tree.parent.tolist()
    n = len(parent)
    adj = defaultdict(list)
    for v, par in enumerate(parent):
        if par >= 0:
            adj[v].append(par)
            adj[par].append(v)
    for v in range(n):  # virtual children get ids n..2n-1
        adj[v].append(n + v)
        adj[n + v].append(v)
    frontier = tree.frontier.tolist()
    if len(frontier) <= 1:
        return None
    dists = []
    for f in frontier:
        dist = {f: 0}
        dq = deque([f])
        while dq:
            a = dq.popleft()
            for b in adj[a]:
                if b not in dist:
                    dist[b] = dist[a] + 1
                    dq.append(b)
        dists.append(dist)
    equi = [v for v in range(2 * n) if len({d[v] for d in dists}) == 1]
    best = min(dists[0][v] for v in equi)
    closest = [v for v in equi if dists[0][v] == best]
    assert len(closest) == 1
    v = closest[0]
    depth = tree.depth.tolist()
    return v, depth[v]
