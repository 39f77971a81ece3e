import networkx as nx
import numpy as np
from scipy.spatial.distance import cdist

from vfpe_sim.radio import adjacency
from vfpe_sim.routing import Hello, LinkStateView, TopologyControl, routing_update


def _graph(points, radio_range=100.0):
    points = np.asarray(points, dtype=float)
    adj = adjacency(cdist(points, points), radio_range)
    graph = nx.Graph()
    graph.add_nodes_from(range(len(points)))
    graph.add_edges_from(zip(*np.nonzero(adj)))
    return graph


def _hello_round(view, graph, now):
    hellos = {n: view[n].make_hello(now) for n in graph.nodes}
    for n, hello in hellos.items():
        for m in graph.neighbors(n):
            view[m].on_hello(hello, now)


def _flood_tc(view, graph, now):
    for origin in graph.nodes:
        tc = view[origin].make_tc(now)
        frontier = [origin]
        while frontier:
            sender = frontier.pop()
            for m in graph.neighbors(sender):
                if view[m].on_tc(tc, now):
                    frontier.append(m)


def _converge(graph, now=0.0):
    view = LinkStateView.for_nodes(graph.nodes)
    _hello_round(view, graph, now)
    _hello_round(view, graph, now)
    _flood_tc(view, graph, now)
    return view


def _expected_next_hop(graph, src, dst):
    lengths = nx.single_source_shortest_path_length(graph, dst)
    return min(n for n in graph.neighbors(src) if lengths.get(n) == lengths[src] - 1)


def test_message_sizes():
    assert Hello(0, frozenset({1, 2, 3})).size_bytes == 28
    assert TopologyControl(0, 1, frozenset({1, 2})).size_bytes == 28
    assert Hello(0, frozenset()).size_bytes == 16


def test_line_topology_routes():
    graph = _graph([(0, 0), (80, 0), (160, 0), (240, 0)])
    tables = routing_update(_converge(graph), 0.0)
    assert tables[0] == {1: 1, 2: 1, 3: 1}
    assert tables[2] == {0: 1, 1: 1, 3: 3}


def test_equal_paths_use_lowest_next_hop():
    graph = _graph([(0, 0), (80, 0), (0, 80), (80, 80)])
    tables = routing_update(_converge(graph), 0.0)
    assert tables[0][3] == 1
    assert tables[3][0] == 1


def test_routes_match_shortest_paths_on_random_graphs():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        points = rng.uniform(0, 300, size=(12, 2))
        graph = _graph(points)
        view = _converge(graph)
        for src in graph.nodes:
            table = view[src].route_table(0.0)
            reachable = nx.single_source_shortest_path_length(graph, src)
            assert set(table) == set(reachable) - {src}
            for dst in table:
                assert table[dst] == _expected_next_hop(graph, src, dst)


def test_cut_link_survives_until_hold_time_expires():
    graph = _graph([(0, 0), (80, 0), (160, 0), (240, 0)])
    view = _converge(graph)
    assert view[2].route_table(0.0)[3] == 3

    cut = graph.copy()
    cut.remove_edge(2, 3)
    _hello_round(view, cut, 4.0)
    assert view[2].route_table(5.0)[3] == 3
    assert 3 not in view[2].route_table(6.5)


def test_tc_rebroadcast_once():
    view = LinkStateView.for_nodes([0, 1])
    tc = TopologyControl(0, 1, frozenset({1}))
    assert view[1].on_tc(tc, 0.0)
    assert not view[1].on_tc(tc, 0.5)
    assert not view[0].on_tc(tc, 0.5)
    assert view[1].on_tc(TopologyControl(0, 2, frozenset()), 1.0)


def test_symmetric_link_needs_both_directions():
    view = LinkStateView.for_nodes([0, 1])
    view[0].on_hello(Hello(1, frozenset()), 0.0)
    assert view[0].symmetric_neighbours(0.0) == set()
    view[0].on_hello(Hello(1, frozenset({0})), 1.0)
    assert view[0].symmetric_neighbours(1.0) == {1}
    assert view[0].symmetric_neighbours(7.5) == set()
