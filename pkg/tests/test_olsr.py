import itertools
import random

import networkx as nx
import pytest

from qkdsim.messages import KeyStateAd, LinkCode, TcMessage
from qkdsim.protocol import Node, select_mprs
from qkdsim.routing import min_hop_paths
from qkdsim.scenario import Scenario
from qkdsim.simulation import Simulation
from qkdsim.topology import Link, Topology, bundled_data_path, load_topology


def build_sim(topology, protocol="olsr", duration=30.0, fill=50e6, seed=1,
              level=0.0):
    scenario = Scenario(protocol=protocol, level=level, duration_s=duration,
                        seed=seed, initial_fill_bits=fill)
    return Simulation(scenario, topology)


def line_topology(n=3):
    return Topology(list(range(n)),
                    [Link(i, i + 1, 10.0, 4e6) for i in range(n - 1)])


def brute_force_min_cover(coverage: dict[int, set[int]], candidates: set[int]):
    """Smallest neighbor subset covering all two-hop targets."""
    targets = set(coverage)
    for size in range(len(candidates) + 1):
        for combo in itertools.combinations(sorted(candidates), size):
            chosen = set(combo)
            if all(coverage[t] & chosen for t in targets):
                return chosen
    return None


class TestMprSelection:
    def test_star_sole_cover(self):
        mprs = select_mprs(
            sym_neighbors={1},
            two_hop_pairs={(1, 10): 99.0, (1, 11): 99.0},
            adv_degree={1: 3},
            self_id=0,
            now=0.0,
        )
        assert mprs == {1}

    def test_no_two_hop_no_mprs(self):
        assert select_mprs({1, 2}, {}, {}, 0, 0.0) == frozenset()

    def test_one_hop_neighbors_not_counted_as_targets(self):
        mprs = select_mprs({1, 2}, {(1, 2): 99.0, (2, 1): 99.0}, {}, 0, 0.0)
        assert mprs == frozenset()

    def test_greedy_tie_prefers_higher_degree_then_lower_id(self):
        two_hop = {(1, 10): 99.0, (1, 11): 99.0, (2, 10): 99.0, (2, 11): 99.0}
        assert select_mprs({1, 2}, dict(two_hop), {1: 2, 2: 5}, 0, 0.0) == {2}
        assert select_mprs({1, 2}, dict(two_hop), {1: 3, 2: 3}, 0, 0.0) == {1}

    def test_expired_pairs_ignored(self):
        mprs = select_mprs({1}, {(1, 10): 1.0}, {1: 2}, 0, now=2.0)
        assert mprs == frozenset()

    def test_greedy_matches_brute_force_minimum_on_secoqc(self):
        topo = load_topology(bundled_data_path("secoqc.topo"))
        g = nx.Graph((l.u, l.v) for l in topo.links)
        for me in topo.nodes:
            nbrs = set(g[me])
            coverage = {}
            for nbr in nbrs:
                for two in g[nbr]:
                    if two != me and two not in nbrs:
                        coverage.setdefault(two, set()).add(nbr)
            two_hop = {(nbr, t): 99.0 for t, cov in coverage.items()
                       for nbr in cov}
            degrees = {n: g.degree(n) for n in nbrs}
            mprs = select_mprs(nbrs, two_hop, degrees, me, 0.0)
            assert all(coverage[t] & mprs for t in coverage)
            minimum = brute_force_min_cover(coverage, nbrs)
            assert len(mprs) == len(minimum)

    def test_coverage_on_random_graphs(self):
        rng = random.Random(3)
        for _ in range(40):
            n = rng.randint(4, 24)
            g = nx.gnp_random_graph(n, min(1.0, 2.5 / n) + 0.15, seed=rng.randint(0, 9999))
            for me in g.nodes:
                nbrs = set(g[me])
                coverage = {}
                for nbr in nbrs:
                    for two in g[nbr]:
                        if two != me and two not in nbrs:
                            coverage.setdefault(two, set()).add(nbr)
                two_hop = {(nbr, t): 99.0 for t, cov in coverage.items()
                           for nbr in cov}
                mprs = select_mprs(nbrs, two_hop,
                                   {x: g.degree(x) for x in nbrs}, me, 0.0)
                assert all(coverage[t] & mprs for t in coverage)


class TestNeighborSensing:
    def test_two_way_handshake(self):
        sim = build_sim(line_topology(2), duration=6.0)
        sim.run()
        for me, other in ((0, 1), (1, 0)):
            entry = sim.nodes[me].neighbors[other]
            assert entry.status == LinkCode.SYM

    def test_first_hello_heard_then_symmetric(self):
        sim = build_sim(line_topology(2), duration=1.0)
        node0, node1 = sim.nodes[0], sim.nodes[1]
        ls = sim.link_state(0, 1)
        # node 0 has not heard anyone yet: empty neighbor list
        node1.process_hello(node0.build_hello(ls, 0.0), ls, 0.0)
        assert node1.neighbors[0].status == LinkCode.HEARD
        # node 0 now lists node 1, confirming two-way reachability
        node0.process_hello(node1.build_hello(ls, 0.1), ls, 0.1)
        node1.process_hello(node0.build_hello(ls, 0.2), ls, 0.2)
        assert node1.neighbors[0].status == LinkCode.SYM

    def test_two_hop_table_populated(self):
        sim = build_sim(line_topology(3), duration=10.0)
        sim.run()
        assert any(k == (1, 2) for k in sim.nodes[0].two_hop)

    def test_hello_suppressed_when_pool_unavailable(self):
        # below MIN and almost no generation: baseline OLSR cannot pay
        topo = Topology([0, 1], [Link(0, 1, 10.0, 1e3)])
        scenario = Scenario(protocol="olsr", level=0.0, duration_s=10.0,
                            initial_fill_bits=1e6)
        sim = Simulation(scenario, topo)
        sim.run()
        assert 1 not in sim.nodes[0].neighbors

    def test_baseline_sends_hello_in_warning_but_keyaware_does_not(self):
        results = {}
        for protocol in ("olsr", "qolsr"):
            topo = Topology([0, 1], [Link(0, 1, 10.0, 1e3)])
            scenario = Scenario(protocol=protocol, level=0.0, duration_s=10.0,
                                initial_fill_bits=5e6)  # Warning state
            sim = Simulation(scenario, topo)
            sim.run()
            results[protocol] = 1 in sim.nodes[0].neighbors
        assert results["olsr"] is True
        assert results["qolsr"] is False

    def test_neighbor_expiry_purges_and_marks_dirty(self):
        sim = build_sim(line_topology(2), duration=6.0)
        sim.run()
        node = sim.nodes[0]
        assert 1 in node.neighbors
        expiry = node.neighbors[1].expiry
        assert node.purge_expired(expiry + 0.001) is True
        assert 1 not in node.neighbors


class TestTcRules:
    def make_node_pair(self):
        sim = build_sim(line_topology(3), duration=6.0)
        sim.run()
        return sim, sim.nodes[1]

    def tc_from(self, sim, originator, ansn, selectors):
        ads = tuple(ls.build_ad(10.0) for ls in sim.incident_links(originator))
        return TcMessage(originator, ansn, selectors, ads)

    def test_forward_only_once_and_only_for_selectors(self):
        sim, node = self.make_node_pair()
        node.selectors[0] = 99.0  # node 0 selected us as MPR
        msg = self.tc_from(sim, 0, 7, (1,))
        assert node.process_tc(msg, sender=0, now=10.0) is True
        # duplicate via a different path is not re-forwarded
        assert node.process_tc(msg, sender=0, now=10.1) is False

    def test_tc_from_non_selector_processed_not_forwarded(self):
        sim, node = self.make_node_pair()
        node.selectors.clear()
        msg = self.tc_from(sim, 0, 3, (1,))
        assert node.process_tc(msg, sender=0, now=10.0) is False
        assert (0, 1) in node.topo

    def test_stale_ansn_ignored(self):
        sim, node = self.make_node_pair()
        node.process_tc(self.tc_from(sim, 0, 5, (1,)), sender=0, now=10.0)
        node.process_tc(self.tc_from(sim, 0, 4, (2,)), sender=0, now=10.1)
        assert (0, 2) not in node.topo

    def test_newer_ansn_purges_stale_records(self):
        sim, node = self.make_node_pair()
        node.process_tc(self.tc_from(sim, 0, 5, (1,)), sender=0, now=10.0)
        node.process_tc(self.tc_from(sim, 0, 6, (2,)), sender=0, now=10.1)
        assert (0, 1) not in node.topo
        assert (0, 2) in node.topo

    def test_no_tc_without_selectors(self):
        sim, node = self.make_node_pair()
        node.selectors.clear()
        assert node.build_tc(11.0) is None

    def test_ansn_bumps_only_on_selector_change(self):
        sim, node = self.make_node_pair()
        node.selectors = {0: 99.0}
        first = node.build_tc(11.0)
        second = node.build_tc(12.0)
        assert first.ansn == second.ansn
        node.selectors = {0: 99.0, 2: 99.0}
        third = node.build_tc(13.0)
        assert third.ansn == first.ansn + 1

    def test_malformed_hello_counted_and_dropped(self):
        sim, node = self.make_node_pair()
        ls = sim.link_state(0, 1)
        bad = sim.nodes[1]  # hello claiming to originate from the receiver
        msg = sim.nodes[1].build_hello(ls, 10.0)
        before = node.malformed_count
        node.process_hello(msg, ls, 10.0)
        assert node.malformed_count == before + 1


class TestRoutingIntegration:
    @pytest.mark.parametrize("name", ["secoqc.topo", "usnet.topo"])
    def test_flooding_reach_and_route_consistency(self, name):
        topo = load_topology(bundled_data_path(name))
        sim = build_sim(topo, duration=25.0, fill=50e6)
        sim.run()
        emitters = {n for n, node in sim.nodes.items() if node.selectors}
        g = nx.Graph((l.u, l.v) for l in topo.links)
        for me, node in sim.nodes.items():
            # every TC-emitting node is known to everyone
            for orig in emitters - {me}:
                assert orig in node.orig_ansn, (me, orig)
            # full reachability with min-hop-optimal, loop-free forwarding
            for dst in topo.nodes:
                if dst == me:
                    continue
                assert dst in node.routes, (me, dst)
                walk, seen = me, set()
                hops = 0
                while walk != dst:
                    assert walk not in seen
                    seen.add(walk)
                    walk = sim.nodes[walk].routes[dst].next_hop
                    hops += 1
                assert hops == nx.shortest_path_length(g, me, dst)

    def test_routes_direct_when_link_alive(self):
        topo = load_topology(bundled_data_path("secoqc.topo"))
        sim = build_sim(topo, duration=25.0, fill=50e6)
        sim.run()
        route = sim.nodes[2].routes[4]
        assert route.path == (2, 4)
        assert route.hop_count == 1

    def test_min_hop_route_table_matches_bfs_oracle_all_pairs(self):
        topo = load_topology(bundled_data_path("usnet.topo"))
        edges = [l.key for l in topo.links]
        g = nx.Graph(edges)
        pairs = 0
        for src in topo.nodes:
            paths = min_hop_paths(edges, src)
            for dst in topo.nodes:
                if dst == src:
                    continue
                assert len(paths[dst]) - 1 == nx.shortest_path_length(g, src, dst)
                pairs += 1
        assert pairs == 552
