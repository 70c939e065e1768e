"""Online node-weighted rent-or-buy Steiner forest with an audited experiment harness."""

from nwrob.core import RoBCore, layer_of
from nwrob.doubling import GuessDoubling, greedy_cost
from nwrob.graph import (NodeWeightedGraph, boundary_ball, closed_ball, connected_within,
                         node_distance, open_ball, shortest_path, subdivide_edges)
from nwrob.harness import report, run_experiment, run_suite
from nwrob.instances import Instance, gen_instance, parse_instance, read_instance
from nwrob.oracle import offline_opt, pcsc_opt
from nwrob.pcsc import PCSC, PCSCInstance

__all__ = [
    "NodeWeightedGraph", "subdivide_edges", "node_distance", "shortest_path", "open_ball",
    "boundary_ball", "closed_ball", "connected_within", "PCSC", "PCSCInstance", "RoBCore",
    "layer_of", "GuessDoubling", "greedy_cost", "Instance", "gen_instance", "parse_instance",
    "read_instance", "offline_opt", "pcsc_opt", "run_experiment", "run_suite", "report",
]
