"""Fault-tolerant distance and shortest-path-counting labels.

Build per-vertex labels over a recursive separator decomposition of a
directed weighted graph, then answer distance / counting queries about
G minus a set of failed vertices from the labels of the endpoints and the
failures alone.
"""
from .counting import CountValue, is_probable_prime, random_prime
from .decomp import DecompositionTree, Piece, RDivision, build_decomposition, find_separator
from .generators import gen_gadget, gen_grid, gen_omv_grid
from .graph import DIST_INFINITY, EdgeRecord, Graph, GraphFormatError, load_graph, save_graph
from .oracle import Mask, SsspResult, all_pairs_reference, count_exact_length_avoiding, count_sssp, sssp

__all__ = [
    "CountValue",
    "DecompositionTree",
    "DIST_INFINITY",
    "EdgeRecord",
    "Graph",
    "GraphFormatError",
    "Mask",
    "Piece",
    "RDivision",
    "SsspResult",
    "all_pairs_reference",
    "build_decomposition",
    "count_exact_length_avoiding",
    "count_sssp",
    "find_separator",
    "gen_gadget",
    "gen_grid",
    "gen_omv_grid",
    "is_probable_prime",
    "load_graph",
    "random_prime",
    "save_graph",
    "sssp",
]
