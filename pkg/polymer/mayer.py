"""
Ursell (Mayer) coefficients of polymer multisets.

phi^T(gamma_1, ..., gamma_n) = (1 / Gamma!) sum over connected spanning
subgraphs C of the overlap graph of (-1)^{|E(C)|}, where Gamma! is the product
of the factorials of the polymer multiplicities. Repeated polymers overlap.
"""

from collections import Counter
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Dict, List, Sequence

import networkx as nx

from polymer.activities import Polymer
from utils.exceptions import PolymerEnumerationError

MAX_MAYER_POLYMERS = 7
MAX_BRUTE_FORCE_EDGES = 12


def connectivity_graph(polymers: Sequence[Polymer]) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(len(polymers)))
    for i, j in combinations(range(len(polymers)), 2):
        if polymers[i].overlaps(polymers[j]):
            graph.add_edge(i, j)
    return graph


def multiplicity_factorial(polymers: Sequence[Polymer]) -> int:
    out = 1
    for count in Counter(p.bonds for p in polymers).values():
        out *= factorial(count)
    return out


def connected_signed_sum(graph: nx.Graph) -> int:
    """
    sum over connected spanning subgraphs of (-1)^{edges}, by recursion on vertex subsets.

    With h(X) = 1 when X spans no edge and 0 otherwise, every subset S obeys
    h(S) = sum_{T: min(S) in T <= S} f(T) h(S \\ T).
    """
    nodes = list(graph.nodes)
    n = len(nodes)
    position = {v: i for i, v in enumerate(nodes)}
    adjacency = [0] * n
    for u, v in graph.edges:
        adjacency[position[u]] |= 1 << position[v]
        adjacency[position[v]] |= 1 << position[u]

    def independent(mask: int) -> bool:
        m = mask
        while m:
            low = m & -m
            if adjacency[low.bit_length() - 1] & mask:
                return False
            m ^= low
        return True

    f: Dict[int, int] = {}
    for mask in range(1, 1 << n):
        low = mask & -mask
        total = 1 if independent(mask) else 0
        rest = mask ^ low
        sub = rest
        # proper subsets T of mask containing its lowest vertex
        while True:
            T = sub | low
            if T != mask and independent(mask ^ T):
                total -= f[T]
            if sub == 0:
                break
            sub = (sub - 1) & rest
        f[mask] = total
    return f[(1 << n) - 1] if n else 0


def mayer_coefficient(polymers: Sequence[Polymer], max_polymers: int = MAX_MAYER_POLYMERS) -> Fraction:
    """phi^T of a polymer multiset; 0 for the empty or a disconnected collection."""
    n = len(polymers)
    if n == 0:
        return Fraction(0)
    if n > max_polymers:
        raise PolymerEnumerationError(f"Mayer coefficient limited to {max_polymers} polymers, got {n}")
    graph = connectivity_graph(polymers)
    if not nx.is_connected(graph):
        return Fraction(0)
    return Fraction(connected_signed_sum(graph), multiplicity_factorial(polymers))


def mayer_coefficient_bruteforce(polymers: Sequence[Polymer]) -> Fraction:
    """The same coefficient by enumerating every edge subset of the overlap graph."""
    n = len(polymers)
    if n == 0:
        return Fraction(0)
    graph = connectivity_graph(polymers)
    edges: List[tuple] = list(graph.edges)
    if len(edges) > MAX_BRUTE_FORCE_EDGES:
        raise PolymerEnumerationError(f"edge-subset enumeration limited to {MAX_BRUTE_FORCE_EDGES} edges")
    total = 0
    for mask in range(1 << len(edges)):
        chosen = [edges[i] for i in range(len(edges)) if (mask >> i) & 1]
        sub = nx.Graph()
        sub.add_nodes_from(range(n))
        sub.add_edges_from(chosen)
        if nx.is_connected(sub):
            total += (-1) ** len(chosen)
    return Fraction(total, multiplicity_factorial(polymers))
