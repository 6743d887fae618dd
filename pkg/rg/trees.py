"""
Gallavotti-Nicolo trees and their dimensional bookkeeping.

A tree with root on scale h has its first vertex v0 on scale h + 1; every
vertex sits on a scale line, so a branch from a vertex on scale s to a vertex
on scale s' passes s' - s - 1 trivial vertices. Branching (non-trivial)
vertices lie on scales h < h_v <= N + 1 and endpoints on h + 1 < h_v <= N + 2.
An endpoint below N + 2 is a local term and must hang from a branching
vertex or from v0; endpoints on N + 2 carry the full interaction and may
follow trivial vertices. Endpoints are labeled, the first n normal (psi
interaction) and the last m special (source).

For a vertex with external fields P_v the scaling dimension is
d_v = 2 - |P_v^psi| / 2 - |P_v^A| and localization gains z(P_v).
"""

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

from utils.combinatorics import set_partitions
from utils.exceptions import EnumerationLimitError, ValidationError
from utils.logger import IsingLabLogger
from utils.reporting import parallel_map

logger = IsingLabLogger("isinglab.rg")

MAX_TREES = 200_000
MAX_VERTICES = 64
MAX_PSI_FIELDS = 8
DIMENSION_HEADER = ["psi_fields", "source_fields", "d", "z", "renormalized"]

GAINS = {(4, 0): 1, (2, 0): 2, (2, 1): 1}


def z_gain(psi_fields: int, source_fields: int) -> int:
    """Scale jumps gained by localization: (4,0) -> 1, (2,0) -> 2, (2,1) -> 1, else 0."""
    return GAINS.get((psi_fields, source_fields), 0)


def scaling_dimension(psi_fields: int, source_fields: int) -> int:
    return 2 - psi_fields // 2 - source_fields


def renormalized_dimension(psi_fields: int, source_fields: int) -> int:
    return scaling_dimension(psi_fields, source_fields) - z_gain(psi_fields, source_fields)


def dimension_table(max_psi: int = MAX_PSI_FIELDS, max_source: int = 4) -> List[list]:
    """Rows (|P^psi|, |P^A|, d, z, d - z) over every even |P^psi| <= max_psi and |P^A| <= max_source."""
    rows = []
    for p in range(0, max_psi + 1, 2):
        for q in range(max_source + 1):
            rows.append([p, q, scaling_dimension(p, q), z_gain(p, q), renormalized_dimension(p, q)])
    return rows


def irrelevant_after_localization(max_psi: int = MAX_PSI_FIELDS, max_source: int = 4) -> bool:
    """Every assignment with at least two psi fields has negative renormalized dimension."""
    return all(row[4] < 0 for row in dimension_table(max_psi, max_source) if row[0] >= 2)


@dataclass(frozen=True)
class TreeVertex:
    index: int
    scale: int
    parent: Optional[int]
    kind: str
    labels: FrozenSet[int]


@dataclass
class GNTree:
    """One labeled tree: vertices in depth-first order, vertex 0 is the root."""

    h: int
    N: int
    n: int
    m: int
    vertices: List[TreeVertex] = field(default_factory=list)

    def children(self, index: int) -> List[TreeVertex]:
        return [v for v in self.vertices if v.parent == index]

    @property
    def endpoints(self) -> List[TreeVertex]:
        return [v for v in self.vertices if v.kind in ("normal", "special")]

    @property
    def branching(self) -> List[TreeVertex]:
        return [v for v in self.vertices if len(self.children(v.index)) >= 2]

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        for v in self.vertices:
            g.add_node(v.index, scale=v.scale, kind=v.kind)
            if v.parent is not None:
                g.add_edge(v.parent, v.index)
        return g

    def counts(self, vertex: TreeVertex) -> Tuple[int, int]:
        """(normal, special) endpoints following the vertex."""
        normal = sum(1 for label in vertex.labels if label < self.n)
        return normal, len(vertex.labels) - normal

    def violations(self) -> List[str]:
        """Constraint breaches; empty for every enumerated tree."""
        out = []
        g = self.graph()
        if not nx.is_arborescence(g):
            out.append("not a rooted tree")
        root = self.vertices[0]
        if root.scale != self.h or len(self.children(0)) != 1:
            out.append("root must sit on h with the single successor v0")
        for u, w in g.edges:
            if self.vertices[w].scale != self.vertices[u].scale + 1:
                out.append(f"scales must increase by one along {u} -> {w}")
        for v in self.vertices[1:]:
            children = self.children(v.index)
            if v.kind in ("normal", "special"):
                if not self.h + 1 < v.scale <= self.N + 2:
                    out.append(f"endpoint {v.index} on scale {v.scale}")
                parent = self.vertices[v.parent]
                if v.scale <= self.N + 1 and parent.kind != "v0" and len(self.children(parent.index)) < 2:
                    out.append(f"local endpoint {v.index} follows a trivial vertex")
            else:
                if len(children) >= 2 and not self.h < v.scale <= self.N + 1:
                    out.append(f"branching vertex {v.index} on scale {v.scale}")
                union = frozenset().union(*(c.labels for c in children)) if children else frozenset()
                if union != v.labels:
                    out.append(f"labels of vertex {v.index} are not the union of its successors")
        return out

    def dimension_rows(self, max_psi: int = MAX_PSI_FIELDS) -> List[list]:
        """
        (vertex, |P^psi|, |P^A|, d_v, d_v - z) for every admissible external field set.

        All source fields stay external, so |P^A| = m(v). A normal endpoint on
        N + 2 contributes up to max_psi fields, a local or special endpoint two.
        """
        rows = []
        for v in self.vertices[1:]:
            if v.kind in ("normal", "special"):
                continue
            normal, special = self.counts(v)
            available = 2 * special
            for e in self.vertices:
                if e.kind == "normal" and e.labels <= v.labels:
                    available += max_psi if e.scale == self.N + 2 else 2
            for p in range(0, min(available, max_psi) + 1, 2):
                if p == 0 and special == 0:
                    continue
                rows.append([v.index, p, special, scaling_dimension(p, special), renormalized_dimension(p, special)])
        return rows


# nested form: (scale, kind, labels, children)
_Node = Tuple[int, str, FrozenSet[int], tuple]


def _endpoint(scale: int, label: int, n: int) -> _Node:
    return (scale, "normal" if label < n else "special", frozenset([label]), ())


def _nodes_for_partition(scale: int, labels: Tuple[int, ...], partition: List[List[int]], N: int, n: int,
                         first: bool) -> Iterator[_Node]:
    branching = len(partition) >= 2
    kind = "v0" if first else ("branch" if branching else "trivial")
    choices = []
    for block in partition:
        options = list(_vertex_options(scale + 1, tuple(block), N, n, False))
        if len(block) == 1 and (branching or first):
            options.insert(0, _endpoint(scale + 1, block[0], n))
        choices.append(options)
    for children in itertools.product(*choices):
        yield (scale, kind, frozenset(labels), tuple(children))


def _vertex_options(scale: int, labels: Tuple[int, ...], N: int, n: int, first: bool) -> Iterator[_Node]:
    """Every subtree whose top vertex sits on the given scale with the given labels."""
    if scale == N + 1:
        children = tuple(_endpoint(N + 2, label, n) for label in labels)
        kind = "v0" if first else ("branch" if len(children) > 1 else "trivial")
        yield (scale, kind, frozenset(labels), children)
        return
    for partition in set_partitions(list(labels)):
        yield from _nodes_for_partition(scale, labels, partition, N, n, first)


def _flatten(h: int, N: int, n: int, m: int, node: _Node) -> GNTree:
    tree = GNTree(h, N, n, m, [TreeVertex(0, h, None, "root", node[2])])

    def visit(item: _Node, parent: int) -> None:
        index = len(tree.vertices)
        scale, kind, labels, children = item
        tree.vertices.append(TreeVertex(index, scale, parent, kind, labels))
        for child in children:
            visit(child, index)

    visit(node, 0)
    return tree


def _check_request(h: int, N: int, n: int, m: int) -> None:
    if n < 0 or m < 0 or n + m < 1:
        raise ValidationError(f"trees need n + m >= 1 endpoints, got n = {n}, m = {m}")
    if h > N:
        raise ValidationError(f"root scale h = {h} lies above N = {N}")


def _trees_below(task) -> List[_Node]:
    """v0 subtrees for one partition of the labels at v0 (all of them when v0 sits on N + 1)."""
    h, N, n, labels, partition, max_trees = task
    if partition is None:
        source = _vertex_options(h + 1, labels, N, n, True)
    else:
        source = _nodes_for_partition(h + 1, labels, partition, N, n, True)
    return list(itertools.islice(source, max_trees + 1))


def enumerate_gn_trees(h: int, N: int, n: int, m: int, max_trees: int = MAX_TREES,
                       max_vertices: int = MAX_VERTICES, threads: int = 1) -> List[GNTree]:
    """
    All labeled trees with root on h, n normal and m special endpoints.

    Work is split over the partitions of the labels at v0.

    Raises:
        ValidationError: n + m < 1 or h > N
        EnumerationLimitError: more than max_trees trees, or trees that may exceed max_vertices
    """
    _check_request(h, N, n, m)
    labels = tuple(range(n + m))
    bound = 1 + (N + 2 - h) * len(labels)
    if bound > max_vertices:
        raise EnumerationLimitError(f"trees may carry {bound} vertices, cap is {max_vertices}")
    logger.info(f"Enumerating trees: h={h} N={N} n={n} m={m}")
    if h + 1 == N + 1:
        tasks = [(h, N, n, labels, None, max_trees)]
    else:
        tasks = [(h, N, n, labels, p, max_trees) for p in set_partitions(list(labels))]
    nodes = [node for chunk in parallel_map(_trees_below, tasks, threads) for node in chunk]
    if len(nodes) > max_trees:
        raise EnumerationLimitError(f"more than {max_trees} trees for h={h} N={N} n={n} m={m}")
    trees = [_flatten(h, N, n, m, node) for node in nodes]
    logger.debug(f"{len(trees)} trees")
    return trees


def _line_count(j: int, blocks: List[Tuple[int, ...]], ends: Sequence[int], h: int, N: int) -> int:
    if j == N + 1:
        return 1
    per_block = []
    for block in blocks:
        alive = [label for label in block if ends[label] > j + 1]
        ending = [label for label in block if ends[label] == j + 1]
        options = []
        partitions = list(set_partitions(alive)) if alive else [[]]
        for partition in partitions:
            degree = len(partition) + len(ending)
            if ending and j + 1 <= N + 1 and degree < 2 and j != h + 1:
                continue
            options.append([tuple(b) for b in partition])
        per_block.append(options)
    total = 0
    for choice in itertools.product(*per_block):
        total += _line_count(j + 1, [b for part in choice for b in part], ends, h, N)
    return total


def count_gn_trees_bruteforce(h: int, N: int, n: int, m: int) -> int:
    """
    Tree count from endpoint scales and the nested partitions on each scale line.

    Independent of the recursive generator: every assignment of endpoint scales
    and every refining sequence of label partitions is tested against the
    branching rule for local endpoints.
    """
    _check_request(h, N, n, m)
    size = n + m
    total = 0
    for ends in itertools.product(range(h + 2, N + 3), repeat=size):
        total += _line_count(h + 1, [tuple(range(size))], ends, h, N)
    return total


@dataclass
class DimensionReport:
    trees: int
    renormalized: Counter
    worst: Optional[int]
    violations: List[str] = field(default_factory=list)

    @property
    def all_irrelevant(self) -> bool:
        return self.worst is not None and self.worst < 0

    def summary(self) -> Dict[str, object]:
        return {
            "trees": self.trees,
            "renormalized_dimensions": {str(k): v for k, v in sorted(self.renormalized.items())},
            "worst": self.worst,
            "all_irrelevant": self.all_irrelevant,
            "violations": self.violations,
        }


def dimension_report(trees: Sequence[GNTree], max_psi: int = MAX_PSI_FIELDS) -> DimensionReport:
    """Multiset of renormalized dimensions over vertices with |P^psi| >= 2, and any constraint breach."""
    counter: Counter = Counter()
    violations = []
    for i, tree in enumerate(trees):
        violations.extend(f"tree {i}: {v}" for v in tree.violations())
        for row in tree.dimension_rows(max_psi):
            if row[1] >= 2:
                counter[row[4]] += 1
    worst = max(counter) if counter else None
    return DimensionReport(len(trees), counter, worst, violations)
