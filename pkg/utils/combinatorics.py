"""Set partitions and moment-to-cumulant conversion"""

import math
from typing import Callable, Dict, FrozenSet, Iterator, List, Sequence, Tuple, TypeVar, Union

T = TypeVar("T")
Number = Union[float, complex]


def set_partitions(items: Sequence[T]) -> Iterator[List[List[T]]]:
    """Yield every partition of ``items`` into non-empty blocks (blocks keep input order)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        yield [[first]] + partition
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1:]


def joint_cumulant(n: int, moment: Callable[[Tuple[int, ...]], Number]) -> Number:
    """
    Joint cumulant of n observables from their mixed moments.

    Args:
        n: number of observables
        moment: maps a sorted tuple of observable indices to the moment of their product

    Returns:
        Sum over set partitions of (-1)^(b-1) (b-1)! times the product of block moments
    """
    if n <= 0:
        raise ValueError("cumulant needs at least one observable")
    cache: Dict[FrozenSet[int], Number] = {}

    def block_moment(block: List[int]) -> Number:
        key = frozenset(block)
        if key not in cache:
            cache[key] = moment(tuple(sorted(block)))
        return cache[key]

    total: Number = 0.0
    for partition in set_partitions(list(range(n))):
        b = len(partition)
        term: Number = (-1) ** (b - 1) * math.factorial(b - 1)
        for block in partition:
            term = term * block_moment(block)
        total = total + term
    return total
