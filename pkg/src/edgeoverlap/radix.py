"""Mixed-radix permutation codes and the Hall insertion cascade.

Permutations are 0-indexed one-line arrays: ``perm[i]`` is the image of
position ``i``. A radix code ``c`` has one digit per *value*: ``c[v]`` counts
the values smaller than ``v`` that sit to the left of ``v`` in the one-line
list, so ``0 <= c[v] <= v``.
"""
from __future__ import annotations

import math
from itertools import product
from typing import Iterator, Sequence


class RadixError(ValueError):
    pass


def _check_perm(perm: Sequence[int]) -> list[int]:
    perm = [int(v) for v in perm]
    if sorted(perm) != list(range(len(perm))):
        raise RadixError(f"{perm} is not a permutation of range({len(perm)})")
    return perm


def check_code(code: Sequence[int]) -> list[int]:
    code = [int(d) for d in code]
    for v, d in enumerate(code):
        if not 0 <= d <= v:
            raise RadixError(f"digit {d} at slot {v} outside [0, {v}]")
    return code


def radix_encode(perm: Sequence[int]) -> list[int]:
    perm = _check_perm(perm)
    code = [0] * len(perm)
    for pos, v in enumerate(perm):
        code[v] = sum(1 for u in perm[:pos] if u < v)
    return code


def radix_decode(code: Sequence[int]) -> list[int]:
    """Inverse of :func:`radix_encode`: insert value v at index code[v]."""
    code = check_code(code)
    out: list[int] = []
    for v, d in enumerate(code):
        out.insert(d, v)
    return out


def radix_index(code: Sequence[int]) -> int:
    """1-based rank of a code, reading the digits as a mixed-radix numeral.

    The last slot is the least significant digit (radix n), so the all-zero
    code has index 1 and the maximal code has index n!.
    """
    code = check_code(code)
    idx = 0
    for v, d in enumerate(code):
        idx = idx * (v + 1) + d
    return idx + 1


def radix_unindex(index: int, n: int) -> list[int]:
    if not 1 <= index <= math.factorial(n):
        raise RadixError(f"index {index} outside [1, {n}!]")
    rem = index - 1
    code = [0] * n
    for v in range(n - 1, -1, -1):
        rem, code[v] = divmod(rem, v + 1)
    return code


def all_codes(n: int) -> Iterator[list[int]]:
    """Every valid code in increasing radix-index order."""
    for digits in product(*(range(v + 1) for v in range(n))):
        yield list(digits)


def code_string(code: Sequence[int]) -> str:
    """Digit-string rendering used in logs and fixtures (``"002143"``)."""
    if any(d > 9 for d in code):
        return ".".join(str(d) for d in code)
    return "".join(str(d) for d in code)


def parse_code(text: str) -> list[int]:
    if "." in text:
        return check_code(int(t) for t in text.split("."))
    return check_code(int(ch) for ch in text)


def hall_step(items: list, slot: int, digit: int) -> list:
    """Controlled block P for subsystem ``slot`` (0-based) with control ``digit``.

    For ``digit < slot`` the element in position ``slot`` is carried down to
    position ``digit`` by adjacent swaps, shifting the intermediate entries up
    by one; any other digit value leaves the list untouched.
    """
    items = list(items)
    if digit < slot:
        for pos in range(slot - 1, digit - 1, -1):
            items[pos], items[pos + 1] = items[pos + 1], items[pos]
    return items


def hall_trace(code: Sequence[int], items: Sequence | None = None) -> list[list]:
    """List contents after each block P_2..P_n (0-based slots 1..n-1).

    The first entry is the untouched input.
    """
    code = check_code(code)
    cur = list(range(len(code))) if items is None else list(items)
    trace = [cur]
    for slot in range(1, len(code)):
        cur = hall_step(cur, slot, code[slot])
        trace.append(cur)
    return trace


def hall_apply(code: Sequence[int]) -> list[int]:
    return hall_trace(code)[-1]
