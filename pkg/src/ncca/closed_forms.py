"""Hand-expanded instances of the reconstruction identity.

These are written out term by term, independently of
:func:`ncca.conservation.reconstruct`, and serve as cross-checks for it.

Arguments use the planar layout::

         q1                q1  q7
     q2  q3  q4        q2  q3  q4
         q5            q6  q5

i.e. ``q1 = N(+v2)``, ``q2 = N(-v1)``, ``q3 = N(0)``, ``q4 = N(+v1)``,
``q5 = N(-v2)`` and in three dimensions ``q6 = N(+v3)``, ``q7 = N(-v3)``.
``f`` is any callable taking a direction-indexed configuration tuple.
"""

from __future__ import annotations

from typing import Callable, Sequence

RuleFn = Callable[[tuple[int, ...]], int]


def layout_to_config(q: Sequence[int]) -> tuple[int, ...]:
    """Planar layout ``(q1, ..., q5[, q6, q7])`` to a direction-indexed tuple."""
    if len(q) == 5:
        q1, q2, q3, q4, q5 = q
        return (q3, q4, q2, q1, q5)
    if len(q) == 7:
        q1, q2, q3, q4, q5, q6, q7 = q
        return (q3, q4, q2, q1, q5, q6, q7)
    raise ValueError("layout has 5 (d=2) or 7 (d=3) entries")


def config_to_layout(N: Sequence[int]) -> tuple[int, ...]:
    if len(N) == 5:
        c, r, l, u, dn = N
        return (u, l, c, r, dn)
    if len(N) == 7:
        c, r, l, u, dn, f, b = N
        return (u, l, c, r, dn, f, b)
    raise ValueError("configuration has 5 (d=2) or 7 (d=3) entries")


def leading_up_d2(f: RuleFn, N: Sequence[int]) -> int:
    """Leading term ``N(+v2)``; lambda = {0,+v1}, {0,-v2}, {-v1,-v2}, {+v1,-v2}."""
    q1, q2, q3, q4, q5 = config_to_layout(N)

    def F(a, b, c, e, g):
        return f(layout_to_config((a, b, c, e, g)))

    return (
        q1
        + F(0, q2, 0, 0, q5) - F(0, q1, 0, 0, q4)
        + F(0, 0, 0, q4, q5) - F(0, 0, 0, q1, q2)
        + F(0, 0, q3, q4, 0) - F(0, 0, q2, q3, 0)
        + F(0, 0, q3, 0, q5) - F(0, 0, q1, 0, q3)
        + F(0, 0, q2, 0, 0) - F(0, 0, q3, 0, 0)
        + F(0, 0, 0, q3, 0) - F(0, 0, 0, q4, 0)
        + F(0, 0, 0, 0, q2) + F(0, 0, 0, 0, q3) + F(0, 0, 0, 0, q4)
        - F(0, 0, 0, 0, q1) - 2 * F(0, 0, 0, 0, q5)
    )


def leading_center_d2(f: RuleFn, N: Sequence[int]) -> int:
    """Leading term ``N(0)``; longer than :func:`leading_up_d2`."""
    q1, q2, q3, q4, q5 = config_to_layout(N)

    def F(a, b, c, e, g):
        return f(layout_to_config((a, b, c, e, g)))

    return (
        q3
        + F(q1, q2, 0, 0, 0) - F(q4, q5, 0, 0, 0)
        + F(0, q2, 0, 0, q5) - F(0, q1, 0, 0, q4)
        + F(0, 0, q3, q4, 0) - F(0, 0, q2, q3, 0)
        + F(q1, 0, q3, 0, 0) - F(q3, 0, q5, 0, 0)
        + F(q4, 0, 0, 0, 0) - F(q1, 0, 0, 0, 0)
        + F(0, 0, 0, 0, q4) - F(0, 0, 0, 0, q3)
        + F(0, q1, 0, 0, 0) + F(0, q5, 0, 0, 0) - F(0, q2, 0, 0, 0) - F(0, q3, 0, 0, 0)
        + F(0, 0, q2, 0, 0) + F(0, 0, q5, 0, 0) - 2 * F(0, 0, q3, 0, 0)
    )


def expansion_d3(f: RuleFn, N: Sequence[int]) -> int:
    """Three-dimensional expansion with ``q1`` as the leading term."""
    q1, q2, q3, q4, q5, q6, q7 = config_to_layout(N)

    def F(*a):
        return f(layout_to_config(a))

    return (
        q1
        + F(0, 0, 0, q4, q5, 0, 0) - F(0, 0, 0, q1, q2, 0, 0)
        + F(0, 0, q3, 0, q5, 0, 0) - F(0, 0, q1, 0, q3, 0, 0)
        + F(0, q2, 0, 0, q5, 0, 0) - F(0, q1, 0, 0, q4, 0, 0)
        + F(0, 0, 0, 0, q5, q6, 0) - F(0, 0, 0, 0, q7, q1, 0)
        + F(0, 0, 0, 0, q5, 0, q7) - F(0, 0, 0, 0, q6, 0, q1)
        + F(0, 0, 0, q4, 0, 0, q7) - F(0, 0, 0, q6, 0, 0, q2)
        + F(0, 0, q3, 0, 0, 0, q7) - F(0, 0, q6, 0, 0, 0, q3)
        + F(0, 0, 0, q4, 0, q6, 0) - F(0, 0, 0, q7, 0, q2, 0)
        + F(0, 0, q3, q4, 0, 0, 0) - F(0, 0, q2, q3, 0, 0, 0)
        + F(0, 0, q2, 0, 0, 0, 0) + F(0, 0, q6, 0, 0, 0, 0) - 2 * F(0, 0, q3, 0, 0, 0, 0)
        + F(0, 0, 0, q3, 0, 0, 0) + F(0, 0, 0, q6, 0, 0, 0) + F(0, 0, 0, q7, 0, 0, 0)
        - 3 * F(0, 0, 0, q4, 0, 0, 0)
        + F(0, 0, 0, 0, q2, 0, 0) + F(0, 0, 0, 0, q3, 0, 0) + F(0, 0, 0, 0, q4, 0, 0)
        + F(0, 0, 0, 0, q6, 0, 0) + F(0, 0, 0, 0, q7, 0, 0)
        - F(0, 0, 0, 0, q1, 0, 0) - 4 * F(0, 0, 0, 0, q5, 0, 0)
        + F(0, 0, 0, 0, 0, q2, 0) - F(0, 0, 0, 0, 0, q6, 0)
        + F(0, 0, 0, 0, 0, 0, q2) + F(0, 0, 0, 0, 0, 0, q3) - 2 * F(0, 0, 0, 0, 0, 0, q7)
    )
