"""Shared exact/greedy search for class partitions with mergeable components.

Items are assigned to classes one by one in increasing id.  Within a class,
items form components under an adjacency relation; a component is feasible
while it stays inside the common compatibility mask of its members.  This is
the engine behind both the principal-groupoid dad search (adjacency = window
arrows, compatibility = bound arrows) and the coarse decomposition search
(adjacency = E, compatibility = F).

Exact mode explores partitions in lexicographic order with classes
canonicalized by first use, so the returned assignment is the minimum of the
search order and independent of everything but the inputs.  Greedy mode is a
single first-fit pass: sound, incomplete.
"""

from __future__ import annotations

from typing import Sequence

# per-class state: (items_mask, components) where each component is
# (member_mask, common_mask) and common_mask = intersection of ok[] members


def _try_add(state, item, adj, ok):
    items, comps = state
    nbr = adj[item] & items
    new_mask = 1 << item
    new_common = ok[item]
    rest = []
    for cmask, ccommon in comps:
        if cmask & nbr:
            new_mask |= cmask
            new_common &= ccommon
        else:
            rest.append((cmask, ccommon))
    if new_mask & ~new_common:
        return None
    rest.append((new_mask, new_common))
    return (items | 1 << item, tuple(rest))


def partition_search(
    n_items: int,
    n_classes: int,
    adj: Sequence[int],
    ok: Sequence[int],
    mode: str = "exact",
):
    """Partition items into feasible classes; returns per-class states or None.

    Each returned class is a pair ``(items_mask, components)`` with the
    components listed as ``(member_mask, common_mask)`` pairs.
    """
    empty = (0, ())
    if mode == "greedy":
        states = [empty] * n_classes
        for item in range(n_items):
            for c in range(n_classes):
                ns = _try_add(states[c], item, adj, ok)
                if ns is not None:
                    states[c] = ns
                    break
            else:
                return None
        return states

    if mode != "exact":
        raise ValueError(f"unknown search mode: {mode!r}")

    def dfs(item, states, used):
        if item == n_items:
            return states
        limit = min(used + 1, n_classes)
        for c in range(limit):
            ns = _try_add(states[c], item, adj, ok)
            if ns is None:
                continue
            nxt = list(states)
            nxt[c] = ns
            res = dfs(item + 1, nxt, used + 1 if c == used else used)
            if res is not None:
                return res
        return None

    return dfs(0, [empty] * n_classes, 0)
