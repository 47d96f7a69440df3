"""Asynchronous round accounting over a recorded trace."""

from __future__ import annotations

import bisect
import math


def round_boundaries(trace) -> list:
    """Start indices of the greedy minimal rounds of ``trace``.

    A round starting at event ``s`` ends at the first event ``e`` such that
    every node was activated in ``[s, e]`` and every message present in the
    configuration before event ``s`` was delivered by ``e``.  A trailing
    incomplete round is still listed.
    """
    events = trace.events
    n_events = len(events)
    n_nodes = len(trace.nodes)
    if n_events == 0:
        return []
    # delivery event of each message, inf while undelivered
    delivered_at = {}
    for i, ev in enumerate(events):
        for msg in ev.delivered:
            delivered_at[msg.seq] = i
    # (config index from which the message is present, delivery index), by presence
    lifetimes = [
        (0, delivered_at.get(msg.seq, math.inf)) for ch in trace.initial.channels.values() for msg in ch
    ]
    for i, sent in enumerate(trace.emitted):
        lifetimes.extend((i + 1, delivered_at.get(msg.seq, math.inf)) for _, msg in sent)
    lifetimes.sort(key=lambda x: x[0])

    starts = []
    k = 0
    latest_delivery = -1
    s = 0
    while s < n_events:
        starts.append(s)
        # messages already delivered before s never exceed s - 1, so a running
        # max over everything present by s is the pending watermark
        while k < len(lifetimes) and lifetimes[k][0] <= s:
            latest_delivery = max(latest_delivery, lifetimes[k][1])
            k += 1
        seen = set()
        t = s
        while t < n_events and len(seen) < n_nodes:
            seen.add(events[t].node)
            t += 1
        if len(seen) < n_nodes:
            break
        end = max(t - 1, latest_delivery)
        if end >= n_events:
            break
        s = end + 1
    return starts


def round_of(starts: list, config_index: int) -> int:
    """Index of the round whose span contains the configuration before event ``config_index``."""
    return max(0, bisect.bisect_right(starts, config_index) - 1)


def rounds_before(starts: list, config_index: int) -> int:
    """Number of rounds that had begun before configuration ``config_index`` was reached."""
    return bisect.bisect_left(starts, config_index)
