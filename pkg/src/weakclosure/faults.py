"""Deliberate-fault switches used to show that the verifier can fail.

Nothing here is active unless a test (or the hidden ``WEAKCLOSURE_FAULT``
environment variable read by the CLI) turns it on.
"""

from __future__ import annotations

import contextlib

KNOWN = frozenset({
    "collection-sign",      # wrong sign in the class-two collection formula
    "q-action-inversions",  # Q-action forgets the reordering commutators
    "v1-commutator",        # 3x3 projection drops the [a,b] contribution
    "tau-generator",        # top-level 3-cycle replaced by a single 3-cycle
})

_active: frozenset[str] = frozenset()


def active(name: str) -> bool:
    return name in _active


def current() -> frozenset[str]:
    return _active


@contextlib.contextmanager
def injected(*names: str):
    global _active
    unknown = set(names) - KNOWN
    if unknown:
        raise ValueError(f"unknown fault(s): {sorted(unknown)}")
    saved = _active
    _active = saved | frozenset(names)
    try:
        yield
    finally:
        _active = saved
