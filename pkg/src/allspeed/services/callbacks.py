"""Callback hooks fired by the time loop."""
from __future__ import annotations

import logging
from collections import defaultdict
from typing import Any, Callable, Dict, List

logger = logging.getLogger(__name__)

EVENTS = ("start", "step", "snapshot", "completed")

Callback = Callable[[Any], None]


class CallbackManager:
    """Registry of callbacks keyed by loop event."""

    def __init__(self) -> None:
        self._callbacks: Dict[str, List[Callback]] = defaultdict(list)

    def register(self, event: str, callback: Callback) -> None:
        if event not in EVENTS:
            raise ValueError(f"unknown event '{event}'")
        self._callbacks[event].append(callback)

    def emit(self, event: str, payload: Any) -> None:
        """Invoke callbacks registered for *event* in registration order."""
        for cb in list(self._callbacks.get(event, ())):
            cb(payload)
