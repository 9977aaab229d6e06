"""In-memory session store with LRU eviction and per-session locks."""

from __future__ import annotations

import secrets
import threading
from collections import OrderedDict

EVICTED_MEMORY = 1024


class SessionEntry:
    """One live session plus the material needed to replay it."""

    def __init__(self, image, gt, bbox, cfg, session, base):
        self.image = image
        self.gt = gt
        self.bbox = bbox
        self.cfg = cfg
        self.session = session
        self.base = base
        self.iou_history = []
        self.lock = threading.Lock()


class SessionStore:
    """Keyed by unguessable tokens; drops least-recently-used entries.

    Evicted ids are remembered (bounded) so the API can distinguish
    "gone" from "never existed".
    """

    def __init__(self, capacity=64):
        self.capacity = capacity
        self._entries = OrderedDict()
        self._evicted = OrderedDict()
        self._lock = threading.Lock()

    @staticmethod
    def new_id():
        return secrets.token_urlsafe(16)  # 128 bits

    def put(self, entry):
        sid = self.new_id()
        with self._lock:
            self._entries[sid] = entry
            self._entries.move_to_end(sid)
            while len(self._entries) > self.capacity:
                old, _ = self._entries.popitem(last=False)
                self._evicted[old] = True
                while len(self._evicted) > EVICTED_MEMORY:
                    self._evicted.popitem(last=False)
        return sid

    def get(self, sid):
        """The entry, or the strings "evicted" / "missing"."""
        with self._lock:
            entry = self._entries.get(sid)
            if entry is not None:
                self._entries.move_to_end(sid)
                return entry
            if sid in self._evicted:
                return "evicted"
            return "missing"

    def __len__(self):
        with self._lock:
            return len(self._entries)
