from __future__ import annotations

from collections import OrderedDict
from typing import Optional, Set


class PageCache:
    """Resident 4 KiB logical pages and the lines of each that are mapped.

    ``lru`` evicts the least recently touched page. ``clock`` is the
    second-chance variant: pages sit in insertion order around the clock,
    a touch sets the reference bit, and the hand clears set bits (moving
    the page behind the hand) until it finds a clear one.
    """

    def __init__(self, policy: str = "lru"):
        if policy not in ("lru", "clock"):
            raise ValueError(f"unknown policy {policy!r}")
        self.policy = policy
        self.pages: "OrderedDict[int, Set[int]]" = OrderedDict()
        self.ref = {}

    def __len__(self):
        return len(self.pages)

    def __contains__(self, page):
        return page in self.pages

    def touch(self, page: int) -> None:
        if page not in self.pages:
            return
        if self.policy == "lru":
            self.pages.move_to_end(page)
        else:
            self.ref[page] = True

    def add_line(self, page: int, lla: int) -> None:
        lines = self.pages.get(page)
        if lines is None:
            self.pages[page] = {lla}
            self.ref[page] = self.policy == "clock"
        else:
            lines.add(lla)
            self.touch(page)

    def victim(self) -> Optional[int]:
        if not self.pages:
            return None
        if self.policy == "lru":
            return next(iter(self.pages))
        while True:
            page = next(iter(self.pages))
            if self.ref.get(page):
                self.ref[page] = False
                self.pages.move_to_end(page)
            else:
                return page

    def remove(self, page: int) -> Set[int]:
        self.ref.pop(page, None)
        return self.pages.pop(page)

    def resident_lines(self) -> int:
        return sum(len(v) for v in self.pages.values())
