"""Per-criterion results of the acceptance suite, shared with the summary hook in conftest."""

from __future__ import annotations

import time
from contextlib import contextmanager

# criterion number -> {"limit": seconds, "parts": {name: (passed, seconds)}}
RESULTS: dict[int, dict] = {}


@contextmanager
def criterion(num: int, part: str, limit: float):
    """Time one part of a criterion; the criterion passes only if every part passes within the limit."""
    entry = RESULTS.setdefault(num, {"limit": limit, "parts": {}})
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        entry["parts"][part] = (ok, elapsed)
        total = sum(t for _, t in entry["parts"].values())
        status = "PASS" if ok and total <= limit else "FAIL"
        print(f"criterion {num} [{part}]: {status} ({elapsed:.1f}s, criterion total {total:.1f}s of {limit:g}s)")
    total = sum(t for _, t in entry["parts"].values())
    assert total <= limit, f"criterion {num} took {total:.1f}s, limit {limit:g}s"


def summary_lines() -> list[str]:
    lines = []
    for num in sorted(RESULTS):
        entry = RESULTS[num]
        parts = entry["parts"]
        total = sum(t for _, t in parts.values())
        ok = all(p for p, _ in parts.values()) and total <= entry["limit"]
        failed = [name for name, (p, _) in parts.items() if not p]
        note = f"; failed: {', '.join(failed)}" if failed else ""
        lines.append(f"criterion {num}: {'PASS' if ok else 'FAIL'} ({total:.1f}s of {entry['limit']:g}s{note})")
    return lines
