"""Slot-based cache substrate with tenant ownership and DC/SC regions.

A SlotStore is a fixed array of equally sized slots.  Each slot index belongs
permanently to one region: a tenant's dedicated partition ("DC", tenant_id) or
the shared region SC.  Victim selection uses lazily validated heaps keyed by
recency (LRU) or insertion order (FCFS), so per-access cost stays logarithmic
even for large candidate sets.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import IO, Iterable, Mapping

SC = "SC"

Key = tuple  # (tenant_id, item)
Region = object  # SC or ("DC", tenant_id)

LRU = "lru"
FCFS = "fcfs"


def dc_region(tenant_id) -> tuple:
    return ("DC", tenant_id)


class CacheError(RuntimeError):
    pass


class RegionFullError(CacheError):
    """Insertion into a region with no empty slot."""


class NoCandidateError(CacheError):
    """Victim requested from an empty candidate set."""


class UnknownTenantError(CacheError):
    """Event from a tenant the layout knows nothing about."""


@dataclass(frozen=True)
class RegionLayout:
    """Partitioning of the slot array into per-tenant DC regions plus SC."""

    dc_sizes: Mapping[int, int]
    sc_size: int

    def __post_init__(self):
        if self.sc_size < 0 or any(v < 0 for v in self.dc_sizes.values()):
            raise CacheError("region sizes must be >= 0")

    @property
    def capacity(self) -> int:
        return self.sc_size + sum(self.dc_sizes.values())

    @classmethod
    def global_layout(cls, capacity: int) -> "RegionLayout":
        """All slots shared, no dedicated partitions."""
        return cls(dc_sizes={}, sc_size=capacity)

    @classmethod
    def static_layout(cls, capacity: int, tenant_ids: Iterable[int]) -> "RegionLayout":
        """Equal per-tenant split with no shared region.

        Remainder slots go to the lowest tenant ids, deterministically.
        """
        ids = sorted(tenant_ids)
        if not ids:
            raise CacheError("static layout needs at least one tenant")
        base, extra = divmod(capacity, len(ids))
        sizes = {tid: base + (1 if i < extra else 0) for i, tid in enumerate(ids)}
        return cls(dc_sizes=sizes, sc_size=0)


class SlotStore:
    """The slot array plus the indexes needed for O(log) cache operations."""

    def __init__(self, layout: RegionLayout):
        self.layout = layout
        self.capacity = layout.capacity
        self.keys: list = [None] * self.capacity
        self.owners: list = [None] * self.capacity
        self.last_seq = [0] * self.capacity
        self.ins_seq = [0] * self.capacity
        self.regions: list = [None] * self.capacity
        self.key_index: dict = {}
        self._free: dict = {}
        self._lru_heaps: dict = {}
        self._fifo_heaps: dict = {}
        self._dc_count: dict = {}
        self._sc_count: dict = {}
        self._seq = 0

        idx = 0
        for tid in sorted(layout.dc_sizes):
            size = layout.dc_sizes[tid]
            region = dc_region(tid)
            for i in range(idx, idx + size):
                self.regions[i] = region
            # stack: pop() hands out the lowest index first
            self._free[region] = list(range(idx + size - 1, idx - 1, -1))
            idx += size
        for i in range(idx, self.capacity):
            self.regions[i] = SC
        self._free[SC] = list(range(self.capacity - 1, idx - 1, -1))

    # -- bookkeeping -------------------------------------------------------

    def _tick(self) -> int:
        self._seq += 1
        return self._seq

    def _push_lru(self, idx: int) -> None:
        region = self.regions[idx]
        entry = (self.last_seq[idx], idx)
        heapq.heappush(self._lru_heaps.setdefault((region, self.owners[idx]), []), entry)
        heapq.heappush(self._lru_heaps.setdefault((region, None), []), entry)

    def _push_fifo(self, idx: int) -> None:
        region = self.regions[idx]
        entry = (self.ins_seq[idx], idx)
        heapq.heappush(self._fifo_heaps.setdefault((region, self.owners[idx]), []), entry)
        heapq.heappush(self._fifo_heaps.setdefault((region, None), []), entry)

    def _count(self, owner, region, delta: int) -> None:
        counts = self._sc_count if region == SC else self._dc_count
        counts[owner] = counts.get(owner, 0) + delta

    # -- core operations ---------------------------------------------------

    def lookup(self, key: Key):
        """Return (region, slot index) on hit and refresh recency; None on miss."""
        idx = self.key_index.get(key)
        if idx is None:
            return None
        self.last_seq[idx] = self._tick()
        self._push_lru(idx)
        return self.regions[idx], idx

    def peek(self, key: Key):
        """Slot index for key without touching recency, or None."""
        return self.key_index.get(key)

    def free_count(self, region: Region) -> int:
        return len(self._free.get(region, ()))

    def insert_into_empty(self, key: Key, region: Region) -> int:
        """Place key in an empty slot of region; owner comes from the key."""
        free = self._free.get(region)
        if free is None:
            raise UnknownTenantError(f"no such region: {region!r}")
        if not free:
            raise RegionFullError(f"region {region!r} has no empty slot")
        if key in self.key_index:
            raise CacheError(f"key {key!r} already present")
        idx = free.pop()
        owner = key[0]
        seq = self._tick()
        self.keys[idx] = key
        self.owners[idx] = owner
        self.last_seq[idx] = seq
        self.ins_seq[idx] = seq
        self.key_index[key] = idx
        self._count(owner, region, +1)
        self._push_lru(idx)
        self._push_fifo(idx)
        return idx

    def _pop_candidate(self, region: Region, owner, policy: str) -> int:
        heaps = self._lru_heaps if policy == LRU else self._fifo_heaps
        seqs = self.last_seq if policy == LRU else self.ins_seq
        heap = heaps.get((region, owner))
        while heap:
            seq, idx = heapq.heappop(heap)
            if (
                self.keys[idx] is not None
                and seqs[idx] == seq
                and (owner is None or self.owners[idx] == owner)
            ):
                return idx
        raise NoCandidateError(f"no occupied slot in {region!r} for owner {owner!r}")

    def select_victim(self, region: Region, owner=None, policy: str = LRU) -> int:
        """Oldest occupied slot in region (optionally owner-filtered); slot kept.

        Intended for swap flows: the caller must re-stamp or move the slot,
        since its queue entry has been consumed.
        """
        return self._pop_candidate(region, owner, policy)

    def evict_victim(self, region: Region, owner=None, policy: str = LRU) -> int:
        """Evict the oldest candidate under the replacement policy; return its index."""
        idx = self._pop_candidate(region, owner, policy)
        self.evict(idx)
        return idx

    def evict(self, idx: int) -> None:
        key = self.keys[idx]
        if key is None:
            raise CacheError(f"slot {idx} already empty")
        region = self.regions[idx]
        del self.key_index[key]
        self._count(self.owners[idx], region, -1)
        self.keys[idx] = None
        self.owners[idx] = None
        self._free[region].append(idx)

    def swap(self, i: int, j: int) -> None:
        """Exchange the contents of two occupied slots, metadata included."""
        if self.keys[i] is None or self.keys[j] is None:
            raise CacheError("swap requires two occupied slots")
        ri, rj = self.regions[i], self.regions[j]
        self._count(self.owners[i], ri, -1)
        self._count(self.owners[j], rj, -1)
        self.keys[i], self.keys[j] = self.keys[j], self.keys[i]
        self.owners[i], self.owners[j] = self.owners[j], self.owners[i]
        self.last_seq[i], self.last_seq[j] = self.last_seq[j], self.last_seq[i]
        self.ins_seq[i], self.ins_seq[j] = self.ins_seq[j], self.ins_seq[i]
        self.key_index[self.keys[i]] = i
        self.key_index[self.keys[j]] = j
        self._count(self.owners[i], ri, +1)
        self._count(self.owners[j], rj, +1)
        for idx in (i, j):
            self._push_lru(idx)
            self._push_fifo(idx)

    # -- queries -----------------------------------------------------------

    def owned(self, tenant) -> tuple[int, int]:
        """(dc_slots, sc_slots) currently occupied by tenant."""
        return self._dc_count.get(tenant, 0), self._sc_count.get(tenant, 0)

    def sc_owners(self) -> list:
        """Tenants currently owning at least one SC slot."""
        return [t for t, n in self._sc_count.items() if n > 0]

    def occupied_count(self) -> int:
        return len(self.key_index)

    def dump(self, out: IO[str] | None = None) -> list[str]:
        """One slot per line: index,region,owner,key,last_access_seq."""
        lines = []
        for idx in range(self.capacity):
            region = self.regions[idx]
            rname = SC if region == SC else f"DC:{region[1]}"
            key = self.keys[idx]
            kname = "" if key is None else f"{key[0]}:{key[1]}"
            owner = "" if self.owners[idx] is None else str(self.owners[idx])
            lines.append(f"{idx},{rname},{owner},{kname},{self.last_seq[idx]}")
        if out is not None:
            out.write("\n".join(lines) + "\n")
        return lines


@dataclass(frozen=True)
class InsertOutcome:
    """What a policy's insert operation did with one access."""

    kind: str  # "hit" | "inserted" | "replaced"
    region: Region | None = None
    victim_tenant: object = None

    @property
    def hit(self) -> bool:
        return self.kind == "hit"


def global_insert(store: SlotStore, key: Key, policy: str = LRU) -> InsertOutcome:
    """Tenant-unaware LRU/FCFS over the whole (all-SC) store."""
    if store.lookup(key) is not None:
        return InsertOutcome("hit", SC)
    try:
        store.insert_into_empty(key, SC)
        return InsertOutcome("inserted", SC)
    except RegionFullError:
        idx = store.select_victim(SC, None, policy)
        victim = store.owners[idx]
        store.evict(idx)
        store.insert_into_empty(key, SC)
        return InsertOutcome("replaced", SC, victim_tenant=victim)


def static_insert(store: SlotStore, key: Key, policy: str = LRU) -> InsertOutcome:
    """LRU/FCFS confined to the tenant's own partition."""
    tenant = key[0]
    region = dc_region(tenant)
    if tenant not in store.layout.dc_sizes:
        raise UnknownTenantError(f"tenant {tenant!r} has no partition")
    if store.lookup(key) is not None:
        return InsertOutcome("hit", region)
    try:
        store.insert_into_empty(key, region)
        return InsertOutcome("inserted", region)
    except RegionFullError:
        store.evict_victim(region, tenant, policy)
        store.insert_into_empty(key, region)
        return InsertOutcome("replaced", region, victim_tenant=tenant)
