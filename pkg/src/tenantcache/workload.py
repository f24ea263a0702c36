"""Seeded multi-tenant access stream generation from phased Zipfian descriptors.

Each tenant draws items from a Zipf popularity law whose exponent can change
at configured transaction indices.  Tenants are interleaved by a deterministic
weighted round-robin so that identical seeds reproduce identical streams.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, NamedTuple, Sequence

import numpy as np

DEFAULT_UNIVERSE = 100_000

_BATCH = 8192


class WorkloadError(ValueError):
    """Invalid workload description or sampling argument."""


def zipf_pmf(universe_size: int, alpha: float) -> np.ndarray:
    """Zipf probability vector over ranks 0..universe_size-1.

    P(rank r) = (r+1)^-alpha / sum_j (j+1)^-alpha.  alpha=0 is uniform.
    """
    if universe_size < 1:
        raise WorkloadError("universe_size must be >= 1")
    if alpha < 0:
        raise WorkloadError("alpha must be >= 0")
    ranks = np.arange(1, universe_size + 1, dtype=np.float64)
    weights = ranks ** -alpha
    return weights / weights.sum()


def sample_item(pmf: np.ndarray, rng: np.random.Generator) -> int:
    """Draw one rank from pmf by inverse-CDF sampling."""
    cdf = np.cumsum(pmf)
    return int(np.searchsorted(cdf, rng.random(), side="right"))


@dataclass(frozen=True)
class WorkloadPhase:
    """One segment of a tenant's access pattern, starting at a global txn index."""

    alpha: float
    start_txn: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise WorkloadError("phase alpha must be >= 0")
        if self.start_txn < 0:
            raise WorkloadError("phase start_txn must be >= 0")


@dataclass
class TenantWorkload:
    tenant_id: int
    universe_size: int = DEFAULT_UNIVERSE
    phases: Sequence[WorkloadPhase] = (WorkloadPhase(alpha=1.0),)
    active_from: int = 0
    active_until: int | None = None
    weight: int = 1

    def __post_init__(self):
        if self.universe_size < 1:
            raise WorkloadError("universe_size must be >= 1")
        if self.weight < 1:
            raise WorkloadError("weight must be >= 1")
        if self.active_until is not None and not self.active_from < self.active_until:
            raise WorkloadError("active_from must be < active_until")
        if not self.phases:
            raise WorkloadError("at least one phase is required")
        starts = [p.start_txn for p in self.phases]
        if starts != sorted(set(starts)):
            raise WorkloadError("phase start_txn values must be strictly increasing")
        if starts[0] != 0:
            raise WorkloadError("first phase must have start_txn = 0")

    def active_at(self, txn: int) -> bool:
        if txn < self.active_from:
            return False
        return self.active_until is None or txn < self.active_until

    def alpha_at(self, txn: int) -> float:
        alpha = self.phases[0].alpha
        for phase in self.phases:
            if phase.start_txn <= txn:
                alpha = phase.alpha
            else:
                break
        return alpha


class AccessEvent(NamedTuple):
    txn: int
    tenant_id: int
    item: int

    @property
    def key(self) -> tuple[int, int]:
        """Tenant-namespaced cache key."""
        return (self.tenant_id, self.item)


def _tenant_entropy(tenant_id) -> int:
    if isinstance(tenant_id, (int, np.integer)):
        return int(tenant_id) & 0xFFFFFFFF
    return zlib.crc32(str(tenant_id).encode())


class _TenantSampler:
    """Per-tenant item sampler with its own RNG stream.

    Uniform draws are buffered in batches and mapped through the CDF of the
    phase in force; a phase switch re-maps the unconsumed tail so that the
    underlying uniform stream (and hence determinism) is unaffected.
    """

    def __init__(self, workload: TenantWorkload, master_seed: int):
        self.workload = workload
        seq = np.random.SeedSequence(
            (master_seed & 0xFFFFFFFFFFFFFFFF, _tenant_entropy(workload.tenant_id))
        )
        self._rng = np.random.default_rng(seq)
        self._alpha: float | None = None
        self._cdf: np.ndarray | None = None
        self._uniforms = np.empty(0)
        self._items = np.empty(0, dtype=np.int64)
        self._pos = 0

    def _set_phase(self, alpha: float) -> None:
        self._alpha = alpha
        cdf = np.cumsum(zipf_pmf(self.workload.universe_size, alpha))
        cdf[-1] = 1.0  # guard against rounding shortfall
        self._cdf = cdf
        if self._pos < len(self._uniforms):
            tail = self._uniforms[self._pos:]
            self._items[self._pos:] = np.searchsorted(cdf, tail, side="right")

    def draw(self, txn: int) -> int:
        alpha = self.workload.alpha_at(txn)
        if alpha != self._alpha:
            self._set_phase(alpha)
        if self._pos >= len(self._uniforms):
            self._uniforms = self._rng.random(_BATCH)
            self._items = np.searchsorted(self._cdf, self._uniforms, side="right")
            self._pos = 0
        item = int(self._items[self._pos])
        self._pos += 1
        return item


def generate_stream(
    workloads: Iterable[TenantWorkload],
    total_txns: int,
    seed: int = 0,
) -> Iterator[AccessEvent]:
    """Yield total_txns events, interleaving tenants by weighted round-robin.

    A tenant with weight w takes w consecutive turns per rotation over the
    active set (ordered by tenant id).  Activation changes take effect at the
    event where the txn counter crosses the boundary; if no tenant is active
    the schedule jumps ahead to the next activation while emitted txn indices
    stay consecutive.
    """
    workloads = list(workloads)
    if total_txns < 0:
        raise WorkloadError("total_txns must be >= 0")
    if not workloads:
        raise WorkloadError("at least one workload is required")
    by_id = {}
    for w in workloads:
        if w.tenant_id in by_id:
            raise WorkloadError(f"duplicate tenant_id {w.tenant_id}")
        by_id[w.tenant_id] = w
    ids = sorted(by_id)
    samplers = {i: _TenantSampler(by_id[i], seed) for i in ids}

    bounds = sorted(
        {w.active_from for w in workloads}
        | {w.active_until for w in workloads if w.active_until is not None}
    )
    skew = 0  # schedule-time offset accumulated over inactive stretches
    cur: int | None = None
    remaining = 0
    active: list[int] = []
    bi = 0

    for txn in range(total_txns):
        sched = txn + skew
        if txn == 0 or (bi < len(bounds) and bounds[bi] <= sched):
            while bi < len(bounds) and bounds[bi] <= sched:
                bi += 1
            active = [i for i in ids if by_id[i].active_at(sched)]
            if cur not in active:
                remaining = 0
            if not active:
                future = [by_id[i].active_from for i in ids if by_id[i].active_from > sched]
                if not future:
                    return
                skew += min(future) - sched
                sched = txn + skew
                while bi < len(bounds) and bounds[bi] <= sched:
                    bi += 1
                active = [i for i in ids if by_id[i].active_at(sched)]
                remaining = 0
        if remaining <= 0:
            cur = _next_after(active, cur)
            remaining = by_id[cur].weight
        remaining -= 1
        yield AccessEvent(txn, cur, samplers[cur].draw(sched))


def _next_after(active: list[int], cur: int | None) -> int:
    """Next tenant after cur in cyclic id order; smallest id when cur is unset."""
    if cur is None:
        return active[0]
    for i in active:
        if i > cur:
            return i
    return active[0]


def write_trace(events: Iterable[AccessEvent], out: str | IO[str]) -> None:
    """Export events as ASCII lines `txn,tenant_id,item`."""
    own = isinstance(out, str)
    fh = open(out, "w") if own else out
    try:
        for ev in events:
            fh.write(f"{ev.txn},{ev.tenant_id},{ev.item}\n")
    finally:
        if own:
            fh.close()


def read_trace(src: str | IO[str]) -> list[AccessEvent]:
    own = isinstance(src, str)
    fh = open(src) if own else src
    try:
        events = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            txn, tenant_id, item = line.split(",")
            events.append(AccessEvent(int(txn), int(tenant_id), int(item)))
        return events
    finally:
        if own:
            fh.close()
