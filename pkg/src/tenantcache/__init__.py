"""Trace-driven simulator for multi-tenant slot caches with per-tenant
hit-rate requirements: global/static baselines, max-min fair and selfish
sharing, and the hybrid dedicated/shared architecture."""

from .cache_core import (
    FCFS,
    LRU,
    SC,
    CacheError,
    InsertOutcome,
    NoCandidateError,
    RegionFullError,
    RegionLayout,
    SlotStore,
    UnknownTenantError,
    dc_region,
    global_insert,
    static_insert,
)
from .harness import (
    POLICIES,
    CapacitySweepResult,
    ConfigurationError,
    InfeasibleTargetError,
    SampleRecord,
    Scenario,
    TenantSample,
    TenantSpec,
    capacity_sweep,
    compare_policies,
    min_slots_for_target,
    run_scenario,
    scenario_from_json,
    scenario_to_json,
    suggest_dc_size,
    write_records_csv,
    write_sweep_csv,
)
from .metrics import (
    GapReport,
    HitRateTracker,
    MetricsError,
    Requirement,
    check_objectives,
    ewma_update,
    gap_report,
)
from .sharing import (
    FAIR,
    SELFISH,
    SharingStrategy,
    TenantShareState,
    hybrid_insert,
    maxmin_insert,
    predict_hit_rate,
    select_victim_tenant,
    selfish_eligible,
    selfish_select_victim,
)
from .workload import (
    AccessEvent,
    TenantWorkload,
    WorkloadError,
    WorkloadPhase,
    generate_stream,
    read_trace,
    sample_item,
    write_trace,
    zipf_pmf,
)

__version__ = "0.1.0"
