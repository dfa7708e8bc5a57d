"""Per-subgroup threshold search that narrows utility gaps to the dominant.

The search space is a finite threshold grid, so every objective is a step
function of the thresholds and the optimum is found by scanning candidates.
All comparisons are float comparisons of count ratios; with at most ~1e6
instances those ratios differ by at least ~1e-12 whenever they differ at all,
far above double rounding error, so float comparison is exact here. Gap sums
are accumulated in sorted-subgroup-id order so ties resolve identically no
matter how the search is executed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from decimal import Decimal
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .discrimination import DominanceResult, find_dominating
from .errors import ConfigError, UndefinedUtilityError
from .metrics import (
    ConfusionCounts,
    Dataset,
    ScoreIndex,
    ScoredInstance,
    UtilityKind,
    index_subgroups,
    utility,
)
from .partition import SubgroupPartition

# Above this many rows the pooled-constraint fallback stops enumerating the
# full candidate product and repairs greedily instead.
PRODUCT_ENUMERATION_CAP = 20_000_000


class Mode(str, Enum):
    FIXED_DOMINANT = "fixed_dominant"
    FREE_DOMINANT = "free_dominant"


class Aggregate(str, Enum):
    MAX_GAP = "max_gap"
    SUM_GAP = "sum_gap"


@dataclass(frozen=True)
class GridSpec:
    """Candidate-threshold specification.

    ``uniform`` grids are generated as exact decimal multiples of the step so
    reported thresholds read cleanly (0.65, not 0.6500000000000001).
    """

    kind: str
    step: float | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind == "uniform":
            if self.step is None or not 0.0 < self.step <= 0.5:
                raise ConfigError(
                    f"uniform grid step must lie in (0, 0.5], got {self.step}"
                )
        elif self.kind == "explicit":
            if not self.values:
                raise ConfigError("explicit grid needs at least one threshold")
            if any(not 0.0 <= v <= 1.0 for v in self.values):
                raise ConfigError("explicit grid thresholds must lie in [0, 1]")
            object.__setattr__(self, "values", tuple(sorted(set(self.values))))
        elif self.kind != "observed_scores":
            raise ConfigError(f"unknown grid kind {self.kind!r}")

    @classmethod
    def uniform(cls, step: float) -> "GridSpec":
        return cls(kind="uniform", step=step)

    @classmethod
    def observed(cls) -> "GridSpec":
        return cls(kind="observed_scores")

    @classmethod
    def explicit(cls, values: Iterable[float]) -> "GridSpec":
        return cls(kind="explicit", values=tuple(values))


@dataclass(frozen=True)
class OptimizerConfig:
    tau_base: float = 0.5
    grid: GridSpec = GridSpec.uniform(0.05)
    mode: Mode = Mode.FIXED_DOMINANT
    utility: UtilityKind = UtilityKind.PPV
    aggregate_objective: Aggregate = Aggregate.MAX_GAP

    def __post_init__(self):
        if not 0.0 <= self.tau_base <= 1.0:
            raise ConfigError(f"tau_base must lie in [0, 1], got {self.tau_base}")


@dataclass(frozen=True)
class ThresholdAssignment:
    """Adjusted threshold per subgroup plus the baseline it was derived from."""

    per_subgroup: Mapping[str, float]
    tau_base: float

    def __post_init__(self):
        for subgroup, tau in self.per_subgroup.items():
            if not 0.0 <= tau <= 1.0:
                raise ConfigError(
                    f"threshold {tau} for subgroup {subgroup!r} outside [0, 1]"
                )


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    subgroup: str | None
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationResult:
    feasible: bool
    checks: tuple[ConstraintCheck, ...]


@dataclass(frozen=True)
class BaselineReport:
    tau_base: float
    utility: UtilityKind
    per_subgroup_counts: Mapping[str, ConfusionCounts]
    per_subgroup_utility: Mapping[str, float]
    overall_counts: ConfusionCounts
    overall_utility: float
    dominance: DominanceResult


@dataclass(frozen=True)
class OptimizationReport:
    utility: UtilityKind
    mode: Mode
    tau_base: float
    grid: GridSpec
    aggregate_objective: Aggregate
    dominant: str
    dominant_tie_broken: bool
    subgroup_sizes: Mapping[str, int]
    baseline_overall: float
    baseline_per_subgroup: Mapping[str, float]
    adjusted_overall: float
    adjusted_per_subgroup: Mapping[str, float]
    assignment: ThresholdAssignment
    discrimination_before: Mapping[str, float]
    discrimination_after: Mapping[str, float]
    validation: ValidationResult


def net_diff(baseline: float, adjusted: float) -> float:
    return adjusted - baseline


def pct_diff(baseline: float, adjusted: float) -> float | None:
    """Net change divided by the baseline value; None when the baseline is 0."""
    if baseline == 0.0:
        return None
    return (adjusted - baseline) / baseline


def candidate_thresholds(config: OptimizerConfig, dataset: Dataset) -> tuple[float, ...]:
    """Materialize the candidate threshold list for ``config`` over ``dataset``."""
    grid = config.grid
    if grid.kind == "uniform":
        step = Decimal(str(grid.step))
        count = int(Decimal(1) / step)
        values = [float(step * i) for i in range(count + 1)]
        if values[-1] < 1.0:
            values.append(1.0)
        return tuple(values)
    if grid.kind == "observed_scores":
        observed = sorted(set(dataset.scores.tolist()) | {0.0, 1.0})
        return tuple(observed)
    return grid.values


# ---------------------------------------------------------------------------
# Internal candidate tables


def _ratio(tp, pospred, n_pos: int, size: int, kind: UtilityKind):
    """(numerator, denominator) of ``kind`` from positive-side sweep counts."""
    if kind is UtilityKind.PPV:
        return tp, pospred
    if kind is UtilityKind.TPR:
        return tp, n_pos if np.isscalar(tp) else np.full_like(tp, n_pos)
    if kind is UtilityKind.NPV:
        negpred = size - pospred
        tn = negpred - (n_pos - tp)
        return tn, negpred
    # accuracy
    correct = 2 * tp - pospred + size - n_pos
    return correct, size if np.isscalar(tp) else np.full_like(tp, size)


@dataclass
class _CandidateTable:
    """Per-subgroup utilities over the candidate grid (plus tau_base)."""

    subgroup: str
    taus: np.ndarray
    dist: np.ndarray
    tp: np.ndarray
    pospred: np.ndarray
    u: np.ndarray  # NaN where the utility is undefined
    base_idx: int
    n_pos: int
    size: int


def _build_table(
    subgroup: str,
    index: ScoreIndex,
    candidates: Sequence[float],
    tau_base: float,
    kind: UtilityKind,
) -> _CandidateTable:
    taus = sorted(set(candidates) | {tau_base})
    taus_arr = np.array(taus, dtype=float)
    tp, pospred = index.sweep(taus_arr)
    num, den = _ratio(tp, pospred, index.n_pos, index.size, kind)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(den > 0, num / np.where(den > 0, den, 1), np.nan)
    return _CandidateTable(
        subgroup=subgroup,
        taus=taus_arr,
        dist=np.abs(taus_arr - tau_base),
        tp=tp.astype(np.int64),
        pospred=pospred.astype(np.int64),
        u=u,
        base_idx=taus.index(tau_base),
        n_pos=index.n_pos,
        size=index.size,
    )


def _pick_best(table: _CandidateTable, floor: float, ceiling: float) -> int:
    """Index of the sandwich-feasible candidate with maximal utility.

    Ties go to the smallest |tau - tau_base|, then the smallest tau. The
    baseline threshold is always feasible, so a result always exists; when
    nothing beats the baseline utility this returns the baseline index.
    """
    with np.errstate(invalid="ignore"):
        mask = ~np.isnan(table.u) & (table.u >= floor) & (table.u <= ceiling)
    idx = np.flatnonzero(mask)
    order = np.lexsort((table.taus[idx], table.dist[idx], -table.u[idx]))
    return int(idx[order[0]])


def optimize_subgroup(
    instances: Iterable[ScoredInstance],
    utility_ceiling: float,
    utility_floor: float,
    candidates: Sequence[float],
    tau_base: float,
    kind: UtilityKind = UtilityKind.PPV,
) -> tuple[float, float]:
    """Best threshold for one subgroup against a fixed reference utility.

    Scans ``candidates`` (plus ``tau_base``) for the defined utility closest
    to ``utility_ceiling`` from below while staying at or above
    ``utility_floor``; falls back to ``tau_base`` when no candidate improves
    on the baseline. Returns ``(threshold, adjusted utility)``.
    """
    if utility_floor > utility_ceiling:
        raise ConfigError("utility floor exceeds ceiling")
    items = list(instances)
    index = ScoreIndex(
        np.array([i.score for i in items], dtype=float),
        np.array([i.label for i in items], dtype=np.int64),
    )
    table = _build_table("", index, candidates, tau_base, kind)
    pick = _pick_best(table, utility_floor, utility_ceiling)
    return float(table.taus[pick]), float(table.u[pick])


# ---------------------------------------------------------------------------
# Baseline


def baseline_report(
    dataset: Dataset, partition: SubgroupPartition, config: OptimizerConfig
) -> BaselineReport:
    """Per-subgroup and pooled utilities at the baseline threshold, plus the
    dominating subgroup. Aborts naming the subgroup if any utility is
    undefined at tau_base."""
    indexes = index_subgroups(dataset, partition)
    per_counts: dict[str, ConfusionCounts] = {}
    per_utility: dict[str, float] = {}
    for subgroup in sorted(partition.subgroup_ids):
        counts = indexes[subgroup].counts_at(config.tau_base)
        per_counts[subgroup] = counts
        try:
            per_utility[subgroup] = utility(counts, config.utility)
        except UndefinedUtilityError as err:
            raise UndefinedUtilityError(err.kind, err.counts, subgroup=subgroup) from None
    overall = _sum_counts(per_counts.values(), config.tau_base)
    dominance = find_dominating(
        per_utility,
        support={g: c.tp + c.fp for g, c in per_counts.items()},
    )
    return BaselineReport(
        tau_base=config.tau_base,
        utility=config.utility,
        per_subgroup_counts=per_counts,
        per_subgroup_utility=per_utility,
        overall_counts=overall,
        overall_utility=utility(overall, config.utility),
        dominance=dominance,
    )


def _sum_counts(counts: Iterable[ConfusionCounts], tau: float) -> ConfusionCounts:
    tp = fp = tn = fn = 0
    for c in counts:
        tp += c.tp
        fp += c.fp
        tn += c.tn
        fn += c.fn
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn, tau=tau)


# ---------------------------------------------------------------------------
# Search


@dataclass
class _InnerSolution:
    picks: dict[str, int]  # non-dominant subgroup -> candidate index
    gaps: list[float]  # aligned with sorted non-dominant ids
    pooled_utility: float
    feasible: bool  # pooled floor satisfiable at all


def _pooled_utility(
    tables: Mapping[str, _CandidateTable],
    picks: Mapping[str, int],
    kind: UtilityKind,
) -> float:
    tp = sum(int(tables[g].tp[i]) for g, i in picks.items())
    pospred = sum(int(tables[g].pospred[i]) for g, i in picks.items())
    n_pos = sum(t.n_pos for t in tables.values())
    size = sum(t.size for t in tables.values())
    num, den = _ratio(tp, pospred, n_pos, size, kind)
    return num / den if den > 0 else float("nan")


def _solve_for_ceiling(
    tables: Mapping[str, _CandidateTable],
    dominant: str,
    dominant_idx: int,
    baseline: BaselineReport,
    config: OptimizerConfig,
) -> _InnerSolution:
    """Solve every non-dominant subgroup for a fixed dominant threshold.

    Per-subgroup searches are independent unless the pooled-utility floor
    binds; in that case the full candidate product is enumerated (or, beyond
    PRODUCT_ENUMERATION_CAP rows, repaired greedily toward the baseline).
    """
    ceiling = float(tables[dominant].u[dominant_idx])
    others = sorted(g for g in tables if g != dominant)
    pooled_floor = baseline.overall_utility

    picks = {
        g: _pick_best(tables[g], baseline.per_subgroup_utility[g], ceiling)
        for g in others
    }
    picks[dominant] = dominant_idx
    pooled = _pooled_utility(tables, picks, config.utility)
    if pooled >= pooled_floor:
        return _InnerSolution(
            picks={g: picks[g] for g in others},
            gaps=[ceiling - float(tables[g].u[picks[g]]) for g in others],
            pooled_utility=pooled,
            feasible=True,
        )

    feasible_idx = {}
    for g in others:
        t = tables[g]
        with np.errstate(invalid="ignore"):
            mask = (
                ~np.isnan(t.u)
                & (t.u >= baseline.per_subgroup_utility[g])
                & (t.u <= ceiling)
            )
        feasible_idx[g] = np.flatnonzero(mask)

    rows = 1
    for g in others:
        rows *= len(feasible_idx[g])
    if rows <= PRODUCT_ENUMERATION_CAP:
        return _enumerate_product(
            tables, dominant, dominant_idx, others, feasible_idx, ceiling,
            pooled_floor, config,
        )
    warnings.warn(
        "pooled-utility constraint is binding and the candidate product is too "
        "large to enumerate; repairing greedily toward the baseline",
        stacklevel=2,
    )
    return _greedy_repair(
        tables, dominant, dominant_idx, others, picks, ceiling, pooled_floor, config
    )


def _enumerate_product(
    tables, dominant, dominant_idx, others, feasible_idx, ceiling, pooled_floor, config
) -> _InnerSolution:
    """Exhaustive scan of the per-subgroup candidate product under the pooled
    floor, ranked by (aggregate, other aggregate, per-subgroup tie chain)."""
    grids = np.meshgrid(*[feasible_idx[g] for g in others], indexing="ij")
    flat = [g.ravel() for g in grids]
    n_rows = flat[0].size

    tp = np.full(n_rows, int(tables[dominant].tp[dominant_idx]), dtype=np.int64)
    pospred = np.full(n_rows, int(tables[dominant].pospred[dominant_idx]), dtype=np.int64)
    for g, idx in zip(others, flat):
        tp = tp + tables[g].tp[idx]
        pospred = pospred + tables[g].pospred[idx]
    n_pos = sum(t.n_pos for t in tables.values())
    size = sum(t.size for t in tables.values())
    num, den = _ratio(tp, pospred, n_pos, size, config.utility)
    with np.errstate(divide="ignore", invalid="ignore"):
        pooled = np.where(den > 0, num / np.where(den > 0, den, 1), np.nan)
    ok = pooled >= pooled_floor
    if not ok.any():
        return _InnerSolution(picks={}, gaps=[], pooled_utility=float("nan"), feasible=False)

    rows = np.flatnonzero(ok)
    gap_cols = [ceiling - tables[g].u[idx[rows]] for g, idx in zip(others, flat)]
    max_gap = gap_cols[0].copy()
    sum_gap = gap_cols[0].copy()
    for col in gap_cols[1:]:
        max_gap = np.maximum(max_gap, col)
        sum_gap = sum_gap + col
    if config.aggregate_objective is Aggregate.MAX_GAP:
        primary, secondary = max_gap, sum_gap
    else:
        primary, secondary = sum_gap, max_gap

    keys = [primary, secondary]
    for g, idx in zip(others, flat):
        keys.append(tables[g].dist[idx[rows]])
        keys.append(tables[g].taus[idx[rows]])
    winner = rows[np.lexsort(tuple(reversed(keys)))[0]]

    picks = {g: int(idx[winner]) for g, idx in zip(others, flat)}
    gaps = [ceiling - float(tables[g].u[picks[g]]) for g in others]
    all_picks = dict(picks)
    all_picks[dominant] = dominant_idx
    return _InnerSolution(
        picks=picks,
        gaps=gaps,
        pooled_utility=_pooled_utility(tables, all_picks, config.utility),
        feasible=True,
    )


def _greedy_repair(
    tables, dominant, dominant_idx, others, picks, ceiling, pooled_floor, config
) -> _InnerSolution:
    """Revert subgroups to the baseline threshold, best pooled gain first,
    until the pooled floor holds. Used only beyond the enumeration cap."""
    picks = dict(picks)
    moved = [g for g in others if picks[g] != tables[g].base_idx]
    while True:
        pooled = _pooled_utility(tables, picks, config.utility)
        if pooled >= pooled_floor:
            return _InnerSolution(
                picks={g: picks[g] for g in others},
                gaps=[ceiling - float(tables[g].u[picks[g]]) for g in others],
                pooled_utility=pooled,
                feasible=True,
            )
        if not moved:
            return _InnerSolution(picks={}, gaps=[], pooled_utility=pooled, feasible=False)
        best_g = None
        best_gain = -np.inf
        for g in moved:
            trial = dict(picks)
            trial[g] = tables[g].base_idx
            gain = _pooled_utility(tables, trial, config.utility)
            if gain > best_gain:
                best_gain, best_g = gain, g
        picks[best_g] = tables[best_g].base_idx
        moved.remove(best_g)


def optimize(
    dataset: Dataset, partition: SubgroupPartition, config: OptimizerConfig
) -> OptimizationReport:
    """Run the full three-step procedure and return the report.

    Step 1 computes baselines and the dominating subgroup; step 2 searches
    the candidate grid per subgroup (and over the dominant's own threshold in
    free-dominant mode); step 3 revalidates every constraint on the result.
    """
    baseline = baseline_report(dataset, partition, config)
    candidates = candidate_thresholds(config, dataset)
    indexes = index_subgroups(dataset, partition)
    tables = {
        g: _build_table(g, indexes[g], candidates, config.tau_base, config.utility)
        for g in partition.subgroup_ids
    }
    dominant = baseline.dominance.dominating_subgroup
    others = sorted(g for g in tables if g != dominant)

    if config.mode is Mode.FIXED_DOMINANT:
        solution = _solve_for_ceiling(
            tables, dominant, tables[dominant].base_idx, baseline, config
        )
        assert solution.feasible  # the all-baseline assignment always qualifies
        dominant_idx = tables[dominant].base_idx
    else:
        t_dom = tables[dominant]
        base_u = baseline.per_subgroup_utility[dominant]
        with np.errstate(invalid="ignore"):
            dom_feasible = np.flatnonzero(~np.isnan(t_dom.u) & (t_dom.u >= base_u))
        best_key = None
        solution = None
        dominant_idx = t_dom.base_idx
        for j in dom_feasible:
            inner = _solve_for_ceiling(tables, dominant, int(j), baseline, config)
            if not inner.feasible:
                continue
            max_gap = max(inner.gaps)
            sum_gap = 0.0
            for gap in inner.gaps:
                sum_gap += gap
            if config.aggregate_objective is Aggregate.MAX_GAP:
                key = (max_gap, sum_gap, float(t_dom.dist[j]), float(t_dom.taus[j]))
            else:
                key = (sum_gap, max_gap, float(t_dom.dist[j]), float(t_dom.taus[j]))
            if best_key is None or key < best_key:
                best_key = key
                solution = inner
                dominant_idx = int(j)
        assert solution is not None  # tau_base is always feasible

    per_tau = {dominant: float(tables[dominant].taus[dominant_idx])}
    adjusted_u = {dominant: float(tables[dominant].u[dominant_idx])}
    adjusted_counts = {dominant: _counts_from_table(tables[dominant], dominant_idx)}
    for g in others:
        pick = solution.picks[g]
        per_tau[g] = float(tables[g].taus[pick])
        adjusted_u[g] = float(tables[g].u[pick])
        adjusted_counts[g] = _counts_from_table(tables[g], pick)

    assignment = ThresholdAssignment(
        per_subgroup={g: per_tau[g] for g in sorted(per_tau)}, tau_base=config.tau_base
    )
    overall_adjusted = _sum_counts(adjusted_counts.values(), float("nan"))
    report = OptimizationReport(
        utility=config.utility,
        mode=config.mode,
        tau_base=config.tau_base,
        grid=config.grid,
        aggregate_objective=config.aggregate_objective,
        dominant=dominant,
        dominant_tie_broken=baseline.dominance.tie_broken,
        subgroup_sizes={g: tables[g].size for g in sorted(tables)},
        baseline_overall=baseline.overall_utility,
        baseline_per_subgroup={
            g: baseline.per_subgroup_utility[g] for g in sorted(tables)
        },
        adjusted_overall=utility(overall_adjusted, config.utility),
        adjusted_per_subgroup={g: adjusted_u[g] for g in sorted(tables)},
        assignment=assignment,
        discrimination_before={
            g: baseline.per_subgroup_utility[dominant] - baseline.per_subgroup_utility[g]
            for g in others
        },
        discrimination_after={g: adjusted_u[dominant] - adjusted_u[g] for g in others},
        validation=ValidationResult(feasible=True, checks=()),
    )
    return replace(report, validation=validate(report, dataset, partition, config))


def _counts_from_table(table: _CandidateTable, idx: int) -> ConfusionCounts:
    tp = int(table.tp[idx])
    pospred = int(table.pospred[idx])
    fn = table.n_pos - tp
    return ConfusionCounts(
        tp=tp,
        fp=pospred - tp,
        fn=fn,
        tn=table.size - pospred - fn,
        tau=float(table.taus[idx]),
    )


def validate(
    report: OptimizationReport,
    dataset: Dataset,
    partition: SubgroupPartition,
    config: OptimizerConfig,
) -> ValidationResult:
    """Recompute every constraint on the report's assignment from raw counts.

    (a) each non-dominant subgroup's adjusted utility lies between its own
    baseline and the dominant's reference utility, (b) the pooled overall
    utility did not decrease (recomputed from pooled counts, not averaged),
    (c) the dominant's utility did not decrease.
    """
    indexes = index_subgroups(dataset, partition)
    kind = config.utility
    dominant = report.dominant
    checks: list[ConstraintCheck] = []

    base_counts = {g: indexes[g].counts_at(config.tau_base) for g in indexes}
    adj_counts = {
        g: indexes[g].counts_at(report.assignment.per_subgroup[g]) for g in indexes
    }
    base_u = {g: utility(base_counts[g], kind) for g in indexes}
    adj_u = {g: utility(adj_counts[g], kind) for g in indexes}

    reference = adj_u[dominant] if config.mode is Mode.FREE_DOMINANT else base_u[dominant]
    for g in sorted(indexes):
        if g == dominant:
            continue
        ok = base_u[g] <= adj_u[g] <= reference
        checks.append(
            ConstraintCheck(
                name="subgroup_utility_within_bounds",
                subgroup=g,
                passed=bool(ok),
                detail=f"{base_u[g]:.6f} <= {adj_u[g]:.6f} <= {reference:.6f}",
            )
        )

    pooled_base = utility(_sum_counts(base_counts.values(), config.tau_base), kind)
    pooled_adj = utility(_sum_counts(adj_counts.values(), float("nan")), kind)
    checks.append(
        ConstraintCheck(
            name="overall_utility_non_decreasing",
            subgroup=None,
            passed=bool(pooled_adj >= pooled_base),
            detail=f"{pooled_adj:.6f} >= {pooled_base:.6f}",
        )
    )
    checks.append(
        ConstraintCheck(
            name="dominant_utility_non_decreasing",
            subgroup=dominant,
            passed=bool(adj_u[dominant] >= base_u[dominant]),
            detail=f"{adj_u[dominant]:.6f} >= {base_u[dominant]:.6f}",
        )
    )
    return ValidationResult(
        feasible=all(c.passed for c in checks), checks=tuple(checks)
    )


def apply_thresholds(
    dataset: Dataset, partition: SubgroupPartition, assignment: ThresholdAssignment
) -> dict[str, int]:
    """Classify every instance with its subgroup's threshold, keyed by id."""
    partition.validate_against(dataset)
    missing = [g for g in partition.subgroup_ids if g not in assignment.per_subgroup]
    if missing:
        raise ConfigError(f"no threshold assigned for subgroups: {missing}")
    outcomes: dict[str, int] = {}
    for inst in dataset.instances:
        tau = assignment.per_subgroup[partition.assignment[inst.id]]
        outcomes[inst.id] = int(inst.score >= tau)
    return outcomes
