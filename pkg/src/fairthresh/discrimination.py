"""Pairwise subgroup discrimination scores and dominance identification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import FairthreshError


@dataclass(frozen=True)
class DiscriminationScore:
    """Utility gap between a reference subgroup and a compared subgroup.

    ``value`` is reference minus compared, so a positive value means the
    compared subgroup fares worse.
    """

    reference_subgroup: str
    compared_subgroup: str
    value: float
    tau_reference: float
    tau_compared: float


@dataclass(frozen=True)
class DominanceResult:
    dominating_subgroup: str
    utilities: Mapping[str, float]
    tie_broken: bool


def discrimination_score(u_compared: float, u_reference: float) -> float:
    """Gap ``u_reference - u_compared``; positive means the compared
    subgroup is discriminated against."""
    return u_reference - u_compared


def pairwise_scores(
    utilities: Mapping[str, float],
    thresholds: Mapping[str, float],
    reference: str,
) -> dict[str, DiscriminationScore]:
    """Score every subgroup against ``reference`` at the given thresholds."""
    return {
        g: DiscriminationScore(
            reference_subgroup=reference,
            compared_subgroup=g,
            value=discrimination_score(utilities[g], utilities[reference]),
            tau_reference=thresholds[reference],
            tau_compared=thresholds[g],
        )
        for g in utilities
        if g != reference
    }


def find_dominating(
    utilities: Mapping[str, float],
    support: Mapping[str, int] | None = None,
) -> DominanceResult:
    """Identify the subgroup whose utility is at least every other's.

    Exact ties are broken by larger positive-prediction support when
    ``support`` is given, then by lexicographic subgroup id, and flagged.
    """
    if len(utilities) < 2:
        raise FairthreshError("dominance needs at least 2 subgroups")
    best = max(utilities.values())
    contenders = sorted(g for g, u in utilities.items() if u == best)
    tie_broken = len(contenders) > 1
    if tie_broken and support is not None:
        top = max(support.get(g, 0) for g in contenders)
        contenders = [g for g in contenders if support.get(g, 0) == top]
    return DominanceResult(
        dominating_subgroup=contenders[0],
        utilities=dict(utilities),
        tie_broken=tie_broken,
    )
