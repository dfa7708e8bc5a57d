"""Exception types shared across the package."""

from __future__ import annotations


class FairthreshError(Exception):
    """Base class for all errors raised by fairthresh."""


class EmptyInputError(FairthreshError):
    """An operation received an empty instance collection or dataset."""


class UndefinedUtilityError(FairthreshError):
    """The chosen utility measure has a zero denominator for these counts.

    Carries the utility kind and the offending counts so callers can decide
    whether to abort (baselines) or skip the candidate (threshold search).
    """

    def __init__(self, kind, counts, subgroup=None):
        self.kind = kind
        self.counts = counts
        self.subgroup = subgroup
        where = f" for subgroup {subgroup!r}" if subgroup is not None else ""
        super().__init__(
            f"{kind.value} is undefined{where} at tau={counts.tau}: "
            f"tp={counts.tp} fp={counts.fp} tn={counts.tn} fn={counts.fn}"
        )


class DatasetError(FairthreshError):
    """A dataset file or its manifest failed validation."""


class PartitionError(FairthreshError):
    """A subgroup partition could not be built or is invalid."""


class ConfigError(FairthreshError):
    """A run configuration or optimizer configuration is invalid."""
