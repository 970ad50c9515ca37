"""Train/validation/test split construction with 5-fold cross-validation.

Two scenarios are supported:

* stratified — a holdout test set drawn proportionally from every
  axle-count stratum, the remainder dealt into five folds that are each
  stratified as well (within one passage per stratum);
* axle-count holdout ("dgps") — the folds cover exactly the passages with
  the most common axle count and everything else goes to the test set,
  which probes generalisation to unseen train types.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataset, SingleClassDataset, TieForModalCount

N_FOLDS = 5
#: Default holdout fraction for the stratified scenario.
DEFAULT_TEST_FRACTION = 1.0 / 6.0
#: Strata smaller than this are merged into the nearest axle-count stratum
#: (five folds plus a test share need at least six representatives).
MIN_STRATUM_SIZE = 6


class Scenario(enum.Enum):
    STRATIFIED = "stratified"
    DGPS = "dgps"


@dataclass(frozen=True)
class SplitPlan:
    """Deterministic assignment of passage ids to a test set and five folds."""

    scenario: Scenario
    seed: int
    test_ids: tuple[str, ...]
    folds: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        assert len(self.folds) == N_FOLDS
        pools = [set(f) for f in self.folds] + [set(self.test_ids)]
        total = sum(len(s) for s in pools)
        assert len(set().union(*pools)) == total, "overlapping split members"

    def fold_val_ids(self, fold: int) -> tuple[str, ...]:
        return self.folds[fold]

    def fold_train_ids(self, fold: int) -> tuple[str, ...]:
        ids: list[str] = []
        for i, f in enumerate(self.folds):
            if i != fold:
                ids.extend(f)
        return tuple(sorted(ids))

    def all_ids(self) -> tuple[str, ...]:
        ids = list(self.test_ids)
        for f in self.folds:
            ids.extend(f)
        return tuple(sorted(ids))

    def to_json(self) -> str:
        payload = {
            "scenario": self.scenario.value,
            "seed": self.seed,
            "test": list(self.test_ids),
            "folds": [list(f) for f in self.folds],
        }
        return json.dumps(payload, indent=1, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "SplitPlan":
        payload = json.loads(text)
        return SplitPlan(
            scenario=Scenario(payload["scenario"]),
            seed=int(payload["seed"]),
            test_ids=tuple(payload["test"]),
            folds=tuple(tuple(f) for f in payload["folds"]),
        )


def _axle_index(dataset) -> dict[str, int]:
    if hasattr(dataset, "axle_count_index"):
        return dataset.axle_count_index()
    return dict(dataset)


def _strata(index: dict[str, int]) -> dict[int, list[str]]:
    strata: dict[int, list[str]] = {}
    for pid in sorted(index):
        strata.setdefault(index[pid], []).append(pid)
    return strata


def _merge_small_strata(strata: dict[int, list[str]]) -> dict[int, list[str]]:
    """Fold strata below MIN_STRATUM_SIZE into their nearest axle count."""
    merged = {k: list(v) for k, v in strata.items()}
    while len(merged) > 1:
        small = [k for k in merged if len(merged[k]) < MIN_STRATUM_SIZE]
        if not small:
            break
        k = min(small, key=lambda c: (len(merged[c]), c))
        others = [c for c in merged if c != k]
        dest = min(others, key=lambda c: (abs(c - k), c))
        merged[dest] = sorted(merged[dest] + merged[k])
        del merged[k]
    return merged


def _deal_into_folds(ids: list[str], start: int) -> list[list[str]]:
    folds: list[list[str]] = [[] for _ in range(N_FOLDS)]
    for i, pid in enumerate(ids):
        folds[(start + i) % N_FOLDS].append(pid)
    return folds


def stratified_split(dataset, test_fraction: float = DEFAULT_TEST_FRACTION, seed: int = 0) -> SplitPlan:
    """Proportional holdout per axle-count stratum plus five stratified folds.

    The test set size is ``round(N * test_fraction)`` overall, apportioned to
    strata by largest remainder so every stratum stays within one passage of
    proportionality.
    """
    index = _axle_index(dataset)
    if not index:
        raise EmptyDataset("cannot split an empty dataset")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")

    strata = _merge_small_strata(_strata(index))
    keys = sorted(strata)
    rng = np.random.Generator(np.random.PCG64(seed))

    n_total = len(index)
    n_test = round(n_total * test_fraction)
    ideals = {k: len(strata[k]) * test_fraction for k in keys}
    base = {k: min(math.floor(ideals[k]), len(strata[k])) for k in keys}
    leftover = n_test - sum(base.values())
    by_remainder = sorted(keys, key=lambda k: (-(ideals[k] - base[k]), k))
    for k in by_remainder:
        if leftover <= 0:
            break
        if base[k] < len(strata[k]):
            base[k] += 1
            leftover -= 1

    test_ids: list[str] = []
    folds: list[list[str]] = [[] for _ in range(N_FOLDS)]
    for si, k in enumerate(keys):
        members = list(strata[k])
        order = rng.permutation(len(members))
        shuffled = [members[i] for i in order]
        test_ids.extend(shuffled[: base[k]])
        rest = shuffled[base[k]:]
        for fi, chunk in enumerate(_deal_into_folds(rest, start=si % N_FOLDS)):
            folds[fi].extend(chunk)

    return SplitPlan(
        scenario=Scenario.STRATIFIED,
        seed=seed,
        test_ids=tuple(sorted(test_ids)),
        folds=tuple(tuple(sorted(f)) for f in folds),
    )


def dgps_split(dataset, seed: int = 0, modal_axles: int | None = None) -> SplitPlan:
    """Folds over the modal axle count; every other passage goes to test.

    A tie for the most common axle count raises TieForModalCount unless a
    ``modal_axles`` override picks the winner explicitly.
    """
    index = _axle_index(dataset)
    if not index:
        raise EmptyDataset("cannot split an empty dataset")
    strata = _strata(index)
    if len(strata) < 2:
        raise SingleClassDataset("axle-count holdout needs at least two distinct axle counts")

    if modal_axles is None:
        best = max(len(v) for v in strata.values())
        candidates = sorted(k for k, v in strata.items() if len(v) == best)
        if len(candidates) > 1:
            raise TieForModalCount(
                f"axle counts {candidates} share the maximum frequency {best}; pass an explicit modal count"
            )
        modal_axles = candidates[0]
    elif modal_axles not in strata:
        raise SingleClassDataset(f"no passages with axle count {modal_axles}")

    rng = np.random.Generator(np.random.PCG64(seed))
    members = list(strata[modal_axles])
    order = rng.permutation(len(members))
    shuffled = [members[i] for i in order]
    folds = _deal_into_folds(shuffled, start=0)
    test_ids = sorted(pid for pid, count in index.items() if count != modal_axles)

    return SplitPlan(
        scenario=Scenario.DGPS,
        seed=seed,
        test_ids=tuple(test_ids),
        folds=tuple(tuple(sorted(f)) for f in folds),
    )
