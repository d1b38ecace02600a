from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from loguru import logger

from input_output.traces import TraceSet

RULE_MISSING = 'rule1'
RULE_INDIFFERENCE = 'rule2'
RULE_INVARIANCE = 'rule3'


@dataclass(frozen=True)
class FilterReport:
    kept: tuple
    dropped: dict = field(default_factory=dict)  # feature -> rule
    rule2_skipped: bool = False


def is_missing_throughout(trace_set: TraceSet, name: str) -> bool:
    """Rule 1: the feature is null for a whole trip"""
    return any(np.isnan(trace.column(name)).all() for trace in trace_set)


def is_invariant(groups: dict, name: str) -> bool:
    """Rule 3: every driver shows a zero sum and zero standard deviation"""
    for traces in groups.values():
        values = _non_null(traces, name)
        if values.size == 0:
            continue
        if np.sum(values) != 0 or np.std(values) != 0:
            return False
    return True


def is_indifferent(groups: dict, name: str, tolerance: float) -> bool:
    """Rule 2: per-driver means, scaled to the feature's global range, have near-zero variance"""
    per_driver = [_non_null(traces, name) for traces in groups.values()]
    per_driver = [values for values in per_driver if values.size]
    if len(per_driver) < 2:
        return False
    all_values = np.concatenate(per_driver)
    low, high = np.min(all_values), np.max(all_values)
    means = np.array([np.mean(values) for values in per_driver])
    if high > low:
        scaled = (means - low) / (high - low)
    else:
        scaled = np.zeros_like(means)
    return float(np.var(scaled)) <= tolerance


def apply_filter_rules(
    trace_set: TraceSet, features: Sequence[str], indifference_tolerance: float = 1e-6, evaluate_rule2: bool = True
) -> FilterReport:
    """
    Drops features matching any of the three statistical rules, checked in the order 1, 3, 2.

    Parameters:
    - trace_set: traces grouped by their driver_label (unlabeled traces form one group)
    - features: candidate features in canonical order
    - evaluate_rule2: Rule 2 also needs at least two driver groups, otherwise it is skipped

    Returns:
    - FilterReport with the kept features (order preserved) and one rule per dropped feature
    """
    groups = trace_set.by_driver()
    rule2_active = evaluate_rule2 and len(groups) >= 2
    if not rule2_active:
        logger.warning(f'Rule 2 (feature indifference) skipped: {len(groups)} driver group(s) available')

    kept = []
    dropped = {}
    for name in features:
        if is_missing_throughout(trace_set, name):
            dropped[name] = RULE_MISSING
        elif is_invariant(groups, name):
            dropped[name] = RULE_INVARIANCE
        elif rule2_active and is_indifferent(groups, name, indifference_tolerance):
            dropped[name] = RULE_INDIFFERENCE
        else:
            kept.append(name)

    for name, rule in dropped.items():
        logger.info(f'Dropping {name}: {rule}')

    return FilterReport(kept=tuple(kept), dropped=dropped, rule2_skipped=not rule2_active)


def _non_null(traces: list, name: str) -> np.ndarray:
    values = np.concatenate([trace.column(name) for trace in traces])
    return values[~np.isnan(values)]
