from __future__ import annotations

from collections.abc import Iterable

import numpy as np

from hbn_spin_phonon.domain.report import AGGREGATE_LABEL, DatasetReport, ModelRow


def aggregate_models(reports: Iterable[DatasetReport]) -> list[ModelRow]:
    """
    Mean ± standard deviation of every (model, parameter) across datasets.

    Sample std (ddof=1) for two or more datasets, 0 for a single dataset or identical
    values. Row order follows first appearance.
    """
    values: dict[tuple[str, str], list[float]] = {}
    for report in reports:
        for row in report.models:
            values.setdefault((row.model, row.parameter), []).append(row.value)

    out: list[ModelRow] = []
    for (model, parameter), vs in values.items():
        arr = np.asarray(vs, dtype=float)
        std = float(np.std(arr, ddof=1)) if arr.size > 1 and np.ptp(arr) > 0 else 0.0
        out.append(ModelRow(dataset=AGGREGATE_LABEL, model=model, parameter=parameter, value=float(arr.mean()), sigma=std))
    return out
