# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the insitu labelling and statistics core."""

from ._insitu import (
    LABELS,
    MECHANISMS,
    InsituError,
    Mechanism,
    ProtocolSession,
    chi2_sf,
    cochran_q,
    csv_labels,
    f_sf,
    mcnemar,
    mcnemar_exact_p,
    replay,
    replay_golden,
    rm_anova_f,
    simulate_csv,
    window_count,
)

__all__ = [
    "LABELS",
    "MECHANISMS",
    "InsituError",
    "Mechanism",
    "ProtocolSession",
    "chi2_sf",
    "cochran_q",
    "csv_labels",
    "f_sf",
    "mcnemar",
    "mcnemar_exact_p",
    "replay",
    "replay_golden",
    "rm_anova_f",
    "simulate_csv",
    "window_count",
]
