"""Numerical audit of the inequality chain plus exact desk-scale checks."""

from .checks import (
    NOISES,
    check_pdf_closeness,
    check_single_message,
    component_spectrum,
    forest_constraint_set,
    kkl_sweep,
    martingale_check,
    misc_inequalities,
    preimage_set,
    random_reduced_set,
)
from .sums import STANDARD_TUPLES, AuditParams, AuditReport, AuditRow, eval_S, eval_T, eval_sum, rhs_log

__all__ = [
    "NOISES", "STANDARD_TUPLES", "AuditParams", "AuditReport", "AuditRow", "check_pdf_closeness",
    "check_single_message", "component_spectrum", "eval_S", "eval_T", "eval_sum", "forest_constraint_set",
    "kkl_sweep", "martingale_check", "misc_inequalities", "preimage_set", "random_reduced_set", "rhs_log",
]
