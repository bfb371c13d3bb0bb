"""Performative effects of algorithmic recourse: SCM simulation, recourse
solvers and the shift / acceptance-rate experiment harness."""

from ._core import (
    Error,
    InputError,
    analytic,
    audit,
    d_separated,
    merge_reports,
    run,
    sample,
    setting_names,
    version,
)

__all__ = [
    "Error",
    "InputError",
    "analytic",
    "audit",
    "d_separated",
    "merge_reports",
    "run",
    "sample",
    "setting_names",
    "version",
]
