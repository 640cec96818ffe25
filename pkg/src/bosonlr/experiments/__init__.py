"""Experiment drivers: light-cone scans and exact small-system audits."""
from .audits import (PreconditionError, badstate_audit, bounds_audit, duhamel_inequality_audit,
                     interpolation_audit, moment_conservation_audit, operator_inequality_audit,
                     truncation_error_audit)
from .fitting import fit_power_law
from .lightcone import CSV_FIELDS, ScanRecord, lightcone_report, lightcone_scan
from .report import AuditReport, Check

__all__ = [
    "AuditReport", "Check", "CSV_FIELDS", "PreconditionError", "ScanRecord",
    "badstate_audit", "bounds_audit", "duhamel_inequality_audit", "fit_power_law",
    "interpolation_audit", "lightcone_report", "lightcone_scan", "moment_conservation_audit",
    "operator_inequality_audit", "truncation_error_audit",
]
