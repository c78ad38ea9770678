"""Pipelined RV32I simulator with injectable anomalies."""

from .anomalies import ANOMALY_IDS, CATALOG, GOLDEN, AnomalySpec, UnknownAnomaly, inject
from .machine import (BatchResult, MachineState, Scheduler, TraceEntry, dump_trace,
                      run_batch, run_to_finish, step)

__all__ = [
    "ANOMALY_IDS", "AnomalySpec", "BatchResult", "CATALOG", "GOLDEN", "MachineState",
    "Scheduler", "TraceEntry", "UnknownAnomaly", "dump_trace", "inject", "run_batch",
    "run_to_finish", "step",
]
