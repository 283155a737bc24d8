# src/scenario_io/__init__.py
"""
Scenarios and runs

Components:
- field_io: the plain-text `# field <name>` format
- config_loader: dotenv-style scenario documents and the Config they describe
- config_validator: the (H1)-(H8) rule table, issue lists and `--explain`
- scenario: spaces, material and the equilibrium initial state of a Config
- output_writer: series.csv, field snapshots, manifest.json and run statistics
- audit_battery: property checks on a configured scenario
- run_orchestrator: the run, check, sweep and audit workflows
"""

from .field_io import FLOAT_FORMAT, format_float, read_field, read_fields, write_field, write_fields
from .config_loader import (
    Config,
    load_config,
    load_config_file,
    parse_config,
    parse_setting,
    resolve_field,
)
from .config_validator import RULES, ensure_valid, explain, validate_config, weak_coupling_issues
from .scenario import Scenario, prepare_scenario
from .output_writer import (
    SERIES_COLUMNS,
    OutputError,
    OutputWriter,
    RunManifest,
    RunStats,
    snapshot_fields,
    write_outputs,
)
from .audit_battery import AuditCheck, AuditReport, run_audit_battery
from .run_orchestrator import (
    RunResult,
    SweepOutcome,
    audit_scenario,
    check_scenario,
    run_scenario,
    sweep,
    sweep_configs,
)

__all__ = [
    'FLOAT_FORMAT', 'format_float', 'read_field', 'read_fields', 'write_field', 'write_fields',
    'Config', 'load_config', 'load_config_file', 'parse_config', 'parse_setting', 'resolve_field',
    'RULES', 'ensure_valid', 'explain', 'validate_config', 'weak_coupling_issues',
    'Scenario', 'prepare_scenario', 'SERIES_COLUMNS', 'OutputError', 'OutputWriter', 'RunManifest',
    'RunStats', 'snapshot_fields', 'write_outputs', 'AuditCheck', 'AuditReport', 'run_audit_battery',
    'RunResult', 'SweepOutcome', 'audit_scenario', 'check_scenario', 'run_scenario', 'sweep', 'sweep_configs',
]
