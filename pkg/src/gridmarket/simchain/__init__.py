from .ledger import LedgerError, SessionLedger, SessionRecord, apply_results
from .outputs import HEADERS, Recorder
from .run import (ChainRunner, ModuleError, RunResult, build_forecasts, deliverable,
                  derive_seed, run_chain)
from .scenario import (DAO, FORECAST, IDO, MC, MODULES, PO, ForecastSpec, PriceSpec, Scenario,
                       ScenarioError, Step, load_scenario, parse_scenario, scenario_problems,
                       validate_scenario)

__all__ = [name for name in dir() if not name.startswith("_")]
