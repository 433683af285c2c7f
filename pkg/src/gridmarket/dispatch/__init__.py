from .config import DispatchConfig
from .history import History, init_from_history
from .imbalance import ImbalanceVars, build_imbalance
from .problems import solve_dao_storage, solve_dao_thermal, solve_portfolio
from .result import DispatchResult, UnitPlan
from .storage import StorageVars, build_storage
from .thermal import ThermalVars, build_thermal
from .units import fragment_prices
