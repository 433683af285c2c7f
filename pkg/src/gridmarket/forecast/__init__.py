from .io import read_archive, read_matrix, read_series, write_archive, write_matrix
from .learn import (Archive, CopulaModel, ForecastModel, HorizonMarginal, NormalizationModel,
                    UpdateDistributions, fit_copula, fit_normalization, learn)
from .matrix import ForecastMatrix, extend_periodic, forecast_values
from .prices import (interpolate, intraday_price_forecast, price_sensitivity,
                     residual_demand_change)
from .simulate import make_rng, rmse_by_horizon, simulate

__all__ = [name for name in dir() if not name.startswith("_")]
