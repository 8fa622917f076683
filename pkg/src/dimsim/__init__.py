from .config import parse_config
from .estimators import estimate
from .pipeline import compute_dim, emit, rmse, run_benchmark
from .simulation import delta_v, simulate_outer, time_grid
