"""
Runtime defaults for cce_dynamics.

Reads environment variables with defaults.
"""

import os
from pathlib import Path

# Treeplex projection (Dykstra) tolerance and iteration cap
PROJECTION_TOL = float(os.getenv("CCE_DYNAMICS_PROJECTION_TOL", "1e-10"))
PROJECTION_MAX_ITER = int(os.getenv("CCE_DYNAMICS_PROJECTION_MAX_ITER", "100000"))

# Spectral norm power iteration
POWER_ITER_TOL = float(os.getenv("CCE_DYNAMICS_POWER_ITER_TOL", "1e-10"))
POWER_ITER_MAX_ITER = int(os.getenv("CCE_DYNAMICS_POWER_ITER_MAX_ITER", "200000"))

LOG_LEVEL = os.getenv("CCE_DYNAMICS_LOG_LEVEL", "WARNING").upper()
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Benchmark defaults (learning rate picked by the spectral-norm rule)
BENCH_HORIZON = int(os.getenv("CCE_DYNAMICS_BENCH_HORIZON", "5000"))
BENCH_OUT_DIR = Path(os.getenv("CCE_DYNAMICS_BENCH_OUT_DIR", "out/bench"))
