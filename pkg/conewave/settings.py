"""
Process-wide settings read from the environment (and an optional .env file).

Environment variables:
- LOG_LEVEL              : logging level for the CLI (default INFO)
- CONEWAVE_JOBS          : worker threads for sweeps (default: cpu count)
- CONEWAVE_OUTPUT_DIR    : default report directory (default "results")
- CONEWAVE_TAIL_TOL      : relative L2 tail allowed outside a radial grid (default 1e-8)
- CONEWAVE_MAX_NODES     : cap on refined quadrature nodes per transform (default 200000)
- CONEWAVE_KERNEL_CACHE  : number of kernel matrices kept in memory (default 8)
"""

import os

from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()
JOBS = int(os.environ.get("CONEWAVE_JOBS", str(os.cpu_count() or 1)))
OUTPUT_DIR = os.environ.get("CONEWAVE_OUTPUT_DIR", "results")
TAIL_TOL = float(os.environ.get("CONEWAVE_TAIL_TOL", "1e-8"))
MAX_NODES = int(os.environ.get("CONEWAVE_MAX_NODES", "200000"))
KERNEL_CACHE_SIZE = int(os.environ.get("CONEWAVE_KERNEL_CACHE", "8"))

# Oscillation resolution contract: quadrature nodes per period of the kernel.
NODES_PER_PERIOD = 6
