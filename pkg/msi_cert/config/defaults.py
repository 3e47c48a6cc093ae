"""
Default configuration values for MSI Cert
"""

# Delay operator
DEFAULT_EIGEN_THRESHOLD = 2000   # above this h̄ the Frobenius bound replaces λ_max(E_h̄)

# Numerical tolerances
DEFAULT_PSD_TOLERANCE = 1e-9     # scaled by the matrix norm
DEFAULT_EPSILON = 1e-7           # strict LMI margin, scaled by the constant term
DEFAULT_RESIDUAL_FACTOR = 10.0   # witness re-check may exceed the solver residual by this much
DEFAULT_CONDITION_LIMIT = 1e12   # P_AB condition number guard
DEFAULT_SCHUR_MARGIN = 1e-9
DEFAULT_QMI_TOLERANCE = 1e-9

# Solver
DEFAULT_SOLVER = "CLARABEL"
FALLBACK_SOLVER = "SCS"

# Analysis defaults
DEFAULT_GRID_SIZE = 2048
DEFAULT_MSI_CAP = 10_000
DEFAULT_SEARCH = "exponential"
DEFAULT_GAIN_MODE = "exact"
DEFAULT_WORKERS = 1

# Experiments
DEFAULT_SEED = 42
DEFAULT_INPUT_RANGE = (-10.0, 10.0)

# Logging
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_LOG_FORMAT = "%(asctime)s %(levelname)s [%(name)s] | %(message)s"

# File paths
CONFIG_DIRNAME = ".msi_cert"
CONFIG_FILENAME = "msi_cert_config.json"
LOG_FILENAME = "msi_cert.log"
