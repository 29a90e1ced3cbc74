# Radial tree spectral toolkit configuration

# Logging Configuration
LOG_LEVEL = "INFO"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_FILE = None  # e.g. "treespec.log" to also log to a file

# Report Settings
SCHEMA = "treespec/1"
DEFAULT_FORMAT = "json"
OUTPUT_FORMATS = ["json", "csv", "both"]
SUPPORTED_CONFIG_EXTENSIONS = [".json", ".toml"]
CSV_FLOAT_FORMAT = "%.17g"
SIGMA_AC_COLUMNS = ["E", "y", "re_m", "im_m", "radius", "class"]
BANDS_COLUMNS = ["band", "e_low", "e_high"]
REFLECTIONLESS_COLUMNS = ["E", "y", "defect"]
DECOMPOSE_COLUMNS = ["generation", "multiplicity", "origin", "atoms"]

# Geometry Settings
GEOMETRY_KINDS = ["explicit", "eventually-periodic", "substitution", "free", "random"]
DEFAULT_WINDOW_ATOMS = 200  # window used by `validate` for the loc norm
DEFAULT_ATOM_COUNT = 2000
DEFAULT_SEED = 0

# Numerical Tolerances
ATOM_TOL = 1e-12  # evaluation points closer than this to an atom are rejected
POSITION_TOL = 1e-9  # atom-position matching in the piece algebra
SERIES_THRESHOLD = 1e-4  # |z| * length**2 below this uses the power series
RESCALE_THRESHOLD = 1e150  # joint rescaling of propagated fundamental pairs
DEGENERATE_WRONSKIAN = 1e-300

# Weyl Disk Settings
DEFAULT_TOL = 1e-8
B_MAX_GAPS = 10_000  # default b_max = t + B_MAX_GAPS * gamma

# Spectral Settings
DEFAULT_Y_LADDER = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
EPS_LOW = 1e-4
EPS_HIGH = 1e4
LADDER_AC_EXPONENT = 0.25  # ac-like when Im m ~ y**p with |p| below this
RESOLVED_FRACTION = 0.5  # a rung counts when error_bound < RESOLVED_FRACTION * Im m
DEFAULT_GRID_POINTS = 500
DEFAULT_E_MIN = 0.0
DEFAULT_E_MAX = 10.0
BAND_XTOL = 1e-10
DEFAULT_MAX_GENERATION = 3

# Piece Algebra Settings
TILING_NODE_BUDGET = 1_000_000

# Parallel Sweep Settings
SWEEP_MAX_WORKERS = None  # None = number of available cores
