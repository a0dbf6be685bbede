EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_COMPUTATION_FAILURE = 2

# Initial imputation methods, keyed by their CLI names
METHOD_TLM = "tlm"
METHOD_LSE = "lse"
METHOD_DMD = "dmd"
METHOD_EDMD = "edmd"
METHOD_GPR = "gpr"
METHOD_SAR_FORWARD = "sarf"
METHOD_SAR_BACKWARD = "sarb"
METHOD_LINEAR = "linear"

INITIAL_METHODS = (
    METHOD_TLM,
    METHOD_LSE,
    METHOD_DMD,
    METHOD_EDMD,
    METHOD_GPR,
    METHOD_SAR_FORWARD,
    METHOD_SAR_BACKWARD,
)

DYNAMICS_VARIANTS = (METHOD_LSE, METHOD_DMD, METHOD_EDMD)

SCHEME_SPLINE = "cubic_spline"
SCHEME_PCHIP = "pchip"
SCHEMES = (SCHEME_SPLINE, SCHEME_PCHIP)
SCHEME_FLAGS = {"s": SCHEME_SPLINE, "p": SCHEME_PCHIP}

CRITERION_AICC = "aicc"
CRITERION_BIC = "bic"
CRITERIA = (CRITERION_AICC, CRITERION_BIC)

SIDE_BEFORE = "before"
SIDE_AFTER = "after"

DIRECTION_FORWARD = "forward"
DIRECTION_BACKWARD = "backward"

# Step 0
MIN_GAP_DEFAULT = 3

# Synthetic generator
RANDOM_WALK_WINDOW_S = 0.5
AMPLITUDE_RATIO_FLOOR = 0.05
AMPLITUDE_RATIO_CEILING = 0.999
AMPLITUDE_MODULATION_DEPTH = 0.2
AMPLITUDE_SMOOTHING_S = 1.0
MISSING_MARGIN_FRACTION = 0.05
MIN_INTERVAL_FRACTION = 0.05
PLACEMENT_RETRIES = 1000

# Time-frequency analysis
WINDOW_CYCLES_DEFAULT = 7.0
FREQUENCY_BINS_DEFAULT = 4096
WINDOW_SUPPORT_LEVEL = 1e-2
WINDOW_TRUNCATION_LEVEL = 1e-6
SPECTRAL_SUPPORT_LEVEL = 1e-2
DESHAPE_GAMMA_DEFAULT = 0.3
DESHAPE_THRESHOLD_QUANTILE = 0.05
FRAME_CHUNK = 256
FB_FACTOR = 10.0
FUNDAMENTAL_BAND_FACTOR = 4.0
REFINE_VICINITY_FRACTION = 0.25
HARMONIC_VICINITY_FRACTION = 0.5
DEGREE_CAP = 10
DEGREE_SEGMENT_CYCLES = 2.0
RSS_FLOOR = 1e-12

# Initial imputers
TEMPLATE_CYCLES = 3
SUBSIGNAL_CYCLES = 3
EMBEDDING_RATIO = 2.5
SEASONAL_CYCLES_DEFAULT = 3
PINV_RCOND = 1e-8
DIVERGENCE_FACTOR = 1e3
GPR_NOISE_RATIO = 1e-2
GPR_JITTER_START = 1e-8
GPR_JITTER_MAX = 1e-2
SAR_MAX_P = 4
SAR_MAX_SEASONAL_P = 2
SAR_HISTORY_CYCLES = 8
SAR_STABILITY_LIMIT = 1.05
MEDIAN_HEURISTIC_SAMPLES = 200

# Evaluation
WILCOXON_EXACT_MAX_N = 12
SIGNIFICANCE_ALPHA = 0.05
COMPARISONS_PER_CELL = 3
NOISELESS = None
