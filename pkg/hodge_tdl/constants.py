import os


class CFGSTR:
    """
    This class is used to store the config keys used in the
    hodge-tdl learning and synthesis config files.
    """

    VERSION = "version"

    # learning
    METHOD = "method"
    K0 = "k0"
    J = "J"
    M = "M"
    GAMMA = "gamma"
    LAMBDA = "lambda"
    MU = "mu"
    IMAX = "imax"
    RTDL_ITERS = "rtdlIters"
    D = "d"
    EPS = "eps"
    BOUNDS = "bounds"
    SEED = "seed"
    TOL_ZERO = "tolZero"
    KKT_TOL = "kktTol"
    RES_TOL = "resTol"
    EARLY_EXIT_TOL = "earlyExitTol"
    CRITERION = "criterion"
    FREEZE_UPPER = "freezeUpper"
    MAX_LEN = "maxLen"
    REFIT_ROUNDS = "refitRounds"

    # synthesis
    N_VERTICES = "nVertices"
    N_EDGES = "nEdges"
    Q_TR = "qTr"
    T = "T"
    T_TRAIN = "tTrain"
    T_TEST = "tTest"
    K0_GEN = "k0Gen"
    N_DATASETS = "nDatasets"


class FILES:
    """
    File names of the standard dataset directory layout.
    """

    SIGNALS = "signals.csv"
    EDGES = "edges.txt"
    POLYGONS = "polygons.txt"
    TRUTH = "truth.json"
    MANIFEST = "manifest.json"
    MODEL = "model.json"
    TRACE = "trace.csv"
    RESULTS_CSV = "results.csv"
    RESULTS_JSON = "results.json"


THREADS = max(1, int(os.environ.get("HODGE_THREADS", "1")))
LOG_LEVEL = os.environ.get("HODGE_LOG_LEVEL", "WARNING")

# numerical defaults
TOL_ZERO = 1e-8
RANK_TOL = 1e-8
KKT_TOL = 1e-6
RES_TOL = 1e-12
GAMMA = 1e-7
LAMBDA = 0.045
EARLY_EXIT_TOL = 1e-8
EPS_FLOOR = 1e-6
EPS_MARGIN = 1e-2
REFIT_ROUNDS = 1
BINARIZE_AT = 0.5
