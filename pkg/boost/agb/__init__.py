import os

from dotenv import load_dotenv

# Must load environment variables before other imports.
load_dotenv()

LOG_LEVEL = (os.getenv("AGB_LOG_LEVEL") or "INFO").upper()   # Log level of the command line
STORAGE_DIR = os.getenv("AGB_STORAGE_DIR") or "storage"       # Default output directory

try:
    WORKERS = int(os.getenv("AGB_WORKERS") or "1")            # Benchmark processes
except ValueError:
    raise ValueError("AGB_WORKERS must be an integer.")

if WORKERS < 1:
    raise ValueError("AGB_WORKERS must be at least 1.")

from .data import (
    Dataset,
    SplitSpec,
    Task,
    load_csv,
    save_csv,
    split_dataset,
)
from .synthetic import (
    DesignKind,
    ModelSpec,
    generate_model,
    sample_design,
)
from .losses import (
    Loss,
    LossKind,
    get_loss,
)
from .trees import (
    SplitCandidate,
    Tree,
    best_split,
    fit_tree,
)
from .boosting import (
    Algorithm,
    NesterovSchedule,
    TrainConfig,
    TrainTrace,
    nesterov_schedule,
    train,
)
from .model import (
    BoostedModel,
    deserialize,
    load_model,
    save_model,
    serialize,
)
from .evaluation import (
    MetricKind,
    SelectionResult,
    evaluate_model,
    metric,
    risk_curve,
    select_t_star,
)
from .extensions.error_handler import (
    BoostingError,
    UserError,
)

__version__ = "1.0"
