"""Grant-free activity detection and channel estimation over a large
mixed-resolution receive array: link-level simulator, two-stage OAMP solver,
baselines and a Monte-Carlo harness."""

from .config import ConfigError, SystemConfig, get_profile, load_config
from .harness import TrialMetrics, compute_metrics, run_trial, sweep
from .tsoamp import DetectionResult, run_tsoamp

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "SystemConfig", "get_profile", "load_config",
    "TrialMetrics", "compute_metrics", "run_trial", "sweep",
    "DetectionResult", "run_tsoamp", "__version__",
]
