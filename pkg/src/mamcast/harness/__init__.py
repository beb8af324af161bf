from mamcast.harness.config import ExperimentConfig
from mamcast.harness.experiments import TrialRecord, fpa_baseline, run_experiment
from mamcast.harness.figures import emit_figure_data

__all__ = ["ExperimentConfig", "TrialRecord", "fpa_baseline", "run_experiment", "emit_figure_data"]
