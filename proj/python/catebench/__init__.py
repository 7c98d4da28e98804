"""Treatment-effect estimation with one- and two-variable T-learners."""

from ._core import (
    CatebenchError,
    Cohort,
    GroundTruth,
    LearnerConfig,
    OlsFit,
    RegressionForest,
    RegressionTree,
    Scenario,
    StudentRecord,
    TLearner2Model,
    TLearnerModel,
    biased_scenario,
    default_probe_x2,
    dose_response_scenario,
    field_study_scenario,
    fit_forest,
    fit_t_learner,
    fit_t_learner2,
    fit_tree,
    generate,
    load_cohort,
    ols_fit,
    run_cli,
    save_cohort,
    summarize,
    tau_dose_regression,
    to_deviation,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
