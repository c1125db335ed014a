"""Bayesian precision-matrix estimation with banded Cholesky priors."""

from .bandwidth import (
    BandwidthPosterior,
    ResamplingSelection,
    default_log_k_prior,
    log_marginal_k,
    select_k_posterior_mode,
    select_k_resampling,
)
from .bayes import (
    PosteriorModel,
    PriorConfig,
    estimate_p_loss,
    fit_posterior,
    ig_cdf,
    plug_in_estimator,
    posterior_mean_omega,
    sample_posterior,
)
from .competitors import bl_banded_estimator, graphical_mle_banded
from .errors import (
    BandcholError,
    DegenerateResidual,
    EmptyGrid,
    ExperimentFailed,
    NonFiniteLogPosterior,
    SingularClique,
    SingularDesign,
    SingularMatrix,
    TruncationMassZero,
)
from .mcd import (
    CholeskyFactor,
    ClassReport,
    GammaSpec,
    class_membership,
    compose,
    decompose,
    population_coefficients,
)
from .simulate import (
    ExperimentConfig,
    ExperimentResult,
    RepRecord,
    TrueModelSpec,
    evaluate_losses,
    make_ar1_cov,
    make_ar4_precision,
    make_fgn_cov,
    run_experiment,
    sample_gaussian,
)
from .stats import BandedRegressionStats, banded_regression, gram_matrix, sample_moments

__version__ = "0.1.0"
