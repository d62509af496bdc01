"""Rank-based multiple contrast tests, ANOVA-type tests, wild bootstrap and
Fieller ratio intervals for split-plot repeated-measures designs."""

__version__ = "0.1.0"

from .ats import AtsResult, ats_infer, ats_statistic
from .bootstrap import BootstrapConfig, boot_ats, boot_mctp, bootstrap_distributions, wild_replicate
from .contrasts import ContrastFamily, build_contrast, factorial_contrast, projection, read_contrast_tsv
from .covariance import Estimates, estimate_all, sigma_hat, tau_hat, v_hat
from .data import Dataset, Design, ingest_long_csv, midranks, to_long_csv
from .distributions import QuantileConfig, chi_square_scaled_pvalue, equicoordinate_quantile
from .effects import PairwiseEffects, pairwise_effects, relative_effects
from .errors import DegenerateStatistic, DenominatorNearZero, RankMctpError, ValidationError
from .mctp import McTpResult, mctp_infer
from .ratio import RatioInterval, RatioSpec, fieller_scis, read_ratio_tsv
from .simulation import SimConfig, StudyReport, generate, power_study, type1_study

__all__ = [
    "AtsResult", "BootstrapConfig", "ContrastFamily", "Dataset", "DegenerateStatistic", "DenominatorNearZero",
    "Design", "Estimates", "McTpResult", "PairwiseEffects", "QuantileConfig", "RankMctpError", "RatioInterval",
    "RatioSpec", "SimConfig", "StudyReport", "ValidationError", "ats_infer", "ats_statistic", "boot_ats",
    "boot_mctp", "bootstrap_distributions", "build_contrast", "chi_square_scaled_pvalue", "equicoordinate_quantile",
    "estimate_all", "factorial_contrast", "fieller_scis", "generate", "ingest_long_csv", "mctp_infer", "midranks",
    "pairwise_effects", "power_study", "projection", "read_contrast_tsv", "read_ratio_tsv", "relative_effects",
    "sigma_hat", "tau_hat", "to_long_csv", "type1_study", "v_hat", "wild_replicate",
]
