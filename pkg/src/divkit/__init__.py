"""Divergences, scoring rules, sufficiency, portfolios, and free energy on
finite probability simplices."""

from .generators import (
    ActionFamily,
    Generator,
    GradientUndefinedError,
    affine_equivalent,
    bregman_divergence,
    burg,
    code_length_family,
    compensation_gap,
    generator_by_name,
    kraft_sum,
    negentropy,
    regret_from_actions,
    squared_norm,
    tabulated,
)
from .portfolio import (
    Market,
    NonConvergenceError,
    Portfolio,
    doubling_rate,
    fair_horse_race,
    is_horse_race,
    kkt_residual,
    load_market,
    regret_and_bound,
    simulate_wealth,
    solve_log_optimal,
)
from .scoring import (
    LocalRule,
    ScoringRule,
    brier_rule,
    burg_rule,
    divergence_from_rule,
    expected_score,
    extract_local_rule,
    linear_rule,
    log_rule,
    properness_witness,
    rule_from_generator,
)
from .simplex import Kernel, MixtureWeights, ProbVec, apply_kernel, entropy, kl_divergence, mixture
from .sufficiency import (
    KernelPair,
    SufficiencyReport,
    classify_divergence,
    divergence_by_name,
    f_invariance_gap,
    invariance_gap,
    merge_split_pair,
    reblock_pair,
    recovery_search,
    uniformize_tail_pair,
)
from .thermo import (
    BOLTZMANN_K,
    EnergyLevels,
    HeatBath,
    extractable_energy,
    free_energy_identity_gap,
    gibbs_state,
)

__version__ = "0.1.0"
