from polymer.cosmo.evolve import (
    DecoupledLevel,
    RankDeficient,
    SingularModel,
    SolutionBasis,
    WaveFunction,
    combine,
    evolve,
    solution_basis,
    step_backward,
    step_forward,
    unit_seed,
)
from polymer.cosmo.model import (
    SHIPPED_MODELS,
    VACUUM,
    CoefficientModel,
    MatterModel,
    ModelError,
    build_counterexample,
    build_example_model,
    load_model,
    save_model,
    shipped_model,
)
from polymer.cosmo.preclassical import (
    NonUniqueMinimum,
    oscillation_measure,
    preclassicality_scan,
    ray_distance,
    select_preclassical,
    select_preclassical_detail,
)
from polymer.cosmo.validate import ValidationReport, validate_model
from polymer.cosmo.wdw import wdw_limit_report, wdw_limit_residual
