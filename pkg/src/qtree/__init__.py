"""Transport efficiency of continuous-time quantum walks on tree networks."""

__version__ = "0.1.0"

from .efficiency import (
    EfficiencyReport,
    KappaFit,
    TimeSeries,
    avg_f_sft,
    chi_dendrimer_inf,
    chi_exact,
    chi_lb_dendrimer_inf,
    chi_lb_vicsek_inf,
    chi_lower_from_density,
    chi_sft_finite,
    chi_sft_infinite,
    chi_structural,
    chi_vicsek_inf,
    default_time_grid,
    efficiency_report,
    kappa_fit,
    mean_return_probability_series,
    return_amplitude_series,
    rho_star_structural,
    time_average,
    time_series,
    zeta,
)
from .ensemble import (
    ESTIMATORS,
    EnsembleConfig,
    EnsembleResult,
    SweepRow,
    realization_seed,
    run_ensemble,
    sweep,
    sweep_csv_text,
    write_sweep_csv,
)
from .errors import (
    DegenerateAverageError,
    IncompletePotentialError,
    InvalidParameterError,
    NoParentsError,
    OutOfDomainError,
    QtreeError,
    SizeLimitError,
    UnsupportedExactModeError,
)
from .graphs import (
    StructuralStats,
    TreeGraph,
    edge_list_text,
    generate_chain,
    generate_dendrimer,
    generate_sft,
    generate_star,
    generate_vicsek,
    parse_edge_list_text,
    read_edge_list,
    structural_stats,
    validate_tree,
    write_edge_list,
)
from .spectral import (
    ADJACENCY,
    CONNECTIVITY,
    DENSE_SOLVER_LIMIT,
    EigenSystem,
    Hamiltonian,
    Potential,
    Spectrum,
    bin_degeneracies,
    build_hamiltonian,
    custom_potential,
    default_degeneracy_tol,
    eigendecompose,
    leaf_pair_eigenstates,
    multiplicity_exact,
    spectrum_csv_text,
    write_spectrum_csv,
)
