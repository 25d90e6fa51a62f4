//! Ranking from paired comparisons with generalized Bradley-Terry models.
//!
//! Sparse comparison data often has no maximum likelihood estimate: a team
//! that never lost has infinite merit. Adding a small `epsilon` to the win
//! counts of pairs that actually met restores existence whenever the
//! comparison graph is connected, and keeps the ranking of the unperturbed
//! model when that one exists.
//!
//! The crate fits five models (Bradley-Terry, Rao-Kupper, Davidson,
//! home-field and David), checks the connectivity conditions under which
//! each estimate exists, and computes MAP estimates under Gamma priors.
//!
//! ```
//! use btrank::{fit, Dataset, Model, ModelSpec, SolverConfig};
//! use ndarray::array;
//!
//! let wins = array![[0, 2, 0, 1], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 2, 0]];
//! let teams = (1..=4).map(|i| i.to_string()).collect();
//! let data = Dataset::from_win_matrix(teams, wins, None).unwrap();
//! let result = fit(&ModelSpec::improved(Model::BradleyTerry, 0.1), &data, &SolverConfig::default()).unwrap();
//! assert!((result.merits[1] - 0.524).abs() < 1e-3);
//! ```

pub mod connectivity;
pub mod error;
pub mod ingestion;
pub mod likelihood;
pub mod perturbation;
pub mod ranking;
pub mod sim;
pub mod solver;
pub mod types;

pub use connectivity::{
    check_condition_a, check_condition_b, check_condition_c, witness_holds, Verdict,
};
pub use error::{Error, Location, Result};
pub use ingestion::{load_bytes, load_path, GameRecord, InputFormat, Outcome};
pub use likelihood::{gradient, loglik, probabilities, Objective, Venue};
pub use perturbation::{auto_epsilon, perturb, Epsilon};
pub use ranking::{
    extract_ranking, kendall_tau_distance, monotone_ratio_check, score_ranking, select_seeds,
    sweep_epsilon, LeagueStructure, RatioReport, SeedingRule, SweepReport,
};
pub use sim::{run_consistency, ConsistencyConfig, ConsistencyReport};
pub use solver::{fit, fit_bt_matrix, fit_map_em, maximize_concave, MapPriorSpec, SolverConfig};
pub use types::{
    Condition, CountMatrices, Dataset, FitResult, Model, ModelSpec, Normalization,
    ParameterPoint, PartitionWitness, PerturbationSpec, PerturbedCounts, Ranking, StopReason,
    RANK_TOL,
};
