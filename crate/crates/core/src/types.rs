//! Domain types shared by every stage of the pipeline.
//!
//! Counts are stored per venue so that venue-aware models can read them
//! directly and venue-free models can use the symmetric sums:
//!
//! * `a_home[i][j]`: wins of `i` over `j` with `i` hosting,
//! * `a_away[i][j]`: wins of `i` over `j` with `j` hosting,
//! * `t_home[i][j]`: ties between `i` and `j` hosted by `i`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tie-group tolerance on the log-merit scale.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrices {
    pub a_home: Array2<u64>,
    pub a_away: Array2<u64>,
    pub t_home: Array2<u64>,
}

/// Venue-summed totals derived from [`CountMatrices`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Totals {
    /// `a_ij = a_home[i][j] + a_away[i][j]`
    pub wins: Array2<u64>,
    /// `t_ij = t_home[i][j] + t_home[j][i]` (symmetric)
    pub ties: Array2<u64>,
    /// `n_ij = a_ij + a_ji + t_ij` (symmetric)
    pub games: Array2<u64>,
    /// `n_{ij.i}`: games between `i` and `j` hosted by `i`
    pub hosted: Array2<u64>,
}

impl CountMatrices {
    pub fn zeros(t: usize) -> Self {
        Self {
            a_home: Array2::zeros((t, t)),
            a_away: Array2::zeros((t, t)),
            t_home: Array2::zeros((t, t)),
        }
    }

    pub fn num_teams(&self) -> usize {
        self.a_home.nrows()
    }

    pub fn derive_totals(&self) -> Totals {
        let t = self.num_teams();
        let wins = &self.a_home + &self.a_away;
        let ties = &self.t_home + &self.t_home.t();
        let games = &wins + &wins.t() + &ties;
        let hosted = Array2::from_shape_fn((t, t), |(i, j)| {
            self.a_home[[i, j]] + self.a_away[[j, i]] + self.t_home[[i, j]]
        });
        Totals {
            wins,
            ties,
            games,
            hosted,
        }
    }

    fn validate(&self) -> Result<()> {
        let t = self.num_teams();
        for (name, m) in [
            ("a_home", &self.a_home),
            ("a_away", &self.a_away),
            ("t_home", &self.t_home),
        ] {
            if m.dim() != (t, t) {
                return Err(Error::Shape(format!(
                    "{name} is {}x{}, expected {t}x{t}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if let Some(i) = (0..t).find(|&i| m[[i, i]] != 0) {
                return Err(Error::Shape(format!(
                    "{name}[{i}][{i}] is nonzero; a team cannot play itself"
                )));
            }
        }
        Ok(())
    }
}

/// Teams plus per-venue counts. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    teams: Vec<String>,
    counts: CountMatrices,
    venueless: bool,
}

impl Dataset {
    /// Builds a dataset, checking `t >= 2`, unique team ids, square shapes and
    /// zero diagonals.
    ///
    /// `venueless` marks data whose home/away split is synthetic (all wins
    /// stored in `a_home`); venue-aware checks and models refuse such data.
    pub fn new(teams: Vec<String>, counts: CountMatrices, venueless: bool) -> Result<Self> {
        let t = teams.len();
        if t < 2 {
            return Err(Error::Shape(format!("at least 2 teams required, got {t}")));
        }
        if counts.num_teams() != t || counts.a_home.ncols() != t {
            return Err(Error::Shape(format!(
                "{} team ids but count matrices are {}x{}",
                t,
                counts.a_home.nrows(),
                counts.a_home.ncols()
            )));
        }
        let mut seen = HashSet::new();
        for id in &teams {
            if !seen.insert(id.as_str()) {
                return Err(Error::Shape(format!("duplicate team id {id:?}")));
            }
        }
        counts.validate()?;
        Ok(Self {
            teams,
            counts,
            venueless,
        })
    }

    /// Venue-free dataset from a single win matrix (`wins[i][j]` = wins of
    /// `i` over `j`) and an optional symmetric tie matrix.
    pub fn from_win_matrix(
        teams: Vec<String>,
        wins: Array2<u64>,
        ties: Option<Array2<u64>>,
    ) -> Result<Self> {
        let t = wins.nrows();
        let mut counts = CountMatrices::zeros(t);
        if wins.ncols() != t {
            return Err(Error::Shape(format!(
                "win matrix is {}x{}, expected square",
                wins.nrows(),
                wins.ncols()
            )));
        }
        counts.a_home = wins;
        if let Some(ties) = ties {
            if ties.dim() != (t, t) {
                return Err(Error::Shape(format!(
                    "tie matrix is {}x{}, expected {t}x{t}",
                    ties.nrows(),
                    ties.ncols()
                )));
            }
            for i in 0..t {
                for j in (i + 1)..t {
                    if ties[[i, j]] != ties[[j, i]] {
                        return Err(Error::Shape(format!(
                            "tie matrix is not symmetric at [{i}][{j}]"
                        )));
                    }
                    counts.t_home[[i, j]] = ties[[i, j]];
                }
            }
        }
        Self::new(teams, counts, true)
    }

    pub fn teams(&self) -> &[String] {
        &self.teams
    }

    pub fn num_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn counts(&self) -> &CountMatrices {
        &self.counts
    }

    pub fn is_venueless(&self) -> bool {
        self.venueless
    }

    pub fn team_index(&self, id: &str) -> Option<usize> {
        self.teams.iter().position(|t| t == id)
    }

    pub fn totals(&self) -> Totals {
        self.counts.derive_totals()
    }

    pub fn total_ties(&self) -> u64 {
        self.counts.t_home.sum()
    }

    /// Win scores `a_i = sum_j a_ij`.
    pub fn win_scores(&self) -> Vec<u64> {
        let wins = &self.counts.a_home + &self.counts.a_away;
        wins.rows().into_iter().map(|r| r.sum()).collect()
    }

    /// Number of game records the counts represent.
    pub fn total_games(&self) -> u64 {
        self.counts.a_home.sum() + self.counts.a_away.sum() + self.counts.t_home.sum()
    }

    /// Winning percentage per team, counting a tie as half a win.
    /// Teams without games get 0.
    pub fn win_percentages(&self) -> Vec<f64> {
        let totals = self.totals();
        (0..self.num_teams())
            .map(|i| {
                let w = totals.wins.row(i).sum() as f64;
                let d = totals.ties.row(i).sum() as f64;
                let n = totals.games.row(i).sum() as f64;
                if n == 0.0 {
                    0.0
                } else {
                    (w + 0.5 * d) / n
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    BradleyTerry,
    RaoKupper,
    Davidson,
    HomeField,
    David,
}

impl Model {
    pub const ALL: [Model; 5] = [
        Model::BradleyTerry,
        Model::RaoKupper,
        Model::Davidson,
        Model::HomeField,
        Model::David,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::BradleyTerry => "Bradley-Terry",
            Model::RaoKupper => "Rao-Kupper",
            Model::Davidson => "Davidson",
            Model::HomeField => "home-field",
            Model::David => "David",
        }
    }

    pub fn has_ties(self) -> bool {
        matches!(self, Model::RaoKupper | Model::Davidson | Model::David)
    }

    pub fn uses_venue(self) -> bool {
        matches!(self, Model::HomeField | Model::David)
    }

    /// Count of tie and home parameters beyond the merits.
    pub fn extra_params(self) -> usize {
        self.has_ties() as usize + self.uses_venue() as usize
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bt" | "bradley-terry" => Ok(Model::BradleyTerry),
            "rk" | "rao-kupper" => Ok(Model::RaoKupper),
            "davidson" => Ok(Model::Davidson),
            "home-field" | "homefield" | "hf" => Ok(Model::HomeField),
            "david" => Ok(Model::David),
            other => Err(Error::config(format!("unknown model {other:?}"))),
        }
    }
}

/// How fitted merits are scaled for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Normalization {
    /// `u[index] = 1`
    Reference { index: usize },
    /// `sum(u) = 1`
    Simplex,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization::Reference { index: 0 }
    }
}

impl Normalization {
    /// Rescales log-merits into positive merits.
    pub fn apply(self, beta: &[f64]) -> Result<Vec<f64>> {
        match self {
            Normalization::Reference { index } => {
                let r = *beta.get(index).ok_or_else(|| {
                    Error::config(format!(
                        "reference index {index} out of range for {} teams",
                        beta.len()
                    ))
                })?;
                Ok(beta.iter().map(|b| (b - r).exp()).collect())
            }
            Normalization::Simplex => {
                let m = beta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let u: Vec<f64> = beta.iter().map(|b| (b - m).exp()).collect();
                let s: f64 = u.iter().sum();
                Ok(u.into_iter().map(|x| x / s).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationSpec {
    /// Add `epsilon` only where comparisons occurred.
    Improved { epsilon: f64 },
    /// Add `epsilon` to every off-diagonal win count.
    ConnerGrant { epsilon: f64 },
    /// Add a general prior matrix (`a0[i][j] > -1`, zero diagonal).
    Matrix { a0: Array2<f64> },
}

impl PerturbationSpec {
    pub fn epsilon(&self) -> Option<f64> {
        match self {
            PerturbationSpec::Improved { epsilon } | PerturbationSpec::ConnerGrant { epsilon } => {
                Some(*epsilon)
            }
            PerturbationSpec::Matrix { .. } => None,
        }
    }

    /// Same scheme with a different epsilon; `None` for matrix perturbations.
    pub fn with_epsilon(&self, epsilon: f64) -> Option<Self> {
        match self {
            PerturbationSpec::Improved { .. } => Some(PerturbationSpec::Improved { epsilon }),
            PerturbationSpec::ConnerGrant { .. } => {
                Some(PerturbationSpec::ConnerGrant { epsilon })
            }
            PerturbationSpec::Matrix { .. } => None,
        }
    }

    pub fn validate(&self, t: usize) -> Result<()> {
        match self {
            PerturbationSpec::Improved { epsilon } | PerturbationSpec::ConnerGrant { epsilon } => {
                if !(epsilon.is_finite() && *epsilon > 0.0) {
                    return Err(Error::NonPositiveEpsilon(*epsilon));
                }
            }
            PerturbationSpec::Matrix { a0 } => {
                if a0.dim() != (t, t) {
                    return Err(Error::Shape(format!(
                        "perturbation matrix is {}x{}, expected {t}x{t}",
                        a0.nrows(),
                        a0.ncols()
                    )));
                }
                for ((i, j), &v) in a0.indexed_iter() {
                    if i == j && v != 0.0 {
                        return Err(Error::Shape(format!(
                            "perturbation matrix diagonal [{i}][{i}] must be 0"
                        )));
                    }
                    if !(v.is_finite() && v > -1.0) {
                        return Err(Error::config(format!(
                            "perturbation matrix entry [{i}][{j}] = {v} must exceed -1"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Perturbed win counts. Ties are carried through unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedCounts {
    /// Venue-free weights `ã_ij` used by the Bradley-Terry, Rao-Kupper and
    /// Davidson likelihoods.
    pub a_tilde: Array2<f64>,
    /// `ã_{ij.i}`: wins of `i` over `j` at `i`'s home.
    pub a_tilde_home: Array2<f64>,
    /// `ã_{ij.j}`: wins of `i` over `j` at `j`'s home.
    pub a_tilde_away: Array2<f64>,
    /// `t_{ij.i}`: ties hosted by `i`.
    pub t_home: Array2<f64>,
    /// Copied from the source dataset; venue-aware likelihoods refuse it.
    pub venueless: bool,
}

impl PerturbedCounts {
    pub fn num_teams(&self) -> usize {
        self.a_tilde.nrows()
    }

    /// Symmetric tie totals `t_ij`.
    pub fn ties(&self) -> Array2<f64> {
        &self.t_home + &self.t_home.t()
    }

    /// `ñ_ij = ã_ij + ã_ji + t_ij`.
    pub fn n_tilde(&self) -> Array2<f64> {
        &self.a_tilde + &self.a_tilde.t() + self.ties()
    }

    /// `ñ_{ij.i} = ã_{ij.i} + ã_{ji.i} + t_{ij.i}`.
    pub fn n_tilde_hosted(&self) -> Array2<f64> {
        &self.a_tilde_home + &self.a_tilde_away.t() + &self.t_home
    }

    /// Venue-summed perturbed wins `ã_{ij.i} + ã_{ij.j}`.
    pub fn venue_summed(&self) -> Array2<f64> {
        &self.a_tilde_home + &self.a_tilde_away
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub model: Model,
    pub perturbation: PerturbationSpec,
    pub normalization: Normalization,
}

impl ModelSpec {
    pub fn new(model: Model, perturbation: PerturbationSpec) -> Self {
        Self {
            model,
            perturbation,
            normalization: Normalization::default(),
        }
    }

    pub fn improved(model: Model, epsilon: f64) -> Self {
        Self::new(model, PerturbationSpec::Improved { epsilon })
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }
}

/// A point in the reparameterized space: `beta_i = log u_i - log u_0`,
/// `phi = log theta`, `log_gamma = log gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint {
    pub beta: Vec<f64>,
    pub phi: Option<f64>,
    pub log_gamma: Option<f64>,
}

impl ParameterPoint {
    /// The deterministic starting point used by the solver.
    pub fn initial(model: Model, t: usize) -> Self {
        Self {
            beta: vec![0.0; t],
            phi: match model {
                Model::RaoKupper => Some(2f64.ln()),
                Model::Davidson | Model::David => Some(0.0),
                _ => None,
            },
            log_gamma: model.uses_venue().then_some(0.0),
        }
    }

    /// Point with the given merits (any positive scale).
    pub fn from_merits(u: &[f64], phi: Option<f64>, log_gamma: Option<f64>) -> Self {
        let r = u[0].ln();
        Self {
            beta: u.iter().map(|x| x.ln() - r).collect(),
            phi,
            log_gamma,
        }
    }

    pub fn theta(&self) -> Option<f64> {
        self.phi.map(f64::exp)
    }

    pub fn gamma(&self) -> Option<f64> {
        self.log_gamma.map(f64::exp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Gradient sup-norm fell below `grad_tol`.
    Gradient,
    /// Relative log-likelihood change stayed below `rel_ll_tol` twice in a row.
    LikelihoodStall,
    /// No ascent step could be found at machine precision.
    LineSearch,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Model,
    pub teams: Vec<String>,
    /// Merits in the requested normalization.
    pub merits: Vec<f64>,
    pub normalization: Normalization,
    /// Log-merits relative to team 0.
    pub beta: Vec<f64>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    /// Objective at the optimum (penalized log-likelihood, or log-posterior
    /// up to a constant for MAP-EM).
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub gradient_sup_norm: f64,
    /// Raw win scores `a_i`.
    pub scores: Vec<f64>,
    pub epsilon: Option<f64>,
    /// Largest sup-norm distance in beta between restarts, when restarts ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_spread: Option<f64>,
    /// Objective value per iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn merit_of(&self, team: &str) -> Option<f64> {
        self.teams
            .iter()
            .position(|t| t == team)
            .map(|i| self.merits[i])
    }

    /// Same fit reported under another normalization.
    pub fn renormalized(&self, normalization: Normalization) -> Result<FitResult> {
        let merits = normalization.apply(&self.beta)?;
        Ok(FitResult {
            merits,
            normalization,
            ..self.clone()
        })
    }
}

/// Total order of teams with tie groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    /// Team indices from best to worst.
    pub order: Vec<usize>,
    /// Consecutive runs of `order` whose keys are indistinguishable.
    pub groups: Vec<Vec<usize>>,
    /// Win scores `a_i` by team index.
    pub scores: Vec<f64>,
}

impl Ranking {
    /// Position of each team in `order`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (p, &i) in self.order.iter().enumerate() {
            pos[i] = p;
        }
        pos
    }

    /// Renders as `1≻2≻{3,4}` using 1-based indices, or team names if given.
    pub fn display_with(&self, names: Option<&[String]>) -> String {
        let label = |i: usize| match names {
            Some(n) => n[i].clone(),
            None => (i + 1).to_string(),
        };
        self.groups
            .iter()
            .map(|g| {
                if g.len() == 1 {
                    label(g[0])
                } else {
                    format!(
                        "{{{}}}",
                        g.iter().map(|&i| label(i)).collect::<Vec<_>>().join(",")
                    )
                }
            })
            .collect::<Vec<_>>()
            .join(" ≻ ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    A,
    B,
    C,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::A => "A",
            Condition::B => "B",
            Condition::C => "C",
        };
        f.write_str(s)
    }
}

/// Which half of Condition C a witness violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingDirection {
    /// No team in `q1` hosts a team in `q2`.
    Hosting,
    /// No team in `q1` visits a team in `q2`.
    Visiting,
}

/// A split of the teams demonstrating that a connectivity condition fails.
///
/// * A: no team in `q2` has beaten any team in `q1`.
/// * B: no team in `q1` has played any team in `q2`.
/// * C: `q1` never plays `q2` in the `missing` role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionWitness {
    pub q1: Vec<usize>,
    pub q2: Vec<usize>,
    pub violated: Condition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<MissingDirection>,
}

impl PartitionWitness {
    pub fn describe(&self, names: Option<&[String]>) -> String {
        let set = |s: &[usize]| {
            let items: Vec<String> = s
                .iter()
                .map(|&i| match names {
                    Some(n) => n[i].clone(),
                    None => (i + 1).to_string(),
                })
                .collect();
            format!("{{{}}}", items.join(", "))
        };
        let (q1, q2) = (set(&self.q1), set(&self.q2));
        match (self.violated, self.missing) {
            (Condition::A, _) => format!(
                "condition A fails: no team in {q2} has beaten a team in {q1}"
            ),
            (Condition::B, _) => {
                format!("condition B fails: no comparisons between {q1} and {q2}")
            }
            (Condition::C, Some(MissingDirection::Visiting)) => {
                format!("condition C fails: no team in {q1} visits a team in {q2}")
            }
            (Condition::C, _) => {
                format!("condition C fails: no team in {q1} hosts a team in {q2}")
            }
        }
    }
}

impl fmt::Display for PartitionWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe(None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_team(counts: CountMatrices) -> Dataset {
        Dataset::new(vec!["A".into(), "B".into()], counts, false).unwrap()
    }

    #[test]
    fn zero_counts_give_zero_totals() {
        let tot = CountMatrices::zeros(3).derive_totals();
        assert_eq!(tot.wins.sum() + tot.ties.sum() + tot.games.sum() + tot.hosted.sum(), 0);
    }

    #[test]
    fn totals_from_venue_split_wins() {
        let t = 3;
        let mut c = CountMatrices::zeros(t);
        // a_home[1][2] = 2, a_away[2][1] = 1 (1-based in the text; 0-based here)
        c.a_home[[0, 1]] = 2;
        c.a_away[[1, 0]] = 1;
        let tot = c.derive_totals();
        assert_eq!(tot.wins[[0, 1]], 2);
        assert_eq!(tot.wins[[1, 0]], 1);
        assert_eq!(tot.games[[0, 1]], 3);
        assert_eq!(tot.games[[1, 0]], 3);
        // all three games hosted by team 0
        assert_eq!(tot.hosted[[0, 1]], 3);
        assert_eq!(tot.hosted[[1, 0]], 0);
    }

    #[test]
    fn ties_are_symmetric() {
        let mut c = CountMatrices::zeros(2);
        c.t_home[[0, 1]] = 1;
        c.t_home[[1, 0]] = 1;
        let tot = c.derive_totals();
        assert_eq!(tot.ties, array![[0, 2], [2, 0]]);
        assert_eq!(tot.games[[0, 1]], 2);
        assert_eq!(two_team(c).total_games(), 2);
    }

    #[test]
    fn dataset_rejects_bad_shapes() {
        let c = CountMatrices::zeros(1);
        assert!(matches!(
            Dataset::new(vec!["A".into()], c, false),
            Err(Error::Shape(_))
        ));
        let c = CountMatrices::zeros(2);
        assert!(matches!(
            Dataset::new(vec!["A".into(), "A".into()], c, false),
            Err(Error::Shape(_))
        ));
        let mut c = CountMatrices::zeros(2);
        c.a_home[[1, 1]] = 1;
        assert!(matches!(
            Dataset::new(vec!["A".into(), "B".into()], c, false),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn normalizations() {
        let beta = [0.0, (0.5f64).ln(), (0.25f64).ln()];
        let r = Normalization::Reference { index: 0 }.apply(&beta).unwrap();
        assert!((r[1] - 0.5).abs() < 1e-15 && (r[0] - 1.0).abs() < 1e-15);
        let r = Normalization::Reference { index: 2 }.apply(&beta).unwrap();
        assert!((r[2] - 1.0).abs() < 1e-15 && (r[0] - 4.0).abs() < 1e-12);
        let s = Normalization::Simplex.apply(&beta).unwrap();
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((s[0] / s[1] - 2.0).abs() < 1e-12);
        assert!(Normalization::Reference { index: 3 }.apply(&beta).is_err());
    }

    #[test]
    fn perturbation_spec_validation() {
        assert!(matches!(
            PerturbationSpec::Improved { epsilon: 0.0 }.validate(2),
            Err(Error::NonPositiveEpsilon(_))
        ));
        assert!(PerturbationSpec::ConnerGrant { epsilon: f64::NAN }
            .validate(2)
            .is_err());
        let bad = PerturbationSpec::Matrix {
            a0: array![[0.0, -1.0], [0.5, 0.0]],
        };
        assert!(bad.validate(2).is_err());
        let wrong = PerturbationSpec::Matrix {
            a0: Array2::zeros((3, 3)),
        };
        assert!(matches!(wrong.validate(2), Err(Error::Shape(_))));
    }

    #[test]
    fn model_parsing() {
        assert_eq!("bt".parse::<Model>().unwrap(), Model::BradleyTerry);
        assert_eq!("Rao-Kupper".parse::<Model>().unwrap(), Model::RaoKupper);
        assert_eq!("home-field".parse::<Model>().unwrap(), Model::HomeField);
        assert!("thurstone".parse::<Model>().is_err());
    }
}
