//! Rankings from fitted merits, epsilon sweeps and playoff seeding.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{fit, SolverConfig};
use crate::types::{Dataset, FitResult, ModelSpec, Ranking, RANK_TOL};

/// Orders indices by `keys` descending (index ascending on exact ties) and
/// chains neighbours closer than `tol` into tie groups.
fn rank_by(keys: &[f64], tol: f64, scores: Vec<f64>) -> Ranking {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if k > 0 && keys[order[k - 1]] - keys[i] < tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    Ranking {
        order,
        groups,
        scores,
    }
}

/// Teams by fitted merit, best first; merits within `RANK_TOL` on the log
/// scale form a tie group.
pub fn extract_ranking(fit: &FitResult) -> Ranking {
    extract_ranking_with_tol(fit, RANK_TOL)
}

pub fn extract_ranking_with_tol(fit: &FitResult, tol: f64) -> Ranking {
    rank_by(&fit.beta, tol, fit.scores.clone())
}

/// Teams by win score `a_i`, equal scores grouped.
pub fn score_ranking(dataset: &Dataset) -> Ranking {
    let scores: Vec<f64> = dataset.win_scores().iter().map(|&a| a as f64).collect();
    // scores are integers, so any positive tolerance below 1 groups exact ties
    rank_by(&scores, 0.5, scores.clone())
}

/// Number of team pairs ordered differently by the two rankings. Pairs tied
/// in either ranking are not counted.
pub fn kendall_tau_distance(a: &Ranking, b: &Ranking) -> usize {
    let group_of = |r: &Ranking| {
        let mut g = vec![0; r.order.len()];
        for (k, grp) in r.groups.iter().enumerate() {
            for &i in grp {
                g[i] = k;
            }
        }
        g
    };
    let (ga, gb) = (group_of(a), group_of(b));
    let n = ga.len().min(gb.len());
    let mut d = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (x, y) = (ga[i].cmp(&ga[j]), gb[i].cmp(&gb[j]));
            if x.is_ne() && y.is_ne() && x != y {
                d += 1;
            }
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub fit: FitResult,
    pub ranking: Ranking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// One entry per epsilon, sorted by epsilon ascending.
    pub entries: Vec<SweepEntry>,
    /// True when every ranking, tie groups included, is the same.
    pub stable: bool,
    /// Pairwise Kendall-tau distances between the entries' rankings.
    pub kendall_tau: Vec<Vec<usize>>,
}

/// Fits `spec` at each epsilon (in parallel) and compares the rankings.
pub fn sweep_epsilon(
    spec: &ModelSpec,
    dataset: &Dataset,
    epsilons: &[f64],
    config: &SolverConfig,
) -> Result<SweepReport> {
    if epsilons.is_empty() {
        return Err(Error::config("epsilon sweep needs at least one value"));
    }
    let mut eps = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    let fits: Vec<Result<SweepEntry>> = eps
        .par_iter()
        .map(|&e| {
            let annotate = |source: Error| Error::AtEpsilon {
                epsilon: e,
                source: Box::new(source),
            };
            if !(e > 0.0 && e.is_finite()) {
                return Err(annotate(Error::NonPositiveEpsilon(e)));
            }
            let perturbation = spec.perturbation.with_epsilon(e).ok_or_else(|| {
                Error::config("epsilon sweeps need an epsilon-based perturbation")
            })?;
            let s = ModelSpec {
                perturbation,
                ..spec.clone()
            };
            let f = fit(&s, dataset, config).map_err(annotate)?;
            Ok(SweepEntry {
                epsilon: e,
                ranking: extract_ranking(&f),
                fit: f,
            })
        })
        .collect();
    let entries = fits.into_iter().collect::<Result<Vec<_>>>()?;
    let stable = entries.windows(2).all(|w| w[0].ranking.groups == w[1].ranking.groups);
    let kendall_tau = entries
        .iter()
        .map(|a| {
            entries
                .iter()
                .map(|b| kendall_tau_distance(&a.ranking, &b.ranking))
                .collect()
        })
        .collect();
    Ok(SweepReport {
        entries,
        stable,
        kendall_tau,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTrend {
    /// Higher-ranked team.
    pub better: usize,
    pub worse: usize,
    /// `u_better / u_worse` at each epsilon, ascending.
    pub ratios: Vec<f64>,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub epsilons: Vec<f64>,
    pub pairs: Vec<RatioTrend>,
    /// Every adjacent-in-ranking ratio is non-increasing in epsilon.
    pub monotone: bool,
    /// False when the sweep was unstable; the check then uses the ranking
    /// at the smallest epsilon.
    pub stable: bool,
}

/// For each pair of teams adjacent in the ranking, whether their merit
/// ratio is non-increasing as epsilon grows.
pub fn monotone_ratio_check(sweep: &SweepReport) -> RatioReport {
    let mut entries: Vec<&SweepEntry> = sweep.entries.iter().collect();
    entries.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let epsilons = entries.iter().map(|e| e.epsilon).collect();
    let Some(first) = entries.first() else {
        return RatioReport {
            epsilons,
            pairs: Vec::new(),
            monotone: true,
            stable: true,
        };
    };
    let pairs: Vec<RatioTrend> = first
        .ranking
        .order
        .windows(2)
        .map(|w| {
            let (better, worse) = (w[0], w[1]);
            let ratios: Vec<f64> = entries
                .iter()
                .map(|e| (e.fit.beta[better] - e.fit.beta[worse]).exp())
                .collect();
            let monotone = ratios.windows(2).all(|r| r[1] <= r[0] * (1.0 + 1e-12));
            RatioTrend {
                better,
                worse,
                ratios,
                monotone,
            }
        })
        .collect();
    RatioReport {
        epsilons,
        monotone: pairs.iter().all(|p| p.monotone),
        pairs,
        stable: sweep.stable,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Division {
    pub name: String,
    pub teams: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conference {
    pub name: String,
    pub divisions: Vec<Division>,
}

/// Conferences made of divisions of team ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeagueStructure {
    pub conferences: Vec<Conference>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedingRule {
    pub seeds_per_conference: usize,
    pub division_winners: usize,
}

impl Default for SeedingRule {
    fn default() -> Self {
        Self {
            seeds_per_conference: 6,
            division_winners: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub seed: usize,
    pub team: String,
    pub key: f64,
    pub division_winner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConferenceSeeds {
    pub conference: String,
    pub seeds: Vec<Seed>,
}

/// Seeds per conference: division winners first by key, then wild cards.
/// Equal keys are broken by team id.
pub fn select_seeds(
    teams: &[String],
    keys: &[f64],
    structure: &LeagueStructure,
    rule: &SeedingRule,
) -> Result<Vec<ConferenceSeeds>> {
    if teams.len() != keys.len() {
        return Err(Error::Dimension {
            expected: teams.len(),
            got: keys.len(),
        });
    }
    let index: HashMap<&str, usize> = teams
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let mut assigned = HashSet::new();
    for conf in &structure.conferences {
        if conf.divisions.len() != rule.division_winners {
            return Err(Error::config(format!(
                "conference {:?} has {} divisions but the rule seeds {} division winners",
                conf.name,
                conf.divisions.len(),
                rule.division_winners
            )));
        }
        let size: usize = conf.divisions.iter().map(|d| d.teams.len()).sum();
        if size < rule.seeds_per_conference || rule.seeds_per_conference < rule.division_winners {
            return Err(Error::config(format!(
                "conference {:?} cannot supply {} seeds",
                conf.name, rule.seeds_per_conference
            )));
        }
        for div in &conf.divisions {
            if div.teams.is_empty() {
                return Err(Error::config(format!("division {:?} is empty", div.name)));
            }
            for t in &div.teams {
                if !index.contains_key(t.as_str()) {
                    return Err(Error::config(format!("unknown team {t:?} in division {:?}", div.name)));
                }
                if !assigned.insert(t.as_str()) {
                    return Err(Error::config(format!("team {t:?} appears in more than one division")));
                }
            }
        }
    }
    if let Some(missing) = teams.iter().find(|t| !assigned.contains(t.as_str())) {
        return Err(Error::config(format!("team {missing:?} is not assigned to a division")));
    }

    let better = |a: &str, b: &str| {
        let (ka, kb) = (keys[index[a]], keys[index[b]]);
        kb.total_cmp(&ka).then_with(|| a.cmp(b))
    };
    let seed = |n: usize, team: &str, winner: bool| Seed {
        seed: n,
        team: team.to_string(),
        key: keys[index[team]],
        division_winner: winner,
    };
    Ok(structure
        .conferences
        .iter()
        .map(|conf| {
            let mut winners: Vec<&str> = conf
                .divisions
                .iter()
                .map(|d| {
                    d.teams
                        .iter()
                        .map(String::as_str)
                        .min_by(|a, b| better(a, b))
                        .expect("nonempty division")
                })
                .collect();
            winners.sort_by(|a, b| better(a, b));
            let mut rest: Vec<&str> = conf
                .divisions
                .iter()
                .flat_map(|d| d.teams.iter().map(String::as_str))
                .filter(|t| !winners.contains(t))
                .collect();
            rest.sort_by(|a, b| better(a, b));
            let wild = rule.seeds_per_conference - rule.division_winners;
            let seeds = winners
                .iter()
                .map(|t| (*t, true))
                .chain(rest.iter().take(wild).map(|t| (*t, false)))
                .enumerate()
                .map(|(k, (t, w))| seed(k + 1, t, w))
                .collect();
            ConferenceSeeds {
                conference: conf.name.clone(),
                seeds,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn score_ranking_examples() {
        let d = Dataset::from_win_matrix(
            (1..=4).map(|i| i.to_string()).collect(),
            array![[0, 2, 0, 1], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 2, 0]],
            None,
        )
        .unwrap();
        let r = score_ranking(&d);
        assert_eq!(r.display_with(None), "1 ≻ 4 ≻ {2,3}");
        let z = Dataset::from_win_matrix(
            vec!["a".into(), "b".into(), "c".into()],
            ndarray::Array2::zeros((3, 3)),
            None,
        )
        .unwrap();
        assert_eq!(score_ranking(&z).groups, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn kendall_counts_discordant_pairs() {
        let a = rank_by(&[4.0, 3.0, 2.0, 1.0], 1e-9, vec![]);
        let b = rank_by(&[1.0, 2.0, 3.0, 4.0], 1e-9, vec![]);
        assert_eq!(kendall_tau_distance(&a, &a), 0);
        assert_eq!(kendall_tau_distance(&a, &b), 6);
        let c = rank_by(&[4.0, 2.0, 3.0, 1.0], 1e-9, vec![]);
        assert_eq!(kendall_tau_distance(&a, &c), 1);
    }

    fn small_league() -> (Vec<String>, LeagueStructure) {
        let teams: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let s = LeagueStructure {
            conferences: vec![Conference {
                name: "X".into(),
                divisions: vec![
                    Division {
                        name: "east".into(),
                        teams: vec!["a".into(), "b".into()],
                    },
                    Division {
                        name: "west".into(),
                        teams: vec!["c".into(), "d".into()],
                    },
                ],
            }],
        };
        (teams, s)
    }

    #[test]
    fn seeding_rule() {
        let (teams, s) = small_league();
        let rule = SeedingRule {
            seeds_per_conference: 4,
            division_winners: 2,
        };
        let seeds = select_seeds(&teams, &[4.0, 3.0, 2.0, 1.0], &s, &rule).unwrap();
        let order: Vec<&str> = seeds[0].seeds.iter().map(|s| s.team.as_str()).collect();
        assert_eq!(order, ["a", "c", "b", "d"]);
        assert!(seeds[0].seeds[1].division_winner && !seeds[0].seeds[2].division_winner);
    }

    #[test]
    fn seeding_ties_break_by_id() {
        let (teams, s) = small_league();
        let rule = SeedingRule {
            seeds_per_conference: 2,
            division_winners: 2,
        };
        let seeds = select_seeds(&teams, &[1.0, 1.0, 1.0, 1.0], &s, &rule).unwrap();
        let order: Vec<&str> = seeds[0].seeds.iter().map(|s| s.team.as_str()).collect();
        assert_eq!(order, ["a", "c"]);
    }

    #[test]
    fn malformed_structure() {
        let (teams, mut s) = small_league();
        let rule = SeedingRule {
            seeds_per_conference: 2,
            division_winners: 2,
        };
        s.conferences[0].divisions[1].teams.push("a".into());
        assert!(matches!(
            select_seeds(&teams, &[1.0; 4], &s, &rule),
            Err(Error::Config(_))
        ));
        let (teams, s) = small_league();
        assert!(matches!(
            select_seeds(&teams, &[1.0; 4], &s, &SeedingRule::default()),
            Err(Error::Config(_))
        ));
    }
}
