//! Singular perturbations of the win counts.
//!
//! The improved scheme adds `epsilon` only where comparisons occurred:
//! `ã_ij = a_ij + ε·I(n_ij > 0)` for venue-free models and
//! `ã_{ij.i} = a_{ij.i} + ε·I(n_{ij.i} > 0)` at the venue level. The
//! venue-free weights are computed directly from `n_ij`, not by summing the
//! venue-level weights (which may add `2ε`).
//!
//! Conner-Grant and general-matrix perturbations are defined on venue-free
//! counts; at the venue level each ordered cell receives half of the
//! venue-free increment.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{Dataset, PerturbationSpec, PerturbedCounts};

/// `sqrt(log t / t)`, the default epsilon for `t` teams.
pub fn auto_epsilon(t: usize) -> f64 {
    let t = t as f64;
    (t.ln() / t).sqrt()
}

/// An epsilon as given on the command line: a number or `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    Value(f64),
    Auto,
}

impl Epsilon {
    pub fn resolve(self, t: usize) -> f64 {
        match self {
            Epsilon::Value(e) => e,
            Epsilon::Auto => auto_epsilon(t),
        }
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Epsilon::Auto);
        }
        let e: f64 = s
            .parse()
            .map_err(|_| Error::config(format!("invalid epsilon {s:?}")))?;
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::NonPositiveEpsilon(e));
        }
        Ok(Epsilon::Value(e))
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Epsilon::Value(e) => write!(f, "{e}"),
            Epsilon::Auto => f.write_str("auto"),
        }
    }
}

pub fn perturb(dataset: &Dataset, spec: &PerturbationSpec) -> Result<PerturbedCounts> {
    let t = dataset.num_teams();
    spec.validate(t)?;
    let c = dataset.counts();
    let tot = dataset.totals();
    let as_f64 = |m: &Array2<u64>| m.mapv(|x| x as f64);
    let indicator = |m: &Array2<u64>| m.mapv(|x| if x > 0 { 1.0 } else { 0.0 });

    let wins = as_f64(&tot.wins);
    let (a_tilde, a_tilde_home, a_tilde_away) = match spec {
        PerturbationSpec::Improved { epsilon } => {
            let hosted = indicator(&tot.hosted);
            (
                wins + indicator(&tot.games) * *epsilon,
                as_f64(&c.a_home) + &hosted * *epsilon,
                // a_{ij.j} is played at j's home, so it is perturbed when n_{ji.j} > 0
                as_f64(&c.a_away) + &hosted.t() * *epsilon,
            )
        }
        PerturbationSpec::ConnerGrant { epsilon } => {
            let off = Array2::from_shape_fn((t, t), |(i, j)| if i == j { 0.0 } else { 1.0 });
            (
                wins + &off * *epsilon,
                as_f64(&c.a_home) + &off * (0.5 * epsilon),
                as_f64(&c.a_away) + &off * (0.5 * epsilon),
            )
        }
        PerturbationSpec::Matrix { a0 } => (
            wins + a0,
            as_f64(&c.a_home) + &(a0 * 0.5),
            as_f64(&c.a_away) + &(a0 * 0.5),
        ),
    };
    for (name, m) in [
        ("perturbed wins", &a_tilde),
        ("perturbed home wins", &a_tilde_home),
        ("perturbed away wins", &a_tilde_away),
    ] {
        if let Some(((i, j), v)) = m.indexed_iter().find(|(_, v)| **v < 0.0) {
            return Err(Error::config(format!(
                "{name} [{i}][{j}] = {v} is negative; the prior matrix outweighs the data"
            )));
        }
    }
    Ok(PerturbedCounts {
        a_tilde,
        a_tilde_home,
        a_tilde_away,
        t_home: as_f64(&c.t_home),
        venueless: dataset.is_venueless(),
    })
}
