#![allow(dead_code)]

use std::path::PathBuf;

use btrank::{
    CountMatrices, Dataset, Model, ParameterPoint, PerturbedCounts,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn load_fixture(name: &str) -> Dataset {
    btrank::load_path(&fixture(name), None).expect("fixture loads")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(t: usize) -> Vec<String> {
    (0..t).map(|i| format!("T{i}")).collect()
}

/// Venue-split counts: each ordered (host, visitor) pair meets with
/// probability `density`, 1 to 3 times, with ties at rate `tie_rate`.
pub fn random_venue_dataset(rng: &mut ChaCha8Rng, t: usize, density: f64, tie_rate: f64) -> Dataset {
    let mut c = CountMatrices::zeros(t);
    for h in 0..t {
        for v in 0..t {
            if h == v || !rng.random_bool(density) {
                continue;
            }
            for _ in 0..rng.random_range(1..=3) {
                let x: f64 = rng.random();
                if x < tie_rate {
                    c.t_home[[h, v]] += 1;
                } else if x < tie_rate + (1.0 - tie_rate) / 2.0 {
                    c.a_home[[h, v]] += 1;
                } else {
                    c.a_away[[v, h]] += 1;
                }
            }
        }
    }
    Dataset::new(names(t), c, false).unwrap()
}

/// Random win matrix without venue information.
pub fn random_win_matrix(rng: &mut ChaCha8Rng, t: usize, density: f64) -> Dataset {
    let mut a = Array2::zeros((t, t));
    for i in 0..t {
        for j in (i + 1)..t {
            if !rng.random_bool(density) {
                continue;
            }
            for _ in 0..rng.random_range(1..=4) {
                if rng.random_bool(0.5) {
                    a[[i, j]] += 1;
                } else {
                    a[[j, i]] += 1;
                }
            }
        }
    }
    Dataset::from_win_matrix(names(t), a, None).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, model: Model, t: usize) -> ParameterPoint {
    ParameterPoint {
        beta: (0..t).map(|_| rng.random_range(-2.0..2.0)).collect(),
        phi: model.has_ties().then(|| match model {
            Model::RaoKupper => rng.random_range(0.1..2.0),
            _ => rng.random_range(-2.0..2.0),
        }),
        log_gamma: model.uses_venue().then(|| rng.random_range(-1.0..1.0)),
    }
}

/// Log-likelihood evaluated straight from the product forms in merit space.
pub fn product_form_loglik(model: Model, p: &ParameterPoint, pc: &PerturbedCounts) -> f64 {
    let u: Vec<f64> = p.beta.iter().map(|b| b.exp()).collect();
    let theta = p.phi.map(f64::exp).unwrap_or(1.0);
    let gamma = p.log_gamma.map(f64::exp).unwrap_or(1.0);
    let t = u.len();
    let ties = &pc.t_home + &pc.t_home.t();
    let term = |w: f64, prob: f64| if w > 0.0 { w * prob.ln() } else { 0.0 };
    let mut total = 0.0;
    for i in 0..t {
        for j in 0..t {
            if i == j {
                continue;
            }
            let (ui, uj) = (u[i], u[j]);
            match model {
                Model::BradleyTerry => total += term(pc.a_tilde[[i, j]], ui / (ui + uj)),
                Model::RaoKupper => {
                    total += term(pc.a_tilde[[i, j]], ui / (ui + theta * uj));
                    if i < j {
                        let tie = (theta * theta - 1.0) * ui * uj
                            / ((ui + theta * uj) * (uj + theta * ui));
                        total += term(ties[[i, j]], tie);
                    }
                }
                Model::Davidson => {
                    let d = ui + uj + theta * (ui * uj).sqrt();
                    total += term(pc.a_tilde[[i, j]], ui / d);
                    if i < j {
                        total += term(ties[[i, j]], theta * (ui * uj).sqrt() / d);
                    }
                }
                Model::HomeField => {
                    // i hosts j
                    let d = gamma * ui + uj;
                    total += term(pc.a_tilde_home[[i, j]], gamma * ui / d);
                    total += term(pc.a_tilde_away[[j, i]], uj / d);
                }
                Model::David => {
                    let d = gamma * ui + uj + theta * (ui * uj).sqrt();
                    total += term(pc.a_tilde_home[[i, j]], gamma * ui / d);
                    total += term(pc.a_tilde_away[[j, i]], uj / d);
                    total += term(pc.t_home[[i, j]], theta * (ui * uj).sqrt() / d);
                }
            }
        }
    }
    total
}

/// Central finite-difference gradient over free merits, phi and log gamma.
pub fn finite_difference_gradient(
    f: impl Fn(&ParameterPoint) -> f64,
    p: &ParameterPoint,
    h: f64,
) -> Vec<f64> {
    let mut out = Vec::new();
    let bump = |k: usize, d: f64| {
        let mut q = p.clone();
        let t = q.beta.len();
        if k < t {
            q.beta[k] += d;
        } else if k == t && q.phi.is_some() {
            *q.phi.as_mut().unwrap() += d;
        } else {
            *q.log_gamma.as_mut().unwrap() += d;
        }
        q
    };
    let t = p.beta.len();
    let dims = t + p.phi.is_some() as usize + p.log_gamma.is_some() as usize;
    for k in 1..dims {
        out.push((f(&bump(k, h)) - f(&bump(k, -h))) / (2.0 * h));
    }
    out
}

/// Condition C by brute force over all splits of the teams.
pub fn condition_c_by_enumeration(d: &Dataset) -> bool {
    let t = d.num_teams();
    let hosted = d.totals().hosted;
    for mask in 1u32..(1 << t) - 1 {
        let inside = |i: usize| mask & (1 << i) != 0;
        let mut q1_hosts = false;
        let mut q1_visits = false;
        for i in 0..t {
            for j in 0..t {
                if inside(i) && !inside(j) {
                    q1_hosts |= hosted[[i, j]] > 0;
                    q1_visits |= hosted[[j, i]] > 0;
                }
            }
        }
        if !(q1_hosts && q1_visits) {
            return false;
        }
    }
    true
}

/// Order of teams by key descending, ties by index.
pub fn argsort_desc(keys: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    idx
}

pub fn within(got: f64, want: f64, abs: f64, rel: f64) -> bool {
    (got - want).abs() <= abs.max(rel * want.abs())
}
