//! Penalized log-likelihoods of the five models and their gradients.
//!
//! Everything is evaluated in the reparameterized space where the
//! objectives are concave: log-merits `beta`, `phi = log theta` and
//! `log gamma`. Probabilities are formed with log-sum-exp so merits spanning
//! many orders of magnitude stay finite.
//!
//! Outcome probabilities for a pair `(i, j)`, with `γ` multiplying the
//! host's merit:
//!
//! | model      | i wins                      | j wins                      | tie                                         |
//! |------------|-----------------------------|-----------------------------|---------------------------------------------|
//! | BT         | `u_i/(u_i+u_j)`             | `u_j/(u_i+u_j)`             | 0                                           |
//! | Rao-Kupper | `u_i/(u_i+θu_j)`            | `u_j/(θu_i+u_j)`            | `(θ²-1)u_iu_j/((u_i+θu_j)(u_j+θu_i))`       |
//! | Davidson   | `u_i/D`                     | `u_j/D`                     | `θ√(u_iu_j)/D`, `D = u_i+u_j+θ√(u_iu_j)`    |
//! | home-field | `γu_i/(γu_i+u_j)` (i hosts) | `u_j/(γu_i+u_j)`            | 0                                           |
//! | David      | `γu_i/D` (i hosts)          | `u_j/D`                     | `θ√(u_iu_j)/D`, `D = γu_i+u_j+θ√(u_iu_j)`   |

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{Model, ParameterPoint, PerturbedCounts};

/// Where a single comparison is played.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Venue {
    Neutral,
    /// The first team of the pair hosts.
    FirstHosts,
    /// The second team of the pair hosts.
    SecondHosts,
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-sum-exp of three scores and the softmax probabilities.
#[inline]
fn softmax3(s: [f64; 3]) -> (f64, [f64; 3]) {
    let m = s[0].max(s[1]).max(s[2]);
    let e = [(s[0] - m).exp(), (s[1] - m).exp(), (s[2] - m).exp()];
    let z = e[0] + e[1] + e[2];
    (m + z.ln(), [e[0] / z, e[1] / z, e[2] / z])
}

/// `log(θ² - 1)` for `θ = e^φ`, `φ > 0`.
#[inline]
fn log_theta_sq_minus_one(phi: f64) -> f64 {
    2.0 * phi + (-(-2.0 * phi).exp()).ln_1p()
}

/// A pair (venue-free) or a hosting group (venue-aware) with nonzero weight.
#[derive(Debug, Clone, Copy)]
struct Group {
    /// Venue-free: the lower index. Venue-aware: the host.
    first: usize,
    second: usize,
    /// Wins of `first` over `second`.
    w_first: f64,
    /// Wins of `second` over `first`.
    w_second: f64,
    ties: f64,
}

/// The penalized log-likelihood of one model on fixed perturbed counts.
///
/// The optimizer sees a flat vector `[beta_1 .. beta_{t-1}, phi?, log_gamma?]`
/// with `beta_0` pinned to zero.
#[derive(Debug, Clone)]
pub struct Objective {
    model: Model,
    t: usize,
    groups: Vec<Group>,
}

impl Objective {
    pub fn new(model: Model, perturbed: &PerturbedCounts) -> Result<Self> {
        if model.uses_venue() && perturbed.venueless {
            return Err(Error::VenuelessData(model.name()));
        }
        if model.has_ties() && perturbed.t_home.sum() <= 0.0 {
            return Err(Error::NoTies { model: model.name() });
        }
        let t = perturbed.num_teams();
        let groups = if model.uses_venue() {
            venue_groups(perturbed)
        } else {
            pair_groups(&perturbed.a_tilde, &perturbed.ties())
        };
        Ok(Self { model, t, groups })
    }

    /// Bradley-Terry objective on an arbitrary nonnegative win-weight matrix.
    pub fn bradley_terry(weights: &Array2<f64>) -> Self {
        let t = weights.nrows();
        Self {
            model: Model::BradleyTerry,
            t,
            groups: pair_groups(weights, &Array2::zeros((t, t))),
        }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn num_teams(&self) -> usize {
        self.t
    }

    /// `(t - 1)` free merits plus the tie and home parameters.
    pub fn dimension(&self) -> usize {
        self.t - 1 + self.model.extra_params()
    }

    fn phi_slot(&self) -> Option<usize> {
        self.model.has_ties().then_some(self.t - 1)
    }

    fn gamma_slot(&self) -> Option<usize> {
        self.model
            .uses_venue()
            .then(|| self.t - 1 + self.model.has_ties() as usize)
    }

    pub fn to_vector(&self, point: &ParameterPoint) -> Result<Vec<f64>> {
        self.check_point(point)?;
        let b0 = point.beta[0];
        let mut x: Vec<f64> = point.beta[1..].iter().map(|b| b - b0).collect();
        x.extend(point.phi);
        x.extend(point.log_gamma);
        Ok(x)
    }

    pub fn to_point(&self, x: &[f64]) -> ParameterPoint {
        let mut beta = Vec::with_capacity(self.t);
        beta.push(0.0);
        beta.extend_from_slice(&x[..self.t - 1]);
        ParameterPoint {
            beta,
            phi: self.phi_slot().map(|k| x[k]),
            log_gamma: self.gamma_slot().map(|k| x[k]),
        }
    }

    fn check_point(&self, point: &ParameterPoint) -> Result<()> {
        if point.beta.len() != self.t {
            return Err(Error::Dimension {
                expected: self.t,
                got: point.beta.len(),
            });
        }
        let extra = point.phi.is_some() as usize + point.log_gamma.is_some() as usize;
        if point.phi.is_some() != self.model.has_ties()
            || point.log_gamma.is_some() != self.model.uses_venue()
        {
            return Err(Error::Dimension {
                expected: self.t + self.model.extra_params(),
                got: self.t + extra,
            });
        }
        if self.model == Model::RaoKupper {
            let phi = point.phi.unwrap_or(0.0);
            if phi.is_nan() || phi <= 0.0 {
                return Err(Error::ThetaDomain(phi.exp()));
            }
        }
        Ok(())
    }

    /// Value at a full parameter point (merits need not be pinned).
    pub fn value_at(&self, point: &ParameterPoint) -> Result<f64> {
        self.check_point(point)?;
        Ok(self.eval(
            &point.beta,
            point.phi.unwrap_or(0.0),
            point.log_gamma.unwrap_or(0.0),
            None,
        ))
    }

    /// Value and gradient at a full parameter point. The gradient covers
    /// every merit (length `t`) followed by `phi` and `log_gamma` if present.
    pub fn value_and_full_gradient(&self, point: &ParameterPoint) -> Result<(f64, Vec<f64>)> {
        self.check_point(point)?;
        let mut g = vec![0.0; self.t + 2];
        let v = self.eval(
            &point.beta,
            point.phi.unwrap_or(0.0),
            point.log_gamma.unwrap_or(0.0),
            Some(&mut g),
        );
        let mut out = g[..self.t].to_vec();
        if self.model.has_ties() {
            out.push(g[self.t]);
        }
        if self.model.uses_venue() {
            out.push(g[self.t + 1]);
        }
        Ok((v, out))
    }

    /// Objective on the optimizer vector; `-inf` outside the domain.
    pub fn value(&self, x: &[f64]) -> f64 {
        let (beta, phi, lg) = self.unpack(x);
        if self.model == Model::RaoKupper && (phi.is_nan() || phi <= 0.0) {
            return f64::NEG_INFINITY;
        }
        self.eval(&beta, phi, lg, None)
    }

    /// Value and gradient on the optimizer vector.
    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (beta, phi, lg) = self.unpack(x);
        let mut g = vec![0.0; self.t + 2];
        if self.model == Model::RaoKupper && (phi.is_nan() || phi <= 0.0) {
            return (f64::NEG_INFINITY, vec![f64::NAN; self.dimension()]);
        }
        let v = self.eval(&beta, phi, lg, Some(&mut g));
        let mut out = g[1..self.t].to_vec();
        if self.model.has_ties() {
            out.push(g[self.t]);
        }
        if self.model.uses_venue() {
            out.push(g[self.t + 1]);
        }
        (v, out)
    }

    fn unpack(&self, x: &[f64]) -> (Vec<f64>, f64, f64) {
        debug_assert_eq!(x.len(), self.dimension());
        let mut beta = Vec::with_capacity(self.t);
        beta.push(0.0);
        beta.extend_from_slice(&x[..self.t - 1]);
        let phi = self.phi_slot().map_or(0.0, |k| x[k]);
        let lg = self.gamma_slot().map_or(0.0, |k| x[k]);
        (beta, phi, lg)
    }

    /// Core evaluation. `grad` (if given) has length `t + 2`: merits, then
    /// the `phi` and `log_gamma` partials.
    fn eval(&self, beta: &[f64], phi: f64, lg: f64, mut grad: Option<&mut Vec<f64>>) -> f64 {
        let t = self.t;
        let mut total = 0.0;
        let rk_tie_const = if self.model == Model::RaoKupper {
            log_theta_sq_minus_one(phi)
        } else {
            0.0
        };
        for g in &self.groups {
            let (i, j) = (g.first, g.second);
            let (bi, bj) = (beta[i], beta[j]);
            match self.model {
                Model::BradleyTerry | Model::HomeField => {
                    // host boost only for the venue-aware model
                    let boost = if self.model == Model::HomeField { lg } else { 0.0 };
                    let d = boost + bi - bj;
                    total -= g.w_first * softplus(-d) + g.w_second * softplus(d);
                    if let Some(gr) = grad.as_deref_mut() {
                        let p = sigmoid(d);
                        let s = g.w_first * (1.0 - p) - g.w_second * p;
                        gr[i] += s;
                        gr[j] -= s;
                        if self.model == Model::HomeField {
                            gr[t + 1] += s;
                        }
                    }
                }
                Model::RaoKupper => {
                    // log P(i beats j) = -softplus(phi + b_j - b_i)
                    let c_ij = g.w_first + g.ties;
                    let c_ji = g.w_second + g.ties;
                    let d_ij = phi + bj - bi;
                    let d_ji = phi + bi - bj;
                    total -= c_ij * softplus(d_ij) + c_ji * softplus(d_ji);
                    total += g.ties * rk_tie_const;
                    if let Some(gr) = grad.as_deref_mut() {
                        let r_ij = c_ij * sigmoid(d_ij);
                        let r_ji = c_ji * sigmoid(d_ji);
                        gr[i] += r_ij - r_ji;
                        gr[j] += r_ji - r_ij;
                        gr[t] += -(r_ij + r_ji) + g.ties * 2.0 / (-(-2.0 * phi).exp_m1());
                    }
                }
                Model::Davidson | Model::David => {
                    let boost = if self.model == Model::David { lg } else { 0.0 };
                    let mid = phi + 0.5 * (bi + bj);
                    let s = [boost + bi, bj, mid];
                    let n = g.w_first + g.w_second + g.ties;
                    let (lse, p) = softmax3(s);
                    total += g.w_first * s[0] + g.w_second * s[1] + g.ties * s[2] - n * lse;
                    if let Some(gr) = grad.as_deref_mut() {
                        let r_first = g.w_first - n * p[0];
                        gr[i] += r_first + 0.5 * (g.ties - n * p[2]);
                        gr[j] += g.w_second - n * p[1] + 0.5 * (g.ties - n * p[2]);
                        gr[t] += g.ties - n * p[2];
                        if self.model == Model::David {
                            gr[t + 1] += r_first;
                        }
                    }
                }
            }
        }
        total
    }

    /// Outcome probabilities `(i wins, j wins, tie)` at a parameter point.
    pub fn probabilities(
        &self,
        point: &ParameterPoint,
        i: usize,
        j: usize,
        venue: Venue,
    ) -> Result<(f64, f64, f64)> {
        probabilities(self.model, point, i, j, venue)
    }
}

fn pair_groups(wins: &Array2<f64>, ties: &Array2<f64>) -> Vec<Group> {
    let t = wins.nrows();
    let mut out = Vec::new();
    for i in 0..t {
        for j in (i + 1)..t {
            let g = Group {
                first: i,
                second: j,
                w_first: wins[[i, j]],
                w_second: wins[[j, i]],
                ties: ties[[i, j]],
            };
            if g.w_first > 0.0 || g.w_second > 0.0 || g.ties > 0.0 {
                out.push(g);
            }
        }
    }
    out
}

fn venue_groups(p: &PerturbedCounts) -> Vec<Group> {
    let t = p.num_teams();
    let mut out = Vec::new();
    for h in 0..t {
        for v in 0..t {
            if h == v {
                continue;
            }
            let g = Group {
                first: h,
                second: v,
                w_first: p.a_tilde_home[[h, v]],
                // the visitor's wins at h's home
                w_second: p.a_tilde_away[[v, h]],
                ties: p.t_home[[h, v]],
            };
            if g.w_first > 0.0 || g.w_second > 0.0 || g.ties > 0.0 {
                out.push(g);
            }
        }
    }
    out
}

/// Penalized log-likelihood of `model` at `point`.
pub fn loglik(model: Model, point: &ParameterPoint, perturbed: &PerturbedCounts) -> Result<f64> {
    Objective::new(model, perturbed)?.value_at(point)
}

pub fn loglik_bt(point: &ParameterPoint, perturbed: &PerturbedCounts) -> Result<f64> {
    loglik(Model::BradleyTerry, point, perturbed)
}

pub fn loglik_rao_kupper(point: &ParameterPoint, perturbed: &PerturbedCounts) -> Result<f64> {
    loglik(Model::RaoKupper, point, perturbed)
}

pub fn loglik_davidson(point: &ParameterPoint, perturbed: &PerturbedCounts) -> Result<f64> {
    loglik(Model::Davidson, point, perturbed)
}

pub fn loglik_home_field(point: &ParameterPoint, perturbed: &PerturbedCounts) -> Result<f64> {
    loglik(Model::HomeField, point, perturbed)
}

pub fn loglik_david(point: &ParameterPoint, perturbed: &PerturbedCounts) -> Result<f64> {
    loglik(Model::David, point, perturbed)
}

/// Gradient with respect to the free merits `beta_1 .. beta_{t-1}`, then
/// `phi` and `log_gamma` where the model has them.
pub fn gradient(
    model: Model,
    point: &ParameterPoint,
    perturbed: &PerturbedCounts,
) -> Result<Vec<f64>> {
    let obj = Objective::new(model, perturbed)?;
    let (_, mut g) = obj.value_and_full_gradient(point)?;
    g.remove(0);
    Ok(g)
}

/// Outcome probabilities `(i wins, j wins, tie)` for one comparison.
///
/// For venue-aware models a neutral venue means no home advantage.
pub fn probabilities(
    model: Model,
    point: &ParameterPoint,
    i: usize,
    j: usize,
    venue: Venue,
) -> Result<(f64, f64, f64)> {
    let t = point.beta.len();
    if i >= t || j >= t {
        return Err(Error::Dimension {
            expected: t,
            got: i.max(j) + 1,
        });
    }
    let (bi, bj) = (point.beta[i], point.beta[j]);
    let phi = || {
        point.phi.ok_or(Error::Dimension {
            expected: t + model.extra_params(),
            got: t,
        })
    };
    let lg = match (model.uses_venue(), venue) {
        (false, _) | (true, Venue::Neutral) => (0.0, 0.0),
        (true, v) => {
            let g = point.log_gamma.ok_or(Error::Dimension {
                expected: t + model.extra_params(),
                got: t,
            })?;
            if v == Venue::FirstHosts {
                (g, 0.0)
            } else {
                (0.0, g)
            }
        }
    };
    let (si, sj) = (bi + lg.0, bj + lg.1);
    Ok(match model {
        Model::BradleyTerry | Model::HomeField => {
            let p = sigmoid(si - sj);
            (p, 1.0 - p, 0.0)
        }
        Model::RaoKupper => {
            let phi = phi()?;
            if phi.is_nan() || phi <= 0.0 {
                return Err(Error::ThetaDomain(phi.exp()));
            }
            let win_i = sigmoid(si - sj - phi);
            let win_j = sigmoid(sj - si - phi);
            let tie = (log_theta_sq_minus_one(phi) - softplus(phi + sj - si) - softplus(phi + si - sj))
                .exp();
            (win_i, win_j, tie)
        }
        Model::Davidson | Model::David => {
            let (_, p) = softmax3([si, sj, phi()? + 0.5 * (bi + bj)]);
            (p[0], p[1], p[2])
        }
    })
}
