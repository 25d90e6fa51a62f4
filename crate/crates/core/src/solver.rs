//! Penalized maximum likelihood and MAP-EM estimation.
//!
//! Bradley-Terry fits use the MM iteration
//! `u_i <- ã_i / sum_j ñ_ij / (u_i + u_j)` accelerated with SQUAREM, falling
//! back to the plain MM step whenever the extrapolation does not improve the
//! objective. The extended models are maximized in `(beta, phi, log gamma)`
//! by limited-memory quasi-Newton ascent with Armijo backtracking.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::connectivity::{
    check_condition_a, check_condition_b, check_condition_c, check_weights_strongly_connected,
    Verdict,
};
use crate::error::{Error, Result};
use crate::likelihood::Objective;
use crate::perturbation::perturb;
use crate::types::{
    Dataset, FitResult, Model, ModelSpec, Normalization, ParameterPoint, PerturbationSpec,
    StopReason,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop when the gradient sup-norm falls to this value.
    pub grad_tol: f64,
    /// Stop when the relative objective change stays below this value on two
    /// successive iterations.
    pub rel_ll_tol: f64,
    pub max_iters: usize,
    /// Extra fits from random starting points.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            rel_ll_tol: 1e-14,
            max_iters: 10_000,
            restarts: 0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return Err(Error::config(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if !(self.rel_ll_tol > 0.0 && self.rel_ll_tol.is_finite()) {
            return Err(Error::config(format!(
                "rel_ll_tol must be positive, got {}",
                self.rel_ll_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be positive"));
        }
        Ok(())
    }
}

/// A smooth concave function to maximize.
pub trait ConcaveObjective {
    fn dimension(&self) -> usize;

    /// Value and gradient; the value is `-inf` outside the domain.
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>);

    fn value(&self, x: &[f64]) -> f64 {
        self.value_and_gradient(x).0
    }
}

impl ConcaveObjective for Objective {
    fn dimension(&self) -> usize {
        Objective::dimension(self)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        Objective::value_and_gradient(self, x)
    }

    fn value(&self, x: &[f64]) -> f64 {
        Objective::value(self, x)
    }
}

/// Outcome of an ascent run.
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub gradient_sup_norm: f64,
    /// Objective value at the start and after every iteration.
    pub trace: Vec<f64>,
}

impl Maximum {
    pub fn converged(&self) -> bool {
        matches!(
            self.stop_reason,
            StopReason::Gradient | StopReason::LikelihoodStall
        )
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Tracks the two-in-a-row relative change rule.
struct Stall {
    tol: f64,
    run: u32,
}

impl Stall {
    fn new(tol: f64) -> Self {
        Self { tol, run: 0 }
    }

    fn update(&mut self, old: f64, new: f64) -> bool {
        let change = (new - old).abs();
        if change <= self.tol * old.abs().max(new.abs()) {
            self.run += 1;
        } else {
            self.run = 0;
        }
        self.run >= 2
    }

    fn reset(&mut self) {
        self.run = 0;
    }
}

const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 80;
/// A step that shrinks the gradient sup-norm by this factor does not count as stalled.
const GRADIENT_PROGRESS: f64 = 0.9;

/// Ascent with an L-BFGS direction and Armijo backtracking (initial step 1,
/// halving). Steps that leave the domain evaluate to `-inf` and are halved.
pub fn maximize_concave<O: ConcaveObjective + ?Sized>(
    objective: &O,
    start: &[f64],
    config: &SolverConfig,
) -> Result<Maximum> {
    config.validate()?;
    let n = objective.dimension();
    if start.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: start.len(),
        });
    }
    let mut x = start.to_vec();
    let (mut value, mut grad) = objective.value_and_gradient(&x);
    if !value.is_finite() {
        return Err(Error::config("starting point is outside the objective's domain"));
    }
    let mut trace = vec![value];
    let mut memory: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(LBFGS_MEMORY);
    let mut stall = Stall::new(config.rel_ll_tol);
    let mut iterations = 0;

    let stop_reason = loop {
        if sup_norm(&grad) <= config.grad_tol {
            break StopReason::Gradient;
        }
        if iterations >= config.max_iters {
            break StopReason::MaxIterations;
        }
        let mut direction = lbfgs_direction(&grad, &memory);
        if dot(&grad, &direction) <= 0.0 {
            memory.clear();
            direction = grad.clone();
        }
        let step = match armijo(objective, &x, value, &grad, &direction) {
            Some(s) => Some(s),
            None if !memory.is_empty() => {
                memory.clear();
                direction = grad.clone();
                armijo(objective, &x, value, &grad, &direction)
            }
            None => None,
        };
        let Some(x_new) = step else {
            break StopReason::LineSearch;
        };
        let (v_new, g_new) = objective.value_and_gradient(&x_new);
        iterations += 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        // curvature pair for the minimization of -objective
        let y: Vec<f64> = grad.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if memory.len() == LBFGS_MEMORY {
                memory.remove(0);
            }
            memory.push((s, y, 1.0 / sy));
        }

        let mut stalled = stall.update(value, v_new);
        if sup_norm(&g_new) < GRADIENT_PROGRESS * sup_norm(&grad) {
            stall.reset();
            stalled = false;
        }
        x = x_new;
        value = v_new;
        grad = g_new;
        trace.push(value);
        if stalled && sup_norm(&grad) > config.grad_tol {
            break StopReason::LikelihoodStall;
        }
    };

    Ok(Maximum {
        gradient_sup_norm: sup_norm(&grad),
        x,
        value,
        iterations,
        stop_reason,
        trace,
    })
}

/// Two-loop recursion; returns an ascent direction for the objective.
fn lbfgs_direction(grad: &[f64], memory: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.last() {
        let scale = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= scale);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}

fn armijo<O: ConcaveObjective + ?Sized>(
    objective: &O,
    x: &[f64],
    value: f64,
    grad: &[f64],
    direction: &[f64],
) -> Option<Vec<f64>> {
    let slope = dot(grad, direction);
    let noise = 8.0 * f64::EPSILON * value.abs().max(1.0);
    let mut alpha = 1.0;
    for _ in 0..MAX_HALVINGS {
        let trial: Vec<f64> = x.iter().zip(direction).map(|(a, d)| a + alpha * d).collect();
        let v = objective.value(&trial);
        if v.is_finite() && v >= value + ARMIJO_C1 * alpha * slope && v >= value {
            return Some(trial);
        }
        // values equal up to rounding: judge the step by the gradient instead
        if v.is_finite() && (v - value).abs() <= noise {
            let (_, g) = objective.value_and_gradient(&trial);
            if sup_norm(&g) < sup_norm(grad) {
                return Some(trial);
            }
        }
        alpha *= 0.5;
    }
    None
}

/// Bradley-Terry fit on an arbitrary win-weight matrix.
struct BtProblem {
    objective: Objective,
    /// `(i, j, ñ_ij)` for `i < j` with `ñ_ij > 0`.
    pairs: Vec<(usize, usize, f64)>,
    wins: Vec<f64>,
}

impl BtProblem {
    fn new(weights: &Array2<f64>) -> Self {
        let t = weights.nrows();
        let mut pairs = Vec::new();
        for i in 0..t {
            for j in (i + 1)..t {
                let n = weights[[i, j]] + weights[[j, i]];
                if n > 0.0 {
                    pairs.push((i, j, n));
                }
            }
        }
        Self {
            objective: Objective::bradley_terry(weights),
            pairs,
            wins: weights.rows().into_iter().map(|r| r.sum()).collect(),
        }
    }

    fn t(&self) -> usize {
        self.wins.len()
    }

    /// One MM update in log-merit space, re-pinned to `beta_0 = 0`.
    fn mm(&self, beta: &[f64]) -> Vec<f64> {
        let m = beta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let u: Vec<f64> = beta.iter().map(|b| (b - m).exp()).collect();
        let mut denom = vec![0.0; self.t()];
        for &(i, j, n) in &self.pairs {
            let r = n / (u[i] + u[j]);
            denom[i] += r;
            denom[j] += r;
        }
        let mut out: Vec<f64> = self
            .wins
            .iter()
            .zip(&denom)
            .zip(beta)
            .map(|((&a, &d), &b)| {
                if d > 0.0 {
                    a.ln() - d.ln() + m
                } else {
                    b
                }
            })
            .collect();
        let b0 = out[0];
        out.iter_mut().for_each(|b| *b -= b0);
        out
    }

    fn eval(&self, beta: &[f64]) -> (f64, Vec<f64>) {
        let b0 = beta[0];
        let x: Vec<f64> = beta[1..].iter().map(|b| b - b0).collect();
        self.objective.value_and_gradient(&x)
    }

    fn value(&self, beta: &[f64]) -> f64 {
        let b0 = beta[0];
        let x: Vec<f64> = beta[1..].iter().map(|b| b - b0).collect();
        self.objective.value(&x)
    }

    /// SQUAREM cycle (step length scheme 3) with a monotone safeguard.
    fn squarem(&self, beta: &[f64], value: f64) -> (Vec<f64>, f64) {
        let b1 = self.mm(beta);
        let b2 = self.mm(&b1);
        let v2 = self.value(&b2);
        let r: Vec<f64> = b1.iter().zip(beta).map(|(a, b)| a - b).collect();
        let v: Vec<f64> = b2
            .iter()
            .zip(&b1)
            .zip(&r)
            .map(|((c, b), r)| c - b - r)
            .collect();
        let (rn, vn) = (dot(&r, &r).sqrt(), dot(&v, &v).sqrt());
        if vn > 0.0 && rn > 0.0 {
            let alpha = -(rn / vn).max(1.0);
            let ext: Vec<f64> = beta
                .iter()
                .zip(&r)
                .zip(&v)
                .map(|((b, r), v)| b - 2.0 * alpha * r + alpha * alpha * v)
                .collect();
            if ext.iter().all(|b| b.is_finite()) {
                let stab = self.mm(&ext);
                let vs = self.value(&stab);
                if vs.is_finite() && vs >= v2 && vs >= value {
                    return (stab, vs);
                }
            }
        }
        (b2, v2)
    }

    fn solve(&self, start: &[f64], config: &SolverConfig) -> Maximum {
        let mut beta = start.to_vec();
        let b0 = beta[0];
        beta.iter_mut().for_each(|b| *b -= b0);
        let (mut value, mut grad) = self.eval(&beta);
        let mut trace = vec![value];
        let mut stall = Stall::new(config.rel_ll_tol);
        let mut iterations = 0;
        let stop_reason = loop {
            if sup_norm(&grad) <= config.grad_tol {
                break StopReason::Gradient;
            }
            if iterations >= config.max_iters {
                break StopReason::MaxIterations;
            }
            let (next, v_next) = self.squarem(&beta, value);
            iterations += 1;
            let mut stalled = stall.update(value, v_next);
            beta = next;
            let (v, g) = self.eval(&beta);
            if sup_norm(&g) < GRADIENT_PROGRESS * sup_norm(&grad) {
                stall.reset();
                stalled = false;
            }
            value = v;
            grad = g;
            trace.push(value);
            if stalled && sup_norm(&grad) > config.grad_tol {
                break StopReason::LikelihoodStall;
            }
        };
        Maximum {
            x: beta[1..].to_vec(),
            value,
            iterations,
            stop_reason,
            gradient_sup_norm: sup_norm(&grad),
            trace,
        }
    }
}

/// One plain MM update for the Bradley-Terry likelihood with win weights
/// `weights`, in log-merit space (`beta_0` pinned to zero in the output).
pub fn mm_step(weights: &Array2<f64>, beta: &[f64]) -> Vec<f64> {
    BtProblem::new(weights).mm(beta)
}

fn random_start(model: Model, dim: usize, t: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..t - 1).map(|_| rng.random_range(-2.0..2.0)).collect();
    if model.has_ties() {
        x.push(match model {
            Model::RaoKupper => rng.random_range(0.05..2.0),
            _ => rng.random_range(-2.0..2.0),
        });
    }
    if model.uses_venue() {
        x.push(rng.random_range(-1.0..1.0));
    }
    debug_assert_eq!(x.len(), dim);
    x
}

fn existence(verdict: Verdict) -> Result<()> {
    match verdict {
        Verdict::Pass => Ok(()),
        Verdict::Fail(witness) => Err(Error::Existence { witness }),
    }
}

/// Checks that the penalized estimate exists for this model and data.
fn check_existence(spec: &ModelSpec, dataset: &Dataset) -> Result<()> {
    let model = spec.model;
    if model.uses_venue() && dataset.is_venueless() {
        return Err(Error::VenuelessData(model.name()));
    }
    if model.has_ties() && dataset.total_ties() == 0 {
        return Err(Error::NoTies { model: model.name() });
    }
    match (&spec.perturbation, model.uses_venue()) {
        (PerturbationSpec::Improved { .. }, true) => existence(check_condition_c(dataset)?),
        (PerturbationSpec::Improved { .. }, false) => existence(check_condition_b(dataset)),
        (_, true) => Err(Error::config(format!(
            "{} supports only the improved perturbation",
            model.name()
        ))),
        (_, false) => Ok(()),
    }
}

/// Penalized maximum likelihood fit of `spec` to `dataset`.
///
/// Refuses with [`Error::Existence`], [`Error::NoTies`] or
/// [`Error::VenuelessData`] when the estimate does not exist, and returns
/// [`Error::NonConvergence`] (carrying the last iterate) when the iteration
/// budget runs out.
pub fn fit(spec: &ModelSpec, dataset: &Dataset, config: &SolverConfig) -> Result<FitResult> {
    config.validate()?;
    check_existence(spec, dataset)?;
    let perturbed = perturb(dataset, &spec.perturbation)?;
    if !matches!(spec.perturbation, PerturbationSpec::Improved { .. }) {
        existence(check_weights_strongly_connected(&perturbed.a_tilde))?;
    }
    let t = dataset.num_teams();
    let model = spec.model;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let (best, spread) = if model == Model::BradleyTerry {
        let problem = BtProblem::new(&perturbed.a_tilde);
        let primary = problem.solve(&vec![0.0; t], config);
        let mut runs = vec![primary];
        for _ in 0..config.restarts {
            let mut start = vec![0.0];
            start.extend(random_start(model, t - 1, t, &mut rng));
            runs.push(problem.solve(&start, config));
        }
        pick_best(runs)
    } else {
        let objective = Objective::new(model, &perturbed)?;
        let start = objective.to_vector(&ParameterPoint::initial(model, t))?;
        let mut runs = vec![maximize_concave(&objective, &start, config)?];
        for _ in 0..config.restarts {
            let start = random_start(model, objective.dimension(), t, &mut rng);
            runs.push(maximize_concave(&objective, &start, config)?);
        }
        pick_best(runs)
    };

    let mut beta = vec![0.0];
    beta.extend_from_slice(&best.x[..t - 1]);
    let extra = &best.x[t - 1..];
    let theta = model.has_ties().then(|| extra[0].exp());
    let gamma = model
        .uses_venue()
        .then(|| extra[model.has_ties() as usize].exp());
    let result = FitResult {
        model,
        teams: dataset.teams().to_vec(),
        merits: spec.normalization.apply(&beta)?,
        normalization: spec.normalization,
        beta,
        theta,
        gamma,
        log_likelihood: best.value,
        iterations: best.iterations,
        converged: best.converged(),
        stop_reason: best.stop_reason,
        gradient_sup_norm: best.gradient_sup_norm,
        scores: dataset.win_scores().iter().map(|&a| a as f64).collect(),
        epsilon: spec.perturbation.epsilon(),
        restart_spread: spread,
        trace: best.trace,
    };
    if result.converged {
        Ok(result)
    } else {
        Err(Error::NonConvergence(Box::new(result)))
    }
}

/// Best run by objective value, plus the largest sup-norm distance of the
/// other runs' parameters from it when there was more than one run.
fn pick_best(runs: Vec<Maximum>) -> (Maximum, Option<f64>) {
    let best_idx = runs
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| if r.value > runs[b].value { i } else { b });
    let spread = (runs.len() > 1).then(|| {
        runs.iter()
            .map(|r| {
                r.x.iter()
                    .zip(&runs[best_idx].x)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .fold(0.0, f64::max)
    });
    let best = runs.into_iter().nth(best_idx).expect("at least one run");
    (best, spread)
}

/// Bradley-Terry fit on a nonnegative (possibly fractional) win-weight
/// matrix. Teams are named by index.
pub fn fit_bt_matrix(weights: &Array2<f64>, config: &SolverConfig) -> Result<FitResult> {
    config.validate()?;
    let t = weights.nrows();
    if t < 2 || weights.ncols() != t {
        return Err(Error::Shape(format!(
            "weight matrix must be square with at least 2 rows, got {}x{}",
            t,
            weights.ncols()
        )));
    }
    if let Some(((i, j), &v)) = weights.indexed_iter().find(|(_, v)| v.is_nan() || **v < 0.0) {
        return Err(Error::NegativeCount {
            matrix: "weights",
            row: i,
            col: j,
            value: v,
        });
    }
    existence(check_weights_strongly_connected(weights))?;
    let problem = BtProblem::new(weights);
    let best = problem.solve(&vec![0.0; t], config);
    let mut beta = vec![0.0];
    beta.extend_from_slice(&best.x);
    let result = FitResult {
        model: Model::BradleyTerry,
        teams: (0..t).map(|i| i.to_string()).collect(),
        merits: Normalization::default().apply(&beta)?,
        normalization: Normalization::default(),
        beta,
        theta: None,
        gamma: None,
        log_likelihood: best.value,
        iterations: best.iterations,
        converged: best.converged(),
        stop_reason: best.stop_reason,
        gradient_sup_norm: best.gradient_sup_norm,
        scores: problem.wins.clone(),
        epsilon: None,
        restart_spread: None,
        trace: best.trace,
    };
    if result.converged {
        Ok(result)
    } else {
        Err(Error::NonConvergence(Box::new(result)))
    }
}

/// Independent Gamma(d, b) priors on the merits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapPriorSpec {
    pub shape: f64,
    /// `None` selects the default `b = d t - 1`.
    pub rate: Option<f64>,
}

impl MapPriorSpec {
    pub fn new(shape: f64) -> Self {
        Self { shape, rate: None }
    }

    pub fn with_rate(shape: f64, rate: f64) -> Self {
        Self {
            shape,
            rate: Some(rate),
        }
    }

    pub fn resolved_rate(&self, t: usize) -> f64 {
        self.rate.unwrap_or(self.shape * t as f64 - 1.0)
    }

    /// `(d, b) = (1, 0)` makes the MAP estimate the plain maximum likelihood
    /// estimate.
    pub fn is_ml_equivalent(&self, t: usize) -> bool {
        self.shape == 1.0 && self.resolved_rate(t) == 0.0
    }

    fn validate(&self, t: usize) -> Result<()> {
        if !(self.shape >= 1.0 && self.shape.is_finite()) {
            return Err(Error::config(format!(
                "prior shape must be at least 1, got {}",
                self.shape
            )));
        }
        let b = self.resolved_rate(t);
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::config(format!("prior rate must be nonnegative, got {b}")));
        }
        Ok(())
    }
}

/// Merits and expected latent totals `E[Z_ij] = n_ij / (u_i + u_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmIterationState {
    pub u: Vec<f64>,
    pub expected_latents: Array2<f64>,
}

struct EmProblem {
    /// `(i, j, n_ij)` for `i < j` with `n_ij > 0`.
    pairs: Vec<(usize, usize, f64)>,
    /// Win counts with a tie worth half a win to each side.
    wins: Array2<f64>,
    scores: Vec<f64>,
    shape: f64,
    rate: f64,
}

impl EmProblem {
    fn new(dataset: &Dataset, prior: &MapPriorSpec) -> Self {
        let tot = dataset.totals();
        let t = dataset.num_teams();
        let wins = tot.wins.mapv(|x| x as f64) + tot.ties.mapv(|x| 0.5 * x as f64);
        let mut pairs = Vec::new();
        for i in 0..t {
            for j in (i + 1)..t {
                let n = tot.games[[i, j]] as f64;
                if n > 0.0 {
                    pairs.push((i, j, n));
                }
            }
        }
        Self {
            pairs,
            scores: wins.rows().into_iter().map(|r| r.sum()).collect(),
            wins,
            shape: prior.shape,
            rate: prior.resolved_rate(t),
        }
    }

    fn latent_sums(&self, u: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; u.len()];
        for &(i, j, n) in &self.pairs {
            let z = n / (u[i] + u[j]);
            s[i] += z;
            s[j] += z;
        }
        s
    }

    fn step(&self, u: &[f64]) -> Vec<f64> {
        let s = self.latent_sums(u);
        let mut next: Vec<f64> = self
            .scores
            .iter()
            .zip(&s)
            .map(|(a, z)| (self.shape - 1.0 + a) / (self.rate + z))
            .collect();
        if self.rate == 0.0 {
            // scale is unidentified without a rate; keep it on the simplex
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= total);
        }
        next
    }

    /// Log posterior density up to an additive constant.
    fn log_posterior(&self, u: &[f64]) -> f64 {
        let t = u.len();
        let mut v = 0.0;
        for i in 0..t {
            for j in 0..t {
                let a = self.wins[[i, j]];
                if a > 0.0 {
                    v += a * (u[i] / (u[i] + u[j])).ln();
                }
            }
            v += (self.shape - 1.0) * u[i].ln() - self.rate * u[i];
        }
        v
    }

    /// Gradient of the log posterior with respect to `log u`.
    fn log_gradient(&self, u: &[f64]) -> Vec<f64> {
        let s = self.latent_sums(u);
        let mut g: Vec<f64> = (0..u.len())
            .map(|i| self.scores[i] + self.shape - 1.0 - u[i] * (self.rate + s[i]))
            .collect();
        if self.rate == 0.0 {
            let mean = g.iter().sum::<f64>() / g.len() as f64;
            g.iter_mut().for_each(|x| *x -= mean);
        }
        g
    }
}

/// One EM update under the Gamma prior, with the latent expectations used.
pub fn em_step(dataset: &Dataset, prior: &MapPriorSpec, u: &[f64]) -> EmIterationState {
    let problem = EmProblem::new(dataset, prior);
    let t = u.len();
    let mut expected_latents = Array2::zeros((t, t));
    for &(i, j, n) in &problem.pairs {
        let z = n / (u[i] + u[j]);
        expected_latents[[i, j]] = z;
        expected_latents[[j, i]] = z;
    }
    EmIterationState {
        u: problem.step(u),
        expected_latents,
    }
}

/// MAP estimate of Bradley-Terry merits under independent Gamma priors,
/// computed by EM. Ties count as half a win for each side.
pub fn fit_map_em(
    dataset: &Dataset,
    prior: &MapPriorSpec,
    normalization: Normalization,
    config: &SolverConfig,
) -> Result<FitResult> {
    config.validate()?;
    let t = dataset.num_teams();
    prior.validate(t)?;
    if prior.shape == 1.0 {
        existence(check_condition_a(dataset))?;
    }
    let problem = EmProblem::new(dataset, prior);
    let mut u = vec![1.0 / t as f64; t];
    let mut value = problem.log_posterior(&u);
    let mut grad = problem.log_gradient(&u);
    let mut trace = vec![value];
    let mut stall = Stall::new(config.rel_ll_tol);
    let mut iterations = 0;
    let stop_reason = loop {
        if sup_norm(&grad) <= config.grad_tol {
            break StopReason::Gradient;
        }
        if iterations >= config.max_iters {
            break StopReason::MaxIterations;
        }
        u = problem.step(&u);
        iterations += 1;
        let v = problem.log_posterior(&u);
        let stalled = stall.update(value, v);
        value = v;
        grad = problem.log_gradient(&u);
        trace.push(value);
        if stalled && sup_norm(&grad) > config.grad_tol {
            break StopReason::LikelihoodStall;
        }
    };
    let beta: Vec<f64> = u.iter().map(|x| (x / u[0]).ln()).collect();
    let converged = matches!(
        stop_reason,
        StopReason::Gradient | StopReason::LikelihoodStall
    );
    let result = FitResult {
        model: Model::BradleyTerry,
        teams: dataset.teams().to_vec(),
        merits: normalization.apply(&beta)?,
        normalization,
        beta,
        theta: None,
        gamma: None,
        log_likelihood: value,
        iterations,
        converged,
        stop_reason,
        gradient_sup_norm: sup_norm(&grad),
        scores: problem.scores.clone(),
        epsilon: None,
        restart_spread: None,
        trace,
    };
    if converged {
        Ok(result)
    } else {
        Err(Error::NonConvergence(Box::new(result)))
    }
}
