mod common;

use btrank::ingestion::{aggregate, parse_records, write_records_csv, RecordFormat};
use btrank::ranking::extract_ranking;
use btrank::solver::{mm_step, ConcaveObjective};
use btrank::{
    check_condition_a, check_condition_b, check_condition_c, fit, fit_bt_matrix, fit_map_em,
    loglik, maximize_concave, perturb, probabilities, run_consistency, witness_holds,
    ConsistencyConfig, CountMatrices, Dataset, GameRecord, MapPriorSpec, Model, ModelSpec,
    Normalization, Objective, Outcome, PerturbationSpec, SolverConfig, Venue,
};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn model_strategy() -> impl Strategy<Value = Model> {
    prop::sample::select(Model::ALL.to_vec())
}

/// Venue data with ties that satisfies every model's existence condition.
fn well_posed(seed: u64, t: usize) -> Dataset {
    let mut rng = rng(seed);
    loop {
        let d = random_venue_dataset(&mut rng, t, 0.7, 0.25);
        if d.total_ties() > 0 && check_condition_c(&d).unwrap().is_pass() {
            return d;
        }
    }
}

fn records_strategy() -> impl Strategy<Value = Vec<GameRecord>> {
    let outcome = prop::sample::select(vec![Outcome::HomeWin, Outcome::AwayWin, Outcome::Tie]);
    prop::collection::vec((0usize..6, 1usize..6, outcome, 1u64..4), 1..30).prop_map(|v| {
        v.into_iter()
            .map(|(h, off, o, r)| {
                let a = (h + off) % 6;
                GameRecord::new(format!("team {h}"), format!("team {a}"), o).repeated(r)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn totals_are_permutation_equivariant(seed in any::<u64>(), t in 2usize..7) {
        let d = random_venue_dataset(&mut rng(seed), t, 0.5, 0.2);
        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..t).collect();
            p.rotate_left(seed as usize % t);
            p
        };
        let c = d.counts();
        let mut q = CountMatrices::zeros(t);
        for i in 0..t {
            for j in 0..t {
                q.a_home[[perm[i], perm[j]]] = c.a_home[[i, j]];
                q.a_away[[perm[i], perm[j]]] = c.a_away[[i, j]];
                q.t_home[[perm[i], perm[j]]] = c.t_home[[i, j]];
            }
        }
        let (a, b) = (c.derive_totals(), q.derive_totals());
        prop_assert_eq!(&a, &c.derive_totals());
        for i in 0..t {
            for j in 0..t {
                prop_assert_eq!(a.wins[[i, j]], b.wins[[perm[i], perm[j]]]);
                prop_assert_eq!(a.games[[i, j]], b.games[[perm[i], perm[j]]]);
                prop_assert_eq!(a.hosted[[i, j]], b.hosted[[perm[i], perm[j]]]);
                prop_assert_eq!(a.games[[i, j]], a.games[[j, i]]);
                prop_assert_eq!(a.ties[[i, j]], a.ties[[j, i]]);
            }
        }
    }

    #[test]
    fn aggregation_conserves_games(records in records_strategy()) {
        let d = aggregate(&records).unwrap();
        let played: u64 = records.iter().map(|r| r.repeat).sum();
        let tot = d.totals();
        prop_assert_eq!(tot.wins.sum() + d.total_ties(), played);
        prop_assert_eq!(tot.games.sum(), 2 * played);
    }

    #[test]
    fn csv_round_trip(records in records_strategy()) {
        let text = write_records_csv(&records);
        let back = parse_records(text.as_bytes(), RecordFormat::Csv).unwrap();
        prop_assert_eq!(back, records);
    }

    #[test]
    fn improved_perturbation_shape(seed in any::<u64>(), t in 2usize..7, eps in 0.01f64..2.0) {
        let d = random_venue_dataset(&mut rng(seed), t, 0.5, 0.3);
        let p = perturb(&d, &PerturbationSpec::Improved { epsilon: eps }).unwrap();
        let tot = d.totals();
        prop_assert_eq!(&p.t_home, &d.counts().t_home.mapv(|x| x as f64));
        let summed = p.venue_summed();
        for i in 0..t {
            for j in 0..t {
                let a = tot.wins[[i, j]] as f64;
                let k = ((summed[[i, j]] - a) / eps).round();
                prop_assert!((summed[[i, j]] - a - k * eps).abs() < 1e-12);
                prop_assert!((0.0..=2.0).contains(&k));
                prop_assert_eq!(k == 0.0, tot.games[[i, j]] == 0);
                let direct = p.a_tilde[[i, j]] - a;
                let expect = if tot.games[[i, j]] > 0 { eps } else { 0.0 };
                prop_assert!((direct - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one(seed in any::<u64>(), model in model_strategy()) {
        let mut r = rng(seed);
        let p = random_point(&mut r, model, 4);
        for venue in [Venue::Neutral, Venue::FirstHosts, Venue::SecondHosts] {
            let (w, l, t) = probabilities(model, &p, 0, 3, venue).unwrap();
            prop_assert!((w + l + t - 1.0).abs() <= 1e-12);
            prop_assert!(w > 0.0 && l > 0.0 && t >= 0.0);
        }
    }

    #[test]
    fn loglik_is_translation_invariant(seed in any::<u64>(), model in model_strategy(), c in -5.0f64..5.0) {
        let mut r = rng(seed);
        let d = well_posed(seed, 5);
        let pc = perturb(&d, &PerturbationSpec::Improved { epsilon: 0.3 }).unwrap();
        let p = random_point(&mut r, model, 5);
        let mut q = p.clone();
        q.beta.iter_mut().for_each(|b| *b += c);
        let (a, b) = (loglik(model, &p, &pc).unwrap(), loglik(model, &q, &pc).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn loglik_matches_product_form(seed in any::<u64>(), model in model_strategy(), t in 3usize..6) {
        let mut r = rng(seed);
        let d = well_posed(seed, t);
        let eps = r.random_range(0.05..1.5);
        let pc = perturb(&d, &PerturbationSpec::Improved { epsilon: eps }).unwrap();
        let p = random_point(&mut r, model, t);
        let got = loglik(model, &p, &pc).unwrap();
        let want = product_form_loglik(model, &p, &pc);
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn loglik_is_concave(seed in any::<u64>(), model in model_strategy(), lambda in 0.01f64..0.99) {
        let mut r = rng(seed);
        let d = well_posed(seed, 5);
        let pc = perturb(&d, &PerturbationSpec::Improved { epsilon: 0.3 }).unwrap();
        let obj = Objective::new(model, &pc).unwrap();
        let p = obj.to_vector(&random_point(&mut r, model, 5)).unwrap();
        let q = obj.to_vector(&random_point(&mut r, model, 5)).unwrap();
        let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let lhs = ConcaveObjective::value(&obj, &mix);
        let rhs = lambda * ConcaveObjective::value(&obj, &p) + (1.0 - lambda) * ConcaveObjective::value(&obj, &q);
        prop_assert!(lhs >= rhs - 1e-9);
    }

    #[test]
    fn mm_is_monotone(seed in any::<u64>(), t in 3usize..8, eps in 0.01f64..1.0) {
        let mut r = rng(seed);
        let d = random_win_matrix(&mut r, t, 0.6);
        prop_assume!(check_condition_b(&d).is_pass());
        let pc = perturb(&d, &PerturbationSpec::Improved { epsilon: eps }).unwrap();
        let obj = Objective::bradley_terry(&pc.a_tilde);
        let mut beta: Vec<f64> = (0..t).map(|_| r.random_range(-3.0..3.0)).collect();
        beta[0] = 0.0;
        let mut v = ConcaveObjective::value(&obj, &beta[1..]);
        for _ in 0..50 {
            beta = mm_step(&pc.a_tilde, &beta);
            let nv = ConcaveObjective::value(&obj, &beta[1..]);
            prop_assert!(nv >= v - 1e-12 * v.abs().max(1.0));
            v = nv;
        }
    }

    #[test]
    fn normalizations_agree(seed in any::<u64>(), model in model_strategy()) {
        let d = well_posed(seed, 5);
        let spec = ModelSpec::improved(model, 0.4);
        let a = fit(&spec, &d, &SolverConfig::default()).unwrap();
        let b = fit(&spec.with_normalization(Normalization::Simplex), &d, &SolverConfig::default()).unwrap();
        prop_assert!((a.merits[0] - 1.0).abs() < 1e-15);
        prop_assert!((b.merits.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let k = a.merits[0] / b.merits[0];
        for (x, y) in a.merits.iter().zip(&b.merits) {
            prop_assert!((x / y - k).abs() <= 1e-12 * k);
        }
        prop_assert_eq!(extract_ranking(&a), extract_ranking(&b));
        prop_assert_eq!(extract_ranking(&a), extract_ranking(&a.renormalized(Normalization::Simplex).unwrap()));
    }

    #[test]
    fn restarts_agree(seed in any::<u64>(), model in model_strategy()) {
        let d = well_posed(seed, 4);
        let config = SolverConfig { restarts: 4, seed, ..SolverConfig::default() };
        let f = fit(&ModelSpec::improved(model, 0.5), &d, &config).unwrap();
        prop_assert!(f.restart_spread.unwrap() <= 1e-6);
    }

    #[test]
    fn fitted_point_is_stationary(seed in any::<u64>(), model in model_strategy()) {
        let d = well_posed(seed, 5);
        let f = fit(&ModelSpec::improved(model, 0.5), &d, &SolverConfig::default()).unwrap();
        prop_assert!(f.gradient_sup_norm < 1e-6);
        let point = btrank::ParameterPoint { beta: f.beta.clone(), phi: f.theta.map(f64::ln), log_gamma: f.gamma.map(f64::ln) };
        let pc = perturb(&d, &PerturbationSpec::Improved { epsilon: 0.5 }).unwrap();
        let g = btrank::gradient(model, &point, &pc).unwrap();
        prop_assert!(g.iter().all(|x| x.abs() < 1e-6));
    }

    #[test]
    fn home_field_with_unit_gamma_is_bt_on_venue_sums(seed in any::<u64>()) {
        let d = well_posed(seed, 5);
        let pc = perturb(&d, &PerturbationSpec::Improved { epsilon: 0.4 }).unwrap();
        let obj = Objective::new(Model::HomeField, &pc).unwrap();
        struct UnitGamma(Objective);
        impl ConcaveObjective for UnitGamma {
            fn dimension(&self) -> usize { self.0.dimension() - 1 }
            fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
                let mut full = x.to_vec();
                full.push(0.0);
                let (v, mut g) = self.0.value_and_gradient(&full);
                g.pop();
                (v, g)
            }
        }
        let tight = SolverConfig { grad_tol: 1e-11, ..SolverConfig::default() };
        let slice = maximize_concave(&UnitGamma(obj), &[0.0; 4], &tight).unwrap();
        let bt = fit_bt_matrix(&pc.venue_summed(), &tight).unwrap();
        for (a, b) in slice.x.iter().zip(&bt.beta[1..]) {
            prop_assert!((a - b).abs() <= 1e-8, "{} vs {}", a, b);
        }
    }

    #[test]
    fn em_ascends_the_posterior(seed in any::<u64>(), shape in 1.05f64..4.0) {
        let d = random_win_matrix(&mut rng(seed), 5, 0.6);
        let f = fit_map_em(&d, &MapPriorSpec::new(shape), Normalization::Simplex, &SolverConfig::default()).unwrap();
        for w in f.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn witnesses_hold(seed in any::<u64>(), t in 2usize..8, density in 0.05f64..0.6) {
        let d = random_venue_dataset(&mut rng(seed), t, density, 0.2);
        for verdict in [check_condition_a(&d), check_condition_b(&d), check_condition_c(&d).unwrap()] {
            if let Some(w) = verdict.witness() {
                prop_assert!(witness_holds(&d, w));
            }
        }
        prop_assert_eq!(check_condition_c(&d).unwrap().is_pass(), condition_c_by_enumeration(&d));
    }
}

#[test]
fn simulation_is_deterministic() {
    let cfg = ConsistencyConfig {
        t_grid: vec![5, 8],
        replicas: 6,
        seed: 3,
        ..ConsistencyConfig::default()
    };
    let a = run_consistency(&cfg, &SolverConfig::default()).unwrap();
    let b = run_consistency(&cfg, &SolverConfig::default()).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert!(a.summaries.iter().flat_map(|s| &s.errors).all(|e| *e >= 0.0));
}
