//! Synthetic inputs for the benchmarks.

use btrank::sim::simulate_round_robin;
use btrank::{CountMatrices, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(t: usize) -> Vec<String> {
    (0..t).map(|i| format!("T{i}")).collect()
}

/// Venue-free round robin with `games` meetings per pair.
pub fn round_robin(t: usize, games: u64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, wins) = simulate_round_robin(t, games, (1.0, 2.0), &mut rng);
    Dataset::from_win_matrix(names(t), wins, None).expect("valid round robin")
}

/// Home-and-home schedule with ties at rate `tie_rate`.
pub fn home_and_home(t: usize, tie_rate: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..t).map(|_| rng.random_range(1.0..2.0)).collect();
    let mut c = CountMatrices::zeros(t);
    for h in 0..t {
        for v in 0..t {
            if h == v {
                continue;
            }
            if rng.random_bool(tie_rate) {
                c.t_home[[h, v]] += 1;
            } else if rng.random_bool(1.2 * u[h] / (1.2 * u[h] + u[v])) {
                c.a_home[[h, v]] += 1;
            } else {
                c.a_away[[v, h]] += 1;
            }
        }
    }
    Dataset::new(names(t), c, false).expect("valid schedule")
}
