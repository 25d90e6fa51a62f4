//! Existence diagnostics on the comparison graphs.
//!
//! * Condition A: the win digraph (`i -> j` iff `a_ij > 0`) is strongly
//!   connected.
//! * Condition B: the comparison graph (`{i, j}` iff `n_ij > 0`) is connected.
//! * Condition C: every split of the teams has a cross game hosted on each
//!   side, which is exactly strong connectivity of the hosting digraph
//!   (`i -> j` iff `n_{ij.i} > 0`).
//!
//! Failing checks return a [`PartitionWitness`] chosen from the condensation:
//! the source component of the win digraph for A, the component of team 0
//! for B and the sink component of the hosting digraph for C. Ties between
//! candidate components go to the one holding the smallest team index.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{Condition, Dataset, MissingDirection, PartitionWitness};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(PartitionWitness),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn witness(&self) -> Option<&PartitionWitness> {
        match self {
            Verdict::Pass => None,
            Verdict::Fail(w) => Some(w),
        }
    }
}

/// Adjacency lists of the three graphs a dataset induces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonGraphs {
    pub win_digraph: Vec<Vec<usize>>,
    pub comparison_graph: Vec<Vec<usize>>,
    pub hosting_digraph: Vec<Vec<usize>>,
}

impl ComparisonGraphs {
    pub fn new(dataset: &Dataset) -> Self {
        let tot = dataset.totals();
        Self {
            win_digraph: adjacency(&tot.wins.mapv(|x| x > 0)),
            comparison_graph: adjacency(&tot.games.mapv(|x| x > 0)),
            hosting_digraph: adjacency(&tot.hosted.mapv(|x| x > 0)),
        }
    }
}

/// Adjacency lists from a boolean edge matrix, ignoring the diagonal.
pub fn adjacency(edges: &Array2<bool>) -> Vec<Vec<usize>> {
    (0..edges.nrows())
        .map(|i| {
            (0..edges.ncols())
                .filter(|&j| j != i && edges[[i, j]])
                .collect()
        })
        .collect()
}

/// Strongly connected components by Kosaraju's algorithm.
///
/// Returns `comp[v]`, the component id of each vertex. Ids are assigned in
/// topological order of the condensation (sources first).
pub fn strongly_connected_components(graph: &[Vec<usize>]) -> Vec<usize> {
    let n = graph.len();
    let mut reversed = vec![Vec::new(); n];
    for (u, out) in graph.iter().enumerate() {
        for &v in out {
            reversed[v].push(u);
        }
    }

    // first pass: finishing order on the forward graph
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some((v, next)) = stack.last_mut() {
            if let Some(&w) = graph[*v].get(*next) {
                *next += 1;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(*v);
                stack.pop();
            }
        }
    }

    // second pass on the reversed graph in decreasing finish time
    let mut comp = vec![usize::MAX; n];
    let mut next_id = 0;
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        comp[root] = next_id;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &w in &reversed[v] {
                if comp[w] == usize::MAX {
                    comp[w] = next_id;
                    stack.push(w);
                }
            }
        }
        next_id += 1;
    }
    comp
}

#[derive(Clone, Copy)]
enum Pick {
    Source,
    Sink,
}

/// The source or sink component with the smallest member, as a partition.
fn extreme_component(graph: &[Vec<usize>], pick: Pick) -> Option<(Vec<usize>, Vec<usize>)> {
    let comp = strongly_connected_components(graph);
    let k = comp.iter().copied().max().map_or(0, |m| m + 1);
    if k <= 1 {
        return None;
    }
    let mut has_in = vec![false; k];
    let mut has_out = vec![false; k];
    for (u, out) in graph.iter().enumerate() {
        for &v in out {
            if comp[u] != comp[v] {
                has_out[comp[u]] = true;
                has_in[comp[v]] = true;
            }
        }
    }
    let candidate = |c: usize| match pick {
        Pick::Source => !has_in[c],
        Pick::Sink => !has_out[c],
    };
    // vertices in index order, so the first hit holds the smallest index
    let chosen = (0..graph.len()).map(|v| comp[v]).find(|&c| candidate(c))?;
    let (q1, q2) = (0..graph.len()).partition(|&v| comp[v] == chosen);
    Some((q1, q2))
}

pub fn is_strongly_connected(graph: &[Vec<usize>]) -> bool {
    extreme_component(graph, Pick::Source).is_none()
}

/// Condition A: the win digraph is strongly connected.
pub fn check_condition_a(dataset: &Dataset) -> Verdict {
    let graphs = ComparisonGraphs::new(dataset);
    match extreme_component(&graphs.win_digraph, Pick::Source) {
        None => Verdict::Pass,
        Some((q1, q2)) => Verdict::Fail(PartitionWitness {
            q1,
            q2,
            violated: Condition::A,
            missing: None,
        }),
    }
}

/// Strong connectivity of the digraph of positive entries of a weight
/// matrix. A failure is reported as a Condition A witness on those weights.
pub fn check_weights_strongly_connected(weights: &Array2<f64>) -> Verdict {
    let graph = adjacency(&weights.mapv(|x| x > 0.0));
    match extreme_component(&graph, Pick::Source) {
        None => Verdict::Pass,
        Some((q1, q2)) => Verdict::Fail(PartitionWitness {
            q1,
            q2,
            violated: Condition::A,
            missing: None,
        }),
    }
}

/// Condition B: the undirected comparison graph is connected.
pub fn check_condition_b(dataset: &Dataset) -> Verdict {
    let graphs = ComparisonGraphs::new(dataset);
    let n = dataset.num_teams();
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(v) = stack.pop() {
        for &w in &graphs.comparison_graph[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    let (q1, q2): (Vec<usize>, Vec<usize>) = (0..n).partition(|&v| seen[v]);
    if q2.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(PartitionWitness {
            q1,
            q2,
            violated: Condition::B,
            missing: None,
        })
    }
}

/// Condition C: in every split, each side both hosts and visits the other.
pub fn check_condition_c(dataset: &Dataset) -> Result<Verdict> {
    if dataset.is_venueless() {
        return Err(Error::VenuelessData("condition C"));
    }
    let graphs = ComparisonGraphs::new(dataset);
    Ok(match extreme_component(&graphs.hosting_digraph, Pick::Sink) {
        None => Verdict::Pass,
        Some((q1, q2)) => Verdict::Fail(PartitionWitness {
            q1,
            q2,
            violated: Condition::C,
            missing: Some(MissingDirection::Hosting),
        }),
    })
}

/// Re-evaluates a witness against the data: true iff it is a proper
/// partition and the named condition really fails across it.
pub fn witness_holds(dataset: &Dataset, witness: &PartitionWitness) -> bool {
    let n = dataset.num_teams();
    let mut side = vec![0u8; n];
    for &i in &witness.q1 {
        if i >= n || side[i] != 0 {
            return false;
        }
        side[i] = 1;
    }
    for &i in &witness.q2 {
        if i >= n || side[i] != 0 {
            return false;
        }
        side[i] = 2;
    }
    if witness.q1.is_empty() || witness.q2.is_empty() || side.contains(&0) {
        return false;
    }
    let tot = dataset.totals();
    let cross = |m: &Array2<u64>, from: &[usize], to: &[usize]| {
        from.iter().any(|&i| to.iter().any(|&j| m[[i, j]] > 0))
    };
    let (q1, q2) = (&witness.q1[..], &witness.q2[..]);
    match witness.violated {
        Condition::A => !cross(&tot.wins, q2, q1),
        Condition::B => !cross(&tot.games, q1, q2),
        Condition::C => match witness.missing {
            Some(MissingDirection::Hosting) => !cross(&tot.hosted, q1, q2),
            Some(MissingDirection::Visiting) => !cross(&tot.hosted, q2, q1),
            None => false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::{aggregate, GameRecord, Outcome};
    use crate::types::CountMatrices;
    use ndarray::array;

    fn example_one() -> Dataset {
        let a = array![[0, 2, 0, 1], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 2, 0]];
        Dataset::from_win_matrix((1..=4).map(|i| i.to_string()).collect(), a, None).unwrap()
    }

    #[test]
    fn kosaraju_components() {
        let g = vec![vec![1], vec![2], vec![0, 3], vec![4], vec![3]];
        let c = strongly_connected_components(&g);
        assert_eq!(c[0], c[1]);
        assert_eq!(c[1], c[2]);
        assert_eq!(c[3], c[4]);
        assert_ne!(c[0], c[3]);
        // sources first
        assert!(c[0] < c[3]);
        assert!(is_strongly_connected(&[vec![1], vec![0]]));
        assert!(!is_strongly_connected(&[vec![1], vec![]]));
    }

    #[test]
    fn example_one_fails_a_with_witness() {
        let d = example_one();
        let v = check_condition_a(&d);
        let w = v.witness().unwrap();
        assert_eq!(w.q1, vec![0, 1]);
        assert_eq!(w.q2, vec![2, 3]);
        assert!(witness_holds(&d, w));
        assert!(check_condition_b(&d).is_pass());
    }

    #[test]
    fn two_cycle_passes_a() {
        let d = Dataset::from_win_matrix(
            vec!["1".into(), "2".into()],
            array![[0, 1], [1, 0]],
            None,
        )
        .unwrap();
        assert!(check_condition_a(&d).is_pass());
    }

    #[test]
    fn isolated_vertex_fails_b() {
        let d = Dataset::from_win_matrix(
            vec!["1".into(), "2".into(), "3".into()],
            array![[0, 1, 0], [0, 0, 0], [0, 0, 0]],
            None,
        )
        .unwrap();
        let v = check_condition_b(&d);
        let w = v.witness().unwrap();
        assert_eq!((w.q1.clone(), w.q2.clone()), (vec![0, 1], vec![2]));
        assert!(witness_holds(&d, w));
    }

    #[test]
    fn condition_c_two_teams() {
        let home_and_home = aggregate(&[
            GameRecord::new("1", "2", Outcome::HomeWin),
            GameRecord::new("2", "1", Outcome::Tie),
        ])
        .unwrap();
        assert!(check_condition_c(&home_and_home).unwrap().is_pass());

        let one_game = aggregate(&[GameRecord::new("1", "2", Outcome::AwayWin)]).unwrap();
        let v = check_condition_c(&one_game).unwrap();
        let w = v.witness().unwrap();
        assert_eq!(w.q1, vec![1]);
        assert_eq!(w.q2, vec![0]);
        assert_eq!(w.missing, Some(MissingDirection::Hosting));
        assert!(witness_holds(&one_game, w));
    }

    #[test]
    fn condition_c_refuses_venueless() {
        assert!(matches!(
            check_condition_c(&example_one()),
            Err(Error::VenuelessData(_))
        ));
    }

    #[test]
    fn bogus_witnesses_are_rejected() {
        let d = example_one();
        let w = PartitionWitness {
            q1: vec![2, 3],
            q2: vec![0, 1],
            violated: Condition::A,
            missing: None,
        };
        assert!(!witness_holds(&d, &w));
        let overlapping = PartitionWitness {
            q1: vec![0, 1],
            q2: vec![1, 2, 3],
            violated: Condition::A,
            missing: None,
        };
        assert!(!witness_holds(&d, &overlapping));
    }

    #[test]
    fn no_games_at_all() {
        let d = Dataset::new(
            vec!["x".into(), "y".into()],
            CountMatrices::zeros(2),
            false,
        )
        .unwrap();
        assert!(!check_condition_a(&d).is_pass());
        assert!(!check_condition_b(&d).is_pass());
        assert!(!check_condition_c(&d).unwrap().is_pass());
    }
}
