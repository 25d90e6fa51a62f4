//! Aligned text tables. Floats are shown to 3 decimals.

use std::fmt::Write;

use btrank::ranking::{ConferenceSeeds, SweepReport};
use btrank::ConsistencyReport;

use crate::{CheckReport, ConditionReport, FitReport, MapEntry};

/// Left-aligned first column, right-aligned others.
fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let width: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain([header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (c, cell) in cells.iter().enumerate() {
            let pad = width[c] - cell.chars().count();
            if c == 0 {
                s.push_str(cell);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str("  ");
                s.push_str(&" ".repeat(pad));
                s.push_str(cell);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

fn condition_line(label: &str, c: &ConditionReport) -> String {
    match &c.description {
        None => format!("{label}: pass\n"),
        Some(d) => format!("{label}: fail ({d})\n"),
    }
}

pub fn check(r: &CheckReport) -> String {
    let mut s = condition_line("condition A (win digraph strongly connected)", &r.a);
    s += &condition_line("condition B (comparison graph connected)", &r.b);
    match &r.c {
        Some(c) => s += &condition_line("condition C (hosting digraph strongly connected)", c),
        None => s += "condition C (hosting digraph strongly connected): not applicable (no venue information)\n",
    }
    s
}

pub fn fit(r: &FitReport) -> String {
    let f = &r.fit;
    let mut s = String::new();
    let eps = f.epsilon.map(f3).unwrap_or_else(|| "-".into());
    let _ = writeln!(s, "model: {}  epsilon: {eps}", f.model);
    let rows: Vec<Vec<String>> = f
        .teams
        .iter()
        .enumerate()
        .map(|(i, t)| vec![t.clone(), f3(f.merits[i]), format!("{}", f.scores[i])])
        .collect();
    s += &table(&["team".into(), "merit".into(), "wins".into()], &rows);
    if let Some(theta) = f.theta {
        let _ = writeln!(s, "theta: {}", f3(theta));
    }
    if let Some(gamma) = f.gamma {
        let _ = writeln!(s, "gamma: {}", f3(gamma));
    }
    let _ = writeln!(s, "log-likelihood: {}", f3(f.log_likelihood));
    let _ = writeln!(
        s,
        "converged: {} after {} iterations (gradient sup-norm {:.1e})",
        if f.converged { "yes" } else { "no" },
        f.iterations,
        f.gradient_sup_norm
    );
    let _ = writeln!(s, "ranking: {}", r.ranking.display_with(Some(&f.teams)));
    s
}

pub fn sweep(r: &SweepReport) -> String {
    let Some(first) = r.entries.first() else {
        return String::new();
    };
    let teams = &first.fit.teams;
    let mut header = vec!["team".to_string()];
    header.extend(r.entries.iter().map(|e| format!("eps={}", f3(e.epsilon))));
    let rows: Vec<Vec<String>> = teams
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut row = vec![t.clone()];
            row.extend(r.entries.iter().map(|e| f3(e.fit.merits[i])));
            row
        })
        .collect();
    let mut s = table(&header, &rows);
    for e in &r.entries {
        let _ = writeln!(s, "eps={}: {}", f3(e.epsilon), e.ranking.display_with(Some(teams)));
    }
    let _ = writeln!(s, "stable: {}", r.stable);
    s
}

pub fn map(entries: &[MapEntry]) -> String {
    let Some(first) = entries.first() else {
        return String::new();
    };
    let teams = &first.fit.teams;
    let mut header = vec!["team".to_string()];
    header.extend(entries.iter().map(|e| format!("d={}", e.shape)));
    let rows: Vec<Vec<String>> = teams
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut row = vec![t.clone()];
            row.extend(entries.iter().map(|e| f3(e.fit.merits[i])));
            row
        })
        .collect();
    let mut s = table(&header, &rows);
    for e in entries {
        let _ = writeln!(
            s,
            "d={} (b={}): {}",
            e.shape,
            f3(e.rate),
            e.ranking.display_with(Some(teams))
        );
    }
    s
}

pub fn seeds(by_merit: &[ConferenceSeeds], by_pct: &[ConferenceSeeds]) -> String {
    let mut s = String::new();
    for (m, p) in by_merit.iter().zip(by_pct) {
        let _ = writeln!(s, "{}", m.conference);
        let rows: Vec<Vec<String>> = m
            .seeds
            .iter()
            .zip(&p.seeds)
            .map(|(a, b)| {
                vec![
                    a.seed.to_string(),
                    a.team.clone(),
                    f3(a.key),
                    b.team.clone(),
                    f3(b.key),
                ]
            })
            .collect();
        let header = ["seed", "by merit", "merit", "by pct", "pct"].map(String::from);
        s += &table(&header, &rows);
    }
    s
}

pub fn simulate(r: &ConsistencyReport) -> String {
    let rows: Vec<Vec<String>> = r
        .summaries
        .iter()
        .map(|x| vec![x.t.to_string(), f3(x.epsilon), f3(x.median), f3(x.p90)])
        .collect();
    let header = ["t", "epsilon", "median", "p90"].map(String::from);
    let mut s = table(&header, &rows);
    let _ = writeln!(s, "median strictly decreasing: {}", r.median_strictly_decreasing());
    s
}
