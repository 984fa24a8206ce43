//! Terminal usage across evolved trees.

use std::fmt::Write as _;

use thiserror::Error;
use tsc_core::{terminal_frequencies, ExprTree, NUM_FEATURES};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("no trees to analyze")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalReport {
    /// Mean occurrences per tree of each terminal `x0..x15`.
    pub mean_counts: [f64; NUM_FEATURES],
    /// The two most frequent terminals, most frequent first; ties go to the lower index.
    pub top2: [usize; 2],
    pub trees: usize,
}

impl TerminalReport {
    /// `terminal,mean_count,top2` with one row per terminal.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("terminal,mean_count,top2\n");
        for (k, c) in self.mean_counts.iter().enumerate() {
            writeln!(out, "x{k},{c},{}", self.top2.contains(&k)).unwrap();
        }
        out
    }
}

pub fn analyze_terminals(trees: &[ExprTree]) -> Result<TerminalReport, AnalysisError> {
    if trees.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mean_counts = terminal_frequencies(trees);
    let mut order: Vec<usize> = (0..NUM_FEATURES).collect();
    // stable sort keeps lower indices first among equal counts
    order.sort_by(|&a, &b| mean_counts[b].total_cmp(&mean_counts[a]));
    Ok(TerminalReport {
        mean_counts,
        top2: [order[0], order[1]],
        trees: trees.len(),
    })
}
