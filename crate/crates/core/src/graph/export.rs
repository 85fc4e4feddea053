//! Plain-text edge-list export.
//!
//! ```text
//! # gepo transition graph
//! # revision 3 metric betweenness
//! E 0 1 4 0.333333
//! V 0 5 0.000000
//! ```
//!
//! Body lines are sorted as strings so the output is byte-stable.

use std::fmt::Write as _;

use super::{CentralityScores, TransitionGraph};
use crate::error::{GepoError, Result};
use crate::scalar::Scalar;

pub fn export_graph<T: Scalar>(graph: &TransitionGraph<T>, scores: &CentralityScores<T>) -> Result<String> {
    if scores.revision() != graph.revision() {
        return Err(GepoError::RevisionMismatch { snapshot: scores.revision(), graph: graph.revision() });
    }
    let mut lines: Vec<String> = Vec::with_capacity(graph.vertex_count() + graph.edge_count());
    for i in 0..graph.vertex_count() {
        let k = super::StateKey(i);
        let visits = graph.visits(k).unwrap_or(0);
        lines.push(format!("V {} {} {:.6}", k, visits, scores.node(k).as_f64()));
    }
    for ((s, d), count) in graph.edges() {
        lines.push(format!("E {} {} {} {:.6}", s, d, count, scores.edge(s, d).as_f64()));
    }
    lines.sort();

    let mut doc = String::new();
    doc.push_str("# gepo transition graph\n");
    let _ = writeln!(doc, "# revision {} metric {}", graph.revision(), scores.metric());
    for l in lines {
        doc.push_str(&l);
        doc.push('\n');
    }
    Ok(doc)
}
