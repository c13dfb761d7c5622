//! Graphviz export.

use std::fmt::Write as _;

use crate::model::{Chain, WeightedAutomaton};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn node(out: &mut String, chain: &Chain, s: usize, indent: &str) {
    let shape = if chain.is_absorbing(s) {
        "doublecircle"
    } else {
        "circle"
    };
    let _ = write!(out, "{indent}{} [shape={shape}", quote(chain.name(s)));
    if s == chain.initial() {
        out.push_str(", style=bold");
    }
    out.push_str("];\n");
}

fn edges(out: &mut String, chain: &Chain) {
    for s in 0..chain.num_states() {
        for (t, w) in chain.row(s) {
            let _ = writeln!(
                out,
                "  {} -> {} [label={}];",
                quote(chain.name(s)),
                quote(chain.name(*t)),
                quote(&w.to_string())
            );
        }
    }
}

pub fn to_dot(chain: &Chain) -> String {
    let mut out = String::from("digraph pmc {\n  rankdir=LR;\n");
    for s in 0..chain.num_states() {
        node(&mut out, chain, s, "  ");
    }
    edges(&mut out, chain);
    out.push_str("}\n");
    out
}

/// Derivative states are grouped in their own cluster.
pub fn wfa_to_dot(wfa: &WeightedAutomaton) -> String {
    let chain = wfa.chain();
    let mut out = String::from("digraph wfa {\n  rankdir=LR;\n");
    for s in 0..wfa.base_states() {
        node(&mut out, chain, s, "  ");
    }
    let _ = writeln!(
        out,
        "  subgraph cluster_derivative {{\n    label={};",
        quote(&format!("d/d{}", wfa.params().name(wfa.param())))
    );
    for s in wfa.base_states()..chain.num_states() {
        node(&mut out, chain, s, "    ");
    }
    out.push_str("  }\n");
    edges(&mut out, chain);
    out.push_str("}\n");
    out
}
