//! Graphviz output for nets, controlled nets and reachability graphs.

use std::fmt::Write;

use crate::monitor::ControlledNet;
use crate::net::{PetriNet, ReachabilityGraph};

fn quote(s: &str) -> String {
    let escaped = s
        .replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', "\\n");
    format!("\"{escaped}\"")
}

fn place_node(out: &mut String, id: &str, tokens: u64, monitor: bool) {
    let label = if tokens == 0 {
        id.to_string()
    } else if tokens == 1 {
        format!("{id}\n•")
    } else {
        format!("{id}\n{tokens}")
    };
    let style = if monitor {
        ", style=filled, fillcolor=gray"
    } else {
        ""
    };
    writeln!(
        out,
        "  {} [shape=circle, label={}{style}];",
        quote(id),
        quote(&label)
    )
    .unwrap();
}

fn transition_nodes(out: &mut String, net: &PetriNet) {
    for t in net.transitions() {
        let style = if t.controllable { "solid" } else { "dashed" };
        writeln!(out, "  {} [shape=box, style={style}];", quote(&t.id)).unwrap();
    }
}

fn base_arcs(out: &mut String, net: &PetriNet) {
    for (t, tr) in net.transitions().iter().enumerate() {
        for p in net.inputs(t).iter() {
            writeln!(out, "  {} -> {};", quote(&net.places()[p]), quote(&tr.id)).unwrap();
        }
        for p in net.outputs(t).iter() {
            writeln!(out, "  {} -> {};", quote(&tr.id), quote(&net.places()[p])).unwrap();
        }
    }
}

/// Places as circles (tokens in the label), transitions as boxes;
/// uncontrollable transitions are dashed.
pub fn net_to_dot(net: &PetriNet) -> String {
    let mut out = String::from("digraph net {\n  rankdir=LR;\n");
    for (id, &m) in net.places().iter().zip(net.initial_marking().bits()) {
        place_node(&mut out, id, u64::from(m), false);
    }
    transition_nodes(&mut out, net);
    base_arcs(&mut out, net);
    out.push_str("}\n");
    out
}

/// Like [`net_to_dot`], with monitor places and their arcs drawn in gray.
pub fn controlled_to_dot(cn: &ControlledNet) -> String {
    let net = &cn.base;
    let mut out = String::from("digraph controlled {\n  rankdir=LR;\n");
    for (id, &m) in net.places().iter().zip(net.initial_marking().bits()) {
        place_node(&mut out, id, u64::from(m), false);
    }
    for c in &cn.control_places {
        place_node(&mut out, &c.id, c.initial_tokens, true);
    }
    transition_nodes(&mut out, net);
    base_arcs(&mut out, net);
    for c in &cn.control_places {
        for (t, tr) in net.transitions().iter().enumerate() {
            let (pre, post) = (c.pre(t), c.post(t));
            let label = |w: u64| {
                if w > 1 {
                    format!(", label=\"{w}\"")
                } else {
                    String::new()
                }
            };
            if pre > 0 {
                writeln!(
                    out,
                    "  {} -> {} [color=gray{}];",
                    quote(&c.id),
                    quote(&tr.id),
                    label(pre)
                )
                .unwrap();
            }
            if post > 0 {
                writeln!(
                    out,
                    "  {} -> {} [color=gray{}];",
                    quote(&tr.id),
                    quote(&c.id),
                    label(post)
                )
                .unwrap();
            }
        }
    }
    out.push_str("}\n");
    out
}

/// States labelled by their marked places, edges by transition id.
pub fn graph_to_dot(net: &PetriNet, g: &ReachabilityGraph) -> String {
    let mut out = String::from("digraph reachability {\n");
    for (i, m) in g.states().iter().enumerate() {
        let extra = if i == g.initial_index() {
            ", peripheries=2"
        } else {
            ""
        };
        writeln!(
            out,
            "  s{i} [label={}{extra}];",
            quote(&m.label(net.places()))
        )
        .unwrap();
    }
    for e in g.edges() {
        let t = &net.transitions()[e.transition];
        let style = if t.controllable { "" } else { ", style=dashed" };
        writeln!(
            out,
            "  s{} -> s{} [label={}{style}];",
            e.source,
            e.target,
            quote(&t.id)
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// An empty digraph.
pub fn empty_dot() -> String {
    "digraph empty {\n}\n".to_string()
}
