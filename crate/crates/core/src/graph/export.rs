//! GraphML and DOT serialization for external layout tools.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::EngagementGraph;

/// Optional per-node annotations written alongside the graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeAttributes {
    pub label: Option<String>,
    pub predicted: Option<String>,
    pub generalized: Option<usize>,
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn to_graphml(g: &EngagementGraph, attrs: &BTreeMap<String, NodeAttributes>) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n");
    out.push_str(
        "  <key id=\"predicted\" for=\"node\" attr.name=\"predicted\" attr.type=\"string\"/>\n",
    );
    out.push_str(
        "  <key id=\"generalized\" for=\"node\" attr.name=\"generalized\" attr.type=\"int\"/>\n",
    );
    out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n");
    let _ = writeln!(
        out,
        "  <graph id=\"{}\" edgedefault=\"directed\">",
        g.semantics()
    );
    for id in g.nodes() {
        let id_x = xml_escape(id);
        match attrs.get(id) {
            None => {
                let _ = writeln!(out, "    <node id=\"{id_x}\"/>");
            }
            Some(a) => {
                let _ = writeln!(out, "    <node id=\"{id_x}\">");
                if let Some(l) = &a.label {
                    let _ = writeln!(out, "      <data key=\"label\">{}</data>", xml_escape(l));
                }
                if let Some(p) = &a.predicted {
                    let _ = writeln!(out, "      <data key=\"predicted\">{}</data>", xml_escape(p));
                }
                if let Some(s) = a.generalized {
                    let _ = writeln!(out, "      <data key=\"generalized\">{s}</data>");
                }
                out.push_str("    </node>\n");
            }
        }
    }
    for (i, (s, d, w)) in g.edges().enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\"><data key=\"weight\">{w}</data></edge>",
            xml_escape(s),
            xml_escape(d)
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

pub fn to_dot(g: &EngagementGraph, attrs: &BTreeMap<String, NodeAttributes>) -> String {
    let mut out = format!("digraph \"{}\" {{\n", g.semantics());
    for id in g.nodes() {
        let mut fields = Vec::new();
        if let Some(a) = attrs.get(id) {
            if let Some(l) = &a.label {
                fields.push(format!("label=\"{}\"", dot_escape(l)));
            }
            if let Some(p) = &a.predicted {
                fields.push(format!("predicted=\"{}\"", dot_escape(p)));
            }
            if let Some(s) = a.generalized {
                fields.push(format!("generalized={s}"));
            }
        }
        if fields.is_empty() {
            let _ = writeln!(out, "  \"{}\";", dot_escape(id));
        } else {
            let _ = writeln!(out, "  \"{}\" [{}];", dot_escape(id), fields.join(", "));
        }
    }
    for (s, d, w) in g.edges() {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [weight={w}];",
            dot_escape(s),
            dot_escape(d)
        );
    }
    out.push_str("}\n");
    out
}
