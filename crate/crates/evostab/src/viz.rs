//! Population snapshots as SVG and text.
//!
//! Identical aggregations are grouped into one row annotated with their
//! multiplicity; each agent is a cell whose colour is a hash of its
//! attributes, so the same agent has the same colour in every picture.

use std::collections::BTreeMap;
use std::fmt::Write;

use evostab_core::evolution::Population;
use evostab_core::genome::{canonical_key, raw_fitness, Agent, AgentAggregation, AggregationKey, UserRequest};

#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub aggregation: AgentAggregation,
    pub multiplicity: usize,
    pub fitness: f64,
}

/// Groups identical members; most common first, ties broken by fitness then key.
pub fn group_population(pop: &Population, r: &UserRequest) -> Vec<Group> {
    let mut groups: BTreeMap<AggregationKey, (AgentAggregation, usize)> = BTreeMap::new();
    for m in &pop.members {
        groups.entry(canonical_key(m)).or_insert_with(|| (m.clone(), 0)).1 += 1;
    }
    let mut out: Vec<(AggregationKey, Group)> = groups
        .into_iter()
        .map(|(k, (a, n))| {
            let fitness = raw_fitness(&a, r);
            (k, Group { aggregation: a, multiplicity: n, fitness })
        })
        .collect();
    out.sort_by(|(ka, a), (kb, b)| {
        b.multiplicity
            .cmp(&a.multiplicity)
            .then(b.fitness.total_cmp(&a.fitness))
            .then(ka.cmp(kb))
    });
    out.into_iter().map(|(_, g)| g).collect()
}

/// FNV-1a over the attribute values.
fn agent_hash(a: &Agent) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in a.values() {
        for b in v.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

pub fn agent_color(a: &Agent) -> String {
    let h = agent_hash(a);
    let hue = h % 360;
    let sat = 55 + (h >> 16) % 30;
    let light = 40 + (h >> 32) % 25;
    format!("hsl({hue},{sat}%,{light}%)")
}

fn agent_label(a: &Agent) -> String {
    a.values().map(|v| v.to_string()).collect::<Vec<_>>().join("+")
}

/// Distinct agents in sorted order; their positions are the text-mode indices.
fn agent_index(groups: &[Group]) -> Vec<Agent> {
    let mut agents: Vec<Agent> = groups.iter().flat_map(|g| g.aggregation.agents().iter().cloned()).collect();
    agents.sort();
    agents.dedup();
    agents
}

pub fn render_text(groups: &[Group]) -> String {
    let index = agent_index(groups);
    let mut s = String::new();
    for g in groups {
        let cells: Vec<String> = g
            .aggregation
            .agents()
            .iter()
            .map(|a| index.binary_search(a).expect("indexed").to_string())
            .collect();
        let body = if cells.is_empty() { "dead".to_string() } else { cells.join(" ") };
        writeln!(s, "x{:<4} f={:.4} | {}", g.multiplicity, g.fitness, body).unwrap();
    }
    writeln!(s, "agents:").unwrap();
    for (i, a) in index.iter().enumerate() {
        writeln!(s, "  {i}: {{{}}}", agent_label(a)).unwrap();
    }
    s
}

const CELL: usize = 14;
const ROW: usize = 16;
const MARGIN: usize = 110;

pub fn render_svg(groups: &[Group]) -> String {
    let width = MARGIN + CELL * groups.iter().map(|g| g.aggregation.len()).max().unwrap_or(0).max(1) + 10;
    let height = ROW * groups.len().max(1) + 10;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="monospace" font-size="11">"#
    )
    .unwrap();
    for (row, g) in groups.iter().enumerate() {
        let y = 5 + row * ROW;
        writeln!(s, r#"<text x="4" y="{}">x{} f={:.3}</text>"#, y + 11, g.multiplicity, g.fitness).unwrap();
        for (col, a) in g.aggregation.agents().iter().enumerate() {
            writeln!(
                s,
                r#"<rect x="{}" y="{y}" width="{}" height="{}" fill="{}"><title>{{{}}}</title></rect>"#,
                MARGIN + col * CELL,
                CELL - 1,
                ROW - 2,
                agent_color(a),
                agent_label(a)
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}
