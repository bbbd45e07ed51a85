//! Network recovery from an optimized theta matrix, exports, and scoring
//! against a reference network.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_atomic};
use crate::model::ThetaMatrix;

/// Regulation parameters below this magnitude (radians, about 5°) are dropped.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 0.087;

/// DOT pen width per radian of regulation strength.
const PENWIDTH_PER_RADIAN: f64 = 4.0;

/// Pruned off-diagonal adjacency; the encoder diagonal is kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    n: usize,
    /// Row-major, zero on the diagonal.
    values: Vec<f64>,
    encoder: Vec<f64>,
    threshold: f64,
}

impl Adjacency {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, control: usize, target: usize) -> f64 {
        self.values[control * self.n + target]
    }

    pub fn encoder(&self) -> &[f64] {
        &self.encoder
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Rebuilds a theta matrix with the encoder back on the diagonal.
    pub fn to_theta(&self) -> ThetaMatrix {
        let mut entries = self.values.clone();
        for (k, &e) in self.encoder.iter().enumerate() {
            entries[k * self.n + k] = e;
        }
        ThetaMatrix::new(self.n, entries).expect("pruned values are finite")
    }

    /// Heatmap-ready CSV: header of target gene names, one row per control gene.
    pub fn to_csv_string(&self, genes: &[String]) -> String {
        let mut out = String::from("control");
        for g in genes {
            write!(out, ",{g}").unwrap();
        }
        out.push('\n');
        for (k, gene) in genes.iter().enumerate() {
            out.push_str(gene);
            for p in 0..self.n {
                write!(out, ",{}", fmt_f64(self.get(k, p))).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Zeroes off-diagonal entries with `|θ| < threshold`; entries on the
/// threshold survive.
pub fn prune(theta: &ThetaMatrix, threshold: f64) -> Adjacency {
    let n = theta.n();
    let mut values = vec![0.0; n * n];
    for (k, p, v) in theta.off_diagonal() {
        if v.abs() >= threshold {
            values[k * n + p] = v;
        }
    }
    Adjacency {
        n,
        values,
        encoder: theta.diagonal(),
        threshold,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Up,
    Down,
}

impl Sign {
    pub fn of(weight: f64) -> Self {
        if weight > 0.0 {
            Sign::Up
        } else {
            Sign::Down
        }
    }

    fn color(self) -> &'static str {
        match self {
            Sign::Up => "green",
            Sign::Down => "red",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    /// Signed regulation angle in radians.
    pub weight: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneNetwork {
    pub genes: Vec<String>,
    pub edges: Vec<Edge>,
}

/// One edge per surviving off-diagonal entry, `g_k → g_p`, row-major.
pub fn to_network(adjacency: &Adjacency, genes: &[String]) -> Result<GeneNetwork> {
    if genes.len() != adjacency.n() {
        return Err(Error::LengthMismatch {
            left: genes.len(),
            right: adjacency.n(),
        });
    }
    let n = adjacency.n();
    let mut edges = Vec::new();
    for k in 0..n {
        for p in (0..n).filter(|&p| p != k) {
            let w = adjacency.get(k, p);
            if w != 0.0 {
                edges.push(Edge {
                    source: genes[k].clone(),
                    target: genes[p].clone(),
                    weight: w,
                    sign: Sign::of(w),
                });
            }
        }
    }
    Ok(GeneNetwork {
        genes: genes.to_vec(),
        edges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    GraphMl,
    Json,
    Csv,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Dot => "dot",
            ExportFormat::GraphMl => "graphml",
            ExportFormat::Json => "json",
            ExportFormat::Csv => "csv",
        }
    }
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "graphml" => Ok(ExportFormat::GraphMl),
            "json" => Ok(ExportFormat::Json),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(Error::Argument(format!("unknown export format {other:?}"))),
        }
    }
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl GeneNetwork {
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph grn {\n");
        for g in &self.genes {
            writeln!(out, "  \"{}\";", g.replace('"', "\\\"")).unwrap();
        }
        for e in &self.edges {
            writeln!(
                out,
                "  \"{}\" -> \"{}\" [color={}, penwidth={}, weight={}, sign={}];",
                e.source.replace('"', "\\\""),
                e.target.replace('"', "\\\""),
                e.sign.color(),
                fmt_f64(PENWIDTH_PER_RADIAN * e.weight.abs()),
                fmt_f64(e.weight),
                if e.sign == Sign::Up { "up" } else { "down" },
            )
            .unwrap();
        }
        out.push_str("}\n");
        out
    }

    pub fn to_graphml(&self) -> String {
        let mut out = String::from(concat!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
            "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n",
            "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n",
            "  <key id=\"sign\" for=\"edge\" attr.name=\"sign\" attr.type=\"string\"/>\n",
            "  <graph id=\"grn\" edgedefault=\"directed\">\n",
        ));
        for g in &self.genes {
            writeln!(out, "    <node id=\"{}\"/>", escape_xml(g)).unwrap();
        }
        for e in &self.edges {
            writeln!(
                out,
                "    <edge source=\"{}\" target=\"{}\">\n      <data key=\"weight\">{}</data>\n      <data key=\"sign\">{}</data>\n    </edge>",
                escape_xml(&e.source),
                escape_xml(&e.target),
                fmt_f64(e.weight),
                if e.sign == Sign::Up { "up" } else { "down" },
            )
            .unwrap();
        }
        out.push_str("  </graph>\n</graphml>\n");
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The square adjacency implied by the edge list, genes in network order.
    pub fn to_adjacency_csv(&self) -> String {
        let n = self.genes.len();
        let index: HashMap<&str, usize> = self
            .genes
            .iter()
            .enumerate()
            .map(|(i, g)| (g.as_str(), i))
            .collect();
        let mut values = vec![0.0; n * n];
        for e in &self.edges {
            values[index[e.source.as_str()] * n + index[e.target.as_str()]] = e.weight;
        }
        Adjacency {
            n,
            values,
            encoder: vec![0.0; n],
            threshold: 0.0,
        }
        .to_csv_string(&self.genes)
    }

    pub fn render(&self, format: ExportFormat) -> Result<String> {
        Ok(match format {
            ExportFormat::Dot => self.to_dot(),
            ExportFormat::GraphMl => self.to_graphml(),
            ExportFormat::Json => self.to_json()?,
            ExportFormat::Csv => self.to_adjacency_csv(),
        })
    }

    pub fn export(&self, format: ExportFormat, path: &Path) -> Result<()> {
        write_atomic(path, self.render(format)?.as_bytes())
    }
}

/// Reference network: expected sign per directed gene pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BaselineGrn {
    edges: HashMap<(String, String), Sign>,
}

impl BaselineGrn {
    pub fn new(edges: impl IntoIterator<Item = (String, String, Sign)>) -> Self {
        Self {
            edges: edges
                .into_iter()
                .map(|(s, t, sign)| ((s, t), sign))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn sign(&self, source: &str, target: &str) -> Option<Sign> {
        self.edges
            .get(&(source.to_string(), target.to_string()))
            .copied()
    }

    /// Edge-list CSV `source,target,sign` with sign `+`/`-` (or `up`/`down`,
    /// `activation`/`repression`). A header row is skipped when present.
    pub fn parse_csv(text: &str, origin: &str) -> Result<Self> {
        let mut edges = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = i as u64 + 1;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("expected 3 fields, found {}", fields.len()),
                ));
            }
            let sign = match fields[2].to_ascii_lowercase().as_str() {
                "+" | "up" | "activation" | "1" => Sign::Up,
                "-" | "−" | "down" | "repression" | "-1" => Sign::Down,
                _ if edges.is_empty() && i == 0 => continue,
                other => {
                    return Err(Error::parse(
                        origin,
                        lineno,
                        format!("unknown sign {other:?}"),
                    ))
                }
            };
            if fields[0] == fields[1] {
                return Err(Error::parse(
                    origin,
                    lineno,
                    "self-regulation is not scored",
                ));
            }
            edges.insert((fields[0].to_string(), fields[1].to_string()), sign);
        }
        Ok(Self { edges })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, &path.display().to_string())
    }

    /// The network's own edges as a baseline.
    pub fn from_network(network: &GeneNetwork) -> Self {
        Self::new(
            network
                .edges
                .iter()
                .map(|e| (e.source.clone(), e.target.clone(), e.sign)),
        )
    }
}

/// Outcome counts over all ordered pairs of distinct genes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    /// Predicted with the baseline's sign.
    pub true_positive: usize,
    /// Predicted where the baseline has no edge.
    pub false_positive_absent: usize,
    /// Predicted with the opposite sign; counted as both FP and FN.
    pub wrong_sign: usize,
    /// Baseline edge with no prediction.
    pub false_negative_missed: usize,
    pub true_negative: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_positive
            + self.false_positive_absent
            + self.wrong_sign
            + self.false_negative_missed
            + self.true_negative
    }

    pub fn false_positive(&self) -> usize {
        self.false_positive_absent + self.wrong_sign
    }

    pub fn false_negative(&self) -> usize {
        self.false_negative_missed + self.wrong_sign
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// False when nothing was predicted; precision is then reported as 0.
    pub precision_defined: bool,
    pub confusion: Confusion,
}

pub fn score_against_baseline(network: &GeneNetwork, baseline: &BaselineGrn) -> Result<Score> {
    if baseline.is_empty() {
        return Err(Error::UndefinedMetric("baseline has no edges".into()));
    }
    let genes: HashSet<&str> = network.genes.iter().map(String::as_str).collect();
    for (s, t) in baseline.edges.keys() {
        for g in [s, t] {
            if !genes.contains(g.as_str()) {
                return Err(Error::Argument(format!(
                    "baseline gene {g:?} is not in the network"
                )));
            }
        }
    }
    let predicted: HashMap<(&str, &str), Sign> = network
        .edges
        .iter()
        .map(|e| ((e.source.as_str(), e.target.as_str()), e.sign))
        .collect();

    let mut c = Confusion::default();
    for s in &network.genes {
        for t in network.genes.iter().filter(|t| *t != s) {
            match (
                predicted.get(&(s.as_str(), t.as_str())),
                baseline.sign(s, t),
            ) {
                (None, None) => c.true_negative += 1,
                (Some(_), None) => c.false_positive_absent += 1,
                (None, Some(_)) => c.false_negative_missed += 1,
                (Some(p), Some(b)) if *p == b => c.true_positive += 1,
                (Some(_), Some(_)) => c.wrong_sign += 1,
            }
        }
    }

    let tp = c.true_positive as f64;
    let predicted_pos = (c.true_positive + c.false_positive()) as f64;
    let actual_pos = (c.true_positive + c.false_negative()) as f64;
    let precision_defined = predicted_pos > 0.0;
    let precision = if precision_defined {
        tp / predicted_pos
    } else {
        0.0
    };
    let recall = if actual_pos > 0.0 {
        tp / actual_pos
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Score {
        accuracy: (c.true_positive + c.true_negative) as f64 / c.total() as f64,
        precision,
        recall,
        f1,
        precision_defined,
        confusion: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn genes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("g{i}")).collect()
    }

    fn theta3() -> ThetaMatrix {
        ThetaMatrix::new(3, vec![1.0, 0.05, -0.10, -0.087, 0.5, 0.3, 0.0, -0.2, 1.2]).unwrap()
    }

    #[test]
    fn prune_boundaries() {
        let a = prune(&theta3(), DEFAULT_PRUNE_THRESHOLD);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.get(0, 2), -0.10);
        assert_eq!(a.get(1, 0), -0.087);
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.encoder(), &[1.0, 0.5, 1.2]);
    }

    #[test]
    fn prune_is_idempotent() {
        let a = prune(&theta3(), DEFAULT_PRUNE_THRESHOLD);
        assert_eq!(prune(&a.to_theta(), DEFAULT_PRUNE_THRESHOLD), a);
    }

    #[test]
    fn network_edges() {
        let net = to_network(&prune(&theta3(), DEFAULT_PRUNE_THRESHOLD), &genes(3)).unwrap();
        assert_eq!(net.edges.len(), 4);
        let e = &net.edges[0];
        assert_eq!(
            (e.source.as_str(), e.target.as_str(), e.sign),
            ("g0", "g2", Sign::Down)
        );

        let mut t = ThetaMatrix::zeros(2).unwrap();
        assert!(to_network(&prune(&t, 0.087), &genes(2))
            .unwrap()
            .edges
            .is_empty());
        t.set(0, 1, 0.3);
        let net = to_network(&prune(&t, 0.087), &genes(2)).unwrap();
        assert_eq!(
            net.edges,
            vec![Edge {
                source: "g0".into(),
                target: "g1".into(),
                weight: 0.3,
                sign: Sign::Up
            }]
        );
        let mut t = ThetaMatrix::zeros(2).unwrap();
        t.set(1, 0, -0.2);
        let net = to_network(&prune(&t, 0.087), &genes(2)).unwrap();
        assert_eq!(
            (net.edges[0].source.as_str(), net.edges[0].sign),
            ("g1", Sign::Down)
        );
    }

    #[test]
    fn dot_export() {
        let mut t = ThetaMatrix::zeros(2).unwrap();
        let empty = to_network(&prune(&t, 0.087), &genes(2)).unwrap().to_dot();
        assert!(empty.starts_with("digraph") && !empty.contains("->"));
        t.set(0, 1, 0.3);
        let dot = to_network(&prune(&t, 0.087), &genes(2)).unwrap().to_dot();
        assert_eq!(dot.matches("->").count(), 1);
        assert!(dot.contains("color=green"));
    }

    #[test]
    fn json_round_trip() {
        let net = to_network(&prune(&theta3(), 0.087), &genes(3)).unwrap();
        assert_eq!(
            GeneNetwork::from_json(&net.to_json().unwrap()).unwrap(),
            net
        );
    }

    #[test]
    fn graphml_and_csv() {
        let net = to_network(&prune(&theta3(), 0.087), &genes(3)).unwrap();
        let xml = net.to_graphml();
        assert_eq!(xml.matches("<edge ").count(), 4);
        let csv = net.to_adjacency_csv();
        assert_eq!(csv.lines().next().unwrap(), "control,g0,g1,g2");
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn self_score_is_perfect() {
        let net = to_network(&prune(&theta3(), 0.087), &genes(3)).unwrap();
        let s = score_against_baseline(&net, &BaselineGrn::from_network(&net)).unwrap();
        assert_eq!((s.accuracy, s.f1, s.precision), (1.0, 1.0, 1.0));
        assert_eq!(s.confusion.total(), 6);
    }

    #[test]
    fn empty_prediction() {
        let net = GeneNetwork {
            genes: genes(2),
            edges: vec![],
        };
        let base = BaselineGrn::new([("g0".to_string(), "g1".to_string(), Sign::Up)]);
        let s = score_against_baseline(&net, &base).unwrap();
        assert!(!s.precision_defined);
        assert_eq!((s.precision, s.f1), (0.0, 0.0));
        assert_eq!(s.accuracy, 0.5);
        assert!(score_against_baseline(&net, &BaselineGrn::default()).is_err());
    }

    #[test]
    fn wrong_sign_counts_both_ways() {
        let net = GeneNetwork {
            genes: genes(2),
            edges: vec![Edge {
                source: "g0".into(),
                target: "g1".into(),
                weight: -0.3,
                sign: Sign::Down,
            }],
        };
        let base = BaselineGrn::new([("g0".to_string(), "g1".to_string(), Sign::Up)]);
        let s = score_against_baseline(&net, &base).unwrap();
        assert_eq!(s.confusion.wrong_sign, 1);
        assert_eq!(s.confusion.false_positive(), 1);
        assert_eq!(s.confusion.false_negative(), 1);
        assert_eq!(s.precision, 0.0);
    }

    #[test]
    fn baseline_csv() {
        let b = BaselineGrn::parse_csv("source,target,sign\nA,B,+\nB,C,-\n", "b").unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.sign("B", "C"), Some(Sign::Down));
        assert!(BaselineGrn::parse_csv("A,B,+\nA,B,?\n", "b").is_err());
        assert!(BaselineGrn::parse_csv("A,A,+\n", "b").is_err());
    }
}
