//! Expression matrix loading, binarization and the observed distribution.
//!
//! Genes are rows and cells are columns. After binarization genes are sorted
//! by decreasing activation ratio; the most active gene becomes `g_0`, which
//! maps to qubit 0 and bit 0 of a cell's label.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::io::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Tsv,
    Csv,
}

impl MatrixFormat {
    fn delimiter(self) -> u8 {
        match self {
            MatrixFormat::Tsv => b'\t',
            MatrixFormat::Csv => b',',
        }
    }

    /// `.csv` is comma separated, anything else is read as TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Tsv,
        }
    }
}

impl std::str::FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(MatrixFormat::Tsv),
            "csv" => Ok(MatrixFormat::Csv),
            other => Err(Error::Argument(format!("unknown matrix format {other:?}"))),
        }
    }
}

/// Genes × cells matrix of transformed expression values.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    gene_names: Vec<String>,
    cell_ids: Option<Vec<String>>,
    m: usize,
    /// Row-major, one row per gene.
    values: Vec<f64>,
}

impl ExpressionMatrix {
    pub fn new(gene_names: Vec<String>, m: usize, values: Vec<f64>) -> Result<Self> {
        let n = gene_names.len();
        if n < 2 {
            return Err(Error::Argument(format!("need at least 2 genes, got {n}")));
        }
        if m < 1 {
            return Err(Error::Argument("need at least 1 cell".into()));
        }
        if values.len() != n * m {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: n * m,
            });
        }
        let mut seen = HashSet::new();
        if let Some(dup) = gene_names.iter().find(|g| !seen.insert(g.as_str())) {
            return Err(Error::Argument(format!("duplicate gene {dup:?}")));
        }
        Ok(Self {
            gene_names,
            cell_ids: None,
            m,
            values,
        })
    }

    pub fn with_cell_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.m {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: self.m,
            });
        }
        self.cell_ids = Some(ids);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.gene_names.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn gene_names(&self) -> &[String] {
        &self.gene_names
    }

    pub fn cell_ids(&self) -> Option<&[String]> {
        self.cell_ids.as_deref()
    }

    pub fn row(&self, gene: usize) -> &[f64] {
        &self.values[gene * self.m..(gene + 1) * self.m]
    }

    /// Keeps only `genes`, in the given order.
    pub fn select_genes(&self, genes: &[String]) -> Result<Self> {
        let mut values = Vec::with_capacity(genes.len() * self.m);
        for g in genes {
            let i = self
                .gene_names
                .iter()
                .position(|x| x == g)
                .ok_or_else(|| Error::Argument(format!("gene {g:?} is not in the matrix")))?;
            values.extend_from_slice(self.row(i));
        }
        let mut out = Self::new(genes.to_vec(), self.m, values)?;
        out.cell_ids = self.cell_ids.clone();
        Ok(out)
    }
}

/// Reads a genes × cells matrix. The first column holds gene names; a first
/// row with any non-numeric field after the first column is taken as a header
/// of cell IDs.
pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<ExpressionMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(file, format, &path.display().to_string())
}

pub fn parse_matrix<R: Read>(
    reader: R,
    format: MatrixFormat,
    origin: &str,
) -> Result<ExpressionMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(format.delimiter())
        .from_reader(reader);

    let mut genes = Vec::new();
    let mut values = Vec::new();
    let mut cell_ids = None;
    let mut width: Option<usize> = None;
    let mut seen = HashSet::new();

    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(origin, line, e.to_string())
        })?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if i == 0 && rec.iter().skip(1).any(|f| f.trim().parse::<f64>().is_err()) {
            cell_ids = Some(rec.iter().map(|s| s.trim().to_string()).collect::<Vec<_>>());
            continue;
        }
        let cells = rec.len().saturating_sub(1);
        let expected = *width.get_or_insert(cells);
        if cells != expected || cells == 0 {
            return Err(Error::parse(
                origin,
                line,
                format!("expected {expected} values after the gene name, found {cells}"),
            ));
        }
        let gene = rec[0].trim().to_string();
        if !seen.insert(gene.clone()) {
            return Err(Error::parse(
                origin,
                line,
                format!("duplicate gene {gene:?}"),
            ));
        }
        for (col, tok) in rec.iter().enumerate().skip(1) {
            let v = tok.trim().parse::<f64>().map_err(|_| {
                Error::parse(
                    origin,
                    line,
                    format!("row {gene:?}, column {}: {tok:?} is not a number", col + 1),
                )
            })?;
            values.push(v);
        }
        genes.push(gene);
    }

    let m = width.unwrap_or(0);
    let matrix = ExpressionMatrix::new(genes, m, values)
        .map_err(|e| Error::parse(origin, 0, e.to_string()))?;
    // The header may or may not carry a corner cell above the gene names.
    match cell_ids {
        Some(ids) if ids.len() == m + 1 => matrix.with_cell_ids(ids[1..].to_vec()),
        Some(ids) if ids.len() == m => matrix.with_cell_ids(ids),
        Some(ids) => Err(Error::parse(
            origin,
            1,
            format!("header has {} cell IDs but rows have {m} values", ids.len()),
        )),
        None => Ok(matrix),
    }
}

/// 0/1 matrix with genes ordered by decreasing activation ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarizedMatrix {
    gene_names: Vec<String>,
    cell_ids: Option<Vec<String>>,
    m: usize,
    bits: Vec<u8>,
    activation_ratios: Vec<f64>,
}

impl BinarizedMatrix {
    pub fn n(&self) -> usize {
        self.gene_names.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn gene_names(&self) -> &[String] {
        &self.gene_names
    }

    pub fn activation_ratios(&self) -> &[f64] {
        &self.activation_ratios
    }

    pub fn row(&self, gene: usize) -> &[u8] {
        &self.bits[gene * self.m..(gene + 1) * self.m]
    }

    /// Basis index of cell `cell`: bit `k` is the state of gene `g_k`.
    pub fn label(&self, cell: usize) -> usize {
        (0..self.n()).fold(0, |acc, k| {
            acc | (self.bits[k * self.m + cell] as usize) << k
        })
    }

    /// Tab-separated dump: header `gene` plus cell IDs, then one 0/1 row per
    /// gene in `g_0 … g_{n-1}` order.
    pub fn to_tsv_string(&self) -> String {
        let mut out = String::from("gene");
        for c in 0..self.m {
            match &self.cell_ids {
                Some(ids) => write!(out, "\t{}", ids[c]).unwrap(),
                None => write!(out, "\tcell_{c}").unwrap(),
            }
        }
        out.push('\n');
        for k in 0..self.n() {
            out.push_str(&self.gene_names[k]);
            for &b in self.row(k) {
                out.push('\t');
                out.push(if b == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_tsv_string().as_bytes())
    }
}

/// Strict `> 0` thresholding, then a stable sort by decreasing activation
/// ratio (ties keep input order).
pub fn binarize(x: &ExpressionMatrix) -> BinarizedMatrix {
    let (n, m) = (x.n(), x.m());
    let rows: Vec<Vec<u8>> = (0..n)
        .map(|g| x.row(g).iter().map(|&v| u8::from(v > 0.0)).collect())
        .collect();
    let counts: Vec<usize> = rows
        .iter()
        .map(|r| r.iter().map(|&b| b as usize).sum())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Integer counts share the denominator m, so comparing them orders ratios exactly.
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));

    let mut bits = Vec::with_capacity(n * m);
    for &g in &order {
        bits.extend_from_slice(&rows[g]);
    }
    BinarizedMatrix {
        gene_names: order.iter().map(|&g| x.gene_names()[g].clone()).collect(),
        cell_ids: x.cell_ids().map(<[String]>::to_vec),
        m,
        bits,
        activation_ratios: order.iter().map(|&g| counts[g] as f64 / m as f64).collect(),
    }
}

/// Observed distribution together with the label tallies it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedDistribution {
    /// Label frequencies with `|0..0>` zeroed and the rest rescaled.
    pub distribution: Distribution,
    /// Raw occurrence count of every label, including `|0..0>`.
    pub counts: Vec<u64>,
    /// Number of cells.
    pub m: u64,
}

impl ObservedDistribution {
    /// Unrescaled label frequencies `count / m`.
    pub fn raw_frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.m as f64)
            .collect()
    }
}

pub fn observed_distribution(xb: &BinarizedMatrix) -> Result<ObservedDistribution> {
    let n = xb.n();
    let mut counts = vec![0u64; 1 << n];
    for cell in 0..xb.m() {
        counts[xb.label(cell)] += 1;
    }
    observed_from_counts(n, counts)
}

/// Builds the observed distribution from label counts.
pub fn observed_from_counts(n: usize, counts: Vec<u64>) -> Result<ObservedDistribution> {
    if counts.len() != 1 << n {
        return Err(Error::LengthMismatch {
            left: counts.len(),
            right: 1 << n,
        });
    }
    let m: u64 = counts.iter().sum();
    let informative = m - counts[0];
    if informative == 0 {
        return Err(Error::DegenerateData);
    }
    let mut probs: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / informative as f64)
        .collect();
    probs[0] = 0.0;
    Ok(ObservedDistribution {
        distribution: Distribution::new(n, probs)?,
        counts,
        m,
    })
}
