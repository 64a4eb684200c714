use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// `n × p` matrix of allele counts in `{0, 1, 2}`, row-major, one row per
/// individual.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenotypeMatrix {
    n: usize,
    p: usize,
    snp_ids: Vec<String>,
    entries: Vec<u8>,
}

impl GenotypeMatrix {
    pub fn new(n: usize, p: usize, snp_ids: Vec<String>, entries: Vec<u8>) -> Result<Self> {
        if entries.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "expected {} genotype entries for {n}x{p}, got {}",
                n * p,
                entries.len()
            )));
        }
        if snp_ids.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "{} SNP identifiers for {p} columns",
                snp_ids.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|&g| g > 2) {
            return Err(Error::InvalidInput(format!(
                "genotype {} at ({}, {}) is not in {{0, 1, 2}}",
                entries[pos],
                pos / p,
                pos % p
            )));
        }
        let mut seen = HashSet::with_capacity(p);
        for id in &snp_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate SNP identifier {id}")));
            }
        }
        Ok(Self {
            n,
            p,
            snp_ids,
            entries,
        })
    }

    /// Identifiers `snp_1 … snp_p`.
    pub fn default_ids(p: usize) -> Vec<String> {
        (1..=p).map(|j| format!("snp_{j}")).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn snp_ids(&self) -> &[String] {
        &self.snp_ids
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.p + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.entries[i * self.p..(i + 1) * self.p]
    }

    /// Reorders individuals so that row `i` of the result is row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut entries = Vec::with_capacity(self.entries.len());
        for &src in perm {
            entries.extend_from_slice(self.row(src));
        }
        Self {
            n: self.n,
            p: self.p,
            snp_ids: self.snp_ids.clone(),
            entries,
        }
    }
}

/// Column-standardized genotypes with the monomorphic columns removed.
#[derive(Clone, Debug)]
pub struct StandardizedGenotypes {
    /// `n × retained` standardized values.
    pub x: DenseMatrix,
    pub col_means: Vec<f64>,
    pub col_sds: Vec<f64>,
    /// Original column index of each retained column.
    pub retained: Vec<usize>,
    pub dropped_monomorphic: Vec<usize>,
    pub total_snps: usize,
}

impl StandardizedGenotypes {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn retained_count(&self) -> usize {
        self.x.cols()
    }
}

/// Centers each column and scales it to unit sample variance, dropping
/// zero-variance columns.
pub fn standardize_genotypes(g: &GenotypeMatrix) -> Result<StandardizedGenotypes> {
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 individuals, got {n}")));
    }
    let mut means = Vec::new();
    let mut sds = Vec::new();
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..g.p() {
        let mean = (0..n).map(|i| g.get(i, j) as f64).sum::<f64>() / n as f64;
        let ss: f64 = (0..n)
            .map(|i| {
                let d = g.get(i, j) as f64 - mean;
                d * d
            })
            .sum();
        if ss == 0.0 {
            dropped.push(j);
            continue;
        }
        means.push(mean);
        sds.push((ss / (n - 1) as f64).sqrt());
        retained.push(j);
    }
    if retained.is_empty() {
        return Err(Error::EmptyDesign(g.p()));
    }
    let x = DenseMatrix::from_fn(n, retained.len(), |i, c| {
        (g.get(i, retained[c]) as f64 - means[c]) / sds[c]
    });
    Ok(StandardizedGenotypes {
        x,
        col_means: means,
        col_sds: sds,
        retained,
        dropped_monomorphic: dropped,
        total_snps: g.p(),
    })
}

/// Mean 0, sample variance 1.
pub fn standardize_phenotype(y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 phenotype values, got {n}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("phenotype contains non-finite values".into()));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(Error::DegeneratePhenotype);
    }
    let sd = var.sqrt();
    Ok(y.iter().map(|v| (v - mean) / sd).collect())
}
