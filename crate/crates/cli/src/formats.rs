//! Tab-separated file formats. Every reader reports failures with the file
//! path and a 1-based line and column.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use hlmm_core::lmm::{GenotypeMatrix, ScanResult};
use hlmm_core::scaling::Timing;
use hlmm_core::simgen::SimTruth;

use crate::error::{CliError, Result};

pub const RESULTS_HEADER: [&str; 6] = ["snp_id", "beta", "stderr", "sigma_e2", "chisq", "pvalue"];
pub const BENCHMARK_HEADER: [&str; 3] = ["method", "n", "median_seconds"];
pub const PHENOTYPE_HEADER: [&str; 2] = ["id", "value"];
pub const TRUTH_HEADER: [&str; 3] = ["snp_id", "index", "effect"];

/// Individual identifiers `ind_1 … ind_n`.
pub fn default_individual_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("ind_{i}")).collect()
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes through a buffered file, attaching the path to any failure.
pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// Non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.starts_with('#') && !l.is_empty())
}

fn expect_header(path: &Path, line: Option<(usize, &str)>, expected: &[&str]) -> Result<()> {
    let (no, l) = line.ok_or_else(|| CliError::parse(path, 1, 1, "file is empty"))?;
    for (c, (got, want)) in l.split('\t').zip(expected).enumerate() {
        if got != *want {
            return Err(CliError::parse(path, no, c + 1, format!("expected header field `{want}`, found `{got}`")));
        }
    }
    let count = l.split('\t').count();
    if count != expected.len() {
        return Err(CliError::parse(
            path,
            no,
            count.min(expected.len()) + 1,
            format!("expected {} header fields, found {count}", expected.len()),
        ));
    }
    Ok(())
}

fn parse_f64(path: &Path, line: usize, column: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::parse(path, line, column, format!("`{s}` is not a finite number")))
}

fn fields<'a>(path: &Path, line: usize, l: &'a str, width: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = l.split('\t').collect();
    if f.len() != width {
        return Err(CliError::parse(
            path,
            line,
            f.len().min(width) + 1,
            format!("expected {width} fields, found {}", f.len()),
        ));
    }
    Ok(f)
}

/// Genotype table: header `id<TAB>snp…`, then one row of `{0,1,2}` per
/// individual.
pub fn write_genotypes(w: &mut dyn Write, ids: &[String], g: &GenotypeMatrix) -> std::io::Result<()> {
    write!(w, "id")?;
    for s in g.snp_ids() {
        write!(w, "\t{s}")?;
    }
    writeln!(w)?;
    let mut line = String::with_capacity(2 * g.p() + 16);
    for (i, id) in ids.iter().enumerate() {
        line.clear();
        line.push_str(id);
        for &v in g.row(i) {
            line.push('\t');
            line.push((b'0' + v) as char);
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn read_genotypes(path: &Path) -> Result<(Vec<String>, GenotypeMatrix)> {
    let text = read_text(path)?;
    let mut lines = data_lines(&text);
    let (hno, header) = lines.next().ok_or_else(|| CliError::parse(path, 1, 1, "file is empty"))?;
    let mut cols = header.split('\t');
    if cols.next() != Some("id") {
        return Err(CliError::parse(path, hno, 1, "first header field must be `id`"));
    }
    let snp_ids: Vec<String> = cols.map(str::to_string).collect();
    if snp_ids.is_empty() {
        return Err(CliError::parse(path, hno, 2, "no SNP columns"));
    }
    let p = snp_ids.len();
    let mut ids = Vec::new();
    let mut entries = Vec::new();
    for (no, l) in lines {
        let f = fields(path, no, l, p + 1)?;
        ids.push(f[0].to_string());
        for (c, cell) in f[1..].iter().enumerate() {
            let v = match *cell {
                "0" => 0,
                "1" => 1,
                "2" => 2,
                other => {
                    return Err(CliError::parse(path, no, c + 2, format!("genotype `{other}` is not 0, 1 or 2")));
                }
            };
            entries.push(v);
        }
    }
    if ids.is_empty() {
        return Err(CliError::parse(path, hno + 1, 1, "no individuals"));
    }
    check_unique(path, &ids)?;
    let g = GenotypeMatrix::new(ids.len(), p, snp_ids, entries)
        .map_err(|e| CliError::parse(path, hno, 1, e.to_string()))?;
    Ok((ids, g))
}

fn check_unique(path: &Path, ids: &[String]) -> Result<()> {
    let mut seen = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if let Some(prev) = seen.insert(id.as_str(), i) {
            return Err(CliError::Usage(format!(
                "{}: individual `{id}` appears in data rows {} and {}",
                path.display(),
                prev + 1,
                i + 1
            )));
        }
    }
    Ok(())
}

pub fn write_phenotype(w: &mut dyn Write, ids: &[String], y: &[f64]) -> std::io::Result<()> {
    writeln!(w, "{}", PHENOTYPE_HEADER.join("\t"))?;
    for (id, v) in ids.iter().zip(y) {
        writeln!(w, "{id}\t{v:e}")?;
    }
    Ok(())
}

pub fn read_phenotype(path: &Path) -> Result<Vec<(String, f64)>> {
    let text = read_text(path)?;
    let mut lines = data_lines(&text);
    expect_header(path, lines.next(), &PHENOTYPE_HEADER)?;
    let mut out = Vec::new();
    for (no, l) in lines {
        let f = fields(path, no, l, 2)?;
        out.push((f[0].to_string(), parse_f64(path, no, 2, f[1])?));
    }
    Ok(out)
}

/// Orders phenotype values by the genotype file's individuals; the two id
/// sets must match exactly.
pub fn align_phenotype(genotype_ids: &[String], pheno: &[(String, f64)]) -> Result<Vec<f64>> {
    if pheno.len() != genotype_ids.len() {
        return Err(CliError::Dimension(format!(
            "{} phenotype rows for {} genotyped individuals",
            pheno.len(),
            genotype_ids.len()
        )));
    }
    let mut by_id: HashMap<&str, f64> = HashMap::with_capacity(pheno.len());
    for (id, v) in pheno {
        if by_id.insert(id.as_str(), *v).is_some() {
            return Err(CliError::Dimension(format!("phenotype id `{id}` appears twice")));
        }
    }
    genotype_ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| CliError::Dimension(format!("genotyped individual `{id}` has no phenotype")))
        })
        .collect()
}

/// Truth file: scalar metadata in `#` lines, then one row per causal SNP
/// with its 0-based column index and effect.
pub fn write_truth(w: &mut dyn Write, snp_ids: &[String], t: &SimTruth) -> std::io::Result<()> {
    writeln!(w, "#total_snps\t{}", t.effects.len())?;
    writeln!(w, "#genetic_variance\t{:e}", t.genetic_variance)?;
    writeln!(w, "#noise_variance\t{:e}", t.noise_variance)?;
    writeln!(w, "#resample_attempts\t{}", t.resample_attempts)?;
    writeln!(w, "#forced_causal\t{}", t.forced_causal)?;
    writeln!(w, "{}", TRUTH_HEADER.join("\t"))?;
    for &j in &t.causal_indices {
        writeln!(w, "{}\t{j}\t{:e}", snp_ids[j], t.effects[j])?;
    }
    Ok(())
}

pub fn read_truth(path: &Path) -> Result<SimTruth> {
    let text = read_text(path)?;
    let mut meta: HashMap<&str, (usize, &str)> = HashMap::new();
    for (i, l) in text.lines().enumerate() {
        if let Some(rest) = l.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('\t') {
                meta.insert(k, (i + 1, v));
            }
        }
    }
    let get = |k: &str| {
        meta.get(k)
            .copied()
            .ok_or_else(|| CliError::parse(path, 1, 1, format!("missing `#{k}` line")))
    };
    let (no, v) = get("total_snps")?;
    let total: usize = v.parse().map_err(|_| CliError::parse(path, no, 2, "bad SNP count"))?;
    let (no, v) = get("genetic_variance")?;
    let genetic_variance = parse_f64(path, no, 2, v)?;
    let (no, v) = get("noise_variance")?;
    let noise_variance = parse_f64(path, no, 2, v)?;
    let (no, v) = get("resample_attempts")?;
    let resample_attempts = v.parse().map_err(|_| CliError::parse(path, no, 2, "bad resample count"))?;
    let (no, v) = get("forced_causal")?;
    let forced_causal = v.parse().map_err(|_| CliError::parse(path, no, 2, "expected true or false"))?;

    let mut lines = data_lines(&text);
    expect_header(path, lines.next(), &TRUTH_HEADER)?;
    let mut effects = vec![0.0; total];
    let mut causal_indices = Vec::new();
    for (no, l) in lines {
        let f = fields(path, no, l, 3)?;
        let j: usize = f[1]
            .parse()
            .ok()
            .filter(|&j| j < total)
            .ok_or_else(|| CliError::parse(path, no, 2, format!("index `{}` out of range", f[1])))?;
        effects[j] = parse_f64(path, no, 3, f[2])?;
        causal_indices.push(j);
    }
    Ok(SimTruth {
        causal_indices,
        effects,
        genetic_variance,
        noise_variance,
        resample_attempts,
        forced_causal,
    })
}

/// One parsed line of an association results file.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub snp_id: String,
    pub beta: f64,
    pub stderr: f64,
    pub sigma_e2: f64,
    pub chisq: f64,
    pub pvalue: f64,
}

/// Association rows. Kept separate from the metadata so runs can be
/// compared byte for byte.
pub fn write_results_body(w: &mut dyn Write, r: &ScanResult) -> std::io::Result<()> {
    writeln!(w, "{}", RESULTS_HEADER.join("\t"))?;
    for a in &r.records {
        writeln!(
            w,
            "{}\t{:e}\t{:e}\t{:e}\t{:e}\t{:.5e}",
            a.snp_id, a.beta, a.stderr, a.sigma_e2, a.wald_chisq, a.p_value
        )?;
    }
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = read_text(path)?;
    let mut lines = data_lines(&text);
    expect_header(path, lines.next(), &RESULTS_HEADER)?;
    let mut out = Vec::new();
    for (no, l) in lines {
        let f = fields(path, no, l, 6)?;
        let num = |c: usize| parse_f64(path, no, c + 1, f[c]);
        let row = ResultRow {
            snp_id: f[0].to_string(),
            beta: num(1)?,
            stderr: num(2)?,
            sigma_e2: num(3)?,
            chisq: num(4)?,
            pvalue: num(5)?,
        };
        if !(row.pvalue > 0.0 && row.pvalue <= 1.0) {
            return Err(CliError::parse(path, no, 6, format!("p-value {} outside (0, 1]", row.pvalue)));
        }
        out.push(row);
    }
    Ok(out)
}

pub fn write_benchmark(w: &mut dyn Write, timings: &[Timing], slopes: &[(&str, f64)]) -> std::io::Result<()> {
    writeln!(w, "{}", BENCHMARK_HEADER.join("\t"))?;
    for t in timings {
        writeln!(w, "{}\t{}\t{:e}", t.method.name(), t.n, t.median_seconds)?;
    }
    for (name, s) in slopes {
        writeln!(w, "#slope_{name}\t{s:.4}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str, body: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("hlmm-formats-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn genotype_parse_errors_carry_position() {
        let p = tmp("bad_cell.tsv", "id\tsnp_1\tsnp_2\nind_1\t0\t1\nind_2\t3\t1\n");
        match read_genotypes(&p) {
            Err(CliError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        let p = tmp("short_row.tsv", "id\tsnp_1\tsnp_2\nind_1\t0\n");
        match read_genotypes(&p) {
            Err(CliError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn phenotype_alignment() {
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let pheno = vec![("c".to_string(), 3.0), ("a".to_string(), 1.0), ("b".to_string(), 2.0)];
        assert_eq!(align_phenotype(&ids, &pheno).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(matches!(align_phenotype(&ids, &pheno[..2]), Err(CliError::Dimension(_))));
        let wrong = vec![("a".to_string(), 1.0), ("b".to_string(), 2.0), ("d".to_string(), 3.0)];
        assert!(matches!(align_phenotype(&ids, &wrong), Err(CliError::Dimension(_))));
    }

    #[test]
    fn phenotype_header_is_checked() {
        let p = tmp("pheno_header.tsv", "id\ttrait\nind_1\t0.5\n");
        match read_phenotype(&p) {
            Err(CliError::Parse { line, column, .. }) => assert_eq!((line, column), (1, 2)),
            other => panic!("unexpected {other:?}"),
        }
        let p = tmp("pheno_nan.tsv", "id\tvalue\nind_1\tNaN\n");
        assert!(matches!(read_phenotype(&p), Err(CliError::Parse { line: 2, column: 2, .. })));
    }

    #[test]
    fn results_reject_out_of_range_p() {
        let p = tmp("res.tsv", "#n\t3\nsnp_id\tbeta\tstderr\tsigma_e2\tchisq\tpvalue\ns\t1\t1\t1\t1\t0\n");
        assert!(matches!(read_results(&p), Err(CliError::Parse { line: 3, column: 6, .. })));
    }
}
