use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hlmm_core::hodlr::HodlrConfig;
use hlmm_core::lmm::{
    associate, build_covariance_solve, prepare_scan, standardize_genotypes, GenotypeMatrix, ScanResult,
};
use hlmm_core::scaling::{run_scaling, slope_for, Method};
use hlmm_core::simgen::{simulate_genotypes, simulate_phenotype, GenoSimConfig, PhenoSimConfig};

use crate::error::{CliError, Result};
use crate::formats::{self, write_file};
use crate::plot;

#[derive(Parser, Debug)]
#[command(name = "hlmm", version, about = "HODLR-accelerated linear mixed model association scans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate genotypes, a phenotype and the ground truth behind it.
    Simulate(SimulateArgs),
    /// Run the association scan.
    Scan(ScanArgs),
    /// Time HODLR against dense inversion over a grid of sample sizes.
    Benchmark(BenchmarkArgs),
    /// Draw a Manhattan plot from a results file.
    Plot(PlotArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Per-block Frobenius tolerance of the HODLR compression.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Largest diagonal block stored densely.
    #[arg(long, default_value_t = 64)]
    pub min_block: usize,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

impl SolverArgs {
    fn hodlr(&self) -> Result<HodlrConfig> {
        Ok(HodlrConfig::new(self.epsilon, self.min_block)?)
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Number of individuals.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Number of SNPs.
    #[arg(long, default_value_t = 100)]
    pub snps: usize,
    /// Heritability of the simulated trait.
    #[arg(long, default_value_t = 0.5)]
    pub h2: f64,
    /// Probability that a SNP is causal.
    #[arg(long, default_value_t = 0.05)]
    pub pi2: f64,
    /// Per-allele probability (0.5 gives heterozygosity 0.5).
    #[arg(long, default_value_t = 0.5)]
    pub allele_prob: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory; receives genotypes.tsv, phenotype.tsv and truth.tsv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long)]
    pub genotypes: PathBuf,
    #[arg(long)]
    pub phenotype: PathBuf,
    /// Fixed heritability in [0, 1) instead of the PCGC estimate.
    #[arg(long)]
    pub h2_override: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Results file.
    #[arg(long, default_value = "results.tsv")]
    pub out: PathBuf,
    /// Also write the genetic similarity matrix as a TSV.
    #[arg(long)]
    pub gsm_out: Option<PathBuf>,
    /// Also write the HODLR block tree of the inverse covariance.
    #[arg(long)]
    pub tree_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "512,1024,2048,4096")]
    pub grid: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 100)]
    pub snps: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "benchmark.tsv")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, default_value = "manhattan.svg")]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Scan(a) => {
            let workers = a.solver.workers;
            with_workers(workers, || cmd_scan(&a))
        }
        Command::Benchmark(a) => {
            let workers = a.solver.workers;
            with_workers(workers, || cmd_benchmark(&a))
        }
        Command::Plot(a) => cmd_plot(&a),
    }
}

/// Runs `f` inside a dedicated pool when a worker count is given.
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {w} workers: {e}")))?
            .install(f),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut gcfg = GenoSimConfig::new(a.n, a.snps, a.seed);
    gcfg.allele_prob = a.allele_prob;
    let g = simulate_genotypes(&gcfg)?;
    let x = standardize_genotypes(&g)?;
    let mut pcfg = PhenoSimConfig::new(a.h2, a.seed.wrapping_add(1));
    pcfg.pi2 = a.pi2;
    let (y, truth) = simulate_phenotype(&x, &pcfg)?;
    if truth.resample_attempts > 0 {
        log::warn!(
            "causal set was empty; resampled {} times{}",
            truth.resample_attempts,
            if truth.forced_causal { " and forced one causal SNP" } else { "" }
        );
    }
    let ids = formats::default_individual_ids(a.n);
    ensure_dir(&a.out)?;
    write_file(&a.out.join("genotypes.tsv"), |w| formats::write_genotypes(w, &ids, &g))?;
    write_file(&a.out.join("phenotype.tsv"), |w| formats::write_phenotype(w, &ids, &y))?;
    write_file(&a.out.join("truth.tsv"), |w| formats::write_truth(w, g.snp_ids(), &truth))?;
    log::info!(
        "simulated n = {}, P = {}, {} causal SNPs into {}",
        a.n,
        a.snps,
        truth.causal_indices.len(),
        a.out.display()
    );
    Ok(())
}

pub fn cmd_scan(a: &ScanArgs) -> Result<()> {
    let cfg = a.solver.hodlr()?;
    let t = Instant::now();
    let (ids, g) = formats::read_genotypes(&a.genotypes)?;
    let pheno = formats::read_phenotype(&a.phenotype)?;
    let y = formats::align_phenotype(&ids, &pheno)?;
    let read_time = t.elapsed().as_secs_f64();
    let prepared = prepare_scan(&g, &y, None, a.h2_override)?;
    let t = Instant::now();
    let solve = build_covariance_solve(&prepared.gsm, prepared.heritability.lambda, &cfg)?;
    let inverse_time = t.elapsed();
    let mut result = associate(&prepared, g.snp_ids(), &y, None, &solve)?;
    result.timings.inverse = inverse_time;
    log::info!(
        "scanned {} SNPs on {} individuals, h2 = {:.4}",
        result.records.len(),
        result.n,
        result.heritability.h2
    );
    write_file(&a.out, |w| {
        write_results_metadata(w, &result, &g, &cfg, read_time)?;
        formats::write_results_body(w, &result)
    })?;
    if let Some(path) = &a.gsm_out {
        write_file(path, |w| {
            for i in 0..prepared.gsm.n() {
                let row: Vec<String> = prepared.gsm.k.row(i).iter().map(|v| format!("{v:e}")).collect();
                writeln!(w, "{}", row.join("\t"))?;
            }
            Ok(())
        })?;
    }
    if let Some(path) = &a.tree_out {
        let dump = solve.sigma_inv.dump_tree();
        write_file(path, |w| w.write_all(dump.as_bytes()))?;
    }
    Ok(())
}

/// `#key<TAB>value` lines. Everything that may vary between otherwise
/// identical runs (timings, worker count) lives here, never in the body.
fn write_results_metadata(
    w: &mut dyn Write,
    r: &ScanResult,
    g: &GenotypeMatrix,
    cfg: &HodlrConfig,
    read_seconds: f64,
) -> std::io::Result<()> {
    let dropped: Vec<&str> = r.dropped.iter().map(|&j| g.snp_ids()[j].as_str()).collect();
    writeln!(w, "#n\t{}", r.n)?;
    writeln!(w, "#snps_retained\t{}", r.records.len())?;
    writeln!(w, "#snps_dropped\t{}", r.dropped.len())?;
    if !dropped.is_empty() {
        writeln!(w, "#dropped_ids\t{}", dropped.join(","))?;
    }
    writeln!(w, "#h2\t{:e}", r.heritability.h2)?;
    writeln!(w, "#lambda\t{:e}", r.heritability.lambda)?;
    writeln!(w, "#epsilon\t{:e}", cfg.epsilon)?;
    writeln!(w, "#min_block\t{}", cfg.min_block)?;
    writeln!(w, "#workers\t{}", hlmm_core::par::current_workers())?;
    let t = &r.timings;
    writeln!(w, "#seconds_read\t{read_seconds:.6}")?;
    writeln!(w, "#seconds_standardize\t{:.6}", t.standardize.as_secs_f64())?;
    writeln!(w, "#seconds_gsm\t{:.6}", t.gsm.as_secs_f64())?;
    writeln!(w, "#seconds_heritability\t{:.6}", t.heritability.as_secs_f64())?;
    writeln!(w, "#seconds_inverse\t{:.6}", t.inverse.as_secs_f64())?;
    writeln!(w, "#seconds_association\t{:.6}", t.association.as_secs_f64())?;
    Ok(())
}

pub fn cmd_benchmark(a: &BenchmarkArgs) -> Result<()> {
    if a.grid.len() < 2 {
        return Err(CliError::Usage("--grid needs at least two sample sizes".into()));
    }
    if a.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    let cfg = a.solver.hodlr()?;
    let timings = run_scaling(&a.grid, a.snps, a.repeats, &cfg, a.seed)?;
    let slopes = [
        (Method::Hodlr.name(), slope_for(&timings, Method::Hodlr)?),
        (Method::Dense.name(), slope_for(&timings, Method::Dense)?),
    ];
    write_file(&a.out, |w| formats::write_benchmark(w, &timings, &slopes))?;
    for (name, s) in slopes {
        println!("slope_{name}\t{s:.4}");
    }
    Ok(())
}

pub fn cmd_plot(a: &PlotArgs) -> Result<()> {
    let rows = formats::read_results(&a.results)?;
    if rows.is_empty() {
        return Err(CliError::EmptyPlot(a.results.display().to_string()));
    }
    let svg = plot::render_svg(&rows);
    write_file(&a.out, |w| w.write_all(svg.as_bytes()))?;
    println!("hits\t{}", plot::count_hits(&rows));
    Ok(())
}
