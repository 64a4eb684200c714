//! Association pipeline: standardize genotypes, build the GSM, estimate
//! heritability by PCGC, invert `λK + I` once, then test every SNP by GLS
//! with a closed-form REML residual variance and a Wald statistic.

mod covariance;
mod genotype;
mod gls;
mod gsm;
mod pcgc;
mod scan;
mod wald;

pub use covariance::{build_covariance_solve, CovarianceInverse, CovarianceSolve};
pub use genotype::{standardize_genotypes, standardize_phenotype, GenotypeMatrix, StandardizedGenotypes};
pub use gls::{gls_beta, reml_sigma_e, GlsFit};
pub use gsm::{compute_gsm, Gsm};
pub use pcgc::{pcgc_heritability, HeritabilityEstimate, H2_MAX};
pub use scan::{associate, prepare_scan, scan, AssociationRecord, PhaseTimings, PreparedScan, ScanResult};
pub use wald::{chi2_1_ln_sf, chi2_1_neg_log10_sf, chi2_1_sf, wald_test};
