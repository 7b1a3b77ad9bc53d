//! `audit` subcommands. Randomized audits print the analytic bound next to
//! the empirical estimate; bounds of 1 or more are tagged VACUOUS.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rocket_lab::features::{pca_effective_dim_dense, render_dimension_summary, PcaReport};
use rocket_lab::kernel::{generate_kernels, transform_with_kernels, DilationPolicy, PaddingPolicy};
use rocket_lab::rng::{self, Domain};
use rocket_lab::robustness::{lipschitz_certificate, verify_noise_robustness, verify_shift_invariance, NoiseCheck, NoiseModel};
use rocket_lab::sensing::{
    build_toeplitz, cross_basis_coherence, dft_basis, dilation_comparison, overlap_sum,
    overlap_sum_truncated, recoverability, t01_variance, t01_variance_monte_carlo, to_complex,
    verify_bound_monte_carlo, Axis, BoundCheck,
};
use rocket_lab::series::load_dataset;
use rocket_lab::sparsity::{axiom_battery, estimate_sparsity, render_axiom_table};
use rocket_lab::{Dataset, Error, FeatureMatrix, Result, TimeSeries, TransformConfig, WeightLaw};
use serde::Serialize;

use crate::config::FileConfig;
use crate::manifest::write_file;
use crate::{Ctx, DelimiterArg, KernelArgs, Outcome};

#[derive(Subcommand)]
pub enum AuditCommand {
    /// Monte-Carlo check of P(max |T_ij| > alpha) against N(K-1)/(2K alpha^2).
    CoherenceBound(CoherenceBoundArgs),
    /// Var[T_01] against (K-1)/K^2.
    Variance(VarianceArgs),
    /// Pairwise overlap count against N K (K-1) / 2.
    Overlap(OverlapArgs),
    /// Sufficient conditions for sparse recovery with a Toeplitz kernel matrix.
    Recoverability(RecoverabilityArgs),
    /// Cross-basis coherence: DFT vs identity, dilated vs undilated kernels.
    CrossBasis(CrossBasisArgs),
    /// The six sparsity-measure properties for 1/PPV.
    Axioms(AxiomsArgs),
    /// Sparsity estimate (count above threshold) of series or raw values.
    Sparsity(SparsityArgs),
    /// Chi-square feature-robustness certificate, optionally checked empirically.
    Lipschitz(LipschitzArgs),
    /// Feature equality under circular shifts of the input.
    Shift(ShiftArgs),
    /// PCA effective dimensionality of feature matrices.
    Pca(PcaArgs),
}

pub fn run(ctx: &Ctx, cmd: &AuditCommand) -> Outcome {
    match cmd {
        AuditCommand::CoherenceBound(a) => coherence_bound_audit(ctx, a),
        AuditCommand::Variance(a) => variance(ctx, a),
        AuditCommand::Overlap(a) => overlap(ctx, a),
        AuditCommand::Recoverability(a) => recover(ctx, a),
        AuditCommand::CrossBasis(a) => cross_basis(ctx, a),
        AuditCommand::Axioms(a) => axioms(ctx, a),
        AuditCommand::Sparsity(a) => sparsity(ctx, a),
        AuditCommand::Lipschitz(a) => lipschitz(ctx, a),
        AuditCommand::Shift(a) => shift(ctx, a),
        AuditCommand::Pca(a) => pca(ctx, a),
    }
}

fn record(ctx: &Ctx, trials: Option<usize>) -> FileConfig {
    FileConfig {
        seed: Some(ctx.resolver.seed()),
        trials,
        ..FileConfig::default()
    }
}

fn vacuous_tag(bound: f64) -> &'static str {
    if bound >= 1.0 {
        " VACUOUS"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    Columns,
    Rows,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Columns => Axis::Columns,
            AxisArg::Rows => Axis::Rows,
        }
    }
}

#[derive(Debug, Args)]
pub struct CoherenceBoundArgs {
    #[arg(long, value_delimiter = ',', default_value = "20,80")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,5,9")]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    alpha: Vec<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Inner products between columns (default) or rows of the Toeplitz matrix.
    #[arg(long, value_enum, default_value = "columns")]
    axis: AxisArg,
}

fn coherence_bound_audit(ctx: &Ctx, a: &CoherenceBoundArgs) -> Outcome {
    let trials = ctx.resolver.trials(a.trials, 2000);
    let seed = ctx.resolver.seed();
    let mut reports = Vec::new();
    let mut text = format!(
        "{:>4} {:>5} {:>6} {:>10} {:>10} {:>8} {:>8}  result\n",
        "K", "N", "alpha", "bound", "empirical", "3*SE", "mean_mu"
    );
    for &k in &a.k {
        for &n in &a.n {
            for &alpha in &a.alpha {
                let r = verify_bound_monte_carlo(&BoundCheck {
                    n,
                    k,
                    alpha,
                    trials,
                    seed,
                    axis: a.axis.into(),
                })?;
                let _ = writeln!(
                    text,
                    "{:>4} {:>5} {:>6} {:>10.4} {:>10.4} {:>8.4} {:>8.4}  {}{}",
                    k,
                    n,
                    alpha,
                    r.bound_value,
                    r.empirical_exceed_rate,
                    3.0 * r.std_error,
                    r.mean_mu,
                    if r.passes { "ok" } else { "EXCEEDED" },
                    vacuous_tag(r.bound_value)
                );
                reports.push(r);
            }
        }
    }
    let ok = reports.iter().all(|r| r.passes);
    let _ = writeln!(text, "{} trials per cell; {}", trials, if ok { "all cells within bound + 3*SE" } else { "bound exceeded" });
    let m = ctx.manifest("audit coherence-bound", record(ctx, Some(trials)))?;
    ctx.finish(&m, &reports, &text, None)?;
    Ok(ok)
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,5,9,21")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Serialize)]
struct VarianceRow {
    k: usize,
    analytic: f64,
    monte_carlo: f64,
    relative_error: f64,
}

fn variance(ctx: &Ctx, a: &VarianceArgs) -> Outcome {
    let seed = ctx.resolver.seed();
    let mut rows = Vec::new();
    let mut text = format!("{:>4} {:>12} {:>12} {:>9}\n", "K", "(K-1)/K^2", "monte-carlo", "rel.err");
    for &k in &a.k {
        let analytic = t01_variance(k)?;
        let mc = t01_variance_monte_carlo(k, a.samples, seed)?;
        let rel = (mc - analytic).abs() / analytic;
        let _ = writeln!(text, "{k:>4} {analytic:>12.6} {mc:>12.6} {rel:>9.4}");
        rows.push(VarianceRow {
            k,
            analytic,
            monte_carlo: mc,
            relative_error: rel,
        });
    }
    let _ = writeln!(text, "{} samples per K", a.samples);
    let m = ctx.manifest("audit variance", record(ctx, Some(a.samples)))?;
    ctx.finish(&m, &rows, &text, None)?;
    Ok(true)
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
}

fn overlap(ctx: &Ctx, a: &OverlapArgs) -> Outcome {
    #[derive(Serialize)]
    struct Report {
        n: usize,
        k: usize,
        pairwise_sum: usize,
        closed_form: usize,
        truncated_sum: usize,
        exact: bool,
    }
    let pairwise = overlap_sum(a.n, a.k)?;
    let closed = a.n * a.k * (a.k - 1) / 2;
    let r = Report {
        n: a.n,
        k: a.k,
        pairwise_sum: pairwise,
        closed_form: closed,
        truncated_sum: overlap_sum_truncated(a.n, a.k)?,
        exact: pairwise == closed,
    };
    let text = format!(
        "N={} K={}: pairwise sum {} vs N*K*(K-1)/2 = {} ({}); without wrap-around pairs {}\n",
        r.n,
        r.k,
        r.pairwise_sum,
        r.closed_form,
        if r.exact { "equal" } else { "DIFFERENT" },
        r.truncated_sum
    );
    let m = ctx.manifest("audit overlap", record(ctx, None))?;
    ctx.finish(&m, &r, &text, None)?;
    Ok(r.exact)
}

#[derive(Debug, Args)]
pub struct RecoverabilityArgs {
    #[arg(long)]
    s: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Constant in the kernel-length condition K > s^2 ln(N) / c_s.
    #[arg(long, default_value_t = 1.0)]
    c_s: f64,
    /// Coherence to test; sampled from a random N(0, 1/K) kernel when omitted.
    #[arg(long)]
    mu: Option<f64>,
}

fn sampled_mu(n: usize, k: usize, seed: u64) -> Result<f64> {
    let cfg = TransformConfig {
        num_kernels: 1,
        kernel_lengths: vec![k],
        seed,
        dilation_policy: DilationPolicy::Fixed(1),
        padding_policy: PaddingPolicy::AlwaysZero,
        weight_law: WeightLaw::ScaledNormal,
        standardize_inputs: false,
    };
    let kernel = generate_kernels(&cfg, n)?.remove(0);
    Ok(build_toeplitz(&kernel, n)?.coherence(Axis::Columns)?.value)
}

fn recover(ctx: &Ctx, a: &RecoverabilityArgs) -> Outcome {
    let mu = match a.mu {
        Some(mu) => mu,
        None => sampled_mu(a.n, a.k, ctx.resolver.seed())?,
    };
    let v = recoverability(a.s, a.n, a.k, a.c_s, mu)?;
    let text = format!(
        "s={} N={} K={}\n  kernel length: K > s^2 ln(N)/c_s = {:.4}  -> {}\n  coherence:     mu = {:.4} < 1/(2s-1) = {:.4}  -> {}\n",
        v.s,
        v.n,
        v.k,
        v.rip_threshold,
        if v.rip_ok { "satisfied" } else { "not satisfied" },
        v.mu_used,
        v.coherence_threshold,
        if v.coherence_ok { "satisfied" } else { "not satisfied" },
    );
    let m = ctx.manifest("audit recoverability", record(ctx, None))?;
    ctx.finish(&m, &v, &text, None)?;
    Ok(true)
}

#[derive(Debug, Args)]
pub struct CrossBasisArgs {
    /// Sizes for the DFT-vs-identity check.
    #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
    n: Vec<usize>,
    /// Signal length for the dilation comparison.
    #[arg(long, default_value_t = 64)]
    basis_n: usize,
    #[arg(long, default_value_t = 9)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    dilation: usize,
    #[arg(long, default_value_t = 200)]
    pairs: usize,
}

fn cross_basis(ctx: &Ctx, a: &CrossBasisArgs) -> Outcome {
    #[derive(Serialize)]
    struct DftRow {
        n: usize,
        mu: f64,
        expected: f64,
    }
    #[derive(Serialize)]
    struct Report {
        dft_identity: Vec<DftRow>,
        dilation: rocket_lab::sensing::DilationComparison,
    }
    let mut text = String::from("DFT vs identity:\n");
    let mut rows = Vec::new();
    for &n in &a.n {
        let mu = cross_basis_coherence(&dft_basis(n), &to_complex(&DMatrix::identity(n, n)))?.value;
        let expected = 1.0 / (n as f64).sqrt();
        let _ = writeln!(text, "  N={n:<5} mu={mu:.12} 1/sqrt(N)={expected:.12}");
        rows.push(DftRow { n, mu, expected });
    }
    let cmp = dilation_comparison(a.basis_n, a.k, a.dilation, a.pairs, ctx.resolver.seed())?;
    let _ = writeln!(
        text,
        "kernel bases (N={}, K={}, {} pairs): mean cross coherence undilated {:.4}, dilated d={} {:.4} ({})",
        cmp.n,
        cmp.k,
        cmp.pairs,
        cmp.mean_undilated,
        cmp.dilation,
        cmp.mean_dilated,
        if cmp.mean_dilated < cmp.mean_undilated { "dilation lowers coherence" } else { "dilation does not lower coherence" }
    );
    let m = ctx.manifest("audit cross-basis", record(ctx, Some(a.pairs)))?;
    ctx.finish(
        &m,
        &Report {
            dft_identity: rows,
            dilation: cmp,
        },
        &text,
        None,
    )?;
    Ok(true)
}

#[derive(Debug, Args)]
pub struct AxiomsArgs {
    #[arg(long)]
    trials: Option<usize>,
}

fn axioms(ctx: &Ctx, a: &AxiomsArgs) -> Outcome {
    let trials = ctx.resolver.trials(a.trials, 1000);
    let results = axiom_battery(trials, ctx.resolver.seed())?;
    let ok = results.iter().all(|r| r.matches_expected());
    let m = ctx.manifest("audit axioms", record(ctx, Some(trials)))?;
    ctx.finish(&m, &results, &render_axiom_table(&results), None)?;
    Ok(ok)
}

#[derive(Debug, Args)]
pub struct SparsityArgs {
    /// Dataset whose series are assessed.
    #[arg(long, conflicts_with = "values")]
    data: Option<PathBuf>,
    /// A single signal, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    threshold: f64,
    /// Write `index,value,above` for the first series, for plotting.
    #[arg(long)]
    plot_csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    delimiter: DelimiterArg,
}

fn sparsity(ctx: &Ctx, a: &SparsityArgs) -> Outcome {
    let mut m = ctx.manifest("audit sparsity", record(ctx, None))?;
    let signals: Vec<(String, Vec<f64>)> = match (&a.data, &a.values) {
        (Some(p), None) => {
            m.add_input(p)?;
            load_dataset(p, a.delimiter.into())?
                .instances()
                .iter()
                .map(|i| (i.label.clone(), i.series.values().to_vec()))
                .collect()
        }
        (None, Some(v)) => vec![("values".into(), v.clone())],
        _ => return Err(Error::Argument("give either --data or --values".into())),
    };
    let mut reports = Vec::new();
    let mut text = format!("{:>5} {:<12} {:>6} {:>8} {:>8} {:>10}\n", "row", "label", "N", "count", "ppv", "2*count");
    for (i, (label, x)) in signals.iter().enumerate() {
        let r = estimate_sparsity(x, a.threshold)?;
        let _ = writeln!(
            text,
            "{i:>5} {label:<12} {:>6} {:>8} {:>8.4} {:>10}",
            r.n, r.positive_count, r.ppv, r.estimated_s
        );
        reports.push(r);
    }
    let _ = writeln!(text, "threshold {}", a.threshold);
    if let Some(p) = &a.plot_csv {
        let mut csv = String::from("index,value,above\n");
        for (i, v) in signals[0].1.iter().enumerate() {
            let _ = writeln!(csv, "{i},{v},{}", (*v > a.threshold) as u8);
        }
        write_file(p, &csv)?;
    }
    ctx.finish(&m, &reports, &text, None)?;
    Ok(true)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    Uniform,
    Laplace,
}

impl From<NoiseArg> for NoiseModel {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Gaussian => NoiseModel::Gaussian,
            NoiseArg::Uniform => NoiseModel::Uniform,
            NoiseArg::Laplace => NoiseModel::Laplace,
        }
    }
}

/// Selects one series: row `row` of `--data`, else a seeded Gaussian series
/// of length `n`.
#[derive(Debug, Args)]
pub struct SeriesSource {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    row: usize,
    #[arg(long, value_enum, default_value = "auto")]
    delimiter: DelimiterArg,
}

impl SeriesSource {
    fn series(&self, n: Option<usize>, seed: u64, m: &mut crate::manifest::RunManifest) -> Result<TimeSeries> {
        match &self.data {
            Some(p) => {
                m.add_input(p)?;
                let ds = load_dataset(p, self.delimiter.into())?;
                let inst = ds.instances().get(self.row).ok_or_else(|| {
                    Error::Argument(format!("row {} out of range ({} series)", self.row, ds.len()))
                })?;
                if let Some(n) = n {
                    if n != inst.series.len() {
                        return Err(Error::Dimension(format!(
                            "--n {n} but row {} has length {}",
                            self.row,
                            inst.series.len()
                        )));
                    }
                }
                Ok(inst.series.clone())
            }
            None => {
                let n = n.ok_or_else(|| Error::Argument("give --n or --data".into()))?;
                let mut r = rng::stream(seed, Domain::Synthetic, u64::MAX);
                TimeSeries::new((0..n).map(|_| StandardNormal.sample(&mut r)).collect())
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct LipschitzArgs {
    /// Number of kernels L.
    #[arg(long, default_value_t = 10_000)]
    l: usize,
    /// Series length N (taken from the data when --data is given).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.005)]
    alpha: f64,
    /// Also run the Monte-Carlo noise check.
    #[arg(long)]
    empirical: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    noise: NoiseArg,
    #[command(flatten)]
    source: SeriesSource,
    #[command(flatten)]
    kernel: KernelArgs,
}

fn lipschitz(ctx: &Ctx, a: &LipschitzArgs) -> Outcome {
    let seed = ctx.resolver.seed();
    if !a.empirical {
        let n = match (a.n, &a.source.data) {
            (Some(n), _) => n,
            (None, Some(p)) => load_dataset(p, a.source.delimiter.into())?.common_len()?,
            (None, None) => 80,
        };
        let cert = lipschitz_certificate(a.l, n, a.alpha)?;
        let text = format!(
            "L={} N={} alpha={}\n  chi-square lower quantile x2({}, {}) = {:.4}\n  with probability >= {:.3}: |Phi(g)-Phi(f)|^2 / |g-f|^2 <= L / x2 = {:.4} (norm ratio <= {:.4})\n",
            cert.l,
            cert.n,
            cert.alpha,
            cert.n,
            cert.alpha,
            cert.chi2_quantile,
            cert.confidence,
            cert.ratio_bound,
            cert.norm_ratio_bound,
        );
        let m = ctx.manifest("audit lipschitz", record(ctx, None))?;
        ctx.finish(&m, &cert, &text, None)?;
        return Ok(true);
    }

    let mut flags = a.kernel.flags();
    flags.kernels = Some(a.l);
    let cfg = ctx.resolver.transform(&flags)?;
    let trials = ctx.resolver.trials(a.trials, 1000);
    let mut m = ctx.manifest("audit lipschitz", {
        let mut r = ctx.resolver.transform_record(&cfg);
        r.trials = Some(trials);
        r
    })?;
    let f = a.source.series(a.n, seed, &mut m)?;
    let cert = verify_noise_robustness(
        &f,
        &cfg,
        &NoiseCheck {
            alpha: a.alpha,
            trials,
            seed,
            sigma: a.sigma,
            noise: a.noise.into(),
        },
    )?;
    let e = cert.empirical.as_ref().expect("empirical check requested");
    let text = format!(
        "L={} N={} alpha={} noise={:?} sigma={}\n  bound on squared ratio: {:.4} (x2 quantile {:.4}){}\n  empirical: max ratio {:.4}, exceed rate {:.4} vs alpha + 3*SE = {:.4} over {} trials -> {}\n",
        cert.l,
        cert.n,
        cert.alpha,
        cert.noise,
        cert.sigma,
        cert.ratio_bound,
        cert.chi2_quantile,
        if cert.analytic { "" } else { " (approximate for non-Gaussian noise)" },
        e.max_observed_ratio,
        e.violation_rate,
        cert.alpha + 3.0 * e.std_error,
        e.trials - e.excluded_zero_noise,
        if e.passes { "ok" } else { "EXCEEDED" }
    );
    let ok = e.passes;
    ctx.finish(&m, &cert, &text, None)?;
    Ok(ok)
}

#[derive(Debug, Args)]
pub struct ShiftArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Shifts to test; default 1, N/2, N-1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    shifts: Option<Vec<i64>>,
    #[command(flatten)]
    source: SeriesSource,
    #[command(flatten)]
    kernel: KernelArgs,
}

fn shift(ctx: &Ctx, a: &ShiftArgs) -> Outcome {
    let mut flags = a.kernel.flags();
    if flags.padding.is_none() && ctx.resolver.file.padding.is_none() {
        flags.padding = Some("circular".into());
    }
    let cfg = ctx.resolver.transform(&flags)?;
    let mut m = ctx.manifest("audit shift", ctx.resolver.transform_record(&cfg))?;
    let f = a.source.series(a.n, cfg.seed, &mut m)?;
    let n = f.len() as i64;
    let shifts = a.shifts.clone().unwrap_or_else(|| vec![1, n / 2, n - 1]);
    let r = verify_shift_invariance(&f, &cfg, &shifts)?;
    let text = format!(
        "N={} L={} padding={} shifts {:?}: {} mismatched features, max PPV discrepancy {:.6} -> {}{}\n",
        r.n,
        r.l,
        crate::config::padding_name(r.padding),
        r.shifts_tested,
        r.mismatched_features,
        r.max_feature_discrepancy,
        if r.exact { "exact" } else { "not exact" },
        if r.exactness_claimed { "" } else { " (exactness only holds for circular padding)" }
    );
    let ok = r.exact || !r.exactness_claimed;
    ctx.finish(&m, &r, &text, None)?;
    Ok(ok)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PcaSource {
    Pooled,
    Train,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    /// Feature CSV files (as written by `transform`); one report each.
    #[arg(long = "features")]
    features: Vec<PathBuf>,
    /// Dataset to transform and analyse.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Optional test split pooled with --train.
    #[arg(long, requires = "train")]
    test: Option<PathBuf>,
    /// Rows used when both splits are given.
    #[arg(long, value_enum, default_value = "pooled")]
    pca_source: PcaSource,
    #[arg(long, value_delimiter = ',', default_value = "0.9,0.95")]
    thresholds: Vec<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    delimiter: DelimiterArg,
    #[command(flatten)]
    kernel: KernelArgs,
}

#[derive(Serialize)]
struct PcaEntry {
    name: String,
    source: Option<PcaSource>,
    report: PcaReport,
}

fn pca(ctx: &Ctx, a: &PcaArgs) -> Outcome {
    if a.features.is_empty() && a.train.is_none() {
        return Err(Error::Argument("give --features or --train".into()));
    }
    let mut entries = Vec::new();
    let mut m;
    if let Some(train_path) = &a.train {
        let cfg = ctx.resolver.transform(&a.kernel.flags())?;
        m = ctx.manifest("audit pca", ctx.resolver.transform_record(&cfg))?;
        m.add_input(train_path)?;
        let train = load_dataset(train_path, a.delimiter.into())?;
        let rows: Dataset = match (&a.test, a.pca_source) {
            (Some(test_path), PcaSource::Pooled) => {
                m.add_input(test_path)?;
                let test = load_dataset(test_path, a.delimiter.into())?;
                let mut all = train.instances().to_vec();
                all.extend(test.instances().iter().cloned());
                Dataset::new("pooled", all)?
            }
            _ => train,
        };
        let kernels = generate_kernels(&cfg, rows.min_len())?;
        let f = transform_with_kernels(&rows, &kernels, cfg.standardize_inputs, cfg.kernel_set_id())?;
        entries.push(PcaEntry {
            name: train_path.display().to_string(),
            source: Some(if a.test.is_some() { a.pca_source } else { PcaSource::Train }),
            report: pca_effective_dim_dense(&f.to_dmatrix(), &a.thresholds)?,
        });
    } else {
        m = ctx.manifest("audit pca", record(ctx, None))?;
    }
    for p in &a.features {
        m.add_input(p)?;
        let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
            path: p.clone(),
            source,
        })?;
        let f = FeatureMatrix::from_csv(&text)?;
        entries.push(PcaEntry {
            name: p.display().to_string(),
            source: None,
            report: pca_effective_dim_dense(&f.to_dmatrix(), &a.thresholds)?,
        });
    }

    let mut text = String::new();
    for e in &entries {
        let r = &e.report;
        let _ = write!(
            text,
            "{}: {} x {} features, rank {}, k90 {}, k95 {}",
            e.name, r.instances, r.total_features, r.rank, r.k90, r.k95
        );
        for (t, k) in &r.components {
            let _ = write!(text, ", k({t}) {k}");
        }
        if let Some(s) = e.source {
            let _ = write!(text, " [{}]", if s == PcaSource::Pooled { "pooled train+test" } else { "train only" });
        }
        text.push('\n');
    }
    if entries.len() > 1 {
        let named: Vec<(String, PcaReport)> = entries.iter().map(|e| (e.name.clone(), e.report.clone())).collect();
        text.push_str(&render_dimension_summary(&named));
    }
    ctx.finish(&m, &entries, &text, None)?;
    Ok(true)
}
