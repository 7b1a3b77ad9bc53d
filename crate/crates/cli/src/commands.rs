use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rocket_lab::features::{accuracy, confusion, RidgeOptions};
use rocket_lab::kernel::{generate_kernels, transform_with_kernels, FeatureEnvelope};
use rocket_lab::series::{load_dataset, write_dataset, Delimiter};
use rocket_lab::synthetic::{template_dataset, TemplateConfig};
use rocket_lab::{fit_ridge, predict as ridge_predict, Dataset, Error, FeatureMatrix, Result, RidgeModel, TransformConfig};
use serde::{Deserialize, Serialize};

use crate::config::FileConfig;
use crate::manifest::{sidecar, write_file};
use crate::{Ctx, DelimiterArg, KernelArgs, Outcome};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FeatureFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Input dataset: one series per row, label first.
    #[arg(long)]
    data: PathBuf,
    /// Feature file to write.
    #[arg(long)]
    out: PathBuf,
    /// Output format; inferred from the extension of --out when omitted.
    #[arg(long, value_enum)]
    out_format: Option<FeatureFormat>,
    #[arg(long, value_enum, default_value = "auto")]
    delimiter: DelimiterArg,
    #[command(flatten)]
    kernel: KernelArgs,
}

fn labels_of(ds: &Dataset) -> Vec<String> {
    ds.labels().iter().map(|s| s.to_string()).collect()
}

pub fn transform(ctx: &Ctx, a: &TransformArgs) -> Outcome {
    let cfg = ctx.resolver.transform(&a.kernel.flags())?;
    let ds = load_dataset(&a.data, a.delimiter.into())?;
    let fm = rocket_lab::transform(&ds, &cfg)?;

    let format = a.out_format.unwrap_or_else(|| {
        if a.out.extension().is_some_and(|e| e == "json") {
            FeatureFormat::Json
        } else {
            FeatureFormat::Csv
        }
    });
    let body = match format {
        FeatureFormat::Csv => fm.to_csv(),
        FeatureFormat::Json => serde_json::to_string(&FeatureEnvelope::new(&fm, &cfg, labels_of(&ds)))?,
    };
    write_file(&a.out, &body)?;

    let mut m = ctx.manifest("transform", ctx.resolver.transform_record(&cfg))?;
    m.add_input(&a.data)?;
    #[derive(Serialize)]
    struct Report<'a> {
        rows: usize,
        features: usize,
        kernel_set_id: &'a str,
        out: &'a Path,
    }
    let text = format!(
        "transformed {} series into {} features (kernel set {}) -> {}\n",
        fm.n_rows(),
        fm.n_cols(),
        fm.kernel_set_id,
        a.out.display()
    );
    ctx.finish(
        &m,
        &Report {
            rows: fm.n_rows(),
            features: fm.n_cols(),
            kernel_set_id: &fm.kernel_set_id,
            out: &a.out,
        },
        &text,
        Some(sidecar(&a.out)),
    )?;
    Ok(true)
}

/// Saved classifier: the ridge model plus the transform that feeds it.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub transform: TransformConfig,
    pub series_len: usize,
    pub model: RidgeModel,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Ridge penalties to cross-validate, comma separated. A single value
    /// skips cross-validation.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long)]
    folds: Option<usize>,
    /// Where to save the fitted model as JSON.
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    delimiter: DelimiterArg,
    #[command(flatten)]
    kernel: KernelArgs,
}

/// Kernel length hint for transforming both splits with one kernel set.
fn shared_length(train: &Dataset, test: &Dataset) -> Result<usize> {
    if let (Ok(a), Ok(b)) = (train.common_len(), test.common_len()) {
        if a != b {
            return Err(Error::Dimension(format!(
                "test series have length {b} but training series have length {a}"
            )));
        }
    }
    Ok(train.min_len().min(test.min_len()))
}

#[derive(Serialize)]
struct ClassifyReport {
    accuracy: f64,
    lambda: f64,
    cv_accuracy: Vec<(f64, f64)>,
    labels: Vec<String>,
    /// `[true][predicted]`
    confusion: Vec<Vec<usize>>,
    train_instances: usize,
    test_instances: usize,
    features: usize,
}

fn render_confusion(labels: &[String], m: &[Vec<usize>]) -> String {
    let w = labels.iter().map(|l| l.len()).max().unwrap_or(4).max(6);
    let mut out = String::new();
    let _ = write!(out, "{:>w$} |", "true\\pred");
    for l in labels {
        let _ = write!(out, " {l:>w$}");
    }
    out.push('\n');
    for (l, row) in labels.iter().zip(m) {
        let _ = write!(out, "{l:>w$} |");
        for c in row {
            let _ = write!(out, " {c:>w$}");
        }
        out.push('\n');
    }
    out
}

pub fn classify(ctx: &Ctx, a: &ClassifyArgs) -> Outcome {
    let cfg = ctx.resolver.transform(&a.kernel.flags())?;
    let file = &ctx.resolver.file;
    let defaults = RidgeOptions::default();
    let opts = RidgeOptions {
        lambda_grid: a.lambda_grid.clone().or_else(|| file.lambda_grid.clone()).unwrap_or(defaults.lambda_grid),
        folds: a.folds.or(file.folds).unwrap_or(defaults.folds),
    };

    let train = load_dataset(&a.train, a.delimiter.into())?;
    let test = load_dataset(&a.test, a.delimiter.into())?;
    let len = shared_length(&train, &test)?;
    let kernels = generate_kernels(&cfg, len)?;
    let id = cfg.kernel_set_id();
    let ftrain = transform_with_kernels(&train, &kernels, cfg.standardize_inputs, id.clone())?;
    let ftest = transform_with_kernels(&test, &kernels, cfg.standardize_inputs, id)?;

    let ytrain = labels_of(&train);
    let ytest = labels_of(&test);
    let model = fit_ridge(&ftrain, &ytrain, &opts)?;
    let pred = ridge_predict(&model, &ftest)?;
    let acc = accuracy(&pred, &ytest);

    let mut labels = model.labels.clone();
    for l in &ytest {
        if !labels.contains(l) {
            labels.push(l.clone());
        }
    }
    let conf = confusion(&labels, &pred, &ytest);

    let mut record = ctx.resolver.transform_record(&cfg);
    record.lambda_grid = Some(opts.lambda_grid.clone());
    record.folds = Some(opts.folds);
    let mut m = ctx.manifest("classify", record)?;
    m.add_input(&a.train)?;
    m.add_input(&a.test)?;

    if let Some(p) = &a.model_out {
        let saved = ModelFile {
            schema_version: rocket_lab::SCHEMA_VERSION,
            transform: cfg.clone(),
            series_len: len,
            model: model.clone(),
        };
        write_file(p, &serde_json::to_string_pretty(&saved)?)?;
    }

    let mut text = format!(
        "train {} / test {} instances, {} features\nlambda {:e}{}\naccuracy {:.4}\n",
        train.len(),
        test.len(),
        ftrain.n_cols(),
        model.lambda,
        if model.cv_accuracy.is_empty() { " (fixed, no cross-validation)" } else { " (cross-validated)" },
        acc
    );
    text.push_str(&render_confusion(&labels, &conf));
    ctx.finish(
        &m,
        &ClassifyReport {
            accuracy: acc,
            lambda: model.lambda,
            cv_accuracy: model.cv_accuracy.clone(),
            labels,
            confusion: conf,
            train_instances: train.len(),
            test_instances: test.len(),
            features: ftrain.n_cols(),
        },
        &text,
        a.model_out.as_deref().map(sidecar),
    )?;
    Ok(true)
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model written by `classify --model-out`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Optional CSV of `index,label`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    delimiter: DelimiterArg,
}

pub fn predict(ctx: &Ctx, a: &PredictArgs) -> Outcome {
    let text = fs::read_to_string(&a.model).map_err(|source| Error::Io {
        path: a.model.clone(),
        source,
    })?;
    let saved: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: not a model file: {e}", a.model.display())))?;
    let ds = load_dataset(&a.data, a.delimiter.into())?;
    if let Ok(n) = ds.common_len() {
        if n != saved.series_len {
            return Err(Error::Dimension(format!(
                "series have length {n} but the model was trained on length {}",
                saved.series_len
            )));
        }
    }
    let kernels = generate_kernels(&saved.transform, saved.series_len)?;
    let f: FeatureMatrix = transform_with_kernels(
        &ds,
        &kernels,
        saved.transform.standardize_inputs,
        saved.transform.kernel_set_id(),
    )?;
    let pred = ridge_predict(&saved.model, &f)?;
    let truth = labels_of(&ds);
    let acc = accuracy(&pred, &truth);

    if let Some(p) = &a.out {
        let mut csv = String::from("index,label\n");
        for (i, l) in pred.iter().enumerate() {
            let _ = writeln!(csv, "{i},{l}");
        }
        write_file(p, &csv)?;
    }
    let mut m = ctx.manifest("predict", ctx.resolver.transform_record(&saved.transform))?;
    m.add_input(&a.model)?;
    m.add_input(&a.data)?;

    #[derive(Serialize)]
    struct Report {
        predictions: Vec<String>,
        accuracy_vs_given_labels: f64,
    }
    let text = format!(
        "{} predictions; agreement with labels in the file {:.4}\n",
        pred.len(),
        acc
    );
    ctx.finish(
        &m,
        &Report {
            predictions: pred,
            accuracy_vs_given_labels: acc,
        },
        &text,
        None,
    )?;
    Ok(true)
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    out_train: PathBuf,
    #[arg(long)]
    out_test: PathBuf,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 50)]
    train_per_class: usize,
    #[arg(long, default_value_t = 50)]
    test_per_class: usize,
    #[arg(long, default_value_t = 80)]
    len: usize,
    #[arg(long, default_value_t = 0.3)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 9)]
    smooth_width: usize,
    #[arg(long, value_enum, default_value = "comma")]
    delimiter: DelimiterArg,
}

pub fn synth(ctx: &Ctx, a: &SynthArgs) -> Outcome {
    let cfg = TemplateConfig {
        classes: a.classes,
        train_per_class: a.train_per_class,
        test_per_class: a.test_per_class,
        len: a.len,
        noise_sigma: a.noise_sigma,
        smooth_width: a.smooth_width,
        seed: ctx.resolver.seed(),
    };
    let (train, test) = template_dataset(&cfg)?;
    let delim: Delimiter = match a.delimiter {
        DelimiterArg::Auto => Delimiter::Comma,
        d => d.into(),
    };
    write_file(&a.out_train, &write_dataset(&train, delim))?;
    write_file(&a.out_test, &write_dataset(&test, delim))?;
    let m = ctx.manifest(
        "synth",
        FileConfig {
            seed: Some(cfg.seed),
            ..FileConfig::default()
        },
    )?;
    let text = format!(
        "wrote {} train and {} test series of length {} to {} and {}\n",
        train.len(),
        test.len(),
        cfg.len,
        a.out_train.display(),
        a.out_test.display()
    );
    ctx.finish(&m, &cfg, &text, Some(sidecar(&a.out_train)))?;
    Ok(true)
}
