//! Config file loading and flag > file > default resolution.

use std::fs;
use std::path::Path;

use rocket_lab::{DilationPolicy, Error, PaddingPolicy, Result, TransformConfig, WeightLaw};
use serde::{Deserialize, Serialize};

/// Every key is optional; unset keys fall through to built-in defaults.
/// A run manifest is also accepted, in which case its `config` is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_lengths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_law: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardize: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

pub fn load(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let inner = match value.get("subcommand").and(value.get("config")) {
        Some(cfg) => cfg.clone(),
        None => value,
    };
    serde_json::from_value(inner).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn parse_padding(s: &str) -> Result<PaddingPolicy> {
    match s {
        "zero" | "always_zero" => Ok(PaddingPolicy::AlwaysZero),
        "random" | "random_zero_or_none" => Ok(PaddingPolicy::RandomZeroOrNone),
        "circular" => Ok(PaddingPolicy::Circular),
        other => Err(Error::Config(format!(
            "unknown padding '{other}' (expected zero, random or circular)"
        ))),
    }
}

pub fn padding_name(p: PaddingPolicy) -> &'static str {
    match p {
        PaddingPolicy::AlwaysZero => "zero",
        PaddingPolicy::RandomZeroOrNone => "random",
        PaddingPolicy::Circular => "circular",
    }
}

pub fn parse_dilation(s: &str) -> Result<DilationPolicy> {
    if s == "exp" || s == "exponential" {
        return Ok(DilationPolicy::ExponentialRandom);
    }
    match s.parse::<usize>() {
        Ok(d) if d >= 1 => Ok(DilationPolicy::Fixed(d)),
        _ => Err(Error::Config(format!(
            "unknown dilation '{s}' (expected exp or a positive integer)"
        ))),
    }
}

pub fn dilation_name(d: DilationPolicy) -> String {
    match d {
        DilationPolicy::ExponentialRandom => "exp".into(),
        DilationPolicy::Fixed(d) => d.to_string(),
    }
}

pub fn parse_weight_law(s: &str) -> Result<WeightLaw> {
    match s {
        "scaled" | "scaled_normal" => Ok(WeightLaw::ScaledNormal),
        "centered" | "centered_unit" => Ok(WeightLaw::CenteredUnit),
        other => Err(Error::Config(format!(
            "unknown weight law '{other}' (expected scaled or centered)"
        ))),
    }
}

pub fn weight_law_name(w: WeightLaw) -> &'static str {
    match w {
        WeightLaw::ScaledNormal => "scaled",
        WeightLaw::CenteredUnit => "centered",
    }
}

/// Transform flags as given on the command line, before resolution.
#[derive(Debug, Clone, Default)]
pub struct TransformFlags {
    pub kernels: Option<usize>,
    pub kernel_lengths: Option<Vec<usize>>,
    pub padding: Option<String>,
    pub dilation: Option<String>,
    pub weight_law: Option<String>,
    pub no_standardize: bool,
}

/// Settings shared by every subcommand after resolution.
pub struct Resolver {
    pub file: FileConfig,
    pub seed_flag: Option<u64>,
}

impl Resolver {
    pub fn seed(&self) -> u64 {
        self.seed_flag.or(self.file.seed).unwrap_or(0)
    }

    pub fn trials(&self, flag: Option<usize>, default: usize) -> usize {
        flag.or(self.file.trials).unwrap_or(default)
    }

    pub fn transform(&self, f: &TransformFlags) -> Result<TransformConfig> {
        let d = TransformConfig::default();
        let cfg = TransformConfig {
            num_kernels: f.kernels.or(self.file.kernels).unwrap_or(d.num_kernels),
            kernel_lengths: f
                .kernel_lengths
                .clone()
                .or_else(|| self.file.kernel_lengths.clone())
                .unwrap_or(d.kernel_lengths),
            seed: self.seed(),
            dilation_policy: match f.dilation.as_ref().or(self.file.dilation.as_ref()) {
                Some(s) => parse_dilation(s)?,
                None => d.dilation_policy,
            },
            padding_policy: match f.padding.as_ref().or(self.file.padding.as_ref()) {
                Some(s) => parse_padding(s)?,
                None => d.padding_policy,
            },
            weight_law: match f.weight_law.as_ref().or(self.file.weight_law.as_ref()) {
                Some(s) => parse_weight_law(s)?,
                None => d.weight_law,
            },
            standardize_inputs: if f.no_standardize {
                false
            } else {
                self.file.standardize.unwrap_or(d.standardize_inputs)
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The resolved transform settings in config-file form, for manifests.
    pub fn transform_record(&self, cfg: &TransformConfig) -> FileConfig {
        FileConfig {
            seed: Some(cfg.seed),
            threads: self.file.threads,
            kernels: Some(cfg.num_kernels),
            kernel_lengths: Some(cfg.kernel_lengths.clone()),
            padding: Some(padding_name(cfg.padding_policy).into()),
            dilation: Some(dilation_name(cfg.dilation_policy)),
            weight_law: Some(weight_law_name(cfg.weight_law).into()),
            standardize: Some(cfg.standardize_inputs),
            ..FileConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolver(file: FileConfig, seed: Option<u64>) -> Resolver {
        Resolver { file, seed_flag: seed }
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = FileConfig {
            seed: Some(5),
            kernels: Some(300),
            padding: Some("circular".into()),
            ..FileConfig::default()
        };
        let r = resolver(file.clone(), None);
        let cfg = r.transform(&TransformFlags::default()).unwrap();
        assert_eq!((cfg.seed, cfg.num_kernels, cfg.padding_policy), (5, 300, PaddingPolicy::Circular));
        assert_eq!(cfg.kernel_lengths, vec![7, 9, 11]);

        let r = resolver(file, Some(9));
        let flags = TransformFlags {
            kernels: Some(12),
            no_standardize: true,
            ..TransformFlags::default()
        };
        let cfg = r.transform(&flags).unwrap();
        assert_eq!((cfg.seed, cfg.num_kernels, cfg.standardize_inputs), (9, 12, false));
    }

    #[test]
    fn record_round_trips_through_resolution() {
        let r = resolver(FileConfig::default(), Some(3));
        let flags = TransformFlags {
            dilation: Some("2".into()),
            weight_law: Some("centered".into()),
            padding: Some("random".into()),
            ..TransformFlags::default()
        };
        let cfg = r.transform(&flags).unwrap();
        let again = resolver(r.transform_record(&cfg), None)
            .transform(&TransformFlags::default())
            .unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert!(parse_padding("reflect").is_err());
        assert!(parse_dilation("0").is_err());
        assert!(parse_weight_law("uniform").is_err());
        let r = resolver(FileConfig::default(), None);
        let zero = TransformFlags {
            kernels: Some(0),
            ..TransformFlags::default()
        };
        assert!(r.transform(&zero).unwrap_err().is_usage());
    }
}
