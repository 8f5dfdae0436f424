//! Option structs shared by the flags and the config file.
//!
//! A config file is a TOML table whose keys are the long flag names of one
//! subcommand. Flags given on the command line win over the file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub trait Merge: Sized {
    /// Fills every unset field of `self` from `file`.
    fn merge(self, file: Self) -> Self;
}

macro_rules! options {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident: $ty:ty,)* }) => {
        $(#[$meta])*
        #[derive(Args, Clone, Debug, Default, Deserialize, Serialize)]
        #[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
        pub struct $name {
            $($(#[$fmeta])* pub $field: Option<$ty>,)*
        }

        impl Merge for $name {
            fn merge(self, file: Self) -> Self {
                $name { $($field: self.$field.or(file.$field),)* }
            }
        }
    };
}

options! {
    CodegenOptions {
        /// Code profile, e.g. D644.
        #[arg(long)]
        profile: String,
        /// Output file; standard output if absent.
        #[arg(long)]
        out: PathBuf,
    }
}

options! {
    EncodeOptions {
        #[arg(long)]
        profile: String,
        /// original or proposed.
        #[arg(long)]
        variant: String,
        /// Directory receiving `<profile>_<variant>.circuit` and `.census.json`.
        #[arg(long)]
        out_dir: PathBuf,
    }
}

options! {
    MemoryOptions {
        /// Comma-separated profiles.
        #[arg(long, value_delimiter = ',')]
        profiles: Vec<String>,
        /// bitflip or depolarizing.
        #[arg(long)]
        noise: String,
        /// Comma-separated physical error rates.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        /// CSV output; standard output if absent.
        #[arg(long)]
        out: PathBuf,
        /// JSON run manifest; defaults to `<out>.manifest.json` when `out` is set.
        #[arg(long)]
        manifest: PathBuf,
    }
}

options! {
    CnotOptions {
        /// Comma-separated level-3 profiles.
        #[arg(long, value_delimiter = ',')]
        profiles: Vec<String>,
        /// Comma-separated encoder variants.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
        /// Only `circuit` is meaningful here.
        #[arg(long)]
        noise: String,
        /// Comma-separated circuit error rates.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        /// Retry cap per preparation unit.
        #[arg(long)]
        cap: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    }
}

options! {
    OverheadOptions {
        /// Comma-separated profiles of levels 1 to 3; all of levels 2 and 3 if absent.
        #[arg(long, value_delimiter = ',')]
        profiles: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
        /// Only `circuit` is meaningful here.
        #[arg(long)]
        noise: String,
        /// Circuit error rates for retry-aware costs; census only if absent.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        cap: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    }
}

options! {
    FitOptions {
        /// CSV written by simulate-memory or simulate-cnot.
        #[arg(long)]
        input: PathBuf,
        /// Column to fit: p_hat, p_block or p_cnot.
        #[arg(long)]
        rate: String,
        #[arg(long)]
        min_failures: u64,
        /// Noise rates at which to evaluate the fitted curve.
        #[arg(long, value_delimiter = ',')]
        extrapolate: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    }
}

options! {
    DecodeOptions {
        #[arg(long)]
        profile: String,
        /// One readout per line as a 0/1 string.
        #[arg(long)]
        input: PathBuf,
        /// z or x.
        #[arg(long)]
        basis: String,
        /// Use the exact nearest-codeword decoder (small codes only).
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        oracle: bool,
        #[arg(long)]
        out: PathBuf,
    }
}

/// Reads a config file into the options of one subcommand.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: MemoryOptions = toml::from_str("profiles = [\"D44\", \"D64\"]\nshots = 10\nseed = 3\n").unwrap();
        let cli = MemoryOptions { shots: Some(99), ..Default::default() };
        let m = cli.merge(file);
        assert_eq!(m.shots, Some(99));
        assert_eq!(m.seed, Some(3));
        assert_eq!(m.profiles.unwrap(), vec!["D44", "D64"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<MemoryOptions>("shot = 10").is_err());
    }

    #[test]
    fn kebab_case_keys() {
        let f: FitOptions = toml::from_str("min-failures = 5\nrate = \"p_block\"").unwrap();
        assert_eq!(f.min_failures, Some(5));
    }
}
