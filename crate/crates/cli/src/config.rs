//! Flat TOML run configuration. Keys mirror the long command-line flags
//! with `-` replaced by `_`; flags given on the command line win.

use std::path::{Path, PathBuf};

use lis_core::fields::Extent;
use lis_core::gram::GramMode;
use lis_core::quadrature::QuadratureConfig;
use lis_core::{Error, Result};
use serde::Deserialize;

use crate::args::QuadArgs;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub bits: Option<bool>,

    pub lambda: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub z: Option<f64>,
    pub dx_max: Option<f64>,
    pub points: Option<usize>,

    pub delta_x: Option<f64>,
    pub theta: Option<f64>,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub nu: Option<f64>,
    pub n0: Option<f64>,
    pub pbar: Option<f64>,
    pub power: Option<f64>,

    pub pbar_over_n0: Option<Vec<f64>>,
    pub snr_min: Option<f64>,
    pub snr_max: Option<f64>,

    pub terminals: Option<PathBuf>,
    pub line_k: Option<usize>,
    pub spacing: Option<f64>,
    pub mode: Option<GramMode>,
    pub rank_threshold: Option<f64>,

    pub geometry: Option<String>,
    pub length: Option<f64>,
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub depth: Option<f64>,
    pub density: Option<f64>,
    pub densities: Option<Vec<f64>>,
    pub surface_a: Option<Extent>,
    pub surface_b: Option<Extent>,
    pub z0: Option<f64>,
    pub receiver: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,

    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_panel_fraction_of_lambda: Option<f64>,
    pub line_truncation_tol: Option<f64>,
    pub max_panels: Option<usize>,
    pub max_shared_nodes: Option<usize>,
    pub effective_infinity_factor: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            std::io::Error::new(e.kind(), format!("config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))
    }

    pub fn quadrature(&self, flags: &QuadArgs) -> Result<QuadratureConfig> {
        let d = QuadratureConfig::default();
        let cfg = QuadratureConfig {
            rel_tol: flags.rel_tol.or(self.rel_tol).unwrap_or(d.rel_tol),
            abs_tol: flags.abs_tol.or(self.abs_tol).unwrap_or(d.abs_tol),
            max_panel_fraction_of_lambda: flags
                .max_panel_fraction_of_lambda
                .or(self.max_panel_fraction_of_lambda)
                .unwrap_or(d.max_panel_fraction_of_lambda),
            line_truncation_tol: flags
                .line_truncation_tol
                .or(self.line_truncation_tol)
                .unwrap_or(d.line_truncation_tol),
            max_panels: flags.max_panels.or(self.max_panels).unwrap_or(d.max_panels),
            effective_infinity_factor: flags
                .effective_infinity_factor
                .or(self.effective_infinity_factor)
                .unwrap_or(d.effective_infinity_factor),
            max_shared_nodes: flags
                .max_shared_nodes
                .or(self.max_shared_nodes)
                .unwrap_or(d.max_shared_nodes),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// First of flag, file value, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// First of flag and file value, or an invalid-input error naming the key.
pub fn require<T>(flag: Option<T>, file: Option<T>, key: &str) -> Result<T> {
    flag.or(file)
        .ok_or_else(|| Error::InvalidInput(format!("missing required parameter '{key}'")))
}
