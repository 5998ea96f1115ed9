//! Pipeline configuration: defaults, `key = value` config files, and
//! command-line overrides.

use std::fs;
use std::path::Path;

use crate::background::BackgroundPriorParams;
use crate::consensus::MaceOptions;
use crate::error::{Error, Result};
use crate::tv::TvWeights;

/// Every tunable of the extraction pipeline, with the stock defaults.
///
/// `beta_t` only takes effect in temporal mode; spatial runs smooth each
/// frame with `(beta_x, beta_y, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Matting fidelity weight.
    pub lambda1: f64,
    /// Background fidelity weight.
    pub lambda2: f64,
    /// Smoothing fidelity weight.
    pub lambda3: f64,
    /// Strength of the push away from indecisive matte values.
    pub gamma: f64,
    /// Gradient-activity threshold of the edge prior.
    pub tau_a: f64,
    /// Gradient-disagreement threshold of the edge prior.
    pub tau_theta: f64,
    /// Scale of the color-distance saturation.
    pub sigma_delta: f64,
    /// Confidence sigmoid slope.
    pub kappa: f64,
    /// Confidence sigmoid threshold.
    pub theta: f64,
    /// Bilateral spatial bandwidth.
    pub hs: f64,
    /// Bilateral range bandwidth.
    pub hr: f64,
    /// Horizontal gradient weight of the smoothing seminorm.
    pub beta_x: f64,
    /// Vertical gradient weight of the smoothing seminorm.
    pub beta_y: f64,
    /// Temporal gradient weight of the smoothing seminorm (temporal mode).
    pub beta_t: f64,
    /// Plate-layer weight in the window color model.
    pub eta: f64,
    /// Diagonal ridge of the window color model.
    pub eps: f64,
    /// Consensus stopping tolerance.
    pub tol: f64,
    /// Consensus iteration cap.
    pub max_iter: usize,
    /// Mann averaging weight in (0, 1].
    pub mann_weight: f64,
    /// Color tolerance of the superpixel flood fill.
    pub flood_tol: f64,
    /// Frames per sliding temporal volume.
    pub temporal_window: usize,
    /// Pixel tolerance of the boundary F-measure.
    pub contour_tol: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.01,
            lambda2: 2.0,
            lambda3: 4.0,
            gamma: 0.05,
            tau_a: 0.01,
            tau_theta: 0.02,
            sigma_delta: 10.0,
            kappa: 30.0,
            theta: 0.8,
            hs: 5.0,
            hr: 5.0,
            beta_x: 1.0,
            beta_y: 1.0,
            beta_t: 0.25,
            eta: 1.0,
            eps: 1e-7,
            tol: 1e-4,
            max_iter: 30,
            mann_weight: 1.0,
            flood_tol: 0.05,
            temporal_window: 5,
            contour_tol: 2,
        }
    }
}

fn parse_f64(key: &'static str, value: &str, line: usize) -> Result<f64> {
    value.parse().map_err(|_| Error::ConfigParse {
        line,
        message: format!("{key} expects a number, got {value:?}"),
    })
}

fn parse_usize(key: &'static str, value: &str, line: usize) -> Result<usize> {
    value.parse().map_err(|_| Error::ConfigParse {
        line,
        message: format!("{key} expects a nonnegative integer, got {value:?}"),
    })
}

impl PipelineConfig {
    /// Applies one `key = value` assignment. `line` feeds error messages.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "lambda1" => self.lambda1 = parse_f64("lambda1", value, line)?,
            "lambda2" => self.lambda2 = parse_f64("lambda2", value, line)?,
            "lambda3" => self.lambda3 = parse_f64("lambda3", value, line)?,
            "gamma" => self.gamma = parse_f64("gamma", value, line)?,
            "tau_a" => self.tau_a = parse_f64("tau_a", value, line)?,
            "tau_theta" => self.tau_theta = parse_f64("tau_theta", value, line)?,
            "sigma_delta" => self.sigma_delta = parse_f64("sigma_delta", value, line)?,
            "kappa" => self.kappa = parse_f64("kappa", value, line)?,
            "theta" => self.theta = parse_f64("theta", value, line)?,
            "hs" => self.hs = parse_f64("hs", value, line)?,
            "hr" => self.hr = parse_f64("hr", value, line)?,
            "beta_x" => self.beta_x = parse_f64("beta_x", value, line)?,
            "beta_y" => self.beta_y = parse_f64("beta_y", value, line)?,
            "beta_t" => self.beta_t = parse_f64("beta_t", value, line)?,
            "eta" => self.eta = parse_f64("eta", value, line)?,
            "eps" => self.eps = parse_f64("eps", value, line)?,
            "tol" => self.tol = parse_f64("tol", value, line)?,
            "max_iter" => self.max_iter = parse_usize("max_iter", value, line)?,
            "mann_weight" => self.mann_weight = parse_f64("mann_weight", value, line)?,
            "flood_tol" => self.flood_tol = parse_f64("flood_tol", value, line)?,
            "temporal_window" => self.temporal_window = parse_usize("temporal_window", value, line)?,
            "contour_tol" => self.contour_tol = parse_usize("contour_tol", value, line)?,
            _ => {
                return Err(Error::UnknownConfigKey {
                    key: key.to_string(),
                    line,
                })
            }
        }
        Ok(())
    }

    /// Parses a line-oriented `key = value` file; `#` starts a comment.
    /// The result is validated.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies every assignment in `text` without validating.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigParse {
                line,
                message: format!("expected key = value, got {content:?}"),
            })?;
            self.set(key.trim(), value.trim(), line)?;
        }
        Ok(())
    }

    /// Applies `key=value` override strings (command-line `--set`).
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for (idx, section) in overrides.iter().enumerate() {
            let line = idx + 1;
            let content = section.as_ref();
            let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigParse {
                line,
                message: format!("expected key=value, got {content:?}"),
            })?;
            self.set(key.trim(), value.trim(), line)?;
        }
        Ok(())
    }

    /// Enforces every range constraint the modules assume.
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 9] = [
            ("lambda1", self.lambda1),
            ("lambda3", self.lambda3),
            ("sigma_delta", self.sigma_delta),
            ("kappa", self.kappa),
            ("hs", self.hs),
            ("hr", self.hr),
            ("eta", self.eta),
            ("eps", self.eps),
            ("tol", self.tol),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    constraint: "must be positive and finite",
                });
            }
        }
        let nonnegative: [(&'static str, f64); 6] = [
            ("lambda2", self.lambda2),
            ("tau_a", self.tau_a),
            ("tau_theta", self.tau_theta),
            ("beta_x", self.beta_x),
            ("beta_y", self.beta_y),
            ("beta_t", self.beta_t),
        ];
        for (name, value) in nonnegative {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    constraint: "must be nonnegative and finite",
                });
            }
        }
        if !(self.flood_tol >= 0.0) || !self.flood_tol.is_finite() {
            return Err(Error::InvalidParameter {
                name: "flood_tol",
                value: self.flood_tol,
                constraint: "must be nonnegative and finite",
            });
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: self.theta,
                constraint: "must be finite",
            });
        }
        if !(self.gamma >= 0.0) || !(self.gamma < 1.0 + self.lambda2) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: self.gamma,
                constraint: "must lie in [0, 1 + lambda2)",
            });
        }
        if !(self.mann_weight > 0.0 && self.mann_weight <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "mann_weight",
                value: self.mann_weight,
                constraint: "must lie in (0, 1]",
            });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iter",
                value: 0.0,
                constraint: "must be at least 1",
            });
        }
        if self.temporal_window == 0 {
            return Err(Error::InvalidParameter {
                name: "temporal_window",
                value: 0.0,
                constraint: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Smoothing weights for independent frames.
    pub fn spatial_weights(&self) -> TvWeights {
        TvWeights {
            beta_x: self.beta_x,
            beta_y: self.beta_y,
            beta_t: 0.0,
        }
    }

    /// Smoothing weights for a temporal volume.
    pub fn temporal_weights(&self) -> TvWeights {
        TvWeights {
            beta_x: self.beta_x,
            beta_y: self.beta_y,
            beta_t: self.beta_t,
        }
    }

    /// Parameters of the plate-disagreement prior.
    pub fn prior_params(&self) -> BackgroundPriorParams {
        BackgroundPriorParams {
            hs: self.hs,
            hr: self.hr,
            sigma_delta: self.sigma_delta,
            flood_tol: self.flood_tol,
            tau_a: self.tau_a,
            tau_theta: self.tau_theta,
        }
    }

    /// Consensus iteration controls.
    pub fn mace_options(&self) -> MaceOptions {
        MaceOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            mann_weight: self.mann_weight,
        }
    }
}
