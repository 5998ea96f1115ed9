//! Foreground alpha mattes from video frames, given an imperfect still of
//! the empty scene (the background plate).
//!
//! A real plate is never quite right: exposure drifts, the camera
//! vibrates, sensor noise differs between takes, and the foreground may
//! share colors with what it hides. No single cue survives all of that,
//! so extraction here is a negotiation between three specialist agents,
//! each the proximal map of its own objective:
//!
//! - [`matting`]: a window color model spanning both the frame and the
//!   plate ties the matte to local color structure, with a confidence
//!   gate that only anchors pixels the current estimate is sure about;
//! - [`background`]: a bilateral plate-disagreement detector supplies a
//!   rough matte and pushes pixels away from indecisive values;
//! - [`tv`]: total-variation smoothing over space, and over time when
//!   frames are solved jointly.
//!
//! The [`consensus`] engine iterates averaged reflections of the agents
//! until they agree; the multi-agent consensus equilibrium (the stack
//! average at the fixed point) is the matte. Because every agent is firmly
//! nonexpansive, the iteration is stable, and [`consensus::verify_equilibrium`]
//! can re-check any reported solution after the fact.
//!
//! [`pipeline`] wires the agents to real frames, [`synth`] generates
//! scenes with exact ground truth, [`metrics`] scores mattes, and
//! [`io`]/[`config`] handle rasters and `key = value` configuration. The
//! `platemat` binary exposes all of it as `extract`, `batch`, `eval`, and
//! `synth` subcommands.
//!
//! ```
//! use platemat::config::PipelineConfig;
//! use platemat::pipeline::extract_frame;
//! use platemat::synth::{synth_generate, SceneSpec};
//!
//! // A red square over a textured plate, composited with known truth.
//! let spec = SceneSpec {
//!     width: 24,
//!     height: 24,
//!     center: (12.0, 12.0),
//!     size: 10.0,
//!     fg_color: Some([0.85, 0.2, 0.2]),
//!     ..SceneSpec::default()
//! };
//! let scene = synth_generate(&spec, 1)?;
//!
//! // Bandwidths and color scale sized for unit-range colors.
//! let cfg = PipelineConfig {
//!     sigma_delta: 0.08,
//!     hr: 0.2,
//!     hs: 2.0,
//!     lambda1: 1.0,
//!     max_iter: 10,
//!     ..PipelineConfig::default()
//! };
//! let (matte, report) = extract_frame(&scene.frames[0], &scene.plate, &cfg)?;
//! assert_eq!(matte.dims(), (24, 24));
//! assert!(matte.get(12, 12) > 0.5);
//! assert!(matte.get(2, 2) < 0.5);
//! assert!(report.iterations_used >= 1);
//! # Ok::<(), platemat::Error>(())
//! ```
//!
//! Each major capability has a runnable walkthrough under `examples/`:
//! `consensus_toy` (the engine on two scalar agents), `agent_properties`
//! (the firm-nonexpansiveness audit), `background_prior`, `dual_laplacian`,
//! `tv_denoise`, `extract_synthetic`, `temporal_sequence`, and
//! `evaluate_metrics`.

pub mod background;
pub mod config;
pub mod consensus;
pub mod error;
pub mod io;
pub mod matting;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod sparse;
pub mod synth;
pub mod tv;

pub use error::{Error, Result};
