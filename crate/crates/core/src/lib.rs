//! Referring video object segmentation driven by multimodal language models.
//!
//! Given a video and a natural-language query, the engine picks informative
//! frames, composes them into a single focus canvas, asks a language model
//! which objects the query refers to, grounds them on a keyframe, checks its
//! own work with question/answer reflection, and finally propagates the
//! grounded boxes into per-frame masks.

pub mod agents;
pub mod batch;
pub mod backend;
pub mod config;
mod context;
pub mod draw;
pub mod error;
pub mod focus_layout;
pub mod frame_selection;
pub mod geometry;
pub mod metrics;
pub mod mock_fixtures;
pub mod orchestrator;
pub mod prompts;
pub mod reflection;
pub mod video_io;

pub use context::StageContext;
pub use error::{Error, Result};
