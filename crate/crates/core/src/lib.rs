//! Procedural volumetric cloud renderer.
//!
//! The pipeline runs in five stages:
//!
//! * [`noise`] bakes tileable Perlin, Worley and composite noise into
//!   [`volume::VolumeTexture`]s, which [`volume`] can pack into 2D atlases.
//! * [`field`] turns two textures plus [`field::CloudParams`] into an
//!   extinction field inside a cloud layer.
//! * [`optics`] holds the phase functions and attenuation terms.
//! * [`march`] integrates single scattering along camera rays.
//! * [`scene`] loads JSON scene files and presets and drives a full render;
//!   [`bench`] and [`corpus`] build on it.

pub mod bench;
pub mod corpus;
pub mod error;
pub mod field;
pub mod march;
pub mod noise;
pub mod optics;
pub mod png_io;
pub mod scene;
pub mod textures;
pub mod volume;

pub use error::{Error, Result};
pub use field::{CloudField, CloudLayer, CloudParams, CoverageMethod};
pub use march::{HdrImage, MarchParams, MarchStats};
pub use optics::PhaseModel;
pub use scene::{load_config, load_config_bytes, preset, ConfigError, SceneConfig};
