//! URDF package export and structural import.

mod export;
mod import;
pub mod obj;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use export::{export_urdf, render_package, ExportOptions, Package};
pub use import::{import_urdf_summary, parse_urdf_summary, JointSummary, LimitSummary, LinkSummary, UrdfSummary, VisualSummary};

#[derive(Debug, Error)]
pub enum UrdfError {
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid object: {0}")]
    InvalidObject(String),
    #[error("URDF parse error: {0}")]
    Parse(String),
    #[error("mesh file '{0}' is missing")]
    MissingMeshFile(String),
    #[error("joint '{joint}' references unknown link '{link}'")]
    DanglingLinkReference { joint: String, link: String },
}

impl UrdfError {
    pub fn code(&self) -> &'static str {
        match self {
            UrdfError::Io { .. } => "io_error",
            UrdfError::InvalidObject(_) => "invalid_object",
            UrdfError::Parse(_) => "parse_error",
            UrdfError::MissingMeshFile(_) => "missing_mesh_file",
            UrdfError::DanglingLinkReference { .. } => "dangling_link_reference",
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        UrdfError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshFile {
    /// Relative to the package directory.
    pub path: String,
    pub sha256: String,
    pub triangles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub urdf: String,
    pub urdf_sha256: String,
    pub meshes: Vec<MeshFile>,
    pub links: usize,
    pub joints: usize,
    pub options: ExportOptions,
}

pub const MANIFEST_FILE: &str = "manifest.json";
