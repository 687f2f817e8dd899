//! The virtual workspace: one writable program file and a read-only docs tree.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::sha256_hex;
use crate::urdf::{export_urdf, ExportOptions, MANIFEST_FILE};
use crate::validation::{compile_source, CompileOutcome, Severity, ValidationOptions};

use super::examples::ExampleIndex;
use super::HarnessError;

pub const MODEL_PATH: &str = "model.apl";
pub const EMPTY_PROGRAM: &str = "build {\n}\n";

pub const DOCS: [(&str, &str); 6] = [
    ("docs/references/quickstart.md", include_str!("../../assets/docs/quickstart.md")),
    ("docs/references/language.md", include_str!("../../assets/docs/language.md")),
    ("docs/references/geometry.md", include_str!("../../assets/docs/geometry.md")),
    ("docs/references/errors.md", include_str!("../../assets/docs/errors.md")),
    ("docs/references/probe-tooling.md", include_str!("../../assets/docs/probe-tooling.md")),
    ("docs/references/testing.md", include_str!("../../assets/docs/testing.md")),
];

/// A compile result keyed by the program hash it came from.
pub struct CompiledAsset {
    pub program_sha256: String,
    pub outcome: CompileOutcome,
    pub export_dir: Option<PathBuf>,
}

impl CompiledAsset {
    pub fn failures(&self) -> usize {
        self.outcome.report.count(Severity::Failure)
    }

    /// Whether the build produced an object that probes can inspect.
    pub fn probeable(&self) -> bool {
        let o = &self.outcome;
        o.object.is_some() && o.tree.is_some() && o.meshes.is_some()
    }
}

pub struct Workspace {
    model: String,
    docs: BTreeMap<String, String>,
    compiled: Option<Arc<CompiledAsset>>,
    cache: HashMap<String, Arc<CompiledAsset>>,
    model_writes: usize,
    pub examples: ExampleIndex,
    pub options: ValidationOptions,
    pub out_dir: Option<PathBuf>,
}

impl Workspace {
    pub fn new(initial_program: Option<&str>) -> Self {
        Self {
            model: initial_program.unwrap_or(EMPTY_PROGRAM).to_string(),
            docs: DOCS.iter().map(|(p, t)| (p.to_string(), t.to_string())).collect(),
            compiled: None,
            cache: HashMap::new(),
            model_writes: 0,
            examples: ExampleIndex::builtin(),
            options: ValidationOptions::default(),
            out_dir: None,
        }
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn model_sha256(&self) -> String {
        sha256_hex(self.model.as_bytes())
    }

    /// Successful mutations of the model file so far.
    pub fn model_writes(&self) -> usize {
        self.model_writes
    }

    pub fn doc_paths(&self) -> impl Iterator<Item = &str> {
        self.docs.keys().map(String::as_str)
    }

    pub fn doc(&self, path: &str) -> Option<&str> {
        self.docs.get(path).map(String::as_str)
    }

    pub fn read(&self, path: &str) -> Result<&str, HarnessError> {
        let path = path.trim_start_matches("./");
        if path == MODEL_PATH {
            return Ok(&self.model);
        }
        self.doc(path).ok_or_else(|| {
            HarnessError::new(
                "unknown_path",
                format!("'{path}' does not exist; readable paths are {MODEL_PATH} and docs/references/*.md"),
            )
        })
    }

    pub(crate) fn check_writable(path: &str) -> Result<(), HarnessError> {
        match path.trim_start_matches("./") {
            MODEL_PATH => Ok(()),
            p if p.starts_with("docs/") => Err(HarnessError::new(
                "unknown_path",
                format!("'{p}' is read-only; only {MODEL_PATH} can be edited"),
            )),
            p => Err(HarnessError::new(
                "unknown_path",
                format!("'{p}' is not writable; only {MODEL_PATH} can be edited"),
            )),
        }
    }

    pub(crate) fn set_model(&mut self, text: String) {
        self.model = text;
        self.model_writes += 1;
    }

    pub fn compiled(&self) -> Option<&Arc<CompiledAsset>> {
        self.compiled.as_ref()
    }

    /// Compiles the current program, reusing a cached result for an
    /// identical program. Zero failures export the URDF package when an
    /// output directory is configured.
    pub(crate) fn compile(&mut self) -> Arc<CompiledAsset> {
        let sha = self.model_sha256();
        let asset = match self.cache.get(&sha) {
            Some(a) => a.clone(),
            None => {
                let mut outcome = compile_source(&self.model, &self.options);
                let mut export_dir = None;
                let clean = outcome.report.count(Severity::Failure) == 0;
                if let (true, Some(obj), Some(out)) = (clean, &outcome.object, &self.out_dir) {
                    let dir = out.join("urdf");
                    match export_urdf(obj, &dir, &ExportOptions::default()) {
                        Ok(_) => {
                            outcome.report.manifest = Some(dir.join(MANIFEST_FILE).display().to_string());
                            export_dir = Some(dir);
                        }
                        Err(e) => outcome.report.findings.push(crate::validation::Finding::failure(
                            "export_error",
                            e.to_string(),
                            serde_json::json!({"error": e.code()}),
                        )),
                    }
                }
                let a = Arc::new(CompiledAsset {
                    program_sha256: sha.clone(),
                    outcome,
                    export_dir,
                });
                self.cache.insert(sha, a.clone());
                a
            }
        };
        self.compiled = asset.probeable().then(|| asset.clone());
        asset
    }

    pub fn export_dir(&self) -> Option<&Path> {
        self.compiled.as_ref().and_then(|a| a.export_dir.as_deref())
    }
}
