#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use swmparc::nn::{DenseLayer, Matrix};
use swmparc::{ArchDescriptor, ModelBundle, Point3, Streamline};

pub const SCHEMAS: [&str; 4] = ["manifest", "train_report", "metrics_report", "parcellation_summary"];

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn load(name: &str) -> Value {
    let path = schema_dir().join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

/// Validate `instance` against the named schema shipped in docs/schemas.
pub fn validate(name: &str, instance: &Value) -> Result<(), String> {
    let mut registry = jsonschema::Registry::new();
    for s in SCHEMAS {
        let schema = load(s);
        let id = schema["$id"].as_str().unwrap().to_string();
        registry = registry.add(id, schema).map_err(|e| e.to_string())?;
    }
    let registry = registry.prepare().map_err(|e| e.to_string())?;
    let validator = jsonschema::options()
        .with_registry(&registry)
        .build(&load(name))
        .map_err(|e| e.to_string())?;
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors.join("; "))
    }
}

pub fn validate_file(name: &str, path: &Path) -> Result<(), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    validate(name, &value)
}

pub fn swmparc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swmparc"))
        .args(args)
        .env("SUPWMA_LOG", "error")
        .output()
        .expect("binary runs")
}

/// A hand-wired model on `n = 2` points: g is the per-axis maximum of the
/// positive coordinates and the predicted class is the dominant axis.
pub fn axis_model() -> ModelBundle {
    let arch = ArchDescriptor {
        n: 2,
        encoder_dims: vec![3],
        classifier_hidden: vec![],
        projector_dims: vec![2],
        k: 3,
        with_tnets: false,
    };
    let mut model = ModelBundle::init(arch, 0).unwrap();
    model.encoder[0] = DenseLayer::new(Matrix::identity(3), vec![0.0; 3]).unwrap();
    model.classifier[0] = DenseLayer::new(Matrix::identity(3), vec![0.0; 3]).unwrap();
    model
}

/// A short segment along the given axis, 10 to 11 mm from the origin.
pub fn axis_streamline(axis: usize) -> Streamline {
    let mut a = [0.0; 3];
    let mut b = [0.0; 3];
    a[axis] = 10.0;
    b[axis] = 11.0;
    Streamline::new(vec![Point3::from(a), Point3::from(b)]).unwrap()
}
