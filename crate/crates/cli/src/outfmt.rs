//! CSV output helpers.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use fibersample::Result;

/// Full-precision float field: 17 significant digits round-trip f64 exactly.
pub fn float_field(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    let file = File::create(dir.join(name))?;
    Ok(BufWriter::new(file))
}
