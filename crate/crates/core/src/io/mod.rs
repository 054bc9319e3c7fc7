//! Documents, files and synthetic instances.

mod generate;
mod instance_doc;
mod schedule_doc;

use std::io::Write;
use std::path::Path;

pub use generate::{generate_instance, generate_spec, GeneratorParams, Preset, Range};
pub use instance_doc::{
    parse_instance, serialize_instance, CleaningDoc, CleaningEntryDoc, InstanceDocument, JobDoc, MachineDoc,
    ParsedInstance, ScaleDoc, Strictness, TaskDoc, FORMAT_VERSION,
};
pub use schedule_doc::{ScheduleDocument, TaskEntry};

use crate::error::{Error, Result};

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}
