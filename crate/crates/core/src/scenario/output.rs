use crate::error::Result;
use crate::field::{io, RealMap};
use crate::fringe::{stack_io, CameraFrame};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Sink for scenario artifacts. With no directory nothing is written, but
/// the file names are still recorded so reports stay identical.
#[derive(Debug, Default)]
pub struct Outputs {
    dir: Option<PathBuf>,
    save_maps: bool,
    pub files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: Option<&Path>, save_maps: bool) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Outputs {
            dir: dir.map(Path::to_path_buf),
            save_maps,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// CSV with a header row; every row must match the header length.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let file = format!("{name}.csv");
        if let Some(d) = &self.dir {
            let mut w = csv::Writer::from_path(d.join(&file))?;
            w.write_record(header)?;
            for r in rows {
                w.write_record(r.iter().map(|v| v.to_string()))?;
            }
            w.flush()?;
        }
        self.files.push(file);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let file = format!("{name}.json");
        if let Some(d) = &self.dir {
            fs::write(d.join(&file), serde_json::to_string_pretty(value)?)?;
        }
        self.files.push(file);
        Ok(())
    }

    pub fn map(&mut self, name: &str, map: &RealMap, units: &str) -> Result<()> {
        if !self.save_maps {
            return Ok(());
        }
        if let Some(d) = &self.dir {
            io::write_real_map(&d.join(name), map, units)?;
        }
        self.files.push(format!("{name}.f32"));
        self.files.push(format!("{name}.json"));
        Ok(())
    }

    pub fn frames(&mut self, name: &str, manifest: &stack_io::StackManifest, frames: &[CameraFrame]) -> Result<()> {
        if let Some(d) = &self.dir {
            stack_io::write_stack(&d.join(name), manifest, frames)?;
        }
        self.files.push(format!("{name}/"));
        Ok(())
    }
}
