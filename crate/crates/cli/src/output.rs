//! Output directory with atomic writes and a digest manifest.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use syzygy_core::events::Event;
use syzygy_core::integrator::Trajectory;
use syzygy_core::state::{angular_momentum, mass_weighted_frame, total_energy};

use crate::scenario::SCHEMA_VERSION;
use crate::CliError;

pub const EVENT_HEADER: &str = "t,kind,middle_body,delta1,delta2,H,I,grazing";
pub const TRAJECTORY_HEADER: &str = "t,x0,y0,x1,y1,x2,y2,vx0,vy0,vx1,vy1,vx2,vy2,H,I,delta1,delta2";
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub files: Vec<ManifestEntry>,
}

/// Files are written in full to a temporary sibling and renamed into place,
/// so a reader never sees a partial file.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.to_owned(), source })?;
        Ok(Self { root: root.to_owned(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn persist(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        let io = |source| CliError::Io { path: path.clone(), source };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.persist(name, bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(ManifestEntry {
            path: name.to_owned(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json` listing every file written so far, sorted by path.
    pub fn finish(mut self) -> Result<Manifest, CliError> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest { schema_version: SCHEMA_VERSION, files: std::mem::take(&mut self.files) };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        self.persist(MANIFEST_NAME, text.as_bytes())?;
        Ok(manifest)
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_owned()
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let mut first = true;
    for c in cells {
        if !first {
            out.push(',');
        }
        out.push_str(&c);
        first = false;
    }
    out.push('\n');
}

pub fn events_csv(events: &[Event]) -> String {
    let mut out = format!("{EVENT_HEADER}\n");
    for e in events {
        push_row(
            &mut out,
            [
                fmt_f64(e.t),
                e.kind.as_str().to_owned(),
                e.middle_body.map(|b| b.to_string()).unwrap_or_default(),
                fmt_f64(e.delta1),
                fmt_f64(e.delta2),
                fmt_f64(e.energy),
                fmt_f64(e.angular_momentum),
                e.grazing.to_string(),
            ],
        );
    }
    out
}

/// `samples` rows uniformly spaced over the integrated span.
pub fn trajectory_csv(traj: &Trajectory, samples: usize) -> Result<String, CliError> {
    let mut out = format!("{TRAJECTORY_HEADER}\n");
    let (t0, t1) = (traj.t_start(), traj.t_end());
    let rows = if t1 > t0 { samples } else { 1 };
    for k in 0..rows {
        let t = if k + 1 == rows { t1 } else { t0 + (t1 - t0) * k as f64 / (rows - 1).max(1) as f64 };
        let s = traj.dense_eval(t)?;
        let m = &traj.masses;
        let f = mass_weighted_frame(m, &s);
        let mut cells = vec![fmt_f64(t)];
        cells.extend(s.pos.iter().flat_map(|p| [fmt_f64(p.x), fmt_f64(p.y)]));
        cells.extend(s.vel.iter().flat_map(|v| [fmt_f64(v.x), fmt_f64(v.y)]));
        cells.push(fmt_f64(total_energy(m, &s)?));
        cells.push(fmt_f64(angular_momentum(m, &s)));
        cells.push(fmt_f64(f.delta1));
        cells.push(fmt_f64(f.delta2));
        push_row(&mut out, cells);
    }
    Ok(out)
}
