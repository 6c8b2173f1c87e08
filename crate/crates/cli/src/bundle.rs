//! On-disk scene and result bundles: a directory holding `manifest.json`
//! and one CSV file per matrix.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use faer::Mat;
use nrsfm_core::admm::ResidualRecord;
use nrsfm_core::model::{validate_rotations, ProjectionBlock};
use nrsfm_core::{Matrix, ProblemInput, Scene};
use serde::{Deserialize, Serialize};

pub const MANIFEST: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

pub const RESIDUAL_HEADER: [&str; 11] = [
    "iter",
    "r_gmap",
    "r_selfS",
    "r_selfSsharp",
    "r_affine1",
    "r_affine2",
    "r_E1",
    "r_E2",
    "r_J",
    "objective",
    "beta",
];

/// Layout flags recorded so other tools can read the matrices unambiguously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conventions {
    /// `W` row `2f + i` is image coordinate `i` of frame `f`.
    pub w_rows: String,
    /// `S` row `3f + d` is coordinate `d` of frame `f`.
    pub s_rows: String,
    /// Each `R_blocks.csv` row is a 2×3 camera block in row-major order.
    pub r_blocks: String,
    pub camera: String,
    /// Measurements are centered per frame.
    pub centered: bool,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            w_rows: "2f+i".into(),
            s_rows: "3f+d".into(),
            r_blocks: "row-major 2x3".into(),
            camera: "orthographic".into(),
            centered: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub frames: usize,
    pub points: usize,
    /// Number of objects, when known.
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub units: String,
    pub conventions: Conventions,
    pub has_ground_truth: bool,
    pub has_frame_labels: bool,
}

/// A scene bundle held in memory.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub manifest: Manifest,
    pub w: Matrix,
    pub blocks: Vec<ProjectionBlock>,
    pub scene: Option<Scene>,
}

impl Bundle {
    pub fn from_generated(scene: Scene, input: &ProblemInput, seed: u64) -> Self {
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            frames: input.frames(),
            points: input.points(),
            k: Some(scene.num_objects),
            seed: Some(seed),
            units: "arbitrary".into(),
            conventions: Conventions::default(),
            has_ground_truth: true,
            has_frame_labels: scene.frame_labels_gt.is_some(),
        };
        Self {
            manifest,
            w: input.w.clone(),
            blocks: input.blocks().to_vec(),
            scene: Some(scene),
        }
    }

    pub fn input(&self) -> Result<ProblemInput> {
        Ok(ProblemInput::new(self.w.clone(), self.blocks.clone())?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_json(&dir.join(MANIFEST), &self.manifest)?;
        write_matrix(&dir.join("W.csv"), &self.w)?;
        let r = Mat::from_fn(self.blocks.len(), 6, |f, j| self.blocks[f].to_row_major()[j]);
        write_matrix(&dir.join("R_blocks.csv"), &r)?;
        if let Some(scene) = &self.scene {
            write_matrix(&dir.join("S_gt.csv"), &scene.shapes_gt)?;
            write_labels(&dir.join("labels_gt.csv"), &scene.labels_gt)?;
            if let Some(fl) = &scene.frame_labels_gt {
                write_labels(&dir.join("frame_labels_gt.csv"), fl)?;
            }
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
        ensure!(
            manifest.format_version == FORMAT_VERSION,
            "{}: unsupported format_version {}",
            dir.join(MANIFEST).display(),
            manifest.format_version
        );
        let (f, p) = (manifest.frames, manifest.points);
        let w = read_matrix_checked(&dir.join("W.csv"), 2 * f, p)?;
        let r = read_matrix_checked(&dir.join("R_blocks.csv"), f, 6)?;
        let blocks = (0..f)
            .map(|i| ProjectionBlock::from_row_major(&(0..6).map(|j| r[(i, j)]).collect::<Vec<_>>()))
            .collect::<nrsfm_core::Result<Vec<_>>>()?;
        validate_rotations(&blocks).context("R_blocks.csv")?;
        let scene = if manifest.has_ground_truth {
            let shapes_gt = read_matrix_checked(&dir.join("S_gt.csv"), 3 * f, p)?;
            let labels_gt = read_labels(&dir.join("labels_gt.csv"))?;
            let frame_labels_gt = if manifest.has_frame_labels {
                Some(read_labels(&dir.join("frame_labels_gt.csv"))?)
            } else {
                None
            };
            let num_objects = match manifest.k {
                Some(k) => k,
                None => labels_gt.iter().max().map_or(1, |&m| m + 1),
            };
            let scene = Scene {
                shapes_gt,
                rotations: blocks.clone(),
                labels_gt,
                frame_labels_gt,
                num_objects,
            };
            scene.validate().with_context(|| format!("ground truth in {}", dir.display()))?;
            Some(scene)
        } else {
            None
        };
        Ok(Self {
            manifest,
            w,
            blocks,
            scene,
        })
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    for i in 0..m.nrows() {
        wtr.write_record((0..m.ncols()).map(|j| fmt_f64(m[(i, j)])))?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed CSV at record {}", path.display(), line + 1))?;
        rows.push(record.iter().map(|s| s.trim().to_owned()).collect());
    }
    Ok(rows)
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let rows = parse_rows(path)?;
    let ncols = rows.first().map_or(0, Vec::len);
    let mut values = Vec::with_capacity(rows.len() * ncols);
    for (i, row) in rows.iter().enumerate() {
        ensure!(
            row.len() == ncols,
            "{}: row {} has {} fields, expected {ncols}",
            path.display(),
            i + 1,
            row.len()
        );
        for (j, field) in row.iter().enumerate() {
            let v: f64 = field
                .parse()
                .with_context(|| format!("{}: row {}, column {}: cannot parse {field:?}", path.display(), i + 1, j + 1))?;
            ensure!(v.is_finite(), "{}: row {}, column {}: non-finite value", path.display(), i + 1, j + 1);
            values.push(v);
        }
    }
    Ok(Mat::from_fn(rows.len(), ncols, |i, j| values[i * ncols + j]))
}

fn read_matrix_checked(path: &Path, rows: usize, cols: usize) -> Result<Matrix> {
    let m = read_matrix(path)?;
    if m.nrows() != rows || m.ncols() != cols {
        bail!(
            "{}: expected {rows}×{cols}, found {}×{}",
            path.display(),
            m.nrows(),
            m.ncols()
        );
    }
    Ok(m)
}

/// One label per line.
pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut text = String::with_capacity(labels.len() * 2);
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    parse_rows(path)?
        .iter()
        .enumerate()
        .map(|(i, row)| {
            ensure!(row.len() == 1, "{}: line {} must hold a single label", path.display(), i + 1);
            row[0]
                .parse()
                .with_context(|| format!("{}: line {}: bad label {:?}", path.display(), i + 1, row[0]))
        })
        .collect()
}

pub fn write_residuals(path: &Path, history: &[ResidualRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    wtr.write_record(RESIDUAL_HEADER)?;
    for r in history {
        let mut row = vec![r.iter.to_string()];
        row.extend(r.residuals().iter().map(|&v| fmt_f64(v)));
        row.push(fmt_f64(r.objective));
        row.push(fmt_f64(r.beta));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_residuals(path: &Path) -> Result<Vec<ResidualRecord>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    ensure!(header == RESIDUAL_HEADER, "{}: unexpected header {header:?}", path.display());
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let v: Vec<f64> = record.iter().skip(1).map(str::parse).collect::<Result<_, _>>()?;
        ensure!(v.len() == 10, "{}: short residual row", path.display());
        out.push(ResidualRecord {
            iter: record[0].parse()?,
            r_gmap: v[0],
            r_self_s: v[1],
            r_self_s_sharp: v[2],
            r_affine1: v[3],
            r_affine2: v[4],
            r_e1: v[5],
            r_e2: v[6],
            r_j: v[7],
            objective: v[8],
            beta: v[9],
        });
    }
    Ok(out)
}
