//! Synthetic multi-body non-rigid scenes with known ground truth.

use std::f64::consts::PI;

use faer::Mat;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Result};
use crate::linalg::{select_columns, Matrix};
use crate::model::{assemble_rotation, ProblemInput, ProjectionBlock, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motif {
    /// Trajectories spanned by `rank` random bases, each a fixed direction
    /// plus a smaller smooth periodic deformation.
    LowRankRandom,
    /// A chain of `rank` hinged links swinging deterministically from a
    /// slowly circling pivot.
    ArticulatedPendulum,
    /// Fixed random shape with constant drift.
    RigidTranslating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub motif: Motif,
    /// Number of trajectories.
    pub points: usize,
    /// Basis size for `low_rank_random`, link count for
    /// `articulated_pendulum`; ignored by `rigid_translating`.
    pub rank: usize,
    /// Spatial scale of the body.
    pub amplitude: f64,
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationSpec {
    Identity,
    /// Random initial orientation followed by random axis-angle steps of at
    /// most `max_step_degrees` per frame.
    SmoothRandom { max_step_degrees: f64 },
}

impl Default for RotationSpec {
    fn default() -> Self {
        Self::SmoothRandom {
            max_step_degrees: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub bodies: Vec<BodySpec>,
    pub frames: usize,
    #[serde(default)]
    pub rotation: RotationSpec,
    #[serde(default)]
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn total_points(&self) -> usize {
        self.bodies.iter().map(|b| b.points).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return param_err("frames must be positive");
        }
        if self.bodies.is_empty() {
            return param_err("at least one body is required");
        }
        for (i, b) in self.bodies.iter().enumerate() {
            if b.points == 0 {
                return param_err(format!("body {i}: points must be at least 1"));
            }
            if b.rank == 0 {
                return param_err(format!("body {i}: rank must be at least 1"));
            }
            if b.rank > 3 * self.frames {
                return param_err(format!(
                    "body {i}: rank {} exceeds 3F = {}",
                    b.rank,
                    3 * self.frames
                ));
            }
            if !(b.amplitude > 0.0 && b.amplitude.is_finite()) {
                return param_err(format!("body {i}: amplitude must be positive"));
            }
            if b.offset.iter().any(|v| !v.is_finite()) {
                return param_err(format!("body {i}: offset must be finite"));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return param_err("noise_sigma must be nonnegative");
        }
        if let RotationSpec::SmoothRandom { max_step_degrees } = self.rotation {
            if !(max_step_degrees >= 0.0 && max_step_degrees.is_finite()) {
                return param_err("max_step_degrees must be nonnegative");
            }
        }
        Ok(())
    }
}

/// Trajectory block (3F×p, rows `3f + d`) of one body before its offset.
pub fn motif_trajectories(body: &BodySpec, frames: usize, rng: &mut impl Rng) -> Matrix {
    match body.motif {
        Motif::LowRankRandom => low_rank_random(body, frames, rng),
        Motif::ArticulatedPendulum => articulated_pendulum(body, frames),
        Motif::RigidTranslating => rigid_translating(body, frames, rng),
    }
}

fn low_rank_random(body: &BodySpec, frames: usize, rng: &mut impl Rng) -> Matrix {
    const HARMONICS: usize = 3;
    const DEFORMATION: f64 = 0.1;
    let r = body.rank;
    let f_len = frames as f64;
    // Each basis trajectory is a fixed 3D direction plus a smooth periodic
    // deformation, so the body has a rigid mean shape.
    let mut basis = Mat::<f64>::zeros(3 * frames, r);
    for k in 0..r {
        for d in 0..3 {
            let mut coeffs = [(0.0, 0.0); HARMONICS];
            for (h, c) in coeffs.iter_mut().enumerate() {
                let a: f64 = rng.sample(StandardNormal);
                let phase = rng.random::<f64>() * 2.0 * PI;
                *c = (DEFORMATION * a / (h + 1) as f64, phase);
            }
            let mean: f64 = rng.sample(StandardNormal);
            for f in 0..frames {
                let t = (f as f64 + 0.5) / f_len;
                let mut v = mean;
                for (h, &(a, phase)) in coeffs.iter().enumerate() {
                    v += a * (2.0 * PI * (h + 1) as f64 * t + phase).cos();
                }
                basis[(3 * f + d, k)] = v;
            }
        }
    }
    let scale = body.amplitude / (r as f64).sqrt();
    let coeffs = Mat::from_fn(r, body.points, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    &basis * &coeffs
}

fn articulated_pendulum(body: &BodySpec, frames: usize) -> Matrix {
    let links = body.rank;
    let p = body.points;
    let len = body.amplitude;
    let mut out = Mat::<f64>::zeros(3 * frames, p);
    for f in 0..frames {
        let t = f as f64 / frames.max(1) as f64;
        // Joint positions along the chain; the pivot itself circles slowly.
        let mut joints = vec![[0.0; 3]; links + 1];
        let mut dirs = vec![[0.0; 3]; links];
        let mut normals = vec![[0.0; 3]; links];
        let orbit = 2.0 * PI * 0.7 * t;
        joints[0] = [0.3 * len * orbit.cos(), 0.3 * len * orbit.sin(), 0.0];
        for l in 0..links {
            let lf = l as f64;
            let theta = 0.35 + 0.15 * lf + (0.6 / (1.0 + 0.5 * lf)) * (2.0 * PI * (1.3 + 0.6 * lf) * t + 0.9 * lf).sin();
            let psi = 0.4 * lf + 0.5 * (2.0 * PI * (0.5 + 0.3 * lf) * t + 1.3 * lf).cos();
            let d = [theta.sin() * psi.cos(), theta.sin() * psi.sin(), -theta.cos()];
            dirs[l] = d;
            normals[l] = [-psi.sin(), psi.cos(), 0.0];
            for a in 0..3 {
                joints[l + 1][a] = joints[l][a] + len * d[a];
            }
        }
        for i in 0..p {
            let pos = 0.3 + (i as f64 + 0.5) * (links as f64 - 0.3) / p as f64;
            let l = (pos.floor() as usize).min(links - 1);
            let frac = pos - l as f64;
            let lateral = 0.15 * len * ((i % 3) as f64 - 1.0);
            for a in 0..3 {
                out[(3 * f + a, i)] = joints[l][a] + frac * len * dirs[l][a] + lateral * normals[l][a];
            }
        }
    }
    out
}

fn rigid_translating(body: &BodySpec, frames: usize, rng: &mut impl Rng) -> Matrix {
    let amp = body.amplitude;
    let shape = Mat::from_fn(3, body.points, |_, _| amp * rng.sample::<f64, _>(StandardNormal));
    let drift: [f64; 3] = std::array::from_fn(|_| 0.5 * amp / frames as f64 * rng.sample::<f64, _>(StandardNormal));
    Mat::from_fn(3 * frames, body.points, |row, i| {
        let (f, d) = (row / 3, row % 3);
        shape[(d, i)] + f as f64 * drift[d]
    })
}

type Quat = [f64; 4];

fn quat_mul(a: Quat, b: Quat) -> Quat {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn quat_normalize(q: Quat) -> Quat {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.map(|v| v / n)
}

fn random_unit3(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-8 {
            return v.map(|x| x / n);
        }
    }
}

/// First two rows of the rotation matrix of a unit quaternion.
fn quat_to_block(q: Quat) -> ProjectionBlock {
    let [w, x, y, z] = q;
    ProjectionBlock([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
    ])
}

/// Per-frame cameras for the given schedule.
pub fn generate_rotations(spec: RotationSpec, frames: usize, rng: &mut impl Rng) -> Vec<ProjectionBlock> {
    match spec {
        RotationSpec::Identity => vec![ProjectionBlock::IDENTITY; frames],
        RotationSpec::SmoothRandom { max_step_degrees } => {
            let init: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let mut q = quat_normalize(init);
            let max_step = max_step_degrees.to_radians();
            let mut out = Vec::with_capacity(frames);
            for f in 0..frames {
                if f > 0 {
                    let axis = random_unit3(rng);
                    let half = 0.5 * max_step * rng.random::<f64>();
                    let (s, c) = half.sin_cos();
                    let step = [c, s * axis[0], s * axis[1], s * axis[2]];
                    q = quat_normalize(quat_mul(step, q));
                }
                out.push(quat_to_block(q));
            }
            out
        }
    }
}

/// Subtracts each frame's centroid from a `rows_per_frame`-row block stack.
fn center_frames(m: &mut Matrix, rows_per_frame: usize) {
    let p = m.ncols() as f64;
    for row in 0..m.nrows() {
        let mean = (0..m.ncols()).map(|j| m[(row, j)]).sum::<f64>() / p;
        for j in 0..m.ncols() {
            m[(row, j)] -= mean;
        }
    }
    debug_assert_eq!(m.nrows() % rows_per_frame, 0);
}

/// Generates a scene and its measurement problem.
///
/// Shapes are centered per frame in 3D before projection and the 2D tracks
/// are centered per frame after noise is added, so without noise
/// `W = R·S` holds exactly.
pub fn generate(spec: &SceneSpec) -> Result<(Scene, ProblemInput)> {
    spec.validate()?;
    let frames = spec.frames;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p_total = spec.total_points();
    let mut shapes = Mat::<f64>::zeros(3 * frames, p_total);
    let mut labels = Vec::with_capacity(p_total);
    let mut col = 0;
    for (b, body) in spec.bodies.iter().enumerate() {
        let block = motif_trajectories(body, frames, &mut rng);
        for i in 0..body.points {
            for row in 0..3 * frames {
                shapes[(row, col + i)] = block[(row, i)] + body.offset[row % 3];
            }
            labels.push(b);
        }
        col += body.points;
    }
    center_frames(&mut shapes, 3);

    let rotations = generate_rotations(spec.rotation, frames, &mut rng);
    let r = assemble_rotation(&rotations);
    let mut w = &r * &shapes;
    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma)
            .map_err(|e| crate::Error::InvalidParameter(format!("noise: {e}")))?;
        for j in 0..w.ncols() {
            for i in 0..w.nrows() {
                w[(i, j)] += normal.sample(&mut rng);
            }
        }
        center_frames(&mut w, 2);
    }
    let scene = Scene {
        shapes_gt: shapes,
        rotations: rotations.clone(),
        labels_gt: labels,
        frame_labels_gt: None,
        num_objects: spec.bodies.len(),
    };
    let input = ProblemInput::new(w, rotations)?;
    Ok((scene, input))
}

/// Mean over points of the per-trajectory 2D extent (max − min over frames),
/// the unit in which relative noise levels are expressed.
pub fn mean_trajectory_span(w: &Matrix) -> f64 {
    let mut total = 0.0;
    for j in 0..w.ncols() {
        for axis in 0..2 {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in (axis..w.nrows()).step_by(2) {
                lo = lo.min(w[(i, j)]);
                hi = hi.max(w[(i, j)]);
            }
            total += hi - lo;
        }
    }
    total / (2 * w.ncols()) as f64
}

/// Uniform column subsample without replacement, applied consistently to
/// the tracks, the ground-truth shapes and the labels. Columns keep their
/// original relative order.
pub fn sample_trajectories(input: &ProblemInput, scene: &Scene, n: usize, seed: u64) -> Result<(ProblemInput, Scene)> {
    let p = input.points();
    if n == 0 || n > p {
        return param_err(format!("cannot sample {n} of {p} trajectories"));
    }
    if scene.points() != p {
        return crate::error::dim_err(format!("scene has {} points, input has {p}", scene.points()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, p, n).into_vec();
    idx.sort_unstable();
    let sub_input = input.with_columns(&idx)?;
    let sub_scene = Scene {
        shapes_gt: select_columns(scene.shapes_gt.as_ref(), &idx),
        rotations: scene.rotations.clone(),
        labels_gt: idx.iter().map(|&i| scene.labels_gt[i]).collect(),
        frame_labels_gt: scene.frame_labels_gt.clone(),
        num_objects: scene.num_objects,
    };
    Ok((sub_input, sub_scene))
}
