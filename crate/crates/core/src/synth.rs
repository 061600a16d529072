//! Synthetic two-view scenes with known plane homographies.
//!
//! Every generated match carries a ground-truth label so verification runs
//! can be scored exactly.

use nalgebra::{Matrix3, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::homography::Homography;
use crate::matching::{ImageExtent, Match, MatchSet};

/// Attempts allowed for any single redraw loop.
pub const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("infeasible scene: {0}")]
    InfeasibleSpec(String),
}

/// Axis-aligned rectangle `[x0, x1) × [y0, y1)` in image-1 pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [
            Vec2::new(self.x0, self.y0),
            Vec2::new(self.x1, self.y0),
            Vec2::new(self.x1, self.y1),
            Vec2::new(self.x0, self.y1),
        ]
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        Vec2::new(
            rng.random_range(self.x0..self.x1),
            rng.random_range(self.y0..self.y1),
        )
    }

    fn within(&self, e: ImageExtent) -> bool {
        self.x0 >= 0.0
            && self.y0 >= 0.0
            && self.x0 < self.x1
            && self.y0 < self.y1
            && self.x1 <= e.width as f64
            && self.y1 <= e.height as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    /// Image-1 to image-2 map of this plane; drawn at random when absent.
    #[serde(default)]
    pub homography: Option<Homography>,
    pub region: Rect,
    pub inlier_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub extent1: ImageExtent,
    pub extent2: ImageExtent,
    pub planes: Vec<PlaneSpec>,
    #[serde(default)]
    pub outlier_count: usize,
    /// Outliers placed 15–50 px away from a plane's prediction.
    #[serde(default)]
    pub near_miss_count: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Inlier(usize),
    Outlier,
}

impl Label {
    pub fn plane(&self) -> Option<usize> {
        match self {
            Label::Inlier(k) => Some(*k),
            Label::Outlier => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatchSet {
    pub match_set: MatchSet,
    pub labels: Vec<Label>,
    /// The homography actually used for each plane.
    pub homographies: Vec<Homography>,
}

/// Bounds of the random plane homography family.
pub const MAX_ROTATION_DEG: f64 = 30.0;
pub const SCALE_RANGE: (f64, f64) = (0.5, 2.0);
pub const MAX_PROJECTIVE: f64 = 1e-3;

/// Smallest admissible homogeneous weight at a region corner.
const MIN_CORNER_WEIGHT: f64 = 0.2;

fn corners_fit(h: &Homography, region: &Rect, extent2: ImageExtent) -> bool {
    region.corners().iter().all(|&c| {
        let m = h.matrix();
        let w = m[(2, 0)] * c.x + m[(2, 1)] * c.y + m[(2, 2)];
        w > 0.0 && h.apply(c).is_some_and(|q| extent2.contains(q))
    })
}

/// Rotation, anisotropic scale and a small projective term about the region
/// center, followed by a translation that places the mapped region at a
/// random position inside image 2.
pub fn random_homography<R: Rng + ?Sized>(
    rng: &mut R,
    region: &Rect,
    extent2: ImageExtent,
) -> Result<Homography, SynthError> {
    let c = region.center();
    for _ in 0..MAX_REDRAWS {
        let angle = rng
            .random_range(-MAX_ROTATION_DEG..=MAX_ROTATION_DEG)
            .to_radians();
        let sx = rng.random_range(SCALE_RANGE.0..=SCALE_RANGE.1);
        let sy = rng.random_range(SCALE_RANGE.0..=SCALE_RANGE.1);
        let px = rng.random_range(-MAX_PROJECTIVE..=MAX_PROJECTIVE);
        let py = rng.random_range(-MAX_PROJECTIVE..=MAX_PROJECTIVE);
        let (s, co) = angle.sin_cos();
        let core = Matrix3::new(co * sx, -s * sy, 0.0, s * sx, co * sy, 0.0, px, py, 1.0);
        let center = Matrix3::new(1.0, 0.0, -c.x, 0.0, 1.0, -c.y, 0.0, 0.0, 1.0);
        let local = core * center;

        let mut mapped = Vec::with_capacity(4);
        for corner in region.corners() {
            let v = local * Vector3::new(corner.x, corner.y, 1.0);
            if v.z < MIN_CORNER_WEIGHT {
                break;
            }
            mapped.push(Vec2::new(v.x / v.z, v.y / v.z));
        }
        if mapped.len() < 4 {
            continue;
        }
        let (min_x, max_x) = mapped
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.x), b.max(p.x)));
        let (min_y, max_y) = mapped
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.y), b.max(p.y)));
        // One pixel of slack keeps the mapped corners strictly inside.
        let room_x = extent2.width as f64 - 2.0 - (max_x - min_x);
        let room_y = extent2.height as f64 - 2.0 - (max_y - min_y);
        if room_x <= 0.0 || room_y <= 0.0 {
            continue;
        }
        let tx = 1.0 + rng.random_range(0.0..room_x) - min_x;
        let ty = 1.0 + rng.random_range(0.0..room_y) - min_y;
        let shift = Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0);
        let Ok(h) = Homography::from_matrix(shift * local) else {
            continue;
        };
        if corners_fit(&h, region, extent2) {
            return Ok(h);
        }
    }
    Err(SynthError::InfeasibleSpec(format!(
        "no random homography maps region {region:?} into {}x{}",
        extent2.width, extent2.height
    )))
}

/// Homography induced by the plane `n·X = d` (camera-1 frame) between two
/// pinhole cameras with shared intrinsics `k`, where `X₂ = R·X₁ + t`.
pub fn plane_induced_homography(
    k: &Matrix3<f64>,
    rotation: &Matrix3<f64>,
    translation: &Vector3<f64>,
    normal: &Vector3<f64>,
    distance: f64,
) -> Result<Homography, SynthError> {
    let k_inv = k
        .try_inverse()
        .ok_or_else(|| SynthError::InfeasibleSpec("singular intrinsics".into()))?;
    let m = k * (rotation + translation * normal.transpose() / distance) * k_inv;
    Homography::from_matrix(m).map_err(|e| SynthError::InfeasibleSpec(e.to_string()))
}

fn truncated_noise<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Vec2 {
    if sigma <= 0.0 {
        return Vec2::default();
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    loop {
        let v = Vec2::new(normal.sample(rng), normal.sample(rng));
        if v.norm() <= 3.0 * sigma {
            return v;
        }
    }
}

/// Generates the labeled match set described by `spec`.
pub fn generate(spec: &SceneSpec) -> Result<LabeledMatchSet, SynthError> {
    let (e1, e2) = (spec.extent1, spec.extent2);
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(SynthError::InfeasibleSpec("noise sigma must be finite and >= 0".into()));
    }
    if spec.near_miss_count > 0 && spec.planes.is_empty() {
        return Err(SynthError::InfeasibleSpec("near-miss outliers need a plane".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut homographies = Vec::with_capacity(spec.planes.len());
    for (k, plane) in spec.planes.iter().enumerate() {
        if !plane.region.within(e1) {
            return Err(SynthError::InfeasibleSpec(format!(
                "plane {k}: region lies outside image 1"
            )));
        }
        let h = match plane.homography {
            Some(h) if corners_fit(&h, &plane.region, e2) => h,
            Some(_) => {
                return Err(SynthError::InfeasibleSpec(format!(
                    "plane {k}: region corners map outside image 2"
                )))
            }
            None => random_homography(&mut rng, &plane.region, e2)?,
        };
        homographies.push(h);
    }

    let mut labeled: Vec<(Match, Label)> = Vec::new();
    for (k, (plane, h)) in spec.planes.iter().zip(&homographies).enumerate() {
        for _ in 0..plane.inlier_count {
            let m = (0..MAX_REDRAWS)
                .find_map(|_| {
                    let p1 = plane.region.sample(&mut rng);
                    let p2 = h.apply(p1)? + truncated_noise(&mut rng, spec.noise_sigma);
                    (e1.contains(p1) && e2.contains(p2)).then_some(Match::new(p1, p2))
                })
                .ok_or_else(|| {
                    SynthError::InfeasibleSpec(format!("plane {k}: cannot place an inlier"))
                })?;
            labeled.push((m, Label::Inlier(k)));
        }
    }

    for i in 0..spec.near_miss_count {
        let k = i % spec.planes.len();
        let (plane, h) = (&spec.planes[k], &homographies[k]);
        let m = (0..MAX_REDRAWS)
            .find_map(|_| {
                let p1 = plane.region.sample(&mut rng);
                let len = rng.random_range(15.0..=50.0);
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let p2 = h.apply(p1)? + Vec2::new(len * angle.cos(), len * angle.sin());
                (e1.contains(p1) && e2.contains(p2)).then_some(Match::new(p1, p2))
            })
            .ok_or_else(|| SynthError::InfeasibleSpec("cannot place a near-miss outlier".into()))?;
        labeled.push((m, Label::Outlier));
    }

    let full1 = Rect::new(0.0, 0.0, e1.width as f64, e1.height as f64);
    let full2 = Rect::new(0.0, 0.0, e2.width as f64, e2.height as f64);
    for _ in 0..spec.outlier_count {
        labeled.push((
            Match::new(full1.sample(&mut rng), full2.sample(&mut rng)),
            Label::Outlier,
        ));
    }

    labeled.shuffle(&mut rng);
    let (matches, labels): (Vec<Match>, Vec<Label>) = labeled.into_iter().unzip();
    let match_set = MatchSet::new(e1, e2, matches)
        .map_err(|e| SynthError::InfeasibleSpec(e.to_string()))?;
    Ok(LabeledMatchSet {
        match_set,
        labels,
        homographies,
    })
}

/// Verification verdicts scored against oracle labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    /// Correct verdicts that are true inliers; 1 when nothing was accepted.
    pub precision: f64,
    /// True inliers accepted; 1 when there are none.
    pub recall: f64,
    /// True outliers rejected; 1 when there are none.
    pub outlier_rejection: f64,
}

/// Scores per-match acceptance flags (in match order) against `labels`.
pub fn score(accepted: &[bool], labels: &[Label]) -> Score {
    assert_eq!(accepted.len(), labels.len(), "one verdict per label");
    let (mut tp, mut fp, mut fneg, mut tn) = (0, 0, 0, 0);
    for (&a, l) in accepted.iter().zip(labels) {
        match (a, l.plane().is_some()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => tn += 1,
        }
    }
    let frac = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    Score {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fneg,
        true_negatives: tn,
        precision: frac(tp, tp + fp),
        recall: frac(tp, tp + fneg),
        outlier_rejection: frac(tn, tn + fp),
    }
}

impl SceneSpec {
    /// One randomly drawn plane covering all of a 900x900 image 1, seen in a
    /// 1200x1200 image 2.
    pub fn single_plane(inliers: usize, outliers: usize, noise_sigma: f64, seed: u64) -> Self {
        Self {
            extent1: ImageExtent { width: 900, height: 900 },
            extent2: ImageExtent { width: 1200, height: 1200 },
            planes: vec![PlaneSpec {
                homography: None,
                region: Rect::new(0.0, 0.0, 900.0, 900.0),
                inlier_count: inliers,
            }],
            outlier_count: outliers,
            near_miss_count: 0,
            noise_sigma,
            seed,
        }
    }

    /// Two walls meeting at a right angle, seen from inside the corner by a
    /// 900x900 and a 1000x1000 pinhole camera (f = 800 px) with a 20 degree
    /// yaw between them. The fold projects to x = 300 in image 1, so the left
    /// wall covers the first third of the image and the right wall the rest.
    pub fn corner(inliers_per_plane: usize, outliers: usize, noise_sigma: f64, seed: u64) -> Self {
        let k = Matrix3::new(800.0, 0.0, 450.0, 0.0, 800.0, 450.0, 0.0, 0.0, 1.0);
        let yaw = 20.0_f64.to_radians();
        let rotation = Matrix3::new(
            yaw.cos(),
            0.0,
            yaw.sin(),
            0.0,
            1.0,
            0.0,
            -yaw.sin(),
            0.0,
            yaw.cos(),
        );
        let t = Vector3::new(-1.4, 0.1, 0.4);
        // Walls -X + Z = 4.75 and X + Z = 3.25 meet at X = -0.75, Z = 4,
        // which projects to the column x = 300 of image 1.
        let wall = |nx: f64, depth: f64| {
            plane_induced_homography(&k, &rotation, &t, &Vector3::new(nx, 0.0, 1.0), depth)
                .expect("fixed corner geometry is regular")
        };
        Self {
            extent1: ImageExtent { width: 900, height: 900 },
            extent2: ImageExtent { width: 1000, height: 1000 },
            planes: vec![
                PlaneSpec {
                    homography: Some(wall(-1.0, 4.75)),
                    region: Rect::new(20.0, 20.0, 290.0, 880.0),
                    inlier_count: inliers_per_plane,
                },
                PlaneSpec {
                    homography: Some(wall(1.0, 3.25)),
                    region: Rect::new(310.0, 20.0, 880.0, 880.0),
                    inlier_count: inliers_per_plane,
                },
            ],
            outlier_count: outliers,
            near_miss_count: 0,
            noise_sigma,
            seed,
        }
    }
}
