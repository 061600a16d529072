//! Per-group homography estimation and reprojection-based match classification.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{collinear_tolerance, diameter, Vec2};
use crate::matching::MatchSet;
use crate::planar::PlanarGroup;

/// Minimum |det| of a Frobenius-normalized matrix.
pub const DET_EPS: f64 = 1e-15;

/// Largest admissible ratio between the two smallest singular values of the
/// DLT system.
pub const NULL_SPACE_ISOLATION: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomographyError {
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("null space is not isolated (singular value ratio {ratio:.4})")]
    NumericalFailure { ratio: f64 },
    #[error("matrix is singular or not finite")]
    Singular,
}

/// Projective map from image-1 to image-2 pixels, stored with unit
/// Frobenius norm and a non-negative bottom-right entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[[f64; 3]; 3]", try_from = "[[f64; 3]; 3]")]
pub struct Homography {
    m: Matrix3<f64>,
}

impl Homography {
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, HomographyError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(HomographyError::Singular);
        }
        let norm = m.norm();
        if norm == 0.0 {
            return Err(HomographyError::Singular);
        }
        // Already-normalized input is kept as is so that stored matrices
        // deserialize to the same bits.
        let mut m = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON { m } else { m / norm };
        if m[(2, 2)] < 0.0 {
            m = -m;
        }
        if m.determinant().abs() <= DET_EPS {
            return Err(HomographyError::Singular);
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self, HomographyError> {
        Self::from_matrix(Matrix3::from_fn(|r, c| rows[r][c]))
    }

    pub fn identity() -> Self {
        Self::from_matrix(Matrix3::identity()).expect("identity is regular")
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn to_rows(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|r| std::array::from_fn(|c| self.m[(r, c)]))
    }

    /// Maps `p`; `None` when `p` lies on (or numerically at) the line sent to infinity.
    pub fn apply(&self, p: Vec2) -> Option<Vec2> {
        let m = &self.m;
        let w = m[(2, 0)] * p.x + m[(2, 1)] * p.y + m[(2, 2)];
        let scale = (m[(2, 0)] * p.x).abs() + (m[(2, 1)] * p.y).abs() + m[(2, 2)].abs();
        if w.abs() <= 4.0 * f64::EPSILON * scale || w == 0.0 {
            return None;
        }
        let q = Vec2::new(
            (m[(0, 0)] * p.x + m[(0, 1)] * p.y + m[(0, 2)]) / w,
            (m[(1, 0)] * p.x + m[(1, 1)] * p.y + m[(1, 2)]) / w,
        );
        q.is_finite().then_some(q)
    }

    pub fn inverse(&self) -> Self {
        let inv = self.m.try_inverse().expect("normalized homography is invertible");
        Self::from_matrix(inv).expect("inverse of a regular matrix is regular")
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Homography) -> Result<Self, HomographyError> {
        Self::from_matrix(self.m * other.m)
    }
}

impl From<Homography> for [[f64; 3]; 3] {
    fn from(h: Homography) -> Self {
        h.to_rows()
    }
}

impl TryFrom<[[f64; 3]; 3]> for Homography {
    type Error = HomographyError;
    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self, Self::Error> {
        Self::from_rows(rows)
    }
}

/// Translate to the centroid and scale to mean distance √2.
fn conditioning(points: &[Vec2]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let (cx, cy) = points
        .iter()
        .fold((0.0, 0.0), |(x, y), p| (x + p.x / n, y + p.y / n));
    let mean_dist = points
        .iter()
        .map(|p| (p.x - cx).hypot(p.y - cy))
        .sum::<f64>()
        / n;
    let s = if mean_dist > 0.0 {
        std::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0)
}

fn transform(t: &Matrix3<f64>, p: Vec2) -> Vec2 {
    let v = t * Vector3::new(p.x, p.y, 1.0);
    Vec2::new(v.x / v.z, v.y / v.z)
}

fn collinear(a: Vec2, b: Vec2, c: Vec2, eps: f64) -> bool {
    (b - a).cross(c - a).abs() < eps
}

/// Looks for four points with no three collinear. Exhaustive for four
/// points, greedy beyond that.
fn has_general_position_quad(points: &[Vec2]) -> bool {
    let eps = collinear_tolerance(diameter(points));
    if points.len() == 4 {
        let [a, b, c, d] = [points[0], points[1], points[2], points[3]];
        return !(collinear(a, b, c, eps)
            || collinear(a, b, d, eps)
            || collinear(a, c, d, eps)
            || collinear(b, c, d, eps));
    }
    let p0 = points[0];
    let far = |from: Vec2| {
        points
            .iter()
            .copied()
            .max_by(|a, b| a.distance(from).total_cmp(&b.distance(from)))
            .expect("non-empty")
    };
    let p1 = far(p0);
    let p2 = points
        .iter()
        .copied()
        .max_by(|a, b| {
            let da = (p1 - p0).cross(*a - p0).abs();
            let db = (p1 - p0).cross(*b - p0).abs();
            da.total_cmp(&db)
        })
        .expect("non-empty");
    if collinear(p0, p1, p2, eps) {
        return false;
    }
    points.iter().any(|&q| {
        !collinear(p0, p1, q, eps) && !collinear(p0, p2, q, eps) && !collinear(p1, p2, q, eps)
    })
}

/// Direct linear transform with point conditioning, solved by SVD.
///
/// `pairs` holds `(image-1 point, image-2 point)` correspondences.
pub fn estimate_homography(pairs: &[(Vec2, Vec2)]) -> Result<Homography, HomographyError> {
    if pairs.len() < 4 {
        return Err(HomographyError::DegenerateConfiguration(
            "at least four correspondences are required",
        ));
    }
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(HomographyError::DegenerateConfiguration("non-finite point"));
    }
    let src: Vec<Vec2> = pairs.iter().map(|p| p.0).collect();
    let dst: Vec<Vec2> = pairs.iter().map(|p| p.1).collect();
    if !has_general_position_quad(&src) {
        return Err(HomographyError::DegenerateConfiguration(
            "image-1 points are collinear",
        ));
    }

    let t1 = conditioning(&src);
    let t2 = conditioning(&dst);

    // Pad to at least 9 rows so the SVD always exposes the full right basis.
    let rows = (2 * pairs.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (k, (p, q)) in src.iter().zip(&dst).enumerate() {
        let p = transform(&t1, *p);
        let q = transform(&t2, *q);
        let r = 2 * k;
        a[(r, 0)] = -p.x;
        a[(r, 1)] = -p.y;
        a[(r, 2)] = -1.0;
        a[(r, 6)] = q.x * p.x;
        a[(r, 7)] = q.x * p.y;
        a[(r, 8)] = q.x;
        a[(r + 1, 3)] = -p.x;
        a[(r + 1, 4)] = -p.y;
        a[(r + 1, 5)] = -1.0;
        a[(r + 1, 6)] = q.y * p.x;
        a[(r + 1, 7)] = q.y * p.y;
        a[(r + 1, 8)] = q.y;
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(HomographyError::NumericalFailure { ratio: f64::NAN })?;
    let sv = &svd.singular_values;
    // Sorted descending by nalgebra.
    let (smallest, second) = (sv[8], sv[7]);
    let ratio = if second > 0.0 { smallest / second } else { 1.0 };
    if !(ratio <= NULL_SPACE_ISOLATION) {
        return Err(HomographyError::NumericalFailure { ratio });
    }
    let h = v_t.row(8);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let t2_inv = t2
        .try_inverse()
        .ok_or(HomographyError::DegenerateConfiguration("image-2 points coincide"))?;
    Homography::from_matrix(t2_inv * hn * t1).map_err(|_| {
        HomographyError::DegenerateConfiguration("correspondences induce a singular map")
    })
}

/// Estimates one homography per group from its member correspondences.
/// Groups whose estimation fails are dropped.
pub fn fit_group_homographies(groups: Vec<PlanarGroup>, ms: &MatchSet) -> Vec<PlanarGroup> {
    groups
        .into_iter()
        .filter_map(|mut g| {
            let pairs: Vec<(Vec2, Vec2)> = g
                .member_matches
                .iter()
                .map(|&i| {
                    let m = ms.matches()[i];
                    (m.p1, m.p2)
                })
                .collect();
            match estimate_homography(&pairs) {
                Ok(h) => {
                    g.homography = Some(h);
                    Some(g)
                }
                Err(e) => {
                    log::warn!("dropping planar group {}: {e}", g.id);
                    None
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Correct { group_id: usize, error: f64 },
    /// `min_error` is `None` when no group yields a finite prediction.
    Incorrect { min_error: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchVerdict {
    pub match_index: usize,
    pub verdict: Verdict,
}

impl MatchVerdict {
    pub fn is_correct(&self) -> bool {
        matches!(self.verdict, Verdict::Correct { .. })
    }

    pub fn group_id(&self) -> Option<usize> {
        match self.verdict {
            Verdict::Correct { group_id, .. } => Some(group_id),
            Verdict::Incorrect { .. } => None,
        }
    }
}

/// Reprojection error of `(p1, p2)` under `h`; infinite if `p1` maps to infinity.
pub fn reprojection_error(h: &Homography, p1: Vec2, p2: Vec2) -> f64 {
    h.apply(p1).map_or(f64::INFINITY, |q| q.distance(p2))
}

/// One verdict per match, in match order. The group with the smallest
/// reprojection error wins; exact ties go to the lower group id.
pub fn classify_matches(
    ms: &MatchSet,
    groups: &[PlanarGroup],
    pixel_threshold: f64,
) -> Vec<MatchVerdict> {
    let mut fitted: Vec<(usize, Homography)> = groups
        .iter()
        .filter_map(|g| g.homography.map(|h| (g.id, h)))
        .collect();
    fitted.sort_by_key(|(id, _)| *id);

    ms.matches()
        .par_iter()
        .enumerate()
        .map(|(match_index, m)| {
            let mut best: Option<(usize, f64)> = None;
            for (id, h) in &fitted {
                let err = reprojection_error(h, m.p1, m.p2);
                if err.is_finite() && best.is_none_or(|(_, e)| err < e) {
                    best = Some((*id, err));
                }
            }
            let verdict = match best {
                Some((group_id, error)) if error <= pixel_threshold => {
                    Verdict::Correct { group_id, error }
                }
                Some((_, error)) => Verdict::Incorrect {
                    min_error: Some(error),
                },
                None => Verdict::Incorrect { min_error: None },
            };
            MatchVerdict {
                match_index,
                verdict,
            }
        })
        .collect()
}
