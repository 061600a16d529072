//! Planar projective primitives: points, pentagons and the five-point cross-ratio.
//!
//! A pentagon's cross-ratio with respect to one of its vertices is built from
//! four scalar 2D cross products of position vectors measured from that vertex.
//! Every vertex appears equally often in the numerator and the denominator, so
//! the ratio survives any non-degenerate homography applied to all five points.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for vanishing cross products, scaled by the squared
/// pentagon diameter.
pub const COLLINEAR_REL_TOL: f64 = 1e-9;

/// Relative tolerance for vertex distinctness, scaled by the image diagonal.
pub const SEPARATION_REL_TOL: f64 = 1e-6;

/// Number of gate evaluations performed by one pentagon shape comparison.
pub const GATES_PER_SHAPE_MATCH: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("coordinate is not finite")]
    NonFinite,
}

pub type GeometryResult<T> = Result<T, GeometryError>;

/// A point or position vector in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Scalar (z-component) cross product.
    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl From<(f64, f64)> for Vec2 {
    fn from((x, y): (f64, f64)) -> Self {
        Vec2::new(x, y)
    }
}

/// Largest pairwise distance among `points`.
pub fn diameter(points: &[Vec2]) -> f64 {
    let mut best = 0.0_f64;
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i + 1..] {
            best = best.max(p.distance(q));
        }
    }
    best
}

pub fn centroid(points: &[Vec2]) -> Vec2 {
    let n = points.len().max(1) as f64;
    let sum = points.iter().fold(Vec2::default(), |acc, &p| acc + p);
    sum * (1.0 / n)
}

/// Cross-product magnitude below which a configuration of the given diameter
/// is treated as collinear.
pub fn collinear_tolerance(diameter: f64) -> f64 {
    COLLINEAR_REL_TOL * diameter * diameter
}

/// Minimum vertex separation for an image with the given diagonal.
pub fn separation_tolerance(image_diagonal: f64) -> f64 {
    SEPARATION_REL_TOL * image_diagonal
}

/// Cross-ratio of `a, b, c, d` seen from origin `o`:
/// `|a×c|·|b×d| / (|b×c|·|a×d|)` with every operand taken relative to `o`.
///
/// The collinearity tolerance is derived from the diameter of the five points.
pub fn cross_ratio(o: Vec2, a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> GeometryResult<f64> {
    let pts = [o, a, b, c, d];
    if pts.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    cross_ratio_with_tolerance(o, a, b, c, d, collinear_tolerance(diameter(&pts)))
}

pub(crate) fn cross_ratio_with_tolerance(
    o: Vec2,
    a: Vec2,
    b: Vec2,
    c: Vec2,
    d: Vec2,
    eps: f64,
) -> GeometryResult<f64> {
    let (a, b, c, d) = (a - o, b - o, c - o, d - o);
    let ac = a.cross(c).abs();
    let bd = b.cross(d).abs();
    let bc = b.cross(c).abs();
    let ad = a.cross(d).abs();
    // Any vanishing term means o is collinear with two of the operands.
    if ac < eps || bd < eps || bc < eps || ad < eps {
        return Err(GeometryError::DegenerateConfiguration(
            "origin collinear with two operands",
        ));
    }
    let value = (ac * bd) / (bc * ad);
    if !value.is_finite() {
        return Err(GeometryError::DegenerateConfiguration("non-finite cross-ratio"));
    }
    Ok(value)
}

/// Permutation that orders five points by polar angle around their centroid.
///
/// `order[k]` is the input position of the k-th canonical vertex. Angles are
/// measured with `atan2` in `(-π, π]`; exact ties fall back to input position.
pub fn canonical_order(points: &[Vec2; 5]) -> [usize; 5] {
    let c = centroid(points);
    let angles = points.map(|p| (p.y - c.y).atan2(p.x - c.x));
    let mut order = [0, 1, 2, 3, 4];
    order.sort_by(|&i, &j| angles[i].total_cmp(&angles[j]).then(i.cmp(&j)));
    order
}

/// Five vertices in a fixed order, pairwise separated and with no three
/// (nearly) collinear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pentagon {
    vertices: [Vec2; 5],
}

impl Pentagon {
    /// Validates `vertices` in the order given. `min_separation` is the
    /// smallest admissible distance between two vertices.
    pub fn new(vertices: [Vec2; 5], min_separation: f64) -> GeometryResult<Self> {
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        for i in 0..5 {
            for j in i + 1..5 {
                if vertices[i].distance(vertices[j]) < min_separation {
                    return Err(GeometryError::DegenerateConfiguration(
                        "vertices closer than the separation tolerance",
                    ));
                }
            }
        }
        let eps = collinear_tolerance(diameter(&vertices));
        for i in 0..5 {
            for j in i + 1..5 {
                for k in j + 1..5 {
                    let area2 = (vertices[j] - vertices[i]).cross(vertices[k] - vertices[i]);
                    if area2.abs() < eps {
                        return Err(GeometryError::DegenerateConfiguration(
                            "three vertices are collinear",
                        ));
                    }
                }
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Vec2; 5] {
        &self.vertices
    }

    pub fn centroid(&self) -> Vec2 {
        centroid(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        diameter(&self.vertices)
    }

    pub fn cross_ratios(&self) -> GeometryResult<CrossRatioVector> {
        pentagon_cross_ratios(self)
    }
}

/// One cross-ratio per vertex taken as origin, in canonical vertex order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossRatioVector(pub [f64; 5]);

impl CrossRatioVector {
    pub fn values(&self) -> &[f64; 5] {
        &self.0
    }
}

/// With vertex `i` as origin, the operands `a, b, c, d` are vertices
/// `i+1 .. i+4` (mod 5).
pub fn pentagon_cross_ratios(p: &Pentagon) -> GeometryResult<CrossRatioVector> {
    let v = &p.vertices;
    let eps = collinear_tolerance(p.diameter());
    let mut out = [0.0; 5];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = cross_ratio_with_tolerance(
            v[i],
            v[(i + 1) % 5],
            v[(i + 2) % 5],
            v[(i + 3) % 5],
            v[(i + 4) % 5],
            eps,
        )?;
    }
    Ok(CrossRatioVector(out))
}

#[cfg(debug_assertions)]
static GATE_CALLS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

/// Process-wide number of [`cr_gate`] calls so far. Only tracked in builds
/// with debug assertions; always 0 otherwise.
pub fn gate_call_count() -> u64 {
    #[cfg(debug_assertions)]
    {
        GATE_CALLS.load(std::sync::atomic::Ordering::Relaxed)
    }
    #[cfg(not(debug_assertions))]
    {
        0
    }
}

/// `|cr − cr'| / (cr + cr') ≤ tau`.
#[inline]
pub fn cr_gate(cr: f64, cr_prime: f64, tau: f64) -> bool {
    #[cfg(debug_assertions)]
    GATE_CALLS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    debug_assert!(cr > 0.0 && cr_prime > 0.0, "cross-ratios must be positive");
    debug_assert!(tau > 0.0 && tau < 1.0, "tau must lie in (0, 1)");
    (cr - cr_prime).abs() / (cr + cr_prime) <= tau
}

/// Gates all five entry pairs; every gate is evaluated even after a failure
/// so the evaluation count is always [`GATES_PER_SHAPE_MATCH`].
pub fn cross_ratios_match(a: &CrossRatioVector, b: &CrossRatioVector, tau: f64) -> bool {
    a.0.iter()
        .zip(b.0.iter())
        .fold(true, |ok, (&x, &y)| cr_gate(x, y, tau) & ok)
}

/// Whether `p2` is a projective image of `p1` vertex for vertex, up to `tau`.
pub fn pentagons_shape_match(p1: &Pentagon, p2: &Pentagon, tau: f64) -> GeometryResult<bool> {
    let a = pentagon_cross_ratios(p1)?;
    let b = pentagon_cross_ratios(p2)?;
    Ok(cross_ratios_match(&a, &b, tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn regular_pentagon(radius: f64, phase: f64) -> [Vec2; 5] {
        std::array::from_fn(|k| {
            let t = phase + k as f64 * std::f64::consts::TAU / 5.0;
            Vec2::new(radius * t.cos(), radius * t.sin())
        })
    }

    // Independent of the crate's Homography type on purpose.
    fn project(h: &[[f64; 3]; 3], p: Vec2) -> Vec2 {
        let w = h[2][0] * p.x + h[2][1] * p.y + h[2][2];
        Vec2::new(
            (h[0][0] * p.x + h[0][1] * p.y + h[0][2]) / w,
            (h[1][0] * p.x + h[1][1] * p.y + h[1][2]) / w,
        )
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    #[test]
    fn cross_ratio_hand_example() {
        let v = cross_ratio(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 1.0),
        )
        .unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn cross_ratio_scale_invariant() {
        let pts = [(0.3, -0.2), (1.0, 0.1), (1.2, 1.1), (0.1, 0.9), (-1.0, 1.3)].map(Vec2::from);
        let a = cross_ratio(pts[0], pts[1], pts[2], pts[3], pts[4]).unwrap();
        let s = pts.map(|p| p * 2.0);
        let b = cross_ratio(s[0], s[1], s[2], s[3], s[4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cross_ratio_rejects_collinear_origin() {
        let err = cross_ratio(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.5, 2.0),
            Vec2::new(-0.7, 1.0),
            Vec2::new(2.0, 0.0),
        )
        .unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateConfiguration(_)));
    }

    #[test]
    fn cross_ratio_rejects_nan() {
        let r = cross_ratio(
            Vec2::new(f64::NAN, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 1.0),
        );
        assert_eq!(r, Err(GeometryError::NonFinite));
    }

    #[test]
    fn regular_pentagon_has_equal_entries() {
        let p = Pentagon::new(regular_pentagon(1.0, 0.0), 1e-9).unwrap();
        let cr = p.cross_ratios().unwrap();
        for v in cr.values() {
            assert!(rel_err(*v, cr.0[0]) < 1e-12, "{cr:?}");
        }
    }

    #[test]
    fn regular_pentagon_under_homography() {
        let h = [[0.9, 0.2, 3.0], [-0.15, 1.1, -2.0], [0.05, -0.03, 1.0]];
        let p = Pentagon::new(regular_pentagon(1.0, 0.0), 1e-9).unwrap();
        let q = Pentagon::new(p.vertices().map(|v| project(&h, v)), 1e-9).unwrap();
        let (a, b) = (p.cross_ratios().unwrap(), q.cross_ratios().unwrap());
        for k in 0..5 {
            assert!(rel_err(a.0[k], b.0[k]) < 1e-9);
        }
    }

    #[test]
    fn translation_leaves_cross_ratios_unchanged() {
        let pts = [(10.0, 12.0), (40.0, 8.0), (55.0, 30.0), (30.0, 52.0), (5.0, 35.0)].map(Vec2::from);
        let moved = pts.map(|p| p + Vec2::new(100.0, -37.0));
        let a = Pentagon::new(pts, 1e-6).unwrap().cross_ratios().unwrap();
        let b = Pentagon::new(moved, 1e-6).unwrap().cross_ratios().unwrap();
        for k in 0..5 {
            assert!(rel_err(a.0[k], b.0[k]) < 1e-12);
        }
    }

    #[test]
    fn pentagon_rejects_coincident_and_collinear() {
        let mut pts = regular_pentagon(10.0, 0.3);
        pts[3] = pts[1];
        assert!(Pentagon::new(pts, 1e-3).is_err());

        let line = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (5.0, -1.0), (-3.0, 4.0)].map(Vec2::from);
        assert!(Pentagon::new(line, 1e-6).is_err());
    }

    #[test]
    fn gate_examples() {
        assert!(cr_gate(1.0, 1.0, 0.05));
        assert!(cr_gate(1.0, 1.1, 0.05));
        assert!(!cr_gate(1.0, 1.2, 0.05));
    }

    #[test]
    fn shape_match_identity_and_displacement() {
        let pts = [(10.0, 12.0), (40.0, 8.0), (55.0, 30.0), (30.0, 52.0), (5.0, 35.0)].map(Vec2::from);
        let p = Pentagon::new(pts, 1e-6).unwrap();
        assert!(pentagons_shape_match(&p, &p, 0.05).unwrap());

        // 30% of the diameter, pushed outward from the centroid.
        let mut moved = pts;
        let dir = moved[2] - p.centroid();
        moved[2] = moved[2] + dir * (0.3 * p.diameter() / dir.norm());
        let q = Pentagon::new(moved, 1e-6).unwrap();
        let a = p.cross_ratios().unwrap();
        let b = q.cross_ratios().unwrap();
        let worst = (0..5)
            .map(|k| (a.0[k] - b.0[k]).abs() / (a.0[k] + b.0[k]))
            .fold(0.0, f64::max);
        assert!(worst > 0.05, "displacement preserved all cross-ratios: {worst}");
        assert!(!pentagons_shape_match(&p, &q, 0.05).unwrap());
    }

    #[test]
    fn canonical_order_sorts_by_polar_angle() {
        // Listed clockwise from the top; canonical order starts nearest -π.
        let pts = [(0.0, 10.0), (9.0, 3.0), (6.0, -8.0), (-6.0, -8.0), (-9.0, 3.0)].map(Vec2::from);
        assert_eq!(canonical_order(&pts), [3, 2, 1, 0, 4]);
    }

    /// Frozen values for a fixed pentagon; guards the operand-assignment rule.
    #[test]
    fn operand_assignment_regression() {
        let pts = [(0.0, 0.0), (4.0, -1.0), (6.0, 3.0), (2.0, 6.0), (-2.0, 3.0)].map(Vec2::from);
        let cr = Pentagon::new(pts, 1e-6).unwrap().cross_ratios().unwrap();
        let expected = [
            52.0 / 25.0,
            208.0 / 153.0,
            20.0 / 11.0,
            85.0 / 52.0,
            17.0 / 12.0,
        ];
        for k in 0..5 {
            assert!(rel_err(cr.0[k], expected[k]) < 1e-15, "{k}: {}", cr.0[k]);
        }
        // Swapping two operands changes the value (to 25/52).
        let swapped = cross_ratio(pts[0], pts[2], pts[1], pts[3], pts[4]).unwrap();
        assert!(rel_err(swapped, cr.0[0]) > 1e-3);
    }

    fn arb_homography() -> impl Strategy<Value = [[f64; 3]; 3]> {
        (
            -0.5f64..0.5,
            0.6f64..1.6,
            0.6f64..1.6,
            -0.3f64..0.3,
            -50.0f64..50.0,
            -50.0f64..50.0,
            -1e-3f64..1e-3,
            -1e-3f64..1e-3,
        )
            .prop_map(|(rot, sx, sy, shear, tx, ty, px, py)| {
                let (s, c) = rot.sin_cos();
                [
                    [c * sx, -s * sy + shear, tx],
                    [s * sx, c * sy, ty],
                    [px, py, 1.0],
                ]
            })
    }

    fn arb_pentagon() -> impl Strategy<Value = [Vec2; 5]> {
        proptest::array::uniform5((0.0f64..200.0, 0.0f64..200.0))
            .prop_map(|a| a.map(Vec2::from))
            .prop_filter("well-conditioned pentagon", |p| {
                let d = diameter(p);
                let tri_ok = (0..5).all(|i| {
                    (i + 1..5).all(|j| {
                        (j + 1..5).all(|k| ((p[j] - p[i]).cross(p[k] - p[i])).abs() > 1e-2 * d * d)
                    })
                });
                d > 10.0 && tri_ok
            })
    }

    proptest! {
        #[test]
        fn prop_projective_invariance(pts in arb_pentagon(), h in arb_homography()) {
            let p = Pentagon::new(pts, 1e-6).unwrap();
            let q = Pentagon::new(pts.map(|v| project(&h, v)), 1e-6).unwrap();
            let a = p.cross_ratios().unwrap();
            let b = q.cross_ratios().unwrap();
            for k in 0..5 {
                prop_assert!(rel_err(a.0[k], b.0[k]) < 1e-9);
            }
        }

        #[test]
        fn prop_similarity_invariance(
            pts in arb_pentagon(), angle in -3.0f64..3.0, scale in 0.1f64..10.0,
            tx in -500.0f64..500.0, ty in -500.0f64..500.0,
        ) {
            let (s, c) = angle.sin_cos();
            let moved = pts.map(|v| Vec2::new(
                scale * (c * v.x - s * v.y) + tx,
                scale * (s * v.x + c * v.y) + ty,
            ));
            let a = Pentagon::new(pts, 1e-6).unwrap().cross_ratios().unwrap();
            let b = Pentagon::new(moved, 1e-6).unwrap().cross_ratios().unwrap();
            for k in 0..5 {
                prop_assert!(rel_err(a.0[k], b.0[k]) < 1e-12);
            }
        }

        #[test]
        fn prop_gate_symmetric(x in 1e-3f64..1e3, y in 1e-3f64..1e3, tau in 0.001f64..0.5) {
            prop_assert_eq!(cr_gate(x, y, tau), cr_gate(y, x, tau));
        }

        #[test]
        fn prop_gate_accepts_an_interval(x in 1e-2f64..1e2, tau in 0.01f64..0.3, f1 in 0.2f64..5.0, f2 in 0.2f64..5.0) {
            // If x·f1 and x·f2 pass, every point between them passes as well.
            let (lo, hi) = if f1 < f2 { (x * f1, x * f2) } else { (x * f2, x * f1) };
            prop_assert!(cr_gate(x, x, tau));
            if cr_gate(x, lo, tau) && cr_gate(x, hi, tau) {
                for k in 1..10 {
                    let y = lo + (hi - lo) * k as f64 / 10.0;
                    prop_assert!(cr_gate(x, y, tau));
                }
            }
        }
    }
}
