//! Vectors, rotations, spherical coordinates and lines tangent to the unit sphere.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Rotation3, Unit, Vector3};
use serde::Serialize;

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Lines with `|<τ', τ''>|` above this are treated as parallel.
pub const PARALLEL_THRESHOLD: f64 = 1.0 - 1e-10;

/// Distance from the poles below which the (φ, κ, α) chart is refused.
pub const POLE_MARGIN: f64 = 1e-6;

/// Latitude / longitude on the unit sphere, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpherePoint {
    pub phi: f64,
    pub kappa: f64,
}

impl SpherePoint {
    /// Longitude is wrapped into `[0, 2π)`.
    pub fn new(phi: f64, kappa: f64) -> Result<Self> {
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&phi) {
            return Err(Error::Domain(format!("latitude {phi} outside [-π/2, π/2]")));
        }
        Ok(SpherePoint { phi, kappa: wrap_angle(kappa, TAU) })
    }

    pub fn from_vector(v: &Vec3) -> Result<Self> {
        let n = v.norm();
        if n < 1e-300 {
            return Err(Error::Domain("zero vector has no direction".into()));
        }
        let u = v / n;
        SpherePoint::new(u.z.clamp(-1.0, 1.0).asin(), u.y.atan2(u.x))
    }

    pub fn embed(&self) -> Vec3 {
        let (sp, cp) = self.phi.sin_cos();
        let (sk, ck) = self.kappa.sin_cos();
        Vec3::new(cp * ck, cp * sk, sp)
    }

    fn check_chart(&self) -> Result<()> {
        if self.phi.abs() >= FRAC_PI_2 - POLE_MARGIN {
            return Err(Error::Chart(format!("latitude {} too close to a pole", self.phi)));
        }
        Ok(())
    }

    /// North-pointing unit tangent ↑ at the point.
    pub fn up(&self) -> Result<Vec3> {
        self.check_chart()?;
        let (sp, cp) = self.phi.sin_cos();
        let (sk, ck) = self.kappa.sin_cos();
        Ok(Vec3::new(-sp * ck, -sp * sk, cp))
    }

    /// East-pointing unit tangent at the point.
    pub fn east(&self) -> Result<Vec3> {
        self.check_chart()?;
        let (sk, ck) = self.kappa.sin_cos();
        Ok(Vec3::new(-sk, ck, 0.0))
    }
}

fn wrap_angle(a: f64, period: f64) -> f64 {
    let r = a.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Rodrigues rotation of `v` by `angle` about `axis`, counterclockwise seen from the axis tip.
pub fn rotate_about_axis(axis: &Vec3, angle: f64, v: &Vec3) -> Result<Vec3> {
    if (axis.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("rotation axis has norm {}", axis.norm())));
    }
    let (s, c) = angle.sin_cos();
    Ok(v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c)))
}

/// Direction of the line through `point` whose angle from ↑ is `alpha`,
/// measured from north towards east: `τ = cos α · ↑ + sin α · east`.
pub fn line_direction(point: &SpherePoint, alpha: f64) -> Result<Vec3> {
    let (s, c) = alpha.sin_cos();
    Ok(point.up()? * c + point.east()? * s)
}

/// Unoriented line tangent to the unit sphere.
///
/// Stored as touch point and unit direction in R³, which keeps lines through
/// the poles representable; the (φ, κ, α) chart is available away from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentLine {
    x: Vec3,
    tau: Vec3,
}

impl TangentLine {
    pub fn new(point: SpherePoint, alpha: f64) -> Result<Self> {
        Ok(TangentLine { x: point.embed(), tau: line_direction(&point, alpha)? })
    }

    pub fn from_angles(phi: f64, kappa: f64, alpha: f64) -> Result<Self> {
        TangentLine::new(SpherePoint::new(phi, kappa)?, alpha)
    }

    /// Pole-safe constructor. `point` is normalized and `direction` is projected onto
    /// the tangent plane at it.
    pub fn from_vectors(point: Vec3, direction: Vec3) -> Result<Self> {
        let n = point.norm();
        if !(n > 1e-12) || !n.is_finite() {
            return Err(Error::Domain("touch point must be a nonzero finite vector".into()));
        }
        let x = point / n;
        let t = direction - x * x.dot(&direction);
        let tn = t.norm();
        if !(tn > 1e-12 * direction.norm().max(1e-300)) {
            return Err(Error::Domain("direction is not transverse to the radius".into()));
        }
        Ok(TangentLine { x, tau: t / tn })
    }

    pub fn point(&self) -> Vec3 {
        self.x
    }

    pub fn direction(&self) -> Vec3 {
        self.tau
    }

    pub fn sphere_point(&self) -> SpherePoint {
        SpherePoint::from_vector(&self.x).expect("touch point is a unit vector")
    }

    /// Canonical chart angle in `[0, π)`.
    pub fn alpha(&self) -> Result<f64> {
        let p = self.sphere_point();
        let a = self.tau.dot(&p.east()?).atan2(self.tau.dot(&p.up()?));
        Ok(wrap_angle(a, PI))
    }

    pub fn rotated(&self, r: &Rotation3<f64>) -> Self {
        TangentLine { x: r * self.x, tau: r * self.tau }
    }

    /// Same line with its direction turned by `angle` about the radius through the touch point.
    pub fn twisted(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let tau = self.tau * c + self.x.cross(&self.tau) * s;
        TangentLine { x: self.x, tau: tau.normalize() }
    }

    /// Same unoriented line up to `tol` in point and direction.
    pub fn same_line(&self, other: &TangentLine, tol: f64) -> bool {
        (self.x - other.x).norm() <= tol
            && ((self.tau - other.tau).norm() <= tol || (self.tau + other.tau).norm() <= tol)
    }

    /// Point on the line at parameter `s`.
    pub fn at(&self, s: f64) -> Vec3 {
        self.x + self.tau * s
    }
}

/// Euclidean distance between two infinite lines.
pub fn line_distance(u: &TangentLine, v: &TangentLine) -> f64 {
    let delta = v.x - u.x;
    let c = u.tau.dot(&v.tau);
    if c.abs() > PARALLEL_THRESHOLD {
        return (delta - u.tau * delta.dot(&u.tau)).norm();
    }
    let n = u.tau.cross(&v.tau);
    n.dot(&delta).abs() / n.norm()
}

/// Parameters `(s, t)` of the closest points `u.at(s)`, `v.at(t)`; `None` for parallel lines.
pub fn closest_parameters(u: &TangentLine, v: &TangentLine) -> Option<(f64, f64)> {
    let c = u.tau.dot(&v.tau);
    if c.abs() > PARALLEL_THRESHOLD {
        return None;
    }
    let w = u.x - v.x;
    let d = u.tau.dot(&w);
    let e = v.tau.dot(&w);
    let den = 1.0 - c * c;
    Some(((c * e - d) / den, (e - c * d) / den))
}

/// Midpoint of the common perpendicular of two non-parallel lines.
pub fn closest_midpoint(u: &TangentLine, v: &TangentLine) -> Option<Vec3> {
    closest_parameters(u, v).map(|(s, t)| (u.at(s) + v.at(t)) * 0.5)
}

/// Touching radius of two equal cylinders whose axes are `d` apart and which touch the unit ball.
pub fn cyl_radius_from_distance(d: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&d) {
        return Err(Error::Domain(format!("distance {d} outside [0, 2)")));
    }
    Ok(d / (2.0 - d))
}

pub fn distance_from_radius(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("radius {r} is negative")));
    }
    Ok(2.0 * r / (1.0 + r))
}

/// Radius at which two equal balls touching the unit ball, with touch points at
/// central angle `theta`, also touch each other.
pub fn ball_radius_from_angle(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(Error::Domain(format!("angle {theta} outside (0, π]")));
    }
    let s = (theta / 2.0).sin();
    if s >= 1.0 {
        return Err(Error::Domain("antipodal touch points admit no finite radius".into()));
    }
    Ok(s / (1.0 - s))
}

/// Central angle of two unit vectors, stable at both ends.
pub fn central_angle(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

pub fn axis_rotation(axis: &Vec3, angle: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_6;

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn rodrigues_examples() {
        let z = Vec3::z();
        assert!(close(&rotate_about_axis(&z, FRAC_PI_2, &Vec3::x()).unwrap(), &Vec3::y(), 1e-15));
        let a = Vec3::new(0.3, -0.4, 0.5).normalize();
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert!(close(&rotate_about_axis(&a, 0.0, &v).unwrap(), &v, 1e-15));
        let r = rotate_about_axis(&Vec3::x(), PI, &Vec3::y()).unwrap();
        assert!(close(&r, &-Vec3::y(), 1e-15));
        assert!(rotate_about_axis(&Vec3::new(1.0, 1.0, 0.0), 1.0, &v).is_err());
    }

    #[test]
    fn direction_examples() {
        let d = line_direction(&SpherePoint::new(0.0, 0.0).unwrap(), 0.0).unwrap();
        assert!(close(&d, &Vec3::z(), 1e-15));
        let d = line_direction(&SpherePoint::new(0.0, FRAC_PI_2).unwrap(), 0.0).unwrap();
        assert!(close(&d, &Vec3::z(), 1e-15));
        let d = line_direction(&SpherePoint::new(0.0, 0.0).unwrap(), FRAC_PI_2).unwrap();
        assert!(close(&d, &Vec3::y(), 1e-15) || close(&d, &-Vec3::y(), 1e-15));
        assert!(line_direction(&SpherePoint::new(FRAC_PI_2, 0.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn distance_examples() {
        let u = TangentLine::from_angles(0.0, FRAC_PI_6, 0.0).unwrap();
        let v = TangentLine::from_angles(0.0, FRAC_PI_2, 0.0).unwrap();
        assert!((line_distance(&u, &v) - 1.0).abs() < 1e-14);
        assert_eq!(line_distance(&u, &u), 0.0);
        let a = TangentLine::from_vectors(Vec3::z(), Vec3::x()).unwrap();
        let b = TangentLine::from_vectors(-Vec3::z(), Vec3::y()).unwrap();
        assert!((line_distance(&a, &b) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn radius_examples() {
        assert!((cyl_radius_from_distance(1.0).unwrap() - 1.0).abs() < 1e-15);
        let r = cyl_radius_from_distance((12.0f64 / 11.0).sqrt()).unwrap();
        assert!((r - (3.0 + 33f64.sqrt()) / 8.0).abs() < 1e-12);
        assert_eq!(cyl_radius_from_distance(0.0).unwrap(), 0.0);
        assert!(cyl_radius_from_distance(2.0).is_err());
        assert!((distance_from_radius(1.0 + 2f64.sqrt()).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(distance_from_radius(0.0).unwrap(), 0.0);
        assert!((distance_from_radius(1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ball_radius_examples() {
        let s3 = 3f64.sqrt();
        assert!((ball_radius_from_angle(2.0 * PI / 3.0).unwrap() - s3 / (2.0 - s3)).abs() < 1e-12);
        assert!((ball_radius_from_angle(PI / 3.0).unwrap() - 1.0).abs() < 1e-15);
        let s2 = 2f64.sqrt();
        let necklace = (s3 - 1.0) / (2.0 * s2 - s3 + 1.0);
        assert!((ball_radius_from_angle(FRAC_PI_6).unwrap() - necklace).abs() < 1e-12);
        let r12 = ball_radius_from_angle((1.0 / 5f64.sqrt()).acos()).unwrap();
        assert!((r12 - 1.1085085).abs() < 1e-6);
        assert!(ball_radius_from_angle(PI).is_err());
        assert!(ball_radius_from_angle(0.0).is_err());
    }

    #[test]
    fn alpha_round_trip_and_canonical_range() {
        let l = TangentLine::from_angles(0.4, 2.0, 2.5).unwrap();
        assert!((l.alpha().unwrap() - 2.5).abs() < 1e-12);
        let flipped = TangentLine::from_angles(0.4, 2.0, 2.5 + PI).unwrap();
        assert!((flipped.alpha().unwrap() - 2.5).abs() < 1e-12);
        let m = TangentLine::from_angles(0.4, 2.0, 3.5).unwrap();
        assert!((m.alpha().unwrap() - (3.5 - PI)).abs() < 1e-12);
        let polar = TangentLine::from_vectors(Vec3::z(), Vec3::x()).unwrap();
        assert!(matches!(polar.alpha(), Err(Error::Chart(_))));
    }

    fn tangent_line() -> impl Strategy<Value = TangentLine> {
        (-1.5f64..1.5, 0.0..TAU, 0.0..PI)
            .prop_map(|(p, k, a)| TangentLine::from_angles(p, k, a).unwrap())
    }

    fn rotation() -> impl Strategy<Value = Rotation3<f64>> {
        (-PI..PI, -PI..PI, -PI..PI).prop_map(|(a, b, c)| Rotation3::from_euler_angles(a, b, c))
    }

    proptest! {
        #[test]
        fn embed_is_unit(phi in -FRAC_PI_2..FRAC_PI_2, kappa in -10.0f64..10.0) {
            let p = SpherePoint::new(phi, kappa).unwrap();
            prop_assert!((p.embed().norm() - 1.0).abs() < 1e-12);
            prop_assert!((0.0..TAU).contains(&p.kappa));
        }

        #[test]
        fn direction_unit_and_tangent(l in tangent_line()) {
            prop_assert!((l.direction().norm() - 1.0).abs() < 1e-12);
            prop_assert!(l.direction().dot(&l.point()).abs() < 1e-12);
        }

        #[test]
        fn distance_symmetric_and_unoriented(u in tangent_line(), v in tangent_line()) {
            let d = line_distance(&u, &v);
            prop_assert!((d - line_distance(&v, &u)).abs() < 1e-12);
            prop_assert!((d - line_distance(&u.twisted(PI), &v)).abs() < 1e-12);
        }

        #[test]
        fn distance_rotation_invariant(u in tangent_line(), v in tangent_line(), r in rotation()) {
            let d = line_distance(&u, &v);
            let e = line_distance(&u.rotated(&r), &v.rotated(&r));
            prop_assert!((d - e).abs() < 1e-10);
        }

        #[test]
        fn radius_round_trip(r in 0.0f64..10.0) {
            let d = distance_from_radius(r).unwrap();
            prop_assert!((cyl_radius_from_distance(d).unwrap() - r).abs() < 1e-12);
        }

        #[test]
        fn ball_radius_increasing(a in 1e-3f64..3.1, b in 1e-3f64..3.1) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(ball_radius_from_angle(lo).unwrap() < ball_radius_from_angle(hi).unwrap());
        }

        #[test]
        fn rodrigues_is_orthogonal(ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0,
                                   angle in -PI..PI) {
            let axis = Vec3::new(ax, ay, az).normalize();
            let cols: Vec<Vec3> = [Vec3::x(), Vec3::y(), Vec3::z()]
                .iter().map(|e| rotate_about_axis(&axis, angle, e).unwrap()).collect();
            let m = nalgebra::Matrix3::from_columns(&cols);
            prop_assert!((m.transpose() * m - nalgebra::Matrix3::identity()).norm() < 1e-12);
            prop_assert!((m.determinant() - 1.0).abs() < 1e-12);
        }
    }
}
