//! Small 2D helpers shared across the crate.

use nalgebra::Vector2;

/// 2-vector of f64; positions, displacements and unit vectors all use this.
pub type Vec2 = Vector2<f64>;

/// Clockwise rotation by pi/2: maps (1,0) to (0,-1).
///
/// This is the matrix K = [[0,1],[-1,0]] applied to `v`.
pub fn rotate_cw(v: Vec2) -> Vec2 {
    Vec2::new(v.y, -v.x)
}

/// 2x2 determinant of the matrix with columns `a`, `b`.
pub fn det2(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Euclidean distance from `v` to the line through the origin spanned by the
/// unit vector `q`.
pub fn distance_to_line(v: Vec2, q: Vec2) -> f64 {
    (v - (v.dot(&q)) * q).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rotate_cw_maps_x_to_minus_y() {
        let r = rotate_cw(Vec2::new(1.0, 0.0));
        assert_eq!(r, Vec2::new(0.0, -1.0));
        let r = rotate_cw(Vec2::new(0.0, 1.0));
        assert_eq!(r, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn line_distance_of_perpendicular_vector_is_its_norm() {
        let q = Vec2::new(1.0, 0.0);
        let v = Vec2::new(0.0, 2.5);
        assert_relative_eq!(distance_to_line(v, q), 2.5, epsilon = 1e-15);
        assert_relative_eq!(distance_to_line(Vec2::new(3.0, 0.0), q), 0.0, epsilon = 1e-15);
    }
}
