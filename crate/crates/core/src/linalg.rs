//! Small fixed-size complex helpers.

use num_complex::Complex64;

pub type C = Complex64;
pub type Vec2 = [C; 2];
/// Row-major 2×2 matrix.
pub type Mat2 = [[C; 2]; 2];

pub const ZERO: C = C::new(0.0, 0.0);
pub const ONE: C = C::new(1.0, 0.0);
pub const I: C = C::new(0.0, 1.0);

pub fn eye() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut r = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

pub fn mat_vec(a: &Mat2, v: &Vec2) -> Vec2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn det(a: &Mat2) -> C {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn inv(a: &Mat2) -> Mat2 {
    let d = det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

pub fn conj(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[0][1].conj()], [a[1][0].conj(), a[1][1].conj()]]
}

pub fn sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

pub fn scale(a: &Mat2, s: C) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

/// Max-entry norm.
pub fn norm_max(a: &Mat2) -> f64 {
    a.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn sigma1() -> Mat2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn sigma2() -> Mat2 {
    [[ZERO, -I], [I, ZERO]]
}

pub fn sigma3() -> Mat2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

/// diag(e^{a}, e^{−a}) = e^{aσ₃}.
pub fn exp_sigma3(a: C) -> Mat2 {
    [[a.exp(), ZERO], [ZERO, (-a).exp()]]
}

/// Q = [[0, q], [q̄, 0]].
pub fn q_matrix(q: C) -> Mat2 {
    [[ZERO, q], [q.conj(), ZERO]]
}

/// Y(z) = I + σ₃Q/z.
pub fn y_matrix(q: C, z: C) -> Mat2 {
    [[ONE, q / z], [-q.conj() / z, ONE]]
}

/// Wronskian det[a | b] of two column vectors.
pub fn wronskian(a: &Vec2, b: &Vec2) -> C {
    a[0] * b[1] - a[1] * b[0]
}
