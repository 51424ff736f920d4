//! Row-major 3×3 rotation helpers.
//!
//! Euler angles follow the BVH convention: channels are intrinsic rotations
//! composed left to right in the order they are listed, so a joint declaring
//! `Zrotation Xrotation Yrotation` has `R = Rz · Rx · Ry`.

use nalgebra::Matrix3;

pub type Mat3 = [f64; 9];

pub const IDENTITY: Mat3 = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

/// Rotation of `radians` about axis 0 (X), 1 (Y) or 2 (Z).
pub fn axis_rotation(axis: usize, radians: f64) -> Mat3 {
    axis_matrix(axis, radians.sin_cos())
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
fn sin_cos_degrees(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    match r {
        0.0 => (0.0, 1.0),
        90.0 => (1.0, 0.0),
        180.0 => (0.0, -1.0),
        270.0 => (-1.0, 0.0),
        _ => deg.to_radians().sin_cos(),
    }
}

fn axis_matrix(axis: usize, (s, c): (f64, f64)) -> Mat3 {
    match axis {
        0 => [1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c],
        1 => [c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c],
        2 => [c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0],
        _ => panic!("axis index {axis} out of range"),
    }
}

pub fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = (0..3).map(|k| a[3 * r + k] * b[3 * k + c]).sum();
        }
    }
    out
}

pub fn transpose(a: &Mat3) -> Mat3 {
    [a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]]
}

pub fn apply(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
        a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
        a[6] * v[0] + a[7] * v[1] + a[8] * v[2],
    ]
}

pub fn determinant(a: &Mat3) -> f64 {
    a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
        + a[2] * (a[3] * a[7] - a[4] * a[6])
}

/// Composes intrinsic rotations about `axes` by `degrees`, left to right.
pub fn euler_to_matrix(axes: &[usize], degrees: &[f64]) -> Mat3 {
    axes.iter()
        .zip(degrees)
        .fold(IDENTITY, |acc, (&axis, &deg)| {
            mul(&acc, &axis_matrix(axis, sin_cos_degrees(deg)))
        })
}

/// Inverse of [`euler_to_matrix`] for up to three distinct axes. With fewer
/// than three axes the missing rotations are assumed to be identity.
pub fn matrix_to_euler(axes: &[usize], m: &Mat3) -> Vec<f64> {
    let at = |r: usize, c: usize| m[3 * r + c];
    match axes.len() {
        0 => Vec::new(),
        1 => {
            let i = axes[0];
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            vec![at(k, j).atan2(at(j, j)).to_degrees()]
        }
        n => {
            let (i, j) = (axes[0], axes[1]);
            let k = 3 - i - j;
            // +1 when (i, j, k) is a cyclic permutation of (x, y, z).
            let eps = if (i + 1) % 3 == j { 1.0 } else { -1.0 };
            let cos_beta = at(i, i).hypot(at(i, j));
            let beta = (eps * at(i, k)).atan2(cos_beta);
            let (alpha, gamma) = if n == 2 || cos_beta < 1e-12 {
                ((eps * at(k, j)).atan2(at(j, j)), 0.0)
            } else {
                (
                    (-eps * at(j, k)).atan2(at(k, k)),
                    (-eps * at(i, j)).atan2(at(i, i)),
                )
            };
            let mut out = vec![alpha.to_degrees(), beta.to_degrees()];
            if n == 3 {
                out.push(gamma.to_degrees());
            }
            out
        }
    }
}

/// `max(‖RᵀR − I‖∞, |det R − 1|)`.
pub fn orthonormality_error(m: &Mat3) -> f64 {
    let rtr = mul(&transpose(m), m);
    let mut err: f64 = (determinant(m) - 1.0).abs();
    for (idx, v) in rtr.iter().enumerate() {
        let target = if idx % 4 == 0 { 1.0 } else { 0.0 };
        err = err.max((v - target).abs());
    }
    err
}

/// Nearest rotation in the Frobenius sense (polar factor with det = +1).
pub fn nearest_rotation(m: &Mat3) -> Mat3 {
    let a = Matrix3::from_row_slice(m);
    let svd = a.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return IDENTITY,
    };
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        // Flip the axis of the smallest singular value.
        let smallest = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(2);
        let mut u = u;
        for row in 0..3 {
            u[(row, smallest)] = -u[(row, smallest)];
        }
        r = u * v_t;
    }
    let mut out = [0.0; 9];
    for row in 0..3 {
        for col in 0..3 {
            out[3 * row + col] = r[(row, col)];
        }
    }
    out
}
