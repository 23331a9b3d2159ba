//! Real spherical harmonics up to degree 3 for view-dependent color.
//!
//! Coefficients are laid out basis-major: `coeffs[k * 3 + channel]`, with
//! `k` running over `(degree + 1)²` basis functions in the usual order.
//! The basis carries the Condon–Shortley phase, which is why several
//! band-1 and band-3 constants are negative.

use super::{GaussError, Vec3};

pub const MAX_SH_DEGREE: usize = 3;
pub const MAX_SH_BASIS: usize = 16;

const C0: f64 = 0.282_094_791_773_878_14;
const C1: f64 = 0.488_602_511_902_919_9;
const C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// DC basis value, `Y₀₀`.
pub const SH_DC: f64 = C0;

/// Number of basis functions for `degree`.
pub const fn basis_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

pub fn check_degree(degree: usize) -> Result<(), GaussError> {
    if degree > MAX_SH_DEGREE {
        return Err(GaussError::UnsupportedShDegree(degree));
    }
    Ok(())
}

/// Basis values at `dir`; entries past `basis_count(degree)` are zero.
pub fn sh_basis(degree: usize, dir: &Vec3) -> [f64; MAX_SH_BASIS] {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let mut b = [0.0; MAX_SH_BASIS];
    b[0] = C0;
    if degree >= 1 {
        b[1] = -C1 * y;
        b[2] = C1 * z;
        b[3] = -C1 * x;
    }
    if degree >= 2 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        b[4] = C2[0] * x * y;
        b[5] = C2[1] * y * z;
        b[6] = C2[2] * (2.0 * zz - xx - yy);
        b[7] = C2[3] * x * z;
        b[8] = C2[4] * (xx - yy);
        if degree >= 3 {
            b[9] = C3[0] * y * (3.0 * xx - yy);
            b[10] = C3[1] * x * y * z;
            b[11] = C3[2] * y * (4.0 * zz - xx - yy);
            b[12] = C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
            b[13] = C3[4] * x * (4.0 * zz - xx - yy);
            b[14] = C3[5] * z * (xx - yy);
            b[15] = C3[6] * x * (xx - 3.0 * yy);
        }
    }
    b
}

/// Partial derivatives of every basis function with respect to the raw
/// components of `dir`.
pub(crate) fn sh_basis_grad(degree: usize, dir: &Vec3) -> [[f64; 3]; MAX_SH_BASIS] {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let mut g = [[0.0; 3]; MAX_SH_BASIS];
    if degree >= 1 {
        g[1] = [0.0, -C1, 0.0];
        g[2] = [0.0, 0.0, C1];
        g[3] = [-C1, 0.0, 0.0];
    }
    if degree >= 2 {
        g[4] = [C2[0] * y, C2[0] * x, 0.0];
        g[5] = [0.0, C2[1] * z, C2[1] * y];
        g[6] = [-2.0 * C2[2] * x, -2.0 * C2[2] * y, 4.0 * C2[2] * z];
        g[7] = [C2[3] * z, 0.0, C2[3] * x];
        g[8] = [2.0 * C2[4] * x, -2.0 * C2[4] * y, 0.0];
        if degree >= 3 {
            let (xx, yy, zz) = (x * x, y * y, z * z);
            g[9] = [C3[0] * 6.0 * x * y, C3[0] * (3.0 * xx - 3.0 * yy), 0.0];
            g[10] = [C3[1] * y * z, C3[1] * x * z, C3[1] * x * y];
            g[11] = [
                -2.0 * C3[2] * x * y,
                C3[2] * (4.0 * zz - xx - 3.0 * yy),
                8.0 * C3[2] * y * z,
            ];
            g[12] = [
                -6.0 * C3[3] * x * z,
                -6.0 * C3[3] * y * z,
                C3[3] * (6.0 * zz - 3.0 * xx - 3.0 * yy),
            ];
            g[13] = [
                C3[4] * (4.0 * zz - 3.0 * xx - yy),
                -2.0 * C3[4] * x * y,
                8.0 * C3[4] * x * z,
            ];
            g[14] = [2.0 * C3[5] * x * z, -2.0 * C3[5] * y * z, C3[5] * (xx - yy)];
            g[15] = [C3[6] * (3.0 * xx - 3.0 * yy), -6.0 * C3[6] * x * y, 0.0];
        }
    }
    g
}

/// Unclamped color: basis expansion plus the 0.5 offset.
pub(crate) fn sh_raw_color(coeffs: &[f64], degree: usize, dir: &Vec3) -> [f64; 3] {
    let basis = sh_basis(degree, dir);
    let mut rgb = [0.5; 3];
    for (k, b) in basis.iter().take(basis_count(degree)).enumerate() {
        for (c, out) in rgb.iter_mut().enumerate() {
            *out += b * coeffs[k * 3 + c];
        }
    }
    rgb
}

/// Evaluates view-dependent RGB in `[0, 1]`.
pub fn sh_to_color(coeffs: &[f64], degree: usize, view_dir: &Vec3) -> Result<[f64; 3], GaussError> {
    check_degree(degree)?;
    let expected = basis_count(degree) * 3;
    if coeffs.len() != expected {
        return Err(GaussError::ShCoefficientCount { expected, got: coeffs.len() });
    }
    Ok(sh_raw_color(coeffs, degree, view_dir).map(|c| c.clamp(0.0, 1.0)))
}

/// Degree implied by a coefficient count, if the count is valid.
pub fn degree_for_len(len: usize) -> Option<usize> {
    (0..=MAX_SH_DEGREE).find(|&d| basis_count(d) * 3 == len)
}

/// DC coefficient that produces `color` for every view direction.
pub fn dc_for_color(color: f64) -> f64 {
    (color - 0.5) / C0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Associated Legendre `P_l^m(x)` including the Condon–Shortley phase.
    fn legendre(l: u32, m: u32, x: f64) -> f64 {
        let mut pmm = 1.0;
        let s = (1.0 - x * x).max(0.0).sqrt();
        for i in 0..m {
            pmm *= -(2.0 * f64::from(i) + 1.0) * s;
        }
        if l == m {
            return pmm;
        }
        let mut pmm1 = x * (2.0 * f64::from(m) + 1.0) * pmm;
        for ll in (m + 2)..=l {
            let llf = f64::from(ll);
            let mf = f64::from(m);
            let next = ((2.0 * llf - 1.0) * x * pmm1 - (llf + mf - 1.0) * pmm) / (llf - mf);
            pmm = pmm1;
            pmm1 = next;
        }
        pmm1
    }

    /// Real SH from spherical coordinates, independent of the polynomial table.
    fn real_sh(l: u32, m: i32, dir: &Vec3) -> f64 {
        let theta = dir.z.clamp(-1.0, 1.0).acos();
        let phi = dir.y.atan2(dir.x);
        let am = m.unsigned_abs();
        let k = ((2.0 * f64::from(l) + 1.0) / (4.0 * std::f64::consts::PI) * factorial(l - am)
            / factorial(l + am))
        .sqrt();
        let p = legendre(l, am, theta.cos());
        match m.cmp(&0) {
            std::cmp::Ordering::Equal => k * p,
            std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * k * (f64::from(m) * phi).cos() * p,
            std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * k * (f64::from(am) * phi).sin() * p,
        }
    }

    #[test]
    fn degree_zero_is_constant() {
        let c0 = 0.7;
        let coeffs = [c0, -0.2, 3.0];
        let a = sh_to_color(&coeffs, 0, &Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let b = sh_to_color(&coeffs, 0, &Vec3::new(0.6, -0.8, 0.0)).unwrap();
        assert_eq!(a, b);
        assert!((a[0] - (c0 * C0 + 0.5)).abs() < 1e-15);
        assert!((a[1] - (-0.2 * C0 + 0.5)).abs() < 1e-15);
        assert_eq!(a[2], 1.0);
    }

    #[test]
    fn band_zero_only_is_view_independent() {
        let mut coeffs = vec![0.0; 12];
        coeffs[0] = 0.3;
        coeffs[1] = -0.4;
        coeffs[2] = 0.1;
        let d = Vec3::new(0.2, -0.5, 0.3).normalize();
        assert_eq!(sh_to_color(&coeffs, 1, &d).unwrap(), sh_to_color(&coeffs, 1, &-d).unwrap());
    }

    #[test]
    fn wrong_coefficient_count_is_an_error() {
        assert!(matches!(
            sh_to_color(&[0.0; 9], 1, &Vec3::z()),
            Err(GaussError::ShCoefficientCount { expected: 12, got: 9 })
        ));
        assert!(sh_to_color(&[0.0; 75], 4, &Vec3::z()).is_err());
    }

    #[test]
    fn basis_matches_spherical_coordinate_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let d = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let basis = sh_basis(3, &d);
            let mut k = 0;
            for l in 0..=3u32 {
                for m in -(l as i32)..=(l as i32) {
                    let oracle = real_sh(l, m, &d);
                    assert!((basis[k] - oracle).abs() < 1e-9, "l={l} m={m}: {} vs {oracle}", basis[k]);
                    k += 1;
                }
            }
        }
    }

    #[test]
    fn degree_three_color_matches_direct_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let coeffs: Vec<f64> = (0..48).map(|_| rng.random_range(-0.3..0.3)).collect();
        let d = Vec3::new(0.3, 0.4, -0.5).normalize();
        let got = sh_to_color(&coeffs, 3, &d).unwrap();
        for c in 0..3 {
            let mut k = 0;
            let mut acc = 0.5;
            for l in 0..=3u32 {
                for m in -(l as i32)..=(l as i32) {
                    acc += real_sh(l, m, &d) * coeffs[k * 3 + c];
                    k += 1;
                }
            }
            assert!((got[c] - acc.clamp(0.0, 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn basis_gradient_matches_finite_differences() {
        let d = Vec3::new(0.31, -0.62, 0.45);
        let g = sh_basis_grad(3, &d);
        let h = 1e-6;
        for axis in 0..3 {
            let mut p = d;
            let mut m = d;
            p[axis] += h;
            m[axis] -= h;
            let (bp, bm) = (sh_basis(3, &p), sh_basis(3, &m));
            for k in 0..16 {
                let fd = (bp[k] - bm[k]) / (2.0 * h);
                assert!((fd - g[k][axis]).abs() < 1e-7, "k={k} axis={axis}");
            }
        }
    }
}
