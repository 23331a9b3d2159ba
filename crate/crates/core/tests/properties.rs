//! Randomized invariants over the public API.

use approx::assert_relative_eq;
use meshsplat::gauss::{build_covariance, logit, quat_multiply, quat_to_matrix, sigmoid, GaussianSplat, Mat3, Quaternion, Vec3};
use meshsplat::io::{tube_mesh, SyntheticRigSpec};
use meshsplat::loss::{l1_loss, reg_offset, reg_pos, reg_scaling, ssim, SsimConfig};
use meshsplat::raster::{render, Camera, Image, RasterConfig, RenderGaussian};
use meshsplat::rectifier::{apply_deltas, RectifierOutput};
use meshsplat::rig::{bind_to_global, face_frames, pose_mesh, triangle_frame, Pose};
use meshsplat::train::lr_schedule;
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn quat() -> impl Strategy<Value = Quaternion> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("away from zero", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-3)
        .prop_map(|(w, x, y, z)| Quaternion::new(w, x, y, z))
}

fn rotation() -> impl Strategy<Value = Mat3> {
    quat().prop_map(|q| quat_to_matrix(q).unwrap())
}

fn image(w: usize, h: usize) -> impl Strategy<Value = Image> {
    proptest::collection::vec(0.0..1.0f64, w * h * 3).prop_map(move |data| Image { width: w, height: h, data })
}

fn non_degenerate(a: &Vec3, b: &Vec3, c: &Vec3) -> bool {
    (b - a).cross(&(c - a)).norm() > 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn covariance_is_symmetric_psd(q in quat(), s in vec3(3.0)) {
        let scale = s.map(f64::abs);
        let m = build_covariance(q, scale).unwrap().to_matrix();
        prop_assert!((m - m.transpose()).abs().max() == 0.0);
        let bound = 1e-12 * scale.max().powi(2).max(1.0);
        for e in m.symmetric_eigenvalues().iter() {
            prop_assert!(*e >= -bound, "eigenvalue {e}");
        }
    }

    #[test]
    fn quaternion_product_is_a_homomorphism(a in quat(), b in quat()) {
        let lhs = quat_to_matrix(quat_multiply(a, b).unwrap()).unwrap();
        let rhs = quat_to_matrix(a).unwrap() * quat_to_matrix(b).unwrap();
        prop_assert!((lhs - rhs).abs().max() < 1e-9);
    }

    #[test]
    fn activations_round_trip(ls in (1e-4f64).ln()..(1e2f64).ln(), p in 1e-4..1.0 - 1e-4) {
        let s = ls.exp();
        assert_relative_eq!(s.ln().exp(), s, max_relative = 1e-9);
        assert_relative_eq!(sigmoid(logit(p)), p, epsilon = 1e-9);
    }

    #[test]
    fn triangle_frame_is_rigid_equivariant(
        a in vec3(1.0), b in vec3(1.0), c in vec3(1.0), q in rotation(), t in vec3(2.0),
    ) {
        prop_assume!(non_degenerate(&a, &b, &c));
        let f = triangle_frame(&a, &b, &c).unwrap();
        let g = triangle_frame(&(q * a + t), &(q * b + t), &(q * c + t)).unwrap();
        prop_assert!((g.rotation - q * f.rotation).abs().max() < 1e-9);
        prop_assert!((g.origin - (q * f.origin + t)).norm() < 1e-9);
        prop_assert!((g.scale - f.scale).abs() < 1e-9);
    }

    #[test]
    fn binding_commutes_with_rigid_motion(
        a in vec3(1.0), b in vec3(1.0), c in vec3(1.0), q in rotation(), t in vec3(2.0),
        mu in vec3(1.0), r in quat(), ls in vec3(1.0),
    ) {
        prop_assume!(non_degenerate(&a, &b, &c));
        let mut s = GaussianSplat::at_face_origin(0, 0, 0.5);
        s.mu_local = mu;
        s.rot_local = r;
        s.log_scale = ls;
        let f = triangle_frame(&a, &b, &c).unwrap();
        let g = triangle_frame(&(q * a + t), &(q * b + t), &(q * c + t)).unwrap();
        let x = bind_to_global(&s, &f).unwrap();
        let y = bind_to_global(&s, &g).unwrap();
        prop_assert!((y.mu - (q * x.mu + t)).norm() < 1e-9);
        let rx = q * x.rotation.unit_to_matrix();
        prop_assert!((y.rotation.unit_to_matrix() - rx).abs().max() < 1e-9);
        prop_assert!((y.scale - x.scale).norm() < 1e-9 * x.scale.norm().max(1.0));
    }

    #[test]
    fn rectified_rotation_is_unit(r in quat(), d in proptest::array::uniform4(-2.0..2.0f64)) {
        prop_assume!(((1.0 + d[0]).powi(2) + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]) > 1e-6);
        let bound = meshsplat::rig::BoundGaussian { mu: Vec3::zeros(), rotation: r.normalized().unwrap(), scale: Vec3::repeat(0.1) };
        let out = RectifierOutput { d_mu: Vec3::zeros(), d_rot: d, d_scale: Vec3::zeros() };
        let rect = apply_deltas(&bound, &out);
        prop_assert!((rect.rotation.norm() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn synthetic_rig_frames_are_proper(
        spin in -3.0..3.0f64, b1 in -1.0..1.0f64, b2 in -1.0..1.0f64, root in vec3(1.0),
    ) {
        let mesh = tube_mesh(&SyntheticRigSpec::default());
        let pose = Pose {
            root_translation: root,
            joint_rotations: vec![Vec3::new(0.0, spin, 0.0), Vec3::new(0.0, 0.0, b1), Vec3::new(b2, 0.0, 0.0)],
        };
        let verts = pose_mesh(&mesh, &pose).unwrap();
        for f in face_frames(&mesh.faces, &verts).unwrap() {
            prop_assert!(f.scale > 0.0);
            prop_assert!((f.rotation.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn losses_are_nonnegative(a in image(12, 12), b in image(12, 12)) {
        prop_assert!(l1_loss(&a, &b).unwrap() >= 0.0);
        let s = ssim(&a, &b, &SsimConfig::default()).unwrap();
        prop_assert!(s <= 1.0 + 1e-12);
        prop_assert_eq!(l1_loss(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn regularizers_are_nonnegative_and_vanish_in_bounds(
        mus in proptest::collection::vec(vec3(3.0), 1..20),
        deltas in proptest::collection::vec(proptest::array::uniform10(-1.0..1.0f64), 1..20),
    ) {
        let scales: Vec<Vec3> = mus.iter().map(|m| m.map(f64::abs)).collect();
        prop_assert!(reg_pos(&mus, 1.0) >= 0.0);
        prop_assert!(reg_scaling(&scales, 0.6) >= 0.0);
        prop_assert!(reg_offset(&deltas) >= 0.0);
        let inside: Vec<Vec3> = mus.iter().map(|m| m / 3.0).collect();
        let small: Vec<Vec3> = scales.iter().map(|s| s * 0.19).collect();
        prop_assert_eq!(reg_pos(&inside, 1.0), 0.0);
        prop_assert_eq!(reg_scaling(&small, 0.6), 0.0);
    }

    #[test]
    fn composited_alpha_is_a_fraction(
        splats in proptest::collection::vec((vec3(0.5), 0.0..1.0f64, vec3(1.0), -3.0..-1.0f64), 1..30),
    ) {
        let cam = Camera::look_at(Vec3::new(0.0, 0.0, 3.0), Vec3::zeros(), Vec3::y(), 40.0, 24, 24);
        let sh: Vec<Vec<f64>> = splats.iter().map(|(_, _, c, _)| c.as_slice().to_vec()).collect();
        let gaussians: Vec<RenderGaussian> = splats
            .iter()
            .zip(&sh)
            .map(|((mu, o, _, ls), sh)| RenderGaussian {
                mu: *mu,
                cov: Mat3::identity() * (2.0 * ls).exp(),
                opacity: *o,
                sh,
            })
            .collect();
        let (out, _) = render(&gaussians, 0, &cam, &RasterConfig::default());
        for a in &out.alpha {
            prop_assert!((0.0..=1.0).contains(a));
        }
        for c in &out.color.data {
            prop_assert!(c.is_finite() && *c >= 0.0);
        }
    }

    #[test]
    fn position_lr_decays_monotonically(i in 0usize..50_000) {
        let a = lr_schedule(i, 50_000, 8e-3, 1e-5).unwrap();
        let b = lr_schedule(i + 1, 50_000, 8e-3, 1e-5).unwrap();
        prop_assert!(b <= a && b >= 1e-5 * (1.0 - 1e-12) && a <= 8e-3 * (1.0 + 1e-12));
    }
}

#[test]
fn zero_pose_reproduces_rest_vertices() {
    let mesh = tube_mesh(&SyntheticRigSpec { segment_count: 3, ..Default::default() });
    let verts = pose_mesh(&mesh, &Pose::rest(mesh.joint_count())).unwrap();
    assert_eq!(verts, mesh.vertices);
}
