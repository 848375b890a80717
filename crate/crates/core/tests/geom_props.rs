use aerocontact::geom::{compose, inverse, pose_distance, relative_pose, Pose, UnitQuaternion, Vec3};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec3<f64>> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn quat() -> impl Strategy<Value = UnitQuaternion<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-degenerate", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-3)
        .prop_map(|(w, x, y, z)| UnitQuaternion::new(w, x, y, z).unwrap())
}

fn pose() -> impl Strategy<Value = Pose<f64>> {
    (vec3(), quat()).prop_map(|(p, q)| Pose::new(p, q))
}

fn close(a: &Pose<f64>, b: &Pose<f64>, tol: f64) -> bool {
    (a.p - b.p).norm() <= tol && a.q.dot(&b.q).abs() >= 1.0 - tol
}

fn flipped(p: &Pose<f64>) -> Pose<f64> {
    Pose::new(p.p, p.q.neg())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn compose_is_associative(a in pose(), b in pose(), c in pose()) {
        let l = compose(&compose(&a, &b), &c);
        let r = compose(&a, &compose(&b, &c));
        prop_assert!(close(&l, &r, 1e-9));
    }

    #[test]
    fn identity_is_neutral(a in pose()) {
        let e = Pose::identity();
        prop_assert!(close(&compose(&e, &a), &a, 1e-12));
        prop_assert!(close(&compose(&a, &e), &a, 1e-12));
    }

    #[test]
    fn inverse_cancels(a in pose()) {
        prop_assert!(close(&compose(&a, &inverse(&a)), &Pose::identity(), 1e-9));
        prop_assert!(close(&compose(&inverse(&a), &a), &Pose::identity(), 1e-9));
        prop_assert!(close(&inverse(&inverse(&a)), &a, 1e-9));
    }

    #[test]
    fn relative_pose_round_trips(f in pose(), t in pose()) {
        let u = relative_pose(&f, &t);
        prop_assert!(close(&compose(&f, &u), &t, 1e-9));
    }

    #[test]
    fn compose_acts_on_points(a in pose(), b in pose(), v in vec3()) {
        let lhs = compose(&a, &b).transform_point(v);
        let rhs = a.transform_point(b.transform_point(v));
        prop_assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn sign_of_quaternion_does_not_matter(a in pose(), b in pose()) {
        let (na, nb) = (flipped(&a), flipped(&b));
        prop_assert!(close(&compose(&na, &nb), &compose(&a, &b), 1e-9));
        prop_assert!(close(&inverse(&na), &inverse(&a), 1e-9));
        prop_assert!((pose_distance(&na, &b, 1.0) - pose_distance(&a, &b, 1.0)).abs() < 1e-9);
        prop_assert!((pose_distance(&a, &nb, 0.3) - pose_distance(&a, &b, 0.3)).abs() < 1e-9);
        prop_assert_eq!(a.q, a.q.neg());
    }

    #[test]
    fn distance_is_a_symmetric_nonnegative_gap(a in pose(), b in pose(), w in 0.0..3.0f64) {
        let d = pose_distance(&a, &b, w);
        prop_assert!(d >= 0.0);
        prop_assert!((d - pose_distance(&b, &a, w)).abs() < 1e-9);
        prop_assert!(pose_distance(&a, &a, w) < 1e-7);
    }

    #[test]
    fn distance_is_left_invariant(g in pose(), a in pose(), b in pose()) {
        // rotation part is invariant under any frame change, translation under rigid motion
        let d0 = pose_distance(&a, &b, 1.0);
        let d1 = pose_distance(&compose(&g, &a), &compose(&g, &b), 1.0);
        prop_assert!((d0 - d1).abs() < 1e-8);
    }

    #[test]
    fn rotation_matrix_is_orthonormal(q in quat()) {
        let m = q.to_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-12);
            }
        }
        let back = UnitQuaternion::from_matrix(&m);
        prop_assert!(back.dot(&q).abs() > 1.0 - 1e-12);
    }

    #[test]
    fn rotation_vector_round_trips(q in quat()) {
        let v = q.to_rotation_vector();
        prop_assert!(v.norm() <= std::f64::consts::PI + 1e-12);
        prop_assert!(UnitQuaternion::from_rotation_vector(v).dot(&q).abs() > 1.0 - 1e-12);
    }
}

#[test]
fn single_precision_round_trip() {
    let a: Pose<f32> = Pose::new(Vec3::new(0.3, -1.0, 2.0), UnitQuaternion::from_axis_angle(Vec3::new(1.0, 2.0, 0.5), 0.7));
    let b: Pose<f32> = Pose::new(Vec3::new(-0.5, 0.1, 0.0), UnitQuaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), -1.2));
    let u = relative_pose(&a, &b);
    let back = compose(&a, &u);
    assert!((back.p - b.p).norm() < 1e-5);
    assert!(back.q.dot(&b.q).abs() > 1.0 - 1e-5);
    let wide = compose(&a.cast::<f64>(), &b.cast::<f64>());
    assert!((wide.p.cast::<f32>() - compose(&a, &b).p).norm() < 1e-5);
}
