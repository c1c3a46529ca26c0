use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;

use super::*;

fn model() -> HandModel<f64> {
    HandModel::default()
}

/// Independent planar chain: sum of segment vectors rotated by 2x2 matrices
/// of the cumulative angle. Returns (forward, curl) coordinates.
fn planar_chain(lengths: [f64; 3], angles: [f64; 3]) -> (f64, f64) {
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    let mut p = (0.0, 0.0);
    for k in 0..3 {
        let (c, s) = (angles[k].cos(), angles[k].sin());
        let r = [[c, -s], [s, c]];
        m = [
            [m[0][0] * r[0][0] + m[0][1] * r[1][0], m[0][0] * r[0][1] + m[0][1] * r[1][1]],
            [m[1][0] * r[0][0] + m[1][1] * r[1][0], m[1][0] * r[0][1] + m[1][1] * r[1][1]],
        ];
        p.0 += m[0][0] * lengths[k];
        p.1 += m[1][0] * lengths[k];
    }
    p
}

#[test]
fn default_model_is_valid() {
    model().validate().unwrap();
    HandModel::<f32>::default().validate().unwrap();
}

#[test]
fn zero_flexion_is_straight_segment_sum() {
    let m = model();
    let palm = Vec3::new(0.2, 1.0, -0.4);
    let tips = m.fk_fingertips(palm, &[0.0; JOINTS]);
    for (tip, f) in tips.iter().zip(&m.fingers) {
        let expected = palm + f.base_offset + f.forward * 0.09;
        assert!(tip.position.distance(expected) < 1e-12);
    }
}

#[test]
fn full_curl_matches_planar_oracle() {
    let mut m = model();
    m.fingers[1].segment_lengths = [0.03; 3];
    let mut joints = [0.0; JOINTS];
    joints[3..6].copy_from_slice(&[FRAC_PI_2; 3]);
    let (a, b) = planar_chain([0.03; 3], [FRAC_PI_2; 3]);
    // frozen from the oracle: the tip folds back one segment behind the base
    assert!((a - -0.03).abs() < 1e-15 && b.abs() < 1e-15);
    let f = m.fingers[1];
    let tip = m.fk_fingertips(Vec3::zero(), &joints)[1].position;
    let expected = f.base_offset + f.forward * a + f.curl_direction() * b;
    assert!(tip.distance(expected) < 1e-12, "{tip:?} vs {expected:?}");
}

#[test]
fn fingertip_orientation_is_unit() {
    let m = model();
    let joints = std::array::from_fn(|i| (i as f64 * 0.37) % FRAC_PI_2);
    for tip in m.fk_fingertips(Vec3::new(1.0, 2.0, 3.0), &joints) {
        assert!((tip.orientation.norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn f32_chain_agrees_with_f64() {
    let m32 = HandModel::<f32>::default();
    let m64 = model();
    let j = [0.5; JOINTS];
    let a = m32.fk_fingertips(Vec3::new(0.1, 0.2, 0.3), &j.map(|x| x as f32));
    let b = m64.fk_fingertips(Vec3::new(0.1, 0.2, 0.3), &j);
    for (x, y) in a.iter().zip(&b) {
        assert!(x.position.cast::<f64>().distance(y.position) < 1e-6);
    }
}

#[test]
fn sphere_contact_examples() {
    let m = HandModel { contact_radius: 0.01, ..model() };
    let ball = ObjectShape::sphere(Vec3::zero(), 0.05).unwrap();
    let state_with_tip = |p: Vec3<f64>| {
        let mut s = HandState::open(&m, Vec3::new(5.0, 5.0, 5.0));
        s.fingertips[0].position = p;
        s
    };
    assert!(contact_test(&m, &state_with_tip(Vec3::zero()), &ball)[0]);
    assert!(!contact_test(&m, &state_with_tip(Vec3::new(1.0, 0.0, 0.0)), &ball)[0]);
    let edge = Vec3::new(0.06, 0.0, 0.0);
    assert!((ball.signed_distance(edge) - 0.01).abs() < 1e-15);
    assert!(contact_test(&m, &state_with_tip(edge), &ball)[0]);
}

#[test]
fn box_and_cylinder_distances() {
    let b = ObjectShape::<f64>::new(ShapeKind::Box { half_extents: Vec3::new(0.1, 0.2, 0.3) }, Vec3::zero(), Quat::identity())
        .unwrap();
    assert!((b.signed_distance(Vec3::new(0.5, 0.0, 0.0)) - 0.4).abs() < 1e-12);
    assert!((b.signed_distance(Vec3::new(0.0, 0.0, 0.0)) + 0.1).abs() < 1e-12);
    // corner region: distance to the corner point
    let corner = Vec3::new(0.1, 0.2, 0.3);
    let p = corner + Vec3::new(0.3, 0.4, 0.0);
    assert!((b.signed_distance(p) - 0.5).abs() < 1e-12);

    let rot = Quat::from_axis_angle(Vec3::unit_z(), FRAC_PI_2);
    let c = ObjectShape::<f64>::new(ShapeKind::Cylinder { radius: 0.1, half_height: 0.2 }, Vec3::zero(), rot).unwrap();
    // rotated so the axis lies along world x
    assert!((c.signed_distance(Vec3::new(0.5, 0.0, 0.0)) - 0.3).abs() < 1e-12);
    assert!((c.signed_distance(Vec3::new(0.0, 0.5, 0.0)) - 0.4).abs() < 1e-12);
    assert!((c.signed_distance(Vec3::new(0.0, 0.0, 0.0)) + 0.1).abs() < 1e-12);
}

#[test]
fn rejects_degenerate_extents() {
    assert!(ObjectShape::sphere(Vec3::zero(), 0.0).is_err());
    assert!(
        ObjectShape::<f64>::new(ShapeKind::Cylinder { radius: 0.1, half_height: -1.0 }, Vec3::zero(), Quat::identity()).is_err()
    );
}

#[test]
fn palm_distance_examples() {
    let m = model();
    let ball = ObjectShape::sphere(Vec3::zero(), 0.05).unwrap();
    assert_eq!(palm_object_distance(&HandState::open(&m, Vec3::zero()), &ball), 0.0);
    let s = HandState::open(&m, Vec3::new(0.3, 0.0, 0.0));
    assert!((palm_object_distance(&s, &ball) - 0.3).abs() < 1e-15);
}

#[test]
fn fingertip_surface_distance_takes_minimum() {
    let m = model();
    let ball = ObjectShape::sphere(Vec3::zero(), 0.1).unwrap();
    let mut s = HandState::open(&m, Vec3::new(9.0, 0.0, 0.0));
    for (i, d) in [0.4, 0.2, 0.9, 0.5, 0.3].iter().enumerate() {
        s.fingertips[i].position = Vec3::new(0.0, 0.0, 0.1 + d);
    }
    assert!((fingertip_surface_distance(&s, &ball) - 0.2).abs() < 1e-12);
    s.fingertips[3].position = Vec3::zero();
    assert_eq!(fingertip_surface_distance(&s, &ball), 0.0);
}

#[test]
fn joints_clamped_into_range() {
    let s = HandState::new(&model(), Vec3::zero(), [-1.0; JOINTS]);
    assert!(s.joints.iter().all(|&q| q == 0.0));
    let s = HandState::new(&model(), Vec3::zero(), [3.0; JOINTS]);
    assert!(s.joints.iter().all(|&q| q == MAX_GRAB_ROTATION));
}

fn vec3() -> impl Strategy<Value = Vec3<f64>> {
    (-5.0..5.0, -5.0..5.0, -5.0..5.0).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn joints() -> impl Strategy<Value = [f64; JOINTS]> {
    proptest::array::uniform15(0.0..FRAC_PI_2)
}

fn shape() -> impl Strategy<Value = ObjectShape<f64>> {
    let kind = prop_oneof![
        (0.05..0.5).prop_map(|radius| ShapeKind::Sphere { radius }),
        (0.05..0.5, 0.05..0.5, 0.05..0.5).prop_map(|(x, y, z)| ShapeKind::Box { half_extents: Vec3::new(x, y, z) }),
        (0.05..0.5, 0.05..0.5).prop_map(|(radius, half_height)| ShapeKind::Cylinder { radius, half_height }),
    ];
    (kind, vec3(), vec3(), 0.0..6.0).prop_map(|(k, c, axis, angle)| {
        ObjectShape::new(k, c, Quat::from_axis_angle(axis + Vec3::unit_y() * 0.01, angle)).unwrap()
    })
}

proptest! {
    #[test]
    fn translation_equivariance(palm in vec3(), delta in vec3(), q in joints()) {
        let m = model();
        let a = m.fk_fingertips(palm, &q);
        let b = m.fk_fingertips(palm + delta, &q);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y.position - x.position - delta).norm() < 1e-12);
        }
    }

    #[test]
    fn finite_difference_matches_chain_derivative(q in proptest::array::uniform15(0.01..(FRAC_PI_2 - 0.01)), finger in 0usize..5, joint in 0usize..3) {
        let m = model();
        let h = 1e-7;
        let idx = finger * 3 + joint;
        let mut qp = q;
        qp[idx] += h;
        let mut qm = q;
        qm[idx] -= h;
        let fd = (m.fk_fingertips(Vec3::zero(), &qp)[finger].position - m.fk_fingertips(Vec3::zero(), &qm)[finger].position) / (2.0 * h);
        let analytic = m.fingertip_derivative(finger, joint, Vec3::zero(), &q);
        prop_assert!((fd - analytic).norm() < 1e-6);
    }

    #[test]
    fn contact_monotone_in_radius(obj in shape(), palm in vec3(), q in joints(), r1 in 0.001..0.2, extra in 0.0..0.5) {
        let mut m = model();
        let state = HandState::new(&m, palm * 0.1 + obj.position, q);
        m.contact_radius = r1;
        let small = contact_test(&m, &state, &obj);
        m.contact_radius = r1 + extra;
        let big = contact_test(&m, &state, &obj);
        for (s, b) in small.iter().zip(&big) {
            prop_assert!(!s || *b);
        }
    }

    #[test]
    fn distances_invariant_under_translation(obj in shape(), palm in vec3(), q in joints(), delta in vec3()) {
        let m = model();
        let s = HandState::new(&m, palm, q);
        let s2 = HandState::new(&m, palm + delta, q);
        let obj2 = obj.at(obj.position + delta);
        prop_assert!((palm_object_distance(&s, &obj) - palm_object_distance(&s2, &obj2)).abs() < 1e-9);
        prop_assert!((fingertip_surface_distance(&s, &obj) - fingertip_surface_distance(&s2, &obj2)).abs() < 1e-9);
    }

    #[test]
    fn fingertips_within_reach(palm in vec3(), q in joints()) {
        let m = model();
        for tip in m.fk_fingertips(palm, &q) {
            prop_assert!(tip.position.distance(palm) <= m.max_reach() + 1e-12);
        }
    }
}
