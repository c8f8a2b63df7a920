mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_rigid, random_varifold, rel_err};
use varimatch::deformation::{
    flow_points, hamiltonian, shoot, shoot_interval, DeformationKernel, ShootingState,
};
use varimatch::evaluation::{landmark_metric, transport_landmarks, LandmarkRole, LandmarkSet};
use varimatch::geometry::{apply_rigid, face_elements, synth_sphere, RigidTransform};
use varimatch::map::{ComposedMap, SpatialMap};
use varimatch::varifold::{
    hinge_sq, partial_dissimilarity, representer_values, smooth_min_one, spatial_kernel,
    VarifoldKernelConfig,
};
use varimatch::Vec3;

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// Random particles in a 10 mm box with momenta bounded by `1 / sigma0`.
fn particles(max_n: usize, sigma0: f64) -> impl Strategy<Value = ShootingState> {
    (1..=max_n).prop_flat_map(move |n| {
        let bound = 1.0 / (sigma0 * 3f64.sqrt());
        (
            prop::collection::vec(vec3(5.0), n),
            prop::collection::vec(vec3(bound), n),
        )
            .prop_map(|(q, p)| ShootingState::new(q, p).unwrap())
    })
}

fn rigid() -> impl Strategy<Value = RigidTransform> {
    (
        -180.0..180.0f64,
        -180.0..180.0f64,
        -180.0..180.0f64,
        vec3(20.0),
    )
        .prop_map(|(a, b, c, t)| RigidTransform::new([a, b, c], t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partial_term_and_representer_are_rigid_invariant(seed in any::<u64>(), r in rigid()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_varifold(&mut rng, 25, 4.0);
        let t = random_varifold(&mut rng, 30, 5.0);
        let cfg = VarifoldKernelConfig::new(1.5, 1e-6).unwrap();
        let (rs, rt) = (apply_rigid(&r, &s), apply_rigid(&r, &t));
        let before = partial_dissimilarity(&s, &t, &cfg).unwrap();
        let after = partial_dissimilarity(&rs, &rt, &cfg).unwrap();
        prop_assert!(rel_err(before, after) <= 1e-10);
        let w0 = representer_values(&s, &s, 1.5);
        let w1 = representer_values(&rs, &rs, 1.5);
        for (a, b) in w0.iter().zip(&w1) {
            prop_assert!(rel_err(*a, *b) <= 1e-10);
        }
    }

    #[test]
    fn face_elements_commute_with_rigid_motion(r in rigid()) {
        let mesh = synth_sphere(3.0, 1);
        let a = face_elements(&apply_rigid(&r, &mesh)).unwrap();
        let b = apply_rigid(&r, &face_elements(&mesh).unwrap());
        for i in 0..a.len() {
            prop_assert!((a.centers()[i] - b.centers()[i]).norm() <= 1e-10 * (1.0 + b.centers()[i].norm()));
            prop_assert!((a.directors()[i] - b.directors()[i]).norm() <= 1e-10);
            prop_assert!(rel_err(a.weights()[i], b.weights()[i]) <= 1e-10);
        }
    }

    #[test]
    fn far_targets_leave_only_the_self_term(seed in any::<u64>(), dir in vec3(1.0)) {
        prop_assume!(dir.norm() > 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = 1.0;
        let s = random_varifold(&mut rng, 12, 2.0);
        let t = random_varifold(&mut rng, 12, 2.0);
        let shift = dir.normalize() * 20.0 * sigma;
        let cfg = VarifoldKernelConfig::new(sigma, 1e-6).unwrap();
        let d = partial_dissimilarity(&s, &t.translated(&shift), &cfg).unwrap();
        let alone: f64 = representer_values(&s, &s, sigma).iter().map(|w| w * w).sum();
        prop_assert!(rel_err(d, alone) <= 1e-6);
        prop_assert!(spatial_kernel(&Vec3::zeros(), &(dir.normalize() * 10.0 * sigma), sigma) < 1e-43);
    }

    #[test]
    fn smooth_min_stays_within_half_root_eps(s in -2.0..4.0f64, eps in 1e-10..1e-2f64) {
        let m = smooth_min_one(s, eps);
        prop_assert!(m < s.min(1.0));
        prop_assert!((m - s.min(1.0)).abs() <= eps.sqrt() / 2.0 + 1e-15);
        prop_assert!(smooth_min_one(s + 1e-3, eps) > m);
        prop_assert!(hinge_sq(s) >= 0.0);
    }

    #[test]
    fn hamiltonian_and_momentum_sum_are_conserved(state in particles(30, 5.0)) {
        let kernel = DeformationKernel::with_default_scales(5.0).unwrap();
        let traj = shoot(&state, &kernel, 20).unwrap();
        let h0 = hamiltonian(&state, &kernel);
        let s0 = state.momentum_sum();
        let scale = state.momenta.iter().map(|p| p.norm()).sum::<f64>();
        for st in &traj.states {
            let h = hamiltonian(st, &kernel);
            prop_assert!((h - h0).abs() / h0.max(1e-30) <= 1e-6, "H {} vs {}", h, h0);
            prop_assert!((st.momentum_sum() - s0).norm() <= 1e-8 * scale.max(1e-300));
        }
    }

    #[test]
    fn rk4_converges_at_fourth_order(state in particles(12, 3.0)) {
        let kernel = DeformationKernel::with_default_scales(3.0).unwrap();
        let end = |n| shoot(&state, &kernel, n).unwrap().last().clone();
        let reference = end(640);
        let err = |s: &ShootingState| {
            s.control_points.iter().zip(&reference.control_points).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        };
        let (e10, e20, e40) = (err(&end(10)), err(&end(20)), err(&end(40)));
        // Orders are only meaningful above round-off.
        prop_assume!(e40 > 1e-11);
        let order = ((e10 / e20).log2()).min((e20 / e40).log2());
        prop_assert!(order >= 3.5, "errors {e10:e} {e20:e} {e40:e}");
    }

    #[test]
    fn shooting_in_two_halves_matches_one_pass(state in particles(20, 4.0)) {
        let kernel = DeformationKernel::with_default_scales(4.0).unwrap();
        let whole = shoot(&state, &kernel, 20).unwrap();
        let first = shoot_interval(&state, &kernel, 10, 0.5).unwrap();
        let second = shoot_interval(first.last(), &kernel, 10, 0.5).unwrap();
        for (a, b) in second.last().control_points.iter().zip(&whole.last().control_points) {
            prop_assert!((a - b).norm() <= 1e-6 * kernel.sigma0());
        }
    }

    #[test]
    fn zero_momenta_flow_is_exactly_the_identity(points in prop::collection::vec(vec3(30.0), 1..40), cps in prop::collection::vec(vec3(10.0), 1..10)) {
        let kernel = DeformationKernel::with_default_scales(6.0).unwrap();
        let state = ShootingState::at_rest(cps);
        let moved = flow_points(&state, &kernel, 10, &points).unwrap();
        prop_assert_eq!(moved, points);
    }

    #[test]
    fn landmark_metric_is_symmetric(a in prop::collection::vec(vec3(50.0), 1..20), noise in prop::collection::vec(vec3(3.0), 20)) {
        let labels: Vec<String> = (0..a.len()).map(|i| format!("p{i}")).collect();
        let roles = vec![LandmarkRole::Poi; a.len()];
        let b: Vec<Vec3> = a.iter().zip(&noise).map(|(p, n)| p + n).collect();
        let la = LandmarkSet::new(a, labels.clone(), roles.clone()).unwrap();
        let lb = LandmarkSet::new(b, labels, roles).unwrap();
        let ab = landmark_metric(&la, &lb).unwrap();
        let ba = landmark_metric(&lb, &la).unwrap();
        prop_assert_eq!(ab.mean, ba.mean);
        prop_assert_eq!(ab.median, ba.median);
        prop_assert_eq!(ab.std, ba.std);
    }

    #[test]
    fn composed_transport_equals_sequential_transport(
        seed in any::<u64>(),
        pts in prop::collection::vec(vec3(15.0), 1..12),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = random_rigid(&mut rng, 15.0, 5.0);
        let cps: Vec<Vec3> = (0..6).map(|k| Vec3::new(k as f64 * 2.0 - 5.0, 1.0, -1.0)).collect();
        let momenta: Vec<Vec3> = (0..6).map(|k| Vec3::new(0.1, -0.05 * k as f64, 0.08)).collect();
        let flow = SpatialMap::Flow {
            initial: ShootingState::new(cps, momenta).unwrap(),
            kernel: DeformationKernel::with_default_scales(8.0).unwrap(),
            n_steps: 10,
        };
        let rigid = SpatialMap::Rigid { transform: first };
        let mut map = ComposedMap::identity();
        map.push(rigid.clone());
        map.push(flow.clone());

        let labels: Vec<String> = (0..pts.len()).map(|i| format!("l{i}")).collect();
        let lm = LandmarkSet::new(pts.clone(), labels, vec![LandmarkRole::TumorAxis; pts.len()]).unwrap();
        let composed = transport_landmarks(&map, &lm).unwrap();
        let sequential = flow.apply_points(&rigid.apply_points(&pts).unwrap()).unwrap();
        for (a, b) in composed.points().iter().zip(&sequential) {
            prop_assert!((a - b).norm() <= 1e-10);
        }
    }
}
