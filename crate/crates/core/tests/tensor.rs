mod common;

use nalgebra::{Matrix3, Vector3};
use nematic_core::tensor::{basis, boundary_distance, eigen, margin_of, random_rotation, rho_margin, QTensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::from_lambda;

fn coords() -> impl Strategy<Value = [f64; 5]> {
    prop::array::uniform5(-0.6f64..0.6)
}

fn rotation() -> impl Strategy<Value = Matrix3<f64>> {
    any::<u64>().prop_map(|s| random_rotation(&mut ChaCha8Rng::seed_from_u64(s)))
}

#[test]
fn basis_orthonormal_to_machine_precision() {
    let b = basis();
    for i in 0..5 {
        for j in 0..5 {
            let ip = b[i].component_mul(&b[j]).sum();
            assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
        }
    }
}

#[test]
fn zero_tensor() {
    let e = eigen(&QTensor::ZERO);
    assert_eq!(e.lambda, [0.0; 3]);
    assert_eq!(e.frame, Matrix3::identity());
    assert_eq!(rho_margin(&QTensor::ZERO), 1.0 / 3.0);
    assert!((boundary_distance(&QTensor::ZERO).unwrap() - 6f64.sqrt() / 6.0).abs() < 1e-15);
}

#[test]
fn uniaxial_eigenvalues() {
    let q = QTensor::uniaxial(0.5, &Vector3::z()).unwrap();
    let l = eigen(&q).lambda;
    for (a, b) in l.iter().zip([-1.0 / 6.0, -1.0 / 6.0, 1.0 / 3.0]) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn eigenvalues_match_iterative_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let q = QTensor::new(std::array::from_fn(|_| rng.gen_range(-0.2..0.2))).unwrap();
        let mut oracle: Vec<f64> = q.to_matrix().symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let l = eigen(&q).lambda;
        for i in 0..3 {
            assert!((l[i] - oracle[i]).abs() < 1e-10, "{l:?} {oracle:?}");
        }
    }
}

#[test]
fn margin_examples() {
    assert!((rho_margin(&from_lambda([-0.3, 0.1, 0.2])) - 1.0 / 30.0).abs() < 1e-15);
    assert!(rho_margin(&from_lambda([-1.0 / 3.0, 0.0, 1.0 / 3.0])).abs() < 1e-15);
}

#[test]
fn boundary_distance_examples() {
    let l1 = -1.0 / 3.0 + 1e-4;
    let d = boundary_distance(&from_lambda([l1, -l1 / 2.0, -l1 / 2.0])).unwrap();
    assert!((d - 0.5 * 6f64.sqrt() * 1e-4).abs() < 1e-15);
    let q = QTensor::uniaxial(0.45, &Vector3::new(1.0, 2.0, 2.0).normalize()).unwrap();
    let d = boundary_distance(&q).unwrap();
    assert!((d - 0.5 * 6f64.sqrt() * (1.0 / 3.0 - 0.15)).abs() < 1e-14);
    assert!(boundary_distance(&from_lambda([-0.4, 0.1, 0.3])).is_err());
}

#[test]
fn non_finite_coordinates_rejected() {
    assert!(QTensor::new([0.0, f64::NAN, 0.0, 0.0, 0.0]).is_err());
    assert!(QTensor::new([f64::INFINITY, 0.0, 0.0, 0.0, 0.0]).is_err());
}

#[test]
fn repeated_eigenvalues_give_identical_frames() {
    let q = QTensor::uniaxial(0.3, &Vector3::new(0.2, -0.4, 0.9).normalize()).unwrap();
    let a = eigen(&q);
    let b = eigen(&QTensor::new(q.coords()).unwrap());
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn reconstruction_is_traceless_symmetric(c in coords()) {
        let q = QTensor::new(c).unwrap();
        let m = q.to_matrix();
        prop_assert!((m - m.transpose()).abs().max() < 1e-14);
        prop_assert!(m.trace().abs() < 1e-14);
        let fro = m.norm_squared();
        prop_assert!((fro - q.norm_sq()).abs() <= 1e-14 * fro.max(1e-300));
    }

    #[test]
    fn eigen_invariants(c in coords()) {
        let q = QTensor::new(c).unwrap();
        let e = eigen(&q);
        prop_assert!(e.lambda[0] <= e.lambda[1] && e.lambda[1] <= e.lambda[2]);
        prop_assert!(e.lambda.iter().sum::<f64>().abs() < 1e-12);
        prop_assert!((e.frame.transpose() * e.frame - Matrix3::identity()).abs().max() < 1e-12);
        prop_assert!((e.reconstruct() - q.to_matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn eigen_invariants_with_repeated_eigenvalues(s in -0.45f64..0.9, r in rotation(), eps in prop::sample::select(vec![0.0, 1e-15, 1e-13, 1e-9])) {
        let l = [-s / 3.0, -s / 3.0 + eps, 2.0 * s / 3.0 - eps];
        let q = QTensor::from_eigen(l, &r).unwrap();
        let e = eigen(&q);
        prop_assert!(e.lambda[0] <= e.lambda[1] && e.lambda[1] <= e.lambda[2]);
        prop_assert!((e.frame.transpose() * e.frame - Matrix3::identity()).abs().max() < 1e-12);
        prop_assert!((e.reconstruct() - q.to_matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn rotation_invariance(c in coords(), r in rotation()) {
        let q = QTensor::new(c).unwrap();
        let qr = q.rotate(&r);
        let (a, b) = (eigen(&q).lambda, eigen(&qr).lambda);
        for i in 0..3 {
            prop_assert!((a[i] - b[i]).abs() < 1e-10);
        }
        prop_assert!((rho_margin(&q) - rho_margin(&qr)).abs() < 1e-12);
    }

    #[test]
    fn margin_never_exceeds_a_third(c in coords()) {
        prop_assert!(rho_margin(&QTensor::new(c).unwrap()) <= 1.0 / 3.0 + 1e-15);
    }

    #[test]
    fn boundary_distance_matches_lower_margin(c in prop::array::uniform5(-0.25f64..0.25)) {
        let q = QTensor::new(c).unwrap();
        let l = eigen(&q).lambda;
        prop_assume!(l[0] > -1.0 / 3.0 && l[0] + 1.0 / 3.0 < 2.0 / 3.0 - l[2]);
        let d = boundary_distance(&q).unwrap();
        prop_assert!((d - 0.5 * 6f64.sqrt() * margin_of(&l)).abs() < 1e-14);
    }
}
