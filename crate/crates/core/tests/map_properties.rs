//! Property tests for the map layer: equivariance, unit Jacobian
//! determinant, and inverse round trips.

use proptest::prelude::*;

use meanaction_core::map::{AnnulusPoint, BumpParams, LiftedMap, Profile, TAU};

fn closed_form_maps() -> Vec<LiftedMap> {
    vec![
        LiftedMap::rigid(0.37),
        LiftedMap::twist(Profile::polynomial(vec![0.1, 0.5, -0.3, 0.2])),
        LiftedMap::radial_shear(Profile::step(0.3, -0.2, 0.2, 0.3)),
        LiftedMap::composition(vec![
            LiftedMap::rigid(-0.8),
            LiftedMap::radial_shear(Profile::step(0.0, 0.4, 0.25, 0.25)),
        ]),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn equivariance(x in -1.0f64..1.0, y in -10.0f64..10.0) {
        for m in closed_form_maps() {
            let a = m.apply(AnnulusPoint { x, y: y + TAU }).unwrap();
            let b = m.apply(AnnulusPoint { x, y }).unwrap();
            prop_assert!((a.x - b.x).abs() < 1e-12);
            prop_assert!((a.y - (b.y + TAU)).abs() < 1e-9);
        }
    }

    #[test]
    fn unit_jacobian_determinant(x in -1.0f64..1.0, y in 0.0f64..TAU) {
        for m in closed_form_maps() {
            let j = m.jacobian(AnnulusPoint { x, y }).unwrap();
            prop_assert!((j.det() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn inverse_round_trip(x in -0.999f64..0.999, y in 0.0f64..TAU) {
        for m in closed_form_maps() {
            let inv = m.inverse().unwrap();
            let p = AnnulusPoint { x, y };
            let q = inv.apply(m.apply(p).unwrap()).unwrap();
            prop_assert!((q.x - p.x).abs() < 1e-9);
            prop_assert!((q.y - p.y).abs() < 1e-9);
        }
    }

    #[test]
    fn boundary_circles_preserved(y in 0.0f64..TAU) {
        for m in closed_form_maps() {
            for x in [-1.0, 1.0] {
                let q = m.apply(AnnulusPoint { x, y }).unwrap();
                prop_assert!((q.x - x).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn bump_determinant_within_relaxed_bound() {
    // implicit midpoint is symplectic; the residual defect comes from the
    // nonlinear solve and the finite-difference Jacobian, reported as C·h²
    let step = 1e-2;
    let m = LiftedMap::hamiltonian_bump(BumpParams {
        center: [0.1, 2.5],
        radius: 0.6,
        strength: 0.2,
        time: 1.3,
        step,
    })
    .unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..15 {
        for j in 0..15 {
            let p = AnnulusPoint {
                x: -0.45 + 0.07 * i as f64,
                y: 1.8 + 0.1 * j as f64,
            };
            let j = m.jacobian(p).unwrap();
            worst = worst.max((j.det() - 1.0).abs());
        }
    }
    let c = worst / (step * step);
    assert!(
        c * step * step <= 1e-6,
        "det defect {worst} exceeds the C·h² budget (C = {c})"
    );
}

#[test]
fn equivariance_of_bump_at_many_points() {
    let m = LiftedMap::hamiltonian_bump(BumpParams {
        center: [0.0, 3.0],
        radius: 0.5,
        strength: 0.15,
        time: 1.0,
        step: 1e-2,
    })
    .unwrap();
    for i in 0..40 {
        let x = -0.95 + 0.048 * i as f64;
        let y = 0.41 * i as f64;
        let a = m.apply(AnnulusPoint { x, y: y + TAU }).unwrap();
        let b = m.apply(AnnulusPoint { x, y }).unwrap();
        assert!((a.y - (b.y + TAU)).abs() < 1e-10);
        assert!((a.x - b.x).abs() < 1e-11);
    }
}
