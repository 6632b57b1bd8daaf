//! Property-based invariants over randomized states and parameters.

use proptest::prelude::*;
use squeezer_core::fock::{quadrature, DensityMatrix, Ket, KetJson, Parity};
use squeezer_core::gates::loss_channel;
use squeezer_core::metrics::{distinguishability, interference};
use squeezer_core::phase_space::WignerEvaluator;
use squeezer_core::C64;

fn arb_ket(dim: usize) -> impl Strategy<Value = Ket> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map(
        "norm must not vanish",
        move |parts| {
            let amps: Vec<C64> = parts.iter().map(|&(r, i)| C64::new(r, i)).collect();
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            if norm < 1e-3 {
                return None;
            }
            let scaled: Vec<C64> = amps.iter().map(|a| a / norm.sqrt()).collect();
            Ket::from_amplitudes(scaled).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ket_json_round_trip(ket in arb_ket(9)) {
        let json: KetJson = (&ket).into();
        let text = serde_json::to_string(&json).unwrap();
        let back: KetJson = serde_json::from_str(&text).unwrap();
        let ket2: Ket = back.try_into().unwrap();
        for n in 0..ket.dim() {
            prop_assert!((ket.amp(n) - ket2.amp(n)).norm() < 1e-12);
        }
    }

    #[test]
    fn rotated_quadrature_is_trig_combination(theta in -7.0f64..7.0) {
        let dim = 10;
        let x = quadrature(0.0, dim);
        let p = quadrature(std::f64::consts::FRAC_PI_2, dim);
        let q = quadrature(theta, dim);
        let combo = x.matrix().map(|z| z * theta.cos()) + p.matrix().map(|z| z * theta.sin());
        let err = (q.matrix() - combo).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn loss_channels_compose(
        ket in arb_ket(10),
        eta1 in 0.05f64..1.0,
        eta2 in 0.05f64..1.0,
    ) {
        let rho = ket.to_density_matrix();
        let twice = loss_channel(&loss_channel(&rho, eta1).unwrap(), eta2).unwrap();
        let once = loss_channel(&rho, eta1 * eta2).unwrap();
        prop_assert!(twice.trace_distance(&once).unwrap() < 1e-9);
    }

    #[test]
    fn wigner_and_metrics_are_affine(
        a in arb_ket(8),
        b in arb_ket(8),
        weight in 0.0f64..1.0,
        x in -1.5f64..1.5,
        p in -1.5f64..1.5,
    ) {
        let ra = a.to_density_matrix();
        let rb = b.to_density_matrix();
        let mix = DensityMatrix::mixture(&[(weight, ra.clone()), (1.0 - weight, rb.clone())]).unwrap();
        let wm = WignerEvaluator::new(&mix).value(x, p);
        let wa = WignerEvaluator::new(&ra).value(x, p);
        let wb = WignerEvaluator::new(&rb).value(x, p);
        prop_assert!((wm - (weight * wa + (1.0 - weight) * wb)).abs() < 1e-12);

        let probe = C64::new(0.7, -0.2);
        let dm = distinguishability(&mix, probe).unwrap();
        let da = distinguishability(&ra, probe).unwrap();
        let db = distinguishability(&rb, probe).unwrap();
        prop_assert!((dm - (weight * da + (1.0 - weight) * db)).abs() < 1e-12);
        let vm = interference(&mix, probe).unwrap();
        let va = interference(&ra, probe).unwrap();
        let vb = interference(&rb, probe).unwrap();
        prop_assert!((vm - (weight * va + (1.0 - weight) * vb)).abs() < 1e-12);
    }

    #[test]
    fn constructors_satisfy_state_invariants(
        alpha_re in -1.4f64..1.4,
        alpha_im in -1.4f64..1.4,
        eta in 0.1f64..1.0,
    ) {
        let dim = 30;
        let alpha = C64::new(alpha_re, alpha_im);
        let coh = Ket::coherent(alpha, dim).unwrap().to_density_matrix();
        prop_assert!(coh.validate().is_ok());
        let lossy = loss_channel(&coh, eta).unwrap();
        prop_assert!(lossy.validate().is_ok());
        if alpha.norm() > 0.05 {
            let cat = Ket::css(alpha, Parity::Odd, dim).unwrap();
            prop_assert!(cat.to_density_matrix().validate().is_ok());
            // Odd support only.
            for n in (0..dim).step_by(2) {
                prop_assert!(cat.amp(n).norm() < 1e-14);
            }
        }
    }
}
