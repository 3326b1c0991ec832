use approx::assert_relative_eq;
use kondo_metrology::critical::{dc_dt, entropy_crossover, scaled_entropy, CriticalConstants};
use kondo_metrology::estimation::{
    build_qfim, invert_qfim, qsnr_report, Inversion, PopulationJacobian, QfiMatrix,
};
use kondo_metrology::large_k::{self, LargeKParams};
use kondo_metrology::linalg::symmetric_eigenvalues;
use kondo_metrology::narrow_band::{self, NblParams};
use kondo_metrology::probe::{
    observables_of, qfim_from_observables, rdm_with_field, rdm_zero_field, ProbeObservables,
    ProbeOperator, ProbeState,
};
use kondo_metrology::special::{digamma, trigamma};
use kondo_metrology::ParamVector64;
use proptest::prelude::*;

/// Normalized populations from unconstrained weights.
fn populations() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.05f64..1.0).prop_map(|w| {
        let z: f64 = w.iter().sum();
        w.map(|x| x / z)
    })
}

/// Derivative rows that sum to zero.
fn derivative_rows(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::array::uniform4(-1.0f64..1.0), n).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let mean = r.iter().sum::<f64>() / 4.0;
                r.iter().map(|x| x - mean).collect()
            })
            .collect()
    })
}

/// `AᵀA + εI` for a random square `A`.
fn psd_matrix(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |a| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = (0..n).map(|k| a[k * n + i] * a[k * n + j]).sum::<f64>();
            }
            h[i * n + i] += 1e-3;
        }
        h
    })
}

fn names(n: usize) -> Vec<String> {
    ["T", "K", "B"][..n].iter().map(|s| s.to_string()).collect()
}

proptest! {
    #[test]
    fn qfim_from_populations_is_psd(p in populations(), rows in derivative_rows(3)) {
        let pj = PopulationJacobian::new(["T", "K", "B"], p.to_vec(), rows).unwrap();
        let h = build_qfim(&pj).unwrap();
        let min = symmetric_eigenvalues(3, h.elements()).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-10 * h.norm());
    }

    #[test]
    fn knowing_other_parameters_never_hurts(n in 2usize..=3, seed in psd_matrix(3)) {
        // The leading block of a positive definite matrix is positive definite as well.
        let elements: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| seed[i * 3 + j]).collect();
        let h = QfiMatrix::new(names(n), elements).unwrap();
        let Inversion::Inverse(inv) = invert_qfim(&h) else { return Ok(()) };
        for i in 0..n {
            prop_assert!(inv[i * n + i] >= 1.0 / h.get(i, i) - 1e-12 * inv[i * n + i].abs().max(1.0));
        }
    }

    #[test]
    fn multiparameter_degradation_is_one_minus_correlation_squared(
        h in psd_matrix(2),
        lam in prop::array::uniform2(0.1f64..10.0),
    ) {
        let h = QfiMatrix::new(["T", "K"], h).unwrap();
        let r = qsnr_report(&ParamVector64::new(["T", "K"], lam.to_vec()).unwrap(), &h).unwrap();
        prop_assume!(!r.singular);
        let cor = r.correlation_of("T", "K").unwrap();
        for name in ["T", "K"] {
            let ratio = r.mp_of(name, name).unwrap() / r.sp_of(name).unwrap();
            prop_assert!((ratio - (1.0 - cor * cor)).abs() <= 1e-10 * ratio.abs().max(1e-3));
            prop_assert!(r.mp_of(name, name).unwrap() <= r.sp_of(name).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn measured_observables_never_beat_the_qfi(p in populations(), d in derivative_rows(1), lam in 0.1f64..5.0) {
        let pj = PopulationJacobian::new(["T"], p.to_vec(), d.clone()).unwrap();
        let q_sp = lam * lam * build_qfim(&pj).unwrap().get(0, 0);
        let state = ProbeState::from_populations(p).unwrap();
        for op in [ProbeOperator::Correlator, ProbeOperator::Magnetization, ProbeOperator::MagnetizationSquared] {
            let var = op.variance(&state);
            prop_assume!(var > 1e-12);
            let snr = lam * lam * op.mean_derivative(&d[0]).powi(2) / var;
            prop_assert!(snr <= q_sp * (1.0 + 1e-9) + 1e-12, "{op:?}: {snr} > {q_sp}");
        }
    }

    #[test]
    fn observables_and_states_are_in_bijection(p in populations()) {
        let state = ProbeState::from_populations(p).unwrap();
        let obs = observables_of(&state);
        prop_assert!(obs.is_physical(1e-14));
        let back = rdm_with_field(obs).unwrap().populations();
        for (a, b) in back.iter().zip(p) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_field_triplet_is_degenerate(c in -0.75f64..=0.25) {
        let s = rdm_zero_field(c).unwrap();
        let [_, tp, t0, tm] = s.populations();
        prop_assert!(tp == t0 && t0 == tm);
    }

    #[test]
    fn observable_form_matches_the_chain_rule(p in populations(), jac in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 2)) {
        let obs = observables_of(&ProbeState::from_populations(p).unwrap());
        let jac: Vec<[f64; 3]> = jac;
        let direct = qfim_from_observables(obs, ["T", "K"], &jac).unwrap();
        let chained = build_qfim(&obs.population_jacobian(["T", "K"], &jac).unwrap()).unwrap();
        for (a, b) in direct.elements().iter().zip(chained.elements()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-3));
        }
    }

    #[test]
    fn zero_field_qsnrs_for_t_and_k_coincide(t in 1e-3f64..1e3, y in -30.0f64..30.0) {
        let p = LargeKParams::zero_field(t, y * t).unwrap();
        let jac = large_k::population_jacobian(&p, &["T", "K"]).unwrap();
        let h = build_qfim(&jac).unwrap();
        let r = qsnr_report(&ParamVector64::new(["T", "K"], vec![t, y * t]).unwrap(), &h).unwrap();
        let (qt, qk) = (r.sp_of("T").unwrap(), r.sp_of("K").unwrap());
        prop_assert!((qt - qk).abs() <= 1e-12 * qt.max(qk).max(1e-300));
    }

    #[test]
    fn field_metrology_depends_only_on_ratios(
        t in 0.05f64..5.0, k in -5.0f64..5.0, b in 0.1f64..3.0, factor in 1e-3f64..1e3,
    ) {
        let p = LargeKParams::new(t, k, b).unwrap();
        // Below the population floor the divergence marker depends on the absolute size of the
        // derivative, which carries units; universality is checked where no level is emptied.
        prop_assume!(large_k::populations(&p).populations().iter().all(|&x| x > 1e-12));
        let q = p.rescaled(factor).unwrap();
        let (r1, r2) = (large_k::multiparameter_report(&p).unwrap(), large_k::multiparameter_report(&q).unwrap());
        prop_assert_eq!(r1.singular, r2.singular);
        for (a, c) in r1.mp.iter().zip(&r2.mp) {
            prop_assert!(a == c || (a - c).abs() <= 1e-10 * a.abs().max(1e-300), "{a} vs {c}");
        }
        let h1 = build_qfim(&large_k::population_jacobian(&p, &["T", "K"]).unwrap()).unwrap();
        let h2 = build_qfim(&large_k::population_jacobian(&q, &["T", "K"]).unwrap()).unwrap();
        // Elements that vanish in the exact limit differ at rounding level, so compare against
        // the norm of the rescaled matrix.
        let scale = b * b * h1.norm();
        for (a, c) in h1.elements().iter().zip(h2.elements()) {
            prop_assert!((a * b * b - c * (b * factor).powi(2)).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn extreme_coupling_ratios_stay_finite(t in 1e-3f64..1.0, y in -700.0f64..700.0, b in 0.0f64..2.0) {
        let p = LargeKParams::new(t, y * t, b * t).unwrap();
        let jac = large_k::population_jacobian(&p, &["T", "K", "B"]).unwrap();
        prop_assert!(jac.populations().iter().chain(jac.derivs().iter().flatten()).all(|x| x.is_finite()));
        prop_assert!(large_k::qsnr_sp_universal(y).is_finite());
        prop_assert!(large_k::qfi_thermometry(t, y * t).is_finite() && large_k::qfi_coupling(t, y * t).is_finite());
        // Emptied levels with a residual derivative give the +∞ marker, never NaN.
        prop_assert!(!build_qfim(&jac).unwrap().elements().iter().any(|x| x.is_nan()));
    }

    #[test]
    fn digamma_and_trigamma_recurrences(x in 0.5f64..100.0) {
        let (psi, psi1) = (digamma(x).unwrap(), trigamma(x).unwrap());
        prop_assert!((digamma(x + 1.0).unwrap() - psi - 1.0 / x).abs() < 1e-13 * psi.abs().max(1.0));
        prop_assert!((trigamma(x + 1.0).unwrap() - psi1 + 1.0 / (x * x)).abs() < 1e-13 * psi1.abs().max(1.0));
    }

    #[test]
    fn crossover_entropy_stays_between_its_limits(t in 1e-4f64..1e4) {
        let s = scaled_entropy(t).unwrap();
        prop_assert!((-0.5 * std::f64::consts::LN_2 - 1e-15..=1e-15).contains(&s));
        prop_assert!(scaled_entropy(t * 1.5).unwrap() >= s - 1e-15);
    }

    #[test]
    fn analytic_correlator_obeys_the_maxwell_relation(
        t_over_tk in 1e-4f64..1e-2, dk_over_tk in prop::sample::select(vec![-1e-2, -3e-3, -1e-3, 1e-3, 3e-3, 1e-2]),
    ) {
        let consts = CriticalConstants::<f64>::default();
        let t = t_over_tk * consts.t_k;
        let dk = dk_over_tk * consts.t_k;
        // S varies in δK on the scale sqrt(T T_K / c); Richardson extrapolation of two central
        // differences keeps both truncation and rounding far below the tolerance.
        let h = 0.02 * dk.abs().min((t * consts.t_k / consts.c).sqrt());
        let s = |d: f64| entropy_crossover(t, d, &consts).unwrap().value;
        let central = |h: f64| (s(dk + h) - s(dk - h)) / (2.0 * h);
        let ds_dk = (4.0 * central(0.5 * h) - central(h)) / 3.0;
        let lhs = dc_dt(t, consts.k_c + dk, &consts).unwrap();
        prop_assert!((lhs + ds_dk).abs() <= 1e-6 * lhs.abs(), "{lhs} vs {}", -ds_dk);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn narrow_band_thermodynamics_are_consistent(
        t in 0.05f64..3.0, k in prop_oneof![-1.0f64..-0.2, 0.2f64..1.5], j in 0.1f64..2.0,
    ) {
        // |K| ≥ 0.2 keeps the finite-difference step well above the rounding floor.
        let p = NblParams::new(t, k, j, 0.0).unwrap();
        let sol = narrow_band::solve(&p).unwrap();
        let c = sol.observables().c;
        let df_dk = narrow_band::free_energy_derivative(&p, "K").unwrap();
        prop_assert!((df_dk - c).abs() <= 1e-6 * c.abs().max(1e-3), "∂F/∂K = {df_dk}, C = {c}");
        let df_dt = narrow_band::free_energy_derivative(&p, "T").unwrap();
        prop_assert!((df_dt + sol.entropy).abs() <= 1e-6 * sol.entropy.abs().max(1e-3));
        let [_, tp, t0, tm] = sol.probe.populations();
        prop_assert!((tp - t0).abs() < 1e-12 && (t0 - tm).abs() < 1e-12);
    }

    #[test]
    fn narrow_band_correlator_fades_at_high_temperature(k in -2.0f64..2.0, j in 0.05f64..2.0) {
        let t = 1e3 * k.abs().max(j);
        let c = narrow_band::solve(&NblParams::new(t, k, j, 0.0).unwrap()).unwrap().observables().c;
        prop_assert!(c.abs() < 1e-3);
    }
}

#[test]
fn single_precision_follows_double_precision() {
    let p32 = LargeKParams::<f32>::new(0.7, 1.3, 0.4).unwrap();
    let p64 = LargeKParams::<f64>::new(0.7, 1.3, 0.4).unwrap();
    let (r32, r64) = (
        large_k::multiparameter_report(&p32).unwrap(),
        large_k::multiparameter_report(&p64).unwrap(),
    );
    for (a, b) in r32.mp.iter().zip(&r64.mp) {
        assert_relative_eq!(f64::from(*a), *b, max_relative = 1e-4);
    }
    let obs = ProbeObservables::<f32>::new(-0.2, 0.1, 0.4);
    assert!(obs.is_physical(0.0));
    assert_relative_eq!(
        f64::from(digamma(3.5f32).unwrap()),
        digamma(3.5f64).unwrap(),
        max_relative = 1e-6
    );
}
