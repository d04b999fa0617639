use std::f64::consts::PI;

use hk_core::chamber::{
    admissible_witnesses_line_case, alpha_critical_values, classify_extension, enumerate_walls, strata_diagram,
    DivisorData,
};
use hk_core::stability::{
    alpha_slope, cohomology_to_surjective, convert_params, surjective_split, surjective_to_cohomology, theta,
    theta_swap_identity, verdict, verdict_all_viewpoints, AlphaParam, BundleInvariant, BundlePair, ParamTuple,
    SplitInput, StabilityParams, Status, SubobjectWitness, ViewpointParams, WitnessKind,
};
use hk_core::torus::ops::Links;
use hk_core::torus::{
    dbar, dbar_adj, harmonic_project, integrate, laplacian_raw, Complex64, FormType, TorusGrid, TwistedField, Weights,
};
use hk_core::vortex::{flow_step, residual, FlowControls, ProblemSpec, SolverState};
use hk_core::{int, rat, Rational};
use num_traits::Signed;
use proptest::prelude::*;

fn rational(range: i64, den: i64) -> impl Strategy<Value = Rational> {
    (-range * den..=range * den, 1..=den).prop_map(|(n, d)| rat(n as i128, d as i128))
}

fn pair_strategy() -> impl Strategy<Value = BundlePair> {
    (1u32..=4, -20i128..=20, 1u32..=4, -20i128..=20)
        .prop_map(|(r1, d1, r2, d2)| BundlePair::new(BundleInvariant::of(r1, d1), BundleInvariant::of(r2, d2)))
}

/// A pair with a witness fitting inside it.
fn pair_and_witness() -> impl Strategy<Value = (BundlePair, SubobjectWitness)> {
    pair_strategy().prop_flat_map(|pair| {
        (0..=pair.e1.rank, 0..=pair.e2.rank, -20i128..=20, -20i128..=20)
            .prop_filter("nonzero witness", |(a, b, _, _)| a + b > 0)
            .prop_map(move |(rp1, rp2, dp1, dp2)| {
                let side = |r: u32, d: i128| (r > 0).then(|| BundleInvariant::of(r, d));
                let w = SubobjectWitness { sub1: side(rp1, dp1), sub2: side(rp2, dp2), kind: WitnessKind::Subtriple };
                (pair, w)
            })
    })
}

/// Parameters on the constraint hyperplane of `pair` with non-negative weights.
fn params_for(pair: &BundlePair, a1: Rational, a2: Rational, tau1: Rational) -> Option<ParamTuple> {
    let r2 = int(pair.e2.rank as i128);
    let tau2 = (a1 * pair.e1.degree + a2 * pair.e2.degree - tau1 * int(pair.e1.rank as i128)) / r2;
    let p = ParamTuple::new(a1, a2, tau1, tau2);
    p.check(pair).ok().map(|_| p)
}

fn line_extension() -> impl Strategy<Value = (i64, i64, i64)> {
    (-5i64..=5, 1i64..=10)
        .prop_map(|(d1, gap)| (d1, d1 + gap))
        .prop_filter("|d2| <= 5", |(_, d2)| *d2 <= 5)
        .prop_flat_map(|(d1, d2)| (Just(d1), Just(d2), d1..=d2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn theta_sign_is_scale_invariant(
        (pair, w) in pair_and_witness(),
        a1 in rational(4, 3).prop_map(|a| a.abs()),
        a2 in rational(4, 3).prop_map(|a| a.abs()),
        tau1 in rational(10, 4),
        lambda in (1i128..=50, 1i128..=7).prop_map(|(n, d)| rat(n, d)),
    ) {
        let Some(p) = params_for(&pair, a1, a2, tau1) else { return Ok(()) };
        let q = p.scaled(lambda);
        prop_assert_eq!(theta(&p, &w).signum(), theta(&q, &w).signum());
        let list = [w];
        let v = verdict(StabilityParams::Tuple(p), &pair, &list).unwrap();
        let u = verdict(StabilityParams::Tuple(q), &pair, &list).unwrap();
        prop_assert_eq!(v.status, u.status);
    }

    #[test]
    fn theta_vanishes_on_the_full_object(
        pair in pair_strategy(),
        a1 in rational(4, 3).prop_map(|a| a.abs()),
        a2 in rational(4, 3).prop_map(|a| a.abs()),
        tau1 in rational(10, 4),
    ) {
        let Some(p) = params_for(&pair, a1, a2, tau1) else { return Ok(()) };
        prop_assert_eq!(theta(&p, &pair.full(WitnessKind::Subtriple)), int(0));
    }

    #[test]
    fn theta_sign_matches_alpha_slope_comparison((pair, w) in pair_and_witness(), alpha in rational(20, 6)) {
        let p = AlphaParam::new(alpha, &pair).to_tuple();
        let full = alpha_slope(Some(&pair.e1), Some(&pair.e2), alpha).unwrap();
        let sub = alpha_slope(w.sub1.as_ref(), w.sub2.as_ref(), alpha).unwrap();
        prop_assert_eq!(theta(&p, &w) < int(0), sub < full);
        prop_assert_eq!(theta(&p, &w) == int(0), sub == full);
    }

    #[test]
    fn swap_identity_holds(
        (pair, w) in pair_and_witness(),
        a1 in rational(5, 4),
        a2 in rational(5, 4),
        tau1 in rational(10, 4),
        tau2 in rational(10, 4),
    ) {
        let _ = pair;
        let (lhs, rhs) = theta_swap_identity(&ParamTuple::new(a1, a2, tau1, tau2), &w);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn conversions_round_trip(pair in pair_strategy(), alpha in rational(20, 6)) {
        let all = convert_params(ViewpointParams::Extension { alpha }, &pair).unwrap();
        prop_assert_eq!(AlphaParam::from_tuple(&all.cohomology).unwrap(), all.alpha);
        prop_assert_eq!(surjective_to_cohomology(&all.surjective), all.cohomology);
        prop_assert_eq!(cohomology_to_surjective(&all.cohomology), all.surjective);
        prop_assert_eq!(all.cohomology.constraint_defect(&pair), int(0));
        let back = convert_params(ViewpointParams::SurjectiveTriple(all.surjective), &pair).unwrap();
        prop_assert_eq!(back, all);
    }

    #[test]
    fn three_viewpoints_agree((pair, w) in pair_and_witness(), alpha in rational(20, 6)) {
        let v = verdict_all_viewpoints(alpha, &pair, &[w]).unwrap();
        prop_assert!(v.agree(), "{:?}", v);
    }

    #[test]
    fn split_rank_defect_is_non_negative_and_decides_sign(
        rk in 0u32..=2, ri in 0u32..=2, extra in 0u32..=2,
        dk in -6i128..=6, di in -6i128..=6, dq in -6i128..=6,
        tau in rational(6, 4), alpha in (1i128..=12, 1i128..=4).prop_map(|(n, d)| rat(n, d)),
    ) {
        let rq = ri + extra;
        prop_assume!(rk + ri > 0 && rq > 0);
        // zero sheaves carry zero degree
        let dk = if rk == 0 { 0 } else { dk };
        let di = if ri == 0 { 0 } else { di };
        let dq = dq + di;
        let b = |r: u32, d: i128| (r > 0).then(|| BundleInvariant::of(r, d));
        let input = SplitInput {
            sub_total: BundleInvariant::of(rk + ri, dk + di),
            sub_quotient: BundleInvariant::of(rq, dq),
            kernel: b(rk, dk),
            image: b(ri, di),
            preimage: BundleInvariant::of(rk + rq, dk + dq),
        };
        // a1 = a2, tau1 > tau2
        let p = ParamTuple::new(int(1), int(1), tau, tau - alpha);
        let rec = surjective_split(&p, &input).unwrap();
        prop_assert!(rec.delta_r >= 0);
        prop_assert!(rec.holds());
        if rec.twice_theta >= int(0) {
            prop_assert!(rec.theta_image.max(rec.theta_preimage) >= int(0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_matches_witness_oracle((d1, d2, div) in line_extension(), num in -40i128..=40) {
        let alpha = rat(2 * num + 1, 4);
        let dd = DivisorData::new(div);
        let ws = admissible_witnesses_line_case(d1, d2, &dd).unwrap();
        let pair = BundlePair::lines(d1 as i128, d2 as i128);
        let oracle = verdict(StabilityParams::Alpha(AlphaParam::new(alpha, &pair)), &pair, &ws).unwrap();
        let closed = classify_extension(d1, d2, &dd, alpha).unwrap();
        prop_assert_eq!(closed.verdict.status, oracle.status);
    }

    #[test]
    fn critical_values_are_spaced_by_two((d1, d2, _) in line_extension()) {
        let c = alpha_critical_values(d1, d2).unwrap();
        prop_assert_eq!(c[0], int((d1 - d2) as i128));
        prop_assert_eq!(*c.last().unwrap(), int((d2 - d1) as i128));
        prop_assert!(c.windows(2).all(|w| w[1] - w[0] == int(2)));
    }

    #[test]
    fn strata_shrink_as_k_grows((d1, d2, div) in line_extension()) {
        let diag = strata_diagram(d1, d2).unwrap();
        let dd = DivisorData::new(div);
        for &(sup, sub) in &diag.containments {
            prop_assert!(sub > sup);
            let (a, b) = (diag.stratum(sup).unwrap(), diag.stratum(sub).unwrap());
            // membership in the smaller stratum implies membership in the larger
            prop_assert!(!b.contains(d1, d2, &dd) || a.contains(d1, d2, &dd));
        }
        // membership is stability at the midpoint
        for s in &diag.strata {
            let mid = (s.interval.0 + s.interval.1) / int(2);
            let stable = classify_extension(d1, d2, &dd, mid).unwrap().verdict.status == Status::Stable;
            prop_assert_eq!(s.contains(d1, d2, &dd), stable);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn wall_set_is_stable_once_the_box_is_large((d1, d2) in (-2i64..=1, 1i64..=3).prop_map(|(a, g)| (a, a + g))) {
        let b0 = d1.abs().max(d2.abs()).max(1);
        let small = enumerate_walls(d1, d2, 1, 1, b0).unwrap();
        let large = enumerate_walls(d1, d2, 1, 1, b0 + 2).unwrap();
        // every projective class found in the small box is found again
        let classes = |a: &hk_core::chamber::WallArrangement| {
            a.walls.iter().map(|w| projective_class(w.normal)).collect::<std::collections::BTreeSet<_>>()
        };
        prop_assert!(classes(&small).is_subset(&classes(&large)));
        // the alpha crossings inside the critical range are already complete
        let pair = BundlePair::lines(d1 as i128, d2 as i128);
        let inside = |a: &hk_core::chamber::WallArrangement| {
            let (lo, hi) = (int((d1 - d2) as i128), int((d2 - d1) as i128));
            let mut v: Vec<Rational> = a.walls.iter().filter(|w| !w.degenerate)
                .filter(|w| w.witness.total_rank() == 1)
                .filter_map(|w| w.alpha_crossing(&pair)).filter(|x| *x >= lo && *x <= hi).collect();
            v.sort();
            v.dedup();
            v
        };
        prop_assert_eq!(inside(&small), inside(&large));
    }
}

fn projective_class(v: [i64; 4]) -> [i64; 4] {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 { a.abs() } else { gcd(b, a % b) }
    }
    let g = v.iter().fold(0, |g, &x| gcd(g, x)).max(1);
    let sign = v.iter().find(|x| **x != 0).map_or(1, |x| x.signum());
    v.map(|x| sign * x / g)
}

fn smooth_field(grid: TorusGrid, twist: i64, form: FormType, c: [f64; 4]) -> TwistedField {
    // periodic in x; the y-direction boundary condition is carried by the links,
    // so any grid values are admissible samples
    TwistedField::from_fn(grid, twist, form, |x, y| {
        Complex64::new((2.0 * PI * (x * c[0] + y)).sin() + c[1] * y, (2.0 * PI * x).cos() * c[2] + c[3] * x * y)
    })
}

fn log_weight(grid: TorusGrid, c: [f64; 2]) -> Vec<f64> {
    (0..grid.n())
        .flat_map(|i| (0..grid.n()).map(move |j| (i, j)))
        .map(|(i, j)| c[0] * (2.0 * PI * grid.x(i)).sin() * (2.0 * PI * grid.y(j)).cos() + c[1])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dbar_adjointness(
        twist in -3i64..=3,
        n in prop::sample::select(vec![16usize, 32]),
        a in prop::array::uniform4(-2.0f64..2.0),
        b in prop::array::uniform4(-2.0f64..2.0),
        w in prop::array::uniform2(-1.0f64..1.0),
        weighted in any::<bool>(),
    ) {
        let g = TorusGrid::new(n).unwrap();
        let s = smooth_field(g, twist, FormType::Function, a);
        let t = smooth_field(g, twist, FormType::ZeroOneForm, b);
        let weights = if weighted { Weights::from_log(&log_weight(g, w)) } else { Weights::flat(g) };
        let lhs = dbar(&s).unwrap().weighted_inner(&t, &weights);
        let rhs = s.weighted_inner(&dbar_adj(&t, &weights).unwrap(), &weights);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn laplacian_integrates_to_zero(n in prop::sample::select(vec![16usize, 32, 64]), c in prop::array::uniform2(-3.0f64..3.0)) {
        let g = TorusGrid::new(n).unwrap();
        let u: Vec<f64> = log_weight(g, c).iter().enumerate().map(|(k, v)| v + (k as f64 * 0.37).sin()).collect();
        let s = integrate(g, &laplacian_raw(g, &u));
        prop_assert!(s.abs() < 1e-13 * u.iter().fold(1.0f64, |m, v| m.max(v.abs())) * (n * n) as f64 / 256.0, "{s:e}");
    }

    #[test]
    fn transport_around_the_torus_picks_up_the_degree(twist in -3i64..=3, n in prop::sample::select(vec![16usize, 32])) {
        let g = TorusGrid::new(n).unwrap();
        let links = Links::new(g, twist);
        let mut total = Complex64::new(1.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                total *= links.plaquette_holonomy(i, j);
            }
        }
        let expected = Complex64::from_polar(1.0, -2.0 * PI * twist as f64);
        prop_assert!((total - expected).norm() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn projection_never_increases_the_norm(twist in -2i64..=2, c in prop::array::uniform4(-2.0f64..2.0), w in prop::array::uniform2(-0.5f64..0.5)) {
        let g = TorusGrid::new(32).unwrap();
        let phi = smooth_field(g, twist, FormType::ZeroOneForm, c);
        let weights = Weights::from_log(&log_weight(g, w));
        let p = harmonic_project(&phi, &weights).unwrap();
        let before = phi.weighted_norm_sq(&weights);
        let after = p.field.weighted_norm_sq(&weights);
        prop_assert!(after <= before * (1.0 + 1e-10));
        // idempotent
        let again = harmonic_project(&p.field, &weights).unwrap();
        prop_assert!(again.field.sub(&p.field).norm_sq().sqrt() <= 1e-6 * phi.norm_sq().sqrt());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn flow_steps_preserve_gauge_and_conservation(num in -9i128..=9, steps in 1usize..=25) {
        let g = TorusGrid::new(16).unwrap();
        let spec = ProblemSpec::new(-1, 0, rat(num, 10), g).with_flow(FlowControls { projection_interval: 5, ..FlowControls::default() });
        let mut state = SolverState::initial(&spec).unwrap();
        let solver = hk_core::torus::fft::PeriodicSolver::new(g);
        for _ in 0..steps {
            let before = state.functional;
            let info = flow_step(&mut state, &spec, &solver).unwrap();
            prop_assert!(state.functional <= before + 1e-12 * before.abs().max(1.0));
            prop_assert!(state.gauge_defect().abs() < 1e-12);
            prop_assert!(residual(&state, &spec).trace_integral.abs() < 1e-10);
            if info.projected {
                prop_assert!(state.class_membership_residual().unwrap() < 1e-8);
            }
        }
    }
}
