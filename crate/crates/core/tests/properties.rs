use holoball_core::carleson::{
    ball_quantity, ball_value, berezin_lt, berezin_value, lattice_seq_norm, muhat_lt,
    CriterionParams,
};
use holoball_core::geometry::{mobius, rho, rho_upper_bound};
use holoball_core::holo::{validate_self_map, HoloMap, KernelPower, ValidatedMap};
use holoball_core::lattice::{build_lattice_with_budget, count_in, counting_bound, separation_of};
use holoball_core::measure::{sample_nu_alpha, DiscreteMeasure, WeightParams};
use holoball_core::opnorm::{OperatorSample, OperatorSpec};
use holoball_core::supgrid::SupGrid;
use holoball_core::BallPoint;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Point with `|z| <= radius` from polar-ish coordinates.
fn point(n: usize, radius: f64) -> impl Strategy<Value = BallPoint> {
    (
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n),
        0.0f64..1.0,
    )
        .prop_filter_map("zero direction", move |(raw, t)| {
            let c: Vec<Complex64> = raw.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-6 {
                return None;
            }
            let s = radius * t / norm;
            BallPoint::from_complex(c.into_iter().map(|z| z * s).collect()).ok()
        })
}

fn measure(n: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((point(n, 0.97), 0.01f64..2.0), 1..12).prop_map(move |atoms| {
        let (p, w): (Vec<_>, Vec<_>) = atoms.into_iter().unzip();
        DiscreteMeasure::new(n, p, w).unwrap()
    })
}

fn grid_only() -> SupGrid {
    SupGrid {
        shells: 5,
        directions: 8,
        refine: false,
    }
}

fn params(n: usize, alpha: f64) -> CriterionParams {
    CriterionParams::new(n, 1.0, alpha, 0.5).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_is_symmetric_and_bounded(z in point(2, 0.999), w in point(2, 0.999)) {
        let d = rho(&z, &w);
        prop_assert_eq!(d.to_bits(), rho(&w, &z).to_bits());
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(rho(&z, &z) <= 1e-12);
        prop_assert!(d <= rho_upper_bound(&z, &w) + 1e-12);
    }

    #[test]
    fn mobius_is_an_involution(z in point(3, 0.95), w in point(3, 0.95)) {
        let back = mobius(&z, &mobius(&z, &w));
        prop_assert!(back.vec().dist_sqr(w.vec()).sqrt() < 1e-10);
    }

    #[test]
    fn strong_triangle(z in point(2, 0.99), w in point(2, 0.99), a in point(2, 0.99)) {
        let (x, y) = (rho(&z, &a), rho(&a, &w));
        prop_assert!(rho(&z, &w) <= (x + y) / (1.0 + x * y) + 1e-12);
    }

    #[test]
    fn criteria_scale_exactly_with_powers_of_two(
        mu in measure(2),
        a in point(2, 0.99),
        k in -8i32..8,
    ) {
        let c = 2f64.powi(k);
        let scaled = mu.scaled(c).unwrap();
        let pr = params(2, 0.5);
        prop_assert_eq!(ball_value(&scaled, &pr, &a), c * ball_value(&mu, &pr, &a));
        prop_assert_eq!(
            berezin_value(&scaled, &pr, &a).unwrap().value,
            c * berezin_value(&mu, &pr, &a).unwrap().value
        );
        let g = grid_only();
        prop_assert_eq!(
            ball_quantity(&scaled, &pr, &g).unwrap().value,
            c * ball_quantity(&mu, &pr, &g).unwrap().value
        );
    }

    #[test]
    fn criteria_are_homogeneous(mu in measure(1), c in 0.01f64..100.0) {
        let scaled = mu.scaled(c).unwrap();
        let pr = params(1, 0.0);
        let nu = sample_nu_alpha(&WeightParams::new(1, 0.0).unwrap(), 200, 3).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y.abs().max(1e-300);
        let (a, b) = (
            muhat_lt(&scaled, &pr, 2.0, 1.0, &nu).unwrap().value,
            muhat_lt(&mu, &pr, 2.0, 1.0, &nu).unwrap().value,
        );
        prop_assert!(close(a, c * b), "{a} vs {}", c * b);
        let (a, b) = (
            berezin_lt(&scaled, &pr, 3.0, 2.0, &nu).unwrap().value,
            berezin_lt(&mu, &pr, 3.0, 2.0, &nu).unwrap().value,
        );
        prop_assert!(close(a, c * b), "{a} vs {}", c * b);
    }

    #[test]
    fn adding_an_atom_never_decreases(
        mu in measure(1),
        extra in point(1, 0.97),
        w in 0.0f64..1.0,
        a in point(1, 0.99),
    ) {
        let bigger = mu.with_atom(extra, w).unwrap();
        let pr = params(1, 0.0);
        prop_assert!(ball_value(&bigger, &pr, &a) >= ball_value(&mu, &pr, &a));
        prop_assert!(
            berezin_value(&bigger, &pr, &a).unwrap().value
                >= berezin_value(&mu, &pr, &a).unwrap().value
        );
        let g = grid_only();
        prop_assert!(
            ball_quantity(&bigger, &pr, &g).unwrap().value
                >= ball_quantity(&mu, &pr, &g).unwrap().value
        );
        let nu = sample_nu_alpha(&WeightParams::new(1, 0.0).unwrap(), 200, 5).unwrap();
        prop_assert!(
            muhat_lt(&bigger, &pr, 2.0, 1.0, &nu).unwrap().value
                >= muhat_lt(&mu, &pr, 2.0, 1.0, &nu).unwrap().value
        );
        prop_assert!(
            berezin_lt(&bigger, &pr, 2.0, 1.0, &nu).unwrap().value
                >= berezin_lt(&mu, &pr, 2.0, 1.0, &nu).unwrap().value
        );
        let lat = build_lattice_with_budget(1, 0.5, 0.9, 2, 2000).unwrap();
        prop_assert!(
            lattice_seq_norm(&bigger, &lat, &pr, 2.0, 1.0).unwrap()
                >= lattice_seq_norm(&mu, &lat, &pr, 2.0, 1.0).unwrap()
        );
    }
}

fn vm(map: HoloMap) -> ValidatedMap {
    validate_self_map(&map, &[0.5, 0.99], 64, 1).unwrap()
}

fn diagonal(m: (f64, f64)) -> HoloMap {
    HoloMap::Diagonal {
        multipliers: vec![Complex64::from_polar(m.0, m.1)],
    }
}

fn multiplier() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..0.95, -3.0f64..3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gamma_zero_law_and_symmetry(
        m1 in multiplier(),
        m2 in multiplier(),
        a in point(1, 0.99),
        seed in 0u64..1000,
    ) {
        let nu = sample_nu_alpha(&WeightParams::new(1, 0.0).unwrap(), 400, seed).unwrap();
        let spec = OperatorSpec::new(vm(diagonal(m1)), vm(diagonal(m2)), 2.0, 1.0, 0.0, 0.0)
            .unwrap();
        let swapped = spec.swapped();
        let s1 = OperatorSample::new(&spec, &nu).unwrap();
        let s2 = OperatorSample::new(&swapped, &nu).unwrap();
        for importance in [false, true] {
            let g1 = s1.gamma(2.0, &a, importance).unwrap();
            let g2 = s2.gamma(2.0, &a, importance).unwrap();
            prop_assert_eq!(g1.value.to_bits(), g2.value.to_bits());
        }
        let same = OperatorSpec::new(vm(diagonal(m1)), vm(diagonal(m1)), 2.0, 1.0, 0.0, 0.0)
            .unwrap();
        let s0 = OperatorSample::new(&same, &nu).unwrap();
        prop_assert_eq!(s0.gamma(2.0, &a, true).unwrap().value, 0.0);
    }

    #[test]
    fn gamma_is_non_increasing_in_q(
        m1 in multiplier(),
        m2 in multiplier(),
        a in point(1, 0.99),
        q in 0.2f64..4.0,
        dq in 0.01f64..2.0,
    ) {
        let nu = sample_nu_alpha(&WeightParams::new(1, 0.0).unwrap(), 400, 9).unwrap();
        // p moves with q so that lambda, hence the kernel, stays fixed
        let spec = |q: f64| {
            OperatorSpec::new(vm(diagonal(m1)), vm(diagonal(m2)), 2.0 * q, q, 0.0, 0.0).unwrap()
        };
        let (lo, hi) = (spec(q), spec(q + dq));
        let g_lo = OperatorSample::new(&lo, &nu).unwrap().gamma(2.0, &a, false).unwrap();
        let g_hi = OperatorSample::new(&hi, &nu).unwrap().gamma(2.0, &a, false).unwrap();
        prop_assert!(g_hi.value <= g_lo.value * (1.0 + 1e-12), "{} > {}", g_hi.value, g_lo.value);
    }

    #[test]
    fn lattices_are_deterministic_and_separated(
        n in 1usize..3,
        r in 0.4f64..0.8,
        seed in 0u64..1000,
    ) {
        let a = build_lattice_with_budget(n, r, 0.7, seed, 2000).unwrap();
        let b = build_lattice_with_budget(n, r, 0.7, seed, 2000).unwrap();
        prop_assert_eq!(&a, &b);
        if a.len() > 1 {
            prop_assert!(separation_of(&a.centers).unwrap() >= r);
        }
        let bound = counting_bound(a.separation, r, n).floor() as usize;
        for c in a.centers.iter().take(20) {
            prop_assert!(count_in(&a, c, r) <= bound);
        }
    }
}

#[test]
fn kernel_powers_stay_on_the_principal_branch() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let n = 2;
    let steps = 256;
    let rand_point = |rng: &mut ChaCha8Rng, radius: f64| loop {
        let c: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            break c.into_iter().map(|z| z * radius).collect::<Vec<_>>();
        }
    };
    for _ in 0..1000 {
        let w = BallPoint::from_complex(rand_point(&mut rng, 0.99)).unwrap();
        let exponent = rng.random_range(-3.0..6.0);
        let k = KernelPower::at(&w, exponent, 1.0, 1.0).unwrap();
        let z0 = rand_point(&mut rng, 0.95);
        let z1 = rand_point(&mut rng, 0.95);
        let at = |t: f64| {
            BallPoint::from_complex(z0.iter().zip(&z1).map(|(a, b)| a + (b - a) * t).collect())
                .unwrap()
        };
        let step_len = z0
            .iter()
            .zip(&z1)
            .map(|(a, b)| (b - a).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / steps as f64;
        let mut prev = at(0.0);
        for i in 1..=steps {
            let cur = at(i as f64 / steps as f64);
            let (f0, f1) = (k.eval(&prev), k.eval(&cur));
            let (d0, d1) = (k.denominator(&prev), k.denominator(&cur));
            // |d/dt f| = |exponent| |f| |d'| / |d|, with |d'| <= |w| |dz|
            let lip = exponent.abs() * f0.norm().max(f1.norm()) * w.norm() * step_len
                / d0.norm().min(d1.norm());
            let jump = (f1 - f0).norm();
            assert!(
                jump <= 2.0 * lip + 1e-12 * f0.norm(),
                "jump {jump} > 2 * {lip} at step {i}"
            );
            prev = cur;
        }
    }
}
