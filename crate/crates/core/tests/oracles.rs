use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hysteresis_rd::analysis::free_boundary::{em_index, gamma_alpha_slope, Em};
use hysteresis_rd::dsl::{parse_expression, Constants, VarSet};
use hysteresis_rd::grid::{
    derivative, gagliardo_seminorm, holder_seminorm, interpolate, lq_norm, sobolev_fractional_norm, thomas_solve, Grid, GridFunction,
};
use hysteresis_rd::relay::ThresholdPair;

/// Direct transcription of the membership clauses, tried for every `m`.
fn em_brute_force(phi: &GridFunction, psi: &GridFunction, b: f64, th: &ThresholdPair, q: f64, cap: u64) -> Option<u64> {
    let grid = phi.grid();
    let slope = gamma_alpha_slope(phi, th).unwrap();
    let norm = sobolev_fractional_norm(phi, 2.0 - 2.0 / q, q).unwrap();
    let sup_psi = lq_norm(psi, f64::INFINITY).unwrap();
    (2..=cap).find(|&m| {
        let mf = m as f64;
        let (inv, inv2) = (1.0 / mf, 1.0 / (mf * mf));
        if b < inv || b > 1.0 - inv || norm > mf || sup_psi > mf {
            return false;
        }
        (0..grid.nodes()).all(|i| {
            let x = grid.x(i);
            let u = phi.node(i);
            let ga = th.gamma_alpha(u).unwrap();
            let gb = th.gamma_beta(u).unwrap();
            let left = x > b || gb >= inv2;
            let far = x < b + inv || ga >= inv2;
            let steep = !(x >= b && x <= b + inv && (0.0..=inv2).contains(&ga)) || slope[i] >= inv;
            left && far && steep
        })
    })
}

#[test]
fn em_index_matches_brute_force() {
    let vars = VarSet::state(1);
    let c = Constants::default();
    let th = ThresholdPair::new(parse_expression("1 - u1", &vars, &c).unwrap(), parse_expression("u1 - 0.2", &vars, &c).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cap = 3000;
    let mut finite = 0;
    for _ in 0..150 {
        let n = [10usize, 16, 20][rng.random_range(0..3)];
        let grid = Grid::new(n).unwrap();
        let b = rng.random_range(0.05..0.95);
        let slope = rng.random_range(-0.2..3.0);
        let wiggle = rng.random_range(0.0..0.3);
        let lift = rng.random_range(-0.05..0.3);
        let phi = GridFunction::from_fn(grid, 1, |x, o| o[0] = 1.0 - lift - slope * (x - b) + wiggle * (7.0 * x).sin() * (x - b));
        let amp = rng.random_range(0.0..4.0);
        let psi = GridFunction::from_fn(grid, 1, |x, o| o[0] = amp * (2.0 * x).cos());
        let fast = em_index(&phi, &psi, b, &th, 4.0).unwrap();
        let slow = em_brute_force(&phi, &psi, b, &th, 4.0, cap);
        match (fast, slow) {
            (Em::Finite(m), Some(o)) => {
                assert_eq!(m, o);
                finite += 1;
            }
            (Em::Finite(m), None) => assert!(m > cap, "fast {m}, brute force none up to {cap}"),
            (Em::Infinite, o) => assert_eq!(o, None),
        }
    }
    assert!(finite >= 30, "only {finite} finite cases exercised");
}

#[test]
fn thomas_matches_dense_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in [1usize, 2, 5, 17, 64] {
        let sub: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { rng.random_range(-1.0..1.0) }).collect();
        let sup: Vec<f64> = (0..n).map(|i| if i + 1 == n { 0.0 } else { rng.random_range(-1.0..1.0) }).collect();
        let diag: Vec<f64> = (0..n).map(|_| rng.random_range(2.5..4.0)).collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = rhs.clone();
        thomas_solve(&sub, &diag, &sup, &mut x);
        for i in 0..n {
            let mut r = diag[i] * x[i];
            if i > 0 {
                r += sub[i] * x[i - 1];
            }
            if i + 1 < n {
                r += sup[i] * x[i + 1];
            }
            assert!((r - rhs[i]).abs() < 1e-13, "row {i} of n={n}: residual {}", r - rhs[i]);
        }
    }
}

#[test]
fn gagliardo_matches_the_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let n = rng.random_range(8..40);
        let grid = Grid::new(n).unwrap();
        let vals: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = GridFunction::from_values(grid, 1, vals.clone()).unwrap();
        let (s, q) = (rng.random_range(0.1..0.9), rng.random_range(1.5..5.0));
        let h = grid.h();
        let mut sum = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                if i != j {
                    let dx = (i as f64 - j as f64).abs() * h;
                    sum += (vals[i] - vals[j]).abs().powf(q) / dx.powf(1.0 + q * s);
                }
            }
        }
        let oracle = (h * h * sum).powf(1.0 / q);
        let got = gagliardo_seminorm(&f, s, q);
        assert!((got - oracle).abs() <= 1e-12 * oracle.max(1.0), "{got} vs {oracle}");
    }
}

#[test]
fn derivative_is_exact_on_quadratics() {
    let grid = Grid::new(13).unwrap();
    let f = GridFunction::from_fn(grid, 2, |x, o| {
        o[0] = 3.0 * x * x - x + 2.0;
        o[1] = -0.5 * x * x + 4.0 * x;
    });
    let d = derivative(&f);
    for i in 0..grid.nodes() {
        let x = grid.x(i);
        assert!((d.get(i, 0) - (6.0 * x - 1.0)).abs() < 1e-11);
        assert!((d.get(i, 1) - (4.0 - x)).abs() < 1e-11);
    }
}

#[test]
fn holder_seminorm_of_a_line_is_its_slope_at_full_length() {
    let grid = Grid::new(50).unwrap();
    let f = GridFunction::from_fn(grid, 1, |x, o| o[0] = 2.0 * x);
    // |2(x - y)| / |x - y|^γ is largest at the longest distance.
    assert!((holder_seminorm(&f, 0.5) - 2.0).abs() < 1e-14);
    // Every pair attains it when γ = 1.
    assert!((holder_seminorm(&f, 1.0) - 2.0).abs() < 1e-12);
}

#[test]
fn interpolation_reproduces_linear_functions() {
    let grid = Grid::new(9).unwrap();
    let f = GridFunction::from_fn(grid, 1, |x, o| o[0] = 1.0 - 3.0 * x);
    for x in [0.0, 0.01, 0.3333, 0.5, 0.999, 1.0] {
        assert!((interpolate(&f, x).unwrap()[0] - (1.0 - 3.0 * x)).abs() < 1e-14);
    }
    assert!(interpolate(&f, 1.5).is_err());
}

#[test]
fn topology_survives_grid_refinement() {
    use hysteresis_rd::analysis::free_boundary::check_topology;
    use hysteresis_rd::relay::{init_configuration, Configuration};
    use hysteresis_rd::scenario::Scenario;
    use hysteresis_rd::solver::run;

    let mut s = Scenario::reference();
    s.t_end = 0.3;
    let (state, _) = run(&s.model, &s.initial_data().unwrap(), s.t_end, &s.config).unwrap();
    let coarse = check_topology(&state.xi);
    assert!(coarse.preserved);
    let coarse_grid = state.u.grid();
    for factor in [2usize, 3] {
        let fine_grid = Grid::new(coarse_grid.cells() * factor).unwrap();
        let u = state.u.resample(fine_grid);
        let xi: Vec<Configuration> = (0..fine_grid.nodes())
            .map(|i| {
                let zeta0 = if fine_grid.x(i) <= state.b { Configuration::Plus } else { Configuration::Minus };
                init_configuration(&s.model.thresholds, zeta0, u.node(i)).unwrap()
            })
            .collect();
        let fine = check_topology(&xi);
        assert!(fine.preserved, "refinement by {factor} broke the single interface");
        let (xc, xf) = (coarse_grid.x(coarse.interface.unwrap()), fine_grid.x(fine.interface.unwrap()));
        assert!((xc - xf).abs() <= coarse_grid.h(), "interface moved from {xc} to {xf}");
    }
}
