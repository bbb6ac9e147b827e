use lwr_core::pde::{
    extract_probes, godunov_flux, greenshields_flux, rankine_hugoniot_speed, solve_bvp, solve_ivp, BoundaryTrace,
    FluxParams, Grid,
};
use proptest::prelude::*;

fn flux() -> FluxParams {
    FluxParams::default()
}

/// Riemann data centred on x = 0.5 with matching ghost states. The horizon
/// keeps every wave at least 0.15 km from either road end.
fn riemann(ul: f64, ur: f64) -> (Grid, Vec<f64>) {
    let p = flux();
    let g = Grid::with_cfl_safety(128, 48, 1.0, &p, 0.9).unwrap();
    let u0 = (0..g.m).map(|i| if (i as f64 + 0.5) * g.dx < 0.5 { ul } else { ur }).collect();
    (g, u0)
}

/// Position where the final profile crosses `level`, interpolating between cell centres.
fn crossing(col: &[f64], dx: f64, level: f64) -> Option<f64> {
    (1..col.len()).find_map(|i| {
        let (a, b) = (col[i - 1] - level, col[i] - level);
        (a * b <= 0.0 && a != b).then(|| (i as f64 - 0.5 + a / (a - b)) * dx)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn periodic_solves_conserve_vehicles(values in prop::collection::vec(0.0f64..=120.0, 32)) {
        let p = flux();
        let g = Grid::with_cfl_safety(32, 96, 1.0, &p, 0.9).unwrap();
        let f = solve_ivp(&values, &g, &p).unwrap();
        let total = f.vehicles(0, g.dx);
        for j in 0..g.n {
            let drift = (f.vehicles(j, g.dx) - total).abs();
            prop_assert!(drift <= 1e-10 * total.max(1e-300), "step {}: drift {}", j, drift);
        }
    }

    #[test]
    fn outputs_stay_in_invariant_region(
        values in prop::collection::vec(0.0f64..=120.0, 16),
        up in prop::collection::vec(0.0f64..=120.0, 40),
        down in prop::collection::vec(0.0f64..=120.0, 40),
    ) {
        let p = flux();
        let g = Grid::with_cfl_safety(16, 40, 1.0, &p, 1.0).unwrap();
        let f = solve_ivp(&values, &g, &p).unwrap();
        prop_assert!(f.values().iter().all(|&u| (0.0..=p.u_max).contains(&u)));
        let b = BoundaryTrace { upstream: up, downstream: down };
        let f = solve_bvp(&values, &b, &g, &p).unwrap();
        prop_assert!(f.values().iter().all(|&u| (0.0..=p.u_max).contains(&u)));
    }

    #[test]
    fn shock_moves_at_rankine_hugoniot_speed(ul in 0.0f64..110.0, gap in 10.0f64..120.0) {
        let ur = (ul + gap).min(120.0);
        prop_assume!(ur - ul >= 10.0);
        let p = flux();
        let (g, u0) = riemann(ul, ur);
        let b = BoundaryTrace::constant(g.n, ul, ur);
        let f = solve_bvp(&u0, &b, &g, &p).unwrap();
        let t = (g.n - 1) as f64 * g.dt;
        let expected = 0.5 + rankine_hugoniot_speed(ul, ur, &p).unwrap() * t;
        let found = crossing(&f.column(g.n - 1), g.dx, 0.5 * (ul + ur)).unwrap();
        prop_assert!((found - expected).abs() <= g.dx, "{} vs {}", found, expected);
    }

    #[test]
    fn rarefaction_is_monotone(ur in 0.0f64..110.0, gap in 1.0f64..120.0) {
        let ul = (ur + gap).min(120.0);
        let p = flux();
        let (g, u0) = riemann(ul, ur);
        let b = BoundaryTrace::constant(g.n, ul, ur);
        let last = solve_bvp(&u0, &b, &g, &p).unwrap().column(g.n - 1);
        for w in last.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", w);
        }
    }

    #[test]
    fn godunov_is_consistent(u in 0.0f64..=120.0) {
        let p = flux();
        prop_assert_eq!(godunov_flux(u, u, &p).unwrap(), greenshields_flux(u, &p).unwrap());
    }

    #[test]
    fn probe_paths_are_monotone(values in prop::collection::vec(0.0f64..=120.0, 32), seed in any::<u64>(), count in 1usize..6) {
        let p = flux();
        let g = Grid::with_cfl_safety(32, 64, 1.0, &p, 0.9).unwrap();
        let f = solve_ivp(&values, &g, &p).unwrap();
        let probes = extract_probes(&f, count, &g, &p, seed);
        prop_assert_eq!(probes.trajectories.len(), count);
        for t in &probes.trajectories {
            for w in t.points.windows(2) {
                prop_assert!(w[1].step > w[0].step);
                prop_assert!(w[1].cell >= w[0].cell);
            }
            for pt in &t.points {
                prop_assert_eq!(pt.density, f.get(pt.cell, pt.step));
            }
        }
    }
}
