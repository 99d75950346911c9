mod common;

use stubborn_usd_core::coupling::config_geq;
use stubborn_usd_core::oracle::solve_chain;
use stubborn_usd_core::Configuration;

#[test]
fn three_agents_hand_derived() {
    // Hand elimination of the n = 3, p = 1/2 chain gives win1(1,2,0) = 4/9.
    let exact = common::exact_win1(3, common::Q::new(1, 2));
    assert_eq!(exact[&(1, 2, 0)], common::Q::new(4, 9));
    let sol = solve_chain(3, 0.5).unwrap();
    let c = Configuration { x1: 1, x2: 2, u: 0 };
    assert!((sol.win1(&c) - 4.0 / 9.0).abs() < 1e-9);
}

#[test]
fn matches_rational_elimination() {
    for (n, num, den) in [(4u64, 1i128, 4i128), (5, 3, 10), (6, 0, 1), (6, 1, 1)] {
        let exact = common::exact_win1(n, common::Q::new(num, den));
        let sol = solve_chain(n, num as f64 / den as f64).unwrap();
        for c in Configuration::enumerate(n) {
            let q = exact[&(c.x1, c.x2, c.u)];
            let want = *q.numer() as f64 / *q.denom() as f64;
            assert!((sol.win1(&c) - want).abs() < 1e-12, "n={n} {c}");
        }
    }
}

#[test]
fn residuals_small() {
    for n in [2, 5, 11, 23, 40] {
        for p in [0.0, 0.3, 1.0] {
            let sol = solve_chain(n, p).unwrap();
            assert!(sol.residual <= 1e-10, "n={n} p={p}: {}", sol.residual);
        }
    }
}

#[test]
fn monotone_in_order_and_stubbornness() {
    for n in 2..=14u64 {
        let grid: Vec<_> = (0..=10).map(|k| solve_chain(n, k as f64 / 10.0).unwrap()).collect();
        let states: Vec<_> = Configuration::enumerate(n).collect();
        for sol in &grid {
            for a in &states {
                for b in &states {
                    if config_geq(a, b).unwrap() {
                        assert!(sol.win1(a) >= sol.win1(b) - 1e-9, "n={n} p={} {a} {b}", sol.p);
                    }
                }
            }
        }
        for w in grid.windows(2) {
            for c in &states {
                assert!(w[1].win1(c) >= w[0].win1(c) - 1e-9);
            }
        }
    }
}

#[test]
fn swap_symmetry_at_p0() {
    let sol = solve_chain(11, 0.0).unwrap();
    for c in Configuration::enumerate(11) {
        assert!((sol.win1(&c) - sol.win2(&c.mirrored())).abs() < 1e-12);
    }
}

#[test]
fn crosses_one_half_near_threshold() {
    // (4, 6, 2): threshold 1/3; win1 is increasing in p and passes 1/2.
    let c = Configuration { x1: 4, x2: 6, u: 2 };
    let values: Vec<f64> = (0..=20)
        .map(|k| solve_chain(12, k as f64 / 20.0).unwrap().win1(&c))
        .collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!(values[0] < 0.5 && *values.last().unwrap() > 0.5);
    let crossing = values.iter().position(|v| *v >= 0.5).unwrap() as f64 / 20.0;
    assert!((crossing - 1.0 / 3.0).abs() <= 0.25, "{crossing}");
}
