use apdiff::fieldline::{trace, trace_all, TraceOptions};
use apdiff::grid::Grid;
use apdiff::problems::{self, CaseField};
use proptest::prelude::*;

fn example4_field() -> apdiff::anisotropy::AnisotropyField {
    match problems::example4(1e-6, false).field {
        CaseField::General(f) => f,
        CaseField::Aligned(_) => unreachable!(),
    }
}

/// `y` in `[0, 1]` with `level_set(x, y) = target`, by bisection.
fn level_root(x: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    let g = |y: f64| problems::level_set(x, y) - target;
    assert!(g(lo) * g(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn midline_crossing_at_half() {
    let field = example4_field();
    let grid = Grid::new(1.0, 1.0, 32, 32).unwrap();
    let line = trace(&field, &grid, 16, &TraceOptions::default()).unwrap();
    let y = line.ybar[16];
    assert!((y - (0.5 + 0.5 / std::f64::consts::PI)).abs() < 1e-5, "{y}");
    let root = level_root(0.5, problems::level_set(1.0, 0.5));
    assert!((y - root).abs() < 1e-5);
}

#[test]
fn every_line_follows_its_level_set() {
    let field = example4_field();
    let grid = Grid::new(1.0, 1.0, 64, 64).unwrap();
    for line in trace_all(&field, &grid, &TraceOptions::default()).unwrap() {
        let target = problems::level_set(1.0, grid.y(line.k));
        for i in 0..=grid.ni() {
            let want = level_root(grid.x(i), target);
            assert!((line.ybar[i] - want).abs() < 1e-6, "k={} i={i}", line.k);
        }
        assert_eq!(line.ybar[grid.ni()], grid.y(line.k));
        assert_eq!(line.e[0], 1.0);
        assert!(line.e.iter().all(|&e| e > 0.0));
    }
}

#[test]
fn substep_refinement_is_second_order() {
    let field = example4_field();
    let grid = Grid::new(1.0, 1.0, 16, 16).unwrap();
    let at = |n: usize| {
        let opts = TraceOptions {
            substeps_per_cell: n,
            ..TraceOptions::default()
        };
        trace(&field, &grid, 5, &opts).unwrap().ybar
    };
    let diff = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    for base in [2usize, 5, 10, 20] {
        let (a, b, c) = (at(base), at(2 * base), at(4 * base));
        let ratio = diff(&a, &b) / diff(&b, &c);
        assert!((3.5..=4.5).contains(&ratio), "base {base}: ratio {ratio}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lines_stay_inside_and_e_is_positive(n in 8usize..40, k_frac in 0.05f64..0.95, sub in 4usize..30) {
        let field = example4_field();
        let grid = Grid::new(1.0, 1.0, n, n).unwrap();
        let k = ((k_frac * n as f64) as usize).clamp(1, n - 1);
        let opts = TraceOptions { substeps_per_cell: sub, ..TraceOptions::default() };
        let mut line = trace(&field, &grid, k, &opts).unwrap();
        apdiff::fieldline::compute_e(&mut line, &field, &grid, opts.theta_min).unwrap();
        prop_assert_eq!(line.ybar.len(), n + 1);
        for i in 0..=n {
            let y = line.ybar[i];
            prop_assert!((0.0..=1.0).contains(&y));
            let r = line.cell_row[i];
            let tol = 1e-9 * grid.hy();
            prop_assert!(grid.y(r) - tol <= y && (y < grid.y(r) + grid.hy() || r + 1 == n));
            prop_assert!(line.e[i] > 0.0);
        }
    }
}
