//! Running cases, measuring errors and sweeping grids and anisotropies.

pub mod config;
pub mod report;

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{EpsilonSpec, Flags, OneOrMany, OutputPaths, RunConfig, Scheme, TanhSpec};
pub use report::{csv_string, read_csv, write_csv, RunReport, CSV_COLUMNS};

use crate::anisotropy::TanhEpsProfile;
use crate::assembly::{
    assemble_ap_aligned, assemble_ap_general, assemble_naive_aligned, assemble_naive_general,
};
use crate::error::{Error, Result};
use crate::fieldline::{trace_all, FieldLine, TraceOptions};
use crate::grid::Grid;
use crate::linalg::{solve_with, Factorization, SparseSystem, SymbolicLu};
use crate::problems::{self, CaseDefinition, CaseField};

/// Trapezoid-weighted discrete L2 norm of `u - v`, normalized by the
/// domain area (a weighted RMS; equal to the plain L2 norm on the unit square).
pub fn discrete_l2(grid: &Grid, u: &[f64], v: &[f64]) -> Result<f64> {
    let n = grid.n_nodes();
    for len in [u.len(), v.len()] {
        if len != n {
            return Err(Error::ShapeMismatch { expected: n, got: len });
        }
    }
    let (ni, nj) = (grid.ni(), grid.nj());
    let mut acc = 0.0;
    for j in 0..=nj {
        let wy = if j == 0 || j == nj { 0.5 } else { 1.0 };
        for i in 0..=ni {
            let wx = if i == 0 || i == ni { 0.5 } else { 1.0 };
            let d = u[grid.idx(i, j)] - v[grid.idx(i, j)];
            acc += wx * wy * d * d;
        }
    }
    Ok((acc / (ni * nj) as f64).sqrt())
}

/// `log2(e_coarse / e_fine)`.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(Error::NonPositiveError {
            coarse: e_coarse,
            fine: e_fine,
        });
    }
    Ok((e_coarse / e_fine).log2())
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub problem: String,
    pub scheme: Scheme,
    pub ni: usize,
    pub nj: usize,
    pub epsilon: f64,
    pub profile: Option<TanhEpsProfile>,
    pub substeps_per_cell: usize,
    pub homogeneous_flux: bool,
    /// Estimate the condition number (and flag near-singular systems).
    pub condition: bool,
}

impl RunSpec {
    pub fn new(problem: &str, scheme: Scheme, ni: usize, nj: usize, epsilon: f64) -> Self {
        Self {
            problem: problem.into(),
            scheme,
            ni,
            nj,
            epsilon,
            profile: None,
            substeps_per_cell: 20,
            homogeneous_flux: false,
            condition: true,
        }
    }

    pub fn case(&self) -> Result<CaseDefinition> {
        let mut case = problems::build(&self.problem, self.epsilon, self.profile)?;
        if self.homogeneous_flux {
            case.phi = None;
        }
        Ok(case)
    }

    pub fn trace_options(&self) -> TraceOptions {
        TraceOptions {
            substeps_per_cell: self.substeps_per_cell,
            ..TraceOptions::default()
        }
    }
}

/// Report plus the data behind it.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub grid: Grid,
    pub solution: Vec<f64>,
    pub exact: Option<Vec<f64>>,
}

pub fn assemble_case(case: &CaseDefinition, grid: &Grid, scheme: Scheme, opts: &TraceOptions) -> Result<SparseSystem> {
    let phi = case.phi.as_ref();
    match (&case.field, scheme) {
        (CaseField::Aligned(c), Scheme::Aligned5) => assemble_ap_aligned(grid, c, &case.f, phi),
        (CaseField::Aligned(c), Scheme::Naive5) => assemble_naive_aligned(grid, c, &case.f, phi),
        (CaseField::General(fld), Scheme::General9) => assemble_ap_general(grid, fld, &case.f, phi, opts),
        (CaseField::General(fld), Scheme::Naive9) => assemble_naive_general(grid, fld, &case.f, phi),
        (_, s) => Err(Error::Config(format!(
            "scheme {} does not apply to {} ({:?} field)",
            s.name(),
            case.name,
            case.hint
        ))),
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Assemble, factorize, solve and measure one case.
pub fn run_case(spec: &RunSpec) -> Result<RunOutcome> {
    run_case_reusing(spec, &mut None)
}

/// As [`run_case`], reusing `symbolic` when the assembled matrix has its
/// sparsity pattern and replacing it otherwise.
pub fn run_case_reusing(spec: &RunSpec, symbolic: &mut Option<Arc<SymbolicLu>>) -> Result<RunOutcome> {
    let case = spec.case()?;
    let grid = case.grid(spec.ni, spec.nj)?;

    let t = Instant::now();
    let system = assemble_case(&case, &grid, spec.scheme, &spec.trace_options())?;
    let assemble_ms = ms(t);

    let t = Instant::now();
    let sym = match symbolic.take() {
        Some(s) if s.matches(&system.matrix) => s,
        _ => Arc::new(SymbolicLu::analyze(&system.matrix)?),
    };
    *symbolic = Some(sym.clone());
    let fact = Factorization::with_symbolic(&system.matrix, sym)?;
    let factor_ms = ms(t);

    let t = Instant::now();
    let res = solve_with(&system, &fact, spec.condition)?;
    let solve_ms = ms(t);

    let exact = case.u_exact.as_ref().map(|u| grid.sample(|x, y| u(x, y)));
    let l2_error = match &exact {
        Some(e) => discrete_l2(&grid, &res.solution, e)?,
        None => f64::NAN,
    };
    let report = RunReport {
        problem: spec.problem.clone(),
        scheme: spec.scheme,
        ni: spec.ni,
        nj: spec.nj,
        epsilon: spec.epsilon,
        l2_error,
        order_vs_prev_grid: None,
        cond_estimate: res.factor_stats.cond_equilibrated,
        residual_inf: res.residual_inf,
        assemble_ms,
        factor_ms,
        solve_ms,
        failure: None,
    };
    Ok(RunOutcome {
        report,
        grid,
        solution: res.solution,
        exact,
    })
}

/// Fill `order_vs_prev_grid` from the previous row with the same problem,
/// scheme and epsilon whose grid is exactly half as fine in both directions.
pub fn fill_orders(reports: &mut [RunReport]) {
    for k in 0..reports.len() {
        let cur = &reports[k];
        let prev = reports.iter().find(|p| {
            p.problem == cur.problem
                && p.scheme == cur.scheme
                && p.epsilon == cur.epsilon
                && p.ni * 2 == cur.ni
                && p.nj * 2 == cur.nj
        });
        let order = match prev {
            Some(p) if p.is_ok() && cur.is_ok() => observed_order(p.l2_error, cur.l2_error).ok(),
            _ => None,
        };
        reports[k].order_vs_prev_grid = order;
    }
}

/// Sort key: epsilon descending, then grid size ascending.
fn order_key(a: &RunReport, b: &RunReport) -> std::cmp::Ordering {
    b.epsilon
        .total_cmp(&a.epsilon)
        .then(a.scheme.cmp(&b.scheme))
        .then((a.ni, a.nj).cmp(&(b.ni, b.nj)))
}

fn run_or_tag(spec: &RunSpec, symbolic: &mut Option<Arc<SymbolicLu>>) -> RunReport {
    match run_case_reusing(spec, symbolic) {
        Ok(o) => o.report,
        Err(e) => RunReport::failed(&spec.problem, spec.scheme, spec.ni, spec.nj, spec.epsilon, e.tag()),
    }
}

/// Every `(grid, epsilon)` combination of the config. Failed cells become
/// tagged rows; the rest of the sweep continues.
pub fn sweep_specs(cfg: &RunConfig, scheme: Scheme) -> Vec<RunSpec> {
    let mut specs = Vec::new();
    for (eps, profile) in cfg.epsilon.expand() {
        for [ni, nj] in cfg.grid.to_vec() {
            specs.push(RunSpec {
                problem: cfg.problem.clone(),
                scheme,
                ni,
                nj,
                epsilon: eps,
                profile,
                substeps_per_cell: cfg.substeps_per_cell,
                homogeneous_flux: cfg.homogeneous_flux,
                condition: cfg.flags.condition,
            });
        }
    }
    specs
}

/// Cells sharing problem, scheme and grid run in sequence so they can share
/// one symbolic analysis; the groups run concurrently.
fn run_specs(specs: &[RunSpec]) -> Vec<RunReport> {
    let mut groups: Vec<Vec<&RunSpec>> = Vec::new();
    for s in specs {
        let same = |g: &&mut Vec<&RunSpec>| {
            let h = g[0];
            (h.problem.as_str(), h.scheme, h.ni, h.nj) == (s.problem.as_str(), s.scheme, s.ni, s.nj)
        };
        match groups.iter_mut().find(|g| same(g)) {
            Some(g) => g.push(s),
            None => groups.push(vec![s]),
        }
    }
    let mut reports: Vec<RunReport> = groups
        .par_iter()
        .flat_map_iter(|g| {
            let mut symbolic = None;
            g.iter().map(|s| run_or_tag(s, &mut symbolic)).collect::<Vec<_>>()
        })
        .collect();
    reports.sort_by(order_key);
    fill_orders(&mut reports);
    reports
}

pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<RunReport>> {
    cfg.validate()?;
    Ok(run_specs(&sweep_specs(cfg, cfg.scheme)))
}

/// The configured scheme and its counterpart on every cell.
pub fn run_cond_sweep(cfg: &RunConfig) -> Result<Vec<RunReport>> {
    cfg.validate()?;
    let mut specs = sweep_specs(cfg, cfg.scheme);
    specs.extend(sweep_specs(cfg, cfg.scheme.counterpart()));
    Ok(run_specs(&specs))
}

/// `max / min` of the successful condition estimates, or `None` if any
/// entry failed.
pub fn cond_ratio(reports: &[RunReport]) -> Option<f64> {
    if reports.iter().any(|r| !r.is_ok()) || reports.is_empty() {
        return None;
    }
    let max = reports.iter().map(|r| r.cond_estimate).fold(f64::MIN, f64::max);
    let min = reports.iter().map(|r| r.cond_estimate).fold(f64::MAX, f64::min);
    Some(max / min)
}

/// Text dump with header `x y u`, row-major.
pub fn solution_dump(grid: &Grid, u: &[f64]) -> String {
    let mut out = String::from("x y u\n");
    for j in 0..=grid.nj() {
        for i in 0..=grid.ni() {
            let (x, y) = grid.node(i, j);
            let _ = writeln!(out, "{x:.16e} {y:.16e} {:.16e}", u[grid.idx(i, j)]);
        }
    }
    out
}

/// Traced lines of a general case, or a config error for aligned ones.
pub fn trace_case(spec: &RunSpec) -> Result<(Grid, Vec<FieldLine>)> {
    let case = spec.case()?;
    let grid = case.grid(spec.ni, spec.nj)?;
    match &case.field {
        CaseField::General(f) => Ok((grid, trace_all(f, &grid, &spec.trace_options())?)),
        CaseField::Aligned(_) => Err(Error::Config(format!("{} has an axis-aligned field; nothing to trace", case.name))),
    }
}

pub fn field_line_dump(grid: &Grid, lines: &[FieldLine]) -> String {
    let mut out = String::new();
    for l in lines {
        let _ = writeln!(out, "# line k={}", l.k);
        out.push_str(&l.dump(grid));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_examples() {
        let g = Grid::unit_square(7, 5).unwrap();
        let z = vec![0.0; g.n_nodes()];
        assert_eq!(discrete_l2(&g, &z, &z).unwrap(), 0.0);
        let c = vec![0.25; g.n_nodes()];
        assert!((discrete_l2(&g, &c, &z).unwrap() - 0.25).abs() < 1e-15);
        let g2 = Grid::new(2.0, 3.0, 4, 4).unwrap();
        let c = vec![1.0; g2.n_nodes()];
        let z = vec![0.0; g2.n_nodes()];
        assert!((discrete_l2(&g2, &c, &z).unwrap() - 1.0).abs() < 1e-14);
        let lin = g2.sample(|x, _| x);
        // trapezoid rule of x^2 over [0,2] is 2.75 with h = 0.5; area 2
        assert!((discrete_l2(&g2, &lin, &z).unwrap() - (2.75f64 / 2.0).sqrt()).abs() < 1e-14);
        assert!(matches!(discrete_l2(&g, &z[..3], &z[..3]), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn order_examples() {
        assert!((observed_order(1e-2, 2.5e-3).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(observed_order(1e-2, 1e-2).unwrap(), 0.0);
        let o = observed_order(1.3883e-4, 3.5228e-5).unwrap();
        assert!((o - 1.979).abs() < 5e-4);
        assert!(observed_order(0.0, 1.0).is_err());
        assert!(observed_order(1.0, -1.0).is_err());
    }

    #[test]
    fn zero_source_gives_exact_norm_as_error() {
        let spec = RunSpec::new("example1", Scheme::Aligned5, 16, 16, 1.0);
        let case = spec.case().unwrap().with_source(crate::anisotropy::constant_fn(0.0));
        let grid = case.grid(16, 16).unwrap();
        let sys = assemble_case(&case, &grid, Scheme::Aligned5, &spec.trace_options()).unwrap();
        let u = crate::linalg::solve(&sys).unwrap().solution;
        assert!(u.iter().all(|&v| v == 0.0));
        let exact = grid.sample(|x, y| case.u_exact.as_ref().unwrap()(x, y));
        let e = discrete_l2(&grid, &u, &exact).unwrap();
        assert!((e - discrete_l2(&grid, &exact, &vec![0.0; grid.n_nodes()]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn scheme_mismatch_is_config_error() {
        let spec = RunSpec::new("example1", Scheme::General9, 8, 8, 1.0);
        assert!(matches!(run_case(&spec), Err(Error::Config(_))));
        let spec = RunSpec::new("example4", Scheme::Naive5, 8, 8, 1.0);
        assert_eq!(run_case(&spec).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn single_cell_sweep_has_no_order() {
        let cfg = RunConfig::new("example1", Scheme::Aligned5, vec![[16, 16]], vec![1.0]);
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].order_vs_prev_grid.is_none());
        assert!(r[0].is_ok());
    }

    #[test]
    fn sweeps_are_sorted_and_deterministic() {
        let cfg = RunConfig::new("example1", Scheme::Aligned5, vec![[8, 8], [16, 16], [24, 24]], vec![1e-3, 1.0]);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a[0].epsilon, 1.0);
        assert_eq!((a[0].ni, a[1].ni, a[2].ni), (8, 16, 24));
        assert!(a[0].order_vs_prev_grid.is_none());
        assert!(a[1].order_vs_prev_grid.is_some());
        // 24 is not twice 16
        assert!(a[2].order_vs_prev_grid.is_none());
        let strip = |r: &[RunReport]| {
            r.iter()
                .map(|x| (x.l2_error.to_bits(), x.cond_estimate.to_bits(), x.residual_inf.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn dump_header() {
        let g = Grid::unit_square(2, 2).unwrap();
        let d = solution_dump(&g, &vec![1.0; 9]);
        let lines: Vec<&str> = d.lines().collect();
        assert_eq!(lines[0], "x y u");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[2], "5.0000000000000000e-1 0.0000000000000000e0 1.0000000000000000e0");
    }
}
