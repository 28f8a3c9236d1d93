//! Sparse storage, direct solves and 1-norm condition estimation.
//!
//! Factorizations are computed on the row-equilibrated matrix `D A` with
//! `D = diag(1 / max_j |a_ij|)`. Row scaling leaves the solution unchanged,
//! and it keeps partial pivoting meaningful when interior rows carry
//! `1 / eps` entries next to O(1) boundary rows.
//!
//! The LU is taken of `(D A)^T`, whose compressed columns are exactly the
//! compressed rows of `D A`. Integral boundary rows span whole field lines;
//! as columns they stay cheap for the column ordering, while as rows they
//! would make every column on three grid lines mutually adjacent.

use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::lu::{self, LuRef, NumericLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par};

use crate::error::{Error, Result};

/// Equilibrated condition estimates above this count as numerically singular.
pub const SINGULAR_COND: f64 = 1e14;

/// Compressed sparse rows with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Duplicate `(row, col)` entries are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: r.max(c),
            });
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for (&c, &v) in self.col_idx.iter().zip(&self.values) {
            sums[c] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn empty_rows(&self) -> Vec<usize> {
        (0..self.n).filter(|&r| self.row_ptr[r] == self.row_ptr[r + 1]).collect()
    }

    /// `diag(scale) * self`.
    pub fn scale_rows(&self, scale: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for (r, &s) in scale.iter().enumerate() {
            for v in &mut out.values[self.row_ptr[r]..self.row_ptr[r + 1]] {
                *v *= s;
            }
        }
        out
    }

    /// Reciprocal of each row's largest magnitude (1 for all-zero rows).
    pub fn row_equilibration(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let m = self.row(r).1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if m > 0.0 {
                    1.0 / m
                } else {
                    1.0
                }
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }

    fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.n == other.n && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }

    /// The transpose, viewed in faer's compressed-column form.
    fn transpose_view<'a>(&'a self, values: &'a [f64]) -> SparseColMatRef<'a, usize, f64> {
        let sym = SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.row_ptr, None, &self.col_idx);
        SparseColMatRef::new(sym, values)
    }
}

/// Square sparse matrix with its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != matrix.n() {
            return Err(Error::ShapeMismatch {
                expected: matrix.n(),
                got: rhs.len(),
            });
        }
        Ok(Self { matrix, rhs })
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// Rows scaled to unit max-norm; same solution as `self`.
    pub fn row_equilibrated(&self) -> SparseSystem {
        let s = self.matrix.row_equilibration();
        SparseSystem {
            matrix: self.matrix.scale_rows(&s),
            rhs: self.rhs.iter().zip(&s).map(|(b, s)| b * s).collect(),
        }
    }
}

/// Fill-reducing ordering and symbolic LU structure for one sparsity
/// pattern; reusable across matrices that share it.
pub struct SymbolicLu {
    pattern: CsrMatrix,
    inner: lu::SymbolicLu<usize>,
}

impl SymbolicLu {
    pub fn analyze(matrix: &CsrMatrix) -> Result<Self> {
        let pattern = CsrMatrix {
            values: Vec::new(),
            ..matrix.clone()
        };
        let view = matrix.transpose_view(&matrix.values);
        let inner = lu::factorize_symbolic_lu(view.symbolic(), Default::default())
            .map_err(|e| Error::Singular(format!("symbolic LU failed: {e:?}")))?;
        Ok(Self { pattern, inner })
    }

    pub fn matches(&self, matrix: &CsrMatrix) -> bool {
        self.pattern.same_pattern(matrix)
    }
}

/// LU factors of the row-equilibrated matrix.
pub struct Factorization {
    symbolic: Arc<SymbolicLu>,
    numeric: NumericLu<usize, f64>,
    row_scale: Vec<f64>,
    n: usize,
}

impl Factorization {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        Self::check_rows(matrix)?;
        Self::with_symbolic(matrix, Arc::new(SymbolicLu::analyze(matrix)?))
    }

    /// Numeric factorization on a previously analyzed pattern.
    pub fn with_symbolic(matrix: &CsrMatrix, symbolic: Arc<SymbolicLu>) -> Result<Self> {
        Self::check_rows(matrix)?;
        if !symbolic.matches(matrix) {
            return Err(Error::Config("symbolic analysis belongs to a different sparsity pattern".into()));
        }
        let row_scale = matrix.row_equilibration();
        let scaled = matrix.scale_rows(&row_scale);
        let mut numeric = NumericLu::new();
        let par = Par::Seq;
        let mut mem = MemBuffer::try_new(symbolic.inner.factorize_numeric_lu_scratch::<f64>(par, Default::default()))
            .map_err(|_| Error::Singular("out of memory in LU workspace".into()))?;
        symbolic
            .inner
            .factorize_numeric_lu(
                &mut numeric,
                scaled.transpose_view(&scaled.values),
                par,
                MemStack::new(&mut mem),
                Default::default(),
            )
            .map_err(|e| Error::Singular(format!("{e:?}")))?;
        Ok(Self {
            symbolic,
            numeric,
            row_scale,
            n: matrix.n(),
        })
    }

    fn check_rows(matrix: &CsrMatrix) -> Result<()> {
        match matrix.empty_rows().first() {
            Some(&r) => Err(Error::Singular(format!("row {r} has no entries"))),
            None => Ok(()),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn symbolic(&self) -> &Arc<SymbolicLu> {
        &self.symbolic
    }

    /// `transpose` selects `(D A)^T`; the stored factors are of that matrix.
    fn solve_factored(&self, v: &mut [f64], transpose: bool) {
        let lu = LuRef::new_unchecked(&self.symbolic.inner, &self.numeric);
        let mut mem = MemBuffer::new(self.symbolic.inner.solve_in_place_scratch::<f64>(1, Par::Seq));
        let rhs = MatMut::from_column_major_slice_mut(v, self.n, 1);
        if transpose {
            lu.solve_in_place_with_conj(Conj::No, rhs, Par::Seq, MemStack::new(&mut mem));
        } else {
            lu.solve_transpose_in_place_with_conj(Conj::No, rhs, Par::Seq, MemStack::new(&mut mem));
        }
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = b.iter().zip(&self.row_scale).map(|(b, s)| b * s).collect();
        self.solve_factored(&mut x, false);
        x
    }

    /// Solve `A^T y = c`.
    pub fn solve_transpose(&self, c: &[f64]) -> Vec<f64> {
        let mut z = c.to_vec();
        self.solve_factored(&mut z, true);
        z.iter().zip(&self.row_scale).map(|(z, s)| z * s).collect()
    }

    /// Solve with the equilibrated matrix `D A` and its transpose.
    fn solve_scaled(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_factored(&mut x, false);
        x
    }

    fn solve_scaled_transpose(&self, c: &[f64]) -> Vec<f64> {
        let mut z = c.to_vec();
        self.solve_factored(&mut z, true);
        z
    }

    /// Lower-bound estimate of `||A^{-1}||_1`.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        hager_higham(self.n, |v| self.solve(v), |v| self.solve_transpose(v))
    }

    /// Lower-bound estimate of `||(D A)^{-1}||_1`.
    pub fn scaled_inverse_norm1_estimate(&self) -> f64 {
        hager_higham(self.n, |v| self.solve_scaled(v), |v| self.solve_scaled_transpose(v))
    }
}

/// Hager's 1-norm power method with Higham's extra alternating-sign probe.
///
/// `apply` computes `B v`, `apply_t` computes `B^T v`. At most five
/// power iterations; the returned estimate never decreases across them.
pub fn hager_higham(
    n: usize,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    apply_t: impl Fn(&[f64]) -> Vec<f64>,
) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let norm1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0f64;
    let mut last_j = usize::MAX;
    for iter in 0..5 {
        let y = apply(&x);
        let ny = norm1(&y);
        if iter > 0 && ny <= est {
            break;
        }
        est = est.max(ny);
        let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = apply_t(&xi);
        let (j, zmax) = z
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bj, bm), (j, &v)| {
                if v.abs() > bm {
                    (j, v.abs())
                } else {
                    (bj, bm)
                }
            });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if iter > 0 && (zmax <= ztx || j == last_j) {
            break;
        }
        last_j = j;
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    let alt: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        })
        .collect();
    let alt_est = 2.0 * norm1(&apply(&alt)) / (3.0 * n as f64);
    est.max(alt_est)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorStats {
    pub nnz: usize,
    /// Condition estimate of the row-equilibrated matrix.
    pub cond_equilibrated: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solution: Vec<f64>,
    /// `||A x - b||_inf / (||b||_inf + ||A||_inf ||x||_inf)`.
    pub residual_inf: f64,
    pub factor_stats: FactorStats,
}

pub fn relative_residual(matrix: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = matrix.mul_vec(x);
    let r = ax.iter().zip(b).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let denom = bn + matrix.norm_inf() * xn;
    if denom == 0.0 {
        r
    } else {
        r / denom
    }
}

/// `||D A||_1 * ||(D A)^{-1}||_1` for an existing factorization of `A`.
pub fn equilibrated_cond(matrix: &CsrMatrix, fact: &Factorization) -> f64 {
    matrix.scale_rows(&matrix.row_equilibration()).norm1() * fact.scaled_inverse_norm1_estimate()
}

/// Solve with an existing factorization. With `condition` false the
/// estimate is skipped and reported as NaN, and only non-finite solutions
/// are flagged as singular.
pub fn solve_with(system: &SparseSystem, fact: &Factorization, condition: bool) -> Result<SolveResult> {
    let solution = fact.solve(&system.rhs);
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("solution has non-finite entries".into()));
    }
    let cond = if condition {
        equilibrated_cond(&system.matrix, fact)
    } else {
        f64::NAN
    };
    if condition && (!cond.is_finite() || cond > SINGULAR_COND) {
        return Err(Error::Singular(format!(
            "equilibrated condition estimate {cond:e} exceeds {SINGULAR_COND:e}"
        )));
    }
    let residual_inf = relative_residual(&system.matrix, &solution, &system.rhs);
    if !residual_inf.is_finite() {
        return Err(Error::NonFinite("residual".into()));
    }
    Ok(SolveResult {
        solution,
        residual_inf,
        factor_stats: FactorStats {
            nnz: system.matrix.nnz(),
            cond_equilibrated: cond,
        },
    })
}

pub fn solve(system: &SparseSystem) -> Result<SolveResult> {
    let fact = Factorization::new(&system.matrix)?;
    solve_with(system, &fact, true)
}

/// `||A||_1` times a Hager-Higham estimate of `||A^{-1}||_1`.
pub fn cond1_estimate(system: &SparseSystem) -> Result<f64> {
    let fact = Factorization::new(&system.matrix)?;
    let c = system.matrix.norm1() * fact.inverse_norm1_estimate();
    if !c.is_finite() {
        return Err(Error::Singular(format!("condition estimate {c}")));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= m * a[k][j];
                }
                b[i] -= m * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    fn dense_inverse_norm1(a: &[Vec<f64>]) -> f64 {
        let n = a.len();
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                dense_solve(a.to_vec(), e).iter().map(|v| v.abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    fn random_sparse(n: usize, per_row: usize, dominant: bool, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for r in 0..n {
            let mut off = 0.0;
            for _ in 0..per_row {
                let c = rng.random_range(0..n);
                if c != r {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    off += v.abs();
                    t.push((r, c, v));
                }
            }
            let d = if dominant {
                off + 1.0
            } else {
                rng.random_range(0.1..2.0)
            };
            t.push((r, r, d));
        }
        CsrMatrix::from_triplets(n, t).unwrap()
    }

    #[test]
    fn triplets_are_sorted_and_summed() {
        let m = CsrMatrix::from_triplets(3, vec![(1, 2, 1.0), (1, 0, 2.0), (1, 2, 3.0), (0, 0, 1.0), (2, 1, 5.0)])
            .unwrap();
        assert_eq!(m.row(1), (&[0usize, 2][..], &[2.0, 4.0][..]));
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(2, 1), 5.0);
        assert_eq!(m.get(2, 2), 0.0);
        assert!(CsrMatrix::from_triplets(2, vec![(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn solve_small_systems() {
        let id = CsrMatrix::from_triplets(4, (0..4).map(|i| (i, i, 1.0)).collect()).unwrap();
        let sys = SparseSystem::new(id, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(solve(&sys).unwrap().solution, vec![1.0, 0.0, 0.0, 0.0]);

        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let r = solve(&SparseSystem::new(m, vec![3.0, 3.0]).unwrap()).unwrap();
        for v in &r.solution {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert!(r.residual_inf < 1e-15);
    }

    #[test]
    fn matches_dense_oracle() {
        let m = random_sparse(50, 5, true, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let want = dense_solve(m.to_dense(), b.clone());
        let got = solve(&SparseSystem::new(m, b).unwrap()).unwrap();
        let scale = want.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (g, w) in got.solution.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-10 * scale);
        }
        assert!(got.residual_inf < 1e-14);
    }

    #[test]
    fn singular_matrices_are_reported() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let err = solve(&SparseSystem::new(m, vec![1.0, 2.0]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0)]).unwrap();
        assert!(matches!(Factorization::new(&m), Err(Error::Singular(_))));
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0 + 1e-16)])
            .unwrap();
        assert!(solve(&SparseSystem::new(m, vec![1.0, 2.0]).unwrap()).is_err());
    }

    #[test]
    fn cond_examples() {
        let id = CsrMatrix::from_triplets(5, (0..5).map(|i| (i, i, 1.0)).collect()).unwrap();
        let c = cond1_estimate(&SparseSystem::new(id, vec![0.0; 5]).unwrap()).unwrap();
        assert!((c - 1.0).abs() < 1e-14);
        let d = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 1e6)]).unwrap();
        let c = cond1_estimate(&SparseSystem::new(d, vec![0.0; 2]).unwrap()).unwrap();
        assert!((c / 1e6 - 1.0).abs() < 1e-12, "{c}");
    }

    #[test]
    fn cond_estimate_against_dense_inverse() {
        for seed in 0..10 {
            let m = random_sparse(40, 4, false, 100 + seed);
            let exact = m.norm1() * dense_inverse_norm1(&m.to_dense());
            let est = cond1_estimate(&SparseSystem::new(m, vec![0.0; 40]).unwrap()).unwrap();
            assert!(est <= exact * 1.01, "seed {seed}: {est} > {exact}");
            assert!(est * 3.0 >= exact, "seed {seed}: {est} << {exact}");
        }
    }

    #[test]
    fn solves_are_deterministic() {
        let m = random_sparse(200, 6, true, 5);
        let b: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
        let sys = SparseSystem::new(m, b).unwrap();
        let a = solve(&sys).unwrap();
        let b = solve(&sys).unwrap();
        assert_eq!(a.solution, b.solution);
        assert_eq!(cond1_estimate(&sys).unwrap(), cond1_estimate(&sys).unwrap());
    }

    #[test]
    fn transpose_solve() {
        let m = random_sparse(30, 4, true, 9);
        let fact = Factorization::new(&m).unwrap();
        let c: Vec<f64> = (0..30).map(|i| i as f64 - 10.0).collect();
        let y = fact.solve_transpose(&c);
        let dense = m.to_dense();
        for j in 0..30 {
            let s: f64 = (0..30).map(|i| dense[i][j] * y[i]).sum();
            assert!((s - c[j]).abs() < 1e-10);
        }
    }
}
