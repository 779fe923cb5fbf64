//! Lowest eigenpairs of a real symmetric `SparseOperator`.
//!
//! Small operators go through a dense symmetric eigendecomposition. Larger
//! ones use thick-restart Lanczos with full (two-pass Gram–Schmidt)
//! reorthogonalization and a seeded random start vector.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::SparseOperator;
use crate::error::{Error, Result};
use crate::model::DEFAULT_SEED;

/// Relative width of a degenerate eigenvalue cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub k: usize,
    pub tol: f64,
    pub dense_threshold: usize,
    /// Default `50·k·√dim`.
    pub max_matvecs: Option<usize>,
    pub seed: u64,
    pub want_vectors: bool,
}

impl SolveOptions {
    pub fn new(k: usize, tol: f64) -> Self {
        Self {
            k,
            tol,
            dense_threshold: 2000,
            max_matvecs: None,
            seed: DEFAULT_SEED,
            want_vectors: true,
        }
    }

    pub fn from_settings(s: &crate::model::SolverSettings, seed: u64) -> Self {
        Self {
            k: s.k,
            tol: s.tol,
            dense_threshold: s.dense_threshold,
            max_matvecs: s.max_matvecs,
            seed,
            want_vectors: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    pub residual_norms: Vec<f64>,
    pub converged: Vec<bool>,
    pub matvecs: usize,
}

impl SpectrumResult {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    /// Index range of the degenerate cluster containing `level`.
    pub fn cluster(&self, level: usize) -> std::ops::Range<usize> {
        let ev = &self.eigenvalues;
        let close = |a: f64, b: f64| (a - b).abs() <= CLUSTER_TOL * a.abs().max(b.abs()).max(1.0);
        let mut lo = level;
        while lo > 0 && close(ev[lo - 1], ev[lo]) {
            lo -= 1;
        }
        let mut hi = level + 1;
        while hi < ev.len() && close(ev[hi - 1], ev[hi]) {
            hi += 1;
        }
        lo..hi
    }

    /// Eigenvector of a converged level.
    pub fn vector(&self, level: usize) -> Result<&[f64]> {
        match &self.eigenvectors {
            Some(v) if level < v.len() && self.converged[level] => Ok(&v[level]),
            _ => Err(Error::LevelNotConverged { level }),
        }
    }
}

pub fn eigs_lowest(op: &SparseOperator, k: usize, tol: f64) -> Result<SpectrumResult> {
    eigs_lowest_with(op, &SolveOptions::new(k, tol))
}

pub fn eigs_lowest_with(op: &SparseOperator, opts: &SolveOptions) -> Result<SpectrumResult> {
    let n = op.dim();
    if opts.k == 0 || opts.k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {} must lie in 1..={n}",
            opts.k
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {}", opts.tol)));
    }
    if n <= opts.dense_threshold {
        Ok(dense(op, opts))
    } else {
        Ok(lanczos(op, opts))
    }
}

/// `⟨x, A x⟩` for a unit vector.
pub fn rayleigh(op: &SparseOperator, x: &[f64]) -> Result<f64> {
    if x.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: x.len(),
        });
    }
    let norm = dot(x, x).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    Ok(dot(x, &op.apply(x)))
}

/// Lowest eigenvalues of a dense symmetric matrix, ascending.
pub fn dense_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn dense(op: &SparseOperator, opts: &SolveOptions) -> SpectrumResult {
    let eig = SymmetricEigen::new(op.to_dense());
    let mut order: Vec<usize> = (0..op.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(opts.k);
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    let residual_norms: Vec<f64> = vectors
        .iter()
        .zip(&eigenvalues)
        .map(|(v, &l)| residual(op, v, l))
        .collect();
    let converged = residual_norms
        .iter()
        .zip(&eigenvalues)
        .map(|(&r, &l)| r <= opts.tol * l.abs().max(1.0))
        .collect();
    SpectrumResult {
        eigenvalues,
        eigenvectors: opts.want_vectors.then_some(vectors),
        residual_norms,
        converged,
        matvecs: 0,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

fn residual(op: &SparseOperator, v: &[f64], lambda: f64) -> f64 {
    let mut av = op.apply(v);
    axpy(-lambda, v, &mut av);
    dot(&av, &av).sqrt()
}

/// Two passes of classical Gram–Schmidt against `basis`; returns the
/// accumulated projection coefficients.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut h = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (hi, v) in h.iter_mut().zip(basis) {
            let c = dot(v, w);
            axpy(-c, v, w);
            *hi += c;
        }
    }
    h
}

struct Found {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    converged: Vec<bool>,
}

struct Lanczos<'a> {
    op: &'a SparseOperator,
    tol: f64,
    budget: usize,
    matvecs: usize,
    rng: ChaCha8Rng,
}

impl Lanczos<'_> {
    fn random_vector(&mut self, locked: &[Vec<f64>], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
        for _ in 0..8 {
            let mut x: Vec<f64> = (0..self.op.dim()).map(|_| self.rng.gen_range(-1.0..1.0)).collect();
            normalize(&mut x);
            orthogonalize(&mut x, locked);
            orthogonalize(&mut x, basis);
            orthogonalize(&mut x, locked);
            if normalize(&mut x) > 1e-8 {
                return Some(x);
            }
        }
        None
    }

    fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        self.matvecs += 1;
        self.op.apply(x)
    }

    /// Project `A v_j` out of `locked` and `basis`, record column `j` of the
    /// Rayleigh quotient, and return the normalized remainder with its norm.
    /// A breakdown returns a fresh random direction with coupling 0.
    fn expand(
        &mut self,
        j: usize,
        locked: &[Vec<f64>],
        basis: &[Vec<f64>],
        t: &mut DMatrix<f64>,
    ) -> (f64, Option<Vec<f64>>) {
        let mut w = self.apply(&basis[j]);
        orthogonalize(&mut w, locked);
        let h = orthogonalize(&mut w, basis);
        // The basis pass reintroduces whatever locked component the basis
        // carries; without this the drift grows geometrically.
        orthogonalize(&mut w, locked);
        for (i, &hi) in h.iter().enumerate() {
            t[(i, j)] = hi;
            t[(j, i)] = hi;
        }
        let scale = h.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        let beta = normalize(&mut w);
        if beta <= 1e-12 * scale {
            (0.0, self.random_vector(locked, basis))
        } else {
            (beta, Some(w))
        }
    }

    fn ritz_vector(coeffs: impl Iterator<Item = f64>, basis: &[Vec<f64>], n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (c, v) in coeffs.zip(basis) {
            axpy(c, v, &mut x);
        }
        x
    }

    /// `nev` lowest eigenpairs on the orthogonal complement of `locked`.
    fn run(&mut self, locked: &[Vec<f64>], nev: usize) -> Found {
        let n = self.op.dim();
        let free = n - locked.len();
        let m = (2 * nev + 20).max(40).min(free);
        let keep = ((m + nev) / 2).min(m - 1).max(1);
        let mut found = Found {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
            converged: vec![],
        };
        let Some(start) = self.random_vector(locked, &[]) else {
            return found;
        };
        let mut basis: Vec<Vec<f64>> = vec![start];
        let mut t = DMatrix::<f64>::zeros(m, m);
        loop {
            let mut j = basis.len() - 1;
            let (f_beta, f_vec) = loop {
                let (beta, w) = self.expand(j, locked, &basis, &mut t);
                match w {
                    Some(w) if j + 1 < m => {
                        t[(j, j + 1)] = beta;
                        t[(j + 1, j)] = beta;
                        basis.push(w);
                        j += 1;
                    }
                    w => break (beta, w),
                }
            };
            let size = basis.len();
            let eig = SymmetricEigen::new(t.view((0, 0), (size, size)).into_owned());
            let mut order: Vec<usize> = (0..size).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let want = nev.min(size);
            let ritz_done = order.iter().take(want).all(|&i| {
                f_beta * eig.eigenvectors[(size - 1, i)].abs()
                    <= 0.1 * self.tol * eig.eigenvalues[i].abs().max(1.0)
            });
            let exhausted = self.matvecs >= self.budget || f_vec.is_none();
            if ritz_done || exhausted {
                found = Found {
                    values: vec![],
                    vectors: vec![],
                    residuals: vec![],
                    converged: vec![],
                };
                for &i in order.iter().take(want) {
                    let mut x = Self::ritz_vector(eig.eigenvectors.column(i).iter().copied(), &basis, n);
                    normalize(&mut x);
                    let mut ax = self.apply(&x);
                    let theta = dot(&x, &ax);
                    axpy(-theta, &x, &mut ax);
                    let r = dot(&ax, &ax).sqrt();
                    found.converged.push(r <= self.tol * theta.abs().max(1.0));
                    found.values.push(theta);
                    found.vectors.push(x);
                    found.residuals.push(r);
                }
                if exhausted || found.converged.iter().all(|&c| c) {
                    return found;
                }
            }
            // Thick restart: lowest `keep` Ritz vectors plus the residual
            // direction, with an arrowhead projected matrix.
            let l = keep.min(size - 1).max(1);
            let mut next = Vec::with_capacity(m);
            for &i in order.iter().take(l) {
                next.push(Self::ritz_vector(eig.eigenvectors.column(i).iter().copied(), &basis, n));
            }
            t.fill(0.0);
            for (r, &i) in order.iter().take(l).enumerate() {
                t[(r, r)] = eig.eigenvalues[i];
                let c = f_beta * eig.eigenvectors[(size - 1, i)];
                t[(r, l)] = c;
                t[(l, r)] = c;
            }
            next.push(f_vec.expect("not exhausted"));
            basis = next;
        }
    }
}

fn lanczos(op: &SparseOperator, opts: &SolveOptions) -> SpectrumResult {
    let n = op.dim();
    let budget = opts
        .max_matvecs
        .unwrap_or_else(|| (50.0 * opts.k as f64 * (n as f64).sqrt()).ceil() as usize);
    let mut solver = Lanczos {
        op,
        tol: opts.tol,
        budget,
        matvecs: 0,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
    };
    let mut found = solver.run(&[], opts.k);
    log::debug!("main Lanczos run: {} matvecs", solver.matvecs);
    // A single Krylov sequence can miss copies of degenerate eigenvalues.
    // Search the orthogonal complement until nothing below the k-th value
    // turns up.
    for _ in 0..opts.k {
        if solver.matvecs >= budget || found.vectors.len() + 1 > n {
            break;
        }
        let extra = solver.run(&found.vectors, 1);
        let Some(&theta) = extra.values.first() else { break };
        if !extra.converged[0] {
            break;
        }
        let top = *found.values.last().unwrap();
        if theta >= top - CLUSTER_TOL * top.abs().max(1.0) {
            break;
        }
        let pos = found.values.partition_point(|&x| x <= theta);
        found.values.insert(pos, theta);
        found.vectors.insert(pos, extra.vectors[0].clone());
        found.residuals.insert(pos, extra.residuals[0]);
        found.converged.insert(pos, extra.converged[0]);
        found.values.truncate(opts.k);
        found.vectors.truncate(opts.k);
        found.residuals.truncate(opts.k);
        found.converged.truncate(opts.k);
    }
    let k = found.values.len();
    if k < opts.k {
        log::warn!("Lanczos returned {k} of {} requested pairs", opts.k);
    }
    SpectrumResult {
        eigenvalues: found.values,
        eigenvectors: opts.want_vectors.then_some(found.vectors),
        residual_norms: found.residuals,
        converged: found.converged,
        matvecs: solver.matvecs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_sparse(n: usize, seed: u64) -> SparseOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for i in 0..n {
            entries.push((i, i, i as f64 * 0.01 + rng.gen_range(0.0..1.0)));
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let x = rng.gen_range(-0.3..0.3);
                    entries.push((i, j, x));
                    entries.push((j, i, x));
                }
            }
        }
        SparseOperator::from_entries(n, 0, entries)
    }

    #[test]
    fn diagonal_is_sorted_exactly() {
        let diag = vec![3.0, -1.0, 2.5, 0.0, 7.0];
        let op = SparseOperator::from_diagonal(0, diag);
        let res = eigs_lowest(&op, 3, 1e-12).unwrap();
        assert_eq!(res.eigenvalues, vec![-1.0, 0.0, 2.5]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let (a, b, c) = (2.0, 0.7, -1.0);
        let op = SparseOperator::from_entries(2, 0, [(0, 0, a), (0, 1, b), (1, 0, b), (1, 1, c)]);
        let res = eigs_lowest(&op, 2, 1e-12).unwrap();
        let mid = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        assert!((res.eigenvalues[0] - (mid - rad)).abs() < 1e-14);
        assert!((res.eigenvalues[1] - (mid + rad)).abs() < 1e-14);
    }

    #[test]
    fn lanczos_matches_dense() {
        let op = random_sparse(500, 3);
        let dense = eigs_lowest(&op, 6, 1e-11).unwrap();
        let mut opts = SolveOptions::new(6, 1e-11);
        opts.dense_threshold = 10;
        let lz = eigs_lowest_with(&op, &opts).unwrap();
        assert!(lz.all_converged());
        for (a, b) in dense.eigenvalues.iter().zip(&lz.eigenvalues) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
        let vecs = lz.eigenvectors.as_ref().unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let d = dot(&vecs[i], &vecs[j]);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((d - expected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn lanczos_finds_degenerate_copies() {
        // Two identical uncoupled blocks give every eigenvalue twice.
        let block = random_sparse(150, 9);
        let mut entries: Vec<(usize, usize, f64)> = block.entries().collect();
        entries.extend(block.entries().map(|(i, j, x)| (i + 150, j + 150, x)));
        let op = SparseOperator::from_entries(300, 0, entries);
        let dense = eigs_lowest(&op, 4, 1e-11).unwrap();
        let mut opts = SolveOptions::new(4, 1e-11);
        opts.dense_threshold = 10;
        let lz = eigs_lowest_with(&op, &opts).unwrap();
        for (a, b) in dense.eigenvalues.iter().zip(&lz.eigenvalues) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
        assert_eq!(lz.cluster(0), 0..2);
        assert_eq!(lz.cluster(3), 2..4);
    }

    #[test]
    fn lanczos_is_deterministic() {
        let op = random_sparse(400, 5);
        let mut opts = SolveOptions::new(3, 1e-10);
        opts.dense_threshold = 10;
        let a = eigs_lowest_with(&op, &opts).unwrap();
        let b = eigs_lowest_with(&op, &opts).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(a.eigenvectors, b.eigenvectors);
    }

    #[test]
    fn tiny_budget_flags_unconverged() {
        let op = random_sparse(600, 1);
        let mut opts = SolveOptions::new(4, 1e-13);
        opts.dense_threshold = 10;
        opts.max_matvecs = Some(45);
        let res = eigs_lowest_with(&op, &opts).unwrap();
        assert!(!res.all_converged());
        assert!(res.vector(0).is_err() || res.converged[0]);
    }

    #[test]
    fn rejects_bad_arguments() {
        let op = SparseOperator::from_diagonal(0, vec![1.0, 2.0]);
        assert!(eigs_lowest(&op, 3, 1e-10).is_err());
        assert!(eigs_lowest(&op, 0, 1e-10).is_err());
        assert!(eigs_lowest(&op, 1, 0.0).is_err());
    }

    #[test]
    fn rayleigh_examples() {
        let op = SparseOperator::from_diagonal(0, vec![1.0, 4.0, 9.0]);
        assert_eq!(rayleigh(&op, &[0.0, 1.0, 0.0]).unwrap(), 4.0);
        let s = 0.5f64.sqrt();
        assert!((rayleigh(&op, &[s, 0.0, s]).unwrap() - 5.0).abs() < 1e-12);
        assert!(matches!(rayleigh(&op, &[1.0, 1.0, 0.0]), Err(Error::NotNormalized { .. })));
        assert!(matches!(rayleigh(&op, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }
}
