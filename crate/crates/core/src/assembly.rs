//! Sparse matrices of the many-body and effective Hamiltonians on a sector.
//!
//! All matrix elements are real in the plane-wave occupation basis: the
//! impurity factor `e^{-ipR}` maps impurity mode `k` to `k − p` with unit
//! amplitude, and `v_p`, `w_p` are real and even. Any monomial whose created
//! mode leaves the mode set, whose impurity mode leaves the impurity cutoff,
//! or which raises `N_+` above the sector cap is dropped (`P H P`).

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::{BasisKind, SectorBasis};
use crate::error::{Error, Result};
use crate::model::{BogoliubovData, ModeVector, ModelParams, PotentialSpec};

/// Real symmetric sparse matrix in compressed-row form. Rows are sorted by
/// column with no duplicates.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    basis_id: u64,
}

impl SparseOperator {
    /// Canonicalizes raw per-row entries: sorts, sums duplicates and drops
    /// exact zeros.
    pub fn from_rows(dim: usize, basis_id: u64, rows: Vec<Vec<(u32, f64)>>) -> Self {
        assert_eq!(rows.len(), dim);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut x)) = iter.next() {
                while let Some(&(c2, y)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    x += y;
                    iter.next();
                }
                if x != 0.0 {
                    debug_assert!((c as usize) < dim);
                    cols.push(c);
                    vals.push(x);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
            basis_id,
        }
    }

    pub fn from_entries(dim: usize, basis_id: u64, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows = vec![Vec::new(); dim];
        for (r, c, x) in entries {
            rows[r].push((c as u32, x));
        }
        Self::from_rows(dim, basis_id, rows)
    }

    pub fn from_diagonal(basis_id: u64, diag: Vec<f64>) -> Self {
        let dim = diag.len();
        let rows = diag
            .into_iter()
            .enumerate()
            .map(|(i, x)| vec![(i as u32, x)])
            .collect();
        Self::from_rows(dim, basis_id, rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    /// Coordinate entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &x)| (i, c as usize, x))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`. Each row is summed in column order, so the result does not
    /// depend on the thread count.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.par_iter_mut().with_min_len(256).enumerate().for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&c, &a) in cols.iter().zip(vals) {
                acc += a * x[c as usize];
            }
            *yi = acc;
        });
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, x) in self.entries() {
            m[(i, j)] = x;
        }
        m
    }

    /// Largest `|A_ij − A_ji|` with its position, `None` if exactly symmetric.
    pub fn hermitian_defect(&self) -> Option<(usize, usize, f64)> {
        let mut worst: Option<(usize, usize, f64)> = None;
        for (i, j, x) in self.entries() {
            let diff = (x - self.get(j, i)).abs();
            if diff > 0.0 && worst.map_or(true, |w| diff > w.2) {
                worst = Some((i, j, diff));
            }
        }
        worst
    }

    fn check_and_symmetrize(mut self, rel_tol: f64) -> Result<Self> {
        let mut fixes = Vec::new();
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&c, &x) in cols.iter().zip(vals) {
                let j = c as usize;
                if j <= i {
                    continue;
                }
                let y = self.get(j, i);
                if (x - y).abs() > rel_tol * x.abs().max(y.abs()).max(1.0) {
                    return Err(Error::NotHermitian {
                        row: i,
                        col: j,
                        diff: (x - y).abs(),
                    });
                }
                if x != y {
                    fixes.push((i, j, 0.5 * (x + y)));
                }
            }
        }
        // Entries present on one side only would show up above as x vs 0.
        for (i, j, avg) in fixes {
            self.set_existing(i, j, avg);
            self.set_existing(j, i, avg);
        }
        Ok(self)
    }

    fn set_existing(&mut self, i: usize, j: usize, x: f64) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let pos = self.cols[r.clone()]
            .binary_search(&(j as u32))
            .expect("entry exists");
        self.vals[r.start + pos] = x;
    }

    /// `Σ c_k A_k` over operators on the same basis.
    pub fn linear_combination(terms: &[(f64, &SparseOperator)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?
            .1;
        let (dim, id) = (first.dim, first.basis_id);
        let mut rows = vec![Vec::new(); dim];
        for (c, op) in terms {
            if op.dim != dim || op.basis_id != id {
                return Err(Error::IncompatibleSectors(
                    "operators act on different bases".into(),
                ));
            }
            for (i, j, x) in op.entries() {
                rows[i].push((j as u32, c * x));
            }
        }
        Ok(Self::from_rows(dim, id, rows))
    }

    pub fn shifted(&self, shift: f64) -> Self {
        let id = Self::from_diagonal(self.basis_id, vec![1.0; self.dim]);
        Self::linear_combination(&[(1.0, self), (shift, &id)]).expect("same basis")
    }

    /// `row col value` lines, row-major, 17 significant digits.
    pub fn write_dump(&self, mut out: impl Write) -> std::io::Result<()> {
        for (i, j, x) in self.entries() {
            writeln!(out, "{i} {j} {x:.16e}")?;
        }
        Ok(())
    }
}

/// Shared per-sector lookup tables for the row builders.
struct ModeTables {
    /// `plus[j * s + t]`: index of `mode_j + shifts[t]`.
    plus: Vec<Option<usize>>,
    /// `imp_minus[i * s + t]`: index of `impurity_i − shifts[t]`.
    imp_minus: Vec<Option<usize>>,
    shifts: Vec<ModeVector>,
}

impl ModeTables {
    fn new(sector: &SectorBasis, shifts: Vec<ModeVector>) -> Self {
        let modes = sector.boson_modes();
        let imps = sector.impurity_modes();
        let mut plus = Vec::with_capacity(modes.len() * shifts.len());
        for m in modes.modes() {
            for s in &shifts {
                plus.push(modes.index_of(&(*m + *s)));
            }
        }
        let mut imp_minus = Vec::with_capacity(imps.len() * shifts.len());
        for m in imps.modes() {
            for s in &shifts {
                imp_minus.push(imps.index_of(&(*m - *s)));
            }
        }
        Self {
            plus,
            imp_minus,
            shifts,
        }
    }

    #[inline]
    fn plus(&self, mode: usize, shift: usize) -> Option<usize> {
        self.plus[mode * self.shifts.len() + shift]
    }

    #[inline]
    fn imp_minus(&self, imp: usize, shift: usize) -> Option<usize> {
        self.imp_minus[imp * self.shifts.len() + shift]
    }

    fn shift_index(&self, m: &ModeVector) -> usize {
        self.shifts.iter().position(|s| s == m).expect("shift present")
    }
}

/// Per-row scratch state. `occ` always holds the current row's occupations
/// between term applications.
struct Row<'a> {
    sector: &'a SectorBasis,
    row: usize,
    imp: usize,
    occ: Vec<u8>,
    nplus: usize,
    out: Vec<(u32, f64)>,
}

impl<'a> Row<'a> {
    /// Adds `coef` times the current `occ` with impurity `imp` as a target.
    #[inline]
    fn emit(&mut self, imp: usize, coef: f64) -> Result<()> {
        let key = self.sector.encode(imp, &self.occ);
        match self.sector.find_key(key) {
            Some(col) => {
                self.out.push((col as u32, coef));
                Ok(())
            }
            None => Err(Error::MomentumViolation { row: self.row }),
        }
    }

    #[inline]
    fn annihilate(&mut self, mode: usize) -> Option<f64> {
        let n = self.occ[mode];
        if n == 0 {
            return None;
        }
        self.occ[mode] = n - 1;
        Some((n as f64).sqrt())
    }

    #[inline]
    fn create(&mut self, mode: usize) -> f64 {
        let n = self.occ[mode];
        self.occ[mode] = n + 1;
        ((n + 1) as f64).sqrt()
    }
}

fn require_kind(sector: &SectorBasis, kind: BasisKind) -> Result<()> {
    if sector.kind() != kind {
        return Err(Error::WrongSectorKind {
            expected: kind.name(),
            got: sector.kind().name(),
        });
    }
    Ok(())
}

fn check_potential(sector: &SectorBasis, spec: &PotentialSpec) -> Result<()> {
    if spec.dim() != sector.boson_modes().dim() {
        return Err(Error::IncompatibleSectors(
            "potential and sector have different dimensions".into(),
        ));
    }
    let modes = sector.boson_modes();
    for (n, _) in spec.v_support().chain(spec.w_support()) {
        if n.norm_inf() > modes.radius() {
            return Err(Error::IncompatibleSectors(format!(
                "potential mode {n} lies outside the mode cutoff {}",
                modes.radius()
            )));
        }
    }
    Ok(())
}

fn impurity_kinetic(sector: &SectorBasis, mass: f64) -> Vec<f64> {
    sector
        .impurity_modes()
        .modes()
        .iter()
        .map(|m| m.momentum_sq() / (2.0 * mass))
        .collect()
}

fn build<F>(sector: &SectorBasis, f: F) -> Result<SparseOperator>
where
    F: Fn(&mut Row) -> Result<()> + Sync,
{
    let nmodes = sector.nmodes();
    let rows = (0..sector.len())
        .into_par_iter()
        .with_min_len(64)
        .map(|i| {
            let mut occ = vec![0u8; nmodes];
            let imp = sector.decode(i, &mut occ);
            let nplus = sector.nplus_of(&occ);
            let mut row = Row {
                sector,
                row: i,
                imp,
                occ,
                nplus,
                out: Vec::new(),
            };
            f(&mut row)?;
            Ok(row.out)
        })
        .collect::<Result<Vec<_>>>()?;
    SparseOperator::from_rows(sector.len(), sector.id(), rows).check_and_symmetrize(1e-12)
}

/// Second-quantized N-body Hamiltonian with all `p = 0` terms kept:
/// `P²/2M + Σ p² n_p + (2(N−1))⁻¹ Σ v_p a†_{k+p} a†_{q−p} a_q a_k
/// + N^{-1/2} Σ w_p e^{-ipR} a†_{k+p} a_k`.
pub fn build_hn(sector: &SectorBasis, spec: &PotentialSpec, params: &ModelParams) -> Result<SparseOperator> {
    require_kind(sector, BasisKind::NBody)?;
    check_potential(sector, spec)?;
    let n = sector.n_particles().expect("n-body");
    if n < 2 {
        return Err(Error::InvalidArgument("H_N needs N >= 2".into()));
    }
    let c_two = 1.0 / (2.0 * (n as f64 - 1.0));
    let c_imp = 1.0 / (n as f64).sqrt();
    let modes = sector.boson_modes().modes().to_vec();
    let kinetic: Vec<f64> = modes.iter().map(|m| m.momentum_sq()).collect();
    let imp_kin = impurity_kinetic(sector, params.impurity_mass);

    let v: Vec<(ModeVector, f64)> = spec.v_support().collect();
    let w: Vec<(ModeVector, f64)> = spec.w_support().collect();
    let mut shifts: Vec<ModeVector> = v.iter().chain(&w).map(|(m, _)| *m).collect();
    shifts.sort();
    shifts.dedup();
    let tables = ModeTables::new(sector, shifts);
    let v_terms: Vec<(usize, usize, f64)> = v
        .iter()
        .map(|(p, x)| (tables.shift_index(p), tables.shift_index(&-*p), c_two * x))
        .collect();
    let w_terms: Vec<(usize, f64)> = w
        .iter()
        .map(|(p, x)| (tables.shift_index(p), c_imp * x))
        .collect();
    let nm = modes.len();

    build(sector, |row| {
        let mut diag = imp_kin[row.imp];
        for j in 0..nm {
            diag += kinetic[j] * row.occ[j] as f64;
        }
        row.out.push((row.row as u32, diag));

        for &(sp, sm, coef) in &v_terms {
            for k in 0..nm {
                let Some(a1) = row.annihilate(k) else { continue };
                for q in 0..nm {
                    if let Some(a2) = row.annihilate(q) {
                        if let (Some(t1), Some(t2)) = (tables.plus(q, sm), tables.plus(k, sp)) {
                            let c1 = row.create(t1);
                            let c2 = row.create(t2);
                            let imp = row.imp;
                            row.emit(imp, coef * a1 * a2 * c1 * c2)?;
                            row.occ[t2] -= 1;
                            row.occ[t1] -= 1;
                        }
                        row.occ[q] += 1;
                    }
                }
                row.occ[k] += 1;
            }
        }

        for &(sp, coef) in &w_terms {
            let Some(imp) = tables.imp_minus(row.imp, sp) else { continue };
            for k in 0..nm {
                let Some(t) = tables.plus(k, sp) else { continue };
                let Some(a) = row.annihilate(k) else { continue };
                let c = row.create(t);
                row.emit(imp, coef * a * c)?;
                row.occ[t] -= 1;
                row.occ[k] += 1;
            }
        }
        Ok(())
    })
}

/// The number-conserving-in-excitations part of `H_N` that survives the
/// Bogoliubov substitution, still acting on the N-body space:
/// `P²/2M + Σ_{p≠0} p² n_p + (2(N−1))⁻¹ Σ_{p≠0} v_p (2 n_p n_0
/// + a†_p a†_{−p} a_0 a_0 + h.c.) + N^{-1/2} Σ_{p≠0} w_p e^{-ipR}(a†_p a_0 + a_{−p} a†_0)`.
pub fn build_hn_pref(sector: &SectorBasis, spec: &PotentialSpec, params: &ModelParams) -> Result<SparseOperator> {
    require_kind(sector, BasisKind::NBody)?;
    check_potential(sector, spec)?;
    let n = sector.n_particles().expect("n-body");
    if n < 2 {
        return Err(Error::InvalidArgument("H_N^pre-F needs N >= 2".into()));
    }
    let c_two = 1.0 / (2.0 * (n as f64 - 1.0));
    let c_imp = 1.0 / (n as f64).sqrt();
    let modes = sector.boson_modes().clone();
    let zero = modes.zero_index().expect("n-body mode set has p = 0");
    let kinetic: Vec<f64> = modes.modes().iter().map(|m| m.momentum_sq()).collect();
    let imp_kin = impurity_kinetic(sector, params.impurity_mass);

    let v_terms: Vec<(usize, usize, f64)> = spec
        .v_support()
        .filter(|(p, _)| !p.is_zero())
        .map(|(p, x)| (modes.index_of(&p).unwrap(), modes.index_of(&-p).unwrap(), c_two * x))
        .collect();
    let w_list: Vec<(ModeVector, f64)> = spec.w_support().filter(|(p, _)| !p.is_zero()).collect();
    let tables = ModeTables::new(sector, w_list.iter().map(|(p, _)| *p).collect());
    let w_terms: Vec<(usize, usize, usize, f64)> = w_list
        .iter()
        .enumerate()
        .map(|(s, (p, x))| (s, modes.index_of(p).unwrap(), modes.index_of(&-*p).unwrap(), c_imp * x))
        .collect();

    build(sector, |row| {
        let mut diag = imp_kin[row.imp];
        for (j, &kin) in kinetic.iter().enumerate() {
            diag += kin * row.occ[j] as f64;
        }
        let n0 = row.occ[zero] as f64;
        for &(ip, _, coef) in &v_terms {
            diag += coef * 2.0 * row.occ[ip] as f64 * n0;
        }
        row.out.push((row.row as u32, diag));
        let imp = row.imp;

        for &(ip, im, coef) in &v_terms {
            // a†_p a†_{−p} a_0 a_0
            if row.occ[zero] >= 2 {
                let a1 = row.annihilate(zero).unwrap();
                let a2 = row.annihilate(zero).unwrap();
                let c1 = row.create(im);
                let c2 = row.create(ip);
                row.emit(imp, coef * a1 * a2 * c1 * c2)?;
                row.occ[ip] -= 1;
                row.occ[im] -= 1;
                row.occ[zero] += 2;
            }
            // a†_0 a†_0 a_{−p} a_p
            if let Some(a1) = row.annihilate(ip) {
                if let Some(a2) = row.annihilate(im) {
                    let c1 = row.create(zero);
                    let c2 = row.create(zero);
                    row.emit(imp, coef * a1 * a2 * c1 * c2)?;
                    row.occ[zero] -= 2;
                    row.occ[im] += 1;
                }
                row.occ[ip] += 1;
            }
        }

        for &(s, ip, im, coef) in &w_terms {
            let Some(imp_t) = tables.imp_minus(imp, s) else { continue };
            // a†_p a_0
            if let Some(a) = row.annihilate(zero) {
                let c = row.create(ip);
                row.emit(imp_t, coef * a * c)?;
                row.occ[ip] -= 1;
                row.occ[zero] += 1;
            }
            // a_{−p} a†_0
            if let Some(a) = row.annihilate(im) {
                let c = row.create(zero);
                row.emit(imp_t, coef * a * c)?;
                row.occ[zero] -= 1;
                row.occ[im] += 1;
            }
        }
        Ok(())
    })
}

/// Quadratic-plus-linear Fröhlich Hamiltonian in the original boson
/// operators on the excitation space:
/// `P²/2M + Σ (p² + v_p) n_p + ½ Σ v_p (a†_p a†_{−p} + a_p a_{−p})
/// + Σ w_p e^{-ipR} (a†_p + a_{−p})`, all sums over `p ≠ 0`.
pub fn build_hf_a(sector: &SectorBasis, spec: &PotentialSpec, params: &ModelParams) -> Result<SparseOperator> {
    require_kind(sector, BasisKind::Excitation)?;
    check_fields(sector, spec, params, FrohlichForm::Original)
}

/// The same operator in quasi-particle occupation numbers:
/// `P²/2M + Σ e_p n_p + Σ (|p| w_p / √e_p) e^{-ipR} (b†_p + b_{−p}) + E^B`.
pub fn build_hf_b(sector: &SectorBasis, spec: &PotentialSpec, params: &ModelParams) -> Result<SparseOperator> {
    require_kind(sector, BasisKind::Excitation)?;
    check_fields(sector, spec, params, FrohlichForm::QuasiParticle)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum FrohlichForm {
    Original,
    QuasiParticle,
}

fn check_fields(
    sector: &SectorBasis,
    spec: &PotentialSpec,
    params: &ModelParams,
    form: FrohlichForm,
) -> Result<SparseOperator> {
    check_potential(sector, spec)?;
    let modes = sector.boson_modes().clone();
    let cap = sector.max_excitations();
    let imp_kin = impurity_kinetic(sector, params.impurity_mass);
    let bog = BogoliubovData::new(spec, &modes)?;

    let (energies, couplings, offset): (Vec<f64>, Vec<(ModeVector, f64)>, f64) = match form {
        FrohlichForm::Original => (
            modes.modes().iter().map(|m| m.momentum_sq() + spec.v(m)).collect(),
            spec.w_support().filter(|(p, _)| !p.is_zero()).collect(),
            0.0,
        ),
        FrohlichForm::QuasiParticle => (
            bog.modes.iter().map(|b| b.dispersion).collect(),
            bog.modes
                .iter()
                .filter(|b| b.coupling != 0.0)
                .map(|b| (b.mode, b.coupling))
                .collect(),
            bog.ground_energy,
        ),
    };
    let pairs: Vec<(usize, usize, f64)> = match form {
        FrohlichForm::Original => spec
            .v_support()
            .filter(|(p, _)| !p.is_zero())
            .map(|(p, x)| (modes.index_of(&p).unwrap(), modes.index_of(&-p).unwrap(), 0.5 * x))
            .collect(),
        FrohlichForm::QuasiParticle => Vec::new(),
    };
    let tables = ModeTables::new(sector, couplings.iter().map(|(p, _)| *p).collect());
    let linear: Vec<(usize, usize, usize, f64)> = couplings
        .iter()
        .enumerate()
        .map(|(s, (p, g))| (s, modes.index_of(p).unwrap(), modes.index_of(&-*p).unwrap(), *g))
        .collect();

    build(sector, |row| {
        let mut diag = imp_kin[row.imp] + offset;
        for (j, &e) in energies.iter().enumerate() {
            diag += e * row.occ[j] as f64;
        }
        row.out.push((row.row as u32, diag));
        let imp = row.imp;

        for &(ip, im, coef) in &pairs {
            if row.nplus + 2 <= cap {
                let c1 = row.create(im);
                let c2 = row.create(ip);
                row.emit(imp, coef * c1 * c2)?;
                row.occ[ip] -= 1;
                row.occ[im] -= 1;
            }
            if let Some(a1) = row.annihilate(im) {
                if let Some(a2) = row.annihilate(ip) {
                    row.emit(imp, coef * a1 * a2)?;
                    row.occ[ip] += 1;
                }
                row.occ[im] += 1;
            }
        }

        for &(s, ip, im, g) in &linear {
            let Some(imp_t) = tables.imp_minus(imp, s) else { continue };
            if row.nplus < cap {
                let c = row.create(ip);
                row.emit(imp_t, g * c)?;
                row.occ[ip] -= 1;
            }
            if let Some(a) = row.annihilate(im) {
                row.emit(imp_t, g * a)?;
                row.occ[im] += 1;
            }
        }
        Ok(())
    })
}

fn diagonal_op(sector: &SectorBasis, f: impl Fn(usize, &[u8], usize) -> f64 + Sync) -> SparseOperator {
    let nmodes = sector.nmodes();
    let diag: Vec<f64> = (0..sector.len())
        .into_par_iter()
        .with_min_len(256)
        .map(|i| {
            let mut occ = vec![0u8; nmodes];
            let imp = sector.decode(i, &mut occ);
            f(imp, &occ, sector.nplus_of(&occ))
        })
        .collect();
    SparseOperator::from_diagonal(sector.id(), diag)
}

/// Particle-conserving part `P²/2M + Σ_{p≠0} (p² + v_p) n_p`.
pub fn build_h0f(sector: &SectorBasis, spec: &PotentialSpec, params: &ModelParams) -> Result<SparseOperator> {
    check_potential(sector, spec)?;
    let imp_kin = impurity_kinetic(sector, params.impurity_mass);
    let energies: Vec<f64> = sector
        .boson_modes()
        .modes()
        .iter()
        .map(|m| if m.is_zero() { 0.0 } else { m.momentum_sq() + spec.v(m) })
        .collect();
    Ok(diagonal_op(sector, |imp, occ, _| {
        let mut x = imp_kin[imp];
        for (e, &n) in energies.iter().zip(occ) {
            x += e * n as f64;
        }
        x
    }))
}

/// Excitation number `N_+ = Σ_{p≠0} n_p`.
pub fn build_nplus(sector: &SectorBasis) -> SparseOperator {
    diagonal_op(sector, |_, _, nplus| nplus as f64)
}

/// Quintic smootherstep `6t⁵ − 15t⁴ + 10t³`.
fn smootherstep(t: f64) -> f64 {
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Localization profile: 1 on `[0, ½]`, 0 on `[1, ∞)`, and
/// `cos(π/2 · h(2x − 1))` in between.
pub fn localizer_f(x: f64) -> f64 {
    if x <= 0.5 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        (0.5 * PI * smootherstep(2.0 * x - 1.0)).cos()
    }
}

/// Companion profile with `f² + g² = 1`.
pub fn localizer_g(x: f64) -> f64 {
    if x <= 0.5 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        (0.5 * PI * smootherstep(2.0 * x - 1.0)).sin()
    }
}

/// Diagonal `f(N_+/M)` and `g(N_+/M)`.
pub fn build_localizers(sector: &SectorBasis, m: usize) -> Result<(SparseOperator, SparseOperator)> {
    if m == 0 {
        return Err(Error::InvalidArgument("localization scale M must be >= 1".into()));
    }
    let m = m as f64;
    Ok((
        diagonal_op(sector, |_, _, np| localizer_f(np as f64 / m)),
        diagonal_op(sector, |_, _, np| localizer_g(np as f64 / m)),
    ))
}

/// Diagonal bounds `E_ε`, `F_ε` with
/// `−E_ε ≤ H_N − E_H(N) − H^pre-F ≤ F_ε`; `‖w‖_∞` is replaced by `Σ|w_p|`.
pub fn build_sandwich_bounds(
    sector: &SectorBasis,
    spec: &PotentialSpec,
    params: &ModelParams,
    eps: f64,
) -> Result<(SparseOperator, SparseOperator)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let n = sector.n_particles().unwrap_or(params.n_particles);
    if n < 2 {
        return Err(Error::InvalidArgument("sandwich bounds need N >= 2".into()));
    }
    let nf = n as f64;
    let v0 = spec.v0();
    let v_origin = spec.v_at_origin();
    let w_sup = spec.w_sup_bound();
    let lin = eps * v0 * (2.0 * nf - 1.0) / (nf - 1.0);
    let lower = diagonal_op(sector, |_, _, np| {
        let np = np as f64;
        let quad = np * (np - 1.0) / (2.0 * (nf - 1.0));
        quad * (v0 + v_origin / eps) + lin * np
    });
    let upper = diagonal_op(sector, |_, _, np| {
        let np = np as f64;
        let quad = np * (np - 1.0) / (2.0 * (nf - 1.0));
        w_sup / nf.sqrt() * np + lin * np + (1.0 + 1.0 / eps) * quad * v_origin
    });
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{excitation_sector, nbody_sector};
    use crate::model::{ExperimentConfig, ModeVector};

    fn small_params(n: usize, pmax: u32) -> (ModelParams, PotentialSpec) {
        let cfg = ExperimentConfig::reference();
        let mut p = cfg.params.with_particles(n);
        p.p_max_boson = pmax;
        p.p_max_impurity = pmax;
        (p, cfg.potential)
    }

    #[test]
    fn free_hamiltonian_is_diagonal() {
        let (p, _) = small_params(3, 2);
        let free = PotentialSpec::zero(1);
        let s = nbody_sector(&p).unwrap();
        let h = build_hn(&s, &free, &p).unwrap();
        assert!(h.entries().all(|(i, j, _)| i == j));
        for (i, st) in s.states().enumerate() {
            let mut expected = st.impurity_mode.momentum_sq() / (2.0 * p.impurity_mass);
            for (m, &n) in s.boson_modes().modes().iter().zip(&st.occupations) {
                expected += m.momentum_sq() * n as f64;
            }
            assert!((h.get(i, i) - expected).abs() < 1e-12);
        }
        let pre = build_hn_pref(&s, &free, &p).unwrap();
        assert_eq!(pre.diagonal(), h.diagonal());
    }

    #[test]
    fn condensed_state_energies() {
        for n in [2, 5, 9] {
            let (p, spec) = small_params(n, 2);
            let s = nbody_sector(&p).unwrap();
            let zero = s.boson_modes().zero_index().unwrap();
            let mut occ = vec![0; s.nmodes()];
            occ[zero] = n as u8;
            let s0 = s
                .find(&crate::basis::ProductState {
                    impurity_mode: ModeVector::zero(1),
                    occupations: occ,
                })
                .unwrap();
            let h = build_hn(&s, &spec, &p).unwrap();
            let eh = crate::model::hartree_energy(n, &spec);
            assert!((h.get(s0, s0) - eh).abs() < 1e-10 * eh.abs());
            let pre = build_hn_pref(&s, &spec, &p).unwrap();
            assert_eq!(pre.get(s0, s0), 0.0);
        }
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let (p, spec) = small_params(3, 1);
        let ex = excitation_sector(&p, 3).unwrap();
        assert!(matches!(build_hn(&ex, &spec, &p), Err(Error::WrongSectorKind { .. })));
        let nb = nbody_sector(&p).unwrap();
        assert!(matches!(build_hf_a(&nb, &spec, &p), Err(Error::WrongSectorKind { .. })));
    }

    #[test]
    fn operators_are_exactly_symmetric() {
        let (p, spec) = small_params(4, 2);
        let nb = nbody_sector(&p).unwrap();
        let ex = excitation_sector(&p, 5).unwrap();
        for op in [
            build_hn(&nb, &spec, &p).unwrap(),
            build_hn_pref(&nb, &spec, &p).unwrap(),
            build_hf_a(&ex, &spec, &p).unwrap(),
            build_hf_b(&ex, &spec, &p).unwrap(),
        ] {
            assert_eq!(op.hermitian_defect(), None);
        }
    }

    #[test]
    fn hf_a_without_pair_and_coupling_terms_is_h0f() {
        let (p, spec) = small_params(4, 2);
        let ex = excitation_sector(&p, 4).unwrap();
        let h0 = build_h0f(&ex, &spec, &p).unwrap();
        let hfa = build_hf_a(&ex, &spec, &p).unwrap();
        assert_eq!(h0.diagonal(), hfa.diagonal());
        // Diagonal of HF_a is exactly the particle-conserving part.
        let only_diag = SparseOperator::from_diagonal(ex.id(), hfa.diagonal());
        let diff = SparseOperator::linear_combination(&[(1.0, &only_diag), (-1.0, &h0)]).unwrap();
        assert_eq!(diff.nnz(), 0);
    }

    #[test]
    fn h0f_examples() {
        let (p, spec) = small_params(4, 2);
        let ex = excitation_sector(&p, 3).unwrap();
        let h0 = build_h0f(&ex, &spec, &p).unwrap();
        let np = build_nplus(&ex);
        for (i, st) in ex.states().enumerate() {
            if st.impurity_mode.is_zero() && st.occupations.iter().all(|&n| n == 0) {
                assert_eq!(h0.get(i, i), 0.0);
            }
            assert!(h0.get(i, i) / (2.0 * PI).powi(2) >= np.get(i, i).max(0.0) - 1e-12);
        }
        // One boson at n = 1 and impurity at n = −1.
        let one = ex
            .find(&crate::basis::ProductState {
                impurity_mode: ModeVector::new(&[-1]),
                occupations: vec![0, 0, 1, 0],
            })
            .unwrap();
        let expected = 4.0 * PI * PI + spec.v(&ModeVector::new(&[1])) + 4.0 * PI * PI / 2.0;
        assert!((h0.get(one, one) - expected).abs() < 1e-12);
    }

    #[test]
    fn hf_b_free_coupling_is_diagonal_with_dispersion_gaps() {
        let (p, spec) = small_params(4, 1);
        let spec = spec.without_w();
        let ex = excitation_sector(&p, 4).unwrap();
        let h = build_hf_b(&ex, &spec, &p).unwrap();
        assert_eq!(h.nnz(), ex.len());
        let bog = BogoliubovData::new(&spec, ex.boson_modes()).unwrap();
        let vac = ex
            .find(&crate::basis::ProductState {
                impurity_mode: ModeVector::zero(1),
                occupations: vec![0, 0],
            })
            .unwrap();
        assert!((h.get(vac, vac) - bog.ground_energy).abs() < 1e-12);
        let pair = ex
            .find(&crate::basis::ProductState {
                impurity_mode: ModeVector::zero(1),
                occupations: vec![1, 1],
            })
            .unwrap();
        let gap = h.get(pair, pair) - h.get(vac, vac);
        let expected = 2.0 * bog.modes[0].dispersion;
        assert!((gap - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn representations_coincide_without_boson_interaction() {
        let (p, spec) = small_params(4, 2);
        let spec = spec.without_v();
        let ex = excitation_sector(&p, 4).unwrap();
        let a = build_hf_a(&ex, &spec, &p).unwrap();
        let b = build_hf_b(&ex, &spec, &p).unwrap();
        let diff = SparseOperator::linear_combination(&[(1.0, &a), (-1.0, &b)]).unwrap();
        assert!(diff.entries().all(|(_, _, x)| x.abs() < 1e-12));
    }

    #[test]
    fn nplus_examples() {
        let (p, _) = small_params(3, 1);
        let nb = nbody_sector(&p).unwrap();
        let n = build_nplus(&nb);
        for (i, st) in nb.states().enumerate() {
            let expected = st.occupations[0] + st.occupations[2];
            assert_eq!(n.get(i, i), expected as f64);
        }
        let ex = excitation_sector(&p, 2).unwrap();
        let n = build_nplus(&ex);
        for (i, st) in ex.states().enumerate() {
            let total: u8 = st.occupations.iter().sum();
            assert_eq!(n.get(i, i), total as f64);
        }
    }

    #[test]
    fn localizer_profile() {
        for m in [1usize, 2, 3, 7, 8] {
            for np in 0..=3 * m {
                let x = np as f64 / m as f64;
                let (f, g) = (localizer_f(x), localizer_g(x));
                assert!((f * f + g * g - 1.0).abs() <= 1e-14);
                if 2 * np <= m {
                    assert_eq!((f, g), (1.0, 0.0));
                }
                if np >= m {
                    assert_eq!(f, 0.0);
                }
            }
        }
        let (p, _) = small_params(3, 1);
        let ex = excitation_sector(&p, 4).unwrap();
        assert!(build_localizers(&ex, 0).is_err());
        let (f, g) = build_localizers(&ex, 3).unwrap();
        for (x, y) in f.diagonal().iter().zip(g.diagonal()) {
            assert!((x * x + y * y - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn sandwich_bounds_examples() {
        let (p, spec) = small_params(5, 1);
        let nb = nbody_sector(&p).unwrap();
        assert!(build_sandwich_bounds(&nb, &spec, &p, 0.0).is_err());
        let eps = 0.5;
        let (e, f) = build_sandwich_bounds(&nb, &spec, &p, eps).unwrap();
        let np = build_nplus(&nb).diagonal();
        let nf = 5.0;
        for ((&x, &y), &k) in e.diagonal().iter().zip(&f.diagonal()).zip(&np) {
            assert!(x >= 0.0 && y >= 0.0);
            if k == 0.0 {
                assert_eq!((x, y), (0.0, 0.0));
            }
            if k == 1.0 {
                let expected = eps * spec.v0() * (2.0 * nf - 1.0) / (nf - 1.0);
                assert!((x - expected).abs() < 1e-12 * expected);
            }
        }
    }

    #[test]
    fn dump_is_sorted_coordinate_text() {
        let (p, spec) = small_params(2, 1);
        let nb = nbody_sector(&p).unwrap();
        let h = build_hn(&nb, &spec, &p).unwrap();
        let mut buf = Vec::new();
        h.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed: Vec<(usize, usize, f64)> = text
            .lines()
            .map(|l| {
                let mut it = l.split_whitespace();
                (
                    it.next().unwrap().parse().unwrap(),
                    it.next().unwrap().parse().unwrap(),
                    it.next().unwrap().parse().unwrap(),
                )
            })
            .collect();
        assert_eq!(parsed.len(), h.nnz());
        assert!(parsed.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
        for (i, j, x) in parsed {
            assert_eq!(x, h.get(i, j));
        }
    }
}
