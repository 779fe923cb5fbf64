//! First-quantized reference for the N-body Hamiltonian.
//!
//! Works on the product space of `N` labelled bosons and the impurity, each
//! in a plane-wave mode, applies the kinetic terms and the multiplication
//! operators `v(x_i − x_j)` and `w(x_i − R)` term by term, and projects onto
//! symmetrized occupation states. Targets outside the mode cutoffs are
//! dropped, matching the projected second-quantized operator.

#![allow(dead_code)]

use std::collections::HashMap;

use bosepolaron::basis::SectorBasis;
use bosepolaron::model::{ModeVector, ModelParams, PotentialSpec};
use nalgebra::DMatrix;

type Labels = (Vec<usize>, usize);

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Applies the first-quantized Hamiltonian to one product state.
fn apply(
    labels: &Labels,
    sector: &SectorBasis,
    spec: &PotentialSpec,
    params: &ModelParams,
    out: &mut HashMap<Labels, f64>,
) {
    let modes = sector.boson_modes();
    let imps = sector.impurity_modes();
    let (bos, imp) = labels;
    let n = bos.len();
    let mut diag = imps.get(*imp).momentum_sq() / (2.0 * params.impurity_mass);
    for &b in bos {
        diag += modes.get(b).momentum_sq();
    }
    *out.entry(labels.clone()).or_default() += diag;

    let c_two = 1.0 / (n as f64 - 1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            for (p, vp) in spec.v_support() {
                let ki = modes.index_of(&(modes.get(bos[i]) + p));
                let kj = modes.index_of(&(modes.get(bos[j]) - p));
                if let (Some(ki), Some(kj)) = (ki, kj) {
                    let mut t = bos.clone();
                    t[i] = ki;
                    t[j] = kj;
                    *out.entry((t, *imp)).or_default() += c_two * vp;
                }
            }
        }
    }
    let c_imp = 1.0 / (n as f64).sqrt();
    for i in 0..n {
        for (p, wp) in spec.w_support() {
            let ki = modes.index_of(&(modes.get(bos[i]) + p));
            let kr = imps.index_of(&(imps.get(*imp) - p));
            if let (Some(ki), Some(kr)) = (ki, kr) {
                let mut t = bos.clone();
                t[i] = ki;
                *out.entry((t, kr)).or_default() += c_imp * wp;
            }
        }
    }
}

/// All orderings of the labels of an occupation vector.
fn arrangements(occ: &[u8]) -> Vec<Vec<usize>> {
    fn rec(occ: &mut Vec<u8>, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for m in 0..occ.len() {
            if occ[m] > 0 {
                occ[m] -= 1;
                cur.push(m);
                rec(occ, left - 1, cur, out);
                cur.pop();
                occ[m] += 1;
            }
        }
    }
    let total = occ.iter().map(|&o| o as usize).sum();
    let mut out = Vec::new();
    rec(&mut occ.to_vec(), total, &mut Vec::new(), &mut out);
    out
}

/// Dense matrix of the first-quantized Hamiltonian between the symmetrized
/// states of an n-body sector.
pub fn first_quantized_hn(sector: &SectorBasis, spec: &PotentialSpec, params: &ModelParams) -> DMatrix<f64> {
    let dim = sector.len();
    let mut index: HashMap<(Vec<u8>, usize), usize> = HashMap::new();
    let mut occs = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut occ = vec![0u8; sector.nmodes()];
        let imp = sector.decode(i, &mut occ);
        index.insert((occ.clone(), imp), i);
        occs.push((occ, imp));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for (col, (occ, imp)) in occs.iter().enumerate() {
        // |n⟩ = (N!/Π n_k!)^{-1/2} Σ over distinct arrangements.
        let arr = arrangements(occ);
        let norm = (arr.len() as f64).sqrt();
        let mut image: HashMap<Labels, f64> = HashMap::new();
        for a in &arr {
            apply(&(a.clone(), *imp), sector, spec, params, &mut image);
        }
        for ((labels, r), amp) in image {
            let mut o = vec![0u8; sector.nmodes()];
            for &l in &labels {
                o[l] += 1;
            }
            let count = factorial(labels.len()) / o.iter().map(|&k| factorial(k as usize)).product::<f64>();
            let row = index[&(o, r)];
            // ⟨n'| picks each arrangement with weight count^{-1/2}.
            m[(row, col)] += amp / norm / count.sqrt();
        }
    }
    m
}

pub fn mode(n: i32) -> ModeVector {
    ModeVector::new(&[n])
}
