//! Excitation map between the N-body sector and the excitation sector.
//!
//! In the plane-wave occupation basis the map is the relabeling
//! `(n_0, {n_p}) ↦ {n_p}` with unit amplitude; `n_0 = N − N_+` is implied.

use crate::assembly::SparseOperator;
use crate::basis::{BasisKind, SectorBasis};
use crate::error::{Error, Result};
use crate::solve::SpectrumResult;

/// Coefficients over an excitation sector obtained from an N-body vector.
#[derive(Clone, Debug)]
pub struct MappedState {
    pub coefficients: Vec<f64>,
    pub source_n: usize,
    /// `‖Ψ‖²` carried by N-body states whose image exceeds the target cap.
    pub discarded_weight: f64,
    pub basis_id: u64,
}

impl MappedState {
    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Image of every N-body basis state in the excitation sector, `None` where
/// the target cap is below that state's `N_+`.
#[derive(Clone, Debug)]
pub struct LnssBijection {
    images: Vec<Option<u32>>,
    n: usize,
    source_id: u64,
    target_id: u64,
    target_len: usize,
}

impl LnssBijection {
    pub fn new(nbody: &SectorBasis, target: &SectorBasis) -> Result<Self> {
        if nbody.kind() != BasisKind::NBody {
            return Err(Error::WrongSectorKind {
                expected: BasisKind::NBody.name(),
                got: nbody.kind().name(),
            });
        }
        if target.kind() != BasisKind::Excitation {
            return Err(Error::WrongSectorKind {
                expected: BasisKind::Excitation.name(),
                got: target.kind().name(),
            });
        }
        if nbody.sector_momentum() != target.sector_momentum() {
            return Err(Error::IncompatibleSectors("different total momentum".into()));
        }
        if nbody.impurity_modes() != target.impurity_modes() {
            return Err(Error::IncompatibleSectors("different impurity cutoffs".into()));
        }
        if nbody.boson_modes().without_zero() != *target.boson_modes() {
            return Err(Error::IncompatibleSectors("different nonzero mode sets".into()));
        }
        let zero = nbody.boson_modes().zero_index().expect("n-body modes include 0");
        let mut occ = vec![0u8; nbody.nmodes()];
        let mut ex = vec![0u8; target.nmodes()];
        let images = (0..nbody.len())
            .map(|i| {
                let imp = nbody.decode(i, &mut occ);
                let mut w = 0;
                for (j, &o) in occ.iter().enumerate() {
                    if j != zero {
                        ex[w] = o;
                        w += 1;
                    }
                }
                if target.nplus_of(&ex) > target.max_excitations() {
                    return None;
                }
                target.find_key(target.encode(imp, &ex)).map(|c| c as u32)
            })
            .collect();
        Ok(Self {
            images,
            n: nbody.n_particles().expect("n-body"),
            source_id: nbody.id(),
            target_id: target.id(),
            target_len: target.len(),
        })
    }

    pub fn image(&self, i: usize) -> Option<usize> {
        self.images[i].map(|c| c as usize)
    }

    /// True when every N-body state has an image and the target has no other
    /// states.
    pub fn is_complete(&self) -> bool {
        self.images.iter().all(Option::is_some) && self.images.len() == self.target_len
    }

    pub fn source_len(&self) -> usize {
        self.images.len()
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }
}

/// Maps an N-body vector, failing if any nonzero coefficient has no image.
pub fn lnss_forward(vec: &[f64], nbody: &SectorBasis, target: &SectorBasis) -> Result<MappedState> {
    lnss_forward_truncated(vec, nbody, target, 0.0)
}

/// Maps an N-body vector, tolerating up to `max_discarded` of `‖Ψ‖²` on
/// states above the target cap.
pub fn lnss_forward_truncated(
    vec: &[f64],
    nbody: &SectorBasis,
    target: &SectorBasis,
    max_discarded: f64,
) -> Result<MappedState> {
    let map = LnssBijection::new(nbody, target)?;
    map.forward(vec, max_discarded)
}

impl LnssBijection {
    pub fn forward(&self, vec: &[f64], max_discarded: f64) -> Result<MappedState> {
        if vec.len() != self.images.len() {
            return Err(Error::DimensionMismatch {
                expected: self.images.len(),
                got: vec.len(),
            });
        }
        let mut coefficients = vec![0.0; self.target_len];
        let mut discarded = 0.0;
        let mut lost_any = false;
        for (x, img) in vec.iter().zip(&self.images) {
            match img {
                Some(c) => coefficients[*c as usize] = *x,
                None if *x != 0.0 => {
                    discarded += x * x;
                    lost_any = true;
                }
                None => {}
            }
        }
        if lost_any && discarded > max_discarded {
            return Err(Error::CutoffTooSmall {
                discarded,
                limit: max_discarded,
            });
        }
        Ok(MappedState {
            coefficients,
            source_n: self.n,
            discarded_weight: discarded,
            basis_id: self.target_id,
        })
    }

    /// Preimage of an excitation-sector vector.
    pub fn inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.target_len {
            return Err(Error::DimensionMismatch {
                expected: self.target_len,
                got: coeffs.len(),
            });
        }
        let mut out = vec![0.0; self.images.len()];
        let mut hit = vec![false; self.target_len];
        for (o, img) in out.iter_mut().zip(&self.images) {
            if let Some(c) = img {
                *o = coeffs[*c as usize];
                hit[*c as usize] = true;
            }
        }
        if let Some(pos) = coeffs.iter().zip(&hit).position(|(x, h)| *x != 0.0 && !h) {
            return Err(Error::IncompatibleSectors(format!(
                "excitation state {pos} has N_+ > N = {} and no preimage",
                self.n
            )));
        }
        Ok(out)
    }

    /// `U A U†` for an operator on the N-body sector.
    pub fn conjugate(&self, op: &SparseOperator) -> Result<SparseOperator> {
        if op.basis_id() != self.source_id || op.dim() != self.images.len() {
            return Err(Error::IncompatibleSectors(
                "operator is not defined on the source sector".into(),
            ));
        }
        if !self.is_complete() {
            return Err(Error::IncompatibleSectors(format!(
                "conjugation needs an excitation sector with cap N = {}",
                self.n
            )));
        }
        let entries = op.entries().map(|(i, j, x)| (self.image(i).unwrap(), self.image(j).unwrap(), x));
        Ok(SparseOperator::from_entries(self.target_len, self.target_id, entries))
    }
}

pub fn lnss_inverse(coeffs: &[f64], target: &SectorBasis, nbody: &SectorBasis) -> Result<Vec<f64>> {
    LnssBijection::new(nbody, target)?.inverse(coeffs)
}

pub fn conjugate_operator(op: &SparseOperator, nbody: &SectorBasis, target: &SectorBasis) -> Result<SparseOperator> {
    LnssBijection::new(nbody, target)?.conjugate(op)
}

/// `Σ_φ |⟨φ, UΨ⟩|²` over the eigenvectors of the degenerate cluster holding
/// `level`.
pub fn overlap_with_eigenspace(mapped: &MappedState, spectrum: &SpectrumResult, level: usize) -> Result<f64> {
    if level >= spectrum.eigenvalues.len() {
        return Err(Error::LevelNotConverged { level });
    }
    let mut total = 0.0;
    for l in spectrum.cluster(level) {
        let phi = spectrum.vector(l)?;
        if phi.len() != mapped.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: phi.len(),
                got: mapped.coefficients.len(),
            });
        }
        let d: f64 = phi.iter().zip(&mapped.coefficients).map(|(a, b)| a * b).sum();
        total += d * d;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// `(⟨N_+⟩, ⟨N_+²⟩)` for a normalized vector.
pub fn nplus_moments(vec: &[f64], sector: &SectorBasis) -> Result<(f64, f64)> {
    if vec.len() != sector.len() {
        return Err(Error::DimensionMismatch {
            expected: sector.len(),
            got: vec.len(),
        });
    }
    let norm = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let mut occ = vec![0u8; sector.nmodes()];
    let (mut m1, mut m2) = (0.0, 0.0);
    for (i, x) in vec.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        sector.decode(i, &mut occ);
        let n = sector.nplus_of(&occ) as f64;
        m1 += x * x * n;
        m2 += x * x * n * n;
    }
    Ok((m1, m2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{build_hn, build_hn_pref, build_nplus};
    use crate::basis::{excitation_sector, nbody_sector, ProductState};
    use crate::model::{ExperimentConfig, ModeVector};
    use crate::solve::eigs_lowest;

    fn setup(n: usize) -> (crate::model::ModelParams, crate::model::PotentialSpec, SectorBasis, SectorBasis) {
        let cfg = ExperimentConfig::reference();
        let mut p = cfg.params.with_particles(n);
        p.p_max_boson = 2;
        p.p_max_impurity = 2;
        let nb = nbody_sector(&p).unwrap();
        let ex = excitation_sector(&p, n).unwrap();
        (p, cfg.potential, nb, ex)
    }

    #[test]
    fn bijection_is_a_permutation() {
        let (_, _, nb, ex) = setup(4);
        let map = LnssBijection::new(&nb, &ex).unwrap();
        assert!(map.is_complete());
        let mut seen = vec![false; ex.len()];
        for i in 0..nb.len() {
            let c = map.image(i).unwrap();
            assert!(!seen[c]);
            seen[c] = true;
        }
    }

    #[test]
    fn condensed_state_maps_to_vacuum() {
        let (_, _, nb, ex) = setup(5);
        let zero = nb.boson_modes().zero_index().unwrap();
        let mut occ = vec![0; nb.nmodes()];
        occ[zero] = 5;
        let i = nb
            .find(&ProductState {
                impurity_mode: ModeVector::zero(1),
                occupations: occ.clone(),
            })
            .unwrap();
        let mut v = vec![0.0; nb.len()];
        v[i] = 1.0;
        let m = lnss_forward(&v, &nb, &ex).unwrap();
        let vac = ex
            .find(&ProductState {
                impurity_mode: ModeVector::zero(1),
                occupations: vec![0; ex.nmodes()],
            })
            .unwrap();
        assert_eq!(m.coefficients[vac], 1.0);
        assert_eq!(m.source_n, 5);

        // One excitation at n = 1 with impurity at n = −1.
        occ[zero] = 4;
        occ[zero + 1] = 1;
        let j = nb
            .find(&ProductState {
                impurity_mode: ModeVector::new(&[-1]),
                occupations: occ,
            })
            .unwrap();
        let mut v = vec![0.0; nb.len()];
        v[j] = -0.375;
        let m = lnss_forward(&v, &nb, &ex).unwrap();
        let target = ex
            .find(&ProductState {
                impurity_mode: ModeVector::new(&[-1]),
                occupations: vec![0, 0, 1, 0],
            })
            .unwrap();
        assert_eq!(m.coefficients[target], -0.375);
    }

    #[test]
    fn small_cap_reports_discarded_weight() {
        let (p, spec, nb, _) = setup(4);
        let small = excitation_sector(&p, 1).unwrap();
        let h = build_hn(&nb, &spec, &p).unwrap();
        let gs = eigs_lowest(&h, 1, 1e-10).unwrap();
        let v = gs.vector(0).unwrap();
        assert!(matches!(lnss_forward(v, &nb, &small), Err(Error::CutoffTooSmall { .. })));
        let m = lnss_forward_truncated(v, &nb, &small, 1.0).unwrap();
        let kept: f64 = m.coefficients.iter().map(|x| x * x).sum();
        assert!((kept + m.discarded_weight - 1.0).abs() < 1e-12);
        assert!(conjugate_operator(&h, &nb, &small).is_err());
    }

    #[test]
    fn conjugation_preserves_spectrum_and_nplus() {
        let (p, spec, nb, ex) = setup(4);
        let h = build_hn(&nb, &spec, &p).unwrap();
        let uhu = conjugate_operator(&h, &nb, &ex).unwrap();
        let a = eigs_lowest(&h, 4, 1e-11).unwrap();
        let b = eigs_lowest(&uhu, 4, 1e-11).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() <= 1e-10);
        }
        let np = conjugate_operator(&build_nplus(&nb), &nb, &ex).unwrap();
        assert_eq!(np.diagonal(), build_nplus(&ex).diagonal());
        let pre = conjugate_operator(&build_hn_pref(&nb, &spec, &p).unwrap(), &nb, &ex).unwrap();
        assert_eq!(pre.dim(), ex.len());
    }

    /// The `a†_p a_0` part of the pre-Fröhlich operator becomes
    /// `a†_p √(N − N_+)` after conjugation.
    #[test]
    fn condensate_factor_identity() {
        let (p, spec, nb, ex) = setup(5);
        let spec = spec.without_v();
        let n = 5.0f64;
        let pre = conjugate_operator(&build_hn_pref(&nb, &spec, &p).unwrap(), &nb, &ex).unwrap();
        let c_imp = 1.0 / n.sqrt();
        for (i, j, x) in pre.entries() {
            if i == j {
                continue;
            }
            let (si, sj) = (ex.state(i), ex.state(j));
            let ni: i32 = si.occupations.iter().map(|&o| o as i32).sum();
            let nj: i32 = sj.occupations.iter().map(|&o| o as i32).sum();
            // Row state has one more excitation than the column state.
            let (hi, lo, nlo) = if ni == nj + 1 { (&si, &sj, nj) } else { (&sj, &si, ni) };
            let mode = (0..ex.nmodes())
                .find(|&m| hi.occupations[m] == lo.occupations[m] + 1)
                .unwrap();
            let pm = ex.boson_modes().get(mode);
            let expected = c_imp
                * spec.w(&pm)
                * ((lo.occupations[mode] + 1) as f64).sqrt()
                * (n - nlo as f64).sqrt();
            assert!((x - expected).abs() < 1e-12, "{x} vs {expected}");
        }
    }

    #[test]
    fn inverse_round_trip() {
        let (_, _, nb, ex) = setup(3);
        let v: Vec<f64> = (0..nb.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let m = lnss_forward(&v, &nb, &ex).unwrap();
        assert_eq!(lnss_inverse(&m.coefficients, &ex, &nb).unwrap(), v);
    }

    #[test]
    fn overlap_examples() {
        let (p, spec, nb, ex) = setup(3);
        let h = conjugate_operator(&build_hn(&nb, &spec, &p).unwrap(), &nb, &ex).unwrap();
        let s = eigs_lowest(&h, 3, 1e-11).unwrap();
        let phi = s.vector(0).unwrap().to_vec();
        let m = MappedState {
            coefficients: phi.clone(),
            source_n: 3,
            discarded_weight: 0.0,
            basis_id: ex.id(),
        };
        assert!((overlap_with_eigenspace(&m, &s, 0).unwrap() - 1.0).abs() < 1e-12);
        let m = MappedState {
            coefficients: s.vector(2).unwrap().to_vec(),
            ..m
        };
        assert!(overlap_with_eigenspace(&m, &s, 0).unwrap() < 1e-12);
    }

    #[test]
    fn moments_examples() {
        let (_, _, _, ex) = setup(3);
        let vac = ex
            .find(&ProductState {
                impurity_mode: ModeVector::zero(1),
                occupations: vec![0; 4],
            })
            .unwrap();
        let mut v = vec![0.0; ex.len()];
        v[vac] = 1.0;
        assert_eq!(nplus_moments(&v, &ex).unwrap(), (0.0, 0.0));
        let one = ex
            .find(&ProductState {
                impurity_mode: ModeVector::new(&[1]),
                occupations: vec![0, 1, 0, 0],
            })
            .unwrap();
        let mut v = vec![0.0; ex.len()];
        v[one] = 1.0;
        assert_eq!(nplus_moments(&v, &ex).unwrap(), (1.0, 1.0));
    }
}
