//! Occupation-number bases and fixed-total-momentum sectors.
//!
//! Every product state (impurity plane wave ⊗ boson occupations) is packed
//! into a `u128` key: the impurity mode index sits in the high bits and the
//! occupations follow in mode order, most significant first. Numeric order of
//! keys is therefore lexicographic order in (impurity mode, occupation
//! vector), which is the basis ordering.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::model::{ModeSet, ModeVector, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    /// Exactly N bosons over a mode set containing p = 0.
    NBody,
    /// At most `cap` bosons over the nonzero modes.
    Excitation,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::NBody => "n-body",
            BasisKind::Excitation => "excitation",
        }
    }
}

/// A list of boson occupation vectors stored contiguously, one row of
/// `modes.len()` occupations per state, in lexicographic order.
#[derive(Clone, Debug)]
pub struct BosonStates {
    kind: BasisKind,
    modes: ModeSet,
    /// N for an n-body list, the maximal excitation number otherwise.
    cap: usize,
    occupations: Vec<u8>,
}

impl BosonStates {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        if self.modes.is_empty() {
            // Only the vacuum of an empty excitation mode set.
            return 1;
        }
        self.occupations.len() / self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> &[u8] {
        let m = self.modes.len();
        &self.occupations[i * m..(i + 1) * m]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        (0..self.len()).map(move |i| self.get(i))
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Number of weak compositions of `n` into `m` parts.
pub fn nbody_count(n: usize, m: usize) -> u128 {
    if m == 0 {
        return u128::from(n == 0);
    }
    binomial((n + m - 1) as u128, (m - 1) as u128)
}

/// Number of occupation vectors over `m` modes with total at most `cap`.
pub fn excitation_count(cap: usize, m: usize) -> u128 {
    binomial((cap + m) as u128, m as u128)
}

fn enumerate(m: usize, total: usize, exact: bool, out: &mut Vec<u8>) {
    fn rec(pos: usize, remaining: usize, exact: bool, cur: &mut [u8], out: &mut Vec<u8>) {
        let m = cur.len();
        if pos + 1 == m {
            if exact {
                cur[pos] = remaining as u8;
                out.extend_from_slice(cur);
            } else {
                for v in 0..=remaining {
                    cur[pos] = v as u8;
                    out.extend_from_slice(cur);
                }
            }
            return;
        }
        for v in 0..=remaining {
            cur[pos] = v as u8;
            rec(pos + 1, remaining - v, exact, cur, out);
        }
        cur[pos] = 0;
    }
    if m == 0 {
        return;
    }
    let mut cur = vec![0u8; m];
    rec(0, total, exact, &mut cur, out);
}

fn check_occupation_width(cap: usize) -> Result<()> {
    if cap > u8::MAX as usize {
        return Err(Error::EncodingOverflow {
            needed: bits_for(cap),
        });
    }
    Ok(())
}

/// All weak compositions of N over the boson mode set (p = 0 included).
pub fn enumerate_nbody(params: &ModelParams) -> Result<BosonStates> {
    let modes = params.boson_modes();
    let n = params.n_particles;
    check_occupation_width(n)?;
    let count = nbody_count(n, modes.len());
    if count > params.basis_limit as u128 {
        return Err(Error::BasisTooLarge {
            count,
            limit: params.basis_limit,
        });
    }
    let mut occupations = Vec::with_capacity(count as usize * modes.len());
    enumerate(modes.len(), n, true, &mut occupations);
    Ok(BosonStates {
        kind: BasisKind::NBody,
        modes,
        cap: n,
        occupations,
    })
}

/// All occupation vectors over the nonzero modes with `N_+ ≤ cap`.
pub fn enumerate_excitation_capped(params: &ModelParams, cap: usize) -> Result<BosonStates> {
    let modes = params.excitation_modes();
    check_occupation_width(cap)?;
    let count = excitation_count(cap, modes.len());
    if count > params.basis_limit as u128 {
        return Err(Error::BasisTooLarge {
            count,
            limit: params.basis_limit,
        });
    }
    let mut occupations = Vec::with_capacity(count as usize * modes.len());
    enumerate(modes.len(), cap, false, &mut occupations);
    Ok(BosonStates {
        kind: BasisKind::Excitation,
        modes,
        cap,
        occupations,
    })
}

/// Excitation basis with `N_+ ≤ M_exc`.
pub fn enumerate_excitation(params: &ModelParams) -> Result<BosonStates> {
    enumerate_excitation_capped(params, params.excitation_cutoff)
}

/// Excitation basis paired with an N-body run: `N_+ ≤ min(M_exc, N)`.
pub fn enumerate_excitation_paired(params: &ModelParams) -> Result<BosonStates> {
    enumerate_excitation_capped(params, params.excitation_cutoff.min(params.n_particles))
}

fn bits_for(max_value: usize) -> u32 {
    (usize::BITS - max_value.leading_zeros()).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Packing {
    mode_bits: u32,
    nmodes: u32,
    imp_shift: u32,
}

impl Packing {
    fn new(nmodes: usize, cap: usize, impurity_modes: usize) -> Result<Self> {
        let mode_bits = bits_for(cap);
        let imp_bits = bits_for(impurity_modes.saturating_sub(1));
        let needed = mode_bits * nmodes as u32 + imp_bits;
        if needed > 128 {
            return Err(Error::EncodingOverflow { needed });
        }
        Ok(Self {
            mode_bits,
            nmodes: nmodes as u32,
            imp_shift: mode_bits * nmodes as u32,
        })
    }

    #[inline]
    fn encode(&self, impurity: usize, occ: &[u8]) -> u128 {
        let mut key = 0u128;
        for &n in occ {
            key = (key << self.mode_bits) | n as u128;
        }
        key | ((impurity as u128) << self.imp_shift)
    }

    #[inline]
    fn decode(&self, key: u128, occ: &mut [u8]) -> usize {
        let mask = (1u128 << self.mode_bits) - 1;
        let mut k = key;
        for slot in occ.iter_mut().rev() {
            *slot = (k & mask) as u8;
            k >>= self.mode_bits;
        }
        if self.imp_shift >= 128 {
            0
        } else {
            (key >> self.imp_shift) as usize
        }
    }
}

static NEXT_BASIS_ID: AtomicU64 = AtomicU64::new(1);

/// An impurity plane wave tensored with a boson occupation vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProductState {
    pub impurity_mode: ModeVector,
    pub occupations: Vec<u8>,
}

/// Product states of one total momentum with O(1) state → index lookup.
#[derive(Debug)]
pub struct SectorBasis {
    id: u64,
    kind: BasisKind,
    boson_modes: ModeSet,
    impurity_modes: ModeSet,
    sector_momentum: ModeVector,
    cap: usize,
    packing: Packing,
    keys: Vec<u128>,
    index: FxHashMap<u128, u32>,
}

/// Filters `boson ⊗ impurity modes` by total momentum `params.total_momentum`.
pub fn build_sector(bosons: &BosonStates, params: &ModelParams) -> Result<SectorBasis> {
    let impurity_modes = params.impurity_modes();
    let target = params.total_momentum;
    let modes = bosons.modes().modes();
    let packing = Packing::new(modes.len(), bosons.cap(), impurity_modes.len())?;

    let mut by_momentum: FxHashMap<ModeVector, Vec<u32>> = FxHashMap::default();
    for (i, occ) in bosons.iter().enumerate() {
        let mut total = ModeVector::zero(params.dim);
        for (m, &n) in modes.iter().zip(occ) {
            if n > 0 {
                total = total + (n as i32) * *m;
            }
        }
        by_momentum.entry(total).or_default().push(i as u32);
    }

    let mut keys = Vec::new();
    for (imp_idx, imp) in impurity_modes.modes().iter().enumerate() {
        if let Some(list) = by_momentum.get(&(target - *imp)) {
            keys.extend(
                list.iter()
                    .map(|&i| packing.encode(imp_idx, bosons.get(i as usize))),
            );
        }
    }
    if keys.is_empty() {
        return Err(Error::EmptySector { momentum: target });
    }
    debug_assert!(keys.windows(2).all(|w| w[0] < w[1]));
    let index = keys
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, i as u32))
        .collect();
    Ok(SectorBasis {
        id: NEXT_BASIS_ID.fetch_add(1, Ordering::Relaxed),
        kind: bosons.kind(),
        boson_modes: bosons.modes().clone(),
        impurity_modes,
        sector_momentum: target,
        cap: bosons.cap(),
        packing,
        keys,
        index,
    })
}

/// Convenience: enumerate the N-body states and build the sector.
pub fn nbody_sector(params: &ModelParams) -> Result<SectorBasis> {
    build_sector(&enumerate_nbody(params)?, params)
}

/// Convenience: excitation sector with `N_+ ≤ cap`.
pub fn excitation_sector(params: &ModelParams, cap: usize) -> Result<SectorBasis> {
    build_sector(&enumerate_excitation_capped(params, cap)?, params)
}

impl SectorBasis {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn boson_modes(&self) -> &ModeSet {
        &self.boson_modes
    }

    pub fn impurity_modes(&self) -> &ModeSet {
        &self.impurity_modes
    }

    pub fn sector_momentum(&self) -> ModeVector {
        self.sector_momentum
    }

    /// N for n-body sectors.
    pub fn n_particles(&self) -> Option<usize> {
        (self.kind == BasisKind::NBody).then_some(self.cap)
    }

    /// Largest `N_+` representable in the sector.
    pub fn max_excitations(&self) -> usize {
        self.cap
    }

    pub fn nmodes(&self) -> usize {
        self.boson_modes.len()
    }

    pub fn key(&self, i: usize) -> u128 {
        self.keys[i]
    }

    /// Writes the occupations of state `i` into `occ` and returns the
    /// impurity mode index.
    #[inline]
    pub fn decode(&self, i: usize, occ: &mut [u8]) -> usize {
        self.packing.decode(self.keys[i], occ)
    }

    #[inline]
    pub fn encode(&self, impurity: usize, occ: &[u8]) -> u128 {
        self.packing.encode(impurity, occ)
    }

    #[inline]
    pub fn find_key(&self, key: u128) -> Option<usize> {
        self.index.get(&key).map(|&i| i as usize)
    }

    pub fn state(&self, i: usize) -> ProductState {
        let mut occupations = vec![0u8; self.nmodes()];
        let imp = self.decode(i, &mut occupations);
        ProductState {
            impurity_mode: self.impurity_modes.get(imp),
            occupations,
        }
    }

    pub fn find(&self, state: &ProductState) -> Option<usize> {
        let imp = self.impurity_modes.index_of(&state.impurity_mode)?;
        if state.occupations.len() != self.nmodes()
            || state.occupations.iter().map(|&n| n as usize).sum::<usize>() > self.cap
        {
            return None;
        }
        self.find_key(self.encode(imp, &state.occupations))
    }

    pub fn states(&self) -> impl Iterator<Item = ProductState> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }

    /// Excitation number of an occupation vector of this sector.
    #[inline]
    pub fn nplus_of(&self, occ: &[u8]) -> usize {
        let total: usize = occ.iter().map(|&n| n as usize).sum();
        match self.kind {
            BasisKind::NBody => {
                let zero = self.boson_modes.zero_index().expect("n-body mode set has p = 0");
                total - occ[zero] as usize
            }
            BasisKind::Excitation => total,
        }
    }

    /// `N_+` for every basis state, in basis order.
    pub fn nplus_values(&self) -> Vec<usize> {
        let mut occ = vec![0u8; self.nmodes()];
        (0..self.len())
            .map(|i| {
                self.decode(i, &mut occ);
                self.nplus_of(&occ)
            })
            .collect()
    }

    pub fn total_momentum_of(&self, state: &ProductState) -> ModeVector {
        let mut total = state.impurity_mode;
        for (m, &n) in self.boson_modes.modes().iter().zip(&state.occupations) {
            total = total + (n as i32) * *m;
        }
        total
    }

    /// One line per state, `impurity_n | occupations`, in basis order.
    pub fn write_dump(&self, mut out: impl Write) -> std::io::Result<()> {
        for state in self.states() {
            let imp: Vec<String> = state
                .impurity_mode
                .components()
                .iter()
                .map(|c| c.to_string())
                .collect();
            let occ: Vec<String> = state.occupations.iter().map(|n| n.to_string()).collect();
            writeln!(out, "{} | {}", imp.join(","), occ.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ExperimentConfig, ModeVector};

    fn params(d: usize, pb: u32, pi: u32, n: usize, mexc: usize) -> ModelParams {
        let mut p = ExperimentConfig::reference().params;
        p.dim = d;
        p.p_max_boson = pb;
        p.p_max_impurity = pi;
        p.n_particles = n;
        p.excitation_cutoff = mexc;
        p.total_momentum = ModeVector::zero(d);
        p
    }

    /// Independent count: all vectors in `0..=cap`^m filtered by the sum rule.
    fn brute_force(m: usize, cap: usize, exact: bool) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        let total = (cap + 1).pow(m as u32);
        for flat in 0..total {
            let mut v = vec![0u8; m];
            let mut rem = flat;
            for slot in v.iter_mut().rev() {
                *slot = (rem % (cap + 1)) as u8;
                rem /= cap + 1;
            }
            let s: usize = v.iter().map(|&x| x as usize).sum();
            if (exact && s == cap) || (!exact && s <= cap) {
                out.push(v);
            }
        }
        out
    }

    #[test]
    fn nbody_examples() {
        let b = enumerate_nbody(&params(1, 0, 0, 3, 1)).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.get(0), &[3]);
        assert_eq!(enumerate_nbody(&params(1, 1, 0, 2, 1)).unwrap().len(), 6);
        let b = enumerate_nbody(&params(1, 2, 0, 4, 1)).unwrap();
        let oracle = brute_force(5, 4, true);
        assert_eq!(oracle.len(), 70);
        assert_eq!(b.iter().map(|s| s.to_vec()).collect::<Vec<_>>(), oracle);
        assert_eq!(nbody_count(4, 5), 70);
    }

    #[test]
    fn excitation_examples() {
        let b = enumerate_excitation(&params(1, 2, 0, 4, 0)).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.get(0).iter().all(|&n| n == 0));
        assert_eq!(enumerate_excitation(&params(1, 1, 0, 4, 2)).unwrap().len(), 6);
        let b = enumerate_excitation(&params(1, 2, 0, 4, 3)).unwrap();
        let oracle = brute_force(4, 3, false);
        assert_eq!(oracle.len(), 35);
        assert_eq!(b.iter().map(|s| s.to_vec()).collect::<Vec<_>>(), oracle);
        assert_eq!(excitation_count(3, 4), 35);
        let paired = enumerate_excitation_paired(&params(1, 2, 0, 2, 3)).unwrap();
        assert_eq!(paired.cap(), 2);
    }

    #[test]
    fn size_limit_refuses() {
        let mut p = params(1, 3, 0, 24, 1);
        p.basis_limit = 1000;
        match enumerate_nbody(&p) {
            Err(Error::BasisTooLarge { count, limit }) => {
                assert_eq!(count, 593_775);
                assert_eq!(limit, 1000);
            }
            other => panic!("expected size error, got {other:?}"),
        }
    }

    #[test]
    fn vacuum_sector() {
        let p = params(1, 1, 1, 2, 0);
        let s = build_sector(&enumerate_excitation(&p).unwrap(), &p).unwrap();
        assert_eq!(s.len(), 1);
        let st = s.state(0);
        assert_eq!(st.impurity_mode, ModeVector::zero(1));
        assert!(st.occupations.iter().all(|&n| n == 0));
    }

    #[test]
    fn unreachable_sector_is_an_error() {
        let mut p = params(1, 1, 1, 2, 1);
        p.total_momentum = ModeVector::new(&[50]);
        let err = build_sector(&enumerate_nbody(&p).unwrap(), &p).unwrap_err();
        assert!(matches!(err, Error::EmptySector { .. }));
        assert!(err.to_string().contains("[50]"));
    }

    #[test]
    fn sector_count_matches_brute_force_filter() {
        let p = params(1, 1, 1, 2, 1);
        let s = nbody_sector(&p).unwrap();
        let mut expected = 0;
        for imp in -1i32..=1 {
            for occ in brute_force(3, 2, true) {
                let mom: i32 = imp + occ.iter().zip([-1, 0, 1]).map(|(&n, q)| n as i32 * q).sum::<i32>();
                if mom == 0 {
                    expected += 1;
                }
            }
        }
        assert_eq!(s.len(), expected);
    }

    #[test]
    fn round_trip_and_ordering() {
        let p = params(2, 1, 1, 3, 1);
        let s = nbody_sector(&p).unwrap();
        let states: Vec<_> = s.states().collect();
        for (i, st) in states.iter().enumerate() {
            assert_eq!(s.find(st), Some(i));
            assert_eq!(s.total_momentum_of(st), p.total_momentum);
        }
        let mut sorted = states.clone();
        sorted.sort_by(|a, b| (a.impurity_mode, &a.occupations).cmp(&(b.impurity_mode, &b.occupations)));
        assert_eq!(sorted, states);
    }

    #[test]
    fn sectors_partition_the_product_space() {
        let p = params(1, 2, 2, 3, 1);
        let bosons = enumerate_nbody(&p).unwrap();
        let mut total = 0;
        for k in -20..=20 {
            let mut q = p.clone();
            q.total_momentum = ModeVector::new(&[k]);
            if let Ok(s) = build_sector(&bosons, &q) {
                total += s.len();
            }
        }
        assert_eq!(total, bosons.len() * 5);
    }

    #[test]
    fn excitation_with_cap_n_is_in_bijection_with_nbody() {
        let p = params(1, 2, 2, 4, 4);
        let nb = nbody_sector(&p).unwrap();
        let ex = excitation_sector(&p, 4).unwrap();
        assert_eq!(nb.len(), ex.len());
        let zero = nb.boson_modes().zero_index().unwrap();
        for st in nb.states() {
            let mut occ = st.occupations.clone();
            occ.remove(zero);
            let image = ProductState {
                impurity_mode: st.impurity_mode,
                occupations: occ,
            };
            assert!(ex.find(&image).is_some());
        }
    }

    #[test]
    fn dump_format() {
        let p = params(1, 1, 1, 2, 1);
        let s = nbody_sector(&p).unwrap();
        let mut buf = Vec::new();
        s.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), s.len());
        assert_eq!(lines[0], "-1 | 0 1 1");
        assert!(lines.contains(&"0 | 0 2 0"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn index_inverts_ordering(d in 1usize..=2, pb in 0u32..=1, n in 2usize..=4, k in -2i32..=2) {
                let mut p = params(d, pb, 1, n, 3);
                let mut comps = vec![0; d];
                comps[0] = k;
                p.total_momentum = ModeVector::new(&comps);
                for bosons in [enumerate_nbody(&p).unwrap(), enumerate_excitation(&p).unwrap()] {
                    if let Ok(s) = build_sector(&bosons, &p) {
                        for i in 0..s.len() {
                            let st = s.state(i);
                            prop_assert_eq!(s.find(&st), Some(i));
                            prop_assert_eq!(s.total_momentum_of(&st), p.total_momentum);
                        }
                    }
                }
            }
        }
    }
}
