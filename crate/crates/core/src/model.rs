//! Model configuration and the closed-form scalar quantities of the
//! impurity/Bose-gas problem on the unit torus.
//!
//! Momenta are stored as integer lattice vectors `n`; the physical momentum
//! is `p = 2π n`. Potentials are finitely supported tables of Fourier
//! coefficients, so every sum below is finite.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Integer lattice vector of length `dim` (1, 2 or 3).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeVector {
    dim: u8,
    comps: [i32; 3],
}

impl ModeVector {
    pub fn new(comps: &[i32]) -> Self {
        assert!(
            (1..=3).contains(&comps.len()),
            "mode vectors have 1 to 3 components"
        );
        let mut c = [0; 3];
        c[..comps.len()].copy_from_slice(comps);
        Self {
            dim: comps.len() as u8,
            comps: c,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(&[0, 0, 0][..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn components(&self) -> &[i32] {
        &self.comps[..self.dim as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.comps == [0; 3]
    }

    pub fn norm_inf(&self) -> u32 {
        self.components()
            .iter()
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// `Σ n_i²` in lattice units.
    pub fn lattice_norm_sq(&self) -> i64 {
        self.components().iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    /// Physical `|p|² = (2π)² Σ n_i²`.
    pub fn momentum_sq(&self) -> f64 {
        TWO_PI * TWO_PI * self.lattice_norm_sq() as f64
    }

    pub fn momentum_norm(&self) -> f64 {
        self.momentum_sq().sqrt()
    }
}

impl std::ops::Neg for ModeVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            dim: self.dim,
            comps: [-self.comps[0], -self.comps[1], -self.comps[2]],
        }
    }
}

impl std::ops::Add for ModeVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        debug_assert_eq!(self.dim, o.dim);
        Self {
            dim: self.dim,
            comps: [
                self.comps[0] + o.comps[0],
                self.comps[1] + o.comps[1],
                self.comps[2] + o.comps[2],
            ],
        }
    }
}

impl std::ops::Sub for ModeVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl std::ops::Mul<ModeVector> for i32 {
    type Output = ModeVector;
    fn mul(self, m: ModeVector) -> ModeVector {
        ModeVector {
            dim: m.dim,
            comps: [self * m.comps[0], self * m.comps[1], self * m.comps[2]],
        }
    }
}

impl fmt::Display for ModeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components().iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Infinity-norm ball of lattice vectors, in lexicographic order, optionally
/// without the origin. Closed under negation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeSet {
    dim: usize,
    radius: u32,
    include_zero: bool,
    modes: Vec<ModeVector>,
}

impl ModeSet {
    pub fn ball(dim: usize, radius: u32, include_zero: bool) -> Self {
        assert!((1..=3).contains(&dim));
        let r = radius as i32;
        let side = 2 * r + 1;
        let total = (side as usize).pow(dim as u32);
        let mut modes = Vec::with_capacity(total);
        for flat in 0..total {
            let mut comps = [0i32; 3];
            let mut rem = flat;
            for axis in (0..dim).rev() {
                comps[axis] = (rem % side as usize) as i32 - r;
                rem /= side as usize;
            }
            let m = ModeVector::new(&comps[..dim]);
            if include_zero || !m.is_zero() {
                modes.push(m);
            }
        }
        Self {
            dim,
            radius,
            include_zero,
            modes,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn includes_zero(&self) -> bool {
        self.include_zero
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeVector] {
        &self.modes
    }

    pub fn get(&self, i: usize) -> ModeVector {
        self.modes[i]
    }

    /// O(1) position lookup by mixed-radix arithmetic.
    pub fn index_of(&self, m: &ModeVector) -> Option<usize> {
        if m.dim() != self.dim || m.norm_inf() > self.radius {
            return None;
        }
        let r = self.radius as i64;
        let side = 2 * r + 1;
        let mut flat = 0i64;
        for &c in m.components() {
            flat = flat * side + (c as i64 + r);
        }
        let flat = flat as usize;
        if self.include_zero {
            return Some(flat);
        }
        let center = ((side as usize).pow(self.dim as u32) - 1) / 2;
        match flat.cmp(&center) {
            std::cmp::Ordering::Less => Some(flat),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(flat - 1),
        }
    }

    pub fn zero_index(&self) -> Option<usize> {
        self.index_of(&ModeVector::zero(self.dim))
    }

    /// Same ball with the origin removed.
    pub fn without_zero(&self) -> Self {
        Self::ball(self.dim, self.radius, false)
    }
}

/// Fourier coefficient tables of the boson-boson potential `v` and the
/// impurity-boson potential `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    dim: usize,
    v: BTreeMap<ModeVector, f64>,
    w: BTreeMap<ModeVector, f64>,
}

impl PotentialSpec {
    /// Builds the tables, filling in the mirror `-n` of every entry.
    ///
    /// Rejects negative `v` coefficients and entries whose mirror was given
    /// with a different value.
    pub fn new(
        dim: usize,
        v: impl IntoIterator<Item = (ModeVector, f64)>,
        w: impl IntoIterator<Item = (ModeVector, f64)>,
    ) -> Result<Self, ConfigError> {
        if !(1..=3).contains(&dim) {
            return Err(ConfigError::Invalid(format!("dimension {dim} not in 1..=3")));
        }
        let v = Self::mirrored("v", dim, v)?;
        let w = Self::mirrored("w", dim, w)?;
        if let Some((&n, &value)) = v.iter().find(|(_, &x)| x < 0.0) {
            return Err(ConfigError::PositiveTypeViolated { n, value });
        }
        Ok(Self { dim, v, w })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            v: BTreeMap::new(),
            w: BTreeMap::new(),
        }
    }

    fn mirrored(
        which: &'static str,
        dim: usize,
        entries: impl IntoIterator<Item = (ModeVector, f64)>,
    ) -> Result<BTreeMap<ModeVector, f64>, ConfigError> {
        let mut given: BTreeMap<ModeVector, f64> = BTreeMap::new();
        for (n, value) in entries {
            if n.dim() != dim {
                return Err(ConfigError::Invalid(format!(
                    "{which} entry {n} has dimension {}, expected {dim}",
                    n.dim()
                )));
            }
            if !value.is_finite() {
                return Err(ConfigError::Invalid(format!("{which} entry {n} is not finite")));
            }
            if let Some(&prev) = given.get(&n) {
                if prev != value {
                    return Err(ConfigError::Invalid(format!(
                        "{which} entry {n} given twice ({prev} and {value})"
                    )));
                }
            }
            given.insert(n, value);
        }
        let mut table = given.clone();
        for (&n, &value) in &given {
            match given.get(&-n) {
                Some(&mirror) if mirror != value => {
                    return Err(ConfigError::EvennessViolated {
                        which,
                        n,
                        value,
                        mirror,
                    })
                }
                _ => {
                    table.insert(-n, value);
                }
            }
        }
        table.retain(|_, x| *x != 0.0);
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn v(&self, n: &ModeVector) -> f64 {
        self.v.get(n).copied().unwrap_or(0.0)
    }

    pub fn w(&self, n: &ModeVector) -> f64 {
        self.w.get(n).copied().unwrap_or(0.0)
    }

    pub fn v0(&self) -> f64 {
        self.v(&ModeVector::zero(self.dim))
    }

    pub fn w0(&self) -> f64 {
        self.w(&ModeVector::zero(self.dim))
    }

    /// Nonzero entries of `v` in lexicographic order.
    pub fn v_support(&self) -> impl Iterator<Item = (ModeVector, f64)> + '_ {
        self.v.iter().map(|(&n, &x)| (n, x))
    }

    pub fn w_support(&self) -> impl Iterator<Item = (ModeVector, f64)> + '_ {
        self.w.iter().map(|(&n, &x)| (n, x))
    }

    /// `v(0) = Σ_p v_p`.
    pub fn v_at_origin(&self) -> f64 {
        self.v.values().sum()
    }

    /// `∫ w² = Σ_p w_p²` by Parseval.
    pub fn w_l2_sq(&self) -> f64 {
        self.w.values().map(|x| x * x).sum()
    }

    /// `Σ_p |w_p|`, an upper bound on `sup |w|`.
    pub fn w_sup_bound(&self) -> f64 {
        self.w.values().map(|x| x.abs()).sum()
    }

    pub fn v_radius(&self) -> u32 {
        self.v.keys().map(|n| n.norm_inf()).max().unwrap_or(0)
    }

    pub fn w_radius(&self) -> u32 {
        self.w.keys().map(|n| n.norm_inf()).max().unwrap_or(0)
    }

    /// Copy with `w` switched off.
    pub fn without_w(&self) -> Self {
        Self {
            dim: self.dim,
            v: self.v.clone(),
            w: BTreeMap::new(),
        }
    }

    pub fn without_v(&self) -> Self {
        Self {
            dim: self.dim,
            v: BTreeMap::new(),
            w: self.w.clone(),
        }
    }
}

/// Minimum over a `grid`-point-per-axis real-space grid of `Σ_p c_p cos(p·x)`.
pub fn real_space_minimum<'a>(
    dim: usize,
    coeffs: impl Iterator<Item = (ModeVector, f64)> + 'a,
    grid: usize,
) -> f64 {
    let coeffs: Vec<(ModeVector, f64)> = coeffs.collect();
    if coeffs.is_empty() {
        return 0.0;
    }
    let total = grid.pow(dim as u32);
    let mut min = f64::INFINITY;
    for flat in 0..total {
        let mut x = [0.0f64; 3];
        let mut rem = flat;
        for xi in x.iter_mut().take(dim) {
            *xi = (rem % grid) as f64 / grid as f64;
            rem /= grid;
        }
        let val: f64 = coeffs
            .iter()
            .map(|(n, c)| {
                let phase: f64 = n
                    .components()
                    .iter()
                    .zip(&x)
                    .map(|(&ni, &xi)| ni as f64 * xi)
                    .sum();
                c * (TWO_PI * phase).cos()
            })
            .sum();
        min = min.min(val);
    }
    min
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub k: usize,
    pub tol: f64,
    #[serde(default = "default_dense_threshold")]
    pub dense_threshold: usize,
    #[serde(default)]
    pub max_matvecs: Option<usize>,
}

fn default_dense_threshold() -> usize {
    2000
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            k: 4,
            tol: 1e-10,
            dense_threshold: default_dense_threshold(),
            max_matvecs: None,
        }
    }
}

pub const DEFAULT_BASIS_LIMIT: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub dim: usize,
    pub impurity_mass: f64,
    pub n_particles: usize,
    pub p_max_boson: u32,
    pub p_max_impurity: u32,
    pub excitation_cutoff: usize,
    pub total_momentum: ModeVector,
    pub solver: SolverSettings,
    pub basis_limit: usize,
}

impl ModelParams {
    pub fn boson_modes(&self) -> ModeSet {
        ModeSet::ball(self.dim, self.p_max_boson, true)
    }

    pub fn excitation_modes(&self) -> ModeSet {
        ModeSet::ball(self.dim, self.p_max_boson, false)
    }

    pub fn impurity_modes(&self) -> ModeSet {
        ModeSet::ball(self.dim, self.p_max_impurity, true)
    }

    pub fn with_particles(&self, n: usize) -> Self {
        Self {
            n_particles: n,
            ..self.clone()
        }
    }

    pub fn with_excitation_cutoff(&self, m: usize) -> Self {
        Self {
            excitation_cutoff: m,
            ..self.clone()
        }
    }

    pub fn validate(&self, spec: &PotentialSpec) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if !(1..=3).contains(&self.dim) {
            return invalid(format!("dimension {} not in 1..=3", self.dim));
        }
        if spec.dim() != self.dim {
            return invalid(format!(
                "potential dimension {} differs from model dimension {}",
                spec.dim(),
                self.dim
            ));
        }
        if !(self.impurity_mass > 0.0 && self.impurity_mass.is_finite()) {
            return invalid(format!("impurity mass {} must be positive", self.impurity_mass));
        }
        if self.n_particles < 2 {
            return invalid(format!("N = {} must be at least 2", self.n_particles));
        }
        if self.excitation_cutoff < 1 {
            return invalid("excitation cutoff must be at least 1".into());
        }
        if self.total_momentum.dim() != self.dim {
            return invalid(format!(
                "total momentum {} has the wrong dimension",
                self.total_momentum
            ));
        }
        if self.solver.k == 0 || !(self.solver.tol > 0.0) {
            return invalid("solver needs k >= 1 and tol > 0".into());
        }
        for (which, radius) in [("v", spec.v_radius()), ("w", spec.w_radius())] {
            if radius > self.p_max_boson {
                return Err(ConfigError::SupportExceedsCutoff {
                    which,
                    radius,
                    cutoff: self.p_max_boson,
                });
            }
        }
        if spec.w_radius() > self.p_max_impurity {
            return Err(ConfigError::SupportExceedsCutoff {
                which: "w",
                radius: spec.w_radius(),
                cutoff: self.p_max_impurity,
            });
        }
        Ok(())
    }
}

/// A validated configuration: model parameters, potentials and the list of
/// particle numbers to sweep.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub potential: PotentialSpec,
    pub n_values: Vec<usize>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

pub const DEFAULT_SEED: u64 = 0x5eed_1937;

impl ExperimentConfig {
    pub fn params_for(&self, n: usize) -> ModelParams {
        self.params.with_particles(n)
    }

    /// d=1, M=1, `v_0 = v_{±1} = 2π²`, `w_0 = w_{±1} = π²`, cutoffs 3/3,
    /// excitation cutoff 8, sector 0, N ∈ {4, 6, 8, 12, 16, 20, 24}.
    pub fn reference() -> Self {
        let v = 2.0 * PI * PI;
        let w = PI * PI;
        let potential = PotentialSpec::new(
            1,
            [(ModeVector::new(&[0]), v), (ModeVector::new(&[1]), v)],
            [(ModeVector::new(&[0]), w), (ModeVector::new(&[1]), w)],
        )
        .expect("reference potential is valid");
        let n_values = vec![4, 6, 8, 12, 16, 20, 24];
        let params = ModelParams {
            dim: 1,
            impurity_mass: 1.0,
            n_particles: n_values[0],
            p_max_boson: 3,
            p_max_impurity: 3,
            excitation_cutoff: 8,
            total_momentum: ModeVector::zero(1),
            solver: SolverSettings::default(),
            basis_limit: DEFAULT_BASIS_LIMIT,
        };
        Self {
            params,
            potential,
            n_values,
            seed: DEFAULT_SEED,
            warnings: Vec::new(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    n: Vec<i32>,
    value: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawN {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dimension: usize,
    impurity_mass: f64,
    #[serde(rename = "N")]
    n: RawN,
    p_max_boson: u32,
    p_max_impurity: u32,
    excitation_cutoff: usize,
    total_momentum: Vec<i32>,
    #[serde(default)]
    v: Vec<RawEntry>,
    #[serde(default)]
    w: Vec<RawEntry>,
    #[serde(default)]
    solver: SolverSettings,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    basis_limit: Option<usize>,
}

fn to_mode(dim: usize, which: &str, n: &[i32]) -> Result<ModeVector, ConfigError> {
    if n.len() != dim {
        return Err(ConfigError::Invalid(format!(
            "{which} mode {n:?} has {} components, expected {dim}",
            n.len()
        )));
    }
    Ok(ModeVector::new(n))
}

/// Parses and validates a JSON configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text)?;
    let dim = raw.dimension;
    if !(1..=3).contains(&dim) {
        return Err(ConfigError::Invalid(format!("dimension {dim} not in 1..=3")));
    }
    let v = raw
        .v
        .iter()
        .map(|e| Ok((to_mode(dim, "v", &e.n)?, e.value)))
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let w = raw
        .w
        .iter()
        .map(|e| Ok((to_mode(dim, "w", &e.n)?, e.value)))
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let potential = PotentialSpec::new(dim, v, w)?;

    let n_values = match raw.n {
        RawN::One(n) => vec![n],
        RawN::Many(ns) => ns,
    };
    if n_values.is_empty() {
        return Err(ConfigError::Invalid("N list is empty".into()));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::Invalid("N list must be strictly ascending".into()));
    }
    let params = ModelParams {
        dim,
        impurity_mass: raw.impurity_mass,
        n_particles: n_values[0],
        p_max_boson: raw.p_max_boson,
        p_max_impurity: raw.p_max_impurity,
        excitation_cutoff: raw.excitation_cutoff,
        total_momentum: to_mode(dim, "total_momentum", &raw.total_momentum)?,
        solver: raw.solver,
        basis_limit: raw.basis_limit.unwrap_or(DEFAULT_BASIS_LIMIT),
    };
    params.validate(&potential)?;

    let mut warnings = Vec::new();
    for (which, min) in [
        ("v", real_space_minimum(dim, potential.v_support(), 64)),
        ("w", real_space_minimum(dim, potential.w_support(), 64)),
    ] {
        if min < 0.0 {
            let msg = format!("{which} is negative in real space (grid minimum {min:.6})");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    Ok(ExperimentConfig {
        params,
        potential,
        n_values,
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        warnings,
    })
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_config(&text)?)
}

/// Hartree energy `(N/2) v_0 + √N w_0`.
pub fn hartree_energy(n: usize, spec: &PotentialSpec) -> f64 {
    let n = n as f64;
    0.5 * n * spec.v0() + n.sqrt() * spec.w0()
}

/// Bogoliubov dispersion `e_p = √(|p|⁴ + 2 v_p |p|²)`.
pub fn dispersion(p: &ModeVector, spec: &PotentialSpec) -> Result<f64> {
    if p.is_zero() {
        return Err(Error::InvalidArgument("dispersion is undefined at p = 0".into()));
    }
    let p2 = p.momentum_sq();
    Ok((p2 * p2 + 2.0 * spec.v(p) * p2).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BogoliubovCoefficients {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// `γ_p`, `α_p = (1 − γ_p²)^{-1/2}` and `β_p = γ_p α_p`, so that
/// `α_p² − β_p² = 1`.
pub fn bogoliubov_coefficients(p: &ModeVector, spec: &PotentialSpec) -> Result<BogoliubovCoefficients> {
    let e = dispersion(p, spec)?;
    let p2 = p.momentum_sq();
    // 1 + (p² − e)/v rewritten without the cancellation; equals 0 when v_p = 0.
    let gamma = (e - p2) / (e + p2);
    let alpha = 1.0 / (1.0 - gamma * gamma).sqrt();
    Ok(BogoliubovCoefficients {
        gamma,
        alpha,
        beta: gamma * alpha,
    })
}

/// Linear coupling `|p| w_p / √e_p` of the quasi-particle representation.
pub fn frohlich_coupling(p: &ModeVector, spec: &PotentialSpec) -> Result<f64> {
    let e = dispersion(p, spec)?;
    Ok(p.momentum_norm() * spec.w(p) / e.sqrt())
}

/// `E^B = −½ Σ_p (|p|² + v_p − e_p)` over `modes` (closed under negation,
/// without 0).
pub fn bogoliubov_ground_energy(spec: &PotentialSpec, modes: &[ModeVector]) -> f64 {
    debug_assert!(modes.iter().all(|m| !m.is_zero()));
    let sum: f64 = modes
        .iter()
        .map(|p| {
            let vp = spec.v(p);
            if vp == 0.0 {
                return 0.0;
            }
            let p2 = p.momentum_sq();
            let e = (p2 * p2 + 2.0 * vp * p2).sqrt();
            // p² + v − e = v²/(p² + v + e)
            vp * vp / (p2 + vp + e)
        })
        .sum();
    -0.5 * sum
}

/// `δE = (2π²)^{-1} ∫ w² + (v(0) − v_0)`.
pub fn delta_e(spec: &PotentialSpec) -> f64 {
    spec.w_l2_sq() / (2.0 * PI * PI) + (spec.v_at_origin() - spec.v0())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeBogoliubov {
    pub mode: ModeVector,
    pub dispersion: f64,
    pub coefficients: BogoliubovCoefficients,
    pub coupling: f64,
}

/// Per-mode Bogoliubov data over a nonzero mode set, plus the truncated
/// ground-energy constant.
#[derive(Clone, Debug)]
pub struct BogoliubovData {
    pub modes: Vec<ModeBogoliubov>,
    pub ground_energy: f64,
}

impl BogoliubovData {
    pub fn new(spec: &PotentialSpec, modes: &ModeSet) -> Result<Self> {
        let entries = modes
            .modes()
            .iter()
            .filter(|m| !m.is_zero())
            .map(|&mode| {
                Ok(ModeBogoliubov {
                    mode,
                    dispersion: dispersion(&mode, spec)?,
                    coefficients: bogoliubov_coefficients(&mode, spec)?,
                    coupling: frohlich_coupling(&mode, spec)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let nonzero: Vec<ModeVector> = entries.iter().map(|e| e.mode).collect();
        Ok(Self {
            ground_energy: bogoliubov_ground_energy(spec, &nonzero),
            modes: entries,
        })
    }
}
