//! Three-qubit pure states in canonical five-amplitude form and their reductions.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::qmat::{partial_trace, ComplexMatrix, C64};
use crate::{Error, Result};

pub const NORM_TOL: f64 = 1e-12;

/// `λ0|000⟩ + λ1 e^{iφ}|100⟩ + λ2|101⟩ + λ3|110⟩ + λ4|111⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalParams {
    lambda: [f64; 5],
    phi: f64,
}

impl CanonicalParams {
    pub fn new(lambda: [f64; 5], phi: f64) -> Result<Self> {
        if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::domain(format!(
                "amplitudes must be finite and non-negative, got {lambda:?}"
            )));
        }
        let n2: f64 = lambda.iter().map(|l| l * l).sum();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!(
                "squared amplitudes sum to {n2}, expected 1"
            )));
        }
        if !(0.0..=std::f64::consts::PI).contains(&phi) {
            return Err(Error::domain(format!("phase {phi} outside [0, π]")));
        }
        Ok(Self { lambda, phi })
    }

    /// Rescales non-negative amplitudes onto the unit sphere before validating.
    pub fn normalized(lambda: [f64; 5], phi: f64) -> Result<Self> {
        let n = lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::domain("amplitudes have zero norm"));
        }
        Self::new(lambda.map(|l| l / n), phi)
    }

    pub fn lambda(&self) -> [f64; 5] {
        self.lambda
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector([C64; 8]);

impl StateVector {
    pub fn amplitudes(&self) -> &[C64; 8] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Which two of the three qubits are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairSelector {
    P12,
    P13,
    P23,
}

impl PairSelector {
    pub const ALL: [PairSelector; 3] = [PairSelector::P12, PairSelector::P13, PairSelector::P23];

    /// Kept qubits, 1-based, in increasing order.
    pub fn qubits(self) -> (usize, usize) {
        match self {
            PairSelector::P12 => (1, 2),
            PairSelector::P13 => (1, 3),
            PairSelector::P23 => (2, 3),
        }
    }

    /// The qubit traced out.
    pub fn complement(self) -> usize {
        match self {
            PairSelector::P12 => 3,
            PairSelector::P13 => 2,
            PairSelector::P23 => 1,
        }
    }
}

impl fmt::Display for PairSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.qubits();
        write!(f, "{a}{b}")
    }
}

impl FromStr for PairSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "12" | "21" => Ok(PairSelector::P12),
            "13" | "31" => Ok(PairSelector::P13),
            "23" | "32" => Ok(PairSelector::P23),
            other => Err(Error::domain(format!(
                "unknown qubit pair '{other}', expected 12, 13 or 23"
            ))),
        }
    }
}

pub fn canonical_state(p: &CanonicalParams) -> StateVector {
    let l = p.lambda;
    let zero = C64::new(0.0, 0.0);
    let mut a = [zero; 8];
    a[0b000] = C64::new(l[0], 0.0);
    a[0b100] = Complex64::from_polar(l[1], p.phi);
    a[0b101] = C64::new(l[2], 0.0);
    a[0b110] = C64::new(l[3], 0.0);
    a[0b111] = C64::new(l[4], 0.0);
    StateVector(a)
}

pub fn from_amplitudes(a: [C64; 8]) -> Result<StateVector> {
    let n = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::domain("state vector has zero or non-finite norm"));
    }
    Ok(StateVector(a.map(|z| z / n)))
}

pub fn density(s: &StateVector) -> ComplexMatrix {
    ComplexMatrix::outer(&s.0).expect("dimension 8 is supported")
}

/// Two-qubit reduced density matrix.
pub fn reduce_pair(rho3: &ComplexMatrix, sel: PairSelector) -> Result<ComplexMatrix> {
    partial_trace(rho3, &[sel.complement()])
}

/// Single-qubit reduced density matrix of `qubit` (1-based).
pub fn reduce_single(rho3: &ComplexMatrix, qubit: usize) -> Result<ComplexMatrix> {
    let drop: Vec<usize> = (1..=3).filter(|&q| q != qubit).collect();
    if drop.len() != 2 {
        return Err(Error::domain(format!("qubit {qubit} out of range 1..=3")));
    }
    partial_trace(rho3, &drop)
}

/// Every reduction of one pure state, computed once.
#[derive(Clone, Debug)]
pub struct Reductions {
    pub rho: ComplexMatrix,
    pub pairs: [ComplexMatrix; 3],
    pub singles: [ComplexMatrix; 3],
}

impl Reductions {
    pub fn of(s: &StateVector) -> Self {
        let rho = density(s);
        let pairs = PairSelector::ALL.map(|p| reduce_pair(&rho, p).expect("valid pair"));
        let singles = [1, 2, 3].map(|q| reduce_single(&rho, q).expect("valid qubit"));
        Self {
            rho,
            pairs,
            singles,
        }
    }

    pub fn pair(&self, sel: PairSelector) -> &ComplexMatrix {
        &self.pairs[sel as usize]
    }

    /// Reduced matrix of a 1-based qubit.
    pub fn single(&self, qubit: usize) -> &ComplexMatrix {
        &self.singles[qubit - 1]
    }
}

fn draw_canonical(rng: &mut ChaCha8Rng) -> CanonicalParams {
    loop {
        let raw: [f64; 5] = std::array::from_fn(|_| {
            let x: f64 = rng.sample(StandardNormal);
            x.abs()
        });
        let phi = rng.random_range(0.0..=std::f64::consts::PI);
        if let Ok(p) = CanonicalParams::normalized(raw, phi) {
            return p;
        }
    }
}

/// Seeded sampler over canonical parameters: the absolute values of five
/// standard normals projected onto the unit sphere, and a uniform phase.
#[derive(Clone, Debug)]
pub struct CanonicalSampler {
    rng: ChaCha8Rng,
}

impl CanonicalSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_params(&mut self) -> CanonicalParams {
        draw_canonical(&mut self.rng)
    }
}

pub fn sample_canonical(seed: u64) -> CanonicalParams {
    CanonicalSampler::new(seed).next_params()
}

/// Forces `p` onto the separable set of the selected pair.
///
/// The pair concurrences are `2λ0λ3` (12), `2λ0λ2` (13) and
/// `2|λ1λ4 e^{iφ} − λ2λ3|` (23); the first two vanish with `λ3 = 0` or
/// `λ2 = 0`, the last with `φ = 0` and `λ1λ4 = λ2λ3`.
pub fn make_separable(p: &CanonicalParams, sel: PairSelector) -> CanonicalParams {
    let mut l = p.lambda;
    let mut phi = p.phi;
    match sel {
        PairSelector::P12 => l[3] = 0.0,
        PairSelector::P13 => l[2] = 0.0,
        PairSelector::P23 => {
            phi = 0.0;
            if l[1] > 0.0 {
                l[4] = l[2] * l[3] / l[1];
            } else {
                l[2] = 0.0;
            }
        }
    }
    CanonicalParams::normalized(l, phi).unwrap_or(CanonicalParams {
        lambda: [1.0, 0.0, 0.0, 0.0, 0.0],
        phi: 0.0,
    })
}

/// Draw used by scans: the same parameters as [`sample_canonical`] for `seed`,
/// replaced by their separable projection for a `separable_fraction` of seeds.
pub fn sample_scan_params(
    seed: u64,
    sel: PairSelector,
    separable_fraction: f64,
) -> CanonicalParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = draw_canonical(&mut rng);
    if separable_fraction > 0.0 && rng.random::<f64>() < separable_fraction {
        make_separable(&p, sel)
    } else {
        p
    }
}
