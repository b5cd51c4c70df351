//! Local hidden-variable model for a diagonalized correlation matrix.
//!
//! With `R = U diag(q) Vᵀ`, a uniform hidden variable `λ ∈ [0, 1]` and
//! exponents `k_j = (1 − q_j) / (2 q_j)`, the vector observable
//! `F_j(v, λ) = λ^{k_j} ṽ_j` satisfies `∫₀¹ F(ã, λ)·F(b̃, λ) dλ = Σ q_j ã_j b̃_j`,
//! which is `aᵀ R b`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::qmat::{norm, svd3, RealMatrix3, Vec3};
use crate::{Error, Result};

/// Singular values below this are dropped from the model.
pub const ACTIVE_TOL: f64 = 1e-12;
/// Largest singular value accepted as physical.
pub const Q_MAX: f64 = 1.0 + 1e-9;
/// Table entries below `-SIGNED_TOL` mark a signed table.
pub const SIGNED_TOL: f64 = 1e-12;

const UNIT_TOL: f64 = 1e-9;
const K_PROB_MIN: f64 = 1e-14;
const MC_CHUNK: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LhvModel {
    /// Singular values, descending.
    pub q: Vec3,
    /// `(1 − q) / (2q)` for active components, infinite otherwise.
    pub k: Vec3,
    pub basis_a: RealMatrix3,
    pub basis_b: RealMatrix3,
    pub active: [bool; 3],
}

/// Hidden variable, uniform on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HiddenSample(f64);

impl HiddenSample {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::domain(format!(
                "hidden variable {lambda} outside [0, 1]"
            )));
        }
        Ok(Self(lambda))
    }

    pub fn lambda(self) -> f64 {
        self.0
    }
}

/// Joint outcome table ordered `(++, +−, −+, −−)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub p: [f64; 4],
    pub signed: bool,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// `Σ S_a S_b p(S_a, S_b)`.
    pub fn expectation(&self) -> f64 {
        self.p[0] - self.p[1] - self.p[2] + self.p[3]
    }
}

pub fn build_model(r: &RealMatrix3) -> Result<LhvModel> {
    let svd = svd3(r)?;
    if svd.q[0] > Q_MAX {
        return Err(Error::domain(format!(
            "singular value {} exceeds 1: not a correlation matrix",
            svd.q[0]
        )));
    }
    let active = svd.q.map(|q| q >= ACTIVE_TOL);
    let mut k = [f64::INFINITY; 3];
    for j in 0..3 {
        if active[j] {
            k[j] = (1.0 - svd.q[j]) / (2.0 * svd.q[j]);
        }
    }
    Ok(LhvModel {
        q: svd.q,
        k,
        basis_a: svd.u,
        basis_b: svd.v,
        active,
    })
}

impl LhvModel {
    /// `Uᵀa`.
    pub fn to_model_basis_a(&self, a: &Vec3) -> Vec3 {
        self.basis_a.tr_mul_vec(a)
    }

    /// `Vᵀb`.
    pub fn to_model_basis_b(&self, b: &Vec3) -> Vec3 {
        self.basis_b.tr_mul_vec(b)
    }

    /// `λ^{k_j}` for active components, 0 otherwise.
    pub fn weights(&self, s: HiddenSample) -> Vec3 {
        std::array::from_fn(|j| {
            if !self.active[j] {
                0.0
            } else if self.k[j] == 0.0 {
                1.0
            } else {
                s.0.powf(self.k[j])
            }
        })
    }
}

/// `F(ṽ, λ)` for a vector already in the model basis.
pub fn f_observable(m: &LhvModel, v: &Vec3, s: HiddenSample) -> Vec3 {
    let w = m.weights(s);
    std::array::from_fn(|j| w[j] * v[j])
}

fn check_unit(v: &Vec3) -> Result<()> {
    let n = norm(v);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::domain(format!("measurement direction has norm {n}")));
    }
    Ok(())
}

/// `Σ q_j ã_j b̃_j` for lab-frame directions.
pub fn correlator_closed(m: &LhvModel, a: &Vec3, b: &Vec3) -> f64 {
    let (ta, tb) = (m.to_model_basis_a(a), m.to_model_basis_b(b));
    (0..3)
        .filter(|&j| m.active[j])
        .map(|j| m.q[j] * ta[j] * tb[j])
        .sum()
}

/// `P_j(±1 | v, λ) = (√3 ± 3 λ^{k_j} ṽ_j) / 6`, indexed `[+, −]`.
pub fn component_marginals(m: &LhvModel, v: &Vec3, s: HiddenSample) -> [[f64; 2]; 3] {
    let f = f_observable(m, v, s);
    let r3 = 3f64.sqrt();
    f.map(|x| [(r3 + 3.0 * x) / 6.0, (r3 - 3.0 * x) / 6.0])
}

/// `P(S_a, S_b | a, b, λ) = Σ_k P_k(S_a) P_k(S_b)` for model-basis vectors.
pub fn joint_distribution(
    m: &LhvModel,
    a: &Vec3,
    b: &Vec3,
    s: HiddenSample,
) -> OutcomeDistribution {
    let pa = component_marginals(m, a, s);
    let pb = component_marginals(m, b, s);
    let mut p = [0.0; 4];
    for k in 0..3 {
        for (ia, x) in pa[k].iter().enumerate() {
            for (ib, y) in pb[k].iter().enumerate() {
                p[2 * ia + ib] += x * y;
            }
        }
    }
    OutcomeDistribution {
        p,
        signed: p.iter().any(|&x| x < -SIGNED_TOL),
    }
}

/// `P(k | a, b, λ) = Σ_{S_a, S_b} P_k(S_a) P_k(S_b)` for model-basis vectors.
pub fn k_distribution(m: &LhvModel, a: &Vec3, b: &Vec3, s: HiddenSample) -> Vec3 {
    let pa = component_marginals(m, a, s);
    let pb = component_marginals(m, b, s);
    std::array::from_fn(|k| (pa[k][0] + pa[k][1]) * (pb[k][0] + pb[k][1]))
}

/// Largest change in `P(k | a, b, λ)` between two setting pairs.
pub fn freedom_of_choice_witness(
    m: &LhvModel,
    settings1: (&Vec3, &Vec3),
    settings2: (&Vec3, &Vec3),
    s: HiddenSample,
) -> f64 {
    let p1 = k_distribution(m, settings1.0, settings1.1, s);
    let p2 = k_distribution(m, settings2.0, settings2.1, s);
    (0..3).map(|k| (p1[k] - p2[k]).abs()).fold(0.0, f64::max)
}

/// `P(S | v, λ, k) = P_k(S) / √P(k | a, b, λ)` for `a` and `b`, indexed `[+, −]`.
pub fn rescaled_conditionals(
    m: &LhvModel,
    a: &Vec3,
    b: &Vec3,
    s: HiddenSample,
    k: usize,
) -> Result<([f64; 2], [f64; 2])> {
    if k >= 3 {
        return Err(Error::domain(format!("component {k} out of range")));
    }
    let pk = k_distribution(m, a, b, s)[k];
    if pk <= K_PROB_MIN {
        return Err(Error::domain(format!(
            "P(k = {k}) = {pk:e} is too small to rescale"
        )));
    }
    let root = pk.sqrt();
    let pa = component_marginals(m, a, s)[k];
    let pb = component_marginals(m, b, s)[k];
    Ok((pa.map(|x| x / root), pb.map(|x| x / root)))
}

/// Monte Carlo estimate of `Σ S_a S_b P(S_a, S_b | a, b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Fraction of draws whose table had a negative entry; those draws add
    /// the table's exact expectation instead of a sampled outcome.
    pub signed_fraction: f64,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
    signed: usize,
}

impl Moments {
    fn merge(self, o: Self) -> Self {
        Self {
            n: self.n + o.n,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
            signed: self.signed + o.signed,
        }
    }
}

fn run_chunk(m: &LhvModel, a: &Vec3, b: &Vec3, n: usize, seed: u64, stream: u64) -> Moments {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut acc = Moments {
        n,
        ..Moments::default()
    };
    for _ in 0..n {
        let s = HiddenSample(rng.random::<f64>());
        let table = joint_distribution(m, a, b, s);
        let x = if table.signed {
            acc.signed += 1;
            table.expectation()
        } else {
            let u: f64 = rng.random::<f64>() * table.total();
            let mut cum = 0.0;
            let mut idx = 3;
            for (i, p) in table.p.iter().enumerate() {
                cum += p.max(0.0);
                if u < cum {
                    idx = i;
                    break;
                }
            }
            if idx == 0 || idx == 3 {
                1.0
            } else {
                -1.0
            }
        };
        acc.sum += x;
        acc.sum_sq += x * x;
    }
    acc
}

/// Correlator by sampling `λ` and outcomes, `n` draws split over fixed-size
/// chunks with one ChaCha stream each, so the result depends only on `seed`.
pub fn mc_correlator(m: &LhvModel, a: &Vec3, b: &Vec3, n: usize, seed: u64) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::domain("sample count must be positive"));
    }
    check_unit(a)?;
    check_unit(b)?;
    if !m.active.iter().any(|&x| x) {
        return Ok(McEstimate {
            estimate: 0.0,
            stderr: 0.0,
            signed_fraction: 0.0,
        });
    }
    let (ta, tb) = (m.to_model_basis_a(a), m.to_model_basis_b(b));
    let chunks = n.div_ceil(MC_CHUNK);
    let total = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = MC_CHUNK.min(n - c * MC_CHUNK);
            run_chunk(m, &ta, &tb, len, seed, c as u64)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge);

    let nf = total.n as f64;
    let mean = total.sum / nf;
    let var = if total.n > 1 {
        ((total.sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: mean,
        stderr: (var / nf).sqrt(),
        signed_fraction: total.signed as f64 / nf,
    })
}
