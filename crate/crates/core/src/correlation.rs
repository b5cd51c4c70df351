//! Correlation matrices and the maximal CHSH violation.
//!
//! Three independent routes give the maximal violation of a correlation matrix
//! `R`: the closed trigonometric solution of the characteristic cubic of `RᵀR`
//! ([`classify`]), the two largest eigenvalues of `RᵀR`
//! ([`max_violation_eigen`]) and direct maximization over measurement
//! directions ([`chsh_optimize`]).

use std::f64::consts::{FRAC_PI_3, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::measures::MeasureSet;
use crate::qmat::{
    charpoly3, dot, identity2, kron, norm, normalize, paulis, symmetric_eigen3, ComplexMatrix,
    RealMatrix3, Vec3,
};
use crate::{Error, Result};

/// Quantum ceiling 2√2.
pub const TSIRELSON: f64 = 2.0 * SQRT_2;

const IMAG_FATAL: f64 = 1e-10;
const DEGENERATE_REL: f64 = 1e-12;
const ARCCOS_WINDOW: f64 = 1e-9;
const ARG_SNAP: f64 = 8.0 * f64::EPSILON;
const UNIT_TOL: f64 = 1e-12;

fn real_trace(rho: &ComplexMatrix, op: &ComplexMatrix) -> Result<f64> {
    let t = rho.trace_product(op)?;
    if t.im.abs() > IMAG_FATAL {
        return Err(Error::numeric(format!(
            "correlator has imaginary part {:e}",
            t.im
        )));
    }
    Ok(t.re)
}

fn check_two_qubit(rho: &ComplexMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    Ok(())
}

/// `R_jk = Tr(ρ σj⊗σk)`.
pub fn r_matrix(rho: &ComplexMatrix) -> Result<RealMatrix3> {
    check_two_qubit(rho)?;
    let s = paulis();
    let mut m = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            m[j][k] = real_trace(rho, &kron(&s[j], &s[k])?)?;
        }
    }
    Ok(RealMatrix3(m))
}

/// Bloch vectors `(Tr(ρ σj⊗I), Tr(ρ I⊗σk))` of the two marginals.
pub fn bloch_vectors(rho: &ComplexMatrix) -> Result<(Vec3, Vec3)> {
    check_two_qubit(rho)?;
    let s = paulis();
    let id = identity2();
    let mut a = [0.0; 3];
    let mut b = [0.0; 3];
    for j in 0..3 {
        a[j] = real_trace(rho, &kron(&s[j], &id)?)?;
        b[j] = real_trace(rho, &kron(&id, &s[j])?)?;
    }
    Ok((a, b))
}

/// `R − a bᵀ`, with `a`, `b` the marginal Bloch vectors.
pub fn connected_r_matrix(rho: &ComplexMatrix) -> Result<RealMatrix3> {
    let r = r_matrix(rho)?;
    let (a, b) = bloch_vectors(rho)?;
    Ok(r - RealMatrix3::outer(&a, &b))
}

/// Invariants of the cubic `λ³ + α1λ² + α2λ + α3` of `RᵀR` and the maximal
/// violation they determine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicClassification {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub theta: f64,
    pub discriminant: f64,
    pub gamma: f64,
}

/// `2√(−2α1/3 + 2√(−γ2) cos(θ − π/3))`.
pub fn gamma_from_invariants(alpha1: f64, gamma2: f64, theta: f64) -> f64 {
    let inner = -2.0 * alpha1 / 3.0 + 2.0 * (-gamma2).max(0.0).sqrt() * (theta - FRAC_PI_3).cos();
    2.0 * inner.max(0.0).sqrt()
}

pub fn classify_coefficients(alpha: [f64; 3]) -> Result<CubicClassification> {
    let [a1, a2, a3] = alpha;
    let gamma1 = -a1.powi(3) / 27.0 - a3 / 2.0 + a1 * a2 / 6.0;
    let gamma2 = a2 / 3.0 - a1 * a1 / 9.0;
    classify_invariants(alpha, gamma1, gamma2)
}

/// Classification of `RᵀR` for a correlation matrix `r`.
///
/// `γ1` and `γ2` are taken from the traceless part `D` of `RᵀR`
/// (`γ1 = det D / 2`, `γ2 = −tr D² / 6`), which avoids the cancellation in the
/// coefficient expressions when the eigenvalues cluster.
pub fn classify(r: &RealMatrix3) -> Result<CubicClassification> {
    let g = r.gram();
    let alpha = charpoly3(&g);
    let d = g - RealMatrix3::diag([g.trace() / 3.0; 3]);
    let gamma1 = d.det() / 2.0;
    let gamma2 = -(d.transpose() * d).trace() / 6.0;
    classify_invariants(alpha, gamma1, gamma2)
}

fn classify_invariants(alpha: [f64; 3], gamma1: f64, gamma2: f64) -> Result<CubicClassification> {
    let [a1, a2, a3] = alpha;
    let discriminant = gamma1 * gamma1 + gamma2.powi(3);
    let done = |theta: f64, gamma: f64| CubicClassification {
        alpha1: a1,
        alpha2: a2,
        alpha3: a3,
        gamma1,
        gamma2,
        theta,
        discriminant,
        gamma,
    };

    // Equal roots: −γ2 is the spread of the eigenvalues, so compare it with
    // their scale.
    if gamma2.abs() <= DEGENERATE_REL * a1 * a1 / 9.0 {
        return Ok(done(0.0, 2.0 * (-2.0 * a1 / 3.0).max(0.0).sqrt()));
    }
    if gamma2 > 0.0 {
        return Err(Error::numeric(format!(
            "γ2 = {gamma2:e} > 0: complex eigenvalues"
        )));
    }

    let mut arg = gamma1 / (-gamma2).powf(1.5);
    if arg.abs() > 1.0 + ARCCOS_WINDOW {
        return Err(Error::numeric(format!(
            "arccos argument {arg} outside [-1, 1]: complex eigenvalues (Δ = {discriminant:e})"
        )));
    }
    // A double root leaves the argument a few ulps from ±1, and arccos turns
    // that into a √ε error in θ.
    if arg.abs() >= 1.0 - ARG_SNAP {
        arg = arg.signum();
    }
    let theta = arg.acos() / 3.0;
    Ok(done(theta, gamma_from_invariants(a1, gamma2, theta)))
}

/// Cubic coefficients of the quantum correlation matrix in terms of the
/// measures: `α1 = E2² + E3² − 2E1² − 1`,
/// `α2 = (E2² − E1²)(E3² − E1²) − 8(E5 − E1²/4)`, `α3 = −16(E5 − E1²/4)²`,
/// with E1 the concurrence of `ms.pair`.
pub fn alpha_quantum(ms: &MeasureSet) -> [f64; 3] {
    let [e1, e2, e3, _e4, e5] = ms.adapted();
    let (s1, s2, s3) = (e1 * e1, e2 * e2, e3 * e3);
    let shifted = e5 - s1 / 4.0;
    [
        s2 + s3 - 2.0 * s1 - 1.0,
        (s2 - s1) * (s3 - s1) - 8.0 * shifted,
        -16.0 * shifted * shifted,
    ]
}

/// Cubic coefficients of the connected correlation matrix of `ms.pair`.
pub fn alpha_connected(ms: &MeasureSet) -> [f64; 3] {
    let [e1, e2, e3, e4, e5] = ms.adapted();
    let (s1, s2, s3, s4) = (e1 * e1, e2 * e2, e3 * e3, e4 * e4);
    let c = 4.0 * e5 - s1;
    [
        -(s1 + s2 + s4) * (s1 + s3 + s4) + 2.0 * c,
        s1 * (s1 + s4) * (2.0 * s1 + s2 + s3 + 2.0 * s4) + c * c,
        -(s1 * s1) * (s1 + s4) * (s1 + s4),
    ]
}

/// `2√(u1 + u2)` from the two largest eigenvalues of `RᵀR`.
pub fn max_violation_eigen(r: &RealMatrix3) -> Result<f64> {
    let eig = symmetric_eigen3(&r.gram())?;
    Ok(2.0 * (eig.values[0] + eig.values[1]).max(0.0).sqrt())
}

/// Directions `a, a′` on the first qubit and `b, b′` on the second.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementSetting {
    pub a: Vec3,
    pub a2: Vec3,
    pub b: Vec3,
    pub b2: Vec3,
}

impl MeasurementSetting {
    pub fn new(a: Vec3, a2: Vec3, b: Vec3, b2: Vec3) -> Result<Self> {
        for (name, v) in [("a", a), ("a'", a2), ("b", b), ("b'", b2)] {
            let n = norm(&v);
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(Error::domain(format!(
                    "measurement direction {name} has norm {n}"
                )));
            }
        }
        Ok(Self { a, a2, b, b2 })
    }
}

/// `a·R(b + b′) + a′·R(b − b′)`.
pub fn bell_value(r: &RealMatrix3, m: &MeasurementSetting) -> f64 {
    let plus = [m.b[0] + m.b2[0], m.b[1] + m.b2[1], m.b[2] + m.b2[2]];
    let minus = [m.b[0] - m.b2[0], m.b[1] - m.b2[1], m.b[2] - m.b2[2]];
    dot(&m.a, &r.mul_vec(&plus)) + dot(&m.a2, &r.mul_vec(&minus))
}

const OPT_TOL: f64 = 1e-12;
const OPT_MAX_ITER: usize = 500;

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v: Vec3 = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Some(u) = normalize(&v) {
            return u;
        }
    }
}

fn sum(x: &Vec3, y: &Vec3, sign: f64) -> Vec3 {
    [x[0] + sign * y[0], x[1] + sign * y[1], x[2] + sign * y[2]]
}

/// Alternating maximization of [`bell_value`].
///
/// With `b, b′` fixed the optimum is `a ∝ R(b + b′)`, `a′ ∝ R(b − b′)`; with
/// `a, a′` fixed it is `b ∝ Rᵀ(a + a′)`, `b′ ∝ Rᵀ(a − a′)`. Each half-step
/// cannot decrease the value. The best of `restarts` random starts is kept.
pub fn chsh_optimize(r: &RealMatrix3, restarts: usize, seed: u64) -> (f64, MeasurementSetting) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, [Vec3; 4])> = None;
    let keep = |v: Option<Vec3>, old: Vec3| v.unwrap_or(old);

    for _ in 0..restarts.max(1) {
        let mut b = random_unit(&mut rng);
        let mut b2 = random_unit(&mut rng);
        let mut a = random_unit(&mut rng);
        let mut a2 = random_unit(&mut rng);
        let value = |a: &Vec3, a2: &Vec3, b: &Vec3, b2: &Vec3| {
            dot(a, &r.mul_vec(&sum(b, b2, 1.0))) + dot(a2, &r.mul_vec(&sum(b, b2, -1.0)))
        };
        let mut current = value(&a, &a2, &b, &b2);
        for _ in 0..OPT_MAX_ITER {
            a = keep(normalize(&r.mul_vec(&sum(&b, &b2, 1.0))), a);
            a2 = keep(normalize(&r.mul_vec(&sum(&b, &b2, -1.0))), a2);
            b = keep(normalize(&r.tr_mul_vec(&sum(&a, &a2, 1.0))), b);
            b2 = keep(normalize(&r.tr_mul_vec(&sum(&a, &a2, -1.0))), b2);
            let next = value(&a, &a2, &b, &b2);
            let done = (next - current).abs() < OPT_TOL;
            current = current.max(next);
            if done {
                break;
            }
        }
        if best.as_ref().is_none_or(|(v, _)| current > *v) {
            best = Some((current, [a, a2, b, b2]));
        }
    }
    let (v, [a, a2, b, b2]) = best.expect("at least one restart");
    (v, MeasurementSetting { a, a2, b, b2 })
}
