//! The five entanglement measures E1..E5, pure-state bipartite concurrences,
//! the Wootters concurrence and the (logarithmic) negativity.
//!
//! `MeasureSet` always stores E1..E5 in the labelling of the 12 pair:
//! E1, E2, E3 are the concurrences of ρ12, ρ13, ρ23 and E4 is the square root
//! of the three-tangle. `pair` records which reduced matrix the set describes;
//! formulas written for ρ12 are applied to ρ13 (ρ23) by exchanging E1 with E2
//! (E3), see [`MeasureSet::adapted`].

use num_complex::Complex64;

use crate::qmat::{
    hermitian_eigen, hermitian_eigenvalues, kron, partial_transpose, pauli_y, ComplexMatrix, C64,
};
use crate::states::{CanonicalParams, PairSelector, Reductions};
use crate::{Error, Result};

/// Square-root arguments this far below zero are rounding and clamp to 0.
pub const SQRT_CLAMP: f64 = 1e-10;

/// Eigenvalues of a density matrix below this are treated as exact zeros
/// when taking its square root.
const PSD_ZERO: f64 = 1e-14;

/// The trace expression for E5 exceeds the amplitude form by exactly this
/// constant (e.g. `|000⟩` gives 1/3 from the traces and 0 from the amplitudes).
pub const E5_TRACE_OFFSET: f64 = 1.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureSet {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
    pub pair: PairSelector,
}

impl MeasureSet {
    pub fn values(&self) -> [f64; 5] {
        [self.e1, self.e2, self.e3, self.e4, self.e5]
    }

    /// Concurrence of the selected pair (E1, E2 or E3).
    pub fn pair_concurrence(&self) -> f64 {
        match self.pair {
            PairSelector::P12 => self.e1,
            PairSelector::P13 => self.e2,
            PairSelector::P23 => self.e3,
        }
    }

    /// `[E1, E2, E3, E4, E5]` with the pair's own concurrence moved to the
    /// first slot, ready for formulas written for ρ12.
    pub fn adapted(&self) -> [f64; 5] {
        let [e1, e2, e3, e4, e5] = self.values();
        match self.pair {
            PairSelector::P12 => [e1, e2, e3, e4, e5],
            PairSelector::P13 => [e2, e1, e3, e4, e5],
            PairSelector::P23 => [e3, e2, e1, e4, e5],
        }
    }

    pub fn with_pair(mut self, pair: PairSelector) -> Self {
        self.pair = pair;
        self
    }
}

/// Closed forms in the canonical amplitudes.
pub fn measures_from_params(p: &CanonicalParams, sel: PairSelector) -> MeasureSet {
    let [l0, l1, l2, l3, l4] = p.lambda();
    let mixed = Complex64::from_polar(l1 * l4, p.phi()) - l2 * l3;
    let m = mixed.norm();
    MeasureSet {
        e1: 2.0 * l0 * l3,
        e2: 2.0 * l0 * l2,
        e3: 2.0 * m,
        e4: 2.0 * l0 * l4,
        e5: l0 * l0 * (l2 * l2 * l3 * l3 - l1 * l1 * l4 * l4 + m * m),
        pair: sel,
    }
}

/// Same quantities from the reduced density matrices alone, so states outside
/// the canonical form (W, arbitrary amplitudes) can be analysed.
///
/// E1..E3 are Wootters concurrences, E4 follows from the pure-state
/// concurrences and E5 from the trace expression shifted by
/// [`E5_TRACE_OFFSET`].
pub fn measures_from_state(red: &Reductions, sel: PairSelector) -> Result<MeasureSet> {
    let e1 = wootters_concurrence(red.pair(PairSelector::P12))?;
    let e2 = wootters_concurrence(red.pair(PairSelector::P13))?;
    let e3 = wootters_concurrence(red.pair(PairSelector::P23))?;
    let cs = concurrences(red);
    let e4 = clamped_sqrt(cs.c1 * cs.c1 + cs.c2 * cs.c2 - cs.c12 * cs.c12 - 2.0 * e1 * e1)?;
    let partial = MeasureSet {
        e1,
        e2,
        e3,
        e4,
        e5: 0.0,
        pair: sel,
    };
    let e5 = e5_matrix(
        red.pair(PairSelector::P12),
        red.single(1),
        red.single(2),
        &partial,
    )? - E5_TRACE_OFFSET;
    Ok(MeasureSet { e5, ..partial })
}

/// Pure-parent concurrences `√(2(1 − Tr ρ_A²))` for every subsystem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcurrenceSet {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c12: f64,
    pub c13: f64,
    pub c23: f64,
}

pub fn concurrences(red: &Reductions) -> ConcurrenceSet {
    ConcurrenceSet {
        c1: bipartite_concurrence(red.single(1)),
        c2: bipartite_concurrence(red.single(2)),
        c3: bipartite_concurrence(red.single(3)),
        c12: bipartite_concurrence(red.pair(PairSelector::P12)),
        c13: bipartite_concurrence(red.pair(PairSelector::P13)),
        c23: bipartite_concurrence(red.pair(PairSelector::P23)),
    }
}

/// `√(max(0, 2(1 − Tr ρ²)))`.
pub fn bipartite_concurrence(rho: &ComplexMatrix) -> f64 {
    let purity = rho.trace_product(rho).expect("square matrix").re;
    (2.0 * (1.0 - purity)).max(0.0).sqrt()
}

/// `√x`, clamping rounding-level negatives.
pub fn clamped_sqrt(x: f64) -> Result<f64> {
    if x >= 0.0 {
        Ok(x.sqrt())
    } else if x >= -SQRT_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::numeric(format!("square root of {x:e}")))
    }
}

/// E2, E3 and E4 rebuilt from E1 and the pure-state concurrences of ρ12's
/// parent: `E2 = √(C12² + E1² − C2²)`, `E3 = √(C12² + E1² − C1²)`,
/// `E4 = √(C1² + C2² − C12² − 2E1²)`.
pub fn measures_from_concurrences(cs: &ConcurrenceSet, e1: f64) -> Result<[f64; 3]> {
    let (c1, c2, c12) = (cs.c1 * cs.c1, cs.c2 * cs.c2, cs.c12 * cs.c12);
    let e1s = e1 * e1;
    Ok([
        clamped_sqrt(c12 + e1s - c2)?,
        clamped_sqrt(c12 + e1s - c1)?,
        clamped_sqrt(c1 + c2 - c12 - 2.0 * e1s)?,
    ])
}

/// `Tr((ρa⊗ρb)ρab) − Tr(ρa³)/3 − Tr(ρb³)/3 + (E1²+E2²+E3²+E4²)/4`.
pub fn e5_matrix(
    rho_pair: &ComplexMatrix,
    rho_a: &ComplexMatrix,
    rho_b: &ComplexMatrix,
    ms: &MeasureSet,
) -> Result<f64> {
    let prod = kron(rho_a, rho_b)?;
    let overlap = prod.trace_product(rho_pair)?.re;
    let cube = |r: &ComplexMatrix| -> Result<f64> { Ok((r * r).trace_product(r)?.re) };
    let sq = ms.e1 * ms.e1 + ms.e2 * ms.e2 + ms.e3 * ms.e3 + ms.e4 * ms.e4;
    Ok(overlap - cube(rho_a)? / 3.0 - cube(rho_b)? / 3.0 + sq / 4.0)
}

fn psd_sqrt(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(rho)?;
    if let Some(&low) = eig.values.first() {
        if low < -1e-8 {
            return Err(Error::domain(format!(
                "density matrix has eigenvalue {low:e}"
            )));
        }
    }
    let n = rho.dim();
    let roots: Vec<f64> = eig
        .values
        .iter()
        .map(|&x| if x > PSD_ZERO { x.sqrt() } else { 0.0 })
        .collect();
    let mut out = ComplexMatrix::zeros(n)?;
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (k, r) in roots.iter().enumerate() {
                acc += eig.vectors[(i, k)] * eig.vectors[(j, k)].conj() * *r;
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Two-qubit concurrence `max(0, μ1 − μ2 − μ3 − μ4)`, with μ the descending
/// square roots of the eigenvalues of `ρ (σy⊗σy) ρ* (σy⊗σy)`.
///
/// The μ are obtained as singular values of `√ρ (σy⊗σy) √ρ*`, read off the
/// Hermitian dilation `[[0, A], [A†, 0]]`; this keeps zero μ at rounding level
/// instead of the square root of rounding level.
pub fn wootters_concurrence(rho: &ComplexMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    let yy = kron(&pauli_y(), &pauli_y())?;
    let root = psd_sqrt(rho)?;
    let a = &(&root * &yy) * &root.conj();
    let mut dilation = ComplexMatrix::zeros(8)?;
    for i in 0..4 {
        for j in 0..4 {
            dilation[(i, j + 4)] = a[(i, j)];
            dilation[(j + 4, i)] = a[(i, j)].conj();
        }
    }
    let ev = hermitian_eigenvalues(&dilation)?;
    let mu = [ev[7], ev[6], ev[5], ev[4]];
    Ok((mu[0] - mu[1] - mu[2] - mu[3]).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NegativityResult {
    pub negativity: f64,
    pub log_negativity: f64,
}

/// `N = Σ (|λ| − λ)/2` over the spectrum of the partial transpose and
/// `E_N = ln(2N + 1)`.
pub fn negativity(rho: &ComplexMatrix) -> Result<NegativityResult> {
    let ev = hermitian_eigenvalues(&partial_transpose(rho)?)?;
    let n: f64 = ev.iter().map(|&x| (x.abs() - x) / 2.0).sum();
    Ok(NegativityResult {
        negativity: n,
        log_negativity: (2.0 * n).ln_1p(),
    })
}
