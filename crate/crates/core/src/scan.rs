//! Seeded parameter scans, their CSV form and binned summaries.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::correlation::{classify, connected_r_matrix, r_matrix, CubicClassification};
use crate::measures::{
    measures_from_params, negativity, wootters_concurrence, MeasureSet, NegativityResult,
};
use crate::states::{
    canonical_state, density, reduce_pair, sample_scan_params, CanonicalParams, PairSelector,
};
use crate::{Error, Result};

/// Pairs with Wootters concurrence at or below this are flagged separable.
pub const SEPARABLE_TOL: f64 = 1e-9;
/// Slack used when comparing `γ_c` values inside a bin.
pub const GAMMA_SLACK: f64 = 1e-6;
pub const DEFAULT_BIN_WIDTH: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRecord {
    pub seed: u64,
    pub params: CanonicalParams,
    pub pair: PairSelector,
    pub measures: MeasureSet,
    pub quantum: CubicClassification,
    pub connected: CubicClassification,
    pub neg: NegativityResult,
    /// Wootters concurrence of the pair's reduced state.
    pub concurrence: f64,
    pub separable: bool,
}

impl ScanRecord {
    pub fn evaluate(seed: u64, params: CanonicalParams, pair: PairSelector) -> Result<Self> {
        let rho = reduce_pair(&density(&canonical_state(&params)), pair)?;
        let concurrence = wootters_concurrence(&rho)?;
        Ok(Self {
            seed,
            params,
            pair,
            measures: measures_from_params(&params, pair),
            quantum: classify(&r_matrix(&rho)?)?,
            connected: classify(&connected_r_matrix(&rho)?)?,
            neg: negativity(&rho)?,
            concurrence,
            separable: concurrence <= SEPARABLE_TOL,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanConfig {
    pub samples: usize,
    pub seed: u64,
    pub pair: PairSelector,
    /// Share of draws projected onto the pair's separable set.
    pub separable_fraction: f64,
}

/// Row `i` uses seed `seed + i`; rows come back in index order.
pub fn run_scan(cfg: &ScanConfig) -> Result<Vec<ScanRecord>> {
    if cfg.samples == 0 {
        return Err(Error::domain("sample count must be positive"));
    }
    if !(0.0..=1.0).contains(&cfg.separable_fraction) {
        return Err(Error::domain(format!(
            "separable fraction {} outside [0, 1]",
            cfg.separable_fraction
        )));
    }
    (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let params = sample_scan_params(seed, cfg.pair, cfg.separable_fraction);
            ScanRecord::evaluate(seed, params, cfg.pair)
        })
        .collect()
}

fn ser_display<T: fmt::Display, S: Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn de_from_str<'de, T, D>(d: D) -> std::result::Result<T, D::Error>
where
    T: FromStr,
    T::Err: fmt::Display,
    D: Deserializer<'de>,
{
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

/// Flat CSV form of a [`ScanRecord`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub seed: u64,
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub phi: f64,
    #[serde(serialize_with = "ser_display", deserialize_with = "de_from_str")]
    pub pair: PairSelector,
    #[serde(rename = "E1")]
    pub e1: f64,
    #[serde(rename = "E2")]
    pub e2: f64,
    #[serde(rename = "E3")]
    pub e3: f64,
    #[serde(rename = "E4")]
    pub e4: f64,
    #[serde(rename = "E5")]
    pub e5: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub logneg: f64,
    pub q_alpha1: f64,
    pub q_alpha2: f64,
    pub q_alpha3: f64,
    pub q_gamma: f64,
    pub c_alpha1: f64,
    pub c_alpha2: f64,
    pub c_alpha3: f64,
    pub c_gamma1: f64,
    pub c_gamma2: f64,
    pub c_theta: f64,
    pub c_gamma: f64,
    pub separable: bool,
}

pub const SCAN_HEADER: [&str; 27] = [
    "seed",
    "l0",
    "l1",
    "l2",
    "l3",
    "l4",
    "phi",
    "pair",
    "E1",
    "E2",
    "E3",
    "E4",
    "E5",
    "N",
    "logneg",
    "q_alpha1",
    "q_alpha2",
    "q_alpha3",
    "q_gamma",
    "c_alpha1",
    "c_alpha2",
    "c_alpha3",
    "c_gamma1",
    "c_gamma2",
    "c_theta",
    "c_gamma",
    "separable",
];

impl From<&ScanRecord> for ScanRow {
    fn from(r: &ScanRecord) -> Self {
        let [l0, l1, l2, l3, l4] = r.params.lambda();
        let [e1, e2, e3, e4, e5] = r.measures.values();
        Self {
            seed: r.seed,
            l0,
            l1,
            l2,
            l3,
            l4,
            phi: r.params.phi(),
            pair: r.pair,
            e1,
            e2,
            e3,
            e4,
            e5,
            n: r.neg.negativity,
            logneg: r.neg.log_negativity,
            q_alpha1: r.quantum.alpha1,
            q_alpha2: r.quantum.alpha2,
            q_alpha3: r.quantum.alpha3,
            q_gamma: r.quantum.gamma,
            c_alpha1: r.connected.alpha1,
            c_alpha2: r.connected.alpha2,
            c_alpha3: r.connected.alpha3,
            c_gamma1: r.connected.gamma1,
            c_gamma2: r.connected.gamma2,
            c_theta: r.connected.theta,
            c_gamma: r.connected.gamma,
            separable: r.separable,
        }
    }
}

fn write_rows<W: Write, T: Serialize>(w: W, header: &[&str], rows: &[T]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_scan<W: Write>(w: W, rows: &[ScanRow]) -> Result<()> {
    write_rows(w, &SCAN_HEADER, rows)
}

pub fn write_scan_file(path: &Path, rows: &[ScanRow]) -> Result<()> {
    write_scan(std::fs::File::create(path)?, rows)
}

pub fn read_scan<R: Read>(r: R) -> Result<Vec<ScanRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != SCAN_HEADER {
        return Err(Error::domain(format!(
            "unexpected scan header: {}",
            header.join(",")
        )));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn read_scan_file(path: &Path) -> Result<Vec<ScanRow>> {
    read_scan(std::fs::File::open(path)?)
}

/// Which pair of invariants is held fixed when binning.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixMode {
    /// Bins in `(γ2, θ)`; separable members should sit at the bottom.
    Gamma2Theta,
    /// Bins in `(α1, θ)`; separable members should sit at the top.
    Alpha1Theta,
}

impl fmt::Display for FixMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixMode::Gamma2Theta => "g2theta",
            FixMode::Alpha1Theta => "a1theta",
        })
    }
}

impl FromStr for FixMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g2theta" => Ok(FixMode::Gamma2Theta),
            "a1theta" => Ok(FixMode::Alpha1Theta),
            _ => Err(Error::domain(format!(
                "unknown fix mode {s:?} (expected g2theta or a1theta)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinSpec {
    pub mode: FixMode,
    /// Width along `γ2` or `α1`, depending on the mode.
    pub fixed_width: f64,
    pub theta_width: f64,
}

impl BinSpec {
    pub fn new(mode: FixMode, fixed_width: f64, theta_width: f64) -> Result<Self> {
        for w in [fixed_width, theta_width] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::domain(format!("bin width {w} must be positive")));
            }
        }
        Ok(Self {
            mode,
            fixed_width,
            theta_width,
        })
    }

    fn fixed_value(&self, r: &ScanRow) -> f64 {
        match self.mode {
            FixMode::Gamma2Theta => r.c_gamma2,
            FixMode::Alpha1Theta => r.c_alpha1,
        }
    }

    pub fn key(&self, r: &ScanRow) -> (i64, i64) {
        (
            (self.fixed_value(r) / self.fixed_width).floor() as i64,
            (r.c_theta / self.theta_width).floor() as i64,
        )
    }

    pub fn center(&self, key: (i64, i64)) -> (f64, f64) {
        (
            (key.0 as f64 + 0.5) * self.fixed_width,
            (key.1 as f64 + 0.5) * self.theta_width,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassBin {
    pub key: (i64, i64),
    pub fixed_center: f64,
    pub theta_center: f64,
    /// Indices into the scanned rows.
    pub members: Vec<usize>,
}

/// Groups rows by bin, ordered by key.
pub fn bin_rows(rows: &[ScanRow], spec: &BinSpec) -> Vec<ClassBin> {
    let mut map: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        map.entry(spec.key(r)).or_default().push(i);
    }
    map.into_iter()
        .map(|(key, members)| {
            let (fixed_center, theta_center) = spec.center(key);
            ClassBin {
                key,
                fixed_center,
                theta_center,
                members,
            }
        })
        .collect()
}

/// Per-bin summary row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub fix: String,
    pub fixed_center: f64,
    pub theta_center: f64,
    pub fixed_width: f64,
    pub theta_width: f64,
    pub count: usize,
    pub separable_count: usize,
    pub gamma_c_min: f64,
    pub gamma_c_max: f64,
    pub sep_gamma_c_min: Option<f64>,
    pub sep_gamma_c_max: Option<f64>,
    pub nonsep_gamma_c_min: Option<f64>,
    pub nonsep_gamma_c_max: Option<f64>,
    /// Separable members at the bottom (`g2theta`) or top (`a1theta`) of the
    /// bin, within [`GAMMA_SLACK`]; empty without separable members.
    pub extremal_separable: Option<bool>,
    /// Pairs ordered one way by `−α1` and the other way by `γ_c`.
    pub discordant_pairs: u64,
    pub monotone: bool,
}

fn min_max(xs: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    xs.fold(None, |acc, x| match acc {
        None => Some((x, x)),
        Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
    })
}

fn discordant_pairs(points: &[(f64, f64)]) -> u64 {
    let mut n = 0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            let (lo, hi) = if p.0 < q.0 { (p, q) } else { (q, p) };
            if lo.0 < hi.0 && lo.1 > hi.1 + GAMMA_SLACK {
                n += 1;
            }
        }
    }
    n
}

pub fn summarize_bin(rows: &[ScanRow], bin: &ClassBin, spec: &BinSpec) -> BinSummary {
    let members: Vec<&ScanRow> = bin.members.iter().map(|&i| &rows[i]).collect();
    let all = min_max(members.iter().map(|r| r.c_gamma)).unwrap_or((f64::NAN, f64::NAN));
    let sep = min_max(members.iter().filter(|r| r.separable).map(|r| r.c_gamma));
    let non = min_max(members.iter().filter(|r| !r.separable).map(|r| r.c_gamma));
    let extremal_separable = sep.map(|(slo, shi)| match (spec.mode, non) {
        (_, None) => true,
        (FixMode::Gamma2Theta, Some((nlo, _))) => slo <= nlo + GAMMA_SLACK,
        (FixMode::Alpha1Theta, Some((_, nhi))) => shi >= nhi - GAMMA_SLACK,
    });
    let points: Vec<(f64, f64)> = members.iter().map(|r| (-r.c_alpha1, r.c_gamma)).collect();
    let discordant = discordant_pairs(&points);
    BinSummary {
        fix: spec.mode.to_string(),
        fixed_center: bin.fixed_center,
        theta_center: bin.theta_center,
        fixed_width: spec.fixed_width,
        theta_width: spec.theta_width,
        count: members.len(),
        separable_count: members.iter().filter(|r| r.separable).count(),
        gamma_c_min: all.0,
        gamma_c_max: all.1,
        sep_gamma_c_min: sep.map(|x| x.0),
        sep_gamma_c_max: sep.map(|x| x.1),
        nonsep_gamma_c_min: non.map(|x| x.0),
        nonsep_gamma_c_max: non.map(|x| x.1),
        extremal_separable,
        discordant_pairs: discordant,
        monotone: discordant == 0,
    }
}

pub fn classify_bins(rows: &[ScanRow], spec: &BinSpec) -> Vec<BinSummary> {
    let bins = bin_rows(rows, spec);
    bins.par_iter()
        .map(|b| summarize_bin(rows, b, spec))
        .collect()
}

pub const SUMMARY_HEADER: [&str; 16] = [
    "fix",
    "fixed_center",
    "theta_center",
    "fixed_width",
    "theta_width",
    "count",
    "separable_count",
    "gamma_c_min",
    "gamma_c_max",
    "sep_gamma_c_min",
    "sep_gamma_c_max",
    "nonsep_gamma_c_min",
    "nonsep_gamma_c_max",
    "extremal_separable",
    "discordant_pairs",
    "monotone",
];

pub fn write_summary<W: Write>(w: W, rows: &[BinSummary]) -> Result<()> {
    write_rows(w, &SUMMARY_HEADER, rows)
}

/// A pair in one bin with `E_N(s1) < E_N(s2)` but `γ_c(s1) > γ_c(s2) + slack`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingWitness {
    pub gamma2_center: f64,
    pub theta_center: f64,
    /// Witness pairs found in the bin.
    pub pairs: u64,
    pub seed1: u64,
    pub seed2: u64,
    pub logneg1: f64,
    pub logneg2: f64,
    pub gamma_c1: f64,
    pub gamma_c2: f64,
}

pub const WITNESS_HEADER: [&str; 9] = [
    "gamma2_center",
    "theta_center",
    "pairs",
    "seed1",
    "seed2",
    "logneg1",
    "logneg2",
    "gamma_c1",
    "gamma_c2",
];

/// Exhaustive pair search in every `(γ2, θ)` bin; one row per bin that has a
/// witness, carrying the pair whose smaller gap (in `E_N` or in `γ_c`) is
/// widest.
pub fn fig2_witnesses(rows: &[ScanRow], spec: &BinSpec) -> Vec<OrderingWitness> {
    let spec = BinSpec {
        mode: FixMode::Gamma2Theta,
        ..*spec
    };
    let bins = bin_rows(rows, &spec);
    let found: Vec<Option<OrderingWitness>> = bins
        .par_iter()
        .map(|bin| {
            let mut pairs = 0u64;
            let mut best: Option<(f64, usize, usize)> = None;
            for &i in &bin.members {
                for &j in &bin.members {
                    let (s1, s2) = (&rows[i], &rows[j]);
                    if s1.logneg < s2.logneg && s1.c_gamma > s2.c_gamma + GAMMA_SLACK {
                        pairs += 1;
                        let gap = (s2.logneg - s1.logneg).min(s1.c_gamma - s2.c_gamma);
                        if best.is_none_or(|(g, _, _)| gap > g) {
                            best = Some((gap, i, j));
                        }
                    }
                }
            }
            best.map(|(_, i, j)| OrderingWitness {
                gamma2_center: bin.fixed_center,
                theta_center: bin.theta_center,
                pairs,
                seed1: rows[i].seed,
                seed2: rows[j].seed,
                logneg1: rows[i].logneg,
                logneg2: rows[j].logneg,
                gamma_c1: rows[i].c_gamma,
                gamma_c2: rows[j].c_gamma,
            })
        })
        .collect();
    found.into_iter().flatten().collect()
}

pub fn write_witnesses<W: Write>(w: W, rows: &[OrderingWitness]) -> Result<()> {
    write_rows(w, &WITNESS_HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scan(samples: usize, frac: f64) -> Vec<ScanRow> {
        let cfg = ScanConfig {
            samples,
            seed: 7,
            pair: PairSelector::P12,
            separable_fraction: frac,
        };
        run_scan(&cfg).unwrap().iter().map(ScanRow::from).collect()
    }

    #[test]
    fn scan_is_deterministic_and_ordered() {
        let a = small_scan(10, 0.0);
        let b = small_scan(10, 0.0);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(a.iter().enumerate().all(|(i, r)| r.seed == 7 + i as u64));
    }

    #[test]
    fn scan_rejects_bad_config() {
        let mut cfg = ScanConfig {
            samples: 0,
            seed: 0,
            pair: PairSelector::P12,
            separable_fraction: 0.0,
        };
        assert!(run_scan(&cfg).is_err());
        cfg.samples = 1;
        cfg.separable_fraction = 1.5;
        assert!(run_scan(&cfg).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = small_scan(50, 0.2);
        let mut buf = Vec::new();
        write_scan(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), SCAN_HEADER.join(","));
        assert!(!text.contains('\r'));
        let back = read_scan(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn read_rejects_foreign_header() {
        assert!(read_scan("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn separable_flag_follows_projection() {
        let rows = small_scan(200, 0.5);
        let sep = rows.iter().filter(|r| r.separable).count();
        assert!(sep > 50 && sep < 150, "{sep}");
        for r in rows.iter().filter(|r| r.separable) {
            assert!(r.e1 <= SEPARABLE_TOL && r.n <= 1e-7);
        }
    }

    #[test]
    fn scan_respects_tsirelson() {
        for r in small_scan(300, 0.1) {
            assert!(r.c_gamma <= crate::correlation::TSIRELSON + 1e-9);
            assert!(r.q_gamma <= crate::correlation::TSIRELSON + 1e-9);
        }
    }

    #[test]
    fn bins_hold_their_members() {
        let rows = small_scan(500, 0.1);
        for mode in [FixMode::Gamma2Theta, FixMode::Alpha1Theta] {
            let spec = BinSpec::new(mode, 0.02, 0.02).unwrap();
            let bins = bin_rows(&rows, &spec);
            assert_eq!(
                bins.iter().map(|b| b.members.len()).sum::<usize>(),
                rows.len()
            );
            for b in &bins {
                for &i in &b.members {
                    let v = match mode {
                        FixMode::Gamma2Theta => rows[i].c_gamma2,
                        FixMode::Alpha1Theta => rows[i].c_alpha1,
                    };
                    assert!((v - b.fixed_center).abs() <= 0.01 + 1e-15);
                    assert!((rows[i].c_theta - b.theta_center).abs() <= 0.01 + 1e-15);
                }
            }
        }
    }

    fn row(seed: u64, a1: f64, gamma: f64, en: f64, separable: bool) -> ScanRow {
        ScanRow {
            seed,
            l0: 1.0,
            l1: 0.0,
            l2: 0.0,
            l3: 0.0,
            l4: 0.0,
            phi: 0.0,
            pair: PairSelector::P12,
            e1: 0.0,
            e2: 0.0,
            e3: 0.0,
            e4: 0.0,
            e5: 0.0,
            n: 0.0,
            logneg: en,
            q_alpha1: 0.0,
            q_alpha2: 0.0,
            q_alpha3: 0.0,
            q_gamma: 0.0,
            c_alpha1: a1,
            c_alpha2: 0.0,
            c_alpha3: 0.0,
            c_gamma1: 0.0,
            c_gamma2: -0.005,
            c_theta: 0.005,
            c_gamma: gamma,
            separable,
        }
    }

    #[test]
    fn summary_of_hand_built_bin() {
        let rows = vec![
            row(0, -0.5, 1.0, 0.0, true),
            row(1, -0.6, 1.2, 0.1, false),
            row(2, -0.7, 1.1, 0.2, false),
        ];
        let spec = BinSpec::new(FixMode::Gamma2Theta, 0.02, 0.02).unwrap();
        let s = classify_bins(&rows, &spec);
        assert_eq!(s.len(), 1);
        let s = &s[0];
        assert_eq!((s.count, s.separable_count), (3, 1));
        assert_eq!((s.gamma_c_min, s.gamma_c_max), (1.0, 1.2));
        assert_eq!(s.sep_gamma_c_min, Some(1.0));
        assert_eq!(s.extremal_separable, Some(true));
        assert_eq!(s.discordant_pairs, 1);
        assert!(!s.monotone);

        let w = fig2_witnesses(&rows, &spec);
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].pairs, w[0].seed1, w[0].seed2), (1, 1, 2));
    }

    #[test]
    fn only_separable_bin_is_its_own_minimum() {
        let rows = vec![row(0, -0.5, 1.0, 0.0, true), row(1, -0.6, 0.9, 0.0, true)];
        let s = &classify_bins(
            &rows,
            &BinSpec::new(FixMode::Gamma2Theta, 0.02, 0.02).unwrap(),
        )[0];
        assert_eq!(s.sep_gamma_c_min, Some(s.gamma_c_min));
        assert_eq!(s.extremal_separable, Some(true));
    }

    #[test]
    fn empty_inputs() {
        let spec = BinSpec::new(FixMode::Gamma2Theta, 0.02, 0.02).unwrap();
        assert!(classify_bins(&[], &spec).is_empty());
        assert!(fig2_witnesses(&small_scan(1, 0.0), &spec).is_empty());
        let mut buf = Vec::new();
        write_summary(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim_end(),
            SUMMARY_HEADER.join(",")
        );
        assert!(BinSpec::new(FixMode::Gamma2Theta, 0.0, 0.02).is_err());
    }

    #[test]
    fn pure_reductions_have_no_ordering_witness() {
        // λ2 = λ4 = 0: γ_c = 2√2·E1 and E_N are both increasing in E1.
        let rows: Vec<ScanRow> = (0..400)
            .map(|s| {
                let l = crate::states::sample_canonical(s).lambda();
                let p = CanonicalParams::normalized([l[0], l[1], 0.0, l[3], 0.0], 0.0).unwrap();
                ScanRow::from(&ScanRecord::evaluate(s, p, PairSelector::P12).unwrap())
            })
            .collect();
        let spec = BinSpec::new(FixMode::Gamma2Theta, 0.02, 0.02).unwrap();
        assert!(fig2_witnesses(&rows, &spec).is_empty());
    }

    #[test]
    fn fix_mode_parses() {
        assert_eq!("g2theta".parse::<FixMode>().unwrap(), FixMode::Gamma2Theta);
        assert_eq!("a1theta".parse::<FixMode>().unwrap().to_string(), "a1theta");
        assert!("x".parse::<FixMode>().is_err());
    }
}
