//! Aggregate statistics over benchmark records.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BenchRecord, RecordStatus, SpectralRecord};
use crate::channels::{Cloner, MutationMode, Variant};
use crate::error::{QgaError, Result};

/// `|gamma_bcqo - gamma_uqcm|` below this is a tie and leaves the comparison.
pub const TIE_TOL: f64 = 1e-6;
const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantStats {
    pub variant: Variant,
    pub label: String,
    /// Hamiltonians with at least one successful fit.
    pub hamiltonians: usize,
    pub f_inf_mean: f64,
    pub f_inf_std: f64,
    pub f_inf_min: f64,
    pub f_inf_max: f64,
    pub gamma_mean: f64,
    pub gamma_std: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Trajectories whose fit resolved no decay.
    pub degenerate_fits: usize,
}

/// Share of Hamiltonians on which BCQO converges strictly faster than UQCM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRate {
    pub mutation: MutationMode,
    /// Compared Hamiltonians, ties excluded.
    pub comparisons: usize,
    pub ties: usize,
    pub wins: usize,
    /// Percent; `None` without comparisons.
    pub rate: Option<f64>,
    /// 95% half-width in percentage points.
    pub ci_half_width: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// `normal`, or `one-sided-exact` when every comparison went the same way.
    pub ci_method: String,
}

/// Squared correlation between fitted and predicted parameters for one cloner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub variant: Variant,
    pub label: String,
    pub points: usize,
    pub r2_f_inf: Option<f64>,
    pub r2_gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointStats {
    pub cloner: Cloner,
    pub analyses: usize,
    /// Analyses with a single eigenvalue on the unit circle.
    pub unique: usize,
    pub max_multiplicity: usize,
    pub max_residual: f64,
    pub oscillating: usize,
    pub gamma_mean: f64,
    pub f_inf_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub variants: Vec<VariantStats>,
    pub win_rates: Vec<WinRate>,
    pub agreement: Vec<Agreement>,
    pub fixed_points: Vec<FixedPointStats>,
    pub failed_records: usize,
    pub failed_spectral: usize,
    /// Units of the win-rate interval.
    pub ci_units: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl AggregateStats {
    pub fn variant(&self, cloner: Cloner, mutation: MutationMode) -> Option<&VariantStats> {
        self.variants.iter().find(|v| v.variant.cloner == cloner && v.variant.mutation == mutation)
    }

    pub fn win_rate(&self, mutation: MutationMode) -> Option<&WinRate> {
        self.win_rates.iter().find(|w| w.mutation == mutation)
    }

    pub fn agreement_for(&self, cloner: Cloner) -> Option<&Agreement> {
        self.agreement.iter().find(|a| a.variant.cloner == cloner)
    }

    pub fn fixed_points_for(&self, cloner: Cloner) -> Option<&FixedPointStats> {
        self.fixed_points.iter().find(|f| f.cloner == cloner)
    }
}

/// Per-(Hamiltonian, variant) parameters averaged over initial states.
#[derive(Debug, Clone)]
struct HamAverage {
    ham_index: usize,
    ham_hash: String,
    f_inf: f64,
    gamma: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Squared sample correlation; `None` when either side is constant or fewer than two points.
pub fn pearson_r2(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy * sxy / (sxx * syy))
}

fn variant_key(v: &Variant) -> (Cloner, MutationMode) {
    (v.cloner, v.mutation)
}

/// Variants in order of first appearance.
fn variants_in(records: &[BenchRecord]) -> Vec<Variant> {
    let mut out: Vec<Variant> = Vec::new();
    for r in records {
        if !out.iter().any(|v| variant_key(v) == variant_key(&r.variant)) {
            out.push(r.variant);
        }
    }
    out
}

fn ham_averages(records: &[BenchRecord], variant: &Variant) -> (Vec<HamAverage>, usize) {
    let mut groups: BTreeMap<usize, (String, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut degenerate = 0;
    for r in records.iter().filter(|r| variant_key(&r.variant) == variant_key(variant)) {
        let (RecordStatus::Ok, Some(fit)) = (r.status, &r.fit) else { continue };
        degenerate += usize::from(fit.degenerate);
        let entry = groups.entry(r.ham_index).or_insert_with(|| (r.ham_hash.clone(), Vec::new(), Vec::new()));
        entry.1.push(fit.f_inf);
        entry.2.push(fit.gamma);
    }
    let averages = groups
        .into_iter()
        .map(|(ham_index, (ham_hash, f, g))| HamAverage { ham_index, ham_hash, f_inf: mean(&f), gamma: mean(&g) })
        .collect();
    (averages, degenerate)
}

fn variant_stats(variant: Variant, avgs: &[HamAverage], degenerate_fits: usize) -> VariantStats {
    let f: Vec<f64> = avgs.iter().map(|a| a.f_inf).collect();
    let g: Vec<f64> = avgs.iter().map(|a| a.gamma).collect();
    let min = |xs: &[f64]| xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    VariantStats {
        variant,
        label: variant.label(),
        hamiltonians: avgs.len(),
        f_inf_mean: mean(&f),
        f_inf_std: std_dev(&f),
        f_inf_min: min(&f),
        f_inf_max: max(&f),
        gamma_mean: mean(&g),
        gamma_std: std_dev(&g),
        gamma_min: min(&g),
        gamma_max: max(&g),
        degenerate_fits,
    }
}

/// Win rate of `wins` out of `n` with a 95% interval in percentage points.
///
/// The normal interval collapses to zero width when every comparison agrees, so that
/// case reports the exact one-sided bound `1 - 0.05^(1/n)` instead.
pub fn win_rate(mutation: MutationMode, wins: usize, n: usize, ties: usize) -> WinRate {
    if n == 0 {
        return WinRate {
            mutation,
            comparisons: 0,
            ties,
            wins: 0,
            rate: None,
            ci_half_width: None,
            ci_low: None,
            ci_high: None,
            ci_method: "undefined".into(),
        };
    }
    let p = wins as f64 / n as f64;
    let (half, low, high, method) = if wins == 0 || wins == n {
        let bound = 1.0 - 0.05f64.powf(1.0 / n as f64);
        if wins == 0 {
            (bound, 0.0, bound, "one-sided-exact")
        } else {
            (bound, 1.0 - bound, 1.0, "one-sided-exact")
        }
    } else {
        let half = Z95 * (p * (1.0 - p) / n as f64).sqrt();
        (half, (p - half).max(0.0), (p + half).min(1.0), "normal")
    };
    WinRate {
        mutation,
        comparisons: n,
        ties,
        wins,
        rate: Some(100.0 * p),
        ci_half_width: Some(100.0 * half),
        ci_low: Some(100.0 * low),
        ci_high: Some(100.0 * high),
        ci_method: method.into(),
    }
}

fn spectral_ok(spectral: &[SpectralRecord], cloner: Cloner) -> impl Iterator<Item = (usize, &crate::spectral::SpectralReport)> {
    spectral.iter().filter_map(move |s| match (&s.status, &s.report) {
        (RecordStatus::Ok, Some(r)) if r.variant.cloner == cloner => Some((s.ham_index, r)),
        _ => None,
    })
}

pub fn aggregate(records: &[BenchRecord], spectral: &[SpectralRecord]) -> Result<AggregateStats> {
    let failed_records = records.iter().filter(|r| r.status == RecordStatus::Failed).count();
    let failed_spectral = spectral.iter().filter(|s| s.status == RecordStatus::Failed).count();
    let variants = variants_in(records);
    let mut per_variant = Vec::new();
    let mut averages: Vec<(Variant, Vec<HamAverage>)> = Vec::new();
    for v in variants {
        let (avgs, degenerate) = ham_averages(records, &v);
        if avgs.is_empty() {
            continue;
        }
        per_variant.push(variant_stats(v, &avgs, degenerate));
        averages.push((v, avgs));
    }
    if per_variant.is_empty() {
        return Err(QgaError::EmptyStats(format!("{} records, none with a successful fit", records.len())));
    }

    let lookup = |cloner: Cloner, mutation: MutationMode| {
        averages.iter().find(|(v, _)| v.cloner == cloner && v.mutation == mutation).map(|(_, a)| a)
    };
    let mut win_rates = Vec::new();
    for mutation in [MutationMode::Off, MutationMode::Exact, MutationMode::Sampled] {
        let (Some(b), Some(u)) = (lookup(Cloner::Bcqo, mutation), lookup(Cloner::Uqcm, mutation)) else { continue };
        let (mut wins, mut n, mut ties) = (0, 0, 0);
        for a in b {
            let Some(other) = u.iter().find(|x| x.ham_index == a.ham_index) else { continue };
            if (a.gamma - other.gamma).abs() < TIE_TOL {
                ties += 1;
                continue;
            }
            n += 1;
            wins += usize::from(a.gamma < other.gamma);
        }
        win_rates.push(win_rate(mutation, wins, n, ties));
    }

    let mut agreement = Vec::new();
    for (v, avgs) in averages.iter().filter(|(v, _)| !v.has_mutation()) {
        let preds: BTreeMap<usize, (f64, f64)> = spectral_ok(spectral, v.cloner).map(|(h, r)| (h, (r.f_inf, r.gamma))).collect();
        let (mut fs, mut fp, mut gs, mut gp) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for a in avgs {
            if let Some(&(f, g)) = preds.get(&a.ham_index) {
                fs.push(a.f_inf);
                fp.push(f);
                gs.push(a.gamma);
                gp.push(g);
            }
        }
        if fs.is_empty() {
            continue;
        }
        agreement.push(Agreement {
            variant: *v,
            label: v.label(),
            points: fs.len(),
            r2_f_inf: pearson_r2(&fs, &fp),
            r2_gamma: pearson_r2(&gs, &gp),
        });
    }

    let mut fixed_points = Vec::new();
    for cloner in [Cloner::Bcqo, Cloner::Uqcm] {
        let reports: Vec<_> = spectral_ok(spectral, cloner).map(|(_, r)| r).collect();
        if reports.is_empty() {
            continue;
        }
        fixed_points.push(FixedPointStats {
            cloner,
            analyses: reports.len(),
            unique: reports.iter().filter(|r| r.m == 1).count(),
            max_multiplicity: reports.iter().map(|r| r.m).max().unwrap_or(0),
            max_residual: reports.iter().map(|r| r.residual).fold(0.0, f64::max),
            oscillating: reports.iter().filter(|r| r.oscillating).count(),
            gamma_mean: mean(&reports.iter().map(|r| r.gamma).collect::<Vec<_>>()),
            f_inf_mean: mean(&reports.iter().map(|r| r.f_inf).collect::<Vec<_>>()),
        });
    }

    Ok(AggregateStats {
        variants: per_variant,
        win_rates,
        agreement,
        fixed_points,
        failed_records,
        failed_spectral,
        ci_units: "percentage points".into(),
        config_hash: None,
    })
}

/// One point of the fitted-versus-predicted scatter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub ham_hash: String,
    pub variant: String,
    #[serde(rename = "F_inf_sim")]
    pub f_inf_sim: f64,
    #[serde(rename = "F_inf_pred")]
    pub f_inf_pred: Option<f64>,
    pub gamma_sim: f64,
    pub gamma_pred: Option<f64>,
}

/// Rows ordered by Hamiltonian, then variant. Predictions exist only for variants
/// without mutation.
pub fn scatter_rows(records: &[BenchRecord], spectral: &[SpectralRecord]) -> Vec<ScatterRow> {
    let mut rows: Vec<(usize, usize, ScatterRow)> = Vec::new();
    for (vi, v) in variants_in(records).iter().enumerate() {
        let preds: BTreeMap<usize, (f64, f64)> = if v.has_mutation() {
            BTreeMap::new()
        } else {
            spectral_ok(spectral, v.cloner).map(|(h, r)| (h, (r.f_inf, r.gamma))).collect()
        };
        for a in ham_averages(records, v).0 {
            let pred = preds.get(&a.ham_index);
            rows.push((
                a.ham_index,
                vi,
                ScatterRow {
                    ham_hash: a.ham_hash,
                    variant: v.label(),
                    f_inf_sim: a.f_inf,
                    f_inf_pred: pred.map(|p| p.0),
                    gamma_sim: a.gamma,
                    gamma_pred: pred.map(|p| p.1),
                },
            ));
        }
    }
    rows.sort_by_key(|(h, v, _)| (*h, *v));
    rows.into_iter().map(|(_, _, r)| r).collect()
}

pub fn write_scatter_csv(path: &Path, rows: &[ScatterRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    if rows.is_empty() {
        w.write_record(["ham_hash", "variant", "F_inf_sim", "F_inf_pred", "gamma_sim", "gamma_pred"]).map_err(csv_error)?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> QgaError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => QgaError::Io(io),
        other => QgaError::Parse(format!("{other:?}")),
    }
}
