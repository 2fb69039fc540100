//! Jolly-Seber open-population estimation from capture histories, plus the
//! two-occasion Lincoln-Petersen / Chapman estimators.
//!
//! Photographic capture removes nothing, so the number released at each
//! occasion always equals the number captured.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bias::ShareEstimate;
use crate::data::{EncounterMatrix, Occasion};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("Jolly-Seber needs at least 2 occasions, got {0}")]
    TooFewOccasions(usize),
    #[error("plain Lincoln-Petersen is undefined with zero recaptures")]
    ZeroRecaptures,
    #[error("recaptures ({recaptured}) exceed a capture total ({captured_1}, {captured_2})")]
    BadCounts {
        captured_1: u64,
        captured_2: u64,
        recaptured: u64,
    },
    #[error("occasion {0} has sightings but no share estimates")]
    MissingShareEstimates(Occasion),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Summary statistics per occasion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccasionStatistics {
    pub occasions: Vec<Occasion>,
    /// Animals caught at t.
    pub captured: Vec<u64>,
    /// Caught at t and at some earlier occasion (m_t).
    pub marked_recaptured: Vec<u64>,
    /// Released at t (R_t).
    pub released: Vec<u64>,
    /// Of those released at t, caught again later (r_t).
    pub later_recaught: Vec<u64>,
    /// Caught before and after t but not at t (z_t).
    pub skipped: Vec<u64>,
}

impl OccasionStatistics {
    pub fn len(&self) -> usize {
        self.occasions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occasions.is_empty()
    }
}

/// Single pass over each history using first/last sighting positions.
pub fn occasion_statistics(matrix: &EncounterMatrix) -> Result<OccasionStatistics, EstimatorError> {
    let t_count = matrix.n_occasions();
    if t_count < 2 {
        return Err(EstimatorError::TooFewOccasions(t_count));
    }
    let mut captured = vec![0u64; t_count];
    let mut marked = vec![0u64; t_count];
    let mut later = vec![0u64; t_count];
    let mut skipped = vec![0u64; t_count];
    for row in matrix.rows() {
        let Some(first) = row.iter().position(|&c| c) else {
            continue;
        };
        let last = row.iter().rposition(|&c| c).expect("row has a sighting");
        for t in 0..t_count {
            if row[t] {
                captured[t] += 1;
                if t > first {
                    marked[t] += 1;
                }
                if t < last {
                    later[t] += 1;
                }
            } else if t > first && t < last {
                skipped[t] += 1;
            }
        }
    }
    Ok(OccasionStatistics {
        occasions: matrix.occasions().to_vec(),
        released: captured.clone(),
        captured,
        marked_recaptured: marked,
        later_recaught: later,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JsVariant {
    /// Jolly (1965) moment estimators.
    #[default]
    Classic,
    /// +1-adjusted estimators, defined even with zero recaptures.
    BiasCorrected,
}

impl std::str::FromStr for JsVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classic" => Ok(JsVariant::Classic),
            "bias_corrected" | "bias-corrected" => Ok(JsVariant::BiasCorrected),
            other => Err(format!("unknown Jolly-Seber variant '{other}'")),
        }
    }
}

/// Why an occasion has no abundance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inestimable {
    FirstOccasion,
    LastOccasion,
    ZeroRecaptures,
    ZeroMarked,
}

impl Inestimable {
    pub fn as_str(self) -> &'static str {
        match self {
            Inestimable::FirstOccasion => "first_occasion",
            Inestimable::LastOccasion => "last_occasion",
            Inestimable::ZeroRecaptures => "zero_recaptures",
            Inestimable::ZeroMarked => "zero_marked",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccasionEstimate {
    pub occasion: Occasion,
    /// M̂_t, marked animals alive just before t.
    pub marked_pop: Option<f64>,
    /// N̂_t.
    pub abundance: Option<f64>,
    /// φ̂_t, survival from t to t+1.
    pub survival: Option<f64>,
    /// B̂_t, recruits between t and t+1.
    pub recruitment: Option<f64>,
    pub reason: Option<Inestimable>,
}

impl OccasionEstimate {
    pub fn estimable(&self) -> bool {
        self.abundance.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationEstimate {
    pub variant: JsVariant,
    pub statistics: OccasionStatistics,
    pub occasions: Vec<OccasionEstimate>,
}

impl PopulationEstimate {
    pub fn abundance_at(&self, occasion: Occasion) -> Option<f64> {
        self.occasions
            .iter()
            .find(|e| e.occasion == occasion)
            .and_then(|e| e.abundance)
    }
}

/// Jolly-Seber estimates for every occasion. Inestimable occasions carry a
/// reason instead of failing.
pub fn jolly_seber_estimate(stats: &OccasionStatistics, variant: JsVariant) -> PopulationEstimate {
    let t_count = stats.len();
    let f = |v: u64| v as f64;
    let mut marked_pop = vec![None; t_count];
    let mut abundance = vec![None; t_count];
    let mut reasons = vec![None; t_count];
    for t in 0..t_count {
        if t == 0 {
            marked_pop[t] = Some(0.0);
            reasons[t] = Some(Inestimable::FirstOccasion);
            continue;
        }
        if t == t_count - 1 {
            reasons[t] = Some(Inestimable::LastOccasion);
            continue;
        }
        let (n, m, big_r, r, z) = (
            f(stats.captured[t]),
            f(stats.marked_recaptured[t]),
            f(stats.released[t]),
            f(stats.later_recaught[t]),
            f(stats.skipped[t]),
        );
        match variant {
            JsVariant::Classic => {
                if stats.later_recaught[t] == 0 {
                    reasons[t] = Some(Inestimable::ZeroRecaptures);
                    continue;
                }
                let mhat = m + big_r * z / r;
                marked_pop[t] = Some(mhat);
                if stats.marked_recaptured[t] == 0 {
                    reasons[t] = Some(Inestimable::ZeroMarked);
                    continue;
                }
                abundance[t] = Some(n * mhat / m);
            }
            JsVariant::BiasCorrected => {
                let mhat = m + (big_r + 1.0) * z / (r + 1.0);
                marked_pop[t] = Some(mhat);
                abundance[t] = Some((n + 1.0) * mhat / (m + 1.0));
            }
        }
    }
    let mut survival = vec![None; t_count];
    let mut recruitment = vec![None; t_count];
    for t in 0..t_count.saturating_sub(1) {
        if let (Some(m_t), Some(m_next)) = (marked_pop[t], marked_pop[t + 1]) {
            let at_risk = m_t - f(stats.marked_recaptured[t]) + f(stats.released[t]);
            if at_risk > 0.0 {
                survival[t] = Some(m_next / at_risk);
            }
        }
        if let (Some(phi), Some(n_t), Some(n_next)) = (survival[t], abundance[t], abundance[t + 1]) {
            recruitment[t] =
                Some(n_next - phi * (n_t - f(stats.captured[t]) + f(stats.released[t])));
        }
    }
    let occasions = (0..t_count)
        .map(|t| OccasionEstimate {
            occasion: stats.occasions[t],
            marked_pop: marked_pop[t],
            abundance: abundance[t],
            survival: survival[t],
            recruitment: recruitment[t],
            reason: reasons[t],
        })
        .collect();
    PopulationEstimate {
        variant,
        statistics: stats.clone(),
        occasions,
    }
}

/// Two-occasion closed-population abundance.
pub fn lincoln_petersen(
    captured_1: u64,
    captured_2: u64,
    recaptured: u64,
    chapman: bool,
) -> Result<f64, EstimatorError> {
    if recaptured > captured_1.min(captured_2) {
        return Err(EstimatorError::BadCounts {
            captured_1,
            captured_2,
            recaptured,
        });
    }
    let (n1, n2, m) = (captured_1 as f64, captured_2 as f64, recaptured as f64);
    if chapman {
        Ok((n1 + 1.0) * (n2 + 1.0) / (m + 1.0) - 1.0)
    } else if recaptured == 0 {
        Err(EstimatorError::ZeroRecaptures)
    } else {
        Ok(n1 * n2 / m)
    }
}

/// Integer rounding with halves going up.
pub fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor().max(0.0) as u64
}

/// Mean `k_i` per occasion.
pub fn occasion_mean_coefficients(estimates: &[ShareEstimate]) -> BTreeMap<Occasion, f64> {
    let mut buckets: BTreeMap<Occasion, Vec<f64>> = BTreeMap::new();
    for e in estimates {
        buckets.entry(e.occasion).or_default().push(e.k_i);
    }
    buckets
        .into_iter()
        .map(|(occ, mut ks)| {
            ks.sort_by(f64::total_cmp);
            (occ, ks.iter().sum::<f64>() / ks.len() as f64)
        })
        .collect()
}

/// Scale capture totals by each occasion's mean bias coefficient.
pub fn scale_statistics(
    stats: &OccasionStatistics,
    mean_k: &BTreeMap<Occasion, f64>,
) -> Result<OccasionStatistics, EstimatorError> {
    let mut corrected = stats.clone();
    for t in 0..stats.len() {
        if stats.captured[t] == 0 {
            continue;
        }
        let occasion = stats.occasions[t];
        let k = *mean_k
            .get(&occasion)
            .ok_or(EstimatorError::MissingShareEstimates(occasion))?;
        corrected.captured[t] = round_half_up(stats.captured[t] as f64 * k);
        corrected.released[t] = round_half_up(stats.released[t] as f64 * k);
    }
    Ok(corrected)
}

/// Occasion statistics of `matrix` with capture totals inflated by the
/// occasion's mean `k`. Recapture structure (m, r, z) stays as observed.
pub fn apply_bias_to_counts(
    estimates: &[ShareEstimate],
    matrix: &EncounterMatrix,
) -> Result<OccasionStatistics, EstimatorError> {
    let stats = occasion_statistics(matrix)?;
    scale_statistics(&stats, &occasion_mean_coefficients(estimates))
}

pub const POPULATION_HEADER: [&str; 11] = [
    "occasion", "captured", "m", "r", "z", "M_hat", "N_hat", "phi_hat", "B_hat", "estimable", "reason",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn write_population_csv<W: std::io::Write>(
    writer: W,
    estimate: &PopulationEstimate,
) -> Result<(), EstimatorError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(POPULATION_HEADER)?;
    let s = &estimate.statistics;
    for (t, e) in estimate.occasions.iter().enumerate() {
        w.write_record([
            e.occasion.to_string(),
            s.captured[t].to_string(),
            s.marked_recaptured[t].to_string(),
            s.later_recaught[t].to_string(),
            s.skipped[t].to_string(),
            opt(e.marked_pop),
            opt(e.abundance),
            opt(e.survival),
            opt(e.recruitment),
            e.estimable().to_string(),
            e.reason.map(|r| r.as_str().to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
