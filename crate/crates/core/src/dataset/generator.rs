//! Parametric synthetic deal generator.
//!
//! Features are drawn from moment-matched distributions (log-normal revenue,
//! rounded-and-clamped normals for the integer scores) and priced by a latent
//! function plus Gaussian noise. The default spec is anchored to the summary
//! moments of the reference 70-deal dataset; its tech_stack mix
//! (20% / 30% / 50%) and the latent coefficients are assumptions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, DealRecord, Provenance, RawFeatures, TechStack};

const INDUSTRIES: [&str; 22] = [
    "agriculture",
    "automotive",
    "construction",
    "consulting",
    "digital_marketing",
    "e_commerce",
    "education",
    "energy",
    "entertainment",
    "financial_services",
    "food_and_beverage",
    "healthcare",
    "hospitality",
    "insurance",
    "legal",
    "logistics",
    "manufacturing",
    "media",
    "nonprofit",
    "real_estate",
    "retail",
    "saas",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Moments {
    pub const fn new(mean: f64, std: f64, min: f64, max: f64) -> Self {
        Moments { mean, std, min, max }
    }

    fn validate(&self, name: &str) -> Result<(), DatasetError> {
        let all_finite = [self.mean, self.std, self.min, self.max]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(DatasetError::InvalidSpec(format!("{name}: non-finite moment")));
        }
        if self.min >= self.max {
            return Err(DatasetError::InvalidSpec(format!(
                "{name}: min {} must be below max {}",
                self.min, self.max
            )));
        }
        if self.mean < self.min || self.mean > self.max {
            return Err(DatasetError::InvalidSpec(format!(
                "{name}: mean {} outside [{}, {}]",
                self.mean, self.min, self.max
            )));
        }
        if self.std < 0.0 {
            return Err(DatasetError::InvalidSpec(format!("{name}: negative std")));
        }
        Ok(())
    }

    fn check_within(&self, name: &str, lo: f64, hi: f64) -> Result<(), DatasetError> {
        if self.min < lo || self.max > hi {
            return Err(DatasetError::InvalidSpec(format!(
                "{name}: range [{}, {}] exceeds valid [{lo}, {hi}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Per-tech_stack values in (no_code, low_code, custom) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TechValues {
    pub no_code: f64,
    pub low_code: f64,
    pub custom: f64,
}

impl TechValues {
    pub fn get(&self, stack: TechStack) -> f64 {
        match stack {
            TechStack::NoCode => self.no_code,
            TechStack::LowCode => self.low_code,
            TechStack::Custom => self.custom,
        }
    }

    fn as_array(&self) -> [f64; 3] {
        [self.no_code, self.low_code, self.custom]
    }
}

pub type TechShares = TechValues;

/// `base · complexity_rate^(c−3) · pain_rate^(p−3) · (weeks/8)^duration_exponent
/// · revenue bracket multiplier · tech multiplier`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativePricing {
    pub base: f64,
    pub complexity_rate: f64,
    pub pain_rate: f64,
    pub duration_exponent: f64,
    /// Ascending revenue cut points in USD.
    pub revenue_thresholds: Vec<f64>,
    /// One multiplier per bracket; `revenue_thresholds.len() + 1` entries.
    pub revenue_multipliers: Vec<f64>,
    pub tech_multipliers: TechValues,
}

impl MultiplicativePricing {
    fn revenue_multiplier(&self, revenue: f64) -> f64 {
        let bracket = self
            .revenue_thresholds
            .iter()
            .take_while(|&&t| revenue >= t)
            .count();
        self.revenue_multipliers[bracket]
    }
}

/// Purely additive pricing, used as the linear control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditivePricing {
    pub intercept: f64,
    pub per_revenue_million: f64,
    pub per_week: f64,
    pub per_pain_point: f64,
    pub per_complexity_point: f64,
    pub per_phase: f64,
    pub tech_offsets: TechValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum LatentPricing {
    Multiplicative(MultiplicativePricing),
    Additive(AdditivePricing),
}

impl LatentPricing {
    /// Noise-free price of a deal.
    pub fn evaluate(&self, x: &RawFeatures) -> f64 {
        match self {
            LatentPricing::Multiplicative(m) => {
                m.base
                    * m.complexity_rate.powf(x.integration_complexity as f64 - 3.0)
                    * m.pain_rate.powf(x.pain_severity_score as f64 - 3.0)
                    * (x.est_duration_weeks as f64 / 8.0).powf(m.duration_exponent)
                    * m.revenue_multiplier(x.client_revenue)
                    * m.tech_multipliers.get(x.tech_stack)
            }
            LatentPricing::Additive(a) => {
                a.intercept
                    + a.per_revenue_million * x.client_revenue / 1e6
                    + a.per_week * x.est_duration_weeks as f64
                    + a.per_pain_point * x.pain_severity_score as f64
                    + a.per_complexity_point * x.integration_complexity as f64
                    + a.per_phase * x.phase as f64
                    + a.tech_offsets.get(x.tech_stack)
            }
        }
    }

    fn validate(&self) -> Result<(), DatasetError> {
        if let LatentPricing::Multiplicative(m) = self {
            if m.revenue_multipliers.len() != m.revenue_thresholds.len() + 1 {
                return Err(DatasetError::InvalidSpec(
                    "revenue_multipliers needs one entry per bracket".into(),
                ));
            }
            if m.revenue_thresholds.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DatasetError::InvalidSpec(
                    "revenue_thresholds must be strictly ascending".into(),
                ));
            }
            let positive = [m.base, m.complexity_rate, m.pain_rate]
                .into_iter()
                .chain(m.revenue_multipliers.iter().copied())
                .chain(m.tech_multipliers.as_array())
                .all(|v| v.is_finite() && v > 0.0);
            if !positive || !m.duration_exponent.is_finite() {
                return Err(DatasetError::InvalidSpec(
                    "multiplicative coefficients must be positive and finite".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStructure {
    /// Clients contributing one record per project phase.
    pub multi_phase_clients: usize,
    pub phases_per_client: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub client_revenue: Moments,
    pub est_duration_weeks: Moments,
    pub pain_severity_score: Moments,
    pub integration_complexity: Moments,
    pub phase: Moments,
    /// Price clamp range is `[price.min, price.max]`; mean/std are targets.
    pub price: Moments,
    pub tech_stack_shares: TechShares,
    /// Correlation of the latent normals behind duration and complexity.
    pub duration_complexity_correlation: f64,
    pub pricing: LatentPricing,
    /// Gaussian price noise, USD.
    pub noise_std: f64,
    pub groups: GroupStructure,
    pub provenance: Provenance,
    pub record_prefix: String,
    pub group_prefix: String,
    pub first_group_number: usize,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            client_revenue: Moments::new(8_105_790.0, 30_768_920.0, 100_000.0, 250_000_000.0),
            est_duration_weeks: Moments::new(8.4, 4.5, 3.0, 20.0),
            pain_severity_score: Moments::new(3.6, 0.9, 2.0, 5.0),
            integration_complexity: Moments::new(3.9, 0.9, 2.0, 5.0),
            phase: Moments::new(1.6, 0.7, 1.0, 4.0),
            price: Moments::new(16_309.0, 11_485.0, 2_738.0, 40_000.0),
            tech_stack_shares: TechShares {
                no_code: 0.2,
                low_code: 0.3,
                custom: 0.5,
            },
            duration_complexity_correlation: 0.3,
            pricing: LatentPricing::Multiplicative(MultiplicativePricing {
                base: 6_000.0,
                complexity_rate: 2.2,
                pain_rate: 1.8,
                duration_exponent: 0.2,
                revenue_thresholds: vec![1_000_000.0, 10_000_000.0, 50_000_000.0],
                revenue_multipliers: vec![0.5, 1.0, 1.5, 2.0],
                tech_multipliers: TechValues {
                    no_code: 0.85,
                    low_code: 0.95,
                    custom: 1.05,
                },
            }),
            noise_std: 600.0,
            groups: GroupStructure {
                multi_phase_clients: 8,
                phases_per_client: 3,
            },
            provenance: Provenance::Synthetic,
            record_prefix: "syn".into(),
            group_prefix: "client".into(),
            first_group_number: 1,
            seed: 6,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        self.client_revenue.validate("client_revenue")?;
        if self.client_revenue.min <= 0.0 {
            return Err(DatasetError::InvalidSpec("client_revenue min must be positive".into()));
        }
        self.est_duration_weeks.validate("est_duration_weeks")?;
        self.est_duration_weeks
            .check_within("est_duration_weeks", 1.0, f64::from(u32::MAX))?;
        self.pain_severity_score.validate("pain_severity_score")?;
        self.pain_severity_score.check_within("pain_severity_score", 1.0, 5.0)?;
        self.integration_complexity.validate("integration_complexity")?;
        self.integration_complexity
            .check_within("integration_complexity", 1.0, 5.0)?;
        self.phase.validate("phase")?;
        self.phase.check_within("phase", 1.0, 4.0)?;
        self.price.validate("price")?;
        if self.price.min <= 0.0 {
            return Err(DatasetError::InvalidSpec("price min must be positive".into()));
        }
        let shares = self.tech_stack_shares.as_array();
        if shares.iter().any(|s| !s.is_finite() || *s < 0.0) || shares.iter().sum::<f64>() <= 0.0 {
            return Err(DatasetError::InvalidSpec(
                "tech_stack_shares must be non-negative with a positive sum".into(),
            ));
        }
        if !(-1.0..=1.0).contains(&self.duration_complexity_correlation) {
            return Err(DatasetError::InvalidSpec("correlation must lie in [-1, 1]".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(DatasetError::InvalidSpec("noise_std must be >= 0".into()));
        }
        let g = self.groups;
        if g.multi_phase_clients > 0 && !(2..=4).contains(&g.phases_per_client) {
            return Err(DatasetError::InvalidSpec(
                "phases_per_client must be within 2..=4".into(),
            ));
        }
        self.pricing.validate()
    }

    /// Group sizes implied by `groups` for `n` records.
    fn group_sizes(&self, n: usize) -> Result<Vec<u8>, DatasetError> {
        let g = self.groups;
        let grouped = g.multi_phase_clients * g.phases_per_client as usize;
        if grouped > n {
            return Err(DatasetError::InvalidSpec(format!(
                "{} multi-phase clients x {} phases exceed n = {n}",
                g.multi_phase_clients, g.phases_per_client
            )));
        }
        let mut sizes = vec![g.phases_per_client; g.multi_phase_clients];
        sizes.extend(std::iter::repeat_n(1u8, n - grouped));
        Ok(sizes)
    }
}

/// Draw `n` deals following `spec`. Deterministic for a fixed `spec.seed`.
pub fn generate_synthetic(spec: &GeneratorSpec, n: usize) -> Result<Dataset, DatasetError> {
    spec.validate()?;
    if n == 0 {
        return Err(DatasetError::InvalidSpec("n must be at least 1".into()));
    }
    let sizes = spec.group_sizes(n)?;
    generate_with_groups(spec, &sizes)
}

/// Draw one client group per entry of `group_sizes`; a group of size k holds
/// phases 1..=k of the same client (shared revenue and industry).
pub fn generate_with_groups(
    spec: &GeneratorSpec,
    group_sizes: &[u8],
) -> Result<Dataset, DatasetError> {
    spec.validate()?;
    if group_sizes.is_empty() || group_sizes.iter().any(|&s| !(1..=4).contains(&s)) {
        return Err(DatasetError::InvalidSpec(
            "group sizes must be non-empty and within 1..=4".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let revenue = revenue_distribution(&spec.client_revenue)?;
    let noise = Normal::new(0.0, spec.noise_std)
        .map_err(|e| DatasetError::InvalidSpec(format!("noise: {e}")))?;
    let rho = spec.duration_complexity_correlation;
    let shares = spec.tech_stack_shares.as_array();
    let share_total: f64 = shares.iter().sum();

    let mut records = Vec::with_capacity(group_sizes.iter().map(|&s| s as usize).sum());
    for (g, &size) in group_sizes.iter().enumerate() {
        let group = format!("{}-{:02}", spec.group_prefix, spec.first_group_number + g);
        let client_revenue = revenue
            .sample(&mut rng)
            .clamp(spec.client_revenue.min, spec.client_revenue.max);
        let industry = INDUSTRIES[rng.random_range(0..INDUSTRIES.len())];
        for p in 0..size {
            let z_duration: f64 = StandardNormal.sample(&mut rng);
            let z_indep: f64 = StandardNormal.sample(&mut rng);
            let z_complexity = rho * z_duration + (1.0 - rho * rho).sqrt() * z_indep;
            let z_pain: f64 = StandardNormal.sample(&mut rng);
            let phase = if size == 1 {
                let z: f64 = StandardNormal.sample(&mut rng);
                discrete(&spec.phase, z)
            } else {
                p as f64 + 1.0
            };
            let u: f64 = rng.random::<f64>() * share_total;
            let tech_stack = pick_tech(u, &shares);
            let raw = RawFeatures {
                client_revenue,
                est_duration_weeks: discrete(&spec.est_duration_weeks, z_duration) as u32,
                pain_severity_score: discrete(&spec.pain_severity_score, z_pain) as u8,
                integration_complexity: discrete(&spec.integration_complexity, z_complexity) as u8,
                phase: phase as u8,
                tech_stack,
            };
            let eps = noise.sample(&mut rng);
            let price = (spec.pricing.evaluate(&raw) + eps).clamp(spec.price.min, spec.price.max);
            records.push(DealRecord {
                record_id: format!("{}-{:03}", spec.record_prefix, records.len() + 1),
                client_group: group.clone(),
                industry: industry.to_string(),
                client_revenue: raw.client_revenue,
                est_duration_weeks: raw.est_duration_weeks,
                pain_severity_score: raw.pain_severity_score,
                integration_complexity: raw.integration_complexity,
                phase: raw.phase,
                tech_stack: raw.tech_stack,
                price,
                provenance: spec.provenance,
            });
        }
    }
    Dataset::new(records)
}

/// Log-normal with the target arithmetic mean and std.
fn revenue_distribution(m: &Moments) -> Result<LogNormal<f64>, DatasetError> {
    let cv2 = (m.std / m.mean).powi(2);
    let sigma2 = (1.0 + cv2).ln();
    let mu = m.mean.ln() - sigma2 / 2.0;
    LogNormal::new(mu, sigma2.sqrt()).map_err(|e| DatasetError::InvalidSpec(format!("revenue: {e}")))
}

fn discrete(m: &Moments, z: f64) -> f64 {
    (m.mean + m.std * z).round().clamp(m.min.ceil(), m.max.floor())
}

fn pick_tech(u: f64, shares: &[f64; 3]) -> TechStack {
    let mut acc = 0.0;
    for (stack, share) in TechStack::ALL.into_iter().zip(shares) {
        acc += share;
        if u < acc {
            return stack;
        }
    }
    // u landed on the upper edge through rounding; take the last non-empty bucket
    TechStack::ALL
        .into_iter()
        .zip(shares)
        .rev()
        .find(|(_, &s)| s > 0.0)
        .map(|(t, _)| t)
        .unwrap_or(TechStack::Custom)
}
