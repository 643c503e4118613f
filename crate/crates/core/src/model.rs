//! Physical-layer rate model and the logarithmic quality model built on top of it.
//!
//! A multi-antenna transmitter serves `K` users on a shared band. Each user's
//! achievable rate follows a gap-adjusted Shannon formula driven by its own
//! power and the interference from the other streams. Received video quality
//! (PSNR, in dB) grows logarithmically with the source rate, so the weighted
//! sum quality is a strictly increasing function of the rate vector — the
//! property the global solver in [`crate::polyblock`] relies on.

use thiserror::Error;

/// Rates below this (bit/s) have no defined quality; callers either treat the
/// user as quality-undefined or clamp, depending on context.
pub const RATE_FLOOR: f64 = 1.0;

/// The quality model takes its rate argument in kbit/s; everything else in
/// this crate is bit/s. This is the single conversion point.
pub const BITS_PER_KBIT: f64 = 1000.0;

/// Errors from constructing domain types or evaluating the models.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("quality undefined for user {user}: rate below floor")]
    QualityUndefined { user: usize },
}

/// Physical and budget constants shared by every operation.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Number of users (and transmit streams).
    pub users: usize,
    /// Shared bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Noise power spectral density in W/Hz.
    pub noise_density: f64,
    /// Rate adjustment factor of the AMC scheme (dimensionless).
    pub rate_adjustment: f64,
    /// SNR gap of the AMC scheme relative to capacity (dimensionless, >= 1).
    pub snr_gap: f64,
    /// Total transmit power budget in W.
    pub power_budget: f64,
}

impl SystemParams {
    pub fn new(
        users: usize,
        bandwidth_hz: f64,
        noise_density: f64,
        rate_adjustment: f64,
        snr_gap: f64,
        power_budget: f64,
    ) -> Result<Self, ModelError> {
        if users < 1 {
            return Err(ModelError::InvalidParameter("users must be >= 1".into()));
        }
        if !(bandwidth_hz > 0.0) {
            return Err(ModelError::InvalidParameter("bandwidth must be > 0".into()));
        }
        if !(noise_density > 0.0) {
            return Err(ModelError::InvalidParameter(
                "noise density must be > 0".into(),
            ));
        }
        if !(rate_adjustment > 0.0) {
            return Err(ModelError::InvalidParameter(
                "rate adjustment must be > 0".into(),
            ));
        }
        if !(snr_gap >= 1.0) {
            return Err(ModelError::InvalidParameter("SNR gap must be >= 1".into()));
        }
        if !(power_budget > 0.0) {
            return Err(ModelError::InvalidParameter(
                "power budget must be > 0".into(),
            ));
        }
        Ok(Self {
            users,
            bandwidth_hz,
            noise_density,
            rate_adjustment,
            snr_gap,
            power_budget,
        })
    }

    /// Total noise power over the band, `N0 * B`, in W.
    pub fn noise_power(&self) -> f64 {
        self.noise_density * self.bandwidth_hz
    }
}

/// Quality-rate coefficients for a standard CIF test sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoPreset {
    pub name: &'static str,
    /// dB gained per ln(kbit/s).
    pub alpha: f64,
    /// dB offset.
    pub beta: f64,
}

/// Built-in registry of quality-rate model fits for common CIF sequences.
pub const VIDEO_PRESETS: [VideoPreset; 5] = [
    VideoPreset { name: "akiyo", alpha: 5.0545, beta: 17.1145 },
    VideoPreset { name: "bus", alpha: 4.7205, beta: 5.4764 },
    VideoPreset { name: "coastguard", alpha: 3.5261, beta: 13.8425 },
    VideoPreset { name: "foreman", alpha: 4.5006, beta: 13.0780 },
    VideoPreset { name: "news", alpha: 5.6218, beta: 10.0016 },
];

/// Case-insensitive lookup in [`VIDEO_PRESETS`].
pub fn video_preset(name: &str) -> Option<&'static VideoPreset> {
    VIDEO_PRESETS
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
}

/// Per-user quality model coefficients, objective weights, and quality floors.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityProfile {
    /// dB per ln(kbit/s), one entry per user, all > 0.
    pub alpha: Vec<f64>,
    /// dB offsets, one entry per user.
    pub beta: Vec<f64>,
    /// Objective weights in [0, 1] summing to 1.
    pub weights: Vec<f64>,
    /// Minimum acceptable quality per user, in dB.
    pub min_quality: Vec<f64>,
}

impl QualityProfile {
    pub fn new(
        alpha: Vec<f64>,
        beta: Vec<f64>,
        weights: Vec<f64>,
        min_quality: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let k = alpha.len();
        for (name, v) in [("beta", &beta), ("weights", &weights), ("min_quality", &min_quality)] {
            if v.len() != k {
                return Err(ModelError::InvalidParameter(format!(
                    "{name} has length {}, expected {k}",
                    v.len()
                )));
            }
        }
        if alpha.iter().any(|&a| !(a > 0.0)) {
            return Err(ModelError::InvalidParameter("alpha must be > 0".into()));
        }
        if weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(ModelError::InvalidParameter(
                "weights must lie in [0, 1]".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ModelError::InvalidParameter(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self { alpha, beta, weights, min_quality })
    }

    /// Builds a profile from preset names with uniform weights and zero
    /// quality floors.
    pub fn from_presets(names: &[&str]) -> Result<Self, ModelError> {
        let k = names.len();
        let mut alpha = Vec::with_capacity(k);
        let mut beta = Vec::with_capacity(k);
        for name in names {
            let preset = video_preset(name).ok_or_else(|| {
                ModelError::InvalidParameter(format!("unknown video preset: {name}"))
            })?;
            alpha.push(preset.alpha);
            beta.push(preset.beta);
        }
        Self::new(alpha, beta, vec![1.0 / k as f64; k], vec![0.0; k])
    }

    pub fn users(&self) -> usize {
        self.alpha.len()
    }
}

/// One draw of the K x K channel power gains.
///
/// `gains` is stored row-major: entry `(i, k)` is the power gain from
/// transmit stream `i` to user `k`. The flattened layout doubles as the
/// network input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    users: usize,
    gains: Vec<f64>,
    /// RNG seed that produced this draw (0 for hand-built channels).
    pub seed: u64,
}

impl ChannelRealization {
    pub fn new(users: usize, gains: Vec<f64>, seed: u64) -> Result<Self, ModelError> {
        if gains.len() != users * users {
            return Err(ModelError::DimensionMismatch {
                expected: users * users,
                actual: gains.len(),
            });
        }
        if gains.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(ModelError::InvalidParameter(
                "channel gains must be finite and >= 0".into(),
            ));
        }
        for k in 0..users {
            if !(gains[k * users + k] > 0.0) {
                return Err(ModelError::InvalidParameter(format!(
                    "direct gain for user {k} must be > 0"
                )));
            }
        }
        Ok(Self { users, gains, seed })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    /// Power gain from transmit stream `i` to user `k`.
    pub fn gain(&self, i: usize, k: usize) -> f64 {
        self.gains[i * self.users + k]
    }

    /// Direct gain of user `k`.
    pub fn direct_gain(&self, k: usize) -> f64 {
        self.gain(k, k)
    }

    /// Row-major flattened gains, the network input layout.
    pub fn flat(&self) -> &[f64] {
        &self.gains
    }
}

fn check_dims(params: &SystemParams, channel: &ChannelRealization, len: usize) -> Result<(), ModelError> {
    if channel.users() != params.users {
        return Err(ModelError::DimensionMismatch {
            expected: params.users,
            actual: channel.users(),
        });
    }
    if len != params.users {
        return Err(ModelError::DimensionMismatch {
            expected: params.users,
            actual: len,
        });
    }
    Ok(())
}

/// Achievable rate of every user under the power vector, in bit/s.
///
/// `rate_k = c1 * B * log2(1 + P_k g_kk / (c2 * (N0 B + sum_{i != k} P_i g_ik)))`.
/// A user with zero power gets exactly zero rate.
pub fn rates(
    params: &SystemParams,
    channel: &ChannelRealization,
    power: &[f64],
) -> Result<Vec<f64>, ModelError> {
    check_dims(params, channel, power.len())?;
    let k_users = params.users;
    let noise = params.noise_power();
    let mut out = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let mut interference = 0.0;
        for i in 0..k_users {
            if i != k {
                interference += power[i] * channel.gain(i, k);
            }
        }
        let sinr = power[k] * channel.direct_gain(k) / (params.snr_gap * (noise + interference));
        out.push(params.rate_adjustment * params.bandwidth_hz * (1.0 + sinr).log2());
    }
    Ok(out)
}

/// Quality of a single user at `rate_bps`, or `None` below the rate floor.
pub fn user_quality(alpha: f64, beta: f64, rate_bps: f64) -> Option<f64> {
    if rate_bps < RATE_FLOOR {
        None
    } else {
        Some(alpha * (rate_bps / BITS_PER_KBIT).ln() + beta)
    }
}

/// Per-user quality in dB; `None` marks a user whose rate is below the floor.
pub fn quality(profile: &QualityProfile, rates_bps: &[f64]) -> Result<Vec<Option<f64>>, ModelError> {
    if rates_bps.len() != profile.users() {
        return Err(ModelError::DimensionMismatch {
            expected: profile.users(),
            actual: rates_bps.len(),
        });
    }
    Ok(rates_bps
        .iter()
        .zip(profile.alpha.iter().zip(&profile.beta))
        .map(|(&r, (&a, &b))| user_quality(a, b, r))
        .collect())
}

/// Weighted sum quality in dB — the objective of the power control problem.
/// Any user below the rate floor makes the objective undefined.
pub fn weighted_sum_quality(profile: &QualityProfile, rates_bps: &[f64]) -> Result<f64, ModelError> {
    let per_user = quality(profile, rates_bps)?;
    let mut total = 0.0;
    for (user, (q, &w)) in per_user.iter().zip(&profile.weights).enumerate() {
        match q {
            Some(q) => total += w * q,
            None => return Err(ModelError::QualityUndefined { user }),
        }
    }
    Ok(total)
}

/// Weighted sum quality with every rate clamped up to the floor first.
///
/// Always defined; used for reporting metrics of allocations that may starve
/// a user entirely. The clamp imposes a large (finite) quality penalty.
pub fn weighted_sum_quality_floored(profile: &QualityProfile, rates_bps: &[f64]) -> f64 {
    rates_bps
        .iter()
        .zip(profile.alpha.iter().zip(profile.beta.iter().zip(&profile.weights)))
        .map(|(&r, (&a, (&b, &w)))| {
            w * (a * (r.max(RATE_FLOOR) / BITS_PER_KBIT).ln() + b)
        })
        .sum()
}

/// Minimum rate per user (bit/s) that meets its quality floor:
/// `r_min_k = exp((q_min_k - beta_k) / alpha_k)` kbit/s.
pub fn min_rate_targets(profile: &QualityProfile) -> Vec<f64> {
    profile
        .min_quality
        .iter()
        .zip(profile.alpha.iter().zip(&profile.beta))
        .map(|(&q_min, (&a, &b))| ((q_min - b) / a).exp() * BITS_PER_KBIT)
        .collect()
}
