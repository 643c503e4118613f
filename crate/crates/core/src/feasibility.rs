//! Feasibility oracle for rate targets.
//!
//! A rate vector is achievable iff the coupled SINR conditions admit a
//! nonnegative power vector within the budget. Inverting the rate formula
//! turns the question into the linear fixed point `P = A P + b` with a
//! nonnegative matrix `A`; the componentwise-minimal solution, when it
//! exists, is the unique solution of `(I - A) P = b`. Nonnegativity of that
//! solution certifies the spectral radius of `A` is below one, so a single
//! direct solve doubles as the spectral feasibility test.

use crate::model::{ChannelRealization, SystemParams};

/// Why a rate target cannot be met.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Infeasible {
    /// The interference coupling admits no nonnegative power solution.
    Spectral,
    /// A power solution exists but exceeds the total budget.
    Budget,
}

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasible::Spectral => write!(f, "no nonnegative power solution"),
            Infeasible::Budget => write!(f, "power budget exceeded"),
        }
    }
}

impl std::error::Error for Infeasible {}

/// Pivot threshold below which the elimination declares the system singular.
const PIVOT_TOL: f64 = 1e-12;
/// Slack on the nonnegativity check of the solved powers.
const NEG_TOL: f64 = 1e-12;
/// Relative slack on the budget check.
const BUDGET_TOL: f64 = 1e-12;
/// Relative bracket width at which the ray bisection stops.
const BISECT_TOL: f64 = 1e-8;
const BISECT_MAX_ITERS: usize = 100;

/// Effective SINR each user needs (before the gap factor) to reach its rate
/// target: `t_k = 2^(r_k / (c1 B)) - 1`.
pub fn sinr_targets(params: &SystemParams, targets: &[f64]) -> Vec<f64> {
    let scale = params.rate_adjustment * params.bandwidth_hz;
    targets.iter().map(|&r| (r / scale).exp2() - 1.0).collect()
}

/// Componentwise-minimal power vector achieving `targets` (bit/s), or the
/// reason none exists within the budget.
///
/// Solves `(I - A) P = b` by direct elimination where
/// `A[k][i] = t_k c2 g_ik / g_kk` (zero diagonal) and
/// `b[k] = t_k c2 N0 B / g_kk`.
pub fn min_power_for_rates(
    params: &SystemParams,
    channel: &ChannelRealization,
    targets: &[f64],
) -> Result<Vec<f64>, Infeasible> {
    let k_users = params.users;
    debug_assert_eq!(targets.len(), k_users);
    debug_assert_eq!(channel.users(), k_users);

    let t = sinr_targets(params, targets);
    let noise = params.noise_power();

    // Assemble I - A and b.
    let mut m = vec![0.0; k_users * k_users];
    let mut b = vec![0.0; k_users];
    for k in 0..k_users {
        let coeff = t[k] * params.snr_gap / channel.direct_gain(k);
        for i in 0..k_users {
            m[k * k_users + i] = if i == k {
                1.0
            } else {
                -coeff * channel.gain(i, k)
            };
        }
        b[k] = coeff * noise;
    }

    let mut p = solve_linear(&mut m, &mut b, k_users).ok_or(Infeasible::Spectral)?;
    if p.iter().any(|&x| x < -NEG_TOL || !x.is_finite()) {
        return Err(Infeasible::Spectral);
    }
    for x in &mut p {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    if total > params.power_budget * (1.0 + BUDGET_TOL) {
        return Err(Infeasible::Budget);
    }
    Ok(p)
}

/// Largest `lambda` in [0, 1] such that `lambda * direction` is an achievable
/// rate vector, located by bisection. The returned scale is always on the
/// feasible side of the bracket; `0` is a valid degenerate answer.
pub fn max_scale_on_ray(
    params: &SystemParams,
    channel: &ChannelRealization,
    direction: &[f64],
) -> f64 {
    let feasible = |lambda: f64| {
        let scaled: Vec<f64> = direction.iter().map(|&r| lambda * r).collect();
        min_power_for_rates(params, channel, &scaled).is_ok()
    };
    if feasible(1.0) {
        return 1.0;
    }
    // Invariant: lo feasible, hi infeasible.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..BISECT_MAX_ITERS {
        if hi - lo <= BISECT_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Gaussian elimination with partial pivoting on a row-major `n x n` system.
/// Returns `None` when a pivot falls below the singularity threshold.
fn solve_linear(m: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = m[col * n + col].abs();
        for row in col + 1..n {
            let a = m[row * n + col].abs();
            if a > pivot_abs {
                pivot_abs = a;
                pivot_row = row;
            }
        }
        if pivot_abs <= PIVOT_TOL {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                m.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
        }
        let pivot = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= factor * m[col * n + j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in row + 1..n {
            acc -= m[row * n + j] * x[j];
        }
        x[row] = acc / m[row * n + row];
    }
    Some(x)
}
