//! Global maximization of the weighted sum quality by polyblock outer
//! approximation.
//!
//! The objective is strictly increasing in the rate vector, the achievable
//! region under the power budget is downward closed, and the quality floors
//! carve an upward-closed region out of it. A shrinking union of boxes
//! (polyblock) encloses that intersection: each round the most promising box
//! corner is projected onto the achievable boundary along its ray, the
//! projection becomes an incumbent candidate, and the corner is split into
//! one child per coordinate. The best corner value upper-bounds the optimum,
//! so the incumbent/corner gap certifies epsilon-optimality at termination.

use crate::feasibility::{max_scale_on_ray, min_power_for_rates, Infeasible};
use crate::model::{
    min_rate_targets, rates, weighted_sum_quality, ChannelRealization, QualityProfile,
    SystemParams, RATE_FLOOR,
};

/// Relative tolerance for the dominated-corner pruning test; corners that are
/// numerically equal would otherwise accumulate.
const DOMINATION_TOL: f64 = 1e-9;

/// Stopping controls for [`solve`].
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Terminate once the bound gap drops below this (dB).
    pub epsilon: f64,
    /// Give up when the corner set grows past this.
    pub vertex_cap: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { epsilon: 1e-3, vertex_cap: 1_000_000 }
    }
}

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Gap below epsilon; the incumbent is epsilon-optimal.
    Optimal,
    /// No achievable rate vector satisfies every quality floor.
    Infeasible,
    /// Corner set exceeded the cap; the incumbent (if any) is a lower bound.
    VertexCapExceeded,
}

/// One bound snapshot. Row 0 is the initial state; row `i` follows the
/// `i`-th projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Best certified objective so far (dB).
    pub lower: f64,
    /// Best remaining corner value (dB).
    pub upper: f64,
    pub vertex_count: usize,
}

/// Result of a solve: the optimal rates, the minimal power achieving them,
/// and the per-iteration bound trace.
#[derive(Debug, Clone)]
pub struct MoSolution {
    pub status: SolveStatus,
    /// Optimal rate vector in bit/s (empty if no incumbent was found).
    pub rates: Vec<f64>,
    /// Minimal power vector achieving `rates`, in W.
    pub power: Vec<f64>,
    /// Objective value at the incumbent, in dB.
    pub objective: f64,
    /// Number of projections performed.
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

impl MoSolution {
    /// Writes the bound trace as CSV: `iteration,lower,upper,vertex_count`.
    pub fn write_trace_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,lower,upper,vertex_count")?;
        for row in &self.trace {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{}",
                row.iteration, row.lower, row.upper, row.vertex_count
            )?;
        }
        Ok(())
    }
}

/// Corner of the smallest box enclosing the achievable region: per user, the
/// interference-free rate at full budget. Componentwise upper bound on any
/// achievable rate vector.
pub fn initial_box(params: &SystemParams, channel: &ChannelRealization) -> Vec<f64> {
    let noise = params.noise_power();
    (0..params.users)
        .map(|k| {
            let sinr = params.power_budget * channel.direct_gain(k) / (params.snr_gap * noise);
            params.rate_adjustment * params.bandwidth_hz * (1.0 + sinr).log2()
        })
        .collect()
}

/// Minimal power for an achievable rate vector, with the round trip checked.
/// Infeasibility here indicates a solver bug upstream.
pub fn recover_power(
    params: &SystemParams,
    channel: &ChannelRealization,
    targets: &[f64],
) -> Result<Vec<f64>, Infeasible> {
    let power = min_power_for_rates(params, channel, targets)?;
    let achieved = rates(params, channel, &power).expect("dimensions already checked");
    for (k, (&got, &want)) in achieved.iter().zip(targets).enumerate() {
        let rel = (got - want).abs() / want.abs().max(1.0);
        assert!(
            rel < 1e-8,
            "power recovery round trip failed for user {k}: {got} vs {want}"
        );
    }
    Ok(power)
}

struct Corner {
    r: Vec<f64>,
    phi: f64,
}

/// `candidate` adds nothing if some `other` corner already covers its box.
fn dominated(candidate: &[f64], other: &[f64]) -> bool {
    candidate
        .iter()
        .zip(other)
        .all(|(&c, &u)| c <= u + DOMINATION_TOL * u.abs().max(1.0))
}

/// Runs the outer approximation to `options.epsilon` accuracy.
pub fn solve(
    params: &SystemParams,
    profile: &QualityProfile,
    channel: &ChannelRealization,
    options: &SolverOptions,
) -> MoSolution {
    assert!(options.epsilon > 0.0, "epsilon must be positive");
    assert_eq!(params.users, profile.users(), "profile dimension mismatch");
    assert_eq!(params.users, channel.users(), "channel dimension mismatch");
    let k_users = params.users;

    let r_min = min_rate_targets(profile);
    // Corners below either the quality floors or the rate floor bound no
    // point worth keeping; the objective is undefined below the rate floor.
    let eff_min: Vec<f64> = r_min.iter().map(|&r| r.max(RATE_FLOOR)).collect();

    let corner = initial_box(params, channel);
    let infeasible = |trace: Vec<TraceRow>, iterations: usize| MoSolution {
        status: SolveStatus::Infeasible,
        rates: Vec::new(),
        power: Vec::new(),
        objective: 0.0,
        iterations,
        trace,
    };
    if corner.iter().zip(&r_min).any(|(&v, &r)| v < r) {
        return infeasible(Vec::new(), 0);
    }

    let phi = |r: &[f64]| weighted_sum_quality(profile, r);

    let mut corners: Vec<Corner> = Vec::new();
    if corner.iter().zip(&eff_min).all(|(&v, &m)| v >= m) {
        let phi0 = phi(&corner).expect("box corner is above the rate floor");
        corners.push(Corner { r: corner, phi: phi0 });
    }

    let mut best_q = 0.0_f64;
    let mut incumbent: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0usize;
    let mut trace = Vec::new();
    let status;

    loop {
        // Argmax corner; ties break toward the lowest index.
        let mut best_idx = None;
        let mut upper = f64::NEG_INFINITY;
        for (idx, c) in corners.iter().enumerate() {
            if c.phi > upper {
                upper = c.phi;
                best_idx = Some(idx);
            }
        }
        let snapshot_upper = if best_idx.is_some() { upper } else { best_q };
        trace.push(TraceRow {
            iteration: iterations,
            lower: best_q,
            upper: snapshot_upper,
            vertex_count: corners.len(),
        });

        let idx = match best_idx {
            // Every remaining corner was pruned away.
            None => {
                status = if incumbent.is_some() {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::Infeasible
                };
                break;
            }
            Some(idx) => idx,
        };
        if upper - best_q < options.epsilon {
            status = if incumbent.is_some() {
                SolveStatus::Optimal
            } else {
                SolveStatus::Infeasible
            };
            break;
        }
        if corners.len() > options.vertex_cap {
            status = SolveStatus::VertexCapExceeded;
            break;
        }

        iterations += 1;
        let parent = corners.swap_remove(idx);
        let lambda = max_scale_on_ray(params, channel, &parent.r);
        let z: Vec<f64> = parent.r.iter().map(|&v| lambda * v).collect();

        // Incumbent update: the projection must satisfy every quality floor
        // and have a defined objective.
        if z.iter().zip(&r_min).all(|(&zk, &rk)| zk >= rk) {
            if let Ok(q_z) = phi(&z) {
                if q_z > best_q {
                    let power = min_power_for_rates(params, channel, &z)
                        .expect("projection scale was verified feasible");
                    best_q = q_z;
                    incumbent = Some((z.clone(), power));
                }
            }
        }

        // Split the parent: one child per coordinate, lowered to the
        // projection in that coordinate only.
        let first_new = corners.len();
        for k in 0..k_users {
            if z[k] < eff_min[k] {
                continue;
            }
            let mut child = parent.r.clone();
            child[k] = z[k];
            if corners[..first_new].iter().any(|c| dominated(&child, &c.r))
                || corners[first_new..].iter().any(|c| dominated(&child, &c.r))
            {
                continue;
            }
            debug_assert!(child.iter().zip(&parent.r).all(|(&c, &p)| c <= p));
            let phi_child = phi(&child).expect("children stay above the rate floor");
            corners.push(Corner { r: child, phi: phi_child });
        }
    }

    match incumbent {
        Some((r_opt, p_opt)) => MoSolution {
            status,
            rates: r_opt,
            power: p_opt,
            objective: best_q,
            iterations,
            trace,
        },
        None => {
            let mut out = infeasible(trace, iterations);
            out.status = if status == SolveStatus::VertexCapExceeded {
                status
            } else {
                SolveStatus::Infeasible
            };
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{weighted_sum_quality_floored, QualityProfile};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn reference_params(users: usize) -> SystemParams {
        SystemParams::new(users, 1e5, 1e-6, 0.905, 1.34, users as f64).unwrap()
    }

    fn random_channel(users: usize, rng: &mut ChaCha8Rng) -> ChannelRealization {
        loop {
            let gains: Vec<f64> = (0..users * users)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            if let Ok(c) = ChannelRealization::new(users, gains, 0) {
                return c;
            }
        }
    }

    #[test]
    fn initial_box_single_user_value() {
        let params = SystemParams::new(1, 1e5, 1e-6, 0.905, 1.34, 3.0).unwrap();
        let channel = ChannelRealization::new(1, vec![1.0], 0).unwrap();
        let v = initial_box(&params, &channel);
        // 0.905e5 * log2(1 + 3 / 0.134), evaluated independently.
        assert!((v[0] - 411566.874798340109).abs() / 411566.874798340109 < 1e-12);
    }

    #[test]
    fn initial_box_dominates_every_achievable_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let params = reference_params(2);
        let channel = ChannelRealization::new(2, vec![1.3, 0.0, 0.0, 0.8], 0).unwrap();
        let corner = initial_box(&params, &channel);
        for _ in 0..10_000 {
            let raw: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let scale = rng.random::<f64>() * params.power_budget / total.max(1e-12);
            let p: Vec<f64> = raw.iter().map(|&x| x * scale).collect();
            let r = rates(&params, &channel, &p).unwrap();
            assert!(r.iter().zip(&corner).all(|(&ri, &vi)| ri <= vi + 1e-9));
        }
    }

    #[test]
    fn single_user_gets_full_power_in_one_iteration() {
        let params = reference_params(1);
        let channel = ChannelRealization::new(1, vec![1.0], 0).unwrap();
        let profile = QualityProfile::from_presets(&["akiyo"]).unwrap();
        let solution = solve(&params, &profile, &channel, &SolverOptions::default());
        assert_eq!(solution.status, SolveStatus::Optimal);
        assert_eq!(solution.iterations, 1);
        assert!((solution.power[0] - params.power_budget).abs() < 1e-6);
        let full = rates(&params, &channel, &[params.power_budget]).unwrap();
        let q_full = weighted_sum_quality(&profile, &full).unwrap();
        assert!((solution.objective - q_full).abs() < 1e-3);
    }

    #[test]
    fn recover_power_round_trips() {
        let params = reference_params(1);
        let channel = ChannelRealization::new(1, vec![1.0], 0).unwrap();
        // Zero targets need zero power.
        assert_eq!(recover_power(&params, &channel, &[0.0]).unwrap(), vec![0.0]);
        // The full-power corner rate recovers the full budget.
        let full = rates(&params, &channel, &[params.power_budget]).unwrap();
        let p = recover_power(&params, &channel, &full).unwrap();
        assert!((p[0] - params.power_budget).abs() / params.power_budget < 1e-6);
    }

    #[test]
    fn solved_instances_respect_the_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let params = reference_params(3);
        let profile = QualityProfile::from_presets(&["akiyo", "bus", "coastguard"]).unwrap();
        for _ in 0..5 {
            let channel = random_channel(3, &mut rng);
            let solution = solve(&params, &profile, &channel, &SolverOptions::default());
            assert_eq!(solution.status, SolveStatus::Optimal);
            let total: f64 = solution.power.iter().sum();
            assert!(total <= params.power_budget * (1.0 + 1e-9));
        }
    }

    #[test]
    fn two_user_solution_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let params = reference_params(2);
        let profile = QualityProfile::from_presets(&["akiyo", "bus"]).unwrap();
        let channel = random_channel(2, &mut rng);
        let solution = solve(&params, &profile, &channel, &SolverOptions::default());
        assert_eq!(solution.status, SolveStatus::Optimal);

        // Brute-force oracle: dense power grid over the budget simplex.
        let n = 200;
        let step = params.power_budget / (n - 1) as f64;
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let p = [i as f64 * step, j as f64 * step];
                if p[0] + p[1] > params.power_budget * (1.0 + 1e-12) {
                    continue;
                }
                let r = rates(&params, &channel, &p).unwrap();
                best = best.max(weighted_sum_quality_floored(&profile, &r));
            }
        }
        assert!(
            (solution.objective - best).abs() <= 0.05,
            "solver {} vs grid {}",
            solution.objective,
            best
        );
    }

    #[test]
    fn bounds_sandwich_the_incumbent() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let params = reference_params(3);
        let profile = QualityProfile::from_presets(&["akiyo", "bus", "coastguard"]).unwrap();
        let options = SolverOptions::default();
        for _ in 0..5 {
            let channel = random_channel(3, &mut rng);
            let solution = solve(&params, &profile, &channel, &options);
            assert_eq!(solution.status, SolveStatus::Optimal);
            let trace = &solution.trace;
            assert!(!trace.is_empty());
            for pair in trace.windows(2) {
                assert!(pair[1].lower >= pair[0].lower, "lower bound regressed");
                assert!(pair[1].upper <= pair[0].upper + 1e-9, "upper bound rose");
            }
            for row in trace {
                assert!(row.lower <= row.upper + 1e-9);
            }
            let last = trace.last().unwrap();
            assert!(last.upper - last.lower < options.epsilon);
        }
    }

    #[test]
    fn active_quality_floors_are_honored() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let params = reference_params(2);
        let base = QualityProfile::from_presets(&["akiyo", "bus"]).unwrap();
        for _ in 0..10 {
            let channel = random_channel(2, &mut rng);
            // Floors set just below the unconstrained optimum keep the
            // instance feasible but bind the weaker user.
            let unconstrained = solve(&params, &base, &channel, &SolverOptions::default());
            assert_eq!(unconstrained.status, SolveStatus::Optimal);
            let q = crate::model::quality(&base, &unconstrained.rates).unwrap();
            let floors: Vec<f64> = q.iter().map(|q| q.unwrap() - 0.5).collect();
            let profile = QualityProfile::new(
                base.alpha.clone(),
                base.beta.clone(),
                base.weights.clone(),
                floors.clone(),
            )
            .unwrap();
            let constrained = solve(&params, &profile, &channel, &SolverOptions::default());
            assert_eq!(constrained.status, SolveStatus::Optimal);
            let q = crate::model::quality(&profile, &constrained.rates).unwrap();
            for k in 0..2 {
                assert!(
                    q[k].unwrap() >= floors[k] - 1e-9,
                    "user {k} quality {} below floor {}",
                    q[k].unwrap(),
                    floors[k]
                );
            }
        }
    }

    #[test]
    fn unreachable_quality_floor_is_infeasible() {
        let params = reference_params(2);
        let channel = ChannelRealization::new(2, vec![1.0, 0.1, 0.1, 1.0], 0).unwrap();
        let base = QualityProfile::from_presets(&["akiyo", "bus"]).unwrap();
        let profile = QualityProfile::new(
            base.alpha.clone(),
            base.beta.clone(),
            base.weights.clone(),
            vec![80.0, 80.0],
        )
        .unwrap();
        let solution = solve(&params, &profile, &channel, &SolverOptions::default());
        assert_eq!(solution.status, SolveStatus::Infeasible);
        assert!(solution.rates.is_empty());
    }

    #[test]
    fn tiny_vertex_cap_reports_cap_exceeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let params = reference_params(3);
        let profile = QualityProfile::from_presets(&["akiyo", "bus", "coastguard"]).unwrap();
        let channel = random_channel(3, &mut rng);
        let options = SolverOptions { epsilon: 1e-9, vertex_cap: 2 };
        let solution = solve(&params, &profile, &channel, &options);
        assert_eq!(solution.status, SolveStatus::VertexCapExceeded);
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let params = reference_params(1);
        let channel = ChannelRealization::new(1, vec![1.0], 0).unwrap();
        let profile = QualityProfile::from_presets(&["akiyo"]).unwrap();
        let solution = solve(&params, &profile, &channel, &SolverOptions::default());
        let mut buf = Vec::new();
        solution.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iteration,lower,upper,vertex_count"));
        assert_eq!(lines.count(), solution.trace.len());
    }
}
