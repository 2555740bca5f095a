//! Fidelity-improving iteration for a single channel slot.
//!
//! One step maps the Kraus operators `s_i` of the current channel to
//! `s_i' = F̂ s_i` (so the Choi operator becomes `F̂ Ŝ F̂`), forms
//! `M = Σ_i s_i'† s_i'`, and renormalizes to `t_i = s_i' M^{-1/2}`. When `M`
//! is singular the pseudo-inverse is used and the result is trace
//! preserving only on the support of `M`. The objective `tr(F̂ Ŝ)` never
//! decreases under this step; for `dim_out = 1` it is the power method.

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::linalg::{frobenius, identity, psd_inv_sqrt, CMatrix, DEFAULT_CUTOFF};
use crate::objective::{evaluate_objective, quadratic_form, ObjectiveOperator};
use crate::random::{random_gaussian_matrix, rng_from_seed, SeedRng};
use crate::standard::{complete_to_tp, normalize};

/// Results with a larger TP defect are completed when requested.
const COMPLETION_TOL: f64 = 1e-12;

/// Relative size of objective differences treated as rounding noise.
const ROUNDING: f64 = 8.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    /// Convergence is declared once a step gains less than this.
    pub gain_threshold: f64,
    /// If positive, convergence also requires the Kraus operators to move
    /// less than this (Frobenius norm) in one step.
    pub change_threshold: f64,
    pub max_steps: usize,
    /// Relative eigenvalue cutoff for `M^{-1/2}`.
    pub pinv_cutoff: f64,
    /// Relative size of the random kick applied at a converged point.
    pub perturb_magnitude: f64,
    /// Number of kicks tried before accepting a fixed point.
    pub stabilization_attempts: usize,
    /// Complete a result that is trace preserving only on a subspace
    /// (singular `M`) to a channel; the objective cannot decrease.
    pub complete_support: bool,
    pub seed: u64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            gain_threshold: 1e-10,
            change_threshold: 0.0,
            max_steps: 10_000,
            pinv_cutoff: DEFAULT_CUTOFF,
            perturb_magnitude: 1e-3,
            stabilization_attempts: 3,
            complete_support: true,
            seed: 0,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain_threshold > 0.0) {
            return Err(Error::OutOfRange {
                name: "gain_threshold",
                value: self.gain_threshold,
                range: "> 0",
            });
        }
        if !(self.change_threshold >= 0.0) {
            return Err(Error::OutOfRange {
                name: "change_threshold",
                value: self.change_threshold,
                range: ">= 0",
            });
        }
        if !(self.perturb_magnitude >= 0.0) {
            return Err(Error::OutOfRange {
                name: "perturb_magnitude",
                value: self.perturb_magnitude,
                range: ">= 0",
            });
        }
        if self.max_steps == 0 {
            return Err(Error::OutOfRange {
                name: "max_steps",
                value: 0.0,
                range: ">= 1",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IterationStepReport {
    pub objective_before: f64,
    pub objective_after: f64,
    /// `M = Σ_i s_i'† s_i'` before normalization.
    pub normalization_m: CMatrix,
    pub m_rank: usize,
    /// `‖Σ t_i†t_i − I‖_F` of the returned channel.
    pub tp_defect_after: f64,
    /// `‖Σ t_i†t_i − P‖_F` with `P` the support projector of `M`.
    pub projector_defect_after: f64,
}

/// Performs one normalized step `S ↦ S₊`.
pub fn iteration_step(
    s: &Channel,
    f: &ObjectiveOperator,
    pinv_cutoff: f64,
) -> Result<(Channel, IterationStepReport)> {
    f.check_slot(s)?;
    let k = s.kraus_columns();
    let fk = f.apply_columns(&k);
    let objective_before = quadratic_form(&k, &fk);

    let lifted = Channel::from_kraus_columns(s.dim_in(), s.dim_out(), &fk)?;
    let m = lifted.normalization();
    let inv = psd_inv_sqrt(&m, pinv_cutoff).map_err(|e| match e {
        Error::ZeroMatrix => Error::ZeroMap,
        other => other,
    })?;
    let kraus = lifted
        .into_kraus()
        .into_iter()
        .map(|x| x * &inv.inv_sqrt)
        .collect();
    let next = Channel::new(s.dim_in(), s.dim_out(), kraus)?;

    let objective_after = evaluate_objective(f, &next)?;
    let norm = next.normalization();
    let report = IterationStepReport {
        objective_before,
        objective_after,
        m_rank: inv.rank,
        tp_defect_after: frobenius(&(&norm - identity(s.dim_in()))),
        projector_defect_after: frobenius(&(&norm - &inv.support_projector)),
        normalization_m: m,
    };
    Ok((next, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Gain fell below threshold and no stabilization was configured.
    Converged,
    MaxSteps,
    /// Converged again after the configured number of perturbations.
    StabilizedConverged,
}

/// Per-step entry of an [`OptimizationTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub objective_before: f64,
    pub objective_after: f64,
    pub m_rank: usize,
    pub tp_defect: f64,
    /// The step started from a freshly perturbed channel.
    pub perturbed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub steps: Vec<StepRecord>,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub stop_reason: StopReason,
    pub perturbations_used: usize,
    /// Best channel seen; not part of the JSON trace.
    #[serde(skip)]
    pub final_channel: Option<Channel>,
}

impl OptimizationTrace {
    pub fn final_channel(&self) -> &Channel {
        self.final_channel.as_ref().expect("set by optimize_channel")
    }

    /// Objective values after each step.
    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.objective_after)
    }
}

/// Iterates [`iteration_step`] until the gain drops below
/// `cfg.gain_threshold` or `cfg.max_steps` is reached.
///
/// At each convergence point up to `cfg.stabilization_attempts` random
/// perturbations are applied and the iteration resumes, so unstable fixed
/// points are escaped. The best channel seen is returned.
pub fn optimize_channel(
    f: &ObjectiveOperator,
    init: &Channel,
    cfg: &IterationConfig,
) -> Result<OptimizationTrace> {
    cfg.validate()?;
    f.check_slot(init)?;
    let mut rng = rng_from_seed(cfg.seed);
    let init = &normalize(init)?;

    let initial_objective = evaluate_objective(f, init)?;
    let mut best = (init.clone(), initial_objective);
    let mut peak = initial_objective;
    let mut current = init.clone();
    let mut steps = Vec::new();
    let mut perturbations_used = 0;
    let mut fresh_perturbation = false;
    let mut stop_reason = StopReason::MaxSteps;

    for step in 0..cfg.max_steps {
        let (next, report) = iteration_step(&current, f, cfg.pinv_cutoff)?;
        steps.push(StepRecord {
            step,
            objective_before: report.objective_before,
            objective_after: report.objective_after,
            m_rank: report.m_rank,
            tp_defect: report.tp_defect_after,
            perturbed: fresh_perturbation,
        });
        fresh_perturbation = false;
        let gain = report.objective_after - report.objective_before;
        let settled = cfg.change_threshold == 0.0
            || frobenius(&(next.kraus_columns() - current.kraus_columns())) < cfg.change_threshold;
        current = next;
        // ties within rounding go to the later iterate
        if report.objective_after >= peak - ROUNDING * peak.abs() {
            best = (current.clone(), report.objective_after);
            peak = peak.max(report.objective_after);
        }
        if gain < cfg.gain_threshold && settled {
            if perturbations_used < cfg.stabilization_attempts {
                perturbations_used += 1;
                current = perturb(&current, cfg.perturb_magnitude, &mut rng)?;
                fresh_perturbation = true;
                continue;
            }
            stop_reason = if perturbations_used > 0 {
                StopReason::StabilizedConverged
            } else {
                StopReason::Converged
            };
            break;
        }
    }

    if cfg.complete_support && best.0.tp_defect() > COMPLETION_TOL {
        // An ill-conditioned M leaves rounding overshoot; after one step M is
        // close to a projector, so a second pass removes it and only the
        // deficit off the support remains.
        let inv = psd_inv_sqrt(&best.0.normalization(), cfg.pinv_cutoff)?;
        let kraus = best.0.kraus().iter().map(|k| k * &inv.inv_sqrt).collect();
        let renormalized = Channel::new(best.0.dim_in(), best.0.dim_out(), kraus)?;
        let completed = complete_to_tp(&renormalized, cfg.pinv_cutoff)?;
        let value = evaluate_objective(f, &completed)?;
        best = (completed, value);
    }

    Ok(OptimizationTrace {
        steps,
        initial_objective,
        final_objective: best.1,
        stop_reason,
        perturbations_used,
        final_channel: Some(best.0),
    })
}

/// Adds complex Gaussian noise to every Kraus entry, with total size
/// `magnitude · ‖(s_1, …, s_n)‖_F` in expectation, then renormalizes by
/// `M^{-1/2}`.
pub fn perturb(s: &Channel, magnitude: f64, rng: &mut SeedRng) -> Result<Channel> {
    if !(magnitude >= 0.0) {
        return Err(Error::OutOfRange {
            name: "magnitude",
            value: magnitude,
            range: ">= 0",
        });
    }
    if magnitude == 0.0 {
        return normalize(s);
    }
    let k = s.kraus_columns();
    let entry_scale = magnitude * frobenius(&k) / ((k.nrows() * k.ncols()) as f64).sqrt();
    let noise = random_gaussian_matrix(k.nrows(), k.ncols(), rng).scale(entry_scale);
    let noisy = k + noise;
    normalize(&Channel::from_kraus_columns(s.dim_in(), s.dim_out(), &noisy)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{choi_of, Channel};
    use crate::linalg::{c, hermitian_eigensystem, vec_row_major};
    use crate::random::random_psd;
    use crate::standard::random_kraus_channel;

    fn random_objective(din: usize, dout: usize, rank: usize, rng: &mut SeedRng) -> ObjectiveOperator {
        let n = din * dout;
        ObjectiveOperator::new(din, dout, random_psd(n, rank.min(n), rng)).unwrap()
    }

    #[test]
    fn identity_is_fixed_point_of_fidelity_objective() {
        let f = ObjectiveOperator::channel_fidelity(2);
        let (next, rep) = iteration_step(&Channel::identity(2), &f, DEFAULT_CUTOFF).unwrap();
        assert!((rep.objective_after - 1.0).abs() < 1e-14);
        assert!(frobenius(&(&next.kraus()[0] - identity(2))) < 1e-14);
        assert_eq!(rep.m_rank, 2);
    }

    #[test]
    fn step_never_decreases_objective() {
        let mut rng = rng_from_seed(41);
        for trial in 0..60 {
            let din = 1 + trial % 4;
            let dout = 1 + (trial / 4) % 4;
            let kc = 1 + trial % 6;
            if kc * dout < din {
                continue;
            }
            let f = random_objective(din, dout, 1 + trial % 5, &mut rng);
            let mut s = random_kraus_channel(din, dout, kc, &mut rng).unwrap();
            for _ in 0..5 {
                let (next, rep) = iteration_step(&s, &f, DEFAULT_CUTOFF).unwrap();
                assert!(rep.objective_after >= rep.objective_before - 1e-12);
                assert!(next.kraus_count() <= s.kraus_count());
                assert!(rep.projector_defect_after <= 1e-10);
                if rep.m_rank == din {
                    assert!(rep.tp_defect_after <= 1e-10);
                }
                s = next;
            }
        }
    }

    #[test]
    fn single_row_slot_is_power_method() {
        let mut rng = rng_from_seed(42);
        let din = 4;
        let f = random_objective(din, 1, 4, &mut rng);
        let phi = random_gaussian_matrix(1, din, &mut rng);
        let s = Channel::new(din, 1, vec![phi.clone()]).unwrap();
        let (next, rep) = iteration_step(&s, &f, DEFAULT_CUTOFF).unwrap();
        let v = f.matrix() * vec_row_major(&phi);
        let expected = v.scale(1.0 / frobenius(&v));
        let got = vec_row_major(&next.kraus()[0]);
        assert!(frobenius(&(got - expected)) <= 1e-12);
        assert_eq!(rep.m_rank, 1);
        // normalized to a rank-one projector, not the identity
        assert!(rep.projector_defect_after <= 1e-12);
        assert!(rep.tp_defect_after > 0.5);
    }

    #[test]
    fn zero_map_is_reported() {
        // F̂ = |I⟩⟩⟨⟨I|/4 annihilates traceless Kraus operators
        let f = ObjectiveOperator::channel_fidelity(2);
        let x = Channel::unitary(crate::linalg::pauli_x()).unwrap();
        assert_eq!(iteration_step(&x, &f, DEFAULT_CUTOFF).unwrap_err(), Error::ZeroMap);
    }

    #[test]
    fn optimize_fidelity_objective_reaches_identity() {
        let f = ObjectiveOperator::channel_fidelity(2);
        let init = random_kraus_channel(2, 2, 4, &mut rng_from_seed(43)).unwrap();
        let trace = optimize_channel(&f, &init, &IterationConfig::default()).unwrap();
        assert!(trace.final_objective >= 1.0 - 1e-9, "{}", trace.final_objective);
        let id_choi = choi_of(&Channel::identity(2));
        let got = choi_of(trace.final_channel());
        assert!(frobenius(&(got.matrix() - id_choi.matrix())) <= 1e-4);
        assert!(trace.final_channel().tp_defect() <= 1e-10);
        assert_eq!(trace.stop_reason, StopReason::StabilizedConverged);
        assert_eq!(trace.perturbations_used, 3);
    }

    #[test]
    fn trace_is_monotone_between_perturbations() {
        let mut rng = rng_from_seed(44);
        let f = random_objective(2, 3, 3, &mut rng);
        let init = random_kraus_channel(2, 3, 6, &mut rng).unwrap();
        let trace = optimize_channel(&f, &init, &IterationConfig::default()).unwrap();
        for w in trace.steps.windows(2) {
            if !w[1].perturbed {
                assert!(w[1].objective_after >= w[0].objective_after - 1e-12);
            }
        }
        assert!(trace.final_objective >= trace.initial_objective - 1e-12);
    }

    #[test]
    fn power_method_limit() {
        // dim_out = 1: maximum of ⟨φ|F̂|φ⟩ over unit φ is the top eigenvalue
        let mut f = CMatrix::zeros(2, 2);
        f[(0, 0)] = c(2.0, 0.0);
        f[(1, 1)] = c(1.0, 0.0);
        let f = ObjectiveOperator::new(2, 1, f).unwrap();
        let init = Channel::new(2, 1, vec![crate::linalg::from_rows(1, 2, &[c(0.3, 0.1), c(0.8, -0.2)])]).unwrap();
        let cfg = IterationConfig {
            gain_threshold: 1e-15,
            stabilization_attempts: 0,
            complete_support: false,
            ..IterationConfig::default()
        };
        let trace = optimize_channel(&f, &init, &cfg).unwrap();
        assert!((trace.final_objective - 2.0).abs() <= 1e-9);
        assert_eq!(trace.stop_reason, StopReason::Converged);
    }

    #[test]
    fn perturb_examples() {
        let mut rng = rng_from_seed(45);
        let ch = random_kraus_channel(2, 2, 3, &mut rng).unwrap();
        let same = perturb(&ch, 0.0, &mut rng).unwrap();
        assert!(frobenius(&(choi_of(&same).matrix() - choi_of(&ch).matrix())) <= 1e-12);

        let id = Channel::identity(2);
        let kicked = perturb(&id, 1e-3, &mut rng).unwrap();
        assert!(frobenius(&(choi_of(&kicked).matrix() - choi_of(&id).matrix())) <= 0.1);
        assert!(kicked.tp_defect() <= 1e-10);
        assert!(perturb(&id, -1.0, &mut rng).is_err());
    }

    #[test]
    fn perturbation_escapes_unstable_fixed_point() {
        // dim_out = 1 slot whose F̂ has eigenvalues 3 > 1: the second
        // eigenvector is a fixed point of the step but not a maximum.
        let mut f = CMatrix::zeros(2, 2);
        f[(0, 0)] = c(3.0, 0.0);
        f[(1, 1)] = c(1.0, 0.0);
        let f = ObjectiveOperator::new(2, 1, f).unwrap();
        let second = Channel::new(2, 1, vec![crate::linalg::from_rows(1, 2, &[c(0., 0.), c(1., 0.)])]).unwrap();
        let (next, rep) = iteration_step(&second, &f, DEFAULT_CUTOFF).unwrap();
        assert!((rep.objective_after - 1.0).abs() < 1e-14);
        assert!(frobenius(&(&next.kraus()[0] - &second.kraus()[0])) < 1e-14);

        let frozen = IterationConfig {
            stabilization_attempts: 0,
            complete_support: false,
            ..IterationConfig::default()
        };
        let stuck = optimize_channel(&f, &second, &frozen).unwrap();
        assert!((stuck.final_objective - 1.0).abs() < 1e-12);

        let escaped = optimize_channel(&f, &second, &IterationConfig::default()).unwrap();
        assert!(escaped.final_objective > 3.0 - 1e-6, "{}", escaped.final_objective);
        assert!(escaped.steps.iter().any(|s| s.perturbed));
    }

    #[test]
    fn full_kraus_count_reaches_brute_force_optimum() {
        // fidelity with a fixed unitary u: the unique optimum is u itself
        let u = crate::linalg::from_rows(
            2,
            2,
            &[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0)],
        );
        let g = vec_row_major(&u).scale(0.5);
        let f = ObjectiveOperator::from_factor(2, 2, g).unwrap();
        let init = random_kraus_channel(2, 2, 4, &mut rng_from_seed(46)).unwrap();
        let trace = optimize_channel(&f, &init, &IterationConfig::default()).unwrap();
        assert!((trace.final_objective - 1.0).abs() <= 1e-6);
        let e = hermitian_eigensystem(choi_of(trace.final_channel()).matrix()).unwrap();
        assert!(e.eigenvalues[1] <= 1e-4 * e.eigenvalues[0]);
    }
}
