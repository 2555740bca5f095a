//! Alternating encoder/decoder optimization and code diagnostics.
//!
//! A restart fixes the encoder and optimizes the decoder, then fixes the
//! decoder and optimizes the encoder, and repeats until a full round gains
//! less than `round_gain_threshold`. Both halves use
//! [`optimize_channel`](crate::iterate::optimize_channel), which never
//! returns a worse channel than its starting point, so the fidelity of a
//! restart is nondecreasing half-round by half-round.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{chain_fidelity, choi_of, Channel, CpMap};
use crate::codes::{pauli_string, trivial_code, CodePair, Pauli};
use crate::error::{Error, Result};
use crate::iterate::{optimize_channel, IterationConfig, OptimizationTrace};
use crate::linalg::{frobenius, hermitian_eigensystem, identity, CMatrix};
use crate::objective::{decoder_objective, encoder_objective, middle_objective};
use crate::random::{derive_seed, rng_from_seed};
use crate::standard::random_kraus_channel;

/// Noise channels must be trace preserving to this accuracy.
pub const NOISE_TP_TOL: f64 = 1e-8;

/// Number of Kraus operators used to initialize a random channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KrausCount {
    /// `dim_in · dim_out`, enough to represent any channel of the slot.
    Full,
    #[serde(untagged)]
    Fixed(usize),
}

impl KrausCount {
    pub fn resolve(self, dim_in: usize, dim_out: usize) -> usize {
        match self {
            KrausCount::Full => dim_in * dim_out,
            // a TP channel needs at least ⌈dim_in / dim_out⌉ Kraus operators
            KrausCount::Fixed(n) => n.max(dim_in.div_ceil(dim_out)),
        }
    }
}

impl std::str::FromStr for KrausCount {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(KrausCount::Full);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(KrausCount::Fixed(n)),
            _ => Err(format!("expected \"full\" or a positive integer, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeesawConfig {
    pub inner: IterationConfig,
    /// One round optimizes the decoder and then the encoder.
    pub max_rounds: usize,
    pub round_gain_threshold: f64,
    pub restarts: usize,
    pub encoder_kraus_count: KrausCount,
    pub decoder_kraus_count: KrausCount,
    pub seed: u64,
    /// Start one restart from the do-nothing code when the noise acts on qubits.
    pub seed_trivial: bool,
    pub keep_traces: bool,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            inner: IterationConfig::default(),
            max_rounds: 100,
            round_gain_threshold: 1e-10,
            restarts: 5,
            encoder_kraus_count: KrausCount::Full,
            decoder_kraus_count: KrausCount::Full,
            seed: 0,
            seed_trivial: true,
            keep_traces: false,
        }
    }
}

impl SeesawConfig {
    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        if self.restarts == 0 {
            return Err(Error::OutOfRange {
                name: "restarts",
                value: 0.0,
                range: ">= 1",
            });
        }
        if self.max_rounds == 0 {
            return Err(Error::OutOfRange {
                name: "max_rounds",
                value: 0.0,
                range: ">= 1",
            });
        }
        if !(self.round_gain_threshold > 0.0) {
            return Err(Error::OutOfRange {
                name: "round_gain_threshold",
                value: self.round_gain_threshold,
                range: "> 0",
            });
        }
        Ok(())
    }
}

/// Where a restart's initial code came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    Trivial,
    Provided(usize),
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartReport {
    pub start: StartKind,
    pub initial_fidelity: f64,
    pub fidelity: f64,
    pub rounds: usize,
    /// Fidelity before the first half-round and after every half-round.
    pub half_round_fidelities: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeSearchResult {
    pub best: CodePair,
    pub fidelity: f64,
    pub per_restart_fidelities: Vec<f64>,
    /// Rounds used by the winning restart.
    pub rounds_used: usize,
    pub encoder_isometry_defect: f64,
    pub restarts: Vec<RestartReport>,
    /// Inner optimizer traces of the winning restart, in half-round order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traces: Option<Vec<OptimizationTrace>>,
}

/// Checks `T*(I) = I`, i.e. that the noise map is trace preserving.
pub fn noise_tp_defect(t: &dyn CpMap) -> Result<f64> {
    let d = t.dim_in();
    let unit = t.apply_adjoint(&identity(t.dim_out()))?;
    Ok(frobenius(&(unit - identity(d))))
}

/// Searches for the encoder/decoder pair maximizing `F_C(D ∘ T ∘ E)` with
/// logical dimension `d0`.
pub fn optimize_code(t: &dyn CpMap, d0: usize, cfg: &SeesawConfig) -> Result<CodeSearchResult> {
    optimize_code_from(t, d0, cfg, &[])
}

/// Like [`optimize_code`], with extra restarts seeded from given codes.
///
/// Restarts run in the order: do-nothing code (if enabled and the noise acts
/// on `n` qubits with `d0 = 2`), then `starts`, then random draws until
/// `cfg.restarts` is reached.
pub fn optimize_code_from(
    t: &dyn CpMap,
    d0: usize,
    cfg: &SeesawConfig,
    starts: &[CodePair],
) -> Result<CodeSearchResult> {
    cfg.validate()?;
    if d0 < 2 {
        return Err(Error::OutOfRange {
            name: "d0",
            value: d0 as f64,
            range: ">= 2",
        });
    }
    let defect = noise_tp_defect(t)?;
    if defect > NOISE_TP_TOL {
        return Err(Error::OutOfRange {
            name: "noise tp_defect",
            value: defect,
            range: "<= 1e-8",
        });
    }
    let (d1, d2) = (t.dim_in(), t.dim_out());

    let mut seeded: Vec<(StartKind, CodePair)> = Vec::new();
    if cfg.seed_trivial && d0 == 2 && d1 == d2 && d1.is_power_of_two() && d1 >= 2 {
        seeded.push((StartKind::Trivial, trivial_code(d1.trailing_zeros() as usize)?));
    }
    for (i, code) in starts.iter().enumerate() {
        code.check_noise_dims(d1, d2)?;
        if code.d0 != d0 {
            return Err(Error::DimMismatch {
                context: "seed code logical dimension",
                expected: d0,
                found: code.d0,
            });
        }
        seeded.push((StartKind::Provided(i), code.clone()));
    }
    let total = cfg.restarts.max(seeded.len());

    let mut reports: Vec<Restart> = (0..total)
        .into_par_iter()
        .map(|r| {
            let (kind, start) = match seeded.get(r) {
                Some((kind, code)) => (*kind, code.clone()),
                None => (StartKind::Random, random_code(d0, d1, d2, cfg, r)?),
            };
            run_restart(t, start, kind, cfg, r)
        })
        .collect::<Result<_>>()?;

    let (best_index, _) = reports
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bf), (i, (rep, _, _))| {
            if rep.fidelity > bf {
                (i, rep.fidelity)
            } else {
                (bi, bf)
            }
        });
    let best = reports[best_index].1.clone();
    let rounds_used = reports[best_index].0.rounds;
    let fidelity = reports[best_index].0.fidelity;
    let traces = reports[best_index].2.take();
    let encoder_isometry_defect = isometry_defect(&best.encoder)?;
    let restarts: Vec<RestartReport> = reports.into_iter().map(|(r, _, _)| r).collect();
    Ok(CodeSearchResult {
        per_restart_fidelities: restarts.iter().map(|r| r.fidelity).collect(),
        best,
        fidelity,
        rounds_used,
        encoder_isometry_defect,
        restarts,
        traces,
    })
}

type Restart = (RestartReport, CodePair, Option<Vec<OptimizationTrace>>);

fn random_code(d0: usize, d1: usize, d2: usize, cfg: &SeesawConfig, restart: usize) -> Result<CodePair> {
    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[restart as u64, 0]));
    let e = random_kraus_channel(d0, d1, cfg.encoder_kraus_count.resolve(d0, d1), &mut rng)?;
    let d = random_kraus_channel(d2, d0, cfg.decoder_kraus_count.resolve(d2, d0), &mut rng)?;
    CodePair::new(e, d)
}

fn run_restart(
    t: &dyn CpMap,
    start: CodePair,
    kind: StartKind,
    cfg: &SeesawConfig,
    restart: usize,
) -> Result<Restart> {
    let mut e = start.encoder;
    let mut d = start.decoder;
    let initial_fidelity = chain_fidelity(&[&e, t, &d])?;
    let mut fidelities = vec![initial_fidelity];
    let mut traces = cfg.keep_traces.then(Vec::new);
    let mut current = initial_fidelity;
    let mut rounds = 0;

    for round in 0..cfg.max_rounds {
        rounds = round + 1;
        let round_start = current;

        let inner = IterationConfig {
            seed: derive_seed(cfg.seed, &[restart as u64, 1, round as u64, 0]),
            ..cfg.inner
        };
        let trace = optimize_channel(&decoder_objective(&e, t)?, &d, &inner)?;
        d = trace.final_channel().clone();
        current = trace.final_objective;
        fidelities.push(current);
        if let Some(ts) = traces.as_mut() {
            ts.push(trace);
        }

        let inner = IterationConfig {
            seed: derive_seed(cfg.seed, &[restart as u64, 1, round as u64, 1]),
            ..cfg.inner
        };
        let trace = optimize_channel(&encoder_objective(&d, t)?, &e, &inner)?;
        e = trace.final_channel().clone();
        current = trace.final_objective;
        fidelities.push(current);
        if let Some(ts) = traces.as_mut() {
            ts.push(trace);
        }

        if current - round_start < cfg.round_gain_threshold {
            break;
        }
    }

    // recompute from the channels rather than trusting the objective value
    let fidelity = chain_fidelity(&[&e, t, &d])?;
    let report = RestartReport {
        start: kind,
        initial_fidelity,
        fidelity,
        rounds,
        half_round_fidelities: fidelities,
    };
    Ok((report, CodePair::new(e, d)?, traces))
}

/// Ratio of the second-largest to the largest Choi eigenvalue of `e`;
/// zero exactly when `e` has a single Kraus operator up to rescaling.
pub fn isometry_defect(e: &Channel) -> Result<f64> {
    if e.kraus_count() == 1 {
        if frobenius(&e.kraus()[0]) == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        return Ok(0.0);
    }
    let eig = hermitian_eigensystem(choi_of(e).matrix())?;
    let max = eig.max();
    if max <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok((eig.eigenvalues[1] / max).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticConfig {
    pub inner: IterationConfig,
    pub restarts: usize,
    pub kraus_count: KrausCount,
    /// `corrects_some_syndrome` holds when the maximum is at least `1 − tolerance`.
    pub tolerance: f64,
    /// When `d1 = d2`, add one restart from the best unitary "error":
    /// the best Pauli string on qubit systems, the identity otherwise.
    pub seed_unitary: bool,
    pub seed: u64,
}

impl Default for DiagnosticConfig {
    fn default() -> Self {
        Self {
            inner: IterationConfig::default(),
            restarts: 3,
            kraus_count: KrausCount::Full,
            tolerance: 1e-6,
            seed_unitary: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Maximum over channels `T'` of `F_C(D ∘ T' ∘ E)`.
    pub syndrome_max_fidelity: f64,
    /// Some `T'` makes `D ∘ T' ∘ E` the identity (within tolerance).
    pub corrects_some_syndrome: bool,
    pub isometry_defect: f64,
    pub per_restart_maxima: Vec<f64>,
    /// Maximizing `T'`.
    #[serde(skip)]
    pub best_noise: Option<Channel>,
}

/// Maximizes `F_C(D ∘ T' ∘ E)` over the middle channel `T'`. A value of 1
/// means the code corrects the "error" `T'` exactly; a maximum below 1
/// means no error at all is corrected in that sense.
pub fn syndrome_diagnostic(e: &Channel, d: &Channel, cfg: &DiagnosticConfig) -> Result<DiagnosticsReport> {
    cfg.inner.validate()?;
    if cfg.restarts == 0 {
        return Err(Error::OutOfRange {
            name: "restarts",
            value: 0.0,
            range: ">= 1",
        });
    }
    let f = middle_objective(e, d)?;
    let (d1, d2) = (e.dim_out(), d.dim_in());
    let kraus = cfg.kraus_count.resolve(d1, d2);

    let extra = usize::from(cfg.seed_unitary && d1 == d2);
    let runs: Vec<(f64, Channel)> = (0..cfg.restarts + extra)
        .into_par_iter()
        .map(|r| {
            let init = if r == cfg.restarts {
                best_pauli_error(e, d)?
            } else {
                let mut rng = rng_from_seed(derive_seed(cfg.seed, &[r as u64, 0]));
                random_kraus_channel(d1, d2, kraus, &mut rng)?
            };
            let inner = IterationConfig {
                seed: derive_seed(cfg.seed, &[r as u64, 1]),
                ..cfg.inner
            };
            let trace = optimize_channel(&f, &init, &inner)?;
            Ok((trace.final_objective, trace.final_channel().clone()))
        })
        .collect::<Result<_>>()?;

    let per_restart_maxima: Vec<f64> = runs.iter().map(|(v, _)| *v).collect();
    let (max, best) = runs
        .into_iter()
        .fold(None::<(f64, Channel)>, |acc, (v, c)| match acc {
            Some((bv, _)) if bv >= v => acc,
            _ => Some((v, c)),
        })
        .expect("at least one restart");
    Ok(DiagnosticsReport {
        syndrome_max_fidelity: max,
        corrects_some_syndrome: max >= 1.0 - cfg.tolerance,
        isometry_defect: isometry_defect(e)?,
        per_restart_maxima,
        best_noise: Some(best),
    })
}

/// Largest qubit count for which all Pauli strings are scanned.
const MAX_PAULI_QUBITS: usize = 6;

/// `F_C(D P E) · d0²` for the Pauli string `labels`, from the products
/// `x = e_i d_k`: a Pauli string maps `|c⟩` to `φ(c) |π(c)⟩`, so
/// `tr(d_k P e_i) = Σ_c φ(c) x[c, π(c)]`.
fn pauli_score(labels: &[Pauli], products: &[CMatrix]) -> f64 {
    let n = labels.len();
    let dim = 1usize << n;
    let one = Complex64::new(1.0, 0.0);
    let image: Vec<(usize, Complex64)> = (0..dim)
        .map(|col| {
            labels.iter().enumerate().fold((col, one), |(row, phase), (q, &p)| {
                let bit = 1 << (n - 1 - q);
                let set = col & bit != 0;
                match p {
                    1 => (row ^ bit, phase),
                    2 => (row ^ bit, phase * Complex64::new(0.0, if set { -1.0 } else { 1.0 })),
                    3 => (row, if set { -phase } else { phase }),
                    _ => (row, phase),
                }
            })
        })
        .collect();
    products
        .iter()
        .map(|x| {
            image
                .iter()
                .enumerate()
                .map(|(c, &(r, phase))| phase * x[(c, r)])
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum()
}

/// Unitary channel `T'` maximizing `F_C(D T' E)` among Pauli strings
/// (identity when the physical system is not made of a few qubits).
fn best_pauli_error(e: &Channel, d: &Channel) -> Result<Channel> {
    let dim = e.dim_out();
    if !dim.is_power_of_two() || dim.trailing_zeros() as usize > MAX_PAULI_QUBITS {
        return Ok(Channel::identity(dim));
    }
    let n = dim.trailing_zeros() as usize;
    let products: Vec<CMatrix> = e
        .kraus()
        .iter()
        .flat_map(|ek| d.kraus().iter().map(move |dk| ek * dk))
        .collect();
    let mut best = (f64::NEG_INFINITY, vec![0; n]);
    for index in 0..(1usize << (2 * n)) {
        let labels: Vec<Pauli> = (0..n).map(|q| ((index >> (2 * q)) & 3) as Pauli).collect();
        let score = pauli_score(&labels, &products);
        if score > best.0 {
            best = (score, labels);
        }
    }
    Channel::unitary(pauli_string(&best.1))
}
