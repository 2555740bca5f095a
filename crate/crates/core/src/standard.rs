//! Standard noise channels: depolarizing, bit flip, random channels, and
//! mixtures with the identity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigensystem, identity, pauli_x, pauli_y, pauli_z, psd_inv_sqrt, CMatrix, DEFAULT_CUTOFF,
    NEGATIVE_TOL,
};
use crate::random::{random_uniform_matrix, rng_from_seed};

/// Largest admissible depolarizing weight; beyond it the map is not CP.
pub const DEPOLARIZING_MAX: f64 = 4.0 / 3.0;

/// Qubit depolarizing channel `ρ ↦ p tr(ρ) I/2 + (1 − p) ρ`, `0 ≤ p ≤ 4/3`.
///
/// Kraus set `{√(1 − 3p/4) I, √(p/4) X, √(p/4) Y, √(p/4) Z}`; all weights
/// are nonnegative on the admissible range. Zero-weight operators are
/// dropped, so `p = 0` has one Kraus operator and `p = 4/3` has three.
pub fn depolarizing(p: f64) -> Result<Channel> {
    if !(0.0..=DEPOLARIZING_MAX).contains(&p) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            range: "[0, 4/3]",
        });
    }
    let w_id = (1.0 - 0.75 * p).max(0.0).sqrt();
    let w_pauli = (p / 4.0).sqrt();
    let kraus = [
        (w_id, identity(2)),
        (w_pauli, pauli_x()),
        (w_pauli, pauli_y()),
        (w_pauli, pauli_z()),
    ]
    .into_iter()
    .filter(|(w, _)| *w > 0.0)
    .map(|(w, m)| m.scale(w))
    .collect();
    Channel::new(2, 2, kraus)
}

/// `ρ ↦ (1 − q) ρ + q XρX`.
pub fn bit_flip(q: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::OutOfRange {
            name: "q",
            value: q,
            range: "[0, 1]",
        });
    }
    let kraus = [(1.0 - q, identity(2)), (q, pauli_x())]
        .into_iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, m)| m.scale(w.sqrt()))
        .collect();
    Channel::new(2, 2, kraus)
}

/// Parameters of a random channel draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomChannelSpec {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus_count: usize,
    /// Weight of the random part; `1 − mix_lambda` goes to the identity.
    pub mix_lambda: f64,
    pub seed: u64,
}

impl RandomChannelSpec {
    pub fn new(dim_in: usize, dim_out: usize, kraus_count: usize, seed: u64) -> Self {
        Self {
            dim_in,
            dim_out,
            kraus_count,
            mix_lambda: 1.0,
            seed,
        }
    }
}

/// Draws a random channel: Kraus entries with i.i.d. uniform real and
/// imaginary parts on `[-1, 1]`, normalized by `M^{-1/2}`, then mixed with
/// the identity when `mix_lambda < 1`. Deterministic in `spec.seed`.
pub fn random_channel(spec: &RandomChannelSpec) -> Result<Channel> {
    if !(0.0..=1.0).contains(&spec.mix_lambda) {
        return Err(Error::OutOfRange {
            name: "mix_lambda",
            value: spec.mix_lambda,
            range: "[0, 1]",
        });
    }
    let mut rng = rng_from_seed(spec.seed);
    let c = random_kraus_channel(spec.dim_in, spec.dim_out, spec.kraus_count, &mut rng)?;
    if spec.mix_lambda < 1.0 {
        mix_with_identity(&c, spec.mix_lambda)
    } else {
        Ok(c)
    }
}

/// Random trace-preserving channel from an explicit generator.
///
/// Requires `kraus_count · dim_out ≥ dim_in`, otherwise `Σ s_i†s_i` is
/// singular and no normalization can make the draw trace preserving.
pub fn random_kraus_channel<R: Rng + ?Sized>(
    dim_in: usize,
    dim_out: usize,
    kraus_count: usize,
    rng: &mut R,
) -> Result<Channel> {
    if kraus_count == 0 || kraus_count * dim_out < dim_in {
        return Err(Error::OutOfRange {
            name: "kraus_count",
            value: kraus_count as f64,
            range: ">= dim_in / dim_out",
        });
    }
    let raw: Vec<_> = (0..kraus_count)
        .map(|_| random_uniform_matrix(dim_out, dim_in, rng))
        .collect();
    let raw = Channel::new(dim_in, dim_out, raw)?;
    normalize(&raw)
}

/// Right-multiplies every Kraus operator by `M^{-1/2}` with `M = Σ s_i†s_i`.
pub fn normalize(c: &Channel) -> Result<Channel> {
    let inv = psd_inv_sqrt(&c.normalization(), DEFAULT_CUTOFF)?;
    let kraus = c.kraus().iter().map(|k| k * &inv.inv_sqrt).collect();
    Channel::new(c.dim_in(), c.dim_out(), kraus)
}

/// Adds Kraus operators `√q_j |0⟩⟨v_j|` for the eigenpairs of `I − Σ s_i†s_i`,
/// turning a trace-non-increasing map (e.g. one normalized to a projector)
/// into a channel that agrees with it on the original support.
pub fn complete_to_tp(c: &Channel, cutoff: f64) -> Result<Channel> {
    let d = c.dim_in();
    let deficit = identity(d) - c.normalization();
    let eig = hermitian_eigensystem(&deficit)?;
    let min = eig.min();
    if min < -NEGATIVE_TOL {
        return Err(Error::NotPsd { min, max: eig.max() });
    }
    let mut kraus = c.kraus().to_vec();
    for (j, &q) in eig.eigenvalues.iter().enumerate() {
        if q <= cutoff {
            continue;
        }
        let mut k = CMatrix::zeros(c.dim_out(), d);
        let v = eig.eigenvectors.column(j);
        for col in 0..d {
            k[(0, col)] = v[col].conj() * q.sqrt();
        }
        kraus.push(k);
    }
    Channel::new(d, c.dim_out(), kraus)
}

/// `lam · c + (1 − lam) · id` as a Kraus list `{√lam s_i} ∪ {√(1−lam) I}`,
/// whose Choi operator is exactly the convex combination of the two Choi
/// operators.
pub fn mix_with_identity(c: &Channel, lam: f64) -> Result<Channel> {
    if !c.is_square() {
        return Err(Error::DimMismatch {
            context: "mix_with_identity",
            expected: c.dim_in(),
            found: c.dim_out(),
        });
    }
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::OutOfRange {
            name: "lam",
            value: lam,
            range: "[0, 1]",
        });
    }
    let mut kraus = Vec::with_capacity(c.kraus_count() + 1);
    if lam > 0.0 {
        kraus.extend(c.kraus().iter().map(|k| k.scale(lam.sqrt())));
    }
    if lam < 1.0 {
        kraus.push(identity(c.dim_in()).scale((1.0 - lam).sqrt()));
    }
    Channel::new(c.dim_in(), c.dim_out(), kraus)
}
