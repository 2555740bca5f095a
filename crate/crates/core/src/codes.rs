//! Reference encoder/decoder pairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::linalg::{frobenius, identity, kron, pauli_x, pauli_y, pauli_z, CMatrix};

/// Encoder `E: B(H0) → B(H1)` and decoder `D: B(H2) → B(H0)`.
///
/// Serialized as `{d0, d1, d2, encoder, decoder}` with channels in the
/// [`Channel`] JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodePairJson")]
pub struct CodePair {
    pub d0: usize,
    pub d1: usize,
    pub d2: usize,
    pub encoder: Channel,
    pub decoder: Channel,
}

#[derive(Deserialize)]
struct CodePairJson {
    d0: usize,
    d1: usize,
    d2: usize,
    encoder: Channel,
    decoder: Channel,
}

impl TryFrom<CodePairJson> for CodePair {
    type Error = Error;

    fn try_from(j: CodePairJson) -> Result<Self> {
        let pair = CodePair::new(j.encoder, j.decoder)?;
        if (pair.d0, pair.d1, pair.d2) != (j.d0, j.d1, j.d2) {
            return Err(Error::Parse(format!(
                "declared dims ({}, {}, {}) disagree with channels ({}, {}, {})",
                j.d0, j.d1, j.d2, pair.d0, pair.d1, pair.d2
            )));
        }
        Ok(pair)
    }
}

impl CodePair {
    pub fn new(encoder: Channel, decoder: Channel) -> Result<Self> {
        if encoder.dim_in() != decoder.dim_out() {
            return Err(Error::DimMismatch {
                context: "code pair logical dimension",
                expected: encoder.dim_in(),
                found: decoder.dim_out(),
            });
        }
        Ok(Self {
            d0: encoder.dim_in(),
            d1: encoder.dim_out(),
            d2: decoder.dim_in(),
            encoder,
            decoder,
        })
    }

    /// Checks that a noise channel fits between encoder and decoder.
    pub fn check_noise_dims(&self, dim_in: usize, dim_out: usize) -> Result<()> {
        if dim_in != self.d1 {
            return Err(Error::DimMismatch {
                context: "noise input vs encoder output",
                expected: self.d1,
                found: dim_in,
            });
        }
        if dim_out != self.d2 {
            return Err(Error::DimMismatch {
                context: "noise output vs decoder input",
                expected: self.d2,
                found: dim_out,
            });
        }
        Ok(())
    }
}

/// Single-qubit Pauli label: 0 = I, 1 = X, 2 = Y, 3 = Z.
pub(crate) type Pauli = u8;

/// Stabilizer generators of the five-qubit code, cyclic shifts of XZZXI.
const FIVE_QUBIT_STABILIZERS: [[Pauli; 5]; 4] = [
    [1, 3, 3, 1, 0],
    [0, 1, 3, 3, 1],
    [1, 0, 1, 3, 3],
    [3, 1, 0, 1, 3],
];

fn pauli_matrix(p: Pauli) -> CMatrix {
    match p {
        0 => identity(2),
        1 => pauli_x(),
        2 => pauli_y(),
        3 => pauli_z(),
        _ => unreachable!("pauli label"),
    }
}

/// Qubit 0 is the leftmost (most significant) tensor factor.
pub(crate) fn pauli_string(labels: &[Pauli]) -> CMatrix {
    labels
        .iter()
        .fold(identity(1), |acc, &p| kron(&acc, &pauli_matrix(p)))
}

fn anticommutes(a: &[Pauli], b: &[Pauli]) -> bool {
    let clashes = a
        .iter()
        .zip(b)
        .filter(|(&x, &y)| x != 0 && y != 0 && x != y)
        .count();
    clashes % 2 == 1
}

fn syndrome(error: &[Pauli]) -> usize {
    FIVE_QUBIT_STABILIZERS
        .iter()
        .enumerate()
        .filter(|(_, g)| anticommutes(error, &g[..]))
        .fold(0, |s, (k, _)| s | (1 << k))
}

/// The identity and the 15 single-qubit Paulis, indexed by their syndrome.
fn correction_table() -> [[Pauli; 5]; 16] {
    let mut table = [[0u8; 5]; 16];
    let mut seen = [false; 16];
    seen[0] = true;
    for qubit in 0..5 {
        for p in 1..=3u8 {
            let mut e = [0u8; 5];
            e[qubit] = p;
            let s = syndrome(&e);
            assert!(!seen[s], "five-qubit code syndromes are distinct");
            seen[s] = true;
            table[s] = e;
        }
    }
    table
}

/// Encoding isometry `V = [|0_L⟩, |1_L⟩]` (32 x 2).
fn five_qubit_isometry() -> CMatrix {
    let dim = 32;
    let mut projector = identity(dim);
    for g in &FIVE_QUBIT_STABILIZERS {
        projector = &projector * (identity(dim) + pauli_string(g)).scale(0.5);
    }
    let mut zero = CMatrix::zeros(dim, 1);
    zero[(0, 0)] = Complex64::new(1.0, 0.0);
    let zero_l = &projector * zero;
    let zero_l = zero_l.scale(1.0 / frobenius(&zero_l));
    let one_l = pauli_string(&[1; 5]) * &zero_l;
    let mut v = CMatrix::zeros(dim, 2);
    v.set_column(0, &zero_l.column(0));
    v.set_column(1, &one_l.column(0));
    v
}

/// The five-qubit stabilizer code: isometric encoder and a 16-outcome
/// syndrome decoder with Kraus operators `V† σ_s P_s`.
pub fn five_bit_code() -> CodePair {
    let v = five_qubit_isometry();
    let code_projector = &v * v.adjoint();
    let decoder_kraus = correction_table()
        .iter()
        .map(|e| {
            let sigma = pauli_string(e);
            let syndrome_projector = &sigma * &code_projector * &sigma;
            v.adjoint() * &sigma * syndrome_projector
        })
        .collect();
    let encoder = Channel::new(2, 32, vec![v]).expect("valid encoder");
    let decoder = Channel::new(32, 2, decoder_kraus).expect("valid decoder");
    CodePair::new(encoder, decoder).expect("matching dims")
}

/// "Do nothing": keep the logical qubit in slot 0, prepare the other
/// `n − 1` qubits in `|0⟩`, and trace them out on decoding.
pub fn trivial_code(n: usize) -> Result<CodePair> {
    if n == 0 || n > 20 {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            range: "[1, 20]",
        });
    }
    let ancilla = 1usize << (n - 1);
    let dim = 2 * ancilla;
    let one = Complex64::new(1.0, 0.0);
    let mut v = CMatrix::zeros(dim, 2);
    for i in 0..2 {
        v[(i * ancilla, i)] = one;
    }
    let decoder_kraus = (0..ancilla)
        .map(|b| {
            let mut k = CMatrix::zeros(2, dim);
            for i in 0..2 {
                k[(i, i * ancilla + b)] = one;
            }
            k
        })
        .collect();
    let encoder = Channel::new(2, dim, vec![v])?;
    let decoder = Channel::new(dim, 2, decoder_kraus)?;
    CodePair::new(encoder, decoder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{chain_fidelity, channel_fidelity, compose, TransferMatrix};
    use crate::standard::depolarizing;

    fn corrected(code: &CodePair, p: f64, n: usize) -> f64 {
        let t = TransferMatrix::tensor_power(&depolarizing(p).unwrap(), n).unwrap();
        chain_fidelity(&[&code.encoder, &t, &code.decoder]).unwrap()
    }

    fn five_bit_polynomial(p: f64) -> f64 {
        1.0 - 45.0 / 8.0 * p.powi(2) + 75.0 / 8.0 * p.powi(3) - 45.0 / 8.0 * p.powi(4)
            + 9.0 / 8.0 * p.powi(5)
    }

    #[test]
    fn stabilizers_commute() {
        for a in &FIVE_QUBIT_STABILIZERS {
            for b in &FIVE_QUBIT_STABILIZERS {
                assert!(!anticommutes(a, b));
                let (ma, mb) = (pauli_string(a), pauli_string(b));
                assert!(frobenius(&(&ma * &mb - &mb * &ma)) < 1e-12);
            }
        }
    }

    #[test]
    fn five_bit_structure() {
        let code = five_bit_code();
        assert_eq!((code.d0, code.d1, code.d2), (2, 32, 32));
        assert_eq!(code.decoder.kraus_count(), 16);
        let v = &code.encoder.kraus()[0];
        assert!(frobenius(&(v.adjoint() * v - identity(2))) <= 1e-12);
        assert!(code.decoder.tp_defect() <= 1e-10);
        let de = compose(&code.decoder, &code.encoder).unwrap();
        assert!((channel_fidelity(&de).unwrap() - 1.0).abs() <= 1e-10);
        // logical states are stabilized
        for g in &FIVE_QUBIT_STABILIZERS {
            let s = pauli_string(g);
            assert!(frobenius(&(&s * v - v)) < 1e-12);
        }
    }

    #[test]
    fn five_bit_reproduces_polynomial() {
        let code = five_bit_code();
        for &p in &[0.0, 0.05, 0.1, 0.5, 1.0, 1.2] {
            let f = corrected(&code, p, 5);
            assert!((f - five_bit_polynomial(p)).abs() <= 1e-9, "p={p}: {f}");
        }
        assert!((corrected(&code, 0.1, 5) - 0.95257375).abs() <= 1e-9);
        assert!((corrected(&code, 1.0, 5) - 0.25).abs() <= 1e-9);
    }

    #[test]
    fn trivial_code_examples() {
        let one = trivial_code(1).unwrap();
        assert_eq!(one.encoder, Channel::identity(2));
        assert_eq!(one.decoder, Channel::identity(2));

        let five = trivial_code(5).unwrap();
        assert!((corrected(&five, 0.2, 5) - 0.85).abs() <= 1e-12);
        let de = compose(&five.decoder, &five.encoder).unwrap();
        assert!((channel_fidelity(&de).unwrap() - 1.0).abs() <= 1e-12);
        assert!(five.decoder.tp_defect() <= 1e-12);
    }

    #[test]
    fn json_checks_declared_dims() {
        let code = trivial_code(2).unwrap();
        let s = serde_json::to_string(&code).unwrap();
        let back: CodePair = serde_json::from_str(&s).unwrap();
        assert_eq!(back, code);
        let tampered = s.replacen("\"d1\":4", "\"d1\":8", 1);
        assert!(serde_json::from_str::<CodePair>(&tampered).is_err());
    }
}
