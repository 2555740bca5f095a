//! Quantum channels in Kraus form and their Choi (Jamiolkowski) operators.
//!
//! A channel `S: B(H_in) → B(H_out)` is stored as its Kraus list
//! `S(ρ) = Σ_i s_i ρ s_i†`. Hilbert-Schmidt vectors `|s⟩⟩` stack the rows of
//! `s`, so for a `dim_out x dim_in` operator the entry `s[a, μ]` sits at
//! index `a * dim_in + μ`. With that convention the Choi operator
//! `Ŝ = Σ_i |s_i⟩⟩⟨⟨s_i|` has entries
//!
//! ```text
//! Ŝ[(a, μ), (b, ν)] = ⟨a| S(|μ⟩⟨ν|) |b⟩
//! ```
//!
//! and, read as an operator on `HS(H_in, H_out)`, satisfies
//! `⟨a|Ŝ(|b⟩⟨ν|)|μ⟩ = ⟨a|S(|μ⟩⟨ν|)|b⟩`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, check_psd, frobenius, hermitian_eigensystem, identity, kron, unvec_row_major,
    vec_row_major, CMatrix, DEFAULT_CUTOFF,
};

/// A completely positive map given by Kraus operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct Channel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix>,
}

impl Channel {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if dim_in == 0 {
            return Err(Error::OutOfRange {
                name: "dim_in",
                value: 0.0,
                range: ">= 1",
            });
        }
        if dim_out == 0 {
            return Err(Error::OutOfRange {
                name: "dim_out",
                value: 0.0,
                range: ">= 1",
            });
        }
        if kraus.is_empty() {
            return Err(Error::EmptyKraus);
        }
        for (index, k) in kraus.iter().enumerate() {
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::ShapeMismatch {
                    index,
                    expected: (dim_out, dim_in),
                    found: k.shape(),
                });
            }
            if !linalg::is_finite(k) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    /// Builds a channel from Kraus operators, taking dimensions from the first one.
    pub fn from_kraus(kraus: Vec<CMatrix>) -> Result<Self> {
        let (rows, cols) = kraus.first().ok_or(Error::EmptyKraus)?.shape();
        Self::new(cols, rows, kraus)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim_in: d,
            dim_out: d,
            kraus: vec![identity(d)],
        }
    }

    /// Single-Kraus channel `ρ ↦ u ρ u†`.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::from_kraus(vec![u])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn into_kraus(self) -> Vec<CMatrix> {
        self.kraus
    }

    pub fn kraus_count(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_square(&self) -> bool {
        self.dim_in == self.dim_out
    }

    /// `Σ_i s_i† s_i`; equals the identity iff the channel is trace preserving.
    pub fn normalization(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            m += k.adjoint() * k;
        }
        m
    }

    /// `‖Σ s_i†s_i − I‖_F`.
    pub fn tp_defect(&self) -> f64 {
        frobenius(&(self.normalization() - identity(self.dim_in)))
    }

    /// Kraus vectors `|s_i⟩⟩` as the columns of a `(dim_in·dim_out) x n` matrix.
    pub fn kraus_columns(&self) -> CMatrix {
        let n = self.dim_in * self.dim_out;
        let mut g = CMatrix::zeros(n, self.kraus.len());
        for (i, k) in self.kraus.iter().enumerate() {
            g.set_column(i, &vec_row_major(k).column(0));
        }
        g
    }

    /// Inverse of [`Channel::kraus_columns`].
    pub fn from_kraus_columns(dim_in: usize, dim_out: usize, g: &CMatrix) -> Result<Self> {
        let kraus = (0..g.ncols())
            .map(|i| unvec_row_major(g.column(i).as_slice(), dim_out, dim_in))
            .collect();
        Self::new(dim_in, dim_out, kraus)
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        check_square_input(rho, self.dim_in, "apply")?;
        let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        Ok(out)
    }

    /// Heisenberg-picture dual `Y ↦ Σ s_i† Y s_i`.
    pub fn apply_adjoint(&self, y: &CMatrix) -> Result<CMatrix> {
        check_square_input(y, self.dim_out, "apply_adjoint")?;
        let mut out = CMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * y * k;
        }
        Ok(out)
    }
}

fn check_square_input(m: &CMatrix, d: usize, context: &'static str) -> Result<()> {
    if m.nrows() != d {
        return Err(Error::DimMismatch {
            context,
            expected: d,
            found: m.nrows(),
        });
    }
    if m.ncols() != d {
        return Err(Error::DimMismatch {
            context,
            expected: d,
            found: m.ncols(),
        });
    }
    Ok(())
}

/// Linear maps that can be applied in both pictures; lets fidelity and
/// objective builders accept either Kraus lists or precomputed transfer
/// matrices.
pub trait CpMap: Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply(&self, rho: &CMatrix) -> Result<CMatrix>;
    fn apply_adjoint(&self, y: &CMatrix) -> Result<CMatrix>;
}

impl CpMap for Channel {
    fn dim_in(&self) -> usize {
        self.dim_in
    }
    fn dim_out(&self) -> usize {
        self.dim_out
    }
    fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        Channel::apply(self, rho)
    }
    fn apply_adjoint(&self, y: &CMatrix) -> Result<CMatrix> {
        Channel::apply_adjoint(self, y)
    }
}

/// Superoperator matrix `L` with `vec(S(X)) = L vec(X)` (row-major vec).
///
/// Worth building when a channel with many Kraus operators (e.g. a tensor
/// power) is applied repeatedly: one application becomes a single
/// matrix-vector product.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    dim_in: usize,
    dim_out: usize,
    matrix: CMatrix,
}

impl TransferMatrix {
    pub fn from_channel(c: &Channel) -> Self {
        let j = choi_matrix(c);
        let (din, dout) = (c.dim_in, c.dim_out);
        // L[(a,b),(μ,ν)] = Ŝ[(a,μ),(b,ν)]
        let matrix = CMatrix::from_fn(dout * dout, din * din, |row, col| {
            let (a, b) = (row / dout, row % dout);
            let (mu, nu) = (col / din, col % din);
            j[(a * din + mu, b * din + nu)]
        });
        Self {
            dim_in: din,
            dim_out: dout,
            matrix,
        }
    }

    /// Transfer matrix of `self ⊗ other`, assembled entrywise from the two
    /// factors without touching Kraus operators.
    pub fn tensor(&self, other: &TransferMatrix) -> Self {
        let (ai, ao, bi, bo) = (self.dim_in, self.dim_out, other.dim_in, other.dim_out);
        let (din, dout) = (ai * bi, ao * bo);
        let matrix = CMatrix::from_fn(dout * dout, din * din, |row, col| {
            let (a, b) = (row / dout, row % dout);
            let (mu, nu) = (col / din, col % din);
            let left = self.matrix[((a / bo) * ao + b / bo, (mu / bi) * ai + nu / bi)];
            let right = other.matrix[((a % bo) * bo + b % bo, (mu % bi) * bi + nu % bi)];
            left * right
        });
        Self {
            dim_in: din,
            dim_out: dout,
            matrix,
        }
    }

    /// Transfer matrix of `c^{⊗n}`.
    pub fn tensor_power(c: &Channel, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange {
                name: "n",
                value: 0.0,
                range: ">= 1",
            });
        }
        let single = Self::from_channel(c);
        let mut out = single.clone();
        for _ in 1..n {
            out = out.tensor(&single);
        }
        Ok(out)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

impl CpMap for TransferMatrix {
    fn dim_in(&self) -> usize {
        self.dim_in
    }
    fn dim_out(&self) -> usize {
        self.dim_out
    }
    fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        check_square_input(rho, self.dim_in, "apply")?;
        let v = &self.matrix * vec_row_major(rho);
        Ok(unvec_row_major(v.as_slice(), self.dim_out, self.dim_out))
    }
    fn apply_adjoint(&self, y: &CMatrix) -> Result<CMatrix> {
        check_square_input(y, self.dim_out, "apply_adjoint")?;
        let v = self.matrix.adjoint() * vec_row_major(y);
        Ok(unvec_row_major(v.as_slice(), self.dim_in, self.dim_in))
    }
}

/// Positive semi-definite operator on `HS(H_in, H_out)` representing a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiOperator {
    dim_in: usize,
    dim_out: usize,
    matrix: CMatrix,
}

impl ChoiOperator {
    /// Wraps a matrix after checking its size, Hermiticity, and positivity.
    pub fn new(dim_in: usize, dim_out: usize, matrix: CMatrix) -> Result<Self> {
        let n = dim_in * dim_out;
        if matrix.shape() != (n, n) {
            return Err(Error::DimMismatch {
                context: "choi operator size",
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let eig = hermitian_eigensystem(&matrix)?;
        if eig.max() > 0.0 && eig.min() < -linalg::NEGATIVE_TOL * eig.max() {
            return Err(Error::NotPsd {
                min: eig.min(),
                max: eig.max(),
            });
        }
        Ok(Self {
            dim_in,
            dim_out,
            matrix,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Applies `Ŝ` as an operator on `HS(H_in, H_out)`.
    pub fn act(&self, x: &CMatrix) -> CMatrix {
        let v = &self.matrix * vec_row_major(x);
        unvec_row_major(v.as_slice(), self.dim_out, self.dim_in)
    }
}

/// Numerical health of a Kraus-form channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Magnitude of the most negative Choi eigenvalue; zero for Kraus form.
    pub cp_defect: f64,
    /// `‖Σ s_i†s_i − I‖_F`.
    pub tp_defect: f64,
    /// Numerical rank of the Choi operator.
    pub kraus_rank: usize,
}

impl ValidationReport {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.cp_defect <= tol && self.tp_defect <= tol
    }
}

/// Reports CP and TP defects and the Kraus rank; the caller judges them
/// against a tolerance with [`ValidationReport::is_valid`].
pub fn validate_channel(c: &Channel) -> Result<ValidationReport> {
    for (index, k) in c.kraus.iter().enumerate() {
        if k.shape() != (c.dim_out, c.dim_in) {
            return Err(Error::ShapeMismatch {
                index,
                expected: (c.dim_out, c.dim_in),
                found: k.shape(),
            });
        }
    }
    let g = c.kraus_columns();
    // rank(G G†) = rank(G† G); use the smaller Gram matrix
    let gram = if g.ncols() <= g.nrows() {
        g.adjoint() * &g
    } else {
        &g * g.adjoint()
    };
    let kraus_rank = hermitian_eigensystem(&gram)?.rank(DEFAULT_CUTOFF);
    Ok(ValidationReport {
        cp_defect: 0.0,
        tp_defect: c.tp_defect(),
        kraus_rank,
    })
}

fn choi_matrix(c: &Channel) -> CMatrix {
    let g = c.kraus_columns();
    &g * g.adjoint()
}

/// `Ŝ = Σ_i |s_i⟩⟩⟨⟨s_i|`.
pub fn choi_of(c: &Channel) -> ChoiOperator {
    ChoiOperator {
        dim_in: c.dim_in,
        dim_out: c.dim_out,
        matrix: choi_matrix(c),
    }
}

/// Kraus operators `√λ_k unvec(v_k)` from the eigenvectors of `j` whose
/// eigenvalues exceed `cutoff * λ_max`.
pub fn kraus_of(j: &ChoiOperator, cutoff: f64) -> Result<Channel> {
    let eig = hermitian_eigensystem(&j.matrix)?;
    check_psd(&eig).map_err(|e| match e {
        Error::NegativeEigenvalue { value, max } => Error::NotPsd { min: value, max },
        other => other,
    })?;
    let max = eig.max();
    let kraus = eig
        .eigenvalues
        .iter()
        .enumerate()
        .take_while(|(_, &l)| l > cutoff * max)
        .map(|(k, &l)| {
            let v = eig.eigenvectors.column(k).into_owned();
            unvec_row_major(v.as_slice(), j.dim_out, j.dim_in).scale(l.sqrt())
        })
        .collect();
    Channel::new(j.dim_in, j.dim_out, kraus)
}

/// Replaces the Kraus list by a minimal one via the Choi operator.
pub fn compress(c: &Channel, cutoff: f64) -> Result<Channel> {
    kraus_of(&choi_of(c), cutoff)
}

/// `outer ∘ inner`, keeping all `o_j i_k` products (outer index major).
pub fn compose(outer: &Channel, inner: &Channel) -> Result<Channel> {
    if inner.dim_out != outer.dim_in {
        return Err(Error::DimMismatch {
            context: "compose",
            expected: outer.dim_in,
            found: inner.dim_out,
        });
    }
    let kraus = outer
        .kraus
        .iter()
        .flat_map(|o| inner.kraus.iter().map(move |i| o * i))
        .collect();
    Channel::new(inner.dim_in, outer.dim_out, kraus)
}

/// Parallel composition `a ⊗ b`.
pub fn tensor(a: &Channel, b: &Channel) -> Channel {
    let kraus = a
        .kraus
        .iter()
        .flat_map(|x| b.kraus.iter().map(move |y| kron(x, y)))
        .collect();
    Channel {
        dim_in: a.dim_in * b.dim_in,
        dim_out: a.dim_out * b.dim_out,
        kraus,
    }
}

/// `c^{⊗n}`; Kraus operators are all n-fold tensor products.
pub fn tensor_power(c: &Channel, n: usize) -> Result<Channel> {
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "n",
            value: 0.0,
            range: ">= 1",
        });
    }
    let mut out = c.clone();
    for _ in 1..n {
        out = tensor(&out, c);
    }
    Ok(out)
}

/// Channel fidelity `d^{-2} Σ_i |tr s_i|²`.
pub fn channel_fidelity(c: &Channel) -> Result<f64> {
    if !c.is_square() {
        return Err(Error::DimMismatch {
            context: "channel_fidelity",
            expected: c.dim_in,
            found: c.dim_out,
        });
    }
    let d = c.dim_in as f64;
    let sum: f64 = c.kraus.iter().map(|k| linalg::trace(k).norm_sqr()).sum();
    Ok(sum / (d * d))
}

/// Channel fidelity of the composition `maps[n-1] ∘ … ∘ maps[0]`, computed
/// from its action on the `d²` matrix units:
/// `F = d^{-2} Σ_{μν} ⟨μ| S(|μ⟩⟨ν|) |ν⟩`.
pub fn chain_fidelity(maps: &[&dyn CpMap]) -> Result<f64> {
    let first = maps.first().ok_or(Error::EmptyKraus)?;
    let last = maps.last().expect("nonempty");
    for pair in maps.windows(2) {
        if pair[0].dim_out() != pair[1].dim_in() {
            return Err(Error::DimMismatch {
                context: "chain_fidelity",
                expected: pair[1].dim_in(),
                found: pair[0].dim_out(),
            });
        }
    }
    let d = first.dim_in();
    if last.dim_out() != d {
        return Err(Error::DimMismatch {
            context: "chain_fidelity",
            expected: d,
            found: last.dim_out(),
        });
    }
    let mut total = Complex64::new(0.0, 0.0);
    for mu in 0..d {
        for nu in 0..d {
            let mut x = CMatrix::zeros(d, d);
            x[(mu, nu)] = Complex64::new(1.0, 0.0);
            for m in maps {
                x = m.apply(&x)?;
            }
            total += x[(mu, nu)];
        }
    }
    Ok(total.re / (d * d) as f64)
}

/// JSON layout: `{dim_in, dim_out, kraus: [[[re, im], ...], ...]}`, each
/// Kraus operator flattened row-major.
#[derive(Serialize, Deserialize)]
struct ChannelJson {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<ChannelJson> for Channel {
    type Error = Error;

    fn try_from(j: ChannelJson) -> Result<Self> {
        let expected = j.dim_in * j.dim_out;
        let kraus = j
            .kraus
            .iter()
            .map(|flat| {
                if flat.len() != expected {
                    return Err(Error::Parse(format!(
                        "Kraus operator has {} entries, expected {expected}",
                        flat.len()
                    )));
                }
                let entries: Vec<Complex64> =
                    flat.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                Ok(unvec_row_major(&entries, j.dim_out, j.dim_in))
            })
            .collect::<Result<Vec<_>>>()?;
        Channel::new(j.dim_in, j.dim_out, kraus)
    }
}

impl From<Channel> for ChannelJson {
    fn from(c: Channel) -> Self {
        let kraus = c
            .kraus
            .iter()
            .map(|k| {
                vec_row_major(k)
                    .iter()
                    .map(|z| [z.re, z.im])
                    .collect::<Vec<_>>()
            })
            .collect();
        ChannelJson {
            dim_in: c.dim_in,
            dim_out: c.dim_out,
            kraus,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, pauli_x, pauli_y, pauli_z};
    use crate::random::{random_gaussian_matrix, rng_from_seed};
    use crate::standard::{depolarizing, random_kraus_channel};

    fn matrix_unit(d: usize, i: usize, j: usize) -> CMatrix {
        let mut m = CMatrix::zeros(d, d);
        m[(i, j)] = c(1., 0.);
        m
    }

    fn same_action(a: &Channel, b: &Channel, tol: f64) -> bool {
        let d = a.dim_in();
        (0..d).all(|i| {
            (0..d).all(|j| {
                let x = matrix_unit(d, i, j);
                frobenius(&(a.apply(&x).unwrap() - b.apply(&x).unwrap())) <= tol
            })
        })
    }

    fn ket0() -> CMatrix {
        matrix_unit(2, 0, 0)
    }

    #[test]
    fn validate_examples() {
        let r = validate_channel(&Channel::identity(2)).unwrap();
        assert_eq!(r.tp_defect, 0.0);
        assert_eq!(r.kraus_rank, 1);

        let r = validate_channel(&depolarizing(0.5).unwrap()).unwrap();
        assert!(r.tp_defect <= 1e-12);
        assert_eq!(r.kraus_rank, 4);

        let half = Channel::from_kraus(vec![identity(2).scale(0.5)]).unwrap();
        let r = validate_channel(&half).unwrap();
        assert!((r.tp_defect - 2f64.sqrt() * 0.75).abs() < 1e-15);
        assert!(!r.is_valid(1e-10));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let err = Channel::new(2, 2, vec![identity(2), identity(3)]).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { index: 1, .. }));
        assert_eq!(Channel::new(2, 2, vec![]).unwrap_err(), Error::EmptyKraus);
    }

    #[test]
    fn choi_examples() {
        let j = choi_of(&Channel::identity(2));
        let e = hermitian_eigensystem(j.matrix()).unwrap();
        assert!((e.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!(e.eigenvalues[1..].iter().all(|l| l.abs() < 1e-14));

        // completely depolarizing, from an explicit Pauli Kraus set
        let paulis = vec![
            identity(2).scale(0.5),
            pauli_x().scale(0.5),
            pauli_y().scale(0.5),
            pauli_z().scale(0.5),
        ];
        let j = choi_of(&Channel::from_kraus(paulis).unwrap());
        let e = hermitian_eigensystem(j.matrix()).unwrap();
        assert!(e.eigenvalues.iter().all(|l| (l - 0.5).abs() < 1e-14));
    }

    #[test]
    fn choi_entries_match_action() {
        let mut rng = rng_from_seed(11);
        let ch = random_kraus_channel(3, 2, 3, &mut rng).unwrap();
        let j = choi_of(&ch);
        for mu in 0..3 {
            for nu in 0..3 {
                let out = ch.apply(&matrix_unit(3, mu, nu)).unwrap();
                for a in 0..2 {
                    for b in 0..2 {
                        let lhs = out[(a, b)];
                        let rhs = j.matrix()[(a * 3 + mu, b * 3 + nu)];
                        assert!((lhs - rhs).norm() < 1e-13);
                        // reshuffle identity, Ŝ acting on |b⟩⟨ν|
                        let mut x = CMatrix::zeros(2, 3);
                        x[(b, nu)] = c(1., 0.);
                        let acted = j.act(&x)[(a, mu)];
                        assert!((lhs - acted).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn kraus_of_examples() {
        let id = kraus_of(&choi_of(&Channel::identity(2)), DEFAULT_CUTOFF).unwrap();
        assert_eq!(id.kraus_count(), 1);
        assert!(same_action(&id, &Channel::identity(2), 1e-10));

        let mut rng = rng_from_seed(12);
        let ch = random_kraus_channel(2, 2, 4, &mut rng).unwrap();
        let back = kraus_of(&choi_of(&ch), DEFAULT_CUTOFF).unwrap();
        assert!(same_action(&ch, &back, 1e-9));

        let two = random_kraus_channel(2, 3, 2, &mut rng).unwrap();
        let back = kraus_of(&choi_of(&two), DEFAULT_CUTOFF).unwrap();
        assert_eq!(back.kraus_count(), 2);
    }

    #[test]
    fn kraus_of_rejects_negative() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1., 0.),
            c(-0.5, 0.),
            c(0., 0.),
            c(0., 0.),
        ]));
        let j = ChoiOperator {
            dim_in: 2,
            dim_out: 2,
            matrix: m.clone(),
        };
        assert!(matches!(kraus_of(&j, 1e-12), Err(Error::NotPsd { .. })));
        assert!(matches!(ChoiOperator::new(2, 2, m), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn apply_examples() {
        let mut rng = rng_from_seed(13);
        let rho = random_gaussian_matrix(2, 2, &mut rng);
        let out = Channel::identity(2).apply(&rho).unwrap();
        assert_eq!(out, rho);

        let full = depolarizing(1.0).unwrap().apply(&ket0()).unwrap();
        assert!(frobenius(&(full - identity(2).scale(0.5))) < 1e-14);

        let p = 0.3;
        let out = depolarizing(p).unwrap().apply(&ket0()).unwrap();
        let expected = ket0().scale(1.0 - p) + identity(2).scale(p / 2.0);
        assert!(frobenius(&(out - expected)) < 1e-14);

        assert!(matches!(
            Channel::identity(2).apply(&identity(3)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn compose_examples() {
        let mut rng = rng_from_seed(14);
        let a = random_kraus_channel(2, 2, 4, &mut rng).unwrap();
        let b = random_kraus_channel(2, 2, 3, &mut rng).unwrap();
        let left = compose(&Channel::identity(2), &a).unwrap();
        assert!(same_action(&left, &a, 1e-14));
        let ab = compose(&a, &b).unwrap();
        assert_eq!(ab.kraus_count(), 12);
        let d = 2;
        for i in 0..d {
            for j in 0..d {
                let x = matrix_unit(d, i, j);
                let seq = a.apply(&b.apply(&x).unwrap()).unwrap();
                assert!(frobenius(&(ab.apply(&x).unwrap() - seq)) <= 1e-12);
            }
        }
        assert!(ab.tp_defect() <= 1e-10);
        assert!(matches!(
            compose(&Channel::identity(3), &a),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn tensor_power_examples() {
        let c1 = depolarizing(0.1).unwrap();
        assert_eq!(tensor_power(&c1, 1).unwrap(), c1);
        let c2 = tensor_power(&c1, 2).unwrap();
        assert_eq!(c2.kraus_count(), 16);
        assert_eq!((c2.dim_in(), c2.dim_out()), (4, 4));
        assert!(c2.tp_defect() <= 1e-12);
        assert!((channel_fidelity(&c1).unwrap() - 0.925).abs() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        for d in 1..5 {
            assert!((channel_fidelity(&Channel::identity(d)).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((channel_fidelity(&depolarizing(1.0).unwrap()).unwrap() - 0.25).abs() < 1e-15);
        assert!((channel_fidelity(&depolarizing(0.2).unwrap()).unwrap() - 0.85).abs() < 1e-15);
        let rect = Channel::from_kraus(vec![CMatrix::zeros(3, 2)]).unwrap();
        assert!(matches!(
            channel_fidelity(&rect),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn fidelity_equals_entangled_overlap() {
        let mut rng = rng_from_seed(15);
        for d in [2usize, 3] {
            let ch = random_kraus_channel(d, d, 3, &mut rng).unwrap();
            // |Ω⟩ = d^{-1/2} Σ_k |kk⟩, (id ⊗ S)(|Ω⟩⟨Ω|) = d^{-1} Σ |μ⟩⟨ν| ⊗ S(|μ⟩⟨ν|)
            let mut omega = CMatrix::zeros(d * d, 1);
            for k in 0..d {
                omega[(k * d + k, 0)] = c(1.0 / (d as f64).sqrt(), 0.);
            }
            let mut state = CMatrix::zeros(d * d, d * d);
            for mu in 0..d {
                for nu in 0..d {
                    let unit = matrix_unit(d, mu, nu);
                    state += kron(&unit, &ch.apply(&unit).unwrap()).scale(1.0 / d as f64);
                }
            }
            let overlap = (omega.adjoint() * state * &omega)[(0, 0)];
            let f = channel_fidelity(&ch).unwrap();
            assert!((overlap.re - f).abs() <= 1e-10);
            assert!(overlap.im.abs() <= 1e-12);
            let via_action = chain_fidelity(&[&ch]).unwrap();
            assert!((via_action - f).abs() <= 1e-12);
        }
    }

    #[test]
    fn transfer_matrix_matches_kraus_action() {
        let mut rng = rng_from_seed(16);
        let ch = random_kraus_channel(2, 3, 4, &mut rng).unwrap();
        let tm = TransferMatrix::from_channel(&ch);
        let x = random_gaussian_matrix(2, 2, &mut rng);
        let y = random_gaussian_matrix(3, 3, &mut rng);
        assert!(frobenius(&(tm.apply(&x).unwrap() - ch.apply(&x).unwrap())) < 1e-12);
        assert!(
            frobenius(&(tm.apply_adjoint(&y).unwrap() - ch.apply_adjoint(&y).unwrap())) < 1e-12
        );
    }

    #[test]
    fn transfer_matrix_of_tensor_product() {
        let mut rng = rng_from_seed(17);
        let a = random_kraus_channel(2, 3, 2, &mut rng).unwrap();
        let b = random_kraus_channel(3, 2, 3, &mut rng).unwrap();
        let direct = TransferMatrix::from_channel(&tensor(&a, &b));
        let assembled = TransferMatrix::from_channel(&a).tensor(&TransferMatrix::from_channel(&b));
        assert!(frobenius(&(direct.matrix() - assembled.matrix())) < 1e-12);

        let dep = depolarizing(0.3).unwrap();
        let direct = TransferMatrix::from_channel(&tensor_power(&dep, 3).unwrap());
        let assembled = TransferMatrix::tensor_power(&dep, 3).unwrap();
        assert!(frobenius(&(direct.matrix() - assembled.matrix())) < 1e-12);
    }

    #[test]
    fn json_round_trip_and_layout() {
        let ch = Channel::from_kraus(vec![from_rows_c(
            2,
            2,
            &[(1., 0.), (2., 0.5), (3., 0.), (4., -1.)],
        )])
        .unwrap();
        let s = serde_json::to_string(&ch).unwrap();
        assert_eq!(
            s,
            r#"{"dim_in":2,"dim_out":2,"kraus":[[[1.0,0.0],[2.0,0.5],[3.0,0.0],[4.0,-1.0]]]}"#
        );
        let back: Channel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ch);
        let bad = r#"{"dim_in":2,"dim_out":2,"kraus":[[[1.0,0.0]]]}"#;
        assert!(serde_json::from_str::<Channel>(bad).is_err());
    }

    fn from_rows_c(rows: usize, cols: usize, v: &[(f64, f64)]) -> CMatrix {
        let e: Vec<_> = v.iter().map(|&(a, b)| c(a, b)).collect();
        linalg::from_rows(rows, cols, &e)
    }
}
