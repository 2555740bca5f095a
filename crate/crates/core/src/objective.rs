//! Objective operators for the linear functionals `S ↦ F_C(D T E)`.
//!
//! A linear functional that is positive on completely positive maps can be
//! written `f(S) = tr(F̂ Ŝ) = Σ_i ⟨⟨s_i|F̂|s_i⟩⟩` for a positive operator `F̂`
//! on `HS(H_in, H_out)`. For the channel fidelity of a composition in which
//! the variable channel enters as `tr(g_j s_i)` for the Kraus operators
//! `g_j` of the fixed part, `F̂ = d0^{-2} Σ_j |g_j†⟩⟩⟨⟨g_j†|`.
//!
//! Entries of that sum only depend on the action of the fixed part on
//! matrix units, so the encoder and decoder slots are built from `d0²`
//! applications of the fixed channels instead of enumerating Kraus
//! products.

use num_complex::Complex64;

use crate::channel::{choi_of, kraus_of, Channel, CpMap};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigensystem, vec_row_major, CMatrix, DEFAULT_CUTOFF};

/// Positive semi-definite operator on `HS(H_in, H_out)` defining the linear
/// objective `f(S) = tr(F̂ Ŝ)` for channels `S: B(H_in) → B(H_out)`.
#[derive(Debug, Clone)]
pub struct ObjectiveOperator {
    dim_in: usize,
    dim_out: usize,
    matrix: CMatrix,
    /// `G` with `F̂ = G G†`, kept when it has fewer columns than rows.
    factor: Option<CMatrix>,
}

impl ObjectiveOperator {
    /// Wraps a matrix after checking size, Hermiticity, and positivity.
    pub fn new(dim_in: usize, dim_out: usize, matrix: CMatrix) -> Result<Self> {
        let n = dim_in * dim_out;
        if matrix.shape() != (n, n) {
            return Err(Error::DimMismatch {
                context: "objective operator size",
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let eig = hermitian_eigensystem(&matrix)?;
        if eig.min() < -crate::linalg::NEGATIVE_TOL * eig.max().max(0.0) {
            return Err(Error::NotPsd {
                min: eig.min(),
                max: eig.max(),
            });
        }
        Ok(Self {
            dim_in,
            dim_out,
            matrix: (&matrix + matrix.adjoint()).scale(0.5),
            factor: None,
        })
    }

    /// `F̂ = G G†` for a `(dim_in·dim_out) x k` matrix `G`.
    pub fn from_factor(dim_in: usize, dim_out: usize, g: CMatrix) -> Result<Self> {
        let n = dim_in * dim_out;
        if g.nrows() != n {
            return Err(Error::DimMismatch {
                context: "objective factor rows",
                expected: n,
                found: g.nrows(),
            });
        }
        let matrix = &g * g.adjoint();
        let factor = (g.ncols() < n).then_some(g);
        Ok(Self {
            dim_in,
            dim_out,
            matrix,
            factor,
        })
    }

    /// The objective `f = F_C` on a square slot: `F̂ = d^{-2} |I⟩⟩⟨⟨I|`.
    pub fn channel_fidelity(d: usize) -> Self {
        let g = vec_row_major(&CMatrix::identity(d, d)).scale(1.0 / d as f64);
        Self::from_factor(d, d, g).expect("square slot")
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

    /// Applies `F̂` to each column of `k`.
    pub fn apply_columns(&self, k: &CMatrix) -> CMatrix {
        match &self.factor {
            Some(g) => g * (g.adjoint() * k),
            None => &self.matrix * k,
        }
    }

    /// Applies `F̂` to one Hilbert-Schmidt operator `x: H_in → H_out`.
    pub fn act(&self, x: &CMatrix) -> CMatrix {
        let v = self.apply_columns(&vec_row_major(x));
        crate::linalg::unvec_row_major(v.as_slice(), self.dim_out, self.dim_in)
    }

    pub(crate) fn check_slot(&self, s: &Channel) -> Result<()> {
        if s.dim_in() != self.dim_in {
            return Err(Error::DimMismatch {
                context: "objective slot input",
                expected: self.dim_in,
                found: s.dim_in(),
            });
        }
        if s.dim_out() != self.dim_out {
            return Err(Error::DimMismatch {
                context: "objective slot output",
                expected: self.dim_out,
                found: s.dim_out(),
            });
        }
        Ok(())
    }
}

/// `Σ_i ⟨⟨s_i|F̂|s_i⟩⟩` for the Kraus vectors stored as columns of `k`.
pub(crate) fn quadratic_form(k: &CMatrix, fk: &CMatrix) -> f64 {
    k.iter()
        .zip(fk.iter())
        .map(|(a, b)| (a.conj() * b).re)
        .sum()
}

/// `f(S) = tr(F̂ Ŝ) = Σ_i ⟨⟨s_i|F̂|s_i⟩⟩`.
pub fn evaluate_objective(f: &ObjectiveOperator, s: &Channel) -> Result<f64> {
    f.check_slot(s)?;
    let k = s.kraus_columns();
    let fk = f.apply_columns(&k);
    Ok(quadratic_form(&k, &fk))
}

fn unit(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = Complex64::new(1.0, 0.0);
    m
}

/// Objective for the encoder slot: `f(E) = F_C(D ∘ T ∘ E)`.
///
/// With `Φ = D ∘ T`, `F̂[(r,c),(r',c')] = d0^{-2} ⟨r| Φ*(|c⟩⟨c'|) |r'⟩`,
/// where `r` indexes `H1` and `c` indexes `H0`.
pub fn encoder_objective(d: &Channel, t: &dyn CpMap) -> Result<ObjectiveOperator> {
    if t.dim_out() != d.dim_in() {
        return Err(Error::DimMismatch {
            context: "encoder_objective: noise output vs decoder input",
            expected: d.dim_in(),
            found: t.dim_out(),
        });
    }
    let d0 = d.dim_out();
    let d1 = t.dim_in();
    let n = d1 * d0;
    let scale = 1.0 / (d0 * d0) as f64;
    let mut f = CMatrix::zeros(n, n);
    for c in 0..d0 {
        for cp in 0..d0 {
            let x = t.apply_adjoint(&d.apply_adjoint(&unit(d0, c, cp))?)?;
            for r in 0..d1 {
                for rp in 0..d1 {
                    f[(r * d0 + c, rp * d0 + cp)] = x[(r, rp)] * scale;
                }
            }
        }
    }
    Ok(ObjectiveOperator {
        dim_in: d0,
        dim_out: d1,
        matrix: hermitize(f),
        factor: None,
    })
}

/// Objective for the decoder slot: `f(D) = F_C(D ∘ T ∘ E)`.
///
/// With `Ψ = T ∘ E`, `F̂[(r,c),(r',c')] = d0^{-2} ⟨c'| Ψ(|r'⟩⟨r|) |c⟩`,
/// where `r` indexes `H0` and `c` indexes `H2`.
pub fn decoder_objective(e: &Channel, t: &dyn CpMap) -> Result<ObjectiveOperator> {
    if e.dim_out() != t.dim_in() {
        return Err(Error::DimMismatch {
            context: "decoder_objective: encoder output vs noise input",
            expected: t.dim_in(),
            found: e.dim_out(),
        });
    }
    let d0 = e.dim_in();
    let d2 = t.dim_out();
    let n = d0 * d2;
    let scale = 1.0 / (d0 * d0) as f64;
    let mut f = CMatrix::zeros(n, n);
    for r in 0..d0 {
        for rp in 0..d0 {
            let x = t.apply(&e.apply(&unit(d0, rp, r))?)?;
            for c in 0..d2 {
                for cp in 0..d2 {
                    f[(r * d2 + c, rp * d2 + cp)] = x[(cp, c)] * scale;
                }
            }
        }
    }
    Ok(ObjectiveOperator {
        dim_in: d2,
        dim_out: d0,
        matrix: hermitize(f),
        factor: None,
    })
}

/// Objective for the noise slot: `f(T') = F_C(D ∘ T' ∘ E)` with `E`, `D`
/// fixed.
///
/// `F̂[(r,c),(r',c')] = d0^{-2} Σ_{k,k'} Ê[(c',k),(c,k')] D̂[(k,r'),(k',r)]`
/// with `r ∈ H2`, `c ∈ H1` and `Ê`, `D̂` the Choi operators. When the
/// compressed Kraus ranks are small a factor `G` with columns
/// `d0^{-1} |d_a† e_i†⟩⟩` is kept for fast application.
pub fn middle_objective(e: &Channel, d: &Channel) -> Result<ObjectiveOperator> {
    if e.dim_in() != d.dim_out() {
        return Err(Error::DimMismatch {
            context: "middle_objective: logical dimensions",
            expected: e.dim_in(),
            found: d.dim_out(),
        });
    }
    let d0 = e.dim_in();
    let d1 = e.dim_out();
    let d2 = d.dim_in();
    let n = d1 * d2;
    let scale = 1.0 / (d0 * d0) as f64;

    let je = choi_of(e);
    let jd = choi_of(d);
    let (je, jd) = (je.matrix(), jd.matrix());
    let mut f = CMatrix::zeros(n, n);
    for r in 0..d2 {
        for c in 0..d1 {
            for rp in 0..d2 {
                for cp in 0..d1 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..d0 {
                        for kp in 0..d0 {
                            acc += je[(cp * d0 + k, c * d0 + kp)] * jd[(k * d2 + rp, kp * d2 + r)];
                        }
                    }
                    f[(r * d1 + c, rp * d1 + cp)] = acc * scale;
                }
            }
        }
    }

    let ec = kraus_of(&choi_of(e), DEFAULT_CUTOFF)?;
    let dc = kraus_of(&choi_of(d), DEFAULT_CUTOFF)?;
    let cols = ec.kraus_count() * dc.kraus_count();
    let factor = (cols < n).then(|| {
        let mut g = CMatrix::zeros(n, cols);
        let mut j = 0;
        for da in dc.kraus() {
            for ei in ec.kraus() {
                let h = da.adjoint() * ei.adjoint();
                g.set_column(j, &vec_row_major(&h).column(0).scale(1.0 / d0 as f64));
                j += 1;
            }
        }
        g
    });
    Ok(ObjectiveOperator {
        dim_in: d1,
        dim_out: d2,
        matrix: hermitize(f),
        factor,
    })
}

fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()).scale(0.5)
}
