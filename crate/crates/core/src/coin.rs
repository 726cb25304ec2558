//! Coin matrices and the spatial coin field.
//!
//! A [`CoinField`] is "two-phase with finitely many defects": `c_minus` left
//! of `x_minus`, an explicit list of defect coins on `[x_minus, x_plus)`, and
//! `c_plus` from `x_plus` rightward. The window may be empty.

use std::f64::consts::TAU;
use std::fmt;

use crate::linalg::{arg_2pi, cis, unitarity_defect, wrap_angle, Complex, Mat3, ONE, ZERO};

/// Unitarity and determinant tolerance enforced at construction.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoinError {
    #[error("coin has non-finite entries")]
    NonFinite,
    #[error("coin is not unitary: max |C†C - I| = {deviation:.3e} exceeds tolerance {tol:.1e}")]
    NotUnitary { deviation: f64, tol: f64 },
    #[error(
        "degenerate coin: |a({row},{col})| = {modulus:.12} equals 1, the walk reduces to a two-state walk"
    )]
    Degenerate { row: usize, col: usize, modulus: f64 },
    #[error("degenerate coin: a(1,1) and a(3,3) both vanish, the transfer matrix is never defined")]
    VanishingCorners,
    #[error("unknown coin preset {0:?}")]
    UnknownPreset(String),
}

/// One 3×3 unitary coin with its cached determinant phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoinMatrix {
    m: Mat3,
    det_phase: f64,
    det_unit: Complex,
}

impl CoinMatrix {
    /// Validates unitarity, unit determinant and the non-degeneracy
    /// assumptions `|a13|, |a22|, |a31| ≠ 1`.
    pub fn new(m: Mat3) -> Result<Self, CoinError> {
        if !m.is_finite() {
            return Err(CoinError::NonFinite);
        }
        let deviation = unitarity_defect(&m);
        if deviation > UNITARY_TOL {
            return Err(CoinError::NotUnitary {
                deviation,
                tol: UNITARY_TOL,
            });
        }
        for (row, col) in [(1, 3), (2, 2), (3, 1)] {
            let modulus = m.0[row - 1][col - 1].norm();
            if (modulus - 1.0).abs() <= UNITARY_TOL {
                return Err(CoinError::Degenerate { row, col, modulus });
            }
        }
        if m.0[0][0].norm() <= UNITARY_TOL && m.0[2][2].norm() <= UNITARY_TOL {
            return Err(CoinError::VanishingCorners);
        }
        let det = m.det();
        if (det.norm() - 1.0).abs() > UNITARY_TOL {
            return Err(CoinError::NotUnitary {
                deviation: (det.norm() - 1.0).abs(),
                tol: UNITARY_TOL,
            });
        }
        let det_phase = arg_2pi(det);
        Ok(CoinMatrix {
            m,
            det_phase,
            det_unit: cis(det_phase),
        })
    }

    /// The 3-point discrete Fourier transform `(1/√3)[[1,1,1],[1,ω,ω²],[1,ω²,ω]]`.
    pub fn fourier() -> Self {
        let w = cis(TAU / 3.0);
        let w2 = cis(2.0 * TAU / 3.0);
        let m = Mat3([[ONE, ONE, ONE], [ONE, w, w2], [ONE, w2, w]]);
        Self::new(m.scale(Complex::from(1.0 / 3f64.sqrt()))).expect("Fourier coin is valid")
    }

    /// The Grover coin `(2/3)J − I`.
    pub fn grover() -> Self {
        let d = Complex::from(-1.0 / 3.0);
        let o = Complex::from(2.0 / 3.0);
        Self::new(Mat3([[d, o, o], [o, d, o], [o, o, d]])).expect("Grover coin is valid")
    }

    /// Look up a named preset and multiply it by `e^{iθ}`.
    pub fn preset(name: &str, phase: f64) -> Result<Self, CoinError> {
        let base = match name {
            "fourier" => Self::fourier(),
            "grover" => Self::grover(),
            "identity" => return Self::new(Mat3::IDENTITY),
            other => return Err(CoinError::UnknownPreset(other.to_string())),
        };
        Ok(base.phase_scale(phase))
    }

    /// `e^{iθ}·C`. The determinant phase shifts by `3θ`.
    pub fn phase_scale(&self, theta: f64) -> Self {
        if theta == 0.0 {
            return *self;
        }
        let det_phase = wrap_angle(self.det_phase + 3.0 * theta);
        CoinMatrix {
            m: self.m.scale(cis(theta)),
            det_phase,
            det_unit: cis(det_phase),
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    /// Entry `a^{(i,j)}` with 1-based indices.
    #[inline]
    pub fn a(&self, i: usize, j: usize) -> Complex {
        self.m.0[i - 1][j - 1]
    }

    /// `Δ ∈ [0, 2π)` with `e^{iΔ} = det C`.
    pub fn det_phase(&self) -> f64 {
        self.det_phase
    }

    /// `e^{iΔ}`.
    #[inline]
    pub fn det_unit(&self) -> Complex {
        self.det_unit
    }
}

impl fmt::Display for CoinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.m.0 {
            let cells: Vec<String> = row.iter().map(|z| format!("{:+.6}{:+.6}i", z.re, z.im)).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("defect window requires x_minus <= 0 <= x_plus, got [{x_minus}, {x_plus})")]
    BadWindow { x_minus: i64, x_plus: i64 },
    #[error("defect list has {got} coins but the window [{x_minus}, {x_plus}) needs {expected}")]
    DefectCount {
        x_minus: i64,
        x_plus: i64,
        expected: usize,
        got: usize,
    },
}

/// Spatial coin assignment `x ↦ C_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoinField {
    c_minus: CoinMatrix,
    c_plus: CoinMatrix,
    x_minus: i64,
    x_plus: i64,
    defects: Vec<CoinMatrix>,
}

impl CoinField {
    pub fn new(
        c_minus: CoinMatrix,
        c_plus: CoinMatrix,
        x_minus: i64,
        x_plus: i64,
        defects: Vec<CoinMatrix>,
    ) -> Result<Self, FieldError> {
        if x_minus > 0 || x_plus < 0 {
            return Err(FieldError::BadWindow { x_minus, x_plus });
        }
        let expected = (x_plus - x_minus) as usize;
        if defects.len() != expected {
            return Err(FieldError::DefectCount {
                x_minus,
                x_plus,
                expected,
                got: defects.len(),
            });
        }
        Ok(CoinField {
            c_minus,
            c_plus,
            x_minus,
            x_plus,
            defects,
        })
    }

    /// Same coin everywhere.
    pub fn homogeneous(coin: CoinMatrix) -> Self {
        CoinField {
            c_minus: coin,
            c_plus: coin,
            x_minus: 0,
            x_plus: 0,
            defects: Vec::new(),
        }
    }

    /// `origin` at `x = 0`, `bulk` elsewhere. Encoded as the window `[0, 1)`.
    pub fn one_defect(bulk: CoinMatrix, origin: CoinMatrix) -> Self {
        CoinField {
            c_minus: bulk,
            c_plus: bulk,
            x_minus: 0,
            x_plus: 1,
            defects: vec![origin],
        }
    }

    /// `left` for `x < 0`, `right` for `x ≥ 0`.
    pub fn two_phase(left: CoinMatrix, right: CoinMatrix) -> Self {
        CoinField {
            c_minus: left,
            c_plus: right,
            x_minus: 0,
            x_plus: 0,
            defects: Vec::new(),
        }
    }

    #[inline]
    pub fn lookup(&self, x: i64) -> &CoinMatrix {
        if x >= self.x_plus {
            &self.c_plus
        } else if x < self.x_minus {
            &self.c_minus
        } else {
            &self.defects[(x - self.x_minus) as usize]
        }
    }

    pub fn c_minus(&self) -> &CoinMatrix {
        &self.c_minus
    }

    pub fn c_plus(&self) -> &CoinMatrix {
        &self.c_plus
    }

    pub fn x_minus(&self) -> i64 {
        self.x_minus
    }

    pub fn x_plus(&self) -> i64 {
        self.x_plus
    }

    pub fn defects(&self) -> &[CoinMatrix] {
        &self.defects
    }

    /// Every coin that occurs somewhere on the lattice, without exact duplicates,
    /// in the order left tail, defects, right tail.
    pub fn distinct_coins(&self) -> Vec<CoinMatrix> {
        let mut out: Vec<CoinMatrix> = Vec::new();
        let all = std::iter::once(&self.c_minus)
            .chain(self.defects.iter())
            .chain(std::iter::once(&self.c_plus));
        for c in all {
            if !out.iter().any(|o| o.matrix() == c.matrix()) {
                out.push(*c);
            }
        }
        out
    }
}

/// Builds a unitary by Gram–Schmidt on the columns of `m`.
///
/// Used to draw random coins; returns `None` when the columns are linearly
/// dependent to working precision.
pub fn orthonormalize(m: &Mat3) -> Option<Mat3> {
    let mut cols = [[ZERO; 3]; 3];
    for j in 0..3 {
        let mut v = [m.0[0][j], m.0[1][j], m.0[2][j]];
        for prev in cols.iter().take(j) {
            let dot: Complex = (0..3).map(|k| prev[k].conj() * v[k]).sum();
            for k in 0..3 {
                v[k] -= prev[k] * dot;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n < 1e-8 {
            return None;
        }
        cols[j] = v.map(|z| z / n);
    }
    let mut out = [[ZERO; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, z) in row.iter_mut().enumerate() {
            *z = cols[c][r];
        }
    }
    Some(Mat3(out))
}
