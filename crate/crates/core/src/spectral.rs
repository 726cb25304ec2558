//! Point spectrum of `U = SC` for a two-phase field with finitely many defects.
//!
//! Away from the exceptional set Λ₀ an eigenvalue `e^{iλ}` needs decaying
//! tails on both sides, so `λ ∈ Λ` for both asymptotic coins, and the
//! interior-propagated left solution must line up with the right decaying
//! direction: `χ(λ) = T_[x₋,x₊]·v^>_{−∞} × v^<_∞ = 0`. Roots of `χ` are found by
//! a grid scan of `|χ|` followed by golden-section refinement. Points of Λ₀
//! are handled separately by [`lambda0_adjudicate`].

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

use crate::coin::{CoinField, CoinMatrix};
use crate::evolution::{eigen_residual, StateVector};
use crate::linalg::{angle_diff, cis, eig2, wrap_angle, Complex, Mat2, Vec2};
use crate::transfer::{
    compact_support_status, iota_inverse, is_a_zero, lambda0_angle, transfer_matrix_at,
    zero_case_vectors, CompactSupport, ReducedState,
};

/// `λ ∈ Λ` requires `|tr T| ≥ 2 + TOL_TR`.
pub const TOL_TR: f64 = 1e-9;
/// A refined minimum is a root iff `|χ| ≤ CHI_ACCEPT` there.
pub const CHI_ACCEPT: f64 = 1e-8;
/// Scan points closer than this to Λ₀ are skipped.
pub const LAMBDA0_GUARD: f64 = 1e-6;
pub const DEFAULT_REFINE_TOL: f64 = 1e-12;
pub const MAX_REFINE_ITERS: usize = 200;
/// Certification threshold on `‖UΨ − e^{iλ}Ψ‖/‖Ψ‖`.
pub const OP_RESIDUAL_TOL: f64 = 1e-8;
/// Tails are truncated once `|ζ|^m` drops below this.
pub const TAIL_CUTOFF: f64 = 1e-12;
/// Largest tail amplitude, relative to the peak, tolerated at a window edge.
pub const BOUNDARY_TAIL_TOL: f64 = 1e-10;
pub const MAX_TAIL_SITES: usize = 100_000;
pub const MIN_GRID: usize = 1000;

/// Relative tolerance for "these two directions coincide" in the Λ₀ chain.
const PARALLEL_TOL: f64 = 1e-9;
/// `|dχ/dλ|` below this at an accepted root hints at a tangential zero.
const FLAT_ROOT_SLOPE: f64 = 1e-6;
const LAMBDA0_DEDUP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("A vanishes at lambda = {lambda:.16e}; the transfer matrix is undefined there")]
    AZero { lambda: f64 },
    #[error("lambda = {lambda:.16e} is not in Lambda for the {side} asymptotic coin")]
    NotInLambda { lambda: f64, side: &'static str },
    #[error("grid of {n} points is too coarse (need at least {MIN_GRID})")]
    GridTooSmall { n: usize },
    #[error("refinement tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error(
        "window [{lo}, {hi}] truncates the eigenvector (edge amplitude {tail:.3e} of the peak); \
         need m >= {required_m} sites beyond [x_minus, x_plus]"
    )]
    WindowTooSmall { lo: i64, hi: i64, tail: f64, required_m: usize },
    #[error("decay rate |zeta| = {rate:.12} needs {required_m} tail sites, above the cap of {MAX_TAIL_SITES}")]
    TailTooLong { rate: f64, required_m: usize },
}

/// Eigen-data of an asymptotic transfer matrix `T_{±∞}(λ)`.
#[derive(Clone, Copy, Debug)]
pub struct AsymptoticSpectrum {
    pub zeta_less: Complex,
    pub zeta_greater: Complex,
    pub v_less: Vec2,
    pub v_greater: Vec2,
    pub trace: Complex,
    pub in_lambda: bool,
}

/// Splits the eigenvalues of `t` by modulus.
pub fn spectrum_of(t: &Mat2) -> AsymptoticSpectrum {
    let eig = eig2(t);
    let (zeta_less, v_less, zeta_greater, v_greater) = if eig.plus.norm() <= eig.minus.norm() {
        (eig.plus, eig.v_plus, eig.minus, eig.v_minus)
    } else {
        (eig.minus, eig.v_minus, eig.plus, eig.v_plus)
    };
    let trace = t.trace();
    AsymptoticSpectrum {
        zeta_less,
        zeta_greater,
        v_less,
        v_greater,
        trace,
        in_lambda: trace.norm() >= 2.0 + TOL_TR && !eig.degenerate,
    }
}

pub fn asymptotic_spectrum(coin: &CoinMatrix, lambda: f64) -> Result<AsymptoticSpectrum, SpectralError> {
    transfer_matrix_at(coin, cis(lambda))
        .map(|t| spectrum_of(&t))
        .ok_or(SpectralError::AZero { lambda })
}

/// `T_to ··· T_from`; the identity when `to < from`. `None` if some `A_x` vanishes.
fn ordered_product(field: &CoinField, e: Complex, from: i64, to: i64) -> Option<Mat2> {
    let mut acc = Mat2::IDENTITY;
    for x in from..=to {
        acc = transfer_matrix_at(field.lookup(x), e)? * acc;
    }
    Some(acc)
}

/// Distinct points of Λ₀ over every coin in the field, sorted in `[0, 2π)`.
pub fn lambda0_set(field: &CoinField) -> Vec<f64> {
    let mut out: Vec<f64> = field.distinct_coins().iter().filter_map(lambda0_angle).collect();
    out.sort_by(f64::total_cmp);
    let mut dedup: Vec<f64> = Vec::with_capacity(out.len());
    for l in out {
        if !dedup.iter().any(|d| angle_diff(*d, l).abs() <= LAMBDA0_DEDUP) {
            dedup.push(l);
        }
    }
    dedup
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChiSample {
    pub lambda: f64,
    /// NaN when some transfer matrix is undefined.
    pub chi: Complex,
    pub in_lambda: bool,
    pub near_lambda0: bool,
}

impl ChiSample {
    /// Usable for root search.
    pub fn admissible(&self) -> bool {
        self.in_lambda && !self.near_lambda0 && self.chi.re.is_finite() && self.chi.im.is_finite()
    }
}

/// `χ` for one field with Λ₀ precomputed.
#[derive(Clone, Debug)]
pub struct ChiFunction<'a> {
    field: &'a CoinField,
    lambda0: Vec<f64>,
}

impl<'a> ChiFunction<'a> {
    pub fn new(field: &'a CoinField) -> Self {
        ChiFunction {
            field,
            lambda0: lambda0_set(field),
        }
    }

    pub fn lambda0(&self) -> &[f64] {
        &self.lambda0
    }

    pub fn near_lambda0(&self, lambda: f64) -> bool {
        self.lambda0
            .iter()
            .any(|l| angle_diff(lambda, *l).abs() < LAMBDA0_GUARD)
    }

    pub fn sample(&self, lambda: f64) -> ChiSample {
        let lambda = wrap_angle(lambda);
        let near_lambda0 = self.near_lambda0(lambda);
        let nan = Complex::new(f64::NAN, f64::NAN);
        let (chi, in_lambda) = match self.eval(lambda) {
            Some((chi, in_lambda)) => (chi, in_lambda),
            None => (nan, false),
        };
        ChiSample {
            lambda,
            chi,
            in_lambda,
            near_lambda0,
        }
    }

    fn eval(&self, lambda: f64) -> Option<(Complex, bool)> {
        let e = cis(lambda);
        let f = self.field;
        let left = spectrum_of(&transfer_matrix_at(f.c_minus(), e)?);
        let right = spectrum_of(&transfer_matrix_at(f.c_plus(), e)?);
        let prod = ordered_product(f, e, f.x_minus(), f.x_plus())?;
        let chi = (prod * left.v_greater).cross(&right.v_less);
        Some((chi, left.in_lambda && right.in_lambda))
    }

    /// `|χ|²` where admissible, `+∞` elsewhere.
    fn objective(&self, lambda: f64) -> f64 {
        let s = self.sample(lambda);
        if s.admissible() {
            s.chi.norm_sqr()
        } else {
            f64::INFINITY
        }
    }
}

pub fn chi(field: &CoinField, lambda: f64) -> ChiSample {
    ChiFunction::new(field).sample(lambda)
}

/// `χ` on the uniform grid `λ_k = 2πk/n`, evaluated in parallel.
pub fn scan(field: &CoinField, grid_n: usize) -> Vec<ChiSample> {
    let f = ChiFunction::new(field);
    (0..grid_n)
        .into_par_iter()
        .map(|k| f.sample(TAU * k as f64 / grid_n as f64))
        .collect()
}

/// How an eigenvalue was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootSource {
    ChiRoot,
    Lambda0Compact,
}

#[derive(Clone, Debug)]
pub struct EigenvalueRecord {
    pub lambda: f64,
    /// `|χ|` at the refined root; zero for Λ₀ records.
    pub chi_residual: f64,
    /// `ζ^<_∞`, or `None` when the right side is compactly supported.
    pub zeta_right: Option<Complex>,
    /// `ζ^>_{−∞}`, or `None` when the left side is compactly supported.
    pub zeta_left: Option<Complex>,
    pub eigvec: StateVector,
    pub op_residual: f64,
    pub source: RootSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    RefinementNotConverged,
    NotLocalMinimum,
    FlatRoot,
    ResidualTooLarge,
    EigenvectorFailed,
    UnderDetermined,
    RatioUndefined,
    Multiplicity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub lambda: Option<f64>,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    fn at(lambda: f64, kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Diagnostic {
            lambda: Some(lambda),
            kind,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RootSearch {
    pub records: Vec<EigenvalueRecord>,
    pub diagnostics: Vec<Diagnostic>,
    /// Refined local minima of `|χ|` that stayed above [`CHI_ACCEPT`], as `(λ, |χ|)`.
    pub rejected_minima: Vec<(f64, f64)>,
}

struct Refined {
    lambda: f64,
    value: f64,
    converged: bool,
}

/// Golden-section minimisation of `f` on `[a, b]` down to width `tol`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Refined {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while b - a > tol && iters < MAX_REFINE_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let (lambda, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    Refined {
        lambda,
        value,
        converged: b - a <= tol,
    }
}

/// Scan, refine and certify the roots of `χ`.
pub fn find_roots(field: &CoinField, grid_n: usize, refine_tol: f64) -> Result<RootSearch, SpectralError> {
    if grid_n < MIN_GRID {
        return Err(SpectralError::GridTooSmall { n: grid_n });
    }
    if !(refine_tol > 0.0 && refine_tol.is_finite()) {
        return Err(SpectralError::BadTolerance(refine_tol));
    }
    let f = ChiFunction::new(field);
    let samples = scan(field, grid_n);
    let h = TAU / grid_n as f64;
    let value = |k: usize| {
        let s = &samples[k % grid_n];
        s.admissible().then(|| s.chi.norm())
    };
    let brackets: Vec<usize> = (0..grid_n)
        .filter(|&k| {
            match (value(k + grid_n - 1), value(k), value(k + 1)) {
                (Some(l), Some(m), Some(r)) => m <= l && m < r,
                _ => false,
            }
        })
        .collect();

    let refined: Vec<(usize, Refined)> = brackets
        .par_iter()
        .map(|&k| {
            let center = TAU * k as f64 / grid_n as f64;
            (k, golden_section(|l| f.objective(l), center - h, center + h, refine_tol))
        })
        .collect();

    let mut out = RootSearch::default();
    let mut roots: Vec<(f64, f64)> = Vec::new();
    for (k, r) in refined {
        let lambda = wrap_angle(r.lambda);
        let abs_chi = r.value.sqrt();
        if !r.converged {
            out.diagnostics.push(Diagnostic::at(
                lambda,
                DiagnosticKind::RefinementNotConverged,
                format!(
                    "golden-section bracket around grid point {k} did not shrink below {refine_tol:e} \
                     in {MAX_REFINE_ITERS} iterations"
                ),
            ));
        }
        if abs_chi > CHI_ACCEPT || !abs_chi.is_finite() {
            out.rejected_minima.push((lambda, abs_chi));
            continue;
        }
        if let Some(prev) = roots.iter_mut().find(|(l, _)| angle_diff(*l, lambda).abs() <= 1e-9) {
            if abs_chi < prev.1 {
                *prev = (lambda, abs_chi);
            }
            continue;
        }
        roots.push((lambda, abs_chi));
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));

    for (lambda, abs_chi) in roots {
        let probe = 10.0 * refine_tol;
        let side = f.objective(lambda - probe).sqrt().min(f.objective(lambda + probe).sqrt());
        if side <= abs_chi {
            out.diagnostics.push(Diagnostic::at(
                lambda,
                DiagnosticKind::NotLocalMinimum,
                format!("|chi| = {abs_chi:.3e} is not below its value {side:.3e} at lambda ± {probe:e}"),
            ));
        }
        let dh = 1e-6;
        let slope = (f.sample(lambda + dh).chi - f.sample(lambda - dh).chi).norm() / (2.0 * dh);
        if slope < FLAT_ROOT_SLOPE {
            out.diagnostics.push(Diagnostic::at(
                lambda,
                DiagnosticKind::FlatRoot,
                format!("|dchi/dlambda| = {slope:.3e} at the root; it may be a tangential (double) zero"),
            ));
        }
        match certify_chi_root(field, lambda, abs_chi) {
            Ok(rec) if rec.op_residual <= OP_RESIDUAL_TOL => out.records.push(rec),
            Ok(rec) => out.diagnostics.push(Diagnostic::at(
                lambda,
                DiagnosticKind::ResidualTooLarge,
                format!(
                    "reconstructed eigenvector has residual {:.3e} > {OP_RESIDUAL_TOL:e}",
                    rec.op_residual
                ),
            )),
            Err(err) => out.diagnostics.push(Diagnostic::at(
                lambda,
                DiagnosticKind::EigenvectorFailed,
                err.to_string(),
            )),
        }
    }
    Ok(out)
}

fn certify_chi_root(field: &CoinField, lambda: f64, abs_chi: f64) -> Result<EigenvalueRecord, SpectralError> {
    let left = asymptotic_spectrum(field.c_minus(), lambda)?;
    let right = asymptotic_spectrum(field.c_plus(), lambda)?;
    let eigvec = build_eigenvector(field, lambda, None)?;
    let op_residual = eigen_residual(field, &eigvec, lambda);
    Ok(EigenvalueRecord {
        lambda,
        chi_residual: abs_chi,
        zeta_right: Some(right.zeta_less),
        zeta_left: Some(left.zeta_greater),
        eigvec,
        op_residual,
        source: RootSource::ChiRoot,
    })
}

/// Sites needed for `rate^m ≤ TAIL_CUTOFF`, for a decay rate `rate < 1`.
pub fn tail_sites(rate: f64) -> Result<usize, SpectralError> {
    let too_long = |required_m| SpectralError::TailTooLong { rate, required_m };
    if rate.is_nan() || rate >= 1.0 {
        return Err(too_long(usize::MAX));
    }
    if rate == 0.0 {
        return Ok(1);
    }
    let m = (TAIL_CUTOFF.ln() / rate.ln()).ceil().max(1.0);
    if m > MAX_TAIL_SITES as f64 {
        return Err(too_long(if m.is_finite() { m as usize } else { usize::MAX }));
    }
    Ok(m as usize)
}

/// A reduced profile: explicit values on `[start, start + len)`, optionally
/// continued geometrically to the left (`Ψ̃(x−1) = Ψ̃(x)/ζ`) and to the right
/// (`Ψ̃(x+1) = ζ·Ψ̃(x)`).
struct Profile {
    start: i64,
    core: Vec<Vec2>,
    left_zeta: Option<Complex>,
    right_zeta: Option<Complex>,
}

impl Profile {
    fn required_tails(&self) -> Result<(usize, usize), SpectralError> {
        let left = match self.left_zeta {
            Some(z) => tail_sites(1.0 / z.norm())?,
            None => 0,
        };
        let right = match self.right_zeta {
            Some(z) => tail_sites(z.norm())?,
            None => 0,
        };
        Ok((left, right))
    }

    /// Values on `[lo, hi]`.
    fn render(&self, lo: i64, hi: i64) -> ReducedState {
        let end = self.start + self.core.len() as i64 - 1;
        let first = self.core[0];
        let last = *self.core.last().unwrap();
        let mut values = vec![Vec2::ZERO; (hi - lo + 1) as usize];
        let idx = |x: i64| (x - lo) as usize;
        for x in lo.max(self.start)..=hi.min(end) {
            values[idx(x)] = self.core[(x - self.start) as usize];
        }
        if let Some(z) = self.left_zeta {
            let inv = z.inv();
            let mut v = first;
            for x in (lo..self.start).rev() {
                v = v.scale(inv);
                if x <= hi {
                    values[idx(x)] = v;
                }
            }
        }
        if let Some(z) = self.right_zeta {
            let mut v = last;
            for x in end + 1..=hi {
                v = v.scale(z);
                if x >= lo {
                    values[idx(x)] = v;
                }
            }
        }
        ReducedState { lo, values }
    }
}

/// `ι⁻¹` of the rendered profile, normalised. `window` defaults to the
/// profile extended by enough sites for its tails to fall below [`TAIL_CUTOFF`].
fn realize(
    field: &CoinField,
    lambda: f64,
    profile: &Profile,
    window: Option<(i64, i64)>,
) -> Result<StateVector, SpectralError> {
    let (ml, mr) = profile.required_tails()?;
    let end = profile.start + profile.core.len() as i64 - 1;
    let (lo, hi) = window.unwrap_or((profile.start - ml as i64, end + mr as i64));
    let reduced = profile.render(lo, hi);
    let peak = reduced.values.iter().map(Vec2::norm).fold(0.0, f64::max);
    // Compactly supported sides end exactly; only geometric tails are truncated.
    let left_edge = if profile.left_zeta.is_some() { reduced.values[0].norm() } else { 0.0 };
    let right_edge = if profile.right_zeta.is_some() { reduced.values.last().unwrap().norm() } else { 0.0 };
    let edge = left_edge.max(right_edge);
    let core_inside = lo <= profile.start && end <= hi;
    if !core_inside || (peak > 0.0 && edge > BOUNDARY_TAIL_TOL * peak) {
        return Err(SpectralError::WindowTooSmall {
            lo,
            hi,
            tail: if peak > 0.0 { edge / peak } else { f64::INFINITY },
            required_m: ml.max(mr),
        });
    }
    Ok(iota_inverse(&reduced, field, lambda).normalized())
}

/// Eigenvector at a root of `χ`: `Ψ̃(x₋) = v^>_{−∞}`, interior by transfer
/// matrices, geometric tails outside `[x₋, x₊]`, then `ι⁻¹` and normalisation.
///
/// `window` is the range of the reduced profile; `None` picks `[x₋ − m, x₊ + m]`
/// with `|ζ|^m ≤` [`TAIL_CUTOFF`].
pub fn build_eigenvector(
    field: &CoinField,
    lambda: f64,
    window: Option<(i64, i64)>,
) -> Result<StateVector, SpectralError> {
    let left = asymptotic_spectrum(field.c_minus(), lambda)?;
    let right = asymptotic_spectrum(field.c_plus(), lambda)?;
    if !left.in_lambda {
        return Err(SpectralError::NotInLambda { lambda, side: "left" });
    }
    if !right.in_lambda {
        return Err(SpectralError::NotInLambda { lambda, side: "right" });
    }
    let e = cis(lambda);
    let mut core = vec![left.v_greater];
    for x in field.x_minus()..field.x_plus() {
        let t = transfer_matrix_at(field.lookup(x), e).ok_or(SpectralError::AZero { lambda })?;
        core.push(t * *core.last().unwrap());
    }
    let profile = Profile {
        start: field.x_minus(),
        core,
        left_zeta: Some(left.zeta_greater),
        right_zeta: Some(right.zeta_less),
    };
    realize(field, lambda, &profile, window)
}

#[derive(Clone, Debug, Default)]
pub struct Lambda0Outcome {
    pub records: Vec<EigenvalueRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// What the far field allows at one edge of the defect window.
#[derive(Clone, Copy, Debug)]
enum Edge {
    /// Exponential tail along `v` with ratio `zeta`.
    Tail { v: Vec2, zeta: Complex },
    /// `A = 0` in the far field: the edge value must lie along this direction.
    Compact(Vec2),
    /// `λ ∉ Λ`: only the zero tail is square-summable.
    Closed,
}

fn parallel(u: &Vec2, v: &Vec2) -> bool {
    u.cross(v).norm() <= PARALLEL_TOL * u.norm() * v.norm()
}

/// Eigenvalues on Λ₀.
///
/// At a site with `A_x(λ) = 0` the recursion breaks into two independent
/// constraints, `Ψ̃(x) ∥ L_x` and `Ψ̃(x+1) ∥ R_x`. The chain over
/// `[x₋, x₊]` therefore splits at such sites into segments that are solved
/// separately: each starts on a one-dimensional space (the left tail
/// direction or `R` of the previous cut), is propagated by transfer
/// matrices, and must land on the end direction (`L` of the next cut or
/// the right tail direction). A far field with `A = 0` additionally carries
/// single-site solutions whenever the compact-support ratio condition holds.
pub fn lambda0_adjudicate(field: &CoinField) -> Lambda0Outcome {
    let mut out = Lambda0Outcome::default();
    for lambda in lambda0_set(field) {
        if let Some(rec) = adjudicate_at(field, lambda, &mut out.diagnostics) {
            out.records.push(rec);
        }
    }
    out
}

fn adjudicate_at(field: &CoinField, lambda: f64, diags: &mut Vec<Diagnostic>) -> Option<EigenvalueRecord> {
    let e = cis(lambda);
    let (xm, xp) = (field.x_minus(), field.x_plus());

    let edge = |coin: &CoinMatrix, left: bool| -> Edge {
        if is_a_zero(coin, lambda) {
            let (l, r) = zero_case_vectors(coin);
            Compact(if left { r } else { l })
        } else {
            let s = spectrum_of(&transfer_matrix_at(coin, e).expect("A is nonzero"));
            match (s.in_lambda, left) {
                (false, _) => Closed,
                (true, true) => Tail { v: s.v_greater, zeta: s.zeta_greater },
                (true, false) => Tail { v: s.v_less, zeta: s.zeta_less },
            }
        }
    };
    use Edge::*;
    let left_edge = edge(field.c_minus(), true);
    let right_edge = edge(field.c_plus(), false);

    let cuts: Vec<i64> = (xm..xp).filter(|&x| is_a_zero(field.lookup(x), lambda)).collect();
    let mut cut_vectors = Vec::with_capacity(cuts.len());
    for &y in &cuts {
        let (l, r) = zero_case_vectors(field.lookup(y));
        cut_vectors.push((l, r));
    }
    let degenerate = cut_vectors.iter().any(|(l, r)| *l == Vec2::ZERO || *r == Vec2::ZERO)
        || matches!(left_edge, Compact(v) if v == Vec2::ZERO)
        || matches!(right_edge, Compact(v) if v == Vec2::ZERO);
    if degenerate {
        diags.push(Diagnostic::at(
            lambda,
            DiagnosticKind::UnderDetermined,
            "a zero-case direction vanishes, so the constraint chain leaves a two-dimensional freedom; not adjudicated",
        ));
        return None;
    }

    // Segment boundaries: (position, start/end edge).
    let mut starts = vec![(xm, left_edge)];
    let mut ends = Vec::new();
    for (&y, &(l, r)) in cuts.iter().zip(&cut_vectors) {
        ends.push((y, Compact(l)));
        starts.push((y + 1, Compact(r)));
    }
    ends.push((xp, right_edge));

    let mut solutions: Vec<Profile> = Vec::new();
    for ((s, start), (t, end)) in starts.into_iter().zip(ends) {
        let (v0, left_zeta) = match start {
            Tail { v, zeta } => (v, Some(zeta)),
            Compact(v) => (v, None),
            Closed => continue,
        };
        let (target, right_zeta) = match end {
            Tail { v, zeta } => (v, Some(zeta)),
            Compact(v) => (v, None),
            Closed => continue,
        };
        let mut core = vec![v0];
        for x in s..t {
            let tm = transfer_matrix_at(field.lookup(x), e).expect("non-cut site");
            core.push(tm * *core.last().unwrap());
        }
        if parallel(core.last().unwrap(), &target) {
            solutions.push(Profile {
                start: s,
                core,
                left_zeta,
                right_zeta,
            });
        }
    }

    let mut free_tails = 0;
    for (coin, at, is_left) in [(field.c_minus(), xm - 1, true), (field.c_plus(), xp + 1, false)] {
        let compact = if is_left { left_edge } else { right_edge };
        if !matches!(compact, Compact(_)) {
            continue;
        }
        match compact_support_status(coin) {
            CompactSupport::Holds => {
                free_tails += 1;
                solutions.push(Profile {
                    start: at,
                    core: vec![zero_case_vectors(coin).0],
                    left_zeta: None,
                    right_zeta: None,
                });
            }
            CompactSupport::Fails => {}
            CompactSupport::Undefined => diags.push(Diagnostic::at(
                lambda,
                DiagnosticKind::RatioUndefined,
                format!(
                    "compact-support ratio is undefined for the {} far-field coin; treated as failing",
                    if is_left { "left" } else { "right" }
                ),
            )),
        }
    }

    if solutions.len() > 1 {
        let msg = if free_tails > 0 {
            format!(
                "{} independent solutions found; the far field admits a compact eigenvector at every site, \
                 so the multiplicity is infinite. One representative is reported",
                solutions.len()
            )
        } else {
            format!("{} independent solutions found; one representative is reported", solutions.len())
        };
        diags.push(Diagnostic::at(lambda, DiagnosticKind::Multiplicity, msg));
    }

    let mut worst = None;
    for p in &solutions {
        let psi = match realize(field, lambda, p, None) {
            Ok(psi) => psi,
            Err(err) => {
                diags.push(Diagnostic::at(lambda, DiagnosticKind::EigenvectorFailed, err.to_string()));
                continue;
            }
        };
        let op_residual = eigen_residual(field, &psi, lambda);
        if op_residual <= OP_RESIDUAL_TOL {
            return Some(EigenvalueRecord {
                lambda,
                chi_residual: 0.0,
                zeta_right: p.right_zeta,
                zeta_left: p.left_zeta,
                eigvec: psi,
                op_residual,
                source: RootSource::Lambda0Compact,
            });
        }
        worst = Some(op_residual);
    }
    if let Some(r) = worst {
        diags.push(Diagnostic::at(
            lambda,
            DiagnosticKind::ResidualTooLarge,
            format!("candidate eigenvector has residual {r:.3e} > {OP_RESIDUAL_TOL:e}"),
        ));
    }
    None
}

/// Everything found for one field.
#[derive(Clone, Debug, Default)]
pub struct SpectralReport {
    pub lambda0: Vec<f64>,
    pub records: Vec<EigenvalueRecord>,
    pub diagnostics: Vec<Diagnostic>,
    pub rejected_minima: Vec<(f64, f64)>,
}

/// [`find_roots`] and [`lambda0_adjudicate`] merged and sorted by `λ`.
pub fn analyze(field: &CoinField, grid_n: usize, refine_tol: f64) -> Result<SpectralReport, SpectralError> {
    let roots = find_roots(field, grid_n, refine_tol)?;
    let special = lambda0_adjudicate(field);
    let mut records = roots.records;
    records.extend(special.records);
    records.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let mut diagnostics = roots.diagnostics;
    diagnostics.extend(special.diagnostics);
    Ok(SpectralReport {
        lambda0: lambda0_set(field),
        records,
        diagnostics,
        rejected_minima: roots.rejected_minima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::orthonormalize;
    use crate::linalg::Mat3;
    use crate::transfer::abcd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_coin(rng: &mut ChaCha8Rng) -> CoinMatrix {
        loop {
            let mut m = Mat3::IDENTITY;
            for row in m.0.iter_mut() {
                for z in row.iter_mut() {
                    *z = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            if let Some(c) = orthonormalize(&m).and_then(|u| CoinMatrix::new(u).ok()) {
                return c;
            }
        }
    }

    #[test]
    fn decay_rates_multiply_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let c = random_coin(&mut rng);
            let lambda = rng.gen_range(0.0..TAU);
            let Ok(s) = asymptotic_spectrum(&c, lambda) else { continue };
            assert!((s.zeta_less.norm() * s.zeta_greater.norm() - 1.0).abs() <= 1e-10);
            if !s.in_lambda {
                assert!((s.zeta_less.norm() - 1.0).abs() <= 1e-8, "{}", s.zeta_less.norm());
                assert!((s.zeta_greater.norm() - 1.0).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn asymptotic_eigenpair_certifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut checked = 0;
        while checked < 1000 {
            let c = random_coin(&mut rng);
            let lambda = rng.gen_range(0.0..TAU);
            let Some(t) = transfer_matrix_at(&c, cis(lambda)) else { continue };
            let s = spectrum_of(&t);
            if !s.in_lambda {
                continue;
            }
            let r = t * s.v_less - s.v_less.scale(s.zeta_less);
            assert!(r.norm() <= 1e-9 * t.max_abs().max(1.0), "{}", r.norm());
            checked += 1;
        }
    }

    #[test]
    fn fourier_lambda_is_a_finite_union_of_arcs() {
        let f = CoinMatrix::fourier();
        let n = 10_000;
        let inside: Vec<bool> = (0..n)
            .map(|k| {
                asymptotic_spectrum(&f, TAU * k as f64 / n as f64)
                    .map(|s| s.in_lambda)
                    .unwrap_or(false)
            })
            .collect();
        let switches = (0..n).filter(|&k| inside[k] != inside[(k + 1) % n]).count();
        assert!(switches > 0 && switches % 2 == 0 && switches <= 12, "{switches}");
    }

    #[test]
    fn chi_cross_product_is_antisymmetric() {
        let f = CoinMatrix::fourier();
        let field = CoinField::one_defect(f, f.phase_scale(0.3));
        let lambda = 1.0;
        let e = cis(lambda);
        let left = asymptotic_spectrum(field.c_minus(), lambda).unwrap();
        let right = asymptotic_spectrum(field.c_plus(), lambda).unwrap();
        let w = ordered_product(&field, e, 0, 1).unwrap() * left.v_greater;
        assert_eq!(w.cross(&right.v_less), -right.v_less.cross(&w));
        assert_eq!(chi(&field, lambda).chi, w.cross(&right.v_less));
    }

    #[test]
    fn homogeneous_chi_never_vanishes_in_lambda() {
        let field = CoinField::homogeneous(CoinMatrix::fourier());
        for s in scan(&field, 4000).iter().filter(|s| s.admissible()) {
            assert!(s.chi.norm() > 1e-3, "lambda {} |chi| {}", s.lambda, s.chi.norm());
        }
        let r = find_roots(&field, 4000, DEFAULT_REFINE_TOL).unwrap();
        assert!(r.records.is_empty());
    }

    #[test]
    fn one_defect_fourier_pi_over_12_has_three_roots() {
        let f = CoinMatrix::fourier();
        let field = CoinField::one_defect(f, f.phase_scale(PI / 12.0));
        let r = find_roots(&field, 4000, DEFAULT_REFINE_TOL).unwrap();
        assert_eq!(r.records.len(), 3, "{:?}", r.diagnostics);
        for rec in &r.records {
            assert!(rec.op_residual <= OP_RESIDUAL_TOL);
            assert!(rec.chi_residual <= CHI_ACCEPT);
            assert!(rec.zeta_right.unwrap().norm() <= 1.0 - 1e-6);
            assert!(rec.zeta_left.unwrap().norm() >= 1.0 + 1e-6);
        }
        assert!(r.rejected_minima.iter().all(|(_, v)| *v > 1.0));
    }

    #[test]
    fn eigenvector_tails_decay_at_zeta() {
        let f = CoinMatrix::fourier();
        let field = CoinField::one_defect(f, f.phase_scale(7.0 * PI / 12.0));
        let r = find_roots(&field, 4000, DEFAULT_REFINE_TOL).unwrap();
        let rec = &r.records[0];
        assert!((rec.eigvec.norm() - 1.0).abs() <= 1e-12);
        let rate = rec.zeta_right.unwrap().norm();
        for j in 3..10 {
            let x = field.x_plus() + j;
            let ratio = rec.eigvec.get(x).norm() / rec.eigvec.get(x - 1).norm();
            assert!((ratio - rate).abs() <= 1e-6, "j = {j}: {ratio} vs {rate}");
        }
    }

    #[test]
    fn small_window_is_rejected_with_required_m() {
        let f = CoinMatrix::fourier();
        let field = CoinField::one_defect(f, f.phase_scale(7.0 * PI / 12.0));
        let r = find_roots(&field, 4000, DEFAULT_REFINE_TOL).unwrap();
        let lambda = r.records[0].lambda;
        match build_eigenvector(&field, lambda, Some((-3, 4))) {
            Err(SpectralError::WindowTooSmall { required_m, .. }) => assert!(required_m > 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn a_zero_is_reported_not_propagated() {
        let f = CoinMatrix::fourier();
        let l0 = lambda0_angle(&f).unwrap();
        assert!(matches!(asymptotic_spectrum(&f, l0), Err(SpectralError::AZero { .. })));
        let s = chi(&CoinField::homogeneous(f), l0);
        assert!(s.near_lambda0 && !s.admissible());
    }

    #[test]
    fn grid_and_tolerance_are_validated() {
        let field = CoinField::homogeneous(CoinMatrix::fourier());
        assert_eq!(find_roots(&field, 10, 1e-12).unwrap_err(), SpectralError::GridTooSmall { n: 10 });
        assert!(matches!(find_roots(&field, 4000, 0.0), Err(SpectralError::BadTolerance(_))));
    }

    #[test]
    fn zero_case_vectors_match_rational_functions() {
        // At A = 0 the site equations read B·Ψ̃₂(x) = e·Ψ̃₁(x) and C·Ψ̃₁(x+1) = e·Ψ̃₂(x+1).
        let c = CoinMatrix::fourier().phase_scale(0.4);
        let l0 = lambda0_angle(&c).unwrap();
        let v = abcd(&c, l0);
        let e = cis(l0);
        let (l, r) = zero_case_vectors(&c);
        assert!(parallel(&l, &Vec2::new(v.b, e)));
        assert!(parallel(&r, &Vec2::new(e, v.c)));
    }

    #[test]
    fn grover_has_a_compact_eigenvalue_at_one() {
        let field = CoinField::homogeneous(CoinMatrix::grover());
        let out = lambda0_adjudicate(&field);
        assert_eq!(out.records.len(), 1);
        let rec = &out.records[0];
        assert_eq!(rec.lambda, 0.0);
        assert_eq!(rec.source, RootSource::Lambda0Compact);
        assert!(rec.op_residual <= 1e-12);
        assert!(rec.zeta_left.is_none() && rec.zeta_right.is_none());
        assert!(rec.eigvec.len() <= 3);
        assert!(out.diagnostics.iter().any(|d| d.kind == DiagnosticKind::Multiplicity));
    }

    #[test]
    fn fourier_models_have_no_lambda0_eigenvalues() {
        let f = CoinMatrix::fourier();
        for k in [1.0, 3.0, 7.0, 11.0] {
            let c0 = f.phase_scale(k * PI / 12.0);
            assert!(lambda0_adjudicate(&CoinField::one_defect(f, c0)).records.is_empty());
            assert!(lambda0_adjudicate(&CoinField::two_phase(f, c0)).records.is_empty());
            assert_eq!(lambda0_set(&CoinField::two_phase(f, c0)).len(), 2);
        }
        assert!(lambda0_adjudicate(&CoinField::homogeneous(f)).records.is_empty());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let r = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert!(r.converged);
        assert!((r.lambda - 0.3).abs() <= 1e-11);
    }

    #[test]
    fn tail_sites_bound() {
        assert_eq!(tail_sites(0.1).unwrap(), 12);
        assert!(0.5f64.powi(tail_sites(0.5).unwrap() as i32) <= TAIL_CUTOFF);
        assert!(matches!(tail_sites(1.0), Err(SpectralError::TailTooLong { .. })));
        assert!(matches!(tail_sites(1.0 - 1e-9), Err(SpectralError::TailTooLong { .. })));
    }
}
