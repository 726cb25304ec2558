//! Direct simulation of `U = SC` on a finite window with hard zero boundary.
//!
//! The shift moves component 1 one site left and component 3 one site right;
//! component 2 stays. Amplitude pushed past the window edge is dropped and
//! accumulated in [`StateVector::leakage`].

use crate::coin::CoinField;
use crate::linalg::{cis, Complex, Vec3};

/// Amplitude (not probability) allowed to leave the window before a run is
/// considered invalid.
pub const LEAK_TOL: f64 = 1e-10;

/// Minimum number of untouched sites between the light cone and the window edge.
pub const LIGHT_CONE_MARGIN: i64 = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvolutionError {
    #[error(
        "window [{lo}, {hi}] too small for {steps} steps: support reaches [{support_lo}, {support_hi}], \
         need half-width L >= {required_half_width}"
    )]
    WindowTooSmall {
        lo: i64,
        hi: i64,
        steps: usize,
        support_lo: i64,
        support_hi: i64,
        required_half_width: i64,
    },
    #[error("initial state has zero norm")]
    ZeroState,
    #[error("amplitude {leakage:.3e} leaked through the window edge (tolerance {LEAK_TOL:.0e})")]
    Leakage { leakage: f64 },
}

/// Three-component wavefunction on `[lo, lo + len)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    lo: i64,
    amps: Vec<Vec3>,
    leakage: f64,
}

impl StateVector {
    pub fn zeros(lo: i64, hi: i64) -> Self {
        assert!(hi >= lo, "empty window [{lo}, {hi}]");
        StateVector {
            lo,
            amps: vec![Vec3::ZERO; (hi - lo + 1) as usize],
            leakage: 0.0,
        }
    }

    pub fn from_amplitudes(lo: i64, amps: Vec<Vec3>) -> Self {
        assert!(!amps.is_empty(), "empty window");
        StateVector {
            lo,
            amps,
            leakage: 0.0,
        }
    }

    /// `ψ(0) = amp`, zero elsewhere, on `[-half_width, half_width]`.
    pub fn localized(half_width: i64, amp: Vec3) -> Self {
        let mut s = Self::zeros(-half_width, half_width);
        s.set(0, amp);
        s
    }

    /// `[1/√3, i/√3, 1/√3]`, the initial internal state used for the
    /// probability-distribution runs.
    pub fn default_internal_state() -> Vec3 {
        let s = 1.0 / 3f64.sqrt();
        Vec3::new(Complex::new(s, 0.0), Complex::new(0.0, s), Complex::new(s, 0.0))
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.amps.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[Vec3] {
        &self.amps
    }

    /// `Ψ(x)`, zero outside the window.
    #[inline]
    pub fn get(&self, x: i64) -> Vec3 {
        if x < self.lo {
            return Vec3::ZERO;
        }
        self.amps
            .get((x - self.lo) as usize)
            .copied()
            .unwrap_or(Vec3::ZERO)
    }

    pub fn set(&mut self, x: i64, v: Vec3) {
        let i = (x - self.lo) as usize;
        self.amps[i] = v;
    }

    /// Total amplitude that has left the window so far.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn leaked(&self) -> bool {
        self.leakage > LEAK_TOL
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Vec3::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: Complex) -> Self {
        StateVector {
            lo: self.lo,
            amps: self.amps.iter().map(|v| v.scale(s)).collect(),
            leakage: self.leakage,
        }
    }

    /// Unit norm with the first non-negligible amplitude real and positive.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        let threshold = 1e-8 * self.amps.iter().flat_map(|v| v.0).map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = self
            .amps
            .iter()
            .flat_map(|v| v.0)
            .find(|z| z.norm() > threshold)
            .unwrap_or(Complex::from(1.0));
        self.scale(pivot.conj() / (pivot.norm() * n))
    }

    /// `μ(x) = ‖Ψ(x)‖²` per site.
    pub fn distribution(&self, time: usize) -> Distribution {
        Distribution {
            lo: self.lo,
            probs: self.amps.iter().map(Vec3::norm_sqr).collect(),
            time,
        }
    }

    /// Smallest and largest site carrying nonzero amplitude.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.amps.iter().position(|v| *v != Vec3::ZERO)?;
        let last = self.amps.iter().rposition(|v| *v != Vec3::ZERO)?;
        Some((self.lo + first as i64, self.lo + last as i64))
    }

    /// Same state on a larger window.
    pub fn padded(&self, left: usize, right: usize) -> Self {
        let mut amps = vec![Vec3::ZERO; left];
        amps.extend_from_slice(&self.amps);
        amps.extend(std::iter::repeat_n(Vec3::ZERO, right));
        StateVector {
            lo: self.lo - left as i64,
            amps,
            leakage: self.leakage,
        }
    }
}

/// Probability distribution `μ_t(x)` on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub lo: i64,
    pub probs: Vec<f64>,
    pub time: usize,
}

impl Distribution {
    pub fn hi(&self) -> i64 {
        self.lo + self.probs.len() as i64 - 1
    }

    pub fn get(&self, x: i64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        self.probs.get((x - self.lo) as usize).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Σ_{|x - center| ≤ radius} μ(x)`.
    pub fn mass_near(&self, center: i64, radius: i64) -> f64 {
        (center - radius..=center + radius).map(|x| self.get(x)).sum()
    }
}

/// One step `Ψ ↦ SCΨ` on the same window.
pub fn apply_u(field: &CoinField, psi: &StateVector) -> StateVector {
    let mut out = StateVector {
        lo: psi.lo,
        amps: vec![Vec3::ZERO; psi.amps.len()],
        leakage: psi.leakage,
    };
    step_into(field, psi, &mut out);
    out
}

/// [`apply_u`] writing into a preallocated state of the same window.
fn step_into(field: &CoinField, psi: &StateVector, out: &mut StateVector) {
    let n = psi.amps.len();
    let lo = psi.lo;
    out.lo = lo;
    out.amps.iter_mut().for_each(|v| *v = Vec3::ZERO);
    let mut lost = 0.0;
    for (i, v) in psi.amps.iter().enumerate() {
        if *v == Vec3::ZERO {
            continue;
        }
        let c = *field.lookup(lo + i as i64).matrix() * *v;
        // component 1 moves left
        if i > 0 {
            out.amps[i - 1].0[0] = c.0[0];
        } else {
            lost += c.0[0].norm_sqr();
        }
        out.amps[i].0[1] = c.0[1];
        // component 3 moves right
        if i + 1 < n {
            out.amps[i + 1].0[2] = c.0[2];
        } else {
            lost += c.0[2].norm_sqr();
        }
    }
    out.leakage = (psi.leakage.powi(2) + lost).sqrt();
}

/// `‖UΨ − e^{iλ}Ψ‖ / ‖Ψ‖` with `U` applied on `Ψ`'s own window.
pub fn eigen_residual(field: &CoinField, psi: &StateVector, lambda: f64) -> f64 {
    let u_psi = apply_u(field, psi);
    let e = cis(lambda);
    let num: f64 = u_psi
        .amps
        .iter()
        .zip(&psi.amps)
        .map(|(a, b)| (*a - b.scale(e)).norm_sqr())
        .sum::<f64>()
        + u_psi.leakage.powi(2);
    num.sqrt() / psi.norm()
}

fn check_window(psi0: &StateVector, steps: usize) -> Result<(), EvolutionError> {
    let (s_lo, s_hi) = psi0.support().ok_or(EvolutionError::ZeroState)?;
    let reach = steps as i64 + LIGHT_CONE_MARGIN;
    if s_lo - reach < psi0.lo() || s_hi + reach > psi0.hi() {
        let required_half_width = s_lo.abs().max(s_hi.abs()) + reach;
        return Err(EvolutionError::WindowTooSmall {
            lo: psi0.lo(),
            hi: psi0.hi(),
            steps,
            support_lo: s_lo,
            support_hi: s_hi,
            required_half_width,
        });
    }
    Ok(())
}

/// Distributions `μ_0, …, μ_t`.
///
/// The window must leave [`LIGHT_CONE_MARGIN`] free sites beyond the light
/// cone of `ψ₀`'s support after `t` steps.
pub fn evolve(field: &CoinField, psi0: &StateVector, steps: usize) -> Result<Vec<Distribution>, EvolutionError> {
    let mut out = Vec::with_capacity(steps + 1);
    run(field, psi0, steps, |t, psi| out.push(psi.distribution(t)))?;
    Ok(out)
}

/// Runs `steps` steps and returns the final state.
pub fn evolve_state(field: &CoinField, psi0: &StateVector, steps: usize) -> Result<StateVector, EvolutionError> {
    run(field, psi0, steps, |_, _| {})
}

/// `(1/t_max)·Σ_{t=1}^{t_max} μ_t(0)`.
pub fn time_averaged_origin(field: &CoinField, psi0: &StateVector, t_max: usize) -> Result<f64, EvolutionError> {
    if t_max == 0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    run(field, psi0, t_max, |t, psi| {
        if t > 0 {
            acc += psi.get(0).norm_sqr();
        }
    })?;
    Ok(acc / t_max as f64)
}

fn run(
    field: &CoinField,
    psi0: &StateVector,
    steps: usize,
    mut visit: impl FnMut(usize, &StateVector),
) -> Result<StateVector, EvolutionError> {
    check_window(psi0, steps)?;
    let mut cur = psi0.clone();
    let mut next = psi0.clone();
    visit(0, &cur);
    for t in 1..=steps {
        step_into(field, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        if cur.leaked() {
            return Err(EvolutionError::Leakage { leakage: cur.leakage });
        }
        visit(t, &cur);
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::CoinMatrix;
    use crate::linalg::ZERO;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn fourier_one_defect(theta: f64) -> CoinField {
        let f = CoinMatrix::fourier();
        CoinField::one_defect(f, f.phase_scale(theta))
    }

    #[test]
    fn norm_preserved_for_interior_states() {
        let field = fourier_one_defect(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut psi = StateVector::zeros(-30, 30);
        for x in -10..=10 {
            let z = |rng: &mut ChaCha8Rng| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            psi.set(x, Vec3::new(z(&mut rng), z(&mut rng), z(&mut rng)));
        }
        let psi = psi.normalized();
        let u = apply_u(&field, &psi);
        assert!((u.norm() - 1.0).abs() <= 1e-12);
        assert!(!u.leaked());
    }

    #[test]
    fn single_step_support_is_local() {
        let field = fourier_one_defect(0.7);
        let psi = StateVector::localized(10, StateVector::default_internal_state());
        let u = apply_u(&field, &psi);
        assert_eq!(u.support(), Some((-1, 1)));
    }

    #[test]
    fn zeroth_distribution_is_initial_norms() {
        let field = fourier_one_defect(0.7);
        let psi = StateVector::localized(10, StateVector::default_internal_state());
        let d = evolve(&field, &psi, 0).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[0].get(0) - 1.0).abs() < 1e-15);
        assert_eq!(d[0].get(1), 0.0);
    }

    #[test]
    fn light_cone_and_conservation() {
        let field = fourier_one_defect(3.0 * PI / 12.0);
        let t = 200;
        let psi = StateVector::localized(t as i64 + 5, StateVector::default_internal_state());
        let dists = evolve(&field, &psi, t).unwrap();
        for d in &dists {
            assert!((d.total() - 1.0).abs() <= d.time as f64 * 1e-12 + 1e-14);
            for x in d.lo..=d.hi() {
                if x.abs() > d.time as i64 {
                    assert_eq!(d.get(x), 0.0, "t = {} x = {x}", d.time);
                }
            }
        }
    }

    #[test]
    fn window_too_small_names_required_width() {
        let field = fourier_one_defect(0.5);
        let psi = StateVector::localized(20, StateVector::default_internal_state());
        match evolve(&field, &psi, 100) {
            Err(EvolutionError::WindowTooSmall { required_half_width, .. }) => {
                assert_eq!(required_half_width, 105)
            }
            other => panic!("{other:?}"),
        }
        let empty = StateVector::zeros(-5, 5);
        assert_eq!(evolve(&field, &empty, 1), Err(EvolutionError::ZeroState));
    }

    #[test]
    fn edge_leakage_is_flagged() {
        let field = CoinField::homogeneous(CoinMatrix::fourier());
        let mut psi = StateVector::zeros(-3, 3);
        psi.set(3, Vec3::new(ZERO, ZERO, Complex::from(1.0)));
        let u = apply_u(&field, &psi);
        assert!(u.leaked());
    }

    #[test]
    fn far_start_gives_small_origin_average() {
        // ψ₀ at x = 50 barely overlaps the defect eigenvectors.
        let field = fourier_one_defect(7.0 * PI / 12.0);
        let mut psi = StateVector::zeros(-260, 260);
        psi.set(50, StateVector::default_internal_state());
        let far = time_averaged_origin(&field, &psi, 200).unwrap();
        let near = time_averaged_origin(
            &field,
            &StateVector::localized(210, StateVector::default_internal_state()),
            200,
        )
        .unwrap();
        assert!(far < 0.01 * near, "far {far} near {near}");
    }
}
