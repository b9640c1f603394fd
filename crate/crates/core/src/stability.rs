//! Linear stability of four one-step schemes on the oscillator
//! `ẏ = −ω² z, ż = y`.
//!
//! Each scheme is linear, so one step is a 2×2 map `A(hω)` and its spectral
//! radius decides whether trajectories grow, decay or stay on the orbit.
//! [`iteration_matrix`] builds `A` by composing elementary matrices, while
//! [`step`] applies the per-step update formulas directly; the two routes are
//! checked against each other in the tests.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// States whose magnitude exceeds this are treated as divergent.
pub const OVERFLOW_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestSystem {
    omega: f64,
}

impl TestSystem {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidConfig(format!("omega must be positive, got {omega}")));
        }
        Ok(Self { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// The quadratic invariant `y² + ω² z²` of the exact flow.
    pub fn energy(&self, y: f64, z: f64) -> f64 {
        energy(self, y, z)
    }
}

pub fn energy(sys: &TestSystem, y: f64, z: f64) -> f64 {
    y * y + sys.omega * sys.omega * z * z
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    ForwardEuler,
    BackwardEuler,
    Trapezoidal,
    Verlet,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::ForwardEuler,
        SchemeKind::BackwardEuler,
        SchemeKind::Trapezoidal,
        SchemeKind::Verlet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::ForwardEuler => "forward-euler",
            SchemeKind::BackwardEuler => "backward-euler",
            SchemeKind::Trapezoidal => "trapezoidal",
            SchemeKind::Verlet => "verlet",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme '{s}'")))
    }
}

/// `M` in `d/dt (y, z) = M (y, z)`.
fn generator(omega: f64) -> Matrix {
    Matrix::from_rows(&[[0.0, -omega * omega], [1.0, 0.0]])
}

fn inverse_2x2(m: &Matrix) -> Matrix {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let det = a * d - b * c;
    Matrix::from_rows(&[[d / det, -b / det], [-c / det, a / det]])
}

fn shifted(omega: f64, s: f64) -> Matrix {
    // I + s·M
    Matrix::identity(2).add(&generator(omega).scale(s)).expect("2x2")
}

/// The one-step map `(y_{n-1}, z_{n-1}) ↦ (y_n, z_n)` of `scheme`.
///
/// `h` may be zero or negative (a backward step), which the reversibility
/// checks rely on.
pub fn iteration_matrix(scheme: SchemeKind, h: f64, omega: f64) -> Matrix {
    match scheme {
        SchemeKind::ForwardEuler => shifted(omega, h),
        SchemeKind::BackwardEuler => inverse_2x2(&shifted(omega, -h)),
        SchemeKind::Trapezoidal => inverse_2x2(&shifted(omega, -h / 2.0))
            .matmul(&shifted(omega, h / 2.0))
            .expect("2x2"),
        SchemeKind::Verlet => {
            let kick = Matrix::from_rows(&[[1.0, -h * omega * omega / 2.0], [0.0, 1.0]]);
            let drift = Matrix::from_rows(&[[1.0, 0.0], [h, 1.0]]);
            kick.matmul(&drift)
                .and_then(|m| m.matmul(&kick))
                .expect("2x2")
        }
    }
}

/// Applies one step of the scheme's update formulas. The implicit schemes
/// are solved in closed form.
pub fn step(scheme: SchemeKind, omega: f64, h: f64, (y, z): (f64, f64)) -> (f64, f64) {
    let w2 = omega * omega;
    match scheme {
        SchemeKind::ForwardEuler => (y - h * w2 * z, z + h * y),
        SchemeKind::BackwardEuler => {
            let y_new = (y - h * w2 * z) / (1.0 + h * h * w2);
            (y_new, z + h * y_new)
        }
        SchemeKind::Trapezoidal => {
            let q = h * h * w2 / 4.0;
            let z_new = ((1.0 - q) * z + h * y) / (1.0 + q);
            (y - h * w2 / 2.0 * (z + z_new), z_new)
        }
        SchemeKind::Verlet => {
            let y_half = y - h * w2 / 2.0 * z;
            let z_new = z + h * y_half;
            (y_half - h * w2 / 2.0 * z_new, z_new)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub scheme: SchemeKind,
    pub h_omega: f64,
    pub eigenvalues: [Complex64; 2],
    pub spectral_radius: f64,
}

impl SpectralReport {
    /// Largest residual of the characteristic polynomial `λ² − tr λ + det`
    /// over both eigenvalues.
    pub fn char_poly_residual(&self, trace: f64, det: f64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| (l * l - l * trace + det).norm())
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues of a real 2×2 matrix from its trace and determinant.
pub fn eigenvalues_2x2(m: &Matrix) -> [Complex64; 2] {
    let trace = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let half = trace / 2.0;
    let disc = half * half - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [Complex64::new(half + r, 0.0), Complex64::new(half - r, 0.0)]
    } else {
        let r = (-disc).sqrt();
        [Complex64::new(half, r), Complex64::new(half, -r)]
    }
}

/// Spectrum of the scheme's iteration matrix at the given `hω`. The
/// spectrum depends only on the product, so it is evaluated with `ω = 1`.
pub fn spectral_report(scheme: SchemeKind, h_omega: f64) -> SpectralReport {
    let m = iteration_matrix(scheme, h_omega, 1.0);
    let eigenvalues = eigenvalues_2x2(&m);
    let spectral_radius = eigenvalues[0].norm().max(eigenvalues[1].norm());
    SpectralReport {
        scheme,
        h_omega,
        eigenvalues,
        spectral_radius,
    }
}

/// Spectral radii of every scheme on `samples` equispaced `hω` in `[0, max]`.
pub fn spectral_sweep(max_h_omega: f64, samples: usize) -> Vec<SpectralReport> {
    let denom = samples.saturating_sub(1).max(1) as f64;
    let mut out = Vec::with_capacity(samples * SchemeKind::ALL.len());
    for k in 0..samples {
        let h_omega = max_h_omega * k as f64 / denom;
        for scheme in SchemeKind::ALL {
            out.push(spectral_report(scheme, h_omega));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub scheme: SchemeKind,
    pub h: f64,
    pub steps: usize,
    /// `states[k]` is the state after `k` steps.
    pub states: Vec<(f64, f64)>,
    /// Step at which a state exceeded [`OVERFLOW_LIMIT`]; the offending state
    /// is not stored.
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

pub fn integrate(
    scheme: SchemeKind,
    sys: &TestSystem,
    y0: f64,
    z0: f64,
    h: f64,
    steps: usize,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidCount("integrate needs at least one step".into()));
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut state = (y0, z0);
    states.push(state);
    let mut diverged_at = None;
    for k in 1..=steps {
        state = step(scheme, sys.omega, h, state);
        let big = state.0.abs().max(state.1.abs());
        if big.is_nan() || big > OVERFLOW_LIMIT {
            diverged_at = Some(k);
            break;
        }
        states.push(state);
    }
    Ok(Trajectory {
        scheme,
        h,
        steps,
        states,
        diverged_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Largest singular value of a 2×2 matrix, from the eigenvalues of `AᵀA`.
    fn spectral_norm(m: &Matrix) -> f64 {
        let g = m.transpose().matmul(m).unwrap();
        let ev = eigenvalues_2x2(&g);
        ev[0].re.max(ev[1].re).sqrt()
    }

    #[test]
    fn forward_euler_matrix() {
        let m = iteration_matrix(SchemeKind::ForwardEuler, 0.1, 1.0);
        assert_eq!(m, Matrix::from_rows(&[[1.0, -0.1], [0.1, 1.0]]));
    }

    #[test]
    fn backward_euler_matrix_inverts_implicit_system() {
        let (h, w) = (0.3, 2.0);
        let m = iteration_matrix(SchemeKind::BackwardEuler, h, w);
        let sys = Matrix::from_rows(&[[1.0, h * w * w], [-h, 1.0]]);
        let p = sys.matmul(&m).unwrap();
        assert!(p.sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn verlet_trace_and_det() {
        for (h, w) in [(0.1, 1.0), (0.02, 50.0), (0.7, 3.0)] {
            let m = iteration_matrix(SchemeKind::Verlet, h, w);
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            assert!(close(det, 1.0, 1e-12), "det {det}");
            assert!(close(tr, 2.0 - h * h * w * w, 1e-12));
        }
    }

    #[test]
    fn trapezoidal_zero_step_is_identity() {
        for w in [0.5, 1.0, 50.0] {
            assert_eq!(iteration_matrix(SchemeKind::Trapezoidal, 0.0, w), Matrix::identity(2));
        }
    }

    #[test]
    fn spectral_examples() {
        let fe = spectral_report(SchemeKind::ForwardEuler, 0.5);
        assert!(close(fe.spectral_radius, 1.25_f64.sqrt(), 1e-12));
        assert!(close(fe.spectral_radius, 1.118034, 1e-6));

        let tr = spectral_report(SchemeKind::Trapezoidal, 7.3);
        assert!(close(tr.spectral_radius, 1.0, 1e-12));

        let v = spectral_report(SchemeKind::Verlet, 2.0);
        for l in v.eigenvalues {
            assert!((l - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        }
        assert!(close(v.spectral_radius, 1.0, 1e-12));

        let be = spectral_report(SchemeKind::BackwardEuler, 1.0);
        assert!(close(be.spectral_radius, 0.5_f64.sqrt(), 1e-12));
    }

    #[test]
    fn eigenvalues_solve_characteristic_polynomial() {
        for scheme in SchemeKind::ALL {
            for hw in [0.0, 0.3, 1.0, 1.99, 2.0, 2.5, 3.0] {
                let m = iteration_matrix(scheme, hw, 1.0);
                let tr = m[(0, 0)] + m[(1, 1)];
                let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
                let r = spectral_report(scheme, hw);
                assert!(r.char_poly_residual(tr, det) < 1e-10, "{scheme} {hw}");
            }
        }
    }

    #[test]
    fn spectrum_depends_only_on_product() {
        for scheme in SchemeKind::ALL {
            let a = eigenvalues_2x2(&iteration_matrix(scheme, 0.01, 50.0));
            let r = spectral_report(scheme, 0.5);
            let rho = a[0].norm().max(a[1].norm());
            assert!(close(rho, r.spectral_radius, 1e-12), "{scheme}");
        }
    }

    #[test]
    fn step_matches_iteration_matrix_powers() {
        let sys = TestSystem::new(3.0).unwrap();
        for scheme in SchemeKind::ALL {
            let h = 0.3; // hω = 0.9
            let traj = integrate(scheme, &sys, 0.4, -0.7, h, 1000).unwrap();
            let m = iteration_matrix(scheme, h, sys.omega());
            let mut v = [0.4_f64, -0.7];
            for (k, &(y, z)) in traj.states.iter().enumerate() {
                let scale = 1.0 + v[0].abs().max(v[1].abs());
                assert!((y - v[0]).abs() <= 1e-8 * scale, "{scheme} step {k}");
                assert!((z - v[1]).abs() <= 1e-8 * scale, "{scheme} step {k}");
                let next = m.matvec(&v);
                v = [next[0], next[1]];
            }
        }
    }

    #[test]
    fn one_step_examples() {
        let sys = TestSystem::new(1.0).unwrap();
        let fe = integrate(SchemeKind::ForwardEuler, &sys, 1.0, 0.0, 0.1, 1).unwrap();
        assert_eq!(fe.states[1], (1.0, 0.1));

        let tr = integrate(SchemeKind::Trapezoidal, &sys, 1.0, 0.0, 0.1, 1).unwrap();
        assert!(close(tr.states[1].0, 0.99501247, 1e-8));
        assert!(close(tr.states[1].1, 0.09975062, 1e-8));

        for scheme in SchemeKind::ALL {
            let t = integrate(scheme, &sys, 0.3, 0.8, 0.0, 1).unwrap();
            assert_eq!(t.states[1], (0.3, 0.8));
        }
        assert!(integrate(SchemeKind::Verlet, &sys, 0.0, 1.0, 0.1, 0).is_err());
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&TestSystem::new(1.0).unwrap(), 1.0, 0.0), 1.0);
        assert!(close(energy(&TestSystem::new(50.0).unwrap(), 0.0, 0.02), 1.0, 1e-12));
        assert_eq!(energy(&TestSystem::new(2.0).unwrap(), 3.0, 4.0), 73.0);
        assert!(TestSystem::new(0.0).is_err());
    }

    #[test]
    fn euler_energy_factors() {
        let sys = TestSystem::new(50.0).unwrap();
        let h = 0.01;
        let factor = 1.0 + h * h * 2500.0;
        let fe = integrate(SchemeKind::ForwardEuler, &sys, 0.0, 0.02, h, 200).unwrap();
        let be = integrate(SchemeKind::BackwardEuler, &sys, 0.0, 0.02, h, 200).unwrap();
        for k in 1..=200 {
            let e = |t: &Trajectory, k: usize| sys.energy(t.states[k].0, t.states[k].1);
            let grow = e(&fe, k) / e(&fe, k - 1);
            let shrink = e(&be, k) / e(&be, k - 1);
            assert!(((grow - factor) / factor).abs() <= 1e-12);
            assert!(((shrink - 1.0 / factor) * factor).abs() <= 1e-12);
        }
    }

    #[test]
    fn trapezoidal_conserves_energy() {
        let sys = TestSystem::new(50.0).unwrap();
        let t = integrate(SchemeKind::Trapezoidal, &sys, 0.0, 0.02, 0.01, 10_000).unwrap();
        let e0 = sys.energy(0.0, 0.02);
        for &(y, z) in &t.states {
            assert!(((sys.energy(y, z) - e0) / e0).abs() <= 1e-10);
        }
    }

    #[test]
    fn verlet_conditional_stability() {
        for omega in [1.0, 50.0] {
            let sys = TestSystem::new(omega).unwrap();
            let (y0, z0) = (0.0, 1.0 / omega);
            let norm0 = sys.energy(y0, z0).sqrt();
            for hw in [0.5, 1.0, 1.9] {
                let t = integrate(SchemeKind::Verlet, &sys, y0, z0, hw / omega, 10_000).unwrap();
                assert!(!t.diverged());
                let max = t
                    .states
                    .iter()
                    .map(|s| s.0.abs().max(s.1.abs()))
                    .fold(0.0, f64::max);
                assert!(max <= 10.0 * norm0, "omega {omega} hw {hw}: {max}");
            }
            let t = integrate(SchemeKind::Verlet, &sys, y0, z0, 2.5 / omega, 1000).unwrap();
            assert!(t.diverged());
            assert!(t.states.len() < 1001);
        }
    }

    #[test]
    fn radius_matches_norm_growth() {
        // ‖Aⁿ‖^(1/n) → ρ. The schemes are normal at ω = 1 except Verlet, whose
        // eigenvector conditioning leaves a transient factor at n = 64, so it
        // is only checked at small hω.
        let cases: Vec<(SchemeKind, f64)> = [0.1, 0.5, 1.0, 2.5]
            .into_iter()
            .flat_map(|hw| {
                [SchemeKind::ForwardEuler, SchemeKind::BackwardEuler, SchemeKind::Trapezoidal]
                    .map(|s| (s, hw))
            })
            .chain([(SchemeKind::Verlet, 0.1), (SchemeKind::Verlet, 0.25)])
            .collect();
        for (scheme, hw) in cases {
            let m = iteration_matrix(scheme, hw, 1.0);
            let mut p = Matrix::identity(2);
            for _ in 0..64 {
                p = p.matmul(&m).unwrap();
            }
            let rate = spectral_norm(&p).powf(1.0 / 64.0);
            let rho = spectral_report(scheme, hw).spectral_radius;
            assert!((rate - rho).abs() <= 1e-3, "{scheme} {hw}: {rate} vs {rho}");
        }
    }

    #[test]
    fn symmetric_schemes_reverse() {
        for scheme in [SchemeKind::Trapezoidal, SchemeKind::Verlet] {
            for (h, w) in [(0.01, 50.0), (0.3, 1.0), (1.1, 1.5)] {
                let s0 = (0.37, -0.21);
                let s1 = step(scheme, w, h, s0);
                let back = step(scheme, w, -h, s1);
                assert!((back.0 - s0.0).abs() <= 1e-10 && (back.1 - s0.1).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in SchemeKind::ALL {
            assert_eq!(s.name().parse::<SchemeKind>().unwrap(), s);
        }
        assert!("rk4".parse::<SchemeKind>().is_err());
    }
}
