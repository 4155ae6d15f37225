//! Obliquely incident pump inside the stack.
//!
//! An s-polarized plane wave arrives from air above the grid. Every run of identical
//! grid cells is a homogeneous layer; below the grid lies the substrate half-space.
//! The solution is built with the reflection-coefficient recursion
//!
//! `q_j = (r_j + Q_{j+1}) / (1 + r_j Q_{j+1})`, `Q_j = q_j e^{2 i k_j d_j}`
//!
//! from the substrate upward, then the downward amplitudes are carried from the top with
//! `A_{j+1} = A_j e^{i k_j d_j} t_j / (1 + r_j Q_{j+1})`. Only decaying exponentials
//! appear, so thick or evanescent layers cannot overflow. The incident amplitude in air
//! is 1, so `|Φ⁺| = 1` at the waveguide–air interface.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grad::{Cx, Real};
use crate::quad::trapz;
use crate::stack::{build_index_profile, EpitaxialStack, Grid, IndexProfile, ProfileOptions, StackError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PumpError {
    #[error("incidence angle {0}° outside [0, 90)")]
    Angle(f64),
    #[error(transparent)]
    Stack(#[from] StackError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpPolarization {
    #[default]
    S,
}

/// Pump solution on the profile grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpField {
    pub grid: Grid,
    /// Downward (toward the substrate) component at cell centers, `(re, im)`.
    pub phi_plus: Vec<(f64, f64)>,
    /// Upward (toward air) component at cell centers.
    pub phi_minus: Vec<(f64, f64)>,
    pub theta_deg: f64,
    pub lambda_nm: f64,
    pub reflectance: f64,
    pub transmittance: f64,
}

impl PumpField {
    pub fn total(&self) -> Vec<(f64, f64)> {
        self.phi_plus.iter().zip(&self.phi_minus).map(|(a, b)| (a.0 + b.0, a.1 + b.1)).collect()
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.total().into_iter().map(|(r, i)| r * r + i * i).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x_nm,re_phi_plus,im_phi_plus,re_phi_minus,im_phi_minus\n");
        for i in 0..self.grid.len {
            let (p, m) = (self.phi_plus[i], self.phi_minus[i]);
            let _ = writeln!(s, "{},{:.17e},{:.17e},{:.17e},{:.17e}", self.grid.x(i), p.0, p.1, m.0, m.1);
        }
        s
    }
}

/// Generic solution: complex components at cell centers plus the far-field amplitudes.
#[derive(Debug, Clone)]
pub struct PumpSolution<T> {
    pub phi_plus: Vec<Cx<T>>,
    pub phi_minus: Vec<Cx<T>>,
    pub r: Cx<T>,
    /// Downward amplitude entering the substrate.
    pub a_sub: Cx<T>,
    pub k_inc: T,
    pub k_sub: Cx<T>,
}

impl<T: Real> PumpSolution<T> {
    pub fn total(&self, i: usize) -> Cx<T> {
        self.phi_plus[i] + self.phi_minus[i]
    }

    pub fn reflectance(&self) -> T {
        self.r.norm_sqr()
    }

    pub fn transmittance(&self) -> T {
        self.k_sub.re / self.k_inc * self.a_sub.norm_sqr()
    }
}

/// s-polarized solution for samples `n` (bottom to top) on `grid`, substrate index `n_sub`.
pub fn solve_s<T: Real>(n: &[T], grid: &Grid, n_sub: T, lambda_nm: f64, sin_theta: T) -> PumpSolution<T> {
    assert_eq!(n.len(), grid.len);
    let k0 = 2.0 * std::f64::consts::PI / lambda_nm;
    let s2 = sin_theta * sin_theta;
    let kx = |ni: T| Cx::sqrt_of_real(ni * ni - s2).scale_f64(k0);

    // Layers top to bottom: runs of identical samples.
    let mut runs: Vec<(T, usize, usize)> = Vec::new(); // (index, first sample, count) with first = lowest sample
    for i in (0..n.len()).rev() {
        match runs.last_mut() {
            Some((v, first, count)) if v.identical(&n[i]) => {
                *first = i;
                *count += 1;
            }
            _ => runs.push((n[i], i, 1)),
        }
    }
    let h = grid.spacing_nm;
    let ks: Vec<Cx<T>> = runs.iter().map(|&(v, _, _)| kx(v)).collect();
    let k_inc = kx(T::constant(1.0));
    let k_sub = kx(n_sub);
    let m = runs.len();
    let fresnel = |ka: Cx<T>, kb: Cx<T>| {
        let sum = ka + kb;
        ((ka - kb) / sum, (ka + ka) / sum)
    };
    // Upward/downward amplitude ratio at the top of each layer.
    let mut q_top = vec![Cx::<T>::zero(); m];
    let mut below = Cx::<T>::zero();
    let mut k_below = k_sub;
    let mut rt = vec![(Cx::<T>::zero(), Cx::<T>::zero()); m];
    for j in (0..m).rev() {
        let (r, t) = fresnel(ks[j], k_below);
        rt[j] = (r, t);
        let qb = (r + below) / (Cx::one() + r * below);
        let d = h * runs[j].2 as f64;
        let ph = ks[j].scale_f64(2.0 * d).exp_i();
        q_top[j] = qb * ph;
        below = q_top[j];
        k_below = ks[j];
    }
    let (r0, t0) = if m > 0 { fresnel(k_inc, ks[0]) } else { fresnel(k_inc, k_sub) };
    let q_first = if m > 0 { q_top[0] } else { Cx::zero() };
    let r = (r0 + q_first) / (Cx::one() + r0 * q_first);

    let mut phi_plus = vec![Cx::<T>::zero(); n.len()];
    let mut phi_minus = vec![Cx::<T>::zero(); n.len()];
    let mut a = t0 / (Cx::one() + r0 * q_first);
    for j in 0..m {
        let (_, first, count) = runs[j];
        let k = ks[j];
        let step = k.scale_f64(h).exp_i();
        let back = k.scale_f64(-h).exp_i();
        // Cell c counted from the top of the layer, center at u = (c + 1/2) h.
        let mut fwd = a * k.scale_f64(0.5 * h).exp_i();
        let mut bwd = a * q_top[j] * k.scale_f64(-0.5 * h).exp_i();
        for c in 0..count {
            let i = first + count - 1 - c;
            phi_plus[i] = fwd;
            phi_minus[i] = bwd;
            if c + 1 < count {
                fwd = fwd * step;
                bwd = bwd * back;
            }
        }
        let a_bot = a * k.scale_f64(h * count as f64).exp_i();
        let next_q = if j + 1 < m { q_top[j + 1] } else { Cx::zero() };
        let (rj, tj) = rt[j];
        a = a_bot * tj / (Cx::one() + rj * next_q);
    }
    PumpSolution { phi_plus, phi_minus, r, a_sub: a, k_inc: k_inc.re, k_sub }
}

fn check_angle(theta_deg: f64) -> Result<(), PumpError> {
    if (0.0..90.0).contains(&theta_deg) {
        Ok(())
    } else {
        Err(PumpError::Angle(theta_deg))
    }
}

/// Pump field on an index profile at its wavelength.
pub fn pump_field(profile: &IndexProfile, theta_deg: f64, _pol: PumpPolarization) -> Result<PumpField, PumpError> {
    check_angle(theta_deg)?;
    let sol =
        solve_s(&profile.n, &profile.grid, profile.substrate_index, profile.lambda_nm, theta_deg.to_radians().sin());
    let c = |v: &Cx<f64>| (v.re, v.im);
    Ok(PumpField {
        grid: profile.grid,
        phi_plus: sol.phi_plus.iter().map(c).collect(),
        phi_minus: sol.phi_minus.iter().map(c).collect(),
        theta_deg,
        lambda_nm: profile.lambda_nm,
        reflectance: sol.reflectance(),
        transmittance: sol.transmittance(),
    })
}

/// Pump field of a stack at its design pump wavelength, enforcing pump transparency when asked.
pub fn pump_field_for_stack(
    stack: &EpitaxialStack,
    theta_deg: f64,
    opts: &ProfileOptions,
    check_transparency: bool,
) -> Result<(IndexProfile, PumpField), PumpError> {
    if check_transparency {
        stack.check_pump_transparency()?;
    }
    let profile = build_index_profile(stack, stack.design_wavelengths_nm.pump, opts)?;
    let field = pump_field(&profile, theta_deg, PumpPolarization::S)?;
    Ok((profile, field))
}

/// Smooth indicator of `[lo, hi]` with logistic edges of scale `s` (a sharp box when `s = 0`).
pub fn window_weight<T: Real>(x: f64, lo: T, hi: T, s: f64) -> T {
    if s == 0.0 {
        let inside = x >= lo.value() && x <= hi.value();
        return T::constant(if inside { 1.0 } else { 0.0 });
    }
    ((lo * -1.0 + x) / s).logistic() - ((hi * -1.0 + x) / s).logistic()
}

/// `∫ w_core(x) |E_p(x)|² dx`.
pub fn core_energy<T: Real>(sol: &PumpSolution<T>, grid: &Grid, core: (T, T), s: f64) -> T {
    let samples: Vec<T> =
        (0..grid.len).map(|i| window_weight(grid.x(i), core.0, core.1, s) * sol.total(i).norm_sqr()).collect();
    trapz(&samples, grid.spacing_nm)
}

/// Core-integrated pump intensity versus wavelength.
pub fn cavity_resonance_scan<F>(
    mut profile_at: F,
    theta_deg: f64,
    lambda_range_nm: (f64, f64),
    n_points: usize,
) -> Result<Vec<(f64, f64)>, PumpError>
where
    F: FnMut(f64) -> Result<(IndexProfile, (f64, f64)), PumpError>,
{
    check_angle(theta_deg)?;
    let (a, b) = lambda_range_nm;
    let mut out = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let lambda = if n_points == 1 { a } else { a + (b - a) * k as f64 / (n_points - 1) as f64 };
        let (profile, core) = profile_at(lambda)?;
        let sol = solve_s(&profile.n, &profile.grid, profile.substrate_index, lambda, theta_deg.to_radians().sin());
        let s = profile.smoothing_width_nm / (2.0 * 9f64.ln());
        out.push((lambda, core_energy(&sol, &profile.grid, core, s)));
    }
    Ok(out)
}

/// Resonance scan of a stack around its core group.
pub fn stack_resonance_scan(
    stack: &EpitaxialStack,
    opts: &ProfileOptions,
    theta_deg: f64,
    lambda_range_nm: (f64, f64),
    n_points: usize,
) -> Result<Vec<(f64, f64)>, PumpError> {
    cavity_resonance_scan(
        |l| {
            let p = build_index_profile(stack, l, opts)?;
            let core = p.layout.as_ref().map(|l| l.core_nm).unwrap_or((0.0, 0.0));
            Ok((p, core))
        },
        theta_deg,
        lambda_range_nm,
        n_points,
    )
}

pub fn scan_to_csv(scan: &[(f64, f64)]) -> String {
    let mut s = String::from("lambda_nm,core_energy\n");
    for (l, e) in scan {
        let _ = writeln!(s, "{l},{e:.17e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64) -> Grid {
        Grid { start_nm: lo, spacing_nm: 1.0, len: (hi - lo) as usize }
    }

    #[test]
    fn matched_uniform_medium_has_no_reflection() {
        let g = grid(-500.0, 500.0);
        let p = IndexProfile::from_samples(g, vec![1.0; g.len], 640.0, 1.0, 1.0);
        for theta in [0.0, 30.0, 60.0] {
            let f = pump_field(&p, theta, PumpPolarization::S).unwrap();
            assert!(f.reflectance < 1e-30);
            assert!((f.transmittance - 1.0).abs() < 1e-12);
            assert!(f.intensity().iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn single_interface_matches_fresnel() {
        let g = grid(-500.0, 500.0);
        let n = 3.5;
        let p = IndexProfile::steps(g, 640.0, n, &[(0.0, n)], 1.0);
        let f = pump_field(&p, 0.0, PumpPolarization::S).unwrap();
        let fresnel = ((n - 1.0) / (n + 1.0)).powi(2);
        assert!((f.reflectance - fresnel).abs() < 1e-10);
        assert!((f.reflectance + f.transmittance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quarter_wave_mirror_approaches_unity() {
        // λ = 600 nm: n_H = 3 → 50 nm, n_L = 2.5 → 60 nm.
        let (nh, nl, ns) = (3.0, 2.5, 2.5);
        let mut last = 0.0;
        for periods in 1..=16 {
            let mut layers = Vec::new();
            let mut top = 0.0;
            for _ in 0..periods {
                top += 60.0;
                layers.push((top, nl));
                top += 50.0;
                layers.push((top, nh));
            }
            let g = grid(-100.0, top + 100.0);
            let mut all = vec![(0.0, ns)];
            all.extend(layers);
            let p = IndexProfile::steps(g, 600.0, ns, &all, 1.0);
            let r = pump_field(&p, 0.0, PumpPolarization::S).unwrap().reflectance;
            let y = (ns / 1.0) * (nh / nl).powi(2 * periods);
            let analytic = ((1.0 - y) / (1.0 + y)).powi(2);
            assert!((r - analytic).abs() < 1e-10, "N={periods}: {r} vs {analytic}");
            assert!(r > last);
            last = r;
        }
        assert!(last > 0.99);
    }

    #[test]
    fn amplitude_is_unity_at_air_interface() {
        let s = EpitaxialStack::table1();
        let (p, f) = pump_field_for_stack(&s, 33.7, &ProfileOptions::default(), true).unwrap();
        let top = p.layout.as_ref().unwrap().stack_top_nm;
        let i = p.grid.xs().iter().position(|&x| x > top + 60.0).unwrap();
        let (re, im) = f.phi_plus[i];
        assert!(((re * re + im * im).sqrt() - 1.0).abs() < 1e-12);
        assert!((f.reflectance + f.transmittance - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bad_angle_is_rejected() {
        let g = grid(0.0, 10.0);
        let p = IndexProfile::from_samples(g, vec![1.0; 10], 640.0, 1.0, 1.0);
        assert!(pump_field(&p, 90.0, PumpPolarization::S).is_err());
        assert!(pump_field(&p, -1.0, PumpPolarization::S).is_err());
    }

    #[test]
    fn air_only_scan_is_flat() {
        let g = grid(-200.0, 200.0);
        let scan = cavity_resonance_scan(
            |l| Ok((IndexProfile::from_samples(g, vec![1.0; g.len], l, 1.0, 1.0), (-50.0, 50.0))),
            20.0,
            (600.0, 700.0),
            11,
        )
        .unwrap();
        assert!(scan.iter().all(|(_, e)| (e - scan[0].1).abs() < 1e-9));
    }
}
