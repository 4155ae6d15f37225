//! Reference guided-mode solver for one-dimensional multilayers.
//!
//! Each grid cell is a homogeneous slab. The shooting state `(F, F'/w)` is carried
//! across cells with the exact 2×2 transfer matrix, `w = 1` for TE (`F = E_y`) and
//! `w = ε` for TM. For TM the solved component is `H_y`, which is proportional to the
//! transverse displacement `D_x = β H_y / ω`, so the returned TM field is the
//! normalized displacement profile. A guided mode is a root of the mismatch between
//! the upward-shot solution and the decaying cover solution.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{normalize_unit_power, trapz};
use crate::stack::{Grid, IndexProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "te")]
    TE,
    #[serde(rename = "tm")]
    TM,
}

impl Polarization {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::TE => "TE",
            Polarization::TM => "TM",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeError {
    #[error("root bracketing failed while scanning n_eff in [{lo:.10}, {hi:.10}]: {reason}")]
    Bracket { lo: f64, hi: f64, reason: String },
    #[error("no guided {polarization:?} mode at {lambda_nm} nm")]
    NoGuidedMode { polarization: Polarization, lambda_nm: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidedMode {
    pub polarization: Polarization,
    pub n_eff: f64,
    /// TE: `E_y`; TM: `D_x`. Units nm^-1/2, `trapz(field²) = 1`, positive at its largest sample.
    pub field: Vec<f64>,
    pub grid: Grid,
    pub lambda_nm: f64,
    /// Rank by descending effective index.
    pub mode_order: usize,
}

impl GuidedMode {
    /// Share of `∫ field²` between `lo_nm` and `hi_nm`.
    pub fn confinement(&self, lo_nm: f64, hi_nm: f64) -> f64 {
        let sq: Vec<f64> = (0..self.grid.len)
            .map(|i| {
                let x = self.grid.x(i);
                if x >= lo_nm && x <= hi_nm {
                    self.field[i] * self.field[i]
                } else {
                    0.0
                }
            })
            .collect();
        trapz(&sq, self.grid.spacing_nm)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# lambda_nm={:.17e}", self.lambda_nm);
        let _ = writeln!(s, "# polarization={}", self.polarization.as_str());
        let _ = writeln!(s, "# n_eff={:.17e}", self.n_eff);
        s.push_str("x_nm,field\n");
        for (i, f) in self.field.iter().enumerate() {
            let _ = writeln!(s, "{},{:.17e}", self.grid.x(i), f);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub scan_step: f64,
    pub tolerance: f64,
    /// Restricts the scan to `[lo, hi]` (intersected with the guided range).
    pub window: Option<(f64, f64)>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { scan_step: 1e-4, tolerance: 1e-10, window: None }
    }
}

/// Modes considered when picking the fundamental by confinement.
pub const FUNDAMENTAL_CANDIDATES: usize = 3;

struct Seg {
    d: f64,
    eps: f64,
}

struct Problem {
    k0: f64,
    w: fn(f64) -> f64,
    segs: Vec<Seg>,
    eps_sub: f64,
    eps_cov: f64,
}

fn weight_te(_: f64) -> f64 {
    1.0
}

fn weight_tm(eps: f64) -> f64 {
    eps
}

/// Carries `(F, G = F'/w)` across a homogeneous slab of thickness `d` (negative walks downward).
#[inline]
fn step(f: f64, g: f64, d: f64, eps: f64, w: f64, k0: f64, beta2: f64) -> (f64, f64) {
    let q = k0 * k0 * (eps - beta2);
    if q > 0.0 {
        let k = q.sqrt();
        let (s, c) = (k * d).sin_cos();
        (f * c + w * g * s / k, -f * k * s / w + g * c)
    } else if q < 0.0 {
        let k = (-q).sqrt();
        let e = (k * d).exp();
        let (ch, sh) = (0.5 * (e + 1.0 / e), 0.5 * (e - 1.0 / e));
        (f * ch + w * g * sh / k, f * k * sh / w + g * ch)
    } else {
        (f + w * g * d, g)
    }
}

impl Problem {
    fn new(profile: &IndexProfile, pol: Polarization) -> Self {
        let mut segs: Vec<Seg> = Vec::new();
        let h = profile.grid.spacing_nm;
        for &n in &profile.n {
            let eps = n * n;
            match segs.last_mut() {
                Some(s) if s.eps == eps => s.d += h,
                _ => segs.push(Seg { d: h, eps }),
            }
        }
        Problem {
            k0: 2.0 * std::f64::consts::PI / profile.lambda_nm,
            w: match pol {
                Polarization::TE => weight_te,
                Polarization::TM => weight_tm,
            },
            segs,
            eps_sub: profile.substrate_index * profile.substrate_index,
            eps_cov: profile.cover_index * profile.cover_index,
        }
    }

    fn decay(&self, beta2: f64, eps: f64) -> f64 {
        self.k0 * (beta2 - eps).max(0.0).sqrt()
    }

    /// Mismatch with the decaying cover solution, up to a positive factor.
    fn mismatch(&self, beta: f64) -> f64 {
        let b2 = beta * beta;
        let mut f = 1.0;
        let mut g = self.decay(b2, self.eps_sub) / (self.w)(self.eps_sub);
        for s in &self.segs {
            let r = step(f, g, s.d, s.eps, (self.w)(s.eps), self.k0, b2);
            f = r.0;
            g = r.1;
            let m = f.abs() + g.abs() / self.k0;
            if m > 1e100 {
                f /= m;
                g /= m;
            }
        }
        (self.w)(self.eps_cov) * g + self.decay(b2, self.eps_cov) * f
    }
}

/// Field at cell centers for effective index `beta`, spliced from upward and downward shots.
fn field_at(profile: &IndexProfile, pol: Polarization, beta: f64) -> Vec<f64> {
    let p = Problem::new(profile, pol);
    let b2 = beta * beta;
    let h = profile.grid.spacing_nm;
    let n = profile.n.len();
    let eps: Vec<f64> = profile.n.iter().map(|v| v * v).collect();
    let shoot = |order: &mut dyn Iterator<Item = usize>, f0: f64, g0: f64, dir: f64| {
        let mut out = vec![0.0; n];
        let (mut f, mut g) = (f0, g0);
        for i in order {
            let w = (p.w)(eps[i]);
            let (f1, g1) = step(f, g, dir * 0.5 * h, eps[i], w, p.k0, b2);
            out[i] = f1;
            let (f2, g2) = step(f1, g1, dir * 0.5 * h, eps[i], w, p.k0, b2);
            f = f2;
            g = g2;
            let m = f.abs() + g.abs() / p.k0;
            if m > 1e100 {
                f /= m;
                g /= m;
                out.iter_mut().for_each(|v| *v /= m);
            }
        }
        out
    };
    let up = shoot(&mut (0..n), 1.0, p.decay(b2, p.eps_sub) / (p.w)(p.eps_sub), 1.0);
    let down = shoot(&mut (0..n).rev(), 1.0, -p.decay(b2, p.eps_cov) / (p.w)(p.eps_cov), -1.0);
    let su = up.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sd = down.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let splice = (0..n)
        .max_by(|&a, &b| {
            let ka = (up[a] / su * down[a] / sd).abs();
            let kb = (up[b] / su * down[b] / sd).abs();
            ka.total_cmp(&kb)
        })
        .unwrap();
    let ratio = up[splice] / down[splice];
    let mut field: Vec<f64> = (0..n).map(|i| if i <= splice { up[i] } else { down[i] * ratio }).collect();
    normalize_unit_power(&mut field, h);
    let imax = (0..n).max_by(|&a, &b| field[a].abs().total_cmp(&field[b].abs())).unwrap();
    if field[imax] < 0.0 {
        field.iter_mut().for_each(|v| *v = -*v);
    }
    field
}

/// Guided modes sorted by descending effective index; at most `max_modes`.
pub fn solve_modes(profile: &IndexProfile, pol: Polarization, max_modes: usize) -> Result<Vec<GuidedMode>, ModeError> {
    solve_modes_with(profile, pol, max_modes, &SolverOptions::default())
}

pub fn solve_modes_with(
    profile: &IndexProfile,
    pol: Polarization,
    max_modes: usize,
    opts: &SolverOptions,
) -> Result<Vec<GuidedMode>, ModeError> {
    let clad = profile.substrate_index.max(profile.cover_index);
    let mut hi = profile.max_index();
    let mut lo = clad;
    if let Some((wl, wh)) = opts.window {
        hi = hi.min(wh);
        lo = lo.max(wl);
    }
    if hi <= lo || max_modes == 0 {
        return Ok(Vec::new());
    }
    let p = Problem::new(profile, pol);
    let lo_edge = lo + 1e-12;
    let eval = |b: f64| -> Result<f64, ModeError> {
        let d = p.mismatch(b);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(ModeError::Bracket { lo, hi, reason: format!("non-finite mismatch at n_eff = {b}") })
        }
    };
    let mut roots = Vec::new();
    let mut b_prev = hi;
    let mut d_prev = eval(b_prev)?;
    let mut k = 1u64;
    while roots.len() < max_modes && b_prev > lo_edge {
        let b = (hi - k as f64 * opts.scan_step).max(lo_edge);
        k += 1;
        let d = eval(b)?;
        if d == 0.0 {
            roots.push(b);
        } else if d_prev != 0.0 && (d > 0.0) != (d_prev > 0.0) {
            let (mut a, mut c, mut da) = (b, b_prev, d);
            let mut iters = 0;
            while c - a > opts.tolerance {
                let m = 0.5 * (a + c);
                let dm = eval(m)?;
                if (dm > 0.0) == (da > 0.0) {
                    a = m;
                    da = dm;
                } else {
                    c = m;
                }
                iters += 1;
                if iters > 200 {
                    return Err(ModeError::Bracket { lo: b, hi: b_prev, reason: "bisection did not converge".into() });
                }
            }
            roots.push(0.5 * (a + c));
        }
        b_prev = b;
        d_prev = d;
    }
    Ok(roots
        .into_iter()
        .enumerate()
        .map(|(order, n_eff)| GuidedMode {
            polarization: pol,
            n_eff,
            field: field_at(profile, pol, n_eff),
            grid: profile.grid,
            lambda_nm: profile.lambda_nm,
            mode_order: order,
        })
        .collect())
}

/// Picks the physically intended mode: the most confined to core and buffers among the
/// leading candidates. Without layout information the highest-index mode is returned.
pub fn select_fundamental(profile: &IndexProfile, modes: Vec<GuidedMode>) -> Option<GuidedMode> {
    let region = profile.layout.as_ref().map(|l| l.guiding_nm);
    let mut best: Option<(f64, GuidedMode)> = None;
    for m in modes.into_iter().take(FUNDAMENTAL_CANDIDATES) {
        let score = region.map(|(lo, hi)| m.confinement(lo, hi)).unwrap_or(-(m.mode_order as f64));
        if best.as_ref().map_or(true, |(s, _)| score > *s) {
            best = Some((score, m));
        }
    }
    best.map(|(_, m)| m)
}

pub fn fundamental_mode(profile: &IndexProfile, pol: Polarization) -> Result<GuidedMode, ModeError> {
    fundamental_mode_with(profile, pol, &SolverOptions::default())
}

pub fn fundamental_mode_with(
    profile: &IndexProfile,
    pol: Polarization,
    opts: &SolverOptions,
) -> Result<GuidedMode, ModeError> {
    let modes = solve_modes_with(profile, pol, FUNDAMENTAL_CANDIDATES, opts)?;
    select_fundamental(profile, modes)
        .ok_or(ModeError::NoGuidedMode { polarization: pol, lambda_nm: profile.lambda_nm })
}

/// `E = D / n²` pointwise.
pub fn reconstruct_tm_efield(mode: &GuidedMode, profile: &IndexProfile) -> Vec<f64> {
    assert_eq!(mode.polarization, Polarization::TM, "E-field reconstruction applies to TM modes");
    assert_eq!(mode.field.len(), profile.n.len());
    mode.field.iter().zip(&profile.n).map(|(d, n)| d / (n * n)).collect()
}

/// Effective indices of the fundamental TE and TM modes.
pub fn birefringence(profile_te: &IndexProfile, profile_tm: &IndexProfile) -> Result<(f64, f64), ModeError> {
    let te = fundamental_mode(profile_te, Polarization::TE)?;
    let tm = fundamental_mode(profile_tm, Polarization::TM)?;
    Ok((te.n_eff, tm.n_eff))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Symmetric slab centered at 0 with cladding padding on both sides.
    pub(crate) fn slab(n_core: f64, n_clad: f64, d: f64, lambda: f64, h: f64) -> IndexProfile {
        let pad = 3000.0;
        let grid = Grid { start_nm: -d / 2.0 - pad, spacing_nm: h, len: ((d + 2.0 * pad) / h).round() as usize };
        IndexProfile::steps(grid, lambda, n_clad, &[(-d / 2.0, n_clad), (d / 2.0, n_core)], n_clad)
    }

    /// Even TE root of `κ tan(κ d/2) = γ` by bisection.
    pub(crate) fn slab_te_even(n1: f64, n2: f64, d: f64, lambda: f64) -> f64 {
        let k0 = 2.0 * std::f64::consts::PI / lambda;
        let f = |n: f64| {
            let k = k0 * (n1 * n1 - n * n).sqrt();
            let g = k0 * (n * n - n2 * n2).sqrt();
            k * (k * d / 2.0).tan() - g
        };
        // Fundamental lies where κd/2 < π/2.
        let n_lo = (n1 * n1 - (std::f64::consts::PI / (k0 * d)).powi(2)).max(n2 * n2).sqrt() + 1e-15;
        let (mut a, mut b) = (n_lo, n1 - 1e-15);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (f(m) > 0.0) == (f(a) > 0.0) {
                a = m
            } else {
                b = m
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn slab_fundamental_matches_transcendental_root() {
        let p = slab(3.3, 3.0, 400.0, 1550.0, 1.0);
        let modes = solve_modes(&p, Polarization::TE, 4).unwrap();
        let exact = slab_te_even(3.3, 3.0, 400.0, 1550.0);
        assert!((modes[0].n_eff - exact).abs() < 1e-6, "{} vs {exact}", modes[0].n_eff);
    }

    #[test]
    fn fields_are_normalized_and_signed() {
        let p = slab(3.3, 3.0, 400.0, 1550.0, 1.0);
        for pol in [Polarization::TE, Polarization::TM] {
            for m in solve_modes(&p, pol, 4).unwrap() {
                let sq: Vec<f64> = m.field.iter().map(|v| v * v).collect();
                assert!((trapz(&sq, 1.0) - 1.0).abs() < 1e-8);
                let imax = (0..m.field.len()).max_by(|&a, &b| m.field[a].abs().total_cmp(&m.field[b].abs())).unwrap();
                assert!(m.field[imax] > 0.0);
                assert!(m.n_eff > 3.0 && m.n_eff < 3.3);
            }
        }
    }

    #[test]
    fn fundamental_has_no_sign_change_and_decays() {
        let p = slab(3.3, 3.0, 400.0, 1550.0, 1.0);
        let m = &solve_modes(&p, Polarization::TE, 1).unwrap()[0];
        assert!(m.field.iter().all(|&v| v > -1e-12));
        assert!(m.field[0] < 1e-3 * m.field[m.field.len() / 2]);
        assert!(*m.field.last().unwrap() < 1e-3 * m.field[m.field.len() / 2]);
    }

    #[test]
    fn te_modes_are_orthogonal() {
        let p = slab(3.5, 3.0, 1500.0, 1550.0, 1.0);
        let modes = solve_modes(&p, Polarization::TE, 4).unwrap();
        assert!(modes.len() >= 3);
        for i in 0..modes.len() {
            for j in 0..i {
                let prod: Vec<f64> = modes[i].field.iter().zip(&modes[j].field).map(|(a, b)| a * b).collect();
                assert!(trapz(&prod, 1.0).abs() < 1e-6, "{i},{j}: {}", trapz(&prod, 1.0));
            }
        }
    }

    #[test]
    fn te_index_exceeds_tm() {
        let p = slab(3.3, 3.0, 400.0, 1550.0, 1.0);
        let (te, tm) = birefringence(&p, &p).unwrap();
        assert!(te > tm);
    }

    #[test]
    fn tm_efield_reconstruction() {
        let p = slab(3.3, 3.0, 400.0, 1550.0, 1.0);
        let m = &solve_modes(&p, Polarization::TM, 1).unwrap()[0];
        let e = reconstruct_tm_efield(m, &p);
        // Across the step D is continuous while E jumps by the permittivity ratio.
        let i = p.grid.xs().iter().position(|&x| x > 200.0).unwrap();
        assert!((m.field[i] - m.field[i - 1]).abs() / m.field[i] < 5e-3);
        let ratio = e[i] / e[i - 1] * m.field[i - 1] / m.field[i];
        assert!((ratio - 3.3f64.powi(2) / 9.0).abs() < 1e-12);
        let vac = IndexProfile::from_samples(p.grid, vec![1.0; p.grid.len], 1550.0, 1.0, 1.0);
        assert_eq!(reconstruct_tm_efield(m, &vac), m.field);
    }

    #[test]
    fn no_contrast_gives_no_modes() {
        let p = slab(3.0, 3.0, 400.0, 1550.0, 1.0);
        assert!(solve_modes(&p, Polarization::TE, 3).unwrap().is_empty());
    }

    #[test]
    fn csv_header_carries_metadata() {
        let p = slab(3.3, 3.0, 400.0, 1550.0, 1.0);
        let m = &solve_modes(&p, Polarization::TE, 1).unwrap()[0];
        let csv = m.to_csv();
        assert!(csv.starts_with("# lambda_nm=1.55"));
        assert!(csv.contains("# polarization=TE"));
        assert!(csv.lines().nth(3).unwrap() == "x_nm,field");
    }
}
