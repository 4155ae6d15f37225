//! Smoothed transverse profiles on a uniform grid.
//!
//! The grid coordinate `x` runs along the growth axis (substrate at negative `x`,
//! air at positive `x`) with its origin at the center of the core group, so that
//! profiles of different designs line up. Between layers the profile follows
//!
//! `v(x) = v_sub + Σ_k Δv_k σ((x − a_k) / s)`
//!
//! where `a_k` are the interface positions and `Δv_k` the steps across them. The
//! width parameter `w = smoothing_width_nm` is the 10–90% rise distance, `s = w / (2 ln 9)`.

use serde::{Deserialize, Serialize};

use super::{flatten_params, EpitaxialStack, Role, StackError, StackParams};
use crate::grad::Real;
use crate::materials::{index_unchecked, Chi2Model, DispersionModel};

/// Beyond this many logistic scale lengths a transition is saturated to the last bit.
const SATURATION: f64 = 37.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstrateModel {
    /// The half-space below the stack takes the optical constants of the bottom-most layer.
    #[default]
    Isolated,
    /// The half-space uses the substrate group's own composition.
    Bulk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileOptions {
    pub grid_spacing_nm: f64,
    pub smoothing_width_nm: f64,
    pub padding_below_nm: f64,
    pub padding_above_nm: f64,
    pub substrate: SubstrateModel,
    pub dispersion: DispersionModel,
    pub chi2: Chi2Model,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            grid_spacing_nm: 1.0,
            smoothing_width_nm: 5.0,
            padding_below_nm: 2000.0,
            padding_above_nm: 500.0,
            substrate: SubstrateModel::Isolated,
            dispersion: DispersionModel::Afromowitz,
            chi2: Chi2Model::default(),
        }
    }
}

impl ProfileOptions {
    pub fn logistic_scale_nm(&self) -> f64 {
        self.smoothing_width_nm / (2.0 * 9f64.ln())
    }
}

/// Cell-centered uniform grid: sample `i` sits at `start_nm + (i + 1/2) spacing_nm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start_nm: f64,
    pub spacing_nm: f64,
    pub len: usize,
}

impl Grid {
    pub fn x(&self, i: usize) -> f64 {
        self.start_nm + (i as f64 + 0.5) * self.spacing_nm
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.x(i)).collect()
    }

    pub fn end_nm(&self) -> f64 {
        self.start_nm + self.len as f64 * self.spacing_nm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpan {
    pub role: Role,
    pub group: usize,
    pub sublayer: usize,
    pub period: u32,
    pub lo_nm: f64,
    pub hi_nm: f64,
}

/// Where the layers of the profiled stack sit on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileLayout {
    pub spans: Vec<LayerSpan>,
    /// Substrate/stack interface.
    pub stack_bottom_nm: f64,
    /// Stack/air interface.
    pub stack_top_nm: f64,
    /// Extent of the core group, or of the whole stack when there is no core.
    pub core_nm: (f64, f64),
    /// Extent of core plus adjacent buffers.
    pub guiding_nm: (f64, f64),
}

/// Profile samples at one wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexProfile {
    pub grid: Grid,
    pub n: Vec<f64>,
    pub lambda_nm: f64,
    pub smoothing_width_nm: f64,
    /// Index of the half-space below the grid.
    pub substrate_index: f64,
    /// Index of the half-space above the grid.
    pub cover_index: f64,
    pub layout: Option<ProfileLayout>,
}

impl IndexProfile {
    /// Profile from raw samples, for slabs and other synthetic structures.
    pub fn from_samples(grid: Grid, n: Vec<f64>, lambda_nm: f64, substrate_index: f64, cover_index: f64) -> Self {
        assert_eq!(grid.len, n.len());
        IndexProfile { grid, n, lambda_nm, smoothing_width_nm: 0.0, substrate_index, cover_index, layout: None }
    }

    /// Piecewise-constant step profile on `grid`; `layers` lists `(top_x_nm, index)` bottom to top,
    /// with samples above the last top taking `cover_index`.
    pub fn steps(grid: Grid, lambda_nm: f64, substrate_index: f64, layers: &[(f64, f64)], cover_index: f64) -> Self {
        let n = grid
            .xs()
            .into_iter()
            .map(|x| {
                if x < 0.0 && layers.is_empty() {
                    return substrate_index;
                }
                layers.iter().find(|(top, _)| x < *top).map(|l| l.1).unwrap_or(cover_index)
            })
            .collect();
        Self::from_samples(grid, n, lambda_nm, substrate_index, cover_index)
    }

    pub fn min_index(&self) -> f64 {
        self.n.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_index(&self) -> f64 {
        self.n.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// All channels the design path needs, generic over the scalar type.
#[derive(Debug, Clone)]
pub struct ProfileChannels<T> {
    pub grid: Grid,
    pub layout: ProfileLayout,
    pub wavelengths_nm: Vec<f64>,
    /// `n[w][i]`: index at `wavelengths_nm[w]`, sample `i`.
    pub n: Vec<Vec<T>>,
    pub substrate_index: Vec<T>,
    /// Second-order nonlinearity in pm/V (zero in air).
    pub chi2: Vec<T>,
    /// Interface positions, bottom to top.
    pub interfaces_nm: Vec<T>,
    /// Core group bounds.
    pub core_nm: (T, T),
    pub smoothing_width_nm: f64,
}

impl<T: Real> ProfileChannels<T> {
    pub fn index_profile(&self, w: usize) -> IndexProfile {
        IndexProfile {
            grid: self.grid,
            n: self.n[w].iter().map(|v| v.value()).collect(),
            lambda_nm: self.wavelengths_nm[w],
            smoothing_width_nm: self.smoothing_width_nm,
            substrate_index: self.substrate_index[w].value(),
            cover_index: 1.0,
            layout: Some(self.layout.clone()),
        }
    }
}

/// Profile of a plain stack at one wavelength.
pub fn build_index_profile(
    stack: &EpitaxialStack,
    lambda_nm: f64,
    opts: &ProfileOptions,
) -> Result<IndexProfile, StackError> {
    let ch = build_profiles(stack, &StackParams::from_stack(stack), &[lambda_nm], opts)?;
    Ok(ch.index_profile(0))
}

/// Builds smoothed index channels at each wavelength plus the χ² channel.
pub fn build_profiles<T: Real>(
    stack: &EpitaxialStack,
    params: &StackParams<T>,
    wavelengths_nm: &[f64],
    opts: &ProfileOptions,
) -> Result<ProfileChannels<T>, StackError> {
    let layers = flatten_params(stack, params);
    let h = opts.grid_spacing_nm;
    let w = opts.smoothing_width_nm;
    let thinnest = layers.iter().map(|l| l.thickness_nm.value()).fold(f64::INFINITY, f64::min);
    if !(h > 0.0 && h <= thinnest / 4.0) {
        return Err(StackError::Resolution { spacing_nm: h, max_nm: thinnest / 4.0 });
    }
    if !(w >= 0.0 && w < thinnest / 2.0) {
        return Err(StackError::Smoothing { width_nm: w, max_nm: thinnest / 2.0 });
    }

    // Media bottom to top: substrate, finite layers, air.
    let sub_al = match opts.substrate {
        SubstrateModel::Isolated => layers[0].al_fraction,
        SubstrateModel::Bulk => T::constant(stack.substrate().al_fraction()),
    };
    let mut unique: Vec<((usize, usize), T)> = Vec::new();
    for l in &layers {
        if !unique.iter().any(|(k, _)| *k == (l.group, l.sublayer)) {
            unique.push(((l.group, l.sublayer), l.al_fraction));
        }
    }
    let mut media_n: Vec<Vec<T>> = Vec::with_capacity(wavelengths_nm.len());
    let mut substrate_index = Vec::with_capacity(wavelengths_nm.len());
    for &lambda in wavelengths_nm {
        opts.dispersion.check_window(sub_al.value(), lambda)?;
        for (_, a) in &unique {
            opts.dispersion.check_window(a.value(), lambda)?;
        }
        let idx: Vec<((usize, usize), T)> =
            unique.iter().map(|&(k, a)| (k, index_unchecked(a, lambda, opts.dispersion))).collect();
        let n_sub = match opts.substrate {
            SubstrateModel::Isolated => idx[0].1,
            SubstrateModel::Bulk => index_unchecked(sub_al, lambda, opts.dispersion),
        };
        let mut media = Vec::with_capacity(layers.len() + 2);
        media.push(n_sub);
        for l in &layers {
            media.push(idx.iter().find(|(k, _)| *k == (l.group, l.sublayer)).unwrap().1);
        }
        media.push(T::constant(1.0));
        substrate_index.push(n_sub);
        media_n.push(media);
    }
    let mut media_chi2 = Vec::with_capacity(layers.len() + 2);
    media_chi2.push(opts.chi2.at(sub_al));
    let unique_chi2: Vec<((usize, usize), T)> = unique.iter().map(|&(k, a)| (k, opts.chi2.at(a))).collect();
    for l in &layers {
        media_chi2.push(unique_chi2.iter().find(|(k, _)| *k == (l.group, l.sublayer)).unwrap().1);
    }
    media_chi2.push(T::zero());

    // Interface positions measured from the substrate, then shifted to the core center.
    let mut z = Vec::with_capacity(layers.len() + 1);
    z.push(T::zero());
    for l in &layers {
        let last = *z.last().unwrap();
        z.push(last + l.thickness_nm);
    }
    let core_idx: Vec<usize> =
        layers.iter().enumerate().filter(|(_, l)| l.role == Role::Core).map(|(i, _)| i).collect();
    let (core_lo, core_hi) = match (core_idx.first(), core_idx.last()) {
        (Some(&a), Some(&b)) => (z[a], z[b + 1]),
        _ => (z[0], z[layers.len()]),
    };
    let center = (core_lo + core_hi) * 0.5;
    let interfaces: Vec<T> = z.iter().map(|&zk| zk - center).collect();
    let a: Vec<f64> = interfaces.iter().map(|v| v.value()).collect();

    let m_lo = ((a[0] - opts.padding_below_nm) / h).floor();
    let m_hi = ((a[layers.len()] + opts.padding_above_nm) / h).ceil();
    let grid = Grid { start_nm: m_lo * h, spacing_nm: h, len: (m_hi - m_lo) as usize };

    let spans: Vec<LayerSpan> = layers
        .iter()
        .enumerate()
        .map(|(i, l)| LayerSpan {
            role: l.role,
            group: l.group,
            sublayer: l.sublayer,
            period: l.period,
            lo_nm: a[i],
            hi_nm: a[i + 1],
        })
        .collect();
    let (core_lo_v, core_hi_v) = (core_lo.value() - center.value(), core_hi.value() - center.value());
    let mut guiding = (core_lo_v, core_hi_v);
    if let Some(&first) = core_idx.first() {
        if first > 0 && layers[first - 1].role == Role::Buffer {
            guiding.0 = a[first - 1];
        }
    }
    if let Some(&last) = core_idx.last() {
        if last + 1 < layers.len() && layers[last + 1].role == Role::Buffer {
            guiding.1 = a[last + 2];
        }
    }
    let layout = ProfileLayout {
        spans,
        stack_bottom_nm: a[0],
        stack_top_nm: a[layers.len()],
        core_nm: (core_lo_v, core_hi_v),
        guiding_nm: guiding,
    };

    let channels: Vec<&Vec<T>> = media_n.iter().chain(std::iter::once(&media_chi2)).collect();
    let steps: Vec<Vec<T>> =
        channels.iter().map(|m| (0..interfaces.len()).map(|k| m[k + 1] - m[k]).collect()).collect();
    let mut out: Vec<Vec<T>> = vec![Vec::with_capacity(grid.len); channels.len()];

    let s = opts.logistic_scale_nm();
    let cut = SATURATION * s;
    let mut j = 0usize; // medium containing x: a[j-1] < x <= a[j]
    let mut weights: Vec<(usize, T, f64)> = Vec::with_capacity(16);
    let mut coeffs: Vec<f64> = Vec::with_capacity(16);
    let mut terms: Vec<T> = Vec::with_capacity(16);
    for i in 0..grid.len {
        let x = grid.x(i);
        while j < a.len() && a[j] < x {
            j += 1;
        }
        weights.clear();
        if s > 0.0 {
            // Interfaces below x contribute σ(d) − 1 = −σ(−d); those above contribute σ(d).
            let mut k = j;
            while k > 0 && a[k - 1] > x - cut {
                k -= 1;
                let d = (interfaces[k] * (-1.0 / s)) + x / s;
                weights.push((k, (-d).logistic(), -1.0));
            }
            let mut k = j;
            while k < a.len() && a[k] < x + cut {
                let d = (interfaces[k] * (-1.0 / s)) + x / s;
                weights.push((k, d.logistic(), 1.0));
                k += 1;
            }
        }
        for (c, ch) in channels.iter().enumerate() {
            let base = ch[j];
            if weights.is_empty() {
                out[c].push(base);
                continue;
            }
            coeffs.clear();
            terms.clear();
            coeffs.push(1.0);
            terms.push(base);
            for &(k, sig, sign) in &weights {
                coeffs.push(sign);
                terms.push(steps[c][k] * sig);
            }
            out[c].push(T::linear_combination(&coeffs, &terms));
        }
    }
    let chi2 = out.pop().unwrap();
    Ok(ProfileChannels {
        grid,
        layout,
        wavelengths_nm: wavelengths_nm.to_vec(),
        n: out,
        substrate_index,
        chi2,
        interfaces_nm: interfaces,
        core_nm: (core_lo - center, core_hi - center),
        smoothing_width_nm: w,
    })
}
