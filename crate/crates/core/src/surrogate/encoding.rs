//! Fixed window around the core: box-averaged inputs, field nodes and their expansion
//! back onto the fine grid.

use serde::{Deserialize, Serialize};

use crate::grad::Real;
use crate::stack::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Encoding {
    /// The window is `[-half_width, half_width]` around the core center.
    pub half_width_nm: f64,
    pub n_inputs: usize,
    pub n_nodes: usize,
}

impl Default for Encoding {
    fn default() -> Self {
        Encoding { half_width_nm: 5000.0, n_inputs: 128, n_nodes: 401 }
    }
}

impl Encoding {
    pub fn cell_nm(&self) -> f64 {
        2.0 * self.half_width_nm / self.n_inputs as f64
    }

    pub fn node_spacing_nm(&self) -> f64 {
        2.0 * self.half_width_nm / (self.n_nodes - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.half_width_nm + k as f64 * self.node_spacing_nm()
    }

    /// Cell averages of `n`. Parts of a cell below the grid take `below`, above take `above`.
    pub fn inputs<T: Real>(&self, n: &[T], grid: &Grid, below: T, above: T) -> Vec<T> {
        assert_eq!(n.len(), grid.len);
        let h = grid.spacing_nm;
        let cell = self.cell_nm();
        let (g_lo, g_hi) = (grid.start_nm, grid.end_nm());
        (0..self.n_inputs)
            .map(|j| {
                let lo = -self.half_width_nm + j as f64 * cell;
                let hi = lo + cell;
                let mut coeffs = Vec::new();
                let mut xs = Vec::new();
                let w_below = (g_lo.min(hi) - lo).max(0.0);
                let w_above = (hi - g_hi.max(lo)).max(0.0);
                if w_below > 0.0 {
                    coeffs.push(w_below / cell);
                    xs.push(below);
                }
                if w_above > 0.0 {
                    coeffs.push(w_above / cell);
                    xs.push(above);
                }
                let i0 = (((lo - g_lo) / h).floor().max(0.0)) as usize;
                let i1 = ((((hi - g_lo) / h).ceil()).max(0.0) as usize).min(grid.len);
                for i in i0..i1 {
                    let c_lo = g_lo + i as f64 * h;
                    let overlap = (c_lo + h).min(hi) - c_lo.max(lo);
                    if overlap > 0.0 {
                        coeffs.push(overlap / cell);
                        xs.push(n[i]);
                    }
                }
                T::linear_combination(&coeffs, &xs)
            })
            .collect()
    }

    /// Samples a fine-grid field at the nodes (linear interpolation; zero off the grid),
    /// rescaled to unit power on the node grid, positive at its largest magnitude.
    pub fn targets(&self, field: &[f64], grid: &Grid) -> Vec<f64> {
        let h = grid.spacing_nm;
        let mut t: Vec<f64> = (0..self.n_nodes)
            .map(|k| {
                let u = (self.node(k) - grid.x(0)) / h;
                if u < 0.0 || u > (grid.len - 1) as f64 {
                    return 0.0;
                }
                let i = (u.floor() as usize).min(grid.len - 2);
                let f = u - i as f64;
                field[i] * (1.0 - f) + field[i + 1] * f
            })
            .collect();
        let peak = t.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if peak < 0.0 {
            t.iter_mut().for_each(|v| *v = -*v);
        }
        crate::quad::normalize_unit_power(&mut t, self.node_spacing_nm());
        t
    }

    /// Catmull-Rom expansion of node values onto the fine grid; zero outside the window.
    pub fn expand<T: Real>(&self, nodes: &[T], grid: &Grid) -> Vec<T> {
        assert_eq!(nodes.len(), self.n_nodes);
        let d = self.node_spacing_nm();
        let last = self.n_nodes as isize - 1;
        let at = |k: isize| if k < 0 || k > last { None } else { Some(nodes[k as usize]) };
        (0..grid.len)
            .map(|i| {
                let u = (grid.x(i) + self.half_width_nm) / d;
                if u < 0.0 || u > last as f64 {
                    return T::zero();
                }
                let k = (u.floor() as isize).min(last - 1);
                let t = u - k as f64;
                let (t2, t3) = (t * t, t * t * t);
                let w = [
                    0.5 * (-t3 + 2.0 * t2 - t),
                    0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
                    0.5 * (-3.0 * t3 + 4.0 * t2 + t),
                    0.5 * (t3 - t2),
                ];
                let mut coeffs = Vec::with_capacity(4);
                let mut xs = Vec::with_capacity(4);
                for (j, wj) in w.iter().enumerate() {
                    // Nodes past the window edge are zero.
                    if let Some(v) = at(k - 1 + j as isize) {
                        coeffs.push(*wj);
                        xs.push(v);
                    }
                }
                T::linear_combination(&coeffs, &xs)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid { start_nm: -6000.0, spacing_nm: 1.0, len: 10950 }
    }

    #[test]
    fn uniform_profile_averages_to_itself() {
        let e = Encoding::default();
        let g = grid();
        let n = vec![3.2; g.len];
        let x = e.inputs(&n, &g, 3.2, 1.0);
        assert_eq!(x.len(), 128);
        for v in &x[..120] {
            assert!((v - 3.2).abs() < 1e-12);
        }
        // The top of the window reaches past the grid into the cover.
        assert!(x[127] < 3.2);
    }

    #[test]
    fn smooth_field_survives_node_round_trip() {
        let e = Encoding::default();
        let g = grid();
        let f: Vec<f64> = (0..g.len)
            .map(|i| {
                let x = g.x(i);
                (-(x / 900.0).powi(2)).exp() * (x / 300.0).cos()
            })
            .collect();
        let nodes = e.targets(&f, &g);
        let back = e.expand(&nodes, &g);
        let scale = f.iter().map(|v| v * v).sum::<f64>().sqrt() / back.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = f.iter().zip(&back).map(|(a, b)| (a - b * scale).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }
}
