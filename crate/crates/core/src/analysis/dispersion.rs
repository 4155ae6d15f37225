use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::modes::{fundamental_mode, Polarization};
use crate::parallel::par_map;
use crate::stack::{build_profiles, EpitaxialStack, ProfileOptions, StackParams};

/// Natural cubic spline through tabulated points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicTable {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicTable {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, AnalysisError> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(AnalysisError::Domain(format!("spline needs at least 3 matched knots, got {n}")));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(AnalysisError::Domain("spline knots must increase".into()));
        }
        // Tridiagonal solve for the interior second derivatives.
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0;
            let b = 2.0 * (h0 + h1);
            let r = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let denom = b - a * c[i - 1];
            c[i] = h1 / denom;
            d[i] = (r - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(CubicTable { x, y, m })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    /// Value and first derivative at `t`. Outside the knots the end cubic is extended.
    pub fn eval_with_slope(&self, t: f64) -> (f64, f64) {
        let i = self.segment(t);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let s = (self.y[i + 1] - self.y[i]) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        (v, s)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_slope(t).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DispersionConfig {
    /// Signal band; the idler band follows from energy conservation.
    pub signal_window_nm: (f64, f64),
    pub points: usize,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig { signal_window_nm: (1062.0, 1122.0), points: 16 }
    }
}

/// Fundamental-mode effective indices tabulated over the signal and idler bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDispersion {
    pub pump_nm: f64,
    pub signal_te: CubicTable,
    pub signal_tm: CubicTable,
    pub idler_te: CubicTable,
    pub idler_tm: CubicTable,
}

impl ModeDispersion {
    /// Re-solves the reference mode solver at every table wavelength.
    pub fn solve(stack: &EpitaxialStack, opts: &ProfileOptions, cfg: &DispersionConfig) -> Result<Self, AnalysisError> {
        let pump = stack.design_wavelengths_nm.pump;
        let (lo, hi) = cfg.signal_window_nm;
        if !(lo > pump && hi > lo) || cfg.points < 3 {
            return Err(AnalysisError::Domain(format!("bad signal window ({lo}, {hi}) nm or {} points", cfg.points)));
        }
        let k = cfg.points;
        let signal: Vec<f64> = (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect();
        let idler_of = |s: f64| 1.0 / (1.0 / pump - 1.0 / s);
        if !(idler_of(hi) > 0.0 && idler_of(lo) > 0.0) {
            return Err(AnalysisError::Domain("signal window leaves no positive idler wavelength".into()));
        }
        let mut idler: Vec<f64> = signal.iter().map(|&s| idler_of(s)).collect();
        idler.reverse();
        let wavelengths: Vec<f64> = signal.iter().chain(&idler).copied().collect();
        let ch = build_profiles(stack, &StackParams::from_stack(stack), &wavelengths, opts)?;
        let jobs: Vec<(usize, Polarization)> =
            (0..wavelengths.len()).flat_map(|w| [(w, Polarization::TE), (w, Polarization::TM)]).collect();
        let solved = par_map(jobs, |(w, pol)| fundamental_mode(&ch.index_profile(w), pol).map(|m| m.n_eff));
        let mut te = Vec::with_capacity(wavelengths.len());
        let mut tm = Vec::with_capacity(wavelengths.len());
        for pair in solved.chunks(2) {
            te.push(pair[0].clone()?);
            tm.push(pair[1].clone()?);
        }
        Ok(ModeDispersion {
            pump_nm: pump,
            signal_te: CubicTable::new(signal.clone(), te[..k].to_vec())?,
            signal_tm: CubicTable::new(signal, tm[..k].to_vec())?,
            idler_te: CubicTable::new(idler.clone(), te[k..].to_vec())?,
            idler_tm: CubicTable::new(idler, tm[k..].to_vec())?,
        })
    }

    /// The same tables with TM replaced by TE, which removes all birefringence.
    pub fn degenerate(&self) -> Self {
        ModeDispersion { signal_tm: self.signal_te.clone(), idler_tm: self.idler_te.clone(), ..self.clone() }
    }

    fn table(&self, pol: Polarization, lambda_nm: f64) -> Result<&CubicTable, AnalysisError> {
        let (sig, idl) = match pol {
            Polarization::TE => (&self.signal_te, &self.idler_te),
            Polarization::TM => (&self.signal_tm, &self.idler_tm),
        };
        for t in [sig, idl] {
            let (lo, hi) = t.range();
            if lambda_nm >= lo && lambda_nm <= hi {
                return Ok(t);
            }
        }
        let (lo, hi) = if lambda_nm < idl.range().0 { sig.range() } else { idl.range() };
        Err(AnalysisError::OutsideTable { lambda_nm, lo, hi })
    }

    pub fn n_eff(&self, pol: Polarization, lambda_nm: f64) -> Result<f64, AnalysisError> {
        Ok(self.table(pol, lambda_nm)?.eval(lambda_nm))
    }

    /// Group index `n − λ dn/dλ`.
    pub fn n_group(&self, pol: Polarization, lambda_nm: f64) -> Result<f64, AnalysisError> {
        let (n, dn) = self.table(pol, lambda_nm)?.eval_with_slope(lambda_nm);
        Ok(n - lambda_nm * dn)
    }

    pub fn signal_window_nm(&self) -> (f64, f64) {
        self.signal_te.range()
    }
}
