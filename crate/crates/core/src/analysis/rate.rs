use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    /// Multiplies, must be nonnegative.
    Rate,
    /// Multiplies, must lie in [0, 1].
    Probability,
    /// Divides, must be positive.
    Divisor,
    /// Listed in the report, not part of the product.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFactor {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub kind: FactorKind,
    pub note: String,
}

impl RateFactor {
    fn new(name: &str, value: f64, unit: &str, kind: FactorKind, note: &str) -> Self {
        RateFactor { name: name.into(), value, unit: unit.into(), kind, note: note.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLedger {
    pub factors: Vec<RateFactor>,
    /// Set when the combination rule is this crate's own model rather than a published one.
    pub caveat: Option<String>,
    /// A published rate to print next to the computed one, in events/s.
    pub quoted_rate_hz: Option<f64>,
}

/// Fraction of an isotropic emitter's light inside a collection cone of numerical aperture `na`.
pub fn collection_fraction(na: f64) -> f64 {
    (1.0 - (1.0 - na * na).max(0.0).sqrt()) / 2.0
}

impl RateLedger {
    /// Trapped-ion interface: 1 MHz attempts, NA 0.6 collection, 70% fiber coupling,
    /// 5.6% branching, 50 ns window, 60 mW average pump at 1 MHz, mismatch factor 50.
    pub fn ion_interface() -> Self {
        let pump_photons = 60e-3 / 1e6 / (6.626_070_15e-34 * 299_792_458.0 / 640.65e-9);
        RateLedger {
            factors: vec![
                RateFactor::new("attempt rate", 1e6, "Hz", FactorKind::Rate, "ion excitation attempts"),
                RateFactor::new(
                    "branching ratio",
                    0.056,
                    "",
                    FactorKind::Probability,
                    "decay into the 1092 nm channel",
                ),
                RateFactor::new(
                    "collection",
                    collection_fraction(0.6),
                    "",
                    FactorKind::Probability,
                    "isotropic emitter into NA 0.6",
                ),
                RateFactor::new("fiber coupling", 0.7, "", FactorKind::Probability, "single-mode fiber"),
                RateFactor::new(
                    "source pairs per pulse",
                    1e-3,
                    "",
                    FactorKind::Probability,
                    "assumed; not derived from the pump energy",
                ),
                RateFactor::new("spectral mismatch", 50.0, "", FactorKind::Divisor, "ion vs source linewidth"),
                RateFactor::new("swap success", 0.5, "", FactorKind::Probability, "linear-optics Bell measurement"),
                RateFactor::new("detection window", 50e-9, "s", FactorKind::Info, "coincidence gate"),
                RateFactor::new(
                    "pump photons per pulse",
                    pump_photons,
                    "",
                    FactorKind::Info,
                    "60 mW average at 1 MHz, 640.65 nm",
                ),
            ],
            caveat: Some("own combination model; the published estimate does not state how its factors combine".into()),
            quoted_rate_hz: Some(2.0 / 60.0),
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        for f in &self.factors {
            let ok = match f.kind {
                FactorKind::Rate => f.value >= 0.0 && f.value.is_finite(),
                FactorKind::Probability => (0.0..=1.0).contains(&f.value),
                FactorKind::Divisor => f.value > 0.0 && f.value.is_finite(),
                FactorKind::Info => true,
            };
            if !ok {
                return Err(AnalysisError::Domain(format!("{} = {} is not a valid {:?}", f.name, f.value, f.kind)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateItem {
    pub name: String,
    pub value: f64,
    pub unit: String,
    /// Signed decade contribution to the rate; `None` for informational entries.
    pub log10_contribution: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rate_hz: f64,
    pub items: Vec<RateItem>,
    pub caveat: Option<String>,
    pub quoted_rate_hz: Option<f64>,
}

/// `Π rates × Π probabilities ÷ Π divisors`.
pub fn rate_budget(ledger: &RateLedger) -> Result<RateReport, AnalysisError> {
    ledger.validate()?;
    let mut rate = 1.0;
    let mut items = Vec::with_capacity(ledger.factors.len());
    for f in &ledger.factors {
        let contribution = match f.kind {
            FactorKind::Rate | FactorKind::Probability => {
                rate *= f.value;
                Some(f.value.log10())
            }
            FactorKind::Divisor => {
                rate /= f.value;
                Some(-f.value.log10())
            }
            FactorKind::Info => None,
        };
        items.push(RateItem {
            name: f.name.clone(),
            value: f.value,
            unit: f.unit.clone(),
            log10_contribution: contribution,
            note: f.note.clone(),
        });
    }
    Ok(RateReport { rate_hz: rate, items, caveat: ledger.caveat.clone(), quoted_rate_hz: ledger.quoted_rate_hz })
}

impl RateReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for it in &self.items {
            let c = it.log10_contribution.map(|c| format!("{c:+.3}")).unwrap_or_else(|| "info".into());
            let _ = writeln!(out, "{:<26} {:>12.4e} {:<3} {:>7}  {}", it.name, it.value, it.unit, c, it.note);
        }
        let _ = writeln!(
            out,
            "rate                       {:>12.4e} Hz  ({:.3} per minute)",
            self.rate_hz,
            self.rate_hz * 60.0
        );
        if let Some(q) = self.quoted_rate_hz {
            let _ = writeln!(out, "quoted                     {:>12.4e} Hz  ({:.3} per minute)", q, q * 60.0);
        }
        if let Some(c) = &self.caveat {
            let _ = writeln!(out, "caveat: {c}");
        }
        out
    }
}
