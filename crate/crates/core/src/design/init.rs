//! Random initial structures following the quarter-wave / half-wave recipe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::materials::{index_unchecked, DispersionModel};
use crate::stack::{EpitaxialStack, Role};

/// Ranges of the initial sampler, as fractions of the base thickness or in nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitRanges {
    pub bragg_spread: f64,
    pub core_spread: f64,
    pub buffer_nm: (f64, f64),
}

impl Default for InitRanges {
    fn default() -> Self {
        InitRanges { bragg_spread: 0.25, core_spread: 0.25, buffer_nm: (50.0, 200.0) }
    }
}

/// Quarter-wave thickness at the pump for Bragg sublayers, half-wave for core sublayers.
pub fn base_thickness(role: Role, al_fraction: f64, lambda_p_nm: f64, model: DispersionModel) -> Option<f64> {
    let n = index_unchecked(al_fraction, lambda_p_nm, model);
    match role {
        Role::BraggBottom | Role::BraggTop => Some(lambda_p_nm / (4.0 * n)),
        Role::Core => Some(lambda_p_nm / (2.0 * n)),
        _ => None,
    }
}

/// Resamples every finite thickness of `template`, keeping its roles, repeats and Al pattern.
pub fn sample_initial_stack(
    seed: u64,
    lambda_p_nm: f64,
    template: &EpitaxialStack,
    ranges: &InitRanges,
    model: DispersionModel,
) -> EpitaxialStack {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = template.clone();
    for g in &mut out.groups {
        for s in &mut g.sublayers {
            let x = s.al_fraction.al_fraction();
            let t = match g.role {
                Role::BraggBottom | Role::BraggTop => {
                    let f = rng.gen_range(1.0 - ranges.bragg_spread..=1.0 + ranges.bragg_spread);
                    f * base_thickness(g.role, x, lambda_p_nm, model).unwrap()
                }
                Role::Core => {
                    let f = rng.gen_range(1.0 - ranges.core_spread..=1.0 + ranges.core_spread);
                    f * base_thickness(g.role, x, lambda_p_nm, model).unwrap()
                }
                Role::Buffer => rng.gen_range(ranges.buffer_nm.0..=ranges.buffer_nm.1),
                Role::Substrate | Role::Air => continue,
            };
            s.thickness_nm = Some(t);
        }
    }
    out
}

/// Mean Al fraction over the finite layers of one role, weighted by repeats.
pub fn mean_al(stack: &EpitaxialStack, roles: &[Role]) -> Option<f64> {
    let vals: Vec<f64> =
        stack.flatten().into_iter().filter(|l| roles.contains(&l.role)).map(|l| l.al_fraction).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}
