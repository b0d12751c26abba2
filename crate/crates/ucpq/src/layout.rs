//! Bijective mapping between schedule variables and qubit indices.
//!
//! The order is fixed: all commitment (`on`) variables first in t-major,
//! unit-minor order, then all `start` variables in the same order, then the
//! discrete generation bits grouped by `(t, unit, bit)`. The generic
//! compiler appends its slack bits after those blocks.

use serde::Serialize;

use crate::instance::{UcpInstance, UnitSpec};

/// What a single qubit index stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    On { t: usize, unit: usize },
    Start { t: usize, unit: usize },
    Gen { t: usize, unit: usize, bit: usize },
    Slack { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableLayout {
    pub time_steps: usize,
    pub num_units: usize,
    /// Generation bits per unit (`0` for all-or-nothing units).
    pub gen_widths: Vec<usize>,
    /// Extra variables appended after the base blocks (generic slacks).
    pub slack_bits: usize,
    #[serde(skip)]
    gen_prefix: Vec<usize>,
    #[serde(skip)]
    gen_per_step: usize,
}

impl VariableLayout {
    /// Layout for an instance, without slack variables.
    pub fn for_instance(inst: &UcpInstance) -> Self {
        let gen_widths: Vec<usize> = inst.units.iter().map(gen_width).collect();
        Self::with_widths(inst.time_steps, inst.num_units(), gen_widths, 0)
    }

    pub(crate) fn with_widths(
        time_steps: usize,
        num_units: usize,
        gen_widths: Vec<usize>,
        slack_bits: usize,
    ) -> Self {
        let mut gen_prefix = Vec::with_capacity(gen_widths.len());
        let mut acc = 0;
        for &w in &gen_widths {
            gen_prefix.push(acc);
            acc += w;
        }
        VariableLayout {
            time_steps,
            num_units,
            gen_widths,
            slack_bits,
            gen_prefix,
            gen_per_step: acc,
        }
    }

    /// Variables in the on/start/gen blocks.
    pub fn base_total(&self) -> usize {
        self.time_steps * (2 * self.num_units + self.gen_per_step)
    }

    /// All variables including appended slack bits.
    pub fn total(&self) -> usize {
        self.base_total() + self.slack_bits
    }

    pub fn on(&self, t: usize, unit: usize) -> usize {
        debug_assert!(t < self.time_steps && unit < self.num_units);
        t * self.num_units + unit
    }

    pub fn start(&self, t: usize, unit: usize) -> usize {
        debug_assert!(t < self.time_steps && unit < self.num_units);
        self.time_steps * self.num_units + t * self.num_units + unit
    }

    pub fn gen(&self, t: usize, unit: usize, bit: usize) -> usize {
        debug_assert!(bit < self.gen_widths[unit]);
        2 * self.time_steps * self.num_units
            + t * self.gen_per_step
            + self.gen_prefix[unit]
            + bit
    }

    pub fn slack(&self, index: usize) -> usize {
        debug_assert!(index < self.slack_bits);
        self.base_total() + index
    }

    /// Inverse of the index maps.
    pub fn role_of(&self, q: usize) -> VarRole {
        let block = self.time_steps * self.num_units;
        if q < block {
            VarRole::On {
                t: q / self.num_units,
                unit: q % self.num_units,
            }
        } else if q < 2 * block {
            let r = q - block;
            VarRole::Start {
                t: r / self.num_units,
                unit: r % self.num_units,
            }
        } else if q < self.base_total() {
            let r = q - 2 * block;
            let t = r / self.gen_per_step;
            let within = r % self.gen_per_step;
            let unit = match self.gen_prefix.binary_search(&within) {
                Ok(u) => {
                    // Zero-width units share prefix values; take the last
                    // unit whose block starts here and is non-empty.
                    let mut u = u;
                    while u + 1 < self.gen_prefix.len() && self.gen_prefix[u + 1] == within {
                        u += 1;
                    }
                    u
                }
                Err(next) => next - 1,
            };
            VarRole::Gen {
                t,
                unit,
                bit: within - self.gen_prefix[unit],
            }
        } else {
            VarRole::Slack {
                index: q - self.base_total(),
            }
        }
    }
}

/// Bit count of the discrete generation encoding for one unit:
/// `floor(log2(M)) + 1` bits for `M` steps, zero without a step size.
pub fn gen_width(unit: &UnitSpec) -> usize {
    let steps = unit.step_count();
    if steps == 0 {
        0
    } else {
        (steps.ilog2() + 1) as usize
    }
}

/// Weights of the bounded logarithmic encoding over `0..=steps`:
/// `1, 2, 4, ..., 2^(d-2)` and a final weight of `steps - (2^(d-1) - 1)`,
/// so every value in range is representable and none above it.
pub fn gen_bit_weights(steps: usize, width: usize) -> Vec<f64> {
    debug_assert!(width >= 1);
    let mut weights: Vec<f64> = (0..width - 1).map(|k| (1usize << k) as f64).collect();
    weights.push((steps - ((1usize << (width - 1)) - 1)) as f64);
    weights
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::two_unit_example;

    #[test]
    fn example_layout_indices() {
        let layout = VariableLayout::for_instance(&two_unit_example());
        assert_eq!(layout.total(), 20);
        assert_eq!(layout.on(0, 1), 1);
        assert_eq!(layout.start(0, 1), 11);
        assert_eq!(layout.on(4, 0), 8);
        assert_eq!(layout.start(4, 1), 19);
    }

    #[test]
    fn gen_width_formula() {
        let mut u = two_unit_example().units[0].clone();
        u.min_gen = 1.0;
        u.max_gen = 5.0;
        u.step_size = Some(1.0);
        assert_eq!(gen_width(&u), 3); // 4 steps -> 3 bits

        u.step_size = Some(4.0);
        assert_eq!(gen_width(&u), 1); // max - min == step -> 1 bit

        u.step_size = None;
        assert_eq!(gen_width(&u), 0);
    }

    #[test]
    fn bit_weights_cover_exact_range() {
        for steps in 1usize..=20 {
            let width = (steps.ilog2() + 1) as usize;
            let weights = gen_bit_weights(steps, width);
            let mut reachable = vec![false; steps + 1];
            for mask in 0u32..(1 << width) {
                let sum: f64 = (0..width)
                    .filter(|&k| mask & (1 << k) != 0)
                    .map(|k| weights[k])
                    .sum();
                let sum = sum as usize;
                assert!(sum <= steps, "steps={steps} mask={mask} overshoots");
                reachable[sum] = true;
            }
            assert!(reachable.iter().all(|&r| r), "steps={steps} has gaps");
        }
    }

    #[test]
    fn role_round_trip() {
        let mut inst = two_unit_example();
        inst.units[0].min_gen = 1.0;
        inst.units[0].max_gen = 4.0;
        inst.units[0].step_size = Some(1.0); // 3 steps -> 2 bits
        let layout = VariableLayout::with_widths(
            inst.time_steps,
            inst.num_units(),
            inst.units.iter().map(gen_width).collect(),
            3,
        );
        for q in 0..layout.total() {
            let role = layout.role_of(q);
            let back = match role {
                VarRole::On { t, unit } => layout.on(t, unit),
                VarRole::Start { t, unit } => layout.start(t, unit),
                VarRole::Gen { t, unit, bit } => layout.gen(t, unit, bit),
                VarRole::Slack { index } => layout.slack(index),
            };
            assert_eq!(back, q, "role {role:?} did not invert");
        }
    }
}
