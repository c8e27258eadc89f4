//! Randomly perturbed integers `lambda(n) = n + r(n)` with planted blocks.

mod law;
mod probability;
mod profile;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use law::HalfWidthLaw;
pub use probability::{estimate_block_probability, BlockProbabilityReport, BlockProbabilityRequest};
pub use profile::ShiftProfile;

use crate::rng::{stream, symmetric_uniform, Domain};
use crate::trigpoly::Frequency;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("invalid half-width law {0}")]
    InvalidLaw(String),
    #[error("invalid shift profile {0}")]
    InvalidProfile(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no admissible l in [{l_min}, {l_max}] after examining {examined} candidates")]
    NoAdmissibleL { l_min: i64, l_max: i64, examined: u64 },
    #[error("block (k={k}, l={l}) overlaps an earlier witness or plant reaching {reach}")]
    WitnessOverlap { k: i64, l: i64, reach: i64 },
    #[error("shift {shift} at q={q} plus jitter {jitter} exceeds the half-width {half_width} at index {index}")]
    SupportIncompatible { q: i64, index: i64, shift: f64, jitter: f64, half_width: f64 },
    #[error("planted value {value} at index {index} is outside (-{half_width}, {half_width})")]
    PlantOutOfSupport { index: i64, value: f64, half_width: f64 },
}

/// Block `{s l + q : 0 < |s| < k, |q| < k}` whose offsets were placed within
/// `jitter` of `sigma(q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockWitness {
    pub k: i64,
    pub l: i64,
    pub tolerance: f64,
    pub profile_name: String,
    pub profile: ShiftProfile,
    pub jitter: f64,
    /// False for blocks found by scanning, whose offsets stay as sampled.
    #[serde(default = "planted_default")]
    pub planted: bool,
}

fn planted_default() -> bool {
    true
}

impl BlockWitness {
    pub fn reach(&self) -> i64 {
        block_reach(self.k, self.l)
    }

    /// `(s, q)` when `n` is an index of the block.
    pub fn locate(&self, n: i64) -> Option<(i64, i64)> {
        locate_in_block(n, self.k, self.l)
    }
}

/// `M(k) = k l + k`, which bounds every index of the block.
pub fn block_reach(k: i64, l: i64) -> i64 {
    k.saturating_mul(l).saturating_add(k)
}

/// Splits `n = s l + q` with `|q| < k`, `0 < |s| < k`; requires `l >= 2k`.
pub fn locate_in_block(n: i64, k: i64, l: i64) -> Option<(i64, i64)> {
    let s = (n + n.signum() * (l / 2)) / l;
    let q = n - s * l;
    if s != 0 && s.abs() < k && q.abs() < k {
        Some((s, q))
    } else {
        None
    }
}

/// Indices of the block in `(s, q)` order.
pub fn block_indices(k: i64, l: i64) -> impl Iterator<Item = (i64, i64, i64)> {
    (-(k - 1)..k)
        .filter(|&s| s != 0)
        .flat_map(move |s| (-(k - 1)..k).map(move |q| (s, q, s * l + q)))
}

/// A realisation of the random spectrum: offsets are drawn lazily from a
/// per-index stream, unless an explicit plant or a witness rule overrides them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedSpectrum {
    pub seed: u64,
    pub law: HalfWidthLaw,
    #[serde(with = "plant_list")]
    pub plants: BTreeMap<i64, f64>,
    pub witnesses: Vec<BlockWitness>,
}

mod plant_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Plant {
        n: i64,
        r: f64,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<i64, f64>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Plant> = map.iter().map(|(&n, &r)| Plant { n, r }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<i64, f64>, D::Error> {
        let v = Vec::<Plant>::deserialize(d)?;
        Ok(v.into_iter().map(|p| (p.n, p.r)).collect())
    }
}

/// Outcome of testing the block condition on a realisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub violations: Vec<(i64, i64)>,
    pub max_deviation: f64,
}

impl PerturbedSpectrum {
    pub fn new(seed: u64, law: HalfWidthLaw) -> Result<Self, SpectrumError> {
        law.validate()?;
        Ok(PerturbedSpectrum {
            seed,
            law,
            plants: BTreeMap::new(),
            witnesses: Vec::new(),
        })
    }

    /// Value the stream assigns to `n`, ignoring plants.
    pub fn sampled_offset(&self, n: i64) -> f64 {
        let mut rng = stream(self.seed, Domain::Spectrum, n as u64);
        symmetric_uniform(&mut rng, self.law.half_width(n))
    }

    fn witness_for(&self, n: i64) -> Option<(&BlockWitness, i64, i64)> {
        let m = n.abs();
        // Witness ranges are disjoint and increasing.
        let pos = self.witnesses.partition_point(|w| w.reach() < m);
        let w = self.witnesses.get(pos).filter(|w| w.planted)?;
        w.locate(n).map(|(s, q)| (w, s, q))
    }

    fn planted_by_witness(&self, w: &BlockWitness, n: i64, q: i64) -> f64 {
        let mut rng = stream(self.seed, Domain::Plant, n as u64);
        let u = if w.jitter > 0.0 {
            symmetric_uniform(&mut rng, w.jitter)
        } else {
            0.0
        };
        w.profile.shift(q) + u
    }

    /// `r(n)`.
    pub fn offset(&self, n: i64) -> f64 {
        if let Some(&r) = self.plants.get(&n) {
            return r;
        }
        if let Some((w, _, q)) = self.witness_for(n) {
            return self.planted_by_witness(w, n, q);
        }
        self.sampled_offset(n)
    }

    /// `lambda(n) = n + r(n)`.
    pub fn lambda(&self, n: i64) -> Frequency {
        Frequency::new(n, self.offset(n)).expect("offset lies in (-1/2, 1/2)")
    }

    /// Overrides a single offset.
    pub fn plant_value(&mut self, n: i64, r: f64) -> Result<(), SpectrumError> {
        let d = self.law.half_width(n);
        if !(r > -d && r < d) {
            return Err(SpectrumError::PlantOutOfSupport {
                index: n,
                value: r,
                half_width: d,
            });
        }
        self.plants.insert(n, r);
        Ok(())
    }

    /// Largest `M` among the witnesses, 0 if there are none.
    pub fn witness_reach(&self) -> i64 {
        self.witnesses.last().map_or(0, BlockWitness::reach)
    }

    pub fn check_condition(&self, k: i64, l: i64, profile: &ShiftProfile, tolerance: f64) -> ConditionCheck {
        let mut violations = Vec::new();
        let mut max_deviation = 0.0f64;
        for (s, q, n) in block_indices(k, l) {
            let dev = (self.offset(n) - profile.shift(q)).abs();
            max_deviation = max_deviation.max(dev);
            if !(dev < tolerance) {
                violations.push((s, q));
            }
        }
        ConditionCheck {
            holds: violations.is_empty(),
            violations,
            max_deviation,
        }
    }

    /// Early-exit form of [`PerturbedSpectrum::check_condition`].
    pub fn condition_holds(&self, k: i64, l: i64, profile: &ShiftProfile, tolerance: f64) -> bool {
        block_indices(k, l).all(|(_, q, n)| (self.offset(n) - profile.shift(q)).abs() < tolerance)
    }

    /// Smallest `l` in range whose block clears every earlier witness and
    /// satisfies the condition.
    pub fn scan_l(
        &self,
        k: i64,
        l_min: i64,
        l_max: i64,
        profile: &ShiftProfile,
        tolerance: f64,
    ) -> Result<i64, SpectrumError> {
        if k < 2 {
            return Err(SpectrumError::InvalidParameter(format!("k must be at least 2, got {k}")));
        }
        let start = l_min.max(2 * k).max(self.witness_reach() + k);
        let mut examined = 0u64;
        let mut l = start;
        while l <= l_max {
            examined += 1;
            if self.condition_holds(k, l, profile, tolerance) {
                return Ok(l);
            }
            l += 1;
        }
        Err(SpectrumError::NoAdmissibleL { l_min, l_max, examined })
    }

    /// Forces the block condition at `(k, l)` with offsets `sigma(q) + u`,
    /// `|u| < jitter`.
    pub fn plant_witness(
        &mut self,
        k: i64,
        l: i64,
        profile: &ShiftProfile,
        jitter: f64,
    ) -> Result<BlockWitness, SpectrumError> {
        profile.validate()?;
        if k < 2 || l < 2 * k {
            return Err(SpectrumError::InvalidParameter(format!(
                "need k >= 2 and l >= 2k, got k={k}, l={l}"
            )));
        }
        let tolerance = 1.0 / (k as f64 * k as f64);
        if !(jitter >= 0.0 && jitter <= tolerance) {
            return Err(SpectrumError::InvalidParameter(format!(
                "jitter {jitter} must lie in [0, 1/k^2 = {tolerance}]"
            )));
        }
        let reach = self.witness_reach();
        if l - k + 1 <= reach {
            return Err(SpectrumError::WitnessOverlap { k, l, reach });
        }
        let new_reach = block_reach(k, l);
        if let Some((&n, _)) = self.plants.range(l - k + 1..=new_reach).next() {
            return Err(SpectrumError::WitnessOverlap { k, l, reach: n });
        }
        if let Some((&n, _)) = self.plants.range(-new_reach..=-(l - k + 1)).next() {
            return Err(SpectrumError::WitnessOverlap { k, l, reach: n });
        }
        for (_, q, n) in block_indices(k, l) {
            let shift = profile.shift(q);
            let half_width = self.law.half_width(n);
            if shift + jitter > half_width || shift >= half_width {
                return Err(SpectrumError::SupportIncompatible { q, index: n, shift, jitter, half_width });
            }
        }
        let witness = BlockWitness {
            k,
            l,
            tolerance,
            profile_name: profile.name().to_string(),
            profile: profile.clone(),
            jitter,
            planted: true,
        };
        self.witnesses.push(witness.clone());
        Ok(witness)
    }

    /// Scans for a naturally occurring block with `l` in `[l_min, l_max]` and
    /// records it as a witness without touching any offset.
    pub fn adopt_scanned_witness(
        &mut self,
        k: i64,
        l_min: i64,
        l_max: i64,
        profile: &ShiftProfile,
    ) -> Result<BlockWitness, SpectrumError> {
        let tolerance = 1.0 / (k as f64 * k as f64);
        let l = self.scan_l(k, l_min, l_max, profile, tolerance)?;
        let check = self.check_condition(k, l, profile, tolerance);
        let witness = BlockWitness {
            k,
            l,
            tolerance,
            profile_name: profile.name().to_string(),
            profile: profile.clone(),
            jitter: check.max_deviation,
            planted: false,
        };
        self.witnesses.push(witness.clone());
        Ok(witness)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum serialises")
    }
}
