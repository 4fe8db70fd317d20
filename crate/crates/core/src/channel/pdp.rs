//! Delay-spread classes from sampled power delay profiles.

use std::fmt;
use std::str::FromStr;

use crate::dsp::C64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DelayClass {
    Lds,
    Mds,
    Hds,
}

impl DelayClass {
    pub const ALL: [DelayClass; 3] = [DelayClass::Lds, DelayClass::Mds, DelayClass::Hds];

    pub fn as_str(self) -> &'static str {
        match self {
            DelayClass::Lds => "LDS",
            DelayClass::Mds => "MDS",
            DelayClass::Hds => "HDS",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for DelayClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DelayClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lds" => Ok(DelayClass::Lds),
            "mds" => Ok(DelayClass::Mds),
            "hds" => Ok(DelayClass::Hds),
            other => Err(Error::Config(format!("unknown delay class `{other}`"))),
        }
    }
}

/// PDP template: a LOS reference magnitude followed by tail-tap thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct PdpTemplate {
    pub los_reference: f64,
    /// Thresholds for taps `1..=tail.len()`.
    pub tail: Vec<f64>,
}

impl PdpTemplate {
    /// Splits a template vector of the form `[los, tail_1, tail_2, ...]`.
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        let (&los_reference, tail) = v.split_first().ok_or(Error::Empty("template vector"))?;
        let t = Self {
            los_reference,
            tail: tail.to_vec(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tail.is_empty() {
            return Err(Error::Empty("template tail"));
        }
        if !(self.los_reference > 0.0) {
            return Err(Error::Domain {
                name: "template LOS reference",
                value: self.los_reference,
                expected: "(0, inf)",
            });
        }
        for (i, &t) in self.tail.iter().enumerate() {
            if !(t > 0.0) {
                return Err(Error::Domain {
                    name: "template tail threshold",
                    value: t,
                    expected: "(0, inf)",
                });
            }
            if i > 0 && t > self.tail[i - 1] {
                return Err(Error::Config("template tail thresholds must be non-increasing".into()));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            los_reference: self.los_reference * c,
            tail: self.tail.iter().map(|t| t * c).collect(),
        }
    }

    /// Low-delay-spread template for the default indoor scenario.
    pub fn default_lds() -> Self {
        Self::from_vector(&[6.4e-4, 0.21930e-4, 0.09676e-4, 0.06175e-4, 0.04517e-4]).unwrap()
    }

    /// High-delay-spread template for the default indoor scenario.
    pub fn default_hds() -> Self {
        Self::from_vector(&[5.5e-4, 0.30126e-4, 0.13441e-4, 0.08609e-4, 0.06310e-4]).unwrap()
    }
}

/// How tail thresholds relate to a measured profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemplateScaling {
    /// Compare tail magnitudes directly with the thresholds.
    Absolute,
    /// Compare `|h(i)| / |h(0)|` with `tail(i) / los_reference`.
    #[default]
    LosRelative,
}

impl fmt::Display for TemplateScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateScaling::Absolute => "absolute",
            TemplateScaling::LosRelative => "los_relative",
        })
    }
}

impl FromStr for TemplateScaling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(TemplateScaling::Absolute),
            "los_relative" => Ok(TemplateScaling::LosRelative),
            other => Err(Error::Config(format!("unknown template scaling `{other}`"))),
        }
    }
}

/// Tap magnitudes of an estimated or true impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct CirProfile {
    pub los: f64,
    pub tail: Vec<f64>,
}

impl CirProfile {
    /// Profile from taps `0..=n_tail`.
    pub fn from_taps(taps: &[C64], n_tail: usize) -> Result<Self> {
        if taps.len() < n_tail + 1 {
            return Err(Error::Length {
                what: "impulse taps",
                expected: n_tail + 1,
                actual: taps.len(),
            });
        }
        Ok(Self {
            los: taps[0].norm(),
            tail: taps[1..=n_tail].iter().map(|t| t.norm()).collect(),
        })
    }
}

/// The LDS/HDS template pair and the three-way decision rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTemplates {
    lds: PdpTemplate,
    hds: PdpTemplate,
    scaling: TemplateScaling,
}

impl ClassTemplates {
    /// Accepts the pair only if every HDS tail threshold exceeds the LDS one.
    pub fn new(lds: PdpTemplate, hds: PdpTemplate, scaling: TemplateScaling) -> Result<Self> {
        lds.validate()?;
        hds.validate()?;
        if lds.tail.len() != hds.tail.len() {
            return Err(Error::Shape(format!(
                "LDS template has {} tail taps, HDS has {}",
                lds.tail.len(),
                hds.tail.len()
            )));
        }
        let t = Self { lds, hds, scaling };
        for i in 0..t.n_tail() {
            let (l, h) = (t.lds_threshold(i, 1.0), t.hds_threshold(i, 1.0));
            if !(h > l) {
                return Err(Error::Config(format!(
                    "HDS threshold {h:e} must exceed LDS threshold {l:e} at tail tap {}",
                    i + 1
                )));
            }
        }
        Ok(t)
    }

    pub fn lds(&self) -> &PdpTemplate {
        &self.lds
    }

    pub fn hds(&self) -> &PdpTemplate {
        &self.hds
    }

    pub fn scaling(&self) -> TemplateScaling {
        self.scaling
    }

    pub fn n_tail(&self) -> usize {
        self.lds.tail.len()
    }

    fn threshold(&self, t: &PdpTemplate, i: usize, los: f64) -> f64 {
        match self.scaling {
            TemplateScaling::Absolute => t.tail[i],
            TemplateScaling::LosRelative => t.tail[i] / t.los_reference * los,
        }
    }

    fn lds_threshold(&self, i: usize, los: f64) -> f64 {
        self.threshold(&self.lds, i, los)
    }

    fn hds_threshold(&self, i: usize, los: f64) -> f64 {
        self.threshold(&self.hds, i, los)
    }

    /// LDS if every tail tap is strictly below the LDS template, else MDS if
    /// every tail tap is strictly below the HDS template, else HDS.
    pub fn classify(&self, profile: &CirProfile) -> Result<DelayClass> {
        let n = self.n_tail();
        if profile.tail.len() < n {
            return Err(Error::Length {
                what: "profile tail",
                expected: n,
                actual: profile.tail.len(),
            });
        }
        let below = |f: &dyn Fn(usize) -> f64| (0..n).all(|i| profile.tail[i] < f(i));
        if below(&|i| self.lds_threshold(i, profile.los)) {
            Ok(DelayClass::Lds)
        } else if below(&|i| self.hds_threshold(i, profile.los)) {
            Ok(DelayClass::Mds)
        } else {
            Ok(DelayClass::Hds)
        }
    }
}

/// Delay class of a sampled impulse response.
pub fn label_class(taps: &[C64], templates: &ClassTemplates) -> Result<DelayClass> {
    templates.classify(&CirProfile::from_taps(taps, templates.n_tail())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn absolute() -> ClassTemplates {
        ClassTemplates::new(
            PdpTemplate::default_lds(),
            PdpTemplate::default_hds(),
            TemplateScaling::Absolute,
        )
        .unwrap()
    }

    fn taps_from(los: f64, tail: &[f64]) -> Vec<C64> {
        std::iter::once(los)
            .chain(tail.iter().copied())
            .map(|v| C64::new(v, 0.0))
            .collect()
    }

    #[test]
    fn printed_templates_split_into_reference_and_tail() {
        let lds = PdpTemplate::default_lds();
        assert_eq!(lds.los_reference, 6.4e-4);
        assert_eq!(lds.tail.len(), 4);
        // the printed leading entries violate hds > lds, which is why they are not thresholds
        assert!(PdpTemplate::default_hds().los_reference < lds.los_reference);
    }

    #[test]
    fn zero_tail_is_lds() {
        let t = absolute();
        assert_eq!(label_class(&taps_from(6e-4, &[0.0; 4]), &t).unwrap(), DelayClass::Lds);
    }

    #[test]
    fn tail_equal_to_hds_falls_through_to_hds() {
        let t = absolute();
        let hds = PdpTemplate::default_hds();
        assert_eq!(label_class(&taps_from(6e-4, &hds.tail), &t).unwrap(), DelayClass::Hds);
        let rel = ClassTemplates::new(PdpTemplate::default_lds(), hds.clone(), TemplateScaling::LosRelative).unwrap();
        assert_eq!(
            label_class(&taps_from(hds.los_reference, &hds.tail), &rel).unwrap(),
            DelayClass::Hds
        );
    }

    #[test]
    fn midpoint_is_mds() {
        let t = absolute();
        let (l, h) = (PdpTemplate::default_lds(), PdpTemplate::default_hds());
        let mid: Vec<f64> = l.tail.iter().zip(&h.tail).map(|(a, b)| 0.5 * (a + b)).collect();
        assert_eq!(label_class(&taps_from(6e-4, &mid), &t).unwrap(), DelayClass::Mds);

        let rel = ClassTemplates::new(l.clone(), h.clone(), TemplateScaling::LosRelative).unwrap();
        let los = 2e-6;
        let mid_rel: Vec<f64> = l
            .tail
            .iter()
            .zip(&h.tail)
            .map(|(a, b)| 0.5 * (a / l.los_reference + b / h.los_reference) * los)
            .collect();
        assert_eq!(label_class(&taps_from(los, &mid_rel), &rel).unwrap(), DelayClass::Mds);
    }

    #[test]
    fn one_tap_above_lds_is_enough_to_leave_lds() {
        let t = absolute();
        let mut tail = vec![0.0; 4];
        tail[3] = PdpTemplate::default_lds().tail[3];
        assert_eq!(label_class(&taps_from(6e-4, &tail), &t).unwrap(), DelayClass::Mds);
    }

    #[test]
    fn precondition_checked() {
        let l = PdpTemplate::default_lds();
        assert!(ClassTemplates::new(l.clone(), l.clone(), TemplateScaling::Absolute).is_err());
        assert!(ClassTemplates::new(PdpTemplate::default_hds(), l, TemplateScaling::LosRelative).is_err());
        assert!(PdpTemplate::from_vector(&[1.0, 0.1, 0.2]).is_err());
        assert!(PdpTemplate::from_vector(&[1.0]).is_err());
    }

    #[test]
    fn short_taps_rejected() {
        assert!(label_class(&taps_from(1.0, &[0.0; 3]), &absolute()).is_err());
    }

    proptest! {
        // power-of-two factors keep every product exact, so ties cannot flip
        #[test]
        fn scale_consistent(tail in proptest::collection::vec(0.0f64..4e-5, 4), los in 1e-6f64..1e-3, e in -20i32..20) {
            let c = 2f64.powi(e);
            let (l, h) = (PdpTemplate::default_lds(), PdpTemplate::default_hds());
            for scaling in [TemplateScaling::Absolute, TemplateScaling::LosRelative] {
                let base = ClassTemplates::new(l.clone(), h.clone(), scaling).unwrap();
                let scaled = ClassTemplates::new(l.scaled(c), h.scaled(c), scaling).unwrap();
                let taps = taps_from(los, &tail);
                let taps_c: Vec<C64> = taps.iter().map(|t| t * c).collect();
                prop_assert_eq!(label_class(&taps, &base).unwrap(), label_class(&taps_c, &scaled).unwrap());
            }
        }
    }
}
