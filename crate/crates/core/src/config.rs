//! Flat `key = value` TOML configuration covering the scenario, modem,
//! class templates, training and experiment settings. Every key is optional.

use std::path::Path;

use serde::Deserialize;

use crate::channel::{ClassTemplates, PdpTemplate, ScenarioConfig, TemplateScaling, Vec3};
use crate::error::{Error, Result};
use crate::nn::TrainConfig;
use crate::ofdm::{ModemConfig, PilotPattern};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    room_x: Option<f64>,
    room_y: Option<f64>,
    room_z: Option<f64>,
    tx_x: Option<f64>,
    tx_y: Option<f64>,
    tx_z: Option<f64>,
    rx_height_min: Option<f64>,
    rx_height_max: Option<f64>,
    alpha: Option<f64>,
    tx_semiangle_deg: Option<f64>,
    rx_fov_deg: Option<f64>,
    rx_elevation_min_deg: Option<f64>,
    rx_elevation_max_deg: Option<f64>,
    rx_rotation_min_deg: Option<f64>,
    rx_rotation_max_deg: Option<f64>,
    detector_area_m2: Option<f64>,
    sample_rate_hz: Option<f64>,
    n_paths: Option<usize>,

    n_f: Option<usize>,
    n_s: Option<usize>,
    l_cp: Option<usize>,
    pilot_spacing: Option<usize>,
    pilot_symbols: Option<Vec<usize>>,
    bias_sigma: Option<f64>,

    lds_template: Option<Vec<f64>>,
    hds_template: Option<Vec<f64>>,
    template_scaling: Option<String>,

    lr0: Option<f64>,
    lr_decay: Option<f64>,
    lr_decay_every: Option<usize>,
    epochs: Option<usize>,
    batch: Option<usize>,
    l2: Option<f64>,

    snr_min_db: Option<f64>,
    snr_max_db: Option<f64>,
    snr_step_db: Option<f64>,
    trials: Option<usize>,
    time_duration_s: Option<usize>,
    time_dwell_s: Option<usize>,
    time_realizations: Option<usize>,
    time_snr_db: Option<f64>,
    train_snr_min_db: Option<f64>,
    train_snr_max_db: Option<f64>,
}

/// Experiment settings that may come from the configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub snr_step_db: f64,
    pub trials: usize,
    pub duration_s: usize,
    pub dwell_s: usize,
    pub realizations_per_point: usize,
    pub time_snr_db: f64,
    /// SNR range drawn per training sample.
    pub train_snr_db: (f64, f64),
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            snr_min_db: 15.0,
            snr_max_db: 30.0,
            snr_step_db: 1.0,
            trials: 2_000,
            duration_s: 90,
            dwell_s: 10,
            realizations_per_point: 100,
            time_snr_db: 20.0,
            train_snr_db: (15.0, 30.0),
        }
    }
}

impl ExperimentSettings {
    /// `min, min + step, ...` up to `max` inclusive (with a small tolerance).
    pub fn snr_grid(&self) -> Result<Vec<f64>> {
        snr_grid(self.snr_min_db, self.snr_max_db, self.snr_step_db)
    }
}

pub fn snr_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min <= max) {
        return Err(Error::Config(format!("bad SNR range {min}..{max}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain {
            name: "snr step",
            value: step,
            expected: "(0, inf)",
        });
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| min + i as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub scenario: ScenarioConfig,
    pub modem: ModemConfig,
    pub lds_template: PdpTemplate,
    pub hds_template: PdpTemplate,
    pub template_scaling: TemplateScaling,
    pub train: TrainConfig,
    pub experiment: ExperimentSettings,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            modem: ModemConfig::default(),
            lds_template: PdpTemplate::default_lds(),
            hds_template: PdpTemplate::default_hds(),
            template_scaling: TemplateScaling::default(),
            train: TrainConfig::default(),
            experiment: ExperimentSettings::default(),
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: Raw = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut c = Self::default();
        let s = &mut c.scenario;
        set(&mut s.room[0], raw.room_x);
        set(&mut s.room[1], raw.room_y);
        set(&mut s.room[2], raw.room_z);
        s.tx_position = Vec3::new(
            raw.tx_x.unwrap_or(s.room[0] / 2.0),
            raw.tx_y.unwrap_or(s.room[1] / 2.0),
            raw.tx_z.unwrap_or(s.room[2]),
        );
        set(&mut s.rx_height.0, raw.rx_height_min);
        set(&mut s.rx_height.1, raw.rx_height_max);
        set(&mut s.reflection_coeff, raw.alpha);
        set(&mut s.tx_semiangle_deg, raw.tx_semiangle_deg);
        set(&mut s.rx_fov_deg, raw.rx_fov_deg);
        set(&mut s.rx_elevation_deg.0, raw.rx_elevation_min_deg);
        set(&mut s.rx_elevation_deg.1, raw.rx_elevation_max_deg);
        set(&mut s.rx_rotation_deg.0, raw.rx_rotation_min_deg);
        set(&mut s.rx_rotation_deg.1, raw.rx_rotation_max_deg);
        set(&mut s.detector_area, raw.detector_area_m2);
        set(&mut s.sample_rate, raw.sample_rate_hz);
        set(&mut s.n_paths, raw.n_paths);

        let m = &mut c.modem;
        set(&mut m.n_f, raw.n_f);
        set(&mut m.n_s, raw.n_s);
        set(&mut m.l_cp, raw.l_cp);
        set(&mut m.l_s, raw.pilot_spacing);
        set(&mut m.pilot_symbols, raw.pilot_symbols);
        set(&mut m.bias_sigma, raw.bias_sigma);

        if let Some(v) = raw.lds_template {
            c.lds_template = PdpTemplate::from_vector(&v)?;
        }
        if let Some(v) = raw.hds_template {
            c.hds_template = PdpTemplate::from_vector(&v)?;
        }
        if let Some(v) = raw.template_scaling {
            c.template_scaling = v.parse()?;
        }

        let t = &mut c.train;
        set(&mut t.lr0, raw.lr0);
        set(&mut t.lr_decay, raw.lr_decay);
        set(&mut t.decay_every, raw.lr_decay_every);
        set(&mut t.epochs, raw.epochs);
        set(&mut t.batch, raw.batch);
        set(&mut t.l2, raw.l2);

        let e = &mut c.experiment;
        set(&mut e.snr_min_db, raw.snr_min_db);
        set(&mut e.snr_max_db, raw.snr_max_db);
        set(&mut e.snr_step_db, raw.snr_step_db);
        set(&mut e.trials, raw.trials);
        set(&mut e.duration_s, raw.time_duration_s);
        set(&mut e.dwell_s, raw.time_dwell_s);
        set(&mut e.realizations_per_point, raw.time_realizations);
        set(&mut e.time_snr_db, raw.time_snr_db);
        set(&mut e.train_snr_db.0, raw.train_snr_min_db);
        set(&mut e.train_snr_db.1, raw.train_snr_max_db);

        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.modem.validate()?;
        self.train.validate()?;
        let t = self.templates()?;
        if t.n_tail() > self.modem.l_cp {
            return Err(Error::Config(format!(
                "templates compare {} tail taps but the cyclic prefix has {}",
                t.n_tail(),
                self.modem.l_cp
            )));
        }
        let e = &self.experiment;
        e.snr_grid()?;
        if e.trials == 0 || e.realizations_per_point == 0 || e.dwell_s == 0 || e.duration_s == 0 {
            return Err(Error::Config("trial counts and durations must be at least 1".into()));
        }
        let (lo, hi) = e.train_snr_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad training SNR range {lo}..{hi}")));
        }
        Ok(())
    }

    pub fn templates(&self) -> Result<ClassTemplates> {
        ClassTemplates::new(
            self.lds_template.clone(),
            self.hds_template.clone(),
            self.template_scaling,
        )
    }

    pub fn pattern(&self) -> Result<PilotPattern> {
        PilotPattern::from_config(&self.modem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(SystemConfig::from_toml_str("").unwrap(), SystemConfig::default());
    }

    #[test]
    fn keys_override_and_unknown_keys_fail() {
        let c = SystemConfig::from_toml_str(
            "room_x = 6.0\nalpha = 0.35\nn_f = 128\npilot_symbols = [2, 5]\ntemplate_scaling = \"absolute\"\nepochs = 3\ntrials = 7\n",
        )
        .unwrap();
        assert_eq!(c.scenario.room[0], 6.0);
        assert_eq!(c.scenario.tx_position.x, 3.0);
        assert_eq!(c.scenario.reflection_coeff, 0.35);
        assert_eq!(c.modem.n_f, 128);
        assert_eq!(c.modem.pilot_symbols, vec![2, 5]);
        assert_eq!(c.template_scaling, TemplateScaling::Absolute);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.experiment.trials, 7);
        assert!(SystemConfig::from_toml_str("room_w = 1.0").is_err());
        assert!(SystemConfig::from_toml_str("alpha = 1.5").is_err());
        assert!(SystemConfig::from_toml_str("hds_template = [5.5e-4, 1e-6, 1e-6, 1e-6, 1e-6]").is_err());
    }

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(snr_grid(15.0, 30.0, 1.0).unwrap().len(), 16);
        assert_eq!(snr_grid(20.0, 30.0, 10.0).unwrap(), vec![20.0, 30.0]);
        assert!(snr_grid(1.0, 0.0, 1.0).is_err());
        assert!(snr_grid(0.0, 1.0, 0.0).is_err());
    }
}
