//! Unit systems, physical constants and validated parameter bundles.
//!
//! The scalar detector model works in natural units with ħ = 1. The harmonic
//! hydrogen model works in SI. Which one a bundle uses is always explicit,
//! both in the types and in the `unit_system` key of the text configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// CODATA 2018 values, SI.
pub mod si {
    /// Planck constant h (J s), exact.
    pub const PLANCK_H: f64 = 6.626_070_15e-34;
    /// Reduced Planck constant ħ = h / 2π (J s).
    pub const HBAR: f64 = PLANCK_H / (2.0 * std::f64::consts::PI);
    /// Vacuum permittivity ε₀ (F/m).
    pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
    /// Speed of light (m/s), exact.
    pub const LIGHT_C: f64 = 299_792_458.0;
    /// Electron mass (kg).
    pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
    /// Proton mass (kg).
    pub const PROTON_MASS: f64 = 1.672_621_923_69e-27;
    /// Elementary charge (C), exact. Used only for eV conversions.
    pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;
    /// Rounded charge magnitude used for both constituents of the hydrogen model (C).
    pub const HYDROGEN_CHARGE: f64 = 1.6e-19;
}

/// Default harmonic gap ħΩ in eV: the Coulomb 1s → 2p spacing of hydrogen.
pub const DEFAULT_HYDROGEN_GAP_EV: f64 = 10.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    /// ħ = 1; only ratios of E, M, c and λ matter.
    Natural,
    Si,
}

impl fmt::Display for UnitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnitSystem::Natural => "natural",
            UnitSystem::Si => "si",
        })
    }
}

impl FromStr for UnitSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "natural" => Ok(UnitSystem::Natural),
            "si" => Ok(UnitSystem::Si),
            other => Err(Error::Config(format!("unknown unit_system `{other}`"))),
        }
    }
}

/// Parameters of the scalar Unruh-deWitt model in natural units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Energy gap E between ground and excited state.
    pub gap: f64,
    /// Detector mass M.
    pub mass: f64,
    /// Propagation speed c of the field (vacuum or medium).
    pub wave_speed: f64,
    /// Coupling strength λ.
    pub coupling: f64,
}

impl DetectorParams {
    /// Validated constructor. `E = 0` is allowed (structureless charge).
    pub fn new(gap: f64, mass: f64, wave_speed: f64, coupling: f64) -> Result<Self> {
        check_finite("gap_E", gap)?;
        check_finite("mass_M", mass)?;
        check_finite("wave_speed_c", wave_speed)?;
        check_finite("coupling_lambda", coupling)?;
        if gap < 0.0 {
            return Err(Error::domain("gap_E", format!("must be >= 0, got {gap}")));
        }
        if mass <= 0.0 {
            return Err(Error::domain("mass_M", format!("must be > 0, got {mass}")));
        }
        if wave_speed <= 0.0 {
            return Err(Error::domain("wave_speed_c", format!("must be > 0, got {wave_speed}")));
        }
        Ok(Self {
            gap,
            mass,
            wave_speed,
            coupling,
        })
    }

    /// Rest-energy ratio E / (M c²).
    pub fn gap_ratio(&self) -> f64 {
        self.gap / (self.mass * self.wave_speed * self.wave_speed)
    }

    /// M c, the momentum scale of the templates.
    pub fn mass_momentum(&self) -> f64 {
        self.mass * self.wave_speed
    }

    pub fn with_gap(self, gap: f64) -> Result<Self> {
        Self::new(gap, self.mass, self.wave_speed, self.coupling)
    }

    pub fn with_mass(self, mass: f64) -> Result<Self> {
        Self::new(self.gap, mass, self.wave_speed, self.coupling)
    }

    pub fn with_wave_speed(self, c: f64) -> Result<Self> {
        Self::new(self.gap, self.mass, c, self.coupling)
    }

    pub fn to_config(&self) -> KeyValueConfig {
        let mut cfg = KeyValueConfig::default();
        cfg.set("unit_system", UnitSystem::Natural.to_string());
        cfg.set_f64("gap_E", self.gap);
        cfg.set_f64("mass_M", self.mass);
        cfg.set_f64("wave_speed_c", self.wave_speed);
        cfg.set_f64("coupling_lambda", self.coupling);
        cfg
    }

    /// Reads the four natural-unit keys. A missing `unit_system` means natural;
    /// anything else, or an SI-suffixed variant of a key, is rejected.
    pub fn from_config(cfg: &KeyValueConfig) -> Result<Self> {
        if cfg.unit_system()?.unwrap_or(UnitSystem::Natural) != UnitSystem::Natural {
            return Err(Error::Config(
                "detector parameters require unit_system = natural".into(),
            ));
        }
        for key in ["gap_E", "mass_M", "wave_speed_c", "coupling_lambda"] {
            cfg.reject_suffixed(key)?;
        }
        Self::new(
            cfg.require_f64("gap_E")?,
            cfg.require_f64("mass_M")?,
            cfg.require_f64("wave_speed_c")?,
            cfg.require_f64("coupling_lambda")?,
        )
    }
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            gap: 1.0,
            mass: 1.0e6,
            wave_speed: 1.0,
            coupling: 0.01,
        }
    }
}

/// SI constants used by the hydrogen model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiConstants {
    pub hbar: f64,
    pub planck_h: f64,
    pub epsilon0: f64,
    pub light_c: f64,
    pub m_e: f64,
    pub m_p: f64,
    pub q_e: f64,
    pub q_p: f64,
}

impl Default for SiConstants {
    fn default() -> Self {
        Self {
            hbar: si::HBAR,
            planck_h: si::PLANCK_H,
            epsilon0: si::EPSILON_0,
            light_c: si::LIGHT_C,
            m_e: si::ELECTRON_MASS,
            m_p: si::PROTON_MASS,
            q_e: si::HYDROGEN_CHARGE,
            q_p: si::HYDROGEN_CHARGE,
        }
    }
}

/// The mass used as `M` inside the hydrogen template and its prefactor.
///
/// `Total` is `m_e + m_p`. The reference hydrogen constants (p₀, D, L₀) are
/// only reproduced when the photon-recoil kinematics use the electron mass,
/// so the other two choices exist for calibration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecoilMass {
    Total,
    Reduced,
    Electron,
}

impl RecoilMass {
    pub const ALL: [RecoilMass; 3] = [RecoilMass::Total, RecoilMass::Reduced, RecoilMass::Electron];
}

impl fmt::Display for RecoilMass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecoilMass::Total => "total",
            RecoilMass::Reduced => "reduced",
            RecoilMass::Electron => "electron",
        })
    }
}

impl FromStr for RecoilMass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "total" => Ok(RecoilMass::Total),
            "reduced" => Ok(RecoilMass::Reduced),
            "electron" => Ok(RecoilMass::Electron),
            other => Err(Error::Config(format!("unknown recoil_mass `{other}`"))),
        }
    }
}

/// Harmonic hydrogen atom parameters, SI.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HydrogenParams {
    pub si: SiConstants,
    /// Harmonic gap frequency Ω (rad/s).
    pub omega: f64,
    /// m_e + m_p (kg).
    pub total_mass: f64,
    /// m_e m_p / (m_e + m_p) (kg).
    pub reduced_mass: f64,
    pub recoil: RecoilMass,
}

impl HydrogenParams {
    pub fn new(si: SiConstants, omega: f64, recoil: RecoilMass) -> Result<Self> {
        check_finite("omega", omega)?;
        if omega <= 0.0 {
            return Err(Error::domain("omega", format!("must be > 0, got {omega}")));
        }
        for (field, v) in [
            ("hbar", si.hbar),
            ("epsilon0", si.epsilon0),
            ("light_c", si.light_c),
            ("m_e", si.m_e),
            ("m_p", si.m_p),
        ] {
            check_finite(field, v)?;
            if v <= 0.0 {
                return Err(Error::domain(field, format!("must be > 0, got {v}")));
            }
        }
        check_finite("q_e", si.q_e)?;
        check_finite("q_p", si.q_p)?;
        let total_mass = si.m_e + si.m_p;
        Ok(Self {
            si,
            omega,
            total_mass,
            reduced_mass: si.m_e * si.m_p / total_mass,
            recoil,
        })
    }

    /// Ω from a gap ħΩ given in eV.
    pub fn omega_from_ev(gap_ev: f64, si: &SiConstants) -> f64 {
        gap_ev * si::ELECTRON_VOLT / si.hbar
    }

    pub fn gap_ev(&self) -> f64 {
        self.si.hbar * self.omega / si::ELECTRON_VOLT
    }

    /// ħΩ in joules.
    pub fn gap_energy(&self) -> f64 {
        self.si.hbar * self.omega
    }

    pub fn recoil_mass(&self) -> f64 {
        match self.recoil {
            RecoilMass::Total => self.total_mass,
            RecoilMass::Reduced => self.reduced_mass,
            RecoilMass::Electron => self.si.m_e,
        }
    }

    pub fn with_omega(self, omega: f64) -> Result<Self> {
        Self::new(self.si, omega, self.recoil)
    }

    pub fn with_recoil(self, recoil: RecoilMass) -> Self {
        Self { recoil, ..self }
    }

    pub fn to_config(&self) -> KeyValueConfig {
        let mut cfg = KeyValueConfig::default();
        cfg.set("unit_system", UnitSystem::Si.to_string());
        cfg.set_f64("omega_rad_s", self.omega);
        cfg.set("recoil_mass", self.recoil.to_string());
        cfg.set_f64("hbar_J_s", self.si.hbar);
        cfg.set_f64("planck_h_J_s", self.si.planck_h);
        cfg.set_f64("epsilon0_F_m", self.si.epsilon0);
        cfg.set_f64("light_c_m_s", self.si.light_c);
        cfg.set_f64("m_e_kg", self.si.m_e);
        cfg.set_f64("m_p_kg", self.si.m_p);
        cfg.set_f64("q_e_C", self.si.q_e);
        cfg.set_f64("q_p_C", self.si.q_p);
        cfg
    }

    /// Missing keys fall back to [`default_hydrogen_params`]. Ω may be given as
    /// `omega_rad_s` or `omega_eV`, never both.
    pub fn from_config(cfg: &KeyValueConfig) -> Result<Self> {
        if cfg.unit_system()? != Some(UnitSystem::Si) {
            return Err(Error::Config("hydrogen parameters require unit_system = si".into()));
        }
        let base = default_hydrogen_params();
        let mut si = base.si;
        for (key, slot) in [
            ("hbar_J_s", &mut si.hbar),
            ("planck_h_J_s", &mut si.planck_h),
            ("epsilon0_F_m", &mut si.epsilon0),
            ("light_c_m_s", &mut si.light_c),
            ("m_e_kg", &mut si.m_e),
            ("m_p_kg", &mut si.m_p),
            ("q_e_C", &mut si.q_e),
            ("q_p_C", &mut si.q_p),
        ] {
            if let Some(v) = cfg.get_f64(key)? {
                *slot = v;
            }
        }
        let omega = match (cfg.get_f64("omega_rad_s")?, cfg.get_f64("omega_eV")?) {
            (Some(_), Some(_)) => return Err(Error::Config("both omega_rad_s and omega_eV given; use one".into())),
            (Some(w), None) => w,
            (None, Some(ev)) => Self::omega_from_ev(ev, &si),
            (None, None) => Self::omega_from_ev(DEFAULT_HYDROGEN_GAP_EV, &si),
        };
        let recoil = match cfg.get("recoil_mass") {
            Some(s) => s.parse()?,
            None => base.recoil,
        };
        Self::new(si, omega, recoil)
    }
}

/// CODATA 2018 constants, ħΩ = 10.2 eV and electron recoil kinematics.
pub fn default_hydrogen_params() -> HydrogenParams {
    let si = SiConstants::default();
    HydrogenParams::new(
        si,
        HydrogenParams::omega_from_ev(DEFAULT_HYDROGEN_GAP_EV, &si),
        RecoilMass::Electron,
    )
    .expect("default constants are valid")
}

fn check_finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(field, format!("must be finite, got {v}")))
    }
}

/// Flat `key = value` configuration with `#` comments.
///
/// Keys are kept sorted so that [`KeyValueConfig::to_text`] is canonical and
/// [`KeyValueConfig::canonical_hash`] only depends on content.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyValueConfig {
    entries: BTreeMap<String, String>,
}

const UNIT_SUFFIXES: [&str; 6] = ["_m", "_eV", "_kg", "_s", "_J", "_rad_s"];

impl KeyValueConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    /// Stores with the shortest representation that parses back bit-exactly.
    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.set(key, format!("{value:e}"));
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{s}` as a number"))),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn unit_system(&self) -> Result<Option<UnitSystem>> {
        self.get("unit_system").map(str::parse).transpose()
    }

    /// Fails when a unit-suffixed spelling of a natural-unit key is present.
    pub fn reject_suffixed(&self, key: &str) -> Result<()> {
        for suffix in UNIT_SUFFIXES {
            let k = format!("{key}{suffix}");
            if self.entries.contains_key(&k) {
                return Err(Error::Config(format!(
                    "`{k}` carries SI units but the config is in natural units"
                )));
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn merge(&mut self, other: &KeyValueConfig) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    /// SHA-256 over the canonical text, hex encoded.
    pub fn canonical_hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_bundle() {
        let p = DetectorParams::new(1.0, 1e6, 1.0, 0.01).unwrap();
        assert_eq!(p.gap, 1.0);
        assert_eq!(p.gap_ratio(), 1e-6);
    }

    #[test]
    fn negative_gap_names_the_field() {
        match DetectorParams::new(-1.0, 1e6, 1.0, 0.01) {
            Err(Error::Domain { field, .. }) => assert_eq!(field, "gap_E"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn zero_gap_is_allowed() {
        assert!(DetectorParams::new(0.0, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(DetectorParams::new(1.0, f64::NAN, 1.0, 1.0).is_err());
        assert!(DetectorParams::new(1.0, 1.0, f64::INFINITY, 1.0).is_err());
        assert!(DetectorParams::new(1.0, 1.0, 1.0, f64::NAN).is_err());
        assert!(DetectorParams::new(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(DetectorParams::new(1.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn hydrogen_defaults() {
        let hp = default_hydrogen_params();
        assert_eq!(hp.si.q_e, 1.6e-19);
        assert_eq!(hp.si.q_p, 1.6e-19);
        assert_eq!(hp.total_mass, hp.si.m_e + hp.si.m_p);
        let ratio = hp.reduced_mass / hp.si.m_e;
        assert!(ratio > 0.999 && ratio < 1.0, "{ratio}");
        assert!(hp.reduced_mass < hp.si.m_e.min(hp.si.m_p));
        assert!((hp.si.planck_h / (std::f64::consts::TAU * hp.si.hbar) - 1.0).abs() < 1e-15);
        assert!((hp.gap_ev() - 10.2).abs() < 1e-12);
        assert_eq!(hp, default_hydrogen_params());
    }

    #[test]
    fn detector_config_round_trip() {
        let p = DetectorParams::new(0.1 + 0.2, 1.0 / 3.0, 2f64.sqrt(), -1e-300).unwrap();
        let text = p.to_config().to_text();
        let back = DetectorParams::from_config(&KeyValueConfig::parse(&text).unwrap()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn hydrogen_config_round_trip() {
        let hp = default_hydrogen_params()
            .with_omega(1.234_567_890_123e15)
            .unwrap()
            .with_recoil(RecoilMass::Total);
        let text = hp.to_config().to_text();
        let back = HydrogenParams::from_config(&KeyValueConfig::parse(&text).unwrap()).unwrap();
        assert_eq!(hp, back);
    }

    #[test]
    fn config_parsing_and_rejections() {
        let cfg = KeyValueConfig::parse("# comment\n gap_E = 1 # trailing\nmass_M=1e6\n\n").unwrap();
        assert_eq!(cfg.get("gap_E"), Some("1"));
        assert_eq!(cfg.get_f64("mass_M").unwrap(), Some(1e6));
        assert!(KeyValueConfig::parse("a = 1\na = 2").is_err());
        assert!(KeyValueConfig::parse("novalue").is_err());

        let mixed = KeyValueConfig::parse("gap_E = 1\ngap_E_eV = 1\nmass_M = 1\nwave_speed_c = 1\ncoupling_lambda = 1")
            .unwrap();
        assert!(matches!(DetectorParams::from_config(&mixed), Err(Error::Config(_))));

        let si =
            KeyValueConfig::parse("unit_system = si\ngap_E = 1\nmass_M = 1\nwave_speed_c = 1\ncoupling_lambda = 1")
                .unwrap();
        assert!(DetectorParams::from_config(&si).is_err());

        let both = KeyValueConfig::parse("unit_system = si\nomega_eV = 10\nomega_rad_s = 1e15").unwrap();
        assert!(HydrogenParams::from_config(&both).is_err());
    }

    #[test]
    fn omega_ev_key() {
        let cfg = KeyValueConfig::parse("unit_system = si\nomega_eV = 10.2").unwrap();
        let hp = HydrogenParams::from_config(&cfg).unwrap();
        assert_eq!(hp, default_hydrogen_params());
    }

    #[test]
    fn hash_tracks_content() {
        let a = DetectorParams::default().to_config();
        let b = DetectorParams::default().with_gap(2.0).unwrap().to_config();
        assert_ne!(a.canonical_hash(), b.canonical_hash());
        assert_eq!(a.canonical_hash(), a.clone().canonical_hash());
        assert_eq!(a.canonical_hash().len(), 64);
    }
}
