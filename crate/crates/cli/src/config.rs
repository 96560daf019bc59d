//! Run configuration: a single JSON document, atomic units except times,
//! which are in units of the Kepler period `T_e`.

use std::path::Path;

use rydmol::classical::{resonant_rotational_constant, total_energy};
use rydmol::mqdt::label_nu;
use rydmol::{ChannelSet, Parity, ReactionMatrix};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub calibration: Calibration,
    #[serde(default)]
    pub sos: SosConfig,
    #[serde(default)]
    pub eigens: EigensConfig,
    #[serde(default)]
    pub wavepacket: WavepacketConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub husimi: HusimiConfig,
    #[serde(default)]
    pub stats: StatsConfig,
    #[serde(default)]
    pub revival: RevivalConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    #[serde(rename = "J")]
    pub j: u32,
    #[serde(rename = "L")]
    pub l: u32,
    #[serde(with = "parity_text")]
    pub parity: Parity,
    pub mu0: f64,
    pub k: f64,
}

mod parity_text {
    use rydmol::Parity;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Parity, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(p)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Parity, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

impl Default for Physics {
    fn default() -> Self {
        Self { j: 50, l: 10, parity: Parity::Plus, mu0: 0.4, k: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Resonant,
    Generic,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::Resonant => "resonant",
            Case::Generic => "generic",
        }
    }
}

/// Either the resonance recipe or explicit `B_r`, `E_total`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Calibration {
    Explicit(ExplicitCalibration),
    Resonance(ResonanceCalibration),
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration::Resonance(ResonanceCalibration::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitCalibration {
    #[serde(rename = "B_r")]
    pub b_rot: f64,
    #[serde(rename = "E_total")]
    pub e_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonanceCalibration {
    pub nu_ref: f64,
    #[serde(rename = "N_ref")]
    pub n_ref: u32,
    /// `T_e = (p/2) T_c` at `(nu_ref, N_ref)`.
    pub p: u32,
    /// The generic case sits at `nu_ref * (1 + generic_offset)`.
    pub generic_offset: f64,
    pub case: Case,
}

impl Default for ResonanceCalibration {
    fn default() -> Self {
        Self { nu_ref: 315.5, n_ref: 50, p: 2, generic_offset: 0.137, case: Case::Resonant }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SosConfig {
    /// Seeds on an `n x n` grid in `(cos θ, φ)`.
    pub seed_grid: usize,
    pub n_kicks: usize,
    pub mirror: bool,
}

impl Default for SosConfig {
    fn default() -> Self {
        Self { seed_grid: 10, n_kicks: 1000, mirror: false }
    }
}

/// Window in `ν` at `N = J`; unset bounds default to the centre `± 1`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigensConfig {
    pub nu_min: Option<f64>,
    pub nu_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WavepacketConfig {
    #[serde(rename = "N0")]
    pub n0_channel: u32,
    /// Defaults to `ν_{N0}(E_total)`.
    pub n0: Option<f64>,
    pub dn: f64,
    pub weight_cutoff: f64,
    pub max_discarded: f64,
}

impl Default for WavepacketConfig {
    fn default() -> Self {
        Self { n0_channel: 40, n0: None, dn: 2.0, weight_cutoff: 1e-4, max_discarded: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    #[serde(rename = "t_max_Te")]
    pub t_max: f64,
    #[serde(rename = "dt_Te")]
    pub dt: f64,
    pub corr_channel: u32,
    #[serde(rename = "t_ref_Te")]
    pub t_ref: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { t_max: 20.0, dt: 0.05, corr_channel: 42, t_ref: 0.5 }
    }
}

/// Eigenstate picked from the `eigens` window for a Husimi map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSelector {
    Extreme(Extreme),
    /// Nearest state in `label_nu`.
    LabelNu { label_nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extreme {
    #[serde(rename = "min_S2")]
    MinS2,
    #[serde(rename = "max_S2")]
    MaxS2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HusimiConfig {
    pub n_theta: usize,
    pub n_phi: usize,
    pub states: Vec<StateSelector>,
}

impl Default for HusimiConfig {
    fn default() -> Self {
        Self {
            n_theta: 100,
            n_phi: 200,
            states: vec![StateSelector::Extreme(Extreme::MinS2), StateSelector::Extreme(Extreme::MaxS2)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    pub k_values: Vec<f64>,
    pub cases: Vec<Case>,
    /// Window half-width in `ν` around each case centre.
    pub half_width: f64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self { k_values: vec![0.25, 1.0, 10.0], cases: vec![Case::Generic, Case::Resonant], half_width: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RevivalConfig {
    /// Range in `T_e` searched for the first burst.
    pub first_range: [f64; 2],
    /// Minimum separation in `T_e` of the second burst.
    pub min_gap: f64,
}

impl Default for RevivalConfig {
    fn default() -> Self {
        Self { first_range: [60.0, 160.0], min_gap: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: "out".into() }
    }
}

/// Quantities fixed by the configuration alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derived {
    #[serde(rename = "B_r")]
    pub b_rot: f64,
    #[serde(rename = "E_total")]
    pub e_total: f64,
    /// `ν` at `N = J` for `E_total`.
    pub nu_centre: f64,
    /// Kepler period at `nu_centre`.
    #[serde(rename = "T_e")]
    pub t_e: f64,
    /// Core period `2π / (B_r (2J+1))`.
    #[serde(rename = "T_c")]
    pub t_c: f64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let p = &self.physics;
        if p.l == 0 || p.j < p.l {
            return bad(format!("physics: need J >= L > 0, got J = {}, L = {}", p.j, p.l));
        }
        if !p.mu0.is_finite() || !p.k.is_finite() {
            return bad("physics: mu0 and k must be finite".into());
        }
        match &self.calibration {
            Calibration::Explicit(c) => {
                if !(c.b_rot > 0.0 && c.b_rot.is_finite()) {
                    return bad(format!("calibration: B_r must be positive, got {}", c.b_rot));
                }
                if !c.e_total.is_finite() {
                    return bad(format!("calibration: E_total must be finite, got {}", c.e_total));
                }
            }
            Calibration::Resonance(c) => {
                if !(c.nu_ref > 0.0 && c.nu_ref.is_finite()) || c.p == 0 {
                    return bad("calibration: nu_ref and p must be positive".into());
                }
                if !(c.generic_offset.is_finite() && c.generic_offset > -1.0) {
                    return bad(format!("calibration: generic_offset must exceed -1, got {}", c.generic_offset));
                }
            }
        }
        if self.sos.seed_grid == 0 || self.sos.n_kicks == 0 {
            return bad("sos: seed_grid and n_kicks must be positive".into());
        }
        if let (Some(lo), Some(hi)) = (self.eigens.nu_min, self.eigens.nu_max) {
            if !(hi > lo) {
                return bad(format!("eigens: nu_max = {hi} must exceed nu_min = {lo}"));
            }
        }
        let w = &self.wavepacket;
        if !(w.dn > 0.0 && w.dn.is_finite()) {
            return bad(format!("wavepacket: dn must be positive, got {}", w.dn));
        }
        if !(w.weight_cutoff > 0.0 && w.weight_cutoff < 1.0) || !(w.max_discarded >= 0.0) {
            return bad("wavepacket: weight_cutoff must lie in (0, 1) and max_discarded must be >= 0".into());
        }
        let e = &self.evolve;
        if !(e.dt > 0.0 && e.t_max >= e.dt && e.t_max.is_finite()) {
            return bad(format!("evolve: need 0 < dt_Te <= t_max_Te, got dt_Te = {}, t_max_Te = {}", e.dt, e.t_max));
        }
        if !e.t_ref.is_finite() {
            return bad("evolve: t_ref_Te must be finite".into());
        }
        if self.husimi.n_theta < 2 || self.husimi.n_phi < 1 || self.husimi.states.is_empty() {
            return bad("husimi: need n_theta >= 2, n_phi >= 1 and at least one state".into());
        }
        if self.stats.k_values.iter().any(|k| !k.is_finite()) || !(self.stats.half_width > 0.0) {
            return bad("stats: k values must be finite and half_width positive".into());
        }
        let r = &self.revival;
        if !(r.first_range[1] > r.first_range[0]) || !(r.min_gap >= 0.0) {
            return bad("revival: first_range must be increasing and min_gap >= 0".into());
        }
        let set = self.channel_set(self.physics.k)?;
        for (key, n) in [("wavepacket.N0", w.n0_channel), ("evolve.corr_channel", e.corr_channel)] {
            if set.index_of(n).is_none() {
                return bad(format!("{key} = {n} is not one of the channels {:?}", set.n_list()));
            }
        }
        let threshold = set.lowest_threshold();
        let e_total = self.e_total_for(self.case())?;
        if !(e_total < threshold) {
            return bad(format!("calibration: E_total = {e_total:e} is not below the lowest threshold {threshold:e}"));
        }
        Ok(())
    }

    pub fn b_rot(&self) -> f64 {
        match &self.calibration {
            Calibration::Explicit(c) => c.b_rot,
            Calibration::Resonance(c) => resonant_rotational_constant(c.nu_ref, c.n_ref as f64, c.p),
        }
    }

    /// Case of the configured calibration, `None` for explicit values.
    pub fn case(&self) -> Option<Case> {
        match &self.calibration {
            Calibration::Explicit(_) => None,
            Calibration::Resonance(c) => Some(c.case),
        }
    }

    /// `E_total` for `case`, or the configured calibration when `None`.
    pub fn e_total_for(&self, case: Option<Case>) -> Result<f64, CliError> {
        match (&self.calibration, case) {
            (Calibration::Explicit(c), None) => Ok(c.e_total),
            (Calibration::Explicit(_), Some(_)) => {
                Err(CliError::Config("resonant/generic cases need a resonance calibration".into()))
            }
            (Calibration::Resonance(c), case) => {
                let nu = match case.unwrap_or(c.case) {
                    Case::Resonant => c.nu_ref,
                    Case::Generic => c.nu_ref * (1.0 + c.generic_offset),
                };
                Ok(total_energy(self.b_rot(), c.n_ref as f64, nu))
            }
        }
    }

    pub fn channel_set(&self, k: f64) -> Result<ChannelSet, CliError> {
        let p = &self.physics;
        ChannelSet::new(p.j, p.l, p.parity, self.b_rot(), p.mu0, k).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn model(&self, k: f64) -> Result<(ChannelSet, ReactionMatrix), CliError> {
        let set = self.channel_set(k)?;
        let rm = set.reaction_matrix().map_err(|e| CliError::Numerical(e.to_string()))?;
        Ok((set, rm))
    }

    pub fn derived(&self) -> Result<Derived, CliError> {
        let set = self.channel_set(self.physics.k)?;
        let e_total = self.e_total_for(None)?;
        let nu_centre = label_nu(&set, e_total);
        let b = self.b_rot();
        Ok(Derived {
            b_rot: b,
            e_total,
            nu_centre,
            t_e: 2.0 * std::f64::consts::PI * nu_centre.powi(3),
            t_c: 2.0 * std::f64::consts::PI / (b * (2 * self.physics.j + 1) as f64),
        })
    }

    /// `(nu_min, nu_max)` of the eigenvalue window.
    pub fn eigen_window(&self) -> Result<(f64, f64), CliError> {
        let centre = self.derived()?.nu_centre;
        Ok((self.eigens.nu_min.unwrap_or(centre - 1.0), self.eigens.nu_max.unwrap_or(centre + 1.0)))
    }
}
