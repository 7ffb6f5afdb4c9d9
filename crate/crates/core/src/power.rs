//! Receiver power consumption.
//!
//! Two modes are available. [`PowerMode::Lookup`] returns the tabulated
//! receiver powers for a 6-bit ADC at the five reference sub-carrier
//! spacings. [`PowerMode::Parametric`] uses a linear model in which only the
//! ADCs depend on bandwidth:
//!
//! ```text
//! P(arch, B_Tot) = base[arch] + n_adc(arch) * c * f(bits) * B_Tot
//! ```
//!
//! with `f(bits) = 2^bits` by default. `base` and `c` come from [`calibrate`],
//! a least-squares fit against the table. The fit shares one `c` per ADC
//! class across all architectures and leaves each base power free.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::architectures::{ArchKind, Architecture};
use crate::error::{Error, Result};
use crate::signaling::FrameAnchor;

/// Resolution the power tables were computed for.
pub const TABULATED_BITS: u32 = 6;
pub const BUNDLED_TABLE_VERSION: &str = "v1";
const BUNDLED_TABLE: &str = include_str!("../data/power_tables_v1.csv");
const B_SC_MATCH_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AdcClass {
    #[serde(rename = "LPADC")]
    Lpadc,
    #[serde(rename = "HPADC")]
    Hpadc,
}

impl AdcClass {
    pub const ALL: [AdcClass; 2] = [AdcClass::Hpadc, AdcClass::Lpadc];

    pub fn as_str(self) -> &'static str {
        match self {
            AdcClass::Lpadc => "LPADC",
            AdcClass::Hpadc => "HPADC",
        }
    }
}

impl fmt::Display for AdcClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdcClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdcClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain("adc class", format!("unknown name {s:?}")))
    }
}

/// How ADC power grows with resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdcLaw {
    /// `P = c * B * 2^bits`
    #[default]
    Exponential,
    /// `P = c * B * bits`
    Linear,
}

impl AdcLaw {
    pub fn resolution_factor(self, bits: u32) -> f64 {
        match self {
            AdcLaw::Exponential => 2f64.powi(bits as i32),
            AdcLaw::Linear => f64::from(bits),
        }
    }
}

impl FromStr for AdcLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" => Ok(AdcLaw::Exponential),
            "linear" => Ok(AdcLaw::Linear),
            _ => Err(Error::domain("adc law", format!("unknown name {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcModel {
    pub class: AdcClass,
    pub bits: u32,
    /// Energy per conversion step, J.
    pub c: f64,
    pub law: AdcLaw,
}

impl AdcModel {
    pub fn new(class: AdcClass, bits: u32, c: f64, law: AdcLaw) -> Result<Self> {
        if bits == 0 {
            return Err(Error::domain("bits", "must be at least 1"));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::domain("c", "must be positive"));
        }
        Ok(Self { class, bits, c, law })
    }

    /// Power of one ADC per Hz of sampled bandwidth.
    pub fn power_per_hz(&self) -> f64 {
        self.c * self.law.resolution_factor(self.bits)
    }

    pub fn with_bits(self, bits: u32) -> Result<Self> {
        Self::new(self.class, bits, self.c, self.law)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerMode {
    #[default]
    Lookup,
    Parametric,
}

impl FromStr for PowerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lookup" => Ok(PowerMode::Lookup),
            "parametric" => Ok(PowerMode::Parametric),
            _ => Err(Error::domain("power mode", format!("unknown name {s:?}"))),
        }
    }
}

impl fmt::Display for PowerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerMode::Lookup => "lookup",
            PowerMode::Parametric => "parametric",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub architecture: ArchKind,
    pub adc_class: AdcClass,
    pub b_sc_hz: f64,
    pub power_w: f64,
}

/// Tabulated receiver power, one row per (architecture, ADC class, `B_SC`).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTable {
    rows: Vec<PowerRow>,
}

impl PowerTable {
    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED_TABLE.as_bytes()).expect("bundled power table parses")
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<PowerRow>, _>>()?;
        Self::from_rows(rows)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn from_rows(rows: Vec<PowerRow>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| !(r.power_w > 0.0 && r.b_sc_hz > 0.0)) {
            return Err(Error::domain(
                "power table row",
                format!("{} {} at {} Hz: power and b_sc must be positive", bad.architecture, bad.adc_class, bad.b_sc_hz),
            ));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[PowerRow] {
        &self.rows
    }

    pub fn get(&self, arch: ArchKind, class: AdcClass, b_sc: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.architecture == arch
                    && r.adc_class == class
                    && (r.b_sc_hz - b_sc).abs() <= B_SC_MATCH_RTOL * b_sc.abs()
            })
            .map(|r| r.power_w)
    }

    /// Sorted distinct `B_SC` values present for `class`.
    pub fn b_sc_values(&self, class: AdcClass) -> Vec<f64> {
        let mut v: Vec<f64> = self.rows.iter().filter(|r| r.adc_class == class).map(|r| r.b_sc_hz).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Returns the tabulated receiver power. Only the default 6-bit receivers at
/// tabulated spacings are available.
pub fn lookup_power(table: &PowerTable, arch: &Architecture, adc: &AdcModel, b_sc: f64) -> Result<f64> {
    let not_tabulated = || Error::NotTabulated {
        arch: arch.kind(),
        class: adc.class,
        b_sc_hz: b_sc,
        bits: adc.bits,
    };
    if adc.bits != TABULATED_BITS || *arch != Architecture::default_for(arch.kind()) {
        return Err(not_tabulated());
    }
    table.get(arch.kind(), adc.class, b_sc).ok_or_else(not_tabulated)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub b_sc_hz: f64,
    pub b_tot_hz: f64,
    pub table_w: f64,
    pub model_w: f64,
    pub rel_error: f64,
}

/// Unconstrained straight-line fit of one architecture's rows against `B_Tot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchFit {
    pub architecture: ArchKind,
    pub n_adc: usize,
    pub base_w: f64,
    pub slope_w_per_hz: f64,
    /// `slope / (n_adc * f(6))`
    pub recovered_c: f64,
    pub max_rel_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCalibration {
    pub adc_class: AdcClass,
    pub law: AdcLaw,
    pub calibrated_bits: u32,
    /// Shared energy-per-conversion constant.
    pub c: f64,
    /// Fitted per-ADC slope at the calibration resolution, W/Hz.
    pub slope_per_adc_w_per_hz: f64,
    pub base_w: BTreeMap<ArchKind, f64>,
    pub n_adc: BTreeMap<ArchKind, usize>,
    pub residuals: BTreeMap<ArchKind, Vec<Residual>>,
    pub free_fits: Vec<ArchFit>,
    pub max_rel_residual: f64,
}

impl ClassCalibration {
    pub fn adc(&self, bits: u32) -> Result<AdcModel> {
        AdcModel::new(self.adc_class, bits, self.c, self.law)
    }
}

/// Calibrated parametric power model for both ADC classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub law: AdcLaw,
    pub anchor: FrameAnchor,
    pub classes: BTreeMap<AdcClass, ClassCalibration>,
}

impl PowerModel {
    pub fn class(&self, class: AdcClass) -> Result<&ClassCalibration> {
        self.classes
            .get(&class)
            .ok_or_else(|| Error::Calibration(format!("no calibration for {class}")))
    }

    pub fn adc(&self, class: AdcClass, bits: u32) -> Result<AdcModel> {
        self.class(class)?.adc(bits)
    }

    pub fn base_power(&self, class: AdcClass, arch: ArchKind) -> Result<f64> {
        self.class(class)?
            .base_w
            .get(&arch)
            .copied()
            .ok_or_else(|| Error::Calibration(format!("no base power for {arch} / {class}")))
    }
}

struct Group {
    kind: ArchKind,
    n_adc: usize,
    // (b_sc, b_tot, power)
    points: Vec<(f64, f64, f64)>,
}

impl Group {
    fn xs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().map(|&(_, b_tot, p)| (self.n_adc as f64 * b_tot, p))
    }

    fn means(&self) -> (f64, f64) {
        let n = self.points.len() as f64;
        let (sx, sy) = self.xs().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        (sx / n, sy / n)
    }

    fn moments(&self) -> (f64, f64) {
        let (mx, my) = self.means();
        self.xs()
            .fold((0.0, 0.0), |(sxx, sxy), (x, y)| (sxx + (x - mx).powi(2), sxy + (x - mx) * (y - my)))
    }
}

/// Fits one ADC class of `table` for the given receivers.
pub fn calibrate_class(
    table: &PowerTable,
    class: AdcClass,
    archs: &[Architecture],
    anchor: &FrameAnchor,
    law: AdcLaw,
) -> Result<ClassCalibration> {
    if archs.is_empty() {
        return Err(Error::Calibration("no architectures to calibrate".into()));
    }
    let mut groups = Vec::with_capacity(archs.len());
    for arch in archs {
        let points = table
            .rows()
            .iter()
            .filter(|r| r.architecture == arch.kind() && r.adc_class == class)
            .map(|r| anchor.derive(r.b_sc_hz).map(|f| (r.b_sc_hz, f.b_tot, r.power_w)))
            .collect::<Result<Vec<_>>>()?;
        if points.len() < 2 {
            return Err(Error::Calibration(format!(
                "{} / {class}: need at least 2 rows, found {}",
                arch.kind(),
                points.len()
            )));
        }
        groups.push(Group { kind: arch.kind(), n_adc: arch.n_adc(), points });
    }

    let resolution = law.resolution_factor(TABULATED_BITS);
    let mut free_fits = Vec::with_capacity(groups.len());
    let (mut pooled_sxx, mut pooled_sxy) = (0.0, 0.0);
    for g in &groups {
        let (sxx, sxy) = g.moments();
        if sxx <= 0.0 {
            return Err(Error::Calibration(format!(
                "{} / {class}: singular fit, all B_Tot values are equal",
                g.kind
            )));
        }
        pooled_sxx += sxx;
        pooled_sxy += sxy;

        let per_adc_slope = sxy / sxx;
        let (mx, my) = g.means();
        let base = my - per_adc_slope * mx;
        let slope = per_adc_slope * g.n_adc as f64;
        let max_rel_residual = g
            .points
            .iter()
            .map(|&(_, b_tot, p)| ((base + slope * b_tot - p) / p).abs())
            .fold(0.0, f64::max);
        free_fits.push(ArchFit {
            architecture: g.kind,
            n_adc: g.n_adc,
            base_w: base,
            slope_w_per_hz: slope,
            recovered_c: per_adc_slope / resolution,
            max_rel_residual,
        });
    }

    let slope_per_adc = pooled_sxy / pooled_sxx;
    if !(slope_per_adc >= 0.0) {
        return Err(Error::Calibration(format!(
            "{class}: fitted ADC slope {slope_per_adc} is negative"
        )));
    }

    let mut base_w = BTreeMap::new();
    let mut n_adc = BTreeMap::new();
    let mut residuals = BTreeMap::new();
    let mut max_rel_residual: f64 = 0.0;
    for g in &groups {
        let (mx, my) = g.means();
        let base = my - slope_per_adc * mx;
        if !(base > 0.0) {
            return Err(Error::Calibration(format!("{} / {class}: base power {base} W is not positive", g.kind)));
        }
        let rs: Vec<Residual> = g
            .points
            .iter()
            .map(|&(b_sc, b_tot, p)| {
                let model = base + slope_per_adc * g.n_adc as f64 * b_tot;
                Residual {
                    b_sc_hz: b_sc,
                    b_tot_hz: b_tot,
                    table_w: p,
                    model_w: model,
                    rel_error: (model - p) / p,
                }
            })
            .collect();
        max_rel_residual = rs.iter().map(|r| r.rel_error.abs()).fold(max_rel_residual, f64::max);
        base_w.insert(g.kind, base);
        n_adc.insert(g.kind, g.n_adc);
        residuals.insert(g.kind, rs);
    }

    Ok(ClassCalibration {
        adc_class: class,
        law,
        calibrated_bits: TABULATED_BITS,
        c: slope_per_adc / resolution,
        slope_per_adc_w_per_hz: slope_per_adc,
        base_w,
        n_adc,
        residuals,
        free_fits,
        max_rel_residual,
    })
}

/// Calibrates every ADC class present in `table`.
pub fn calibrate(table: &PowerTable, archs: &[Architecture], anchor: &FrameAnchor, law: AdcLaw) -> Result<PowerModel> {
    let mut classes = BTreeMap::new();
    for class in AdcClass::ALL {
        if table.rows().iter().any(|r| r.adc_class == class) {
            classes.insert(class, calibrate_class(table, class, archs, anchor, law)?);
        }
    }
    if classes.is_empty() {
        return Err(Error::Calibration("power table is empty".into()));
    }
    Ok(PowerModel { law, anchor: *anchor, classes })
}

/// Receiver power from the calibrated linear model, for any resolution.
pub fn parametric_power(model: &PowerModel, arch: &Architecture, adc: &AdcModel, b_sc: f64) -> Result<f64> {
    let frame = model.anchor.derive(b_sc)?;
    let base = model.base_power(adc.class, arch.kind())?;
    Ok(base + arch.n_adc() as f64 * adc.power_per_hz() * frame.b_tot)
}
