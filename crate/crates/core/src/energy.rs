//! Energy of initial cell discovery: receiver power times sweep time, plus
//! the CI acquisition budget.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::architectures::{directional_scans, ArchKind, Architecture, Scenario, ScenarioKind, SweepGeometry};
use crate::error::{Error, Result};
use crate::power::{calibrate, lookup_power, parametric_power, AdcClass, AdcLaw, AdcModel, PowerMode, PowerModel, PowerTable};
use crate::signaling::{FrameAnchor, FrameConfig};

/// One evaluated configuration. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub arch: ArchKind,
    pub scenario: ScenarioKind,
    pub adc_class: AdcClass,
    pub bits: u32,
    pub b_sc_hz: f64,
    pub n_d: u64,
    pub t_del_s: f64,
    pub p_rx_w: f64,
    pub e_ci_j: f64,
    pub e_total_j: f64,
}

/// Proposed wide-PSS structure against its two references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposedComparison {
    pub k: u32,
    pub base_b_sc_hz: f64,
    pub pss_b_sc_hz: f64,
    /// Plain sweep at the base spacing.
    pub base: EnergyReport,
    /// Wide PSS: delay divided by `k`, receiver sampling the wide band.
    /// `b_sc_hz` is the base spacing used for the rest of the signaling.
    pub proposed: EnergyReport,
    /// All signaling at the fixed spacing `k * B_SC`.
    pub baseline: EnergyReport,
    /// Scan time of `proposed` over that of `base`.
    pub delay_ratio: f64,
    /// `proposed.e_total_j / baseline.e_total_j`.
    pub energy_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyQuery {
    pub arch: Architecture,
    pub scenario: Scenario,
    pub adc: AdcModel,
    pub b_sc: f64,
    pub mode: PowerMode,
}

/// Everything needed to evaluate energy: sweep geometry, frame anchor, the
/// power table and its calibration.
#[derive(Debug, Clone)]
pub struct IcdModel {
    pub geometry: SweepGeometry,
    pub anchor: FrameAnchor,
    pub table: PowerTable,
    pub power: PowerModel,
}

impl IcdModel {
    pub fn new(
        geometry: SweepGeometry,
        anchor: FrameAnchor,
        table: PowerTable,
        archs: &[Architecture],
        law: AdcLaw,
    ) -> Result<Self> {
        let power = calibrate(&table, archs, &anchor, law)?;
        Ok(Self { geometry, anchor, table, power })
    }

    /// 64 x 16 sweep, LTE anchor, bundled tables, exponential ADC law.
    pub fn reference() -> Self {
        Self::new(
            SweepGeometry::default(),
            FrameAnchor::default(),
            PowerTable::bundled(),
            &Architecture::defaults(),
            AdcLaw::Exponential,
        )
        .expect("bundled tables calibrate")
    }

    pub fn frame(&self, b_sc: f64) -> Result<FrameConfig> {
        self.anchor.derive(b_sc)
    }

    pub fn adc(&self, class: AdcClass, bits: u32) -> Result<AdcModel> {
        self.power.adc(class, bits)
    }

    pub fn receiver_power(&self, arch: &Architecture, adc: &AdcModel, b_sc: f64, mode: PowerMode) -> Result<f64> {
        match mode {
            PowerMode::Lookup => lookup_power(&self.table, arch, adc, b_sc),
            PowerMode::Parametric => parametric_power(&self.power, arch, adc, b_sc),
        }
    }

    fn report(
        &self,
        arch: &Architecture,
        scenario: &Scenario,
        adc: &AdcModel,
        b_sc: f64,
        scan_s: f64,
        p_rx: f64,
    ) -> EnergyReport {
        let e_ci = scenario.ci_energy_for(arch);
        EnergyReport {
            arch: arch.kind(),
            scenario: scenario.kind(),
            adc_class: adc.class,
            bits: adc.bits,
            b_sc_hz: b_sc,
            n_d: directional_scans(arch, scenario, &self.geometry),
            t_del_s: scan_s + scenario.ci_delay_for(arch),
            p_rx_w: p_rx,
            e_ci_j: e_ci,
            // the mmWave front end is off while the position fix is acquired
            e_total_j: p_rx * scan_s + e_ci,
        }
    }

    pub fn energy(
        &self,
        arch: &Architecture,
        scenario: &Scenario,
        adc: &AdcModel,
        b_sc: f64,
        mode: PowerMode,
    ) -> Result<EnergyReport> {
        let frame = self.frame(b_sc)?;
        let p_rx = self.receiver_power(arch, adc, b_sc, mode)?;
        let scan = directional_scans(arch, scenario, &self.geometry) as f64 * frame.t_pss;
        Ok(self.report(arch, scenario, adc, b_sc, scan, p_rx))
    }

    /// Evaluates a batch concurrently; output order follows `queries`.
    pub fn energy_batch(&self, queries: &[EnergyQuery]) -> Result<Vec<EnergyReport>> {
        queries
            .par_iter()
            .map(|q| self.energy(&q.arch, &q.scenario, &q.adc, q.b_sc, q.mode))
            .collect()
    }

    /// Large-`B_SC` limit of the energy, excluding CI acquisition: the ADC
    /// energy alone, `N_D * n_adc * c * f(bits) * (B_Tot * T_PSS)`.
    pub fn convergence_value(&self, arch: &Architecture, adc: &AdcModel, scenario: &Scenario) -> f64 {
        let n_d = directional_scans(arch, scenario, &self.geometry) as f64;
        n_d * arch.n_adc() as f64 * adc.power_per_hz() * self.anchor.bandwidth_period_product()
    }

    pub fn proposed_structure_energy(
        &self,
        arch: &Architecture,
        scenario: &Scenario,
        adc: &AdcModel,
        base_b_sc: f64,
        k: u32,
        mode: PowerMode,
    ) -> Result<ProposedComparison> {
        if k < 1 {
            return Err(Error::domain("k", "must be at least 1"));
        }
        let pss_b_sc = f64::from(k) * base_b_sc;
        let base = self.energy(arch, scenario, adc, base_b_sc, mode)?;
        let baseline = self.energy(arch, scenario, adc, pss_b_sc, mode)?;

        let frame = self.frame(base_b_sc)?;
        let base_scan = base.n_d as f64 * frame.t_pss;
        let scan = base_scan / f64::from(k);
        let p_rx = self.receiver_power(arch, adc, pss_b_sc, mode)?;
        let proposed = self.report(arch, scenario, adc, base_b_sc, scan, p_rx);

        Ok(ProposedComparison {
            k,
            base_b_sc_hz: base_b_sc,
            pss_b_sc_hz: pss_b_sc,
            delay_ratio: scan / base_scan,
            energy_ratio: proposed.e_total_j / baseline.e_total_j,
            base,
            proposed,
            baseline,
        })
    }

    /// First `B_SC` in `[lo, hi]` where the energies of `a` and `b` cross,
    /// located on a log grid and refined by bisection.
    pub fn crossover_b_sc(
        &self,
        a: &Architecture,
        b: &Architecture,
        scenario: &Scenario,
        adc: &AdcModel,
        mode: PowerMode,
        lo: f64,
        hi: f64,
    ) -> Result<Option<f64>> {
        let diff = |x: f64| -> Result<f64> {
            Ok(self.energy(a, scenario, adc, x, mode)?.e_total_j - self.energy(b, scenario, adc, x, mode)?.e_total_j)
        };
        let grid = log_grid(lo, hi, 400)?;
        let mut prev = (grid[0], diff(grid[0])?);
        if prev.1 == 0.0 {
            return Ok(Some(prev.0));
        }
        for &x in &grid[1..] {
            let d = diff(x)?;
            if d == 0.0 {
                return Ok(Some(x));
            }
            if d.signum() != prev.1.signum() {
                let (mut l, mut dl, mut h) = (prev.0, prev.1, x);
                while (h - l) > 1e-12 * h {
                    let m = (l * h).sqrt();
                    let dm = diff(m)?;
                    if dm.signum() == dl.signum() {
                        l = m;
                        dl = dm;
                    } else {
                        h = m;
                    }
                }
                return Ok(Some((l * h).sqrt()));
            }
            prev = (x, d);
        }
        Ok(None)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::domain("grid", format!("need 0 < lo < hi and n >= 2, got [{lo}, {hi}] n={n}")));
    }
    let (l, h) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..n).map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp()).collect();
    v[0] = lo;
    v[n - 1] = hi;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch(k: ArchKind) -> Architecture {
        Architecture::default_for(k)
    }

    fn hp6(m: &IcdModel) -> AdcModel {
        m.adc(AdcClass::Hpadc, 6).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn lookup_spot_values() {
        let m = IcdModel::reference();
        let adc = hp6(&m);
        let e = m.energy(&arch(ArchKind::Abf), &Scenario::nci(), &adc, 15e3, PowerMode::Lookup).unwrap();
        assert!(rel(e.e_total_j, 1.0 * 1024.0 * 5e-3) < 1e-9);
        assert_eq!(e.n_d, 1024);
        let e = m.energy(&arch(ArchKind::Dbf), &Scenario::nci(), &adc, 15e3, PowerMode::Lookup).unwrap();
        assert!(rel(e.e_total_j, 1.31 * 64.0 * 5e-3) < 1e-9);
        let e = m.energy(&arch(ArchKind::Abf), &Scenario::cid(), &adc, 15e3, PowerMode::Lookup).unwrap();
        assert!(rel(e.e_total_j, 64.0 * 5e-3 + 1.5 * 0.1) < 1e-9);
        assert!(rel(e.e_ci_j, 0.15) < 1e-12);
        assert!(rel(e.t_del_s, 1.82) < 1e-12);
    }

    #[test]
    fn dbf_ignores_context() {
        let m = IcdModel::reference();
        let adc = hp6(&m);
        let dbf = arch(ArchKind::Dbf);
        let a = m.energy(&dbf, &Scenario::nci(), &adc, 250e3, PowerMode::Lookup).unwrap();
        let b = m.energy(&dbf, &Scenario::cind(), &adc, 250e3, PowerMode::Lookup).unwrap();
        let c = m.energy(&dbf, &Scenario::cid(), &adc, 250e3, PowerMode::Lookup).unwrap();
        assert_eq!((a.e_total_j, a.t_del_s), (b.e_total_j, b.t_del_s));
        assert_eq!((a.e_total_j, a.t_del_s, 0.0), (c.e_total_j, c.t_del_s, c.e_ci_j));
    }

    #[test]
    fn convergence_products() {
        let m = IcdModel::reference();
        let adc = hp6(&m);
        let conv = |k| m.convergence_value(&arch(k), &adc, &Scenario::nci());
        let abf = conv(ArchKind::Abf);
        assert!(rel(conv(ArchKind::Dbf), abf) < 1e-12);
        assert!(rel(conv(ArchKind::Hbf), abf) < 1e-12);
        assert!(rel(conv(ArchKind::Psn) * 4.0, abf) < 1e-12);
    }

    #[test]
    fn proposed_k1_is_identity() {
        let m = IcdModel::reference();
        let adc = hp6(&m);
        let c = m
            .proposed_structure_energy(&arch(ArchKind::Hbf), &Scenario::nci(), &adc, 250e3, 1, PowerMode::Parametric)
            .unwrap();
        assert_eq!(c.proposed, c.base);
        assert_eq!(c.base, c.baseline);
        assert_eq!(c.delay_ratio, 1.0);
    }

    #[test]
    fn proposed_does_not_divide_ci_time() {
        let m = IcdModel::reference();
        let adc = hp6(&m);
        let c = m
            .proposed_structure_energy(&arch(ArchKind::Abf), &Scenario::cid(), &adc, 250e3, 8, PowerMode::Parametric)
            .unwrap();
        let scan = 64.0 * 3e-4 / 8.0;
        assert!(rel(c.proposed.t_del_s, scan + 1.5) < 1e-12);
        assert!(m
            .proposed_structure_energy(&arch(ArchKind::Abf), &Scenario::cid(), &adc, 250e3, 0, PowerMode::Parametric)
            .is_err());
    }

    #[test]
    fn lookup_propagates_not_tabulated() {
        let m = IcdModel::reference();
        let adc = hp6(&m);
        let r = m.proposed_structure_energy(&arch(ArchKind::Abf), &Scenario::nci(), &adc, 250e3, 8, PowerMode::Lookup);
        assert!(matches!(r, Err(Error::NotTabulated { .. })));
    }

    #[test]
    fn batch_preserves_order() {
        let m = IcdModel::reference();
        let adc = hp6(&m);
        let qs: Vec<EnergyQuery> = [15e3, 250e3, 500e3, 1e6, 10e6]
            .iter()
            .flat_map(|&b| {
                Architecture::defaults().map(|a| EnergyQuery {
                    arch: a,
                    scenario: Scenario::nci(),
                    adc,
                    b_sc: b,
                    mode: PowerMode::Lookup,
                })
            })
            .collect();
        let out = m.energy_batch(&qs).unwrap();
        for (q, r) in qs.iter().zip(&out) {
            assert_eq!((q.arch.kind(), q.b_sc), (r.arch, r.b_sc_hz));
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(15e3, 10e6, 5).unwrap();
        assert_eq!((g[0], g[4]), (15e3, 10e6));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(log_grid(1.0, 1.0, 3).is_err());
    }
}
