//! Independent oracles for the closed-form models. Expected numbers were
//! computed outside this crate (numpy least squares, hand arithmetic) and
//! frozen here.

use std::collections::HashSet;

use icdsim_core::architectures::{scan_time, ArchKind, Architecture, Scenario, SweepGeometry};
use icdsim_core::energy::IcdModel;
use icdsim_core::power::{AdcClass, PowerMode, PowerTable};
use icdsim_core::signaling::{build_pss_structure, derive_frame, pss_schedule};
use icdsim_core::sweepsim::{simulate, SimOptions, SweepOrder, Target};

const TABLE_BSC: [f64; 5] = [15e3, 250e3, 500e3, 1e6, 10e6];

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn arch(kind: ArchKind) -> Architecture {
    Architecture::default_for(kind)
}

fn table_power(kind: ArchKind, class: AdcClass, b_sc: f64) -> f64 {
    PowerTable::bundled().get(kind, class, b_sc).unwrap()
}

/// Slope between the 15 kHz and 10 MHz table rows, against B_Tot.
fn two_point_slope(kind: ArchKind, class: AdcClass) -> f64 {
    let lo = derive_frame(15e3).unwrap().b_tot;
    let hi = derive_frame(10e6).unwrap().b_tot;
    (table_power(kind, class, 10e6) - table_power(kind, class, 15e3)) / (hi - lo)
}

#[test]
fn dbf_two_point_slope_matches_fit() {
    let oracle = two_point_slope(ArchKind::Dbf, AdcClass::Hpadc);
    assert!(rel(oracle, 2.56e-8) < 0.01, "two-point slope {oracle}");
    let model = IcdModel::reference();
    let cal = model.power.class(AdcClass::Hpadc).unwrap();
    let free = cal.free_fits.iter().find(|f| f.architecture == ArchKind::Dbf).unwrap();
    assert!(rel(free.slope_w_per_hz, oracle) < 0.05);
    let pooled = cal.slope_per_adc_w_per_hz * 32.0;
    assert!(rel(pooled, oracle) < 0.05);
}

#[test]
fn slope_ratios_follow_adc_counts() {
    for class in AdcClass::ALL {
        let abf = two_point_slope(ArchKind::Abf, class);
        let ratios: Vec<f64> = [ArchKind::Dbf, ArchKind::Hbf, ArchKind::Psn]
            .iter()
            .map(|&k| two_point_slope(k, class) / abf)
            .collect();
        if class == AdcClass::Hpadc {
            assert!(rel(ratios[0], 16.0) < 0.02, "{ratios:?}");
            assert!(rel(ratios[1], 4.0) < 0.02, "{ratios:?}");
            assert!(rel(ratios[2], 1.0) < 0.02, "{ratios:?}");
        }
        // the model's slope ratios are exactly the ADC-count ratios
        let m = IcdModel::reference();
        let cal = m.power.class(class).unwrap();
        assert_eq!(cal.n_adc[&ArchKind::Dbf] / cal.n_adc[&ArchKind::Abf], 16);
        assert_eq!(cal.n_adc[&ArchKind::Hbf] / cal.n_adc[&ArchKind::Abf], 4);
    }
}

#[test]
fn pooled_fit_frozen_values() {
    let m = IcdModel::reference();
    let hp = m.power.class(AdcClass::Hpadc).unwrap();
    assert!(rel(hp.slope_per_adc_w_per_hz, 7.987790394379e-10) < 1e-9);
    assert!(rel(hp.c, 1.248092249122e-11) < 1e-9);
    assert!(rel(hp.base_w[&ArchKind::Dbf], 1.302799121671795) < 1e-9);
    assert!(rel(hp.base_w[&ArchKind::Psn], 2.484754945104482) < 1e-9);
    assert!(rel(hp.max_rel_residual, 0.02893288434536911) < 1e-6);
    let lp = m.power.class(AdcClass::Lpadc).unwrap();
    assert!(rel(lp.c, 4.936389698456e-13) < 1e-9);
    assert!(rel(lp.base_w[&ArchKind::Hbf], 2.426494233788893) < 1e-9);
    assert!(rel(lp.max_rel_residual, 0.004059471026933672) < 1e-6);
}

#[test]
fn parametric_spot_values() {
    let m = IcdModel::reference();
    let adc = m.adc(AdcClass::Hpadc, 6).unwrap();
    let p = m.receiver_power(&arch(ArchKind::Abf), &adc, 1e6, PowerMode::Parametric).unwrap();
    assert!(rel(p, 1.15) < 0.05);
    let p = m.receiver_power(&arch(ArchKind::Dbf), &adc, 10e6, PowerMode::Parametric).unwrap();
    assert!(rel(p, 25.16) < 0.05);
}

#[test]
fn convergence_matches_fitted_slope() {
    let m = IcdModel::reference();
    let adc = m.adc(AdcClass::Hpadc, 6).unwrap();
    let conv = m.convergence_value(&arch(ArchKind::Abf), &adc, &Scenario::nci());
    // 1024 scans x 2 ADCs x per-ADC slope x (B_Tot * T_PSS = 7000)
    let per_adc = m.power.class(AdcClass::Hpadc).unwrap().slope_per_adc_w_per_hz;
    assert!(rel(conv, 2048.0 * per_adc * 7000.0) < 1e-9);
    assert!(rel(conv, 1.1451296309e-2) < 1e-8);
    let from_table = two_point_slope(ArchKind::Abf, AdcClass::Hpadc) / 2.0 * 2048.0 * 7000.0;
    assert!(rel(conv, from_table) < 0.01);
    assert!(rel(conv, 11.5e-3) < 0.01);
}

#[test]
fn energy_spot_values_by_hand() {
    let m = IcdModel::reference();
    let adc = m.adc(AdcClass::Hpadc, 6).unwrap();
    let e = |k, s: Scenario| m.energy(&arch(k), &s, &adc, 15e3, PowerMode::Lookup).unwrap().e_total_j;
    assert!(rel(e(ArchKind::Abf, Scenario::nci()), 5.12) < 1e-9);
    assert!(rel(e(ArchKind::Dbf, Scenario::nci()), 1.31 * 64.0 * 5e-3) < 1e-9);
    assert!(rel(e(ArchKind::Abf, Scenario::cid()), 0.47) < 1e-9);
}

/// DBF and PSN energies cross where
/// `T0 * (256 bP - 64 bD) / b = 1536 * 7000 * s'`, `T0 = T_PSS * B_SC = 75`.
fn crossover_closed_form(m: &IcdModel, class: AdcClass, bits: u32) -> f64 {
    let cal = m.power.class(class).unwrap();
    let s = cal.c * 2f64.powi(bits as i32);
    let (b_psn, b_dbf) = (cal.base_w[&ArchKind::Psn], cal.base_w[&ArchKind::Dbf]);
    75.0 * (256.0 * b_psn - 64.0 * b_dbf) / (1536.0 * 7000.0 * s)
}

#[test]
fn crossover_bisection_matches_closed_form() {
    let m = IcdModel::reference();
    let frozen = [
        (AdcClass::Hpadc, 6, 4.826686e6),
        (AdcClass::Hpadc, 10, 3.016679e5),
        (AdcClass::Lpadc, 6, 1.119787e8),
        (AdcClass::Lpadc, 10, 6.998668e6),
    ];
    for (class, bits, expected) in frozen {
        let adc = m.adc(class, bits).unwrap();
        let found = m
            .crossover_b_sc(&arch(ArchKind::Dbf), &arch(ArchKind::Psn), &Scenario::nci(), &adc, PowerMode::Parametric, 1e3, 1e11)
            .unwrap()
            .expect("curves cross");
        let closed = crossover_closed_form(&m, class, bits);
        assert!(rel(found, closed) < 1e-9, "{class} {bits}: {found} vs {closed}");
        assert!(rel(found, expected) < 1e-5, "{class} {bits}: {found} vs frozen {expected}");
    }
}

#[test]
fn schedule_enumeration() {
    let s = build_pss_structure(&derive_frame(250e3).unwrap(), 8, 0.07).unwrap();
    let sched = pss_schedule(&s, 64).unwrap();
    let dirs: HashSet<usize> = sched.iter().map(|t| t.direction).collect();
    assert_eq!(dirs.len(), 64);
    assert_eq!(sched.len(), 64);
    let slots: HashSet<usize> = sched.iter().map(|t| t.slot).collect();
    assert_eq!(slots.len(), 8);
    for w in sched.windows(2) {
        assert!(w[0].start_s + w[0].duration_s <= w[1].start_s + 1e-15);
        if w[0].slot == w[1].slot {
            assert_eq!(w[0].direction + 1, w[1].direction);
        }
    }
}

/// Max over all 1024 targets, straight from the simulator.
fn worst_case(kind: ArchKind, scenario: Scenario, b_sc: f64, order: SweepOrder) -> f64 {
    let geom = SweepGeometry::default();
    let frame = derive_frame(b_sc).unwrap();
    let a = arch(kind);
    let mut worst: f64 = 0.0;
    for bs in 0..64 {
        for ms in 0..16 {
            let r = simulate(&a, &scenario, &geom, &frame, Target::new(bs, ms), SimOptions { order, ci_direction: None })
                .unwrap();
            worst = worst.max(r.discovery_time_s);
        }
    }
    worst
}

#[test]
fn simulated_worst_cases() {
    assert_eq!(worst_case(ArchKind::Abf, Scenario::nci(), 15e3, SweepOrder::SequentialBsOuter), 1024.0 * 5e-3);
    assert_eq!(worst_case(ArchKind::Hbf, Scenario::nci(), 15e3, SweepOrder::SequentialMsOuter), 256.0 * 5e-3);
    for &b in &TABLE_BSC {
        let t_pss = derive_frame(b).unwrap().t_pss;
        assert_eq!(worst_case(ArchKind::Dbf, Scenario::nci(), b, SweepOrder::SequentialBsOuter), 64.0 * t_pss);
    }
    for kind in ArchKind::ALL {
        assert_eq!(worst_case(kind, Scenario::cind(), 15e3, SweepOrder::SequentialBsOuter), 64.0 * 5e-3);
    }
}

#[test]
fn scan_time_excludes_ci() {
    let geom = SweepGeometry::default();
    let frame = derive_frame(1e6).unwrap();
    let t = scan_time(&arch(ArchKind::Hbf), &Scenario::cid(), &geom, &frame);
    assert!(rel(t, 64.0 * 75e-6) < 1e-12);
}
