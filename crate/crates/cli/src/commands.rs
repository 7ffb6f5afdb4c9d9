use anyhow::{Context as _, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use icdsim_core::energy::EnergyQuery;
use icdsim_core::power::TABULATED_BITS;
use icdsim_core::sweepsim::{simulate_traced, verify_against_analytic, verify_pss_structure, write_trace_csv};
use icdsim_core::{
    build_pss_structure, directional_scans, pss_schedule, AdcClass, Architecture, FrameAnchor, IcdModel,
    PowerMode, PowerTable, Scenario, SimOptions, SweepOrder, Target,
};

use crate::config::{Format, NamedArch, RunConfig};
use crate::output::{Sink, Table};

/// Everything a command needs, resolved once from the config.
pub struct Context {
    pub cfg: RunConfig,
    pub archs: Vec<NamedArch>,
    pub scenarios: Vec<Scenario>,
    pub model: IcdModel,
    pub mode: Option<PowerMode>,
    pub sink: Sink,
}

impl Context {
    pub fn new(cfg: RunConfig, sink: Sink) -> Result<Self> {
        let archs = cfg.resolve_architectures()?;
        let scenarios = cfg.resolve_scenarios()?;
        let table = match &cfg.power_table {
            Some(path) => PowerTable::from_path(path).with_context(|| format!("loading {}", path.display()))?,
            None => PowerTable::bundled(),
        };
        // tabulated powers describe the default receivers, so calibrate on those
        let model = IcdModel::new(cfg.geometry, FrameAnchor::default(), table, &Architecture::defaults(), cfg.adc_law)
            .context("calibrating the power model")?;
        Ok(Self { mode: cfg.power_mode, cfg, archs, scenarios, model, sink })
    }

    fn mode_or(&self, default: PowerMode) -> PowerMode {
        self.mode.unwrap_or(default)
    }
}

fn num(x: f64) -> Value {
    json!(x)
}

fn table_stem(class: AdcClass) -> &'static str {
    match class {
        AdcClass::Hpadc => "tables-iii",
        AdcClass::Lpadc => "tables-iv",
    }
}

pub fn tables(ctx: &mut Context) -> Result<bool> {
    let mode = ctx.mode_or(PowerMode::Lookup);
    let m = &ctx.model;

    let mut t1 = Table::new(["b_sc_hz", "t_pss_s", "b_tot_hz", "b_tot_mhz"]);
    for &b in &ctx.cfg.b_sc_hz {
        let f = m.frame(b)?;
        let mhz: f64 = f.b_tot_mhz_display().parse()?;
        t1.push(vec![num(b), num(f.t_pss), num(f.b_tot), num(mhz)]);
    }

    let mut t2 = Table::new(["architecture", "scenario", "b_sc_hz", "n_d", "t_pss_s", "t_ci_s", "t_del_s"]);
    for a in &ctx.archs {
        for s in &ctx.scenarios {
            for &b in &ctx.cfg.b_sc_hz {
                let f = m.frame(b)?;
                let n_d = directional_scans(&a.arch, s, &m.geometry);
                let t_ci = s.ci_delay_for(&a.arch);
                t2.push(vec![
                    json!(a.label),
                    json!(s.kind()),
                    num(b),
                    json!(n_d),
                    num(f.t_pss),
                    num(t_ci),
                    num(icdsim_core::total_delay(&a.arch, s, &m.geometry, &f)),
                ]);
            }
        }
    }

    let mut power_tables = Vec::new();
    for class in AdcClass::ALL {
        let adc = m.adc(class, TABULATED_BITS)?;
        let mut t = match mode {
            PowerMode::Lookup => Table::new(["architecture", "adc_class", "b_sc_hz", "power_w"]),
            PowerMode::Parametric => {
                Table::new(["architecture", "adc_class", "b_sc_hz", "power_w", "table_w", "rel_residual"])
            }
        };
        for a in &ctx.archs {
            for &b in &ctx.cfg.b_sc_hz {
                let p = m.receiver_power(&a.arch, &adc, b, mode)?;
                let mut row = vec![json!(a.label), json!(class), num(b), num(p)];
                if mode == PowerMode::Parametric {
                    let tabulated = (a.arch == Architecture::default_for(a.arch.kind()))
                        .then(|| m.table.get(a.arch.kind(), class, b))
                        .flatten();
                    row.push(tabulated.map_or(Value::Null, num));
                    row.push(tabulated.map_or(Value::Null, |t| num((p - t) / t)));
                }
                t.push(row);
            }
        }
        power_tables.push((table_stem(class), t));
    }

    ctx.sink.table("tables-i", &t1)?;
    ctx.sink.table("tables-ii", &t2)?;
    for (stem, t) in &power_tables {
        ctx.sink.table(stem, t)?;
    }
    ctx.sink.json("calibration", &ctx.model.power)?;
    Ok(true)
}

pub fn sweep(ctx: &mut Context) -> Result<bool> {
    let mode = ctx.mode_or(PowerMode::Lookup);
    let m = &ctx.model;
    let mut groups = Vec::new();
    let mut queries = Vec::new();
    for s in &ctx.scenarios {
        for &class in &ctx.cfg.adc_classes {
            for &bits in &ctx.cfg.bits {
                groups.push((*s, class, bits));
                let adc = m.adc(class, bits)?;
                for &b in &ctx.cfg.b_sc_hz {
                    for a in &ctx.archs {
                        queries.push(EnergyQuery { arch: a.arch, scenario: *s, adc, b_sc: b, mode });
                    }
                }
            }
        }
    }
    let reports = m.energy_batch(&queries)?;

    let mut all = Table::from_records(&reports)?;
    for (row, label) in all.rows.iter_mut().zip(ctx.archs.iter().cycle()) {
        row[0] = json!(label.label);
    }

    let per_group = ctx.cfg.b_sc_hz.len() * ctx.archs.len();
    let mut files = Vec::new();
    for ((s, class, bits), chunk) in groups.iter().zip(reports.chunks(per_group)) {
        let mut t = Table::new(std::iter::once("b_sc_hz".to_string()).chain(ctx.archs.iter().map(|a| a.label.clone())));
        for (&b, row) in ctx.cfg.b_sc_hz.iter().zip(chunk.chunks(ctx.archs.len())) {
            t.push(std::iter::once(num(b)).chain(row.iter().map(|r| num(r.e_total_j))).collect());
        }
        files.push((format!("sweep-{}-{}-{}b", s.kind(), class, bits), t));
    }
    for (stem, t) in &files {
        ctx.sink.table(stem, t)?;
    }
    ctx.sink.table("energy-reports", &all)?;
    Ok(true)
}

pub fn convergence(ctx: &mut Context) -> Result<bool> {
    let m = &ctx.model;
    let mut t = Table::new(
        ["scenario", "adc_class", "bits"].into_iter().map(String::from).chain(ctx.archs.iter().map(|a| a.label.clone())),
    );
    for s in &ctx.scenarios {
        for &class in &ctx.cfg.adc_classes {
            for &bits in &ctx.cfg.convergence_bits {
                let adc = m.adc(class, bits)?;
                let mut row = vec![json!(s.kind()), json!(class), json!(bits)];
                row.extend(ctx.archs.iter().map(|a| num(m.convergence_value(&a.arch, &adc, s))));
                t.push(row);
            }
        }
    }
    ctx.sink.table("convergence", &t)?;
    Ok(true)
}

pub fn verify(ctx: &mut Context) -> Result<bool> {
    let m = &ctx.model;
    let mut t = Table::new([
        "architecture", "scenario", "order", "b_sc_hz", "targets", "analytic_s", "min_s", "mean_s", "max_s",
        "worst_bs", "worst_ms", "pass",
    ]);
    let mut combos_passed = 0;
    for a in &ctx.archs {
        for s in &ctx.scenarios {
            let mut ok = true;
            for &b in &ctx.cfg.b_sc_hz {
                let f = m.frame(b)?;
                for order in SweepOrder::ALL {
                    let r = verify_against_analytic(&a.arch, s, &m.geometry, &f, order)?;
                    ok &= r.pass;
                    t.push(vec![
                        json!(a.label),
                        json!(r.scenario),
                        json!(r.order),
                        num(b),
                        json!(r.targets),
                        num(r.analytic_s),
                        num(r.min_s),
                        num(r.mean_s),
                        num(r.max_s),
                        json!(r.worst_target.bs),
                        json!(r.worst_target.ms),
                        json!(r.pass),
                    ]);
                }
            }
            if ok {
                combos_passed += 1;
            } else {
                eprintln!("mismatch: {} {}", a.label, s.kind());
            }
        }
    }
    let total = ctx.archs.len() * ctx.scenarios.len();
    ctx.sink.table("verify", &t)?;
    if let Some(spec) = ctx.cfg.trace.clone() {
        trace(ctx, &spec)?;
    }
    println!("{combos_passed}/{total} combinations pass");
    Ok(combos_passed == total)
}

fn trace(ctx: &mut Context, spec: &crate::config::TraceSpec) -> Result<()> {
    let arch = ctx.archs.iter().find(|a| a.label == spec.architecture).expect("validated").arch;
    let scenario =
        ctx.scenarios.iter().find(|s| s.kind() == spec.scenario).copied().unwrap_or(Scenario::default_for(spec.scenario));
    let frame = ctx.model.frame(spec.b_sc_hz)?;
    let (_, events) =
        simulate_traced(&arch, &scenario, &ctx.model.geometry, &frame, Target::new(spec.bs, spec.ms), SimOptions::default())?;
    match ctx.cfg.format {
        Format::Csv => ctx.sink.csv_with("trace", |buf| Ok(write_trace_csv(&events, buf)?)),
        Format::Json => ctx.sink.json("trace", &json!({ "events": events })),
    }
}

pub fn pss(ctx: &mut Context) -> Result<bool> {
    let mode = ctx.mode_or(PowerMode::Parametric);
    let m = &ctx.model;
    let base = ctx.cfg.pss_b_sc_hz;
    let frame = m.frame(base)?;
    let structures = ctx
        .cfg
        .k
        .iter()
        .map(|&k| build_pss_structure(&frame, k, ctx.cfg.cp_fraction))
        .collect::<icdsim_core::Result<Vec<_>>>()?;

    // worst-case discovery under each structure, independent of the ADC
    let mut jobs = Vec::new();
    for a in &ctx.archs {
        for s in &ctx.scenarios {
            jobs.extend(structures.iter().map(|st| (a, s, st)));
        }
    }
    let sims = jobs
        .into_par_iter()
        .map(|(a, s, st)| verify_pss_structure(&a.arch, s, st, &m.geometry, &frame, SweepOrder::SequentialBsOuter))
        .collect::<icdsim_core::Result<Vec<_>>>()?;

    let mut t = Table::new([
        "architecture", "scenario", "adc_class", "bits", "k", "base_b_sc_hz", "pss_b_sc_hz", "t_del_s",
        "simulated_worst_s", "e_total_j", "baseline_e_total_j", "base_e_total_j", "delay_ratio", "energy_ratio",
    ]);
    let mut sim = sims.iter();
    let mut all_match = true;
    for a in &ctx.archs {
        for s in &ctx.scenarios {
            for st in &structures {
                let rep = sim.next().expect("one simulation per structure");
                all_match &= rep.pass;
                for &class in &ctx.cfg.adc_classes {
                    for &bits in &ctx.cfg.bits {
                        let adc = m.adc(class, bits)?;
                        let c = m.proposed_structure_energy(&a.arch, s, &adc, base, st.k, mode)?;
                        t.push(vec![
                            json!(a.label),
                            json!(s.kind()),
                            json!(class),
                            json!(bits),
                            json!(st.k),
                            num(base),
                            num(c.pss_b_sc_hz),
                            num(c.proposed.t_del_s),
                            num(rep.max_s),
                            num(c.proposed.e_total_j),
                            num(c.baseline.e_total_j),
                            num(c.base.e_total_j),
                            num(c.delay_ratio),
                            num(c.energy_ratio),
                        ]);
                    }
                }
            }
        }
    }

    let n = m.geometry.n_bs_directions;
    let mut sched = Table::new(["k", "direction", "slot", "position", "start_s", "duration_s"]);
    for st in &structures {
        for tx in pss_schedule(st, n)? {
            sched.push(vec![
                json!(st.k),
                json!(tx.direction),
                json!(tx.slot),
                json!(tx.position),
                num(tx.start_s),
                num(tx.duration_s),
            ]);
        }
    }
    ctx.sink.table("pss", &t)?;
    ctx.sink.table("pss-schedule", &sched)?;
    if !all_match {
        eprintln!("simulated worst case differs from the analytic delay");
    }
    Ok(all_match)
}
