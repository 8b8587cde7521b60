use std::io::Write;
use std::path::PathBuf;

use vdd::ansatz::init_params;
use vdd::eigen::ground_energy;
use vdd::exact::to_state_vector;
use vdd::experiments::{
    figure_panels, g_sweep, training_curves, variance_scan, write_sweep_csv, VarianceScanConfig,
};
use vdd::optimize::{train, train_from};
use vdd::vmc::{build_batch, sample as draw_samples};
use vdd::{BitString, InitScheme, Model};

use crate::config::{read_input, RunConfig};
use crate::error::{CliError, Result};
use crate::output::Outputs;
use crate::svg::emit_svg;

/// Fixed-point with at most eight decimals and no trailing zeros.
fn short(x: f64) -> String {
    let s = format!("{x:.8}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn finish(mut out: Outputs, cfg: &RunConfig) -> Result<()> {
    out.write_str("resolved_config.json", &cfg.to_json())?;
    out.commit();
    Ok(())
}

pub fn build(mut cfg: RunConfig) -> Result<()> {
    let n = cfg
        .n
        .ok_or_else(|| CliError::config("n", "missing required setting `n`"))?;
    let ansatz = cfg.ansatz()?;
    let init = cfg.init.get_or_insert_with(|| "uniform".into()).clone();
    let seed = if init == "uniform" {
        cfg.seed()
    } else {
        cfg.seed.unwrap_or(0)
    };
    let scheme = InitScheme::parse(&init, seed)?;
    let g = init_params(&ansatz.build(n)?, &scheme)?;
    let mut out = Outputs::new(&cfg.output_dir())?;
    let path = out.write_str("vdd.json", &(g.to_json()? + "\n"))?;
    println!("wrote {}", path.display());
    finish(out, &cfg)
}

pub fn validate(cfg: RunConfig) -> Result<()> {
    match cfg.read_vdd() {
        Ok(g) => {
            println!(
                "valid: {} qubits, {} nodes, {} parameters",
                g.num_qubits(),
                g.node_count(),
                g.param_count()
            );
            Ok(())
        }
        Err(CliError::Engine(e)) => {
            println!("invalid: {e}");
            Err(CliError::Invalid("graph failed validation".into()))
        }
        Err(e) => Err(e),
    }
}

pub fn amplitude(cfg: RunConfig) -> Result<()> {
    let g = cfg.read_vdd()?;
    let bits = cfg.bits()?;
    if bits.len() != g.num_qubits() {
        return Err(CliError::config(
            "bits",
            format!("expected {} bits, got {}", g.num_qubits(), bits.len()),
        ));
    }
    let psi = g.amplitude(&bits)?;
    println!("modulus {}", short(psi.norm()));
    println!(
        "phase {}",
        short(if psi.norm() > 0.0 { psi.arg() } else { 0.0 })
    );
    Ok(())
}

pub fn statevector(mut cfg: RunConfig) -> Result<()> {
    let g = cfg.read_vdd()?;
    let v = to_state_vector(&g)?;
    let n = v.num_qubits();
    let mut out = Outputs::new(&cfg.output_dir())?;
    let path = out.write_with("statevector.csv", |w| {
        writeln!(w, "index,bitstring,re,im,probability")?;
        for (i, a) in v.amps().iter().enumerate() {
            let b = BitString::from_index(i, n);
            writeln!(
                w,
                "{i},{b},{:.17e},{:.17e},{:.17e}",
                a.re,
                a.im,
                a.norm_sqr()
            )?;
        }
        Ok(())
    })?;
    println!("wrote {}", path.display());
    finish(out, &cfg)
}

pub fn eigen(mut cfg: RunConfig) -> Result<()> {
    let h = cfg.model_spec()?.build()?;
    let (e, _) = ground_energy(&h)?;
    println!("{:?}", (e * 1e10).round() / 1e10 + 0.0);
    Ok(())
}

pub fn sample(mut cfg: RunConfig) -> Result<()> {
    let g = cfg.read_vdd()?;
    let count = *cfg.count.get_or_insert(1000);
    let seed = cfg.seed();
    let mut out = Outputs::new(&cfg.output_dir())?;
    if cfg.model.is_some() {
        let n = *cfg.n.get_or_insert(g.num_qubits());
        if n != g.num_qubits() {
            return Err(CliError::config(
                "n",
                format!("model has {n} qubits but the VDD has {}", g.num_qubits()),
            ));
        }
        let h = cfg.model_spec()?.build()?;
        let mode = cfg.param_mode("trig")?;
        let batch = build_batch(&g, &h, mode, count, seed)?;
        let path = out.write_with("batch.csv", |w| batch.write_csv(w))?;
        println!("energy {} ± {}", batch.energy_mean, batch.energy_stderr);
        println!("wrote {}", path.display());
    } else {
        let samples = draw_samples(&g, count, seed)?;
        let path = out.write_with("samples.csv", |w| {
            writeln!(w, "sample_index,bitstring")?;
            for (i, b) in samples.iter().enumerate() {
                writeln!(w, "{i},{b}")?;
            }
            Ok(())
        })?;
        println!("wrote {}", path.display());
    }
    finish(out, &cfg)
}

pub fn train_cmd(mut cfg: RunConfig) -> Result<()> {
    let config = cfg.train_config()?;
    let init = cfg.init.get_or_insert_with(|| "uniform".into()).clone();
    let trace = if let Some(path) = cfg.vdd.clone() {
        let text = read_input(&path, "vdd")?;
        train_from(&config, vdd::VddGraph::from_json(&text)?)?
    } else if init == "uniform" {
        train(&config)?
    } else {
        let scheme = InitScheme::parse(&init, config.seed)?;
        train_from(
            &config,
            init_params(&config.ansatz.build(config.model.n)?, &scheme)?,
        )?
    };
    let mut out = Outputs::new(&cfg.output_dir())?;
    out.write_with("trace.csv", |w| trace.write_csv(w))?;
    out.write_str("final_vdd.json", &(trace.final_graph.to_json()? + "\n"))?;
    let last = trace.last();
    match (last.energy, last.relative_error) {
        (Some(e), Some(rel)) => println!(
            "epoch {}: loss {:e}, energy {e}, relative error {rel:e}",
            last.epoch, last.loss
        ),
        _ => println!("epoch {}: loss {:e}", last.epoch, last.loss),
    }
    finish(out, &cfg)
}

pub fn variance_scan_cmd(mut cfg: RunConfig) -> Result<()> {
    let spec = cfg.model_spec_for(cfg.n.unwrap_or(2))?;
    let mut scan = VarianceScanConfig::new(spec);
    scan.n_values = cfg
        .n_values
        .get_or_insert_with(|| scan.n_values.clone())
        .clone();
    scan.num_seeds = *cfg.num_seeds.get_or_insert(scan.num_seeds);
    scan.tracked_params = cfg
        .tracked_params
        .get_or_insert_with(|| scan.tracked_params.clone())
        .clone();
    scan.base_seed = match cfg.base_seed {
        Some(s) => s,
        None => {
            let s = cfg.seed();
            cfg.base_seed = Some(s);
            s
        }
    };
    scan.param_mode = cfg.param_mode("raw")?;
    let result = variance_scan(&scan)?;
    for notice in &result.notices {
        eprintln!("{notice}");
    }
    let mut out = Outputs::new(&cfg.output_dir())?;
    out.write_with("variance.csv", |w| result.write_rows_csv(w))?;
    out.write_with("fits.csv", |w| result.write_fits_csv(w))?;
    for fit in &result.fits {
        println!(
            "{}: slope {:.4}, r2 {:.4}",
            fit.param, fit.slope, fit.r_squared
        );
    }
    finish(out, &cfg)
}

pub fn g_sweep_cmd(mut cfg: RunConfig) -> Result<()> {
    let n = *cfg.n.get_or_insert(8);
    let g_values = cfg
        .g_values
        .get_or_insert_with(|| vec![10.0, 20.0, 40.0])
        .clone();
    let epochs = *cfg.epochs.get_or_insert(10_000);
    let seed = cfg.seed();
    let rows = g_sweep(&g_values, n, epochs, seed)?;
    let mut out = Outputs::new(&cfg.output_dir())?;
    out.write_with("sweep.csv", |w| write_sweep_csv(&rows, w))?;
    for r in &rows {
        println!("g {}: relative error {:e}", r.g, r.relative_error);
    }
    finish(out, &cfg)
}

pub fn curves(mut cfg: RunConfig) -> Result<()> {
    let n = *cfg.n.get_or_insert(10);
    let epochs = *cfg.epochs.get_or_insert(10_000);
    let lr = *cfg.lr.get_or_insert(0.01);
    let seed = cfg.seed();
    let runs = training_curves(&figure_panels(n), epochs, lr, seed)?;
    let mut out = Outputs::new(&cfg.output_dir())?;
    for (spec, trace) in &runs {
        let name = match spec.model {
            Model::Z1Z2 => "curve_z1z2.csv".to_string(),
            Model::Tfim => format!("curve_tfim_g{}.csv", spec.g),
            Model::Heisenberg => format!("curve_heisenberg_j{}.csv", spec.jz),
        };
        let path = out.write_with(&name, |w| trace.write_csv(w))?;
        println!("wrote {}", path.display());
    }
    finish(out, &cfg)
}

pub fn plot(mut cfg: RunConfig) -> Result<()> {
    let csv_path = cfg
        .csv
        .clone()
        .ok_or_else(|| CliError::config("csv", "missing required setting `csv`"))?;
    let x = cfg
        .x
        .clone()
        .ok_or_else(|| CliError::config("x", "missing required setting `x`"))?;
    let y = cfg
        .y
        .clone()
        .ok_or_else(|| CliError::config("y", "missing required setting `y`"))?;
    let log_y = cfg.log_y.unwrap_or(false);
    let svg = emit_svg(&read_input(&csv_path, "csv")?, &x, &y, log_y)?;
    let target = match cfg.out.clone() {
        Some(p) => p,
        None => cfg.output_dir().join(format!("{y}.svg")),
    };
    let dir = target.parent().map(PathBuf::from).unwrap_or_default();
    let name = target
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::config("out", "not a file path"))?;
    let dir = if dir.as_os_str().is_empty() {
        PathBuf::from(".")
    } else {
        dir
    };
    let mut out = Outputs::new(&dir)?;
    let path = out.write_str(name, &svg)?;
    out.commit();
    println!("wrote {}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::short;

    #[test]
    fn short_numbers_drop_trailing_zeros() {
        assert_eq!(short(1.4), "1.4");
        assert_eq!(short(0.415692193816531), "0.41569219");
        assert_eq!(short(-0.0), "0");
        assert_eq!(short(2.0), "2");
    }
}
