//! Experiment drivers behind the CLI subcommands: convergence sweeps,
//! coefficient-decay tables, energy diagnostics, field dumps and the
//! Laplace-domain check suite. Every driver writes deterministic CSV
//! (ordered parallel reductions, fixed float formatting) whose header echoes
//! the resolved configuration.

use std::collections::VecDeque;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::direct::{direct_solve_observed, energy_of_fields, DirectOptions};
use crate::error::{MfeError, Result};
use crate::grid::Grid1D;
use crate::laplace::{decay_diagnostic, sample_coupled_bounds, sample_resolvent_bounds};
use crate::mfe::{
    mfe_invariant, mfe_solve_observed, CoefficientNormAccumulator, MfeConfig, MfeState,
};
use crate::modulation::{modulation_pump_constant, ModulationSpec};
use crate::report::{fmt_f64, svg_heatmap, CsvDoc, HeatmapSpec};

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}

fn new_doc(columns: Vec<&str>, cfg: &ExperimentConfig, command: &str, t_final: f64) -> CsvDoc {
    let mut doc = CsvDoc::new(columns);
    doc.meta("artifact", "mfewave");
    doc.meta("version", env!("CARGO_PKG_VERSION"));
    doc.meta("command", command);
    doc.meta_entries(&cfg.resolved_entries(t_final));
    doc
}

/// Space-time error measure (sum over steps of the h-weighted squared
/// spatial norm)^(1/2), accumulated step by step.
#[derive(Debug, Clone, Copy, Default)]
struct ErrAccumulator {
    sum: f64,
}

impl ErrAccumulator {
    fn add(&mut self, h: f64, a: &[f64], b: &[f64]) {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.sum += h * d2;
    }
    fn err(&self) -> f64 {
        self.sum.sqrt()
    }
}

/// Time-convergence sweep: one fixed expansion reference, then the direct
/// integrator and the coupled-harmonics integrator at every swept step size,
/// both compared on their own time grid.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let t_end = cfg.t_final_or(5.0);
    let grid = cfg.grid()?;
    let spec = &cfg.modulation;
    let src = &cfg.source;
    let mfe_cfg = MfeConfig::new(cfg.truncation)?;
    let n_max = *cfg.sweep_n.iter().max().unwrap();
    for &n in &cfg.sweep_n {
        if cfg.reference_n % n != 0 || cfg.reference_n <= n {
            return Err(MfeError::Config(format!(
                "reference.n = {} must be a proper multiple of every swept n (got {n})",
                cfg.reference_n
            )));
        }
        if n_max % n != 0 {
            return Err(MfeError::Config(
                "swept step counts must nest into the largest one".into(),
            ));
        }
    }

    // Reference fields, reconstructed on the finest swept grid.
    let keep = cfg.reference_n / n_max;
    let tau_ref = t_end / cfg.reference_n as f64;
    let mut u_ref: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    mfe_solve_observed(
        &grid,
        spec,
        src,
        &mfe_cfg,
        tau_ref,
        cfg.reference_n,
        |step, fields| {
            if step % keep == 0 {
                u_ref.push(
                    fields
                        .reconstruct_at(step as f64 * tau_ref, spec.epsilon, grid.h)
                        .0,
                );
            }
        },
    )?;

    let rows: Vec<Result<(usize, f64, f64)>> = with_pool(cfg.workers, || {
        cfg.sweep_n
            .par_iter()
            .map(|&n| {
                let tau = t_end / n as f64;
                let stride = n_max / n;
                let mut mfe_err = ErrAccumulator::default();
                mfe_solve_observed(&grid, spec, src, &mfe_cfg, tau, n, |step, fields| {
                    let (u, _) = fields.reconstruct_at(step as f64 * tau, spec.epsilon, grid.h);
                    mfe_err.add(grid.h, &u, &u_ref[step * stride]);
                })?;
                let mut dir_err = ErrAccumulator::default();
                direct_solve_observed(
                    &grid,
                    spec,
                    src,
                    tau,
                    n,
                    &DirectOptions::default(),
                    |step, u, _| {
                        dir_err.add(grid.h, u, &u_ref[step * stride]);
                    },
                )?;
                Ok((n, dir_err.err(), mfe_err.err()))
            })
            .collect()
    });

    let mut doc = new_doc(
        vec![
            "tau",
            "n",
            "err_direct",
            "err_mfe",
            "err_direct_normalized",
            "err_mfe_normalized",
        ],
        cfg,
        "convergence",
        t_end,
    );
    doc.meta(
        "note",
        "*_normalized columns divide the raw error sum by sqrt(n+1)",
    );
    for row in rows {
        let (n, dir, mfe) = row?;
        let tau = t_end / n as f64;
        let norm = ((n + 1) as f64).sqrt();
        doc.push_row(vec![
            fmt_f64(tau),
            n.to_string(),
            fmt_f64(dir),
            fmt_f64(mfe),
            fmt_f64(dir / norm),
            fmt_f64(mfe / norm),
        ]);
    }
    let path = cfg.out_dir.join("convergence.csv");
    doc.write_to(&path)?;
    Ok(vec![path])
}

/// Coefficient-decay table over the (epsilon, rho) sweep: the space-time
/// norm of every nonnegative harmonic next to the geometric reference slope
/// (rho * eps)^k anchored at k = 0.
pub fn run_decay(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let t_end = cfg.t_final_or(4.0);
    let grid = cfg.grid()?;
    // The decay experiment wants many harmonics; keep 10 unless the user
    // pinned mfe.k explicitly.
    let truncation = if cfg.user_supplied("mfe.k") {
        cfg.truncation
    } else {
        10
    };
    let mfe_cfg = MfeConfig::new(truncation)?;
    let n = cfg.time_n;
    let tau = t_end / n as f64;

    let mut pairs = Vec::new();
    for &eps in &cfg.sweep_epsilon {
        for &rho in &cfg.sweep_rho {
            pairs.push((eps, rho));
        }
    }
    let results: Vec<Result<(f64, f64, Vec<f64>)>> = with_pool(cfg.workers, || {
        pairs
            .par_iter()
            .map(|&(eps, rho)| {
                let spec = ModulationSpec {
                    epsilon: eps,
                    rho,
                    ..cfg.modulation.clone()
                };
                let mut acc = CoefficientNormAccumulator::new(mfe_cfg.span(&spec), grid.h);
                mfe_solve_observed(&grid, &spec, &cfg.source, &mfe_cfg, tau, n, |_, fields| {
                    acc.accumulate(&fields);
                })?;
                Ok((eps, rho, acc.finish()))
            })
            .collect()
    });

    let mut doc = new_doc(
        vec!["epsilon", "rho", "k", "norm", "reference_slope"],
        cfg,
        "decay",
        t_end,
    );
    doc.meta("mfe.k_used", truncation.to_string());
    for res in results {
        let (eps, rho, norms) = res?;
        for (k, &norm) in norms.iter().enumerate() {
            let slope = norms[0] * (rho * eps).powi(k as i32);
            doc.push_row(vec![
                fmt_f64(eps),
                fmt_f64(rho),
                k.to_string(),
                fmt_f64(norm),
                fmt_f64(slope),
            ]);
        }
    }
    let path = cfg.out_dir.join("decay.csv");
    doc.write_to(&path)?;
    Ok(vec![path])
}

/// Energy diagnostics: the direct solver's energy series, the modulation
/// pump constant, the post-source energy change over the rho sweep, and the
/// conserved quantity of the coupled system along the same run.
pub fn run_energy(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let t_end = cfg.t_final_or(4.0);
    let grid = cfg.grid()?;
    let spec = &cfg.modulation;
    let src = &cfg.source;
    let n = cfg.time_n;
    let tau = t_end / n as f64;
    let t_off = cfg.energy_t_off;
    let pump = modulation_pump_constant(spec, &grid, 10_000);

    // Energy along the direct solve.
    let mut series = Vec::with_capacity(n + 1);
    direct_solve_observed(
        &grid,
        spec,
        src,
        tau,
        n,
        &DirectOptions::default(),
        |step, u, v| {
            let t = step as f64 * tau;
            series.push((t, energy_of_fields(u, v, t, spec, &grid)));
        },
    )?;
    let mut series_doc = new_doc(vec!["t", "energy"], cfg, "energy", t_end);
    series_doc.meta("pump_constant", fmt_f64(pump));
    for (t, e) in &series {
        series_doc.push_row(vec![fmt_f64(*t), fmt_f64(*e)]);
    }

    // Post-source energy change over the rho sweep.
    let sweep: Vec<Result<(f64, f64, f64)>> = with_pool(cfg.workers, || {
        cfg.sweep_rho
            .par_iter()
            .map(|&rho| {
                let spec_rho = ModulationSpec {
                    rho,
                    ..spec.clone()
                };
                let off_step = ((t_off / tau).round() as usize).min(n);
                let mut e_off = 0.0;
                let mut e_end = 0.0;
                direct_solve_observed(
                    &grid,
                    &spec_rho,
                    src,
                    tau,
                    n,
                    &DirectOptions::default(),
                    |step, u, v| {
                        let t = step as f64 * tau;
                        if step == off_step {
                            e_off = energy_of_fields(u, v, t, &spec_rho, &grid);
                        }
                        if step == n {
                            e_end = energy_of_fields(u, v, t, &spec_rho, &grid);
                        }
                    },
                )?;
                Ok((rho, e_off, e_end))
            })
            .collect()
    });
    let mut sweep_doc = new_doc(
        vec!["rho", "energy_at_t_off", "energy_at_t_end", "change"],
        cfg,
        "energy",
        t_end,
    );
    sweep_doc.meta("t_off", fmt_f64(t_off));
    for row in sweep {
        let (rho, e_off, e_end) = row?;
        sweep_doc.push_row(vec![
            fmt_f64(rho),
            fmt_f64(e_off),
            fmt_f64(e_end),
            fmt_f64((e_end - e_off).abs()),
        ]);
    }

    // Conserved quantity of the coupled system along the source-driven run,
    // with centered-difference time derivatives from a three-step window.
    let mfe_cfg = MfeConfig::new(cfg.truncation)?;
    let mut inv_rows: Vec<(f64, f64)> = Vec::with_capacity(n + 1);
    let mut window: VecDeque<Vec<Vec<Complex64>>> = VecDeque::new();
    mfe_solve_observed(&grid, spec, src, &mfe_cfg, tau, n, |step, fields| {
        let vecs = fields.to_vecs();
        if step == 0 {
            let w0 = vec![vec![Complex64::new(0.0, 0.0); grid.m]; vecs.len()];
            let state = MfeState {
                z: vecs.clone(),
                w: w0,
                t: 0.0,
            };
            inv_rows.push((0.0, mfe_invariant(&state, &grid, spec)));
        }
        window.push_back(vecs);
        if window.len() == 3 {
            let w: Vec<Vec<Complex64>> = window[2]
                .iter()
                .zip(&window[0])
                .map(|(hi, lo)| {
                    hi.iter()
                        .zip(lo)
                        .map(|(a, b)| (a - b) / (2.0 * tau))
                        .collect()
                })
                .collect();
            let t_mid = (step - 1) as f64 * tau;
            let state = MfeState {
                z: window[1].clone(),
                w,
                t: t_mid,
            };
            inv_rows.push((t_mid, mfe_invariant(&state, &grid, spec)));
            window.pop_front();
        }
    })?;
    let mut inv_doc = new_doc(vec!["t", "invariant"], cfg, "energy", t_end);
    for (t, e) in &inv_rows {
        inv_doc.push_row(vec![fmt_f64(*t), fmt_f64(*e)]);
    }

    let paths = vec![
        cfg.out_dir.join("energy_series.csv"),
        cfg.out_dir.join("energy_rho_sweep.csv"),
        cfg.out_dir.join("invariant_series.csv"),
    ];
    series_doc.write_to(&paths[0])?;
    sweep_doc.write_to(&paths[1])?;
    inv_doc.write_to(&paths[2])?;
    Ok(paths)
}

fn matrix_doc(
    cfg: &ExperimentConfig,
    t_end: f64,
    grid: &Grid1D,
    data: &[Vec<f64>],
    n: usize,
) -> CsvDoc {
    let mut columns = vec!["x".to_string()];
    columns.extend((0..=n).map(|j| format!("n{j}")));
    let mut doc = new_doc(
        columns.iter().map(String::as_str).collect(),
        cfg,
        "visualize",
        t_end,
    );
    doc.meta(
        "layout",
        "rows are grid nodes, columns n0..nN are time steps",
    );
    for (i, row) in data.iter().enumerate() {
        let mut cells = Vec::with_capacity(n + 2);
        cells.push(fmt_f64(grid.nodes[i]));
        cells.extend(row.iter().map(|&v| fmt_f64(v)));
        doc.push_row(cells);
    }
    doc
}

/// Field dumps: the reconstructed solution u(x, t_n) and the moduli of the
/// coefficient fields as space-by-time CSV matrices, with optional
/// self-contained SVG heatmaps.
pub fn run_visualize(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let t_end = cfg.t_final_or(4.0);
    let grid = cfg.grid()?;
    let spec = &cfg.modulation;
    let mfe_cfg = MfeConfig::new(cfg.truncation)?;
    let n = cfg.time_n;
    let tau = t_end / n as f64;
    let m = grid.m;
    let span = mfe_cfg.span(spec);

    let mut u_matrix = vec![vec![0.0f64; n + 1]; m];
    let mut z_abs = vec![vec![vec![0.0f64; n + 1]; m]; span + 1];
    mfe_solve_observed(
        &grid,
        spec,
        &cfg.source,
        &mfe_cfg,
        tau,
        n,
        |step, fields| {
            let (u, _) = fields.reconstruct_at(step as f64 * tau, spec.epsilon, grid.h);
            for i in 0..m {
                u_matrix[i][step] = u[i];
            }
            for (k, slab) in z_abs.iter_mut().enumerate() {
                let zk = fields.harmonic(k as i64);
                for i in 0..m {
                    slab[i][step] = zk[i].norm();
                }
            }
        },
    )?;

    let mut paths = Vec::new();
    let u_path = cfg.out_dir.join("u_field.csv");
    matrix_doc(cfg, t_end, &grid, &u_matrix, n).write_to(&u_path)?;
    paths.push(u_path);
    for (k, slab) in z_abs.iter().enumerate() {
        let path = cfg.out_dir.join(format!("z_abs_{k}.csv"));
        matrix_doc(cfg, t_end, &grid, slab, n).write_to(&path)?;
        paths.push(path);
    }

    if cfg.emit_svg {
        let u_svg = cfg.out_dir.join("u_field.svg");
        svg_heatmap(
            &u_matrix,
            &HeatmapSpec {
                title: "u(x, t)".into(),
                x_label: "t".into(),
                y_label: "x".into(),
                x_range: (0.0, t_end),
                y_range: (grid.a, grid.b),
                diverging: true,
            },
            &u_svg,
        )?;
        paths.push(u_svg);
        for (k, slab) in z_abs.iter().enumerate() {
            let path = cfg.out_dir.join(format!("z_abs_{k}.svg"));
            svg_heatmap(
                slab,
                &HeatmapSpec {
                    title: format!("|z_{k}(x, t)|"),
                    x_label: "t".into(),
                    y_label: "x".into(),
                    x_range: (0.0, t_end),
                    y_range: (grid.a, grid.b),
                    diverging: false,
                },
                &path,
            )?;
            paths.push(path);
        }
    }
    Ok(paths)
}

/// Laplace-domain check suite: sampled resolvent/coercivity/well-posedness
/// inequalities plus transform solves with the decay bound over the
/// configured s-grid.
pub fn run_laplace_diag(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let t_end = cfg.t_final_or(4.0);
    let grid = cfg.grid()?;
    let spec = &cfg.modulation;
    let mfe_cfg = MfeConfig::new(cfg.truncation)?;

    let mut checks_doc = new_doc(
        vec!["check", "samples", "violations", "worst_margin", "passed"],
        cfg,
        "laplace-diag",
        t_end,
    );
    let mut all = sample_resolvent_bounds(&grid, cfg.laplace_samples, cfg.laplace_seed)?;
    all.extend(sample_coupled_bounds(
        &grid,
        spec,
        &mfe_cfg,
        cfg.laplace_samples,
        cfg.laplace_seed,
    )?);
    for check in &all {
        checks_doc.push_row(vec![
            check.name.to_string(),
            check.samples.to_string(),
            check.violations.to_string(),
            fmt_f64(check.worst_margin),
            if check.passed() { "pass" } else { "fail" }.to_string(),
        ]);
    }

    // Transform solves across the configured s-grid, with the source's
    // spatial profile at onset as the right-hand side.
    let fhat: Vec<Complex64> = grid
        .nodes
        .iter()
        .map(|&x| Complex64::new(cfg.source.eval(x, cfg.source.t0), 0.0))
        .collect();
    let sigma0 = 4.0 * spec.rho / spec.epsilon;
    let mut grid_doc = new_doc(
        vec![
            "s_re",
            "s_im",
            "k",
            "h1_norm",
            "decay_bound",
            "within_decay",
            "well_posedness_ok",
        ],
        cfg,
        "laplace-diag",
        t_end,
    );
    grid_doc.meta("s_re", "4 rho / epsilon + laplace.s_re_offset");
    for &off in &cfg.laplace_s_re_offset {
        for &im in &cfg.laplace_s_im {
            let s = Complex64::new(sigma0 + off, im);
            let rows = decay_diagnostic(&grid, spec, &mfe_cfg, s, &fhat)?;
            let sol = crate::laplace::laplace_solve(&grid, spec, &mfe_cfg, s, &fhat)?;
            for row in rows {
                grid_doc.push_row(vec![
                    fmt_f64(s.re),
                    fmt_f64(s.im),
                    row.k.to_string(),
                    fmt_f64(row.h1_norm),
                    fmt_f64(row.bound),
                    if row.within { "pass" } else { "fail" }.to_string(),
                    if sol.bound_ok { "pass" } else { "fail" }.to_string(),
                ]);
            }
        }
    }

    let paths = vec![
        cfg.out_dir.join("laplace_checks.csv"),
        cfg.out_dir.join("laplace_sgrid.csv"),
    ];
    checks_doc.write_to(&paths[0])?;
    grid_doc.write_to(&paths[1])?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;

    fn tiny_config(extra: &str) -> ExperimentConfig {
        let base = format!(
            "grid.m = 24\nmfe.k = 2\ntime.n = 32\nreference.n = 256\n\
             sweep.n = 8,16,32\nsweep.rho = 0.4,0.2\nsweep.epsilon = 0.1\n\
             laplace.samples = 5\nmodulation.rho = 0.3\n{extra}"
        );
        let raw = RawConfig::parse(&base).unwrap();
        ExperimentConfig::from_raw(&raw).unwrap()
    }

    #[test]
    fn convergence_runs_and_orders_rows_by_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config("");
        cfg.out_dir = dir.path().to_path_buf();
        let paths = run_convergence(&cfg).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let data = crate::report::parse_numeric_csv(&text);
        assert_eq!(data.len(), 3);
        // rows follow the sweep order 8, 16, 32
        assert_eq!(data[0][1] as usize, 8);
        assert_eq!(data[2][1] as usize, 32);
        assert!(text.contains("# command = convergence"));
        assert!(text.contains("# grid.m = 24"));
    }

    #[test]
    fn convergence_rejects_non_nesting_reference() {
        let mut cfg = tiny_config("");
        cfg.reference_n = 24; // not a multiple of 16
        assert!(run_convergence(&cfg).is_err());
    }

    #[test]
    fn decay_emits_zero_rows_for_static_medium() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config("sweep.rho = 0\nmfe.k = 3\n");
        cfg.out_dir = dir.path().to_path_buf();
        let paths = run_decay(&cfg).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let data = crate::report::parse_numeric_csv(&text);
        for row in data.iter().filter(|r| r[2] as usize >= 1) {
            assert_eq!(row[3], 0.0, "harmonic norms must vanish at rho = 0");
        }
    }

    #[test]
    fn energy_outputs_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config("");
        cfg.out_dir = dir.path().to_path_buf();
        let paths = run_energy(&cfg).unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            assert!(p.exists(), "{p:?} missing");
        }
        let series = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(series.contains("# pump_constant ="));
    }

    #[test]
    fn visualize_matrix_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config("output.emit_svg = true\n");
        cfg.out_dir = dir.path().to_path_buf();
        let paths = run_visualize(&cfg).unwrap();
        let u_text = std::fs::read_to_string(&paths[0]).unwrap();
        let data = crate::report::parse_numeric_csv(&u_text);
        assert_eq!(data.len(), 24);
        assert_eq!(data[0].len(), 32 + 2);
        assert!(paths.iter().any(|p| p.extension().unwrap() == "svg"));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config("");
        cfg.out_dir = dir.path().to_path_buf();
        let paths = run_visualize(&cfg).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let data = crate::report::parse_numeric_csv(&text);
        // re-render the parsed numbers and compare the data section
        let data_lines: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .collect();
        for (line, row) in data_lines.iter().zip(&data) {
            let rendered: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            assert_eq!(*line, rendered.join(","));
        }
    }

    #[test]
    fn laplace_diag_passes_for_small_amplitude() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config("modulation.rho = 0.05\nlaplace.samples = 20\n");
        cfg.out_dir = dir.path().to_path_buf();
        let paths = run_laplace_diag(&cfg).unwrap();
        let checks = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(
            !checks.contains(",fail"),
            "bound suite should pass:\n{checks}"
        );
    }

    #[test]
    fn workers_do_not_change_output() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let mut cfg1 = tiny_config("");
        cfg1.out_dir = dir1.path().to_path_buf();
        cfg1.workers = 1;
        let mut cfg2 = tiny_config("");
        cfg2.out_dir = dir2.path().to_path_buf();
        cfg2.workers = 4;
        let p1 = run_convergence(&cfg1).unwrap();
        let p2 = run_convergence(&cfg2).unwrap();
        let t1 = std::fs::read_to_string(&p1[0]).unwrap();
        let t2 = std::fs::read_to_string(&p2[0]).unwrap();
        // headers echo workers; compare the data section only
        let strip = |t: &str| {
            t.lines()
                .filter(|l| !l.starts_with("# workers"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&t1), strip(&t2));
    }

    #[test]
    fn reported_errors_are_reference_independent() {
        // Doubling the reference resolution moves the reported error of an
        // asymptotic-regime sweep point by well under 5%.
        let errs: Vec<f64> = [256usize, 512]
            .iter()
            .map(|&reference| {
                let dir = tempfile::tempdir().unwrap();
                let mut cfg = tiny_config("");
                cfg.out_dir = dir.path().to_path_buf();
                cfg.reference_n = reference;
                let paths = run_convergence(&cfg).unwrap();
                let text = std::fs::read_to_string(&paths[0]).unwrap();
                let data = crate::report::parse_numeric_csv(&text);
                data.last().unwrap()[3] // err_mfe at the finest sweep point
            })
            .collect();
        let rel = (errs[0] - errs[1]).abs() / errs[1];
        assert!(
            rel < 0.05,
            "doubling the reference changed the error by {:.1}%",
            100.0 * rel
        );
    }

    #[test]
    fn static_medium_gives_identical_columns() {
        // At rho = 0 the two integrators solve the same constant-coefficient
        // equation with the same scheme; with a source that is compatible
        // with vanishing initial data their errors coincide.
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config("modulation.rho = 0\nsource.t0 = 2\ntime.t = 3\n");
        cfg.out_dir = dir.path().to_path_buf();
        let paths = run_convergence(&cfg).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        for row in crate::report::parse_numeric_csv(&text) {
            assert!(
                (row[2] - row[3]).abs() <= 1e-10 * row[3].max(1e-300),
                "direct and expansion errors differ at rho = 0: {} vs {}",
                row[2],
                row[3]
            );
        }
    }
}
