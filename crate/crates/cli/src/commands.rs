//! Subcommand implementations.
//!
//! Every command prints a deterministic text report to standard output and,
//! where an `--out` directory is given, CSV artifacts (first column `t` or
//! `eps`, then flattened matrix/vector columns, LF line endings, floats with
//! 9 significant digits).  Exit codes: 0 success, 2 parse failure, 3
//! model-check failure, 4 nonexistence, 5 numeric failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rex_core::model::{check_regular, check_weak_consistency, check_well_posed, ModelCM};
use rex_core::polyalg::{polyeig, ImpulseSeq, MatrixPoly, Properness, RationalMatrix};
use rex_core::realize::{minimal_realization, StateSpace};
use rex_core::selection::{
    eig_bound_large_gain, gain_sweep, select_least_squares, select_stability, Determinacy,
};
use rex_core::solver::{
    forecast_f0, simulate_paths, solve_general, solve_total, GeneralFreeParams,
};
use rex_core::{Error as CoreError, Tolerances};

use crate::modelfile::{parse_model, FileError, ModelFile, ParsedModel};

/// Command failure with its process exit code.
#[derive(Debug)]
pub struct CmdError {
    pub code: i32,
    pub msg: String,
}

pub type CmdResult = Result<(), CmdError>;

fn fail(code: i32, msg: impl Into<String>) -> CmdError {
    CmdError {
        code,
        msg: msg.into(),
    }
}

impl From<FileError> for CmdError {
    fn from(e: FileError) -> Self {
        let code = match e {
            FileError::Invariant(_) => 3,
            _ => 2,
        };
        fail(code, e.to_string())
    }
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::NoSolution { .. } | CoreError::InconsistentInitialConditions => 4,
            CoreError::NotRegular
            | CoreError::NotWellPosed
            | CoreError::NotWeaklyConsistent
            | CoreError::ZeroAhat => 3,
            CoreError::DimensionMismatch(_) => 2,
            _ => 5,
        };
        fail(code, e.to_string())
    }
}

/// Source of the free parameter `Ahat F0`.
#[derive(Debug, Clone)]
pub enum Af0Spec {
    /// Least-squares selection (`-B_par`).
    Lsq,
    /// Stability selection; fails unless the model is determinate.
    Stable,
    /// A file containing a matrix literal (rows joined by `;` or newlines).
    Path(PathBuf),
}

impl std::str::FromStr for Af0Spec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "lsq" => Af0Spec::Lsq,
            "stable" => Af0Spec::Stable,
            other => Af0Spec::Path(PathBuf::from(other)),
        })
    }
}

fn resolve_af0(
    model: &ModelCM,
    spec: &Af0Spec,
    tol: &Tolerances,
) -> Result<DMatrix<f64>, CmdError> {
    match spec {
        Af0Spec::Lsq => Ok(select_least_squares(model, tol)?),
        Af0Spec::Stable => {
            let report = select_stability(model, tol)?;
            match report.af0 {
                Some(af0) => Ok(af0),
                None => Err(fail(
                    4,
                    format!(
                        "stability selection is not determinate: {:?} (unstable eigenvalues: {})",
                        report.classification,
                        fmt_eigs(&report.unstable_eigs)
                    ),
                )),
            }
        }
        Af0Spec::Path(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| fail(2, format!("cannot read {}: {e}", p.display())))?;
            let normalized = text
                .lines()
                .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
                .collect::<Vec<_>>()
                .join(" ; ");
            let rows: Vec<Vec<f64>> = normalized
                .split(';')
                .map(|row| {
                    row.split_whitespace()
                        .map(|tok| {
                            tok.parse::<f64>()
                                .map_err(|_| fail(2, format!("`{tok}` is not a number")))
                        })
                        .collect()
                })
                .collect::<Result<_, _>>()?;
            let rows: Vec<Vec<f64>> = rows.into_iter().filter(|r| !r.is_empty()).collect();
            if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
                return Err(fail(2, "matrix file rows must be nonempty and equal length"));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            let m = DMatrix::from_row_slice(rows.len(), rows[0].len(), &flat);
            if m.shape() != (model.n(), model.m()) {
                return Err(fail(
                    2,
                    format!(
                        "Ahat F0 must be {} x {}, file has {} x {}",
                        model.n(),
                        model.m(),
                        m.nrows(),
                        m.ncols()
                    ),
                ));
            }
            Ok(m)
        }
    }
}

fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn fmt_eigs(eigs: &[Complex64]) -> String {
    let mut out = String::new();
    for (i, z) in eigs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        if z.im.abs() < 1e-12 * (1.0 + z.re.abs()) {
            let _ = write!(out, "{:.7}", z.re);
        } else {
            let _ = write!(out, "{:.7}{:+.7}i", z.re, z.im);
        }
    }
    out
}

fn print_matrix(name: &str, m: &DMatrix<f64>) {
    println!("{name} =");
    for i in 0..m.nrows() {
        let mut line = String::from(" ");
        for j in 0..m.ncols() {
            let _ = write!(line, " {:>12.7}", m[(i, j)]);
        }
        println!("{line}");
    }
}

fn write_csv(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> CmdResult {
    std::fs::create_dir_all(dir)
        .map_err(|e| fail(5, format!("cannot create {}: {e}", dir.display())))?;
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let path = dir.join(name);
    std::fs::write(&path, out).map_err(|e| fail(5, format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn impulse_csv(dir: &Path, name: &str, label: &str, seq: &ImpulseSeq) -> CmdResult {
    let mut header = vec!["t".to_string()];
    for r in 0..seq.rows() {
        for c in 0..seq.cols() {
            header.push(format!("{label}[{r}][{c}]"));
        }
    }
    let rows: Vec<Vec<String>> = (0..seq.len())
        .map(|t| {
            let mut row = vec![t.to_string()];
            let m = seq.term(t);
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    row.push(sig9(m[(r, c)]));
                }
            }
            row
        })
        .collect();
    write_csv(dir, name, &header, &rows)
}

fn load(path: &Path, tol: &Tolerances) -> Result<ModelFile, CmdError> {
    Ok(parse_model(path, tol)?)
}

/// `check`: regularity, well-posedness, weak consistency, eigenvalues.
pub fn cmd_check(path: &Path, tol: &Tolerances) -> CmdResult {
    let mf = load(path, tol)?;
    match &mf.model {
        ParsedModel::Cm(model) => {
            println!("model: [matrices] n={} m={}", model.n(), model.m());
            let regular = check_regular(model, tol);
            println!("regular: {}", if regular { "yes" } else { "no" });
            let wp = check_well_posed(model, tol)?;
            println!("well-posed: {}", if wp { "yes" } else { "no" });
            if let Some(ic) = &mf.init {
                let wc = check_weak_consistency(model, ic, tol);
                println!("weakly consistent initial conditions: {}", if wc { "yes" } else { "no" });
            }
            let es = polyeig(&model.char_matrix(), tol)?;
            println!("finite eigenvalues: {}", fmt_eigs(&es.finite));
            println!("eigenvalues at infinity: {}", es.infinite_count);
            let unstable: Vec<Complex64> = es
                .finite
                .iter()
                .copied()
                .filter(|z| z.norm() > 1.0 + tol.unstable_margin)
                .collect();
            println!("unstable ({}): {}", unstable.len(), fmt_eigs(&unstable));
            if !regular || !wp {
                return Err(fail(3, "model check failed"));
            }
        }
        ParsedModel::General(gm) => {
            println!(
                "model: [general] n={} m={} h={} l={}",
                gm.n(),
                gm.m(),
                gm.h(),
                gm.l()
            );
            println!("regular: yes");
            let shortcut = RationalMatrix::left_mfd(
                gm.d_poly(),
                MatrixPoly::identity(gm.n()).shift(gm.h() + gm.l() - 1),
                tol,
            )?
            .classify(tol)?
                != Properness::Improper;
            println!(
                "existence for all free parameters: {}",
                if shortcut { "yes" } else { "not guaranteed" }
            );
            let es = polyeig(&gm.d_poly(), tol)?;
            println!("finite eigenvalues of D[z]: {}", fmt_eigs(&es.finite));
            println!("eigenvalues at infinity: {}", es.infinite_count);
        }
    }
    Ok(())
}

/// `eig`: eigenvalues of the characteristic matrix, with the large-gain
/// bound when `Ahat` is nonsingular.
pub fn cmd_eig(path: &Path, tol: &Tolerances) -> CmdResult {
    let mf = load(path, tol)?;
    let poly = match &mf.model {
        ParsedModel::Cm(model) => model.char_matrix(),
        ParsedModel::General(gm) => gm.d_poly(),
    };
    let mut es = polyeig(&poly, tol)?;
    es.attach_left_vectors(&poly, tol)?;
    let vecs = es.left_vectors.as_ref().expect("just attached");
    println!("finite eigenvalues ({}):", es.finite.len());
    for (z, c) in es.finite.iter().zip(vecs) {
        let flag = if z.norm() > 1.0 + tol.unstable_margin {
            "  unstable"
        } else {
            ""
        };
        let mut cs = String::new();
        for (k, entry) in c.iter().enumerate() {
            if k > 0 {
                cs.push(' ');
            }
            if entry.im.abs() < 1e-9 {
                let _ = write!(cs, "{:.7}", entry.re);
            } else {
                let _ = write!(cs, "{:.7}{:+.7}i", entry.re, entry.im);
            }
        }
        println!("  {}  |z| = {:.7}{flag}  left vector [{cs}]", fmt_eigs(&[*z]), z.norm());
    }
    println!("eigenvalues at infinity: {}", es.infinite_count);
    if let ParsedModel::Cm(model) = &mf.model {
        if let Ok(bound) = eig_bound_large_gain(model, tol) {
            println!("large-gain modulus bound: {bound:.7}");
        }
    }
    Ok(())
}

/// `solve`: total response for the chosen free parameter; writes `G.csv`,
/// `F.csv`, `xbar.csv`.
pub fn cmd_solve(
    path: &Path,
    af0_spec: &Af0Spec,
    horizon: usize,
    out: Option<&Path>,
    tol: &Tolerances,
) -> CmdResult {
    let mf = load(path, tol)?;
    match &mf.model {
        ParsedModel::Cm(model) => {
            let af0 = resolve_af0(model, af0_spec, tol)?;
            let ic = mf.init_or_zero();
            let sol = solve_total(model, &af0, &ic, horizon, tol)?;
            print_matrix("Ahat F0", &sol.af0);
            print_matrix("error coefficient (Ahat F0 + B = G_0)", &sol.error_coeff);
            println!("horizon: {horizon}");
            if let Some(dir) = out {
                impulse_csv(dir, "G.csv", "G", &sol.gt)?;
                impulse_csv(dir, "F.csv", "F", &sol.ft)?;
                let mut header = vec!["t".to_string()];
                for i in 0..model.n() {
                    header.push(format!("xbar[{i}]"));
                }
                let rows: Vec<Vec<String>> = sol
                    .xbar
                    .iter()
                    .enumerate()
                    .map(|(t, v)| {
                        let mut row = vec![t.to_string()];
                        row.extend(v.iter().map(|x| sig9(*x)));
                        row
                    })
                    .collect();
                write_csv(dir, "xbar.csv", &header, &rows)?;
                println!("wrote G.csv, F.csv, xbar.csv to {}", dir.display());
            }
        }
        ParsedModel::General(gm) => {
            let gs = solve_general(gm, &GeneralFreeParams::zero(gm), horizon, tol)?;
            print_matrix("G_0", gs.gt.term(0));
            println!("horizon: {horizon} (free parameters zero)");
            if let Some(dir) = out {
                impulse_csv(dir, "G.csv", "G", &gs.gt)?;
                for (idx, fi) in gs.fit.iter().enumerate() {
                    impulse_csv(dir, &format!("F{}.csv", idx + 1), "F", fi)?;
                }
                println!("wrote G.csv and forecast kernels to {}", dir.display());
            }
        }
    }
    Ok(())
}

/// `select`: report either selection criterion.
pub fn cmd_select(path: &Path, criterion: &str, tol: &Tolerances) -> CmdResult {
    let mf = load(path, tol)?;
    let model = match &mf.model {
        ParsedModel::Cm(m) => m,
        ParsedModel::General(_) => {
            return Err(fail(3, "selection criteria apply to [matrices] models"))
        }
    };
    match criterion {
        "stable" => {
            let report = select_stability(model, tol)?;
            println!("classification: {:?}", report.classification);
            println!(
                "unstable eigenvalues ({}): {}",
                report.unstable_eigs.len(),
                fmt_eigs(&report.unstable_eigs)
            );
            println!("cancellation residual: {:.3e}", report.residual);
            if let Some(af0) = &report.af0 {
                print_matrix("Ahat F0", af0);
                print_matrix("F0 (minimum-norm)", &forecast_f0(model, af0, tol));
                if let Some(r) = report.g_spectral_radius {
                    println!("realized G spectral radius: {r:.7}");
                }
            }
            if report.classification == Determinacy::Determinate {
                Ok(())
            } else {
                // reporting a non-determinate outcome is still a successful
                // analysis
                Ok(())
            }
        }
        "lsq" => {
            let af0 = select_least_squares(model, tol)?;
            print_matrix("Ahat F0 = -B_par", &af0);
            print_matrix("error coefficient B_perp", &(af0.clone() + &model.b));
            Ok(())
        }
        other => Err(fail(2, format!("unknown criterion `{other}` (use stable|lsq)"))),
    }
}

/// `sweep-gain`: eigenvalue loci of `[z^2 eps Ahat - z I + A]` over a
/// log-spaced grid; writes `loci.csv`.
pub fn cmd_sweep(
    path: &Path,
    from: f64,
    to: f64,
    steps: usize,
    out: Option<&Path>,
    tol: &Tolerances,
) -> CmdResult {
    if steps < 2 || to <= from || from < 0.0 {
        return Err(fail(2, "need --from >= 0, --to > --from, --steps >= 2"));
    }
    let mf = load(path, tol)?;
    let model = match &mf.model {
        ParsedModel::Cm(m) => m,
        ParsedModel::General(_) => return Err(fail(3, "gain sweeps apply to [matrices] models")),
    };
    let grid: Vec<f64> = if from > 0.0 {
        let ratio = to / from;
        (0..steps)
            .map(|k| from * ratio.powf(k as f64 / (steps - 1) as f64))
            .collect()
    } else {
        let step = (to - from) / (steps - 1) as f64;
        (0..steps).map(|k| from + step * k as f64).collect()
    };
    let sweep = gain_sweep(model, &grid, tol)?;
    let width = sweep
        .loci
        .iter()
        .flatten()
        .map(|l| l.len())
        .max()
        .unwrap_or(0);
    println!(
        "swept {} gain values in [{:.3e}, {:.3e}]",
        sweep.epsilons.len(),
        grid[0],
        grid[grid.len() - 1]
    );
    for (i, eps) in sweep.epsilons.iter().enumerate() {
        match &sweep.loci[i] {
            Some(eigs) => {
                if i == 0 || i + 1 == sweep.epsilons.len() {
                    println!(
                        "eps = {:.6e}: finite {} (infinite {}): {}",
                        eps,
                        eigs.len(),
                        sweep.infinite_counts[i],
                        fmt_eigs(eigs)
                    );
                }
            }
            None => println!("eps = {eps:.6e}: not regular"),
        }
    }
    if let Some(dir) = out {
        let mut header = vec!["eps".to_string(), "infinite".to_string()];
        for k in 0..width {
            header.push(format!("re[{k}]"));
            header.push(format!("im[{k}]"));
        }
        let rows: Vec<Vec<String>> = sweep
            .epsilons
            .iter()
            .enumerate()
            .map(|(i, eps)| {
                let mut row = vec![sig9(*eps), sweep.infinite_counts[i].to_string()];
                if let Some(eigs) = &sweep.loci[i] {
                    for z in eigs {
                        row.push(sig9(z.re));
                        row.push(sig9(z.im));
                    }
                    for _ in eigs.len()..width {
                        row.push(String::new());
                        row.push(String::new());
                    }
                } else {
                    for _ in 0..width {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
                row
            })
            .collect();
        write_csv(dir, "loci.csv", &header, &rows)?;
        println!("wrote loci.csv to {}", dir.display());
    }
    Ok(())
}

fn print_state_space(label: &str, ss: &StateSpace) {
    println!("{label}: order {}", ss.order());
    let poles = ss.poles();
    println!("  poles: {}", fmt_eigs(&poles));
    print_matrix("A", &ss.a);
    print_matrix("B", &ss.b);
    print_matrix("C", &ss.c);
    print_matrix("D", &ss.d);
}

/// `realize`: minimal state-space realizations of `G[z]` and `F[z]`.
pub fn cmd_realize(path: &Path, af0_spec: &Af0Spec, tol: &Tolerances) -> CmdResult {
    let mf = load(path, tol)?;
    let model = match &mf.model {
        ParsedModel::Cm(m) => m,
        ParsedModel::General(_) => {
            return Err(fail(3, "realization applies to [matrices] models"))
        }
    };
    let af0 = resolve_af0(model, af0_spec, tol)?;
    let zs = rex_core::solver::zero_state(model, &af0, 1, tol)?;
    let hint = model.n() * 2 + model.m() + 1;
    let g_ss = minimal_realization(&zs.gz, hint, tol)?;
    print_state_space("G[z] minimal realization", &g_ss);
    let f_ss = minimal_realization(&zs.fz, hint, tol)?;
    print_state_space("F[z] minimal realization", &f_ss);
    Ok(())
}

/// `simulate`: Monte-Carlo paths of the solved model; writes
/// `mean_error.csv`.
pub fn cmd_simulate(
    path: &Path,
    af0_spec: &Af0Spec,
    n_paths: usize,
    horizon: usize,
    out: Option<&Path>,
    tol: &Tolerances,
) -> CmdResult {
    let mf = load(path, tol)?;
    let model = match &mf.model {
        ParsedModel::Cm(m) => m,
        ParsedModel::General(_) => {
            return Err(fail(3, "simulation applies to [matrices] models"))
        }
    };
    let af0 = resolve_af0(model, af0_spec, tol)?;
    let ic = mf.init_or_zero();
    let sol = solve_total(model, &af0, &ic, horizon, tol)?;
    let shocks = mf
        .shocks
        .clone()
        .unwrap_or_else(|| rex_core::model::ShockSpec::unit(model.m(), 0));
    let res = simulate_paths(model, &sol, &shocks, &ic, n_paths, horizon, false, tol)?;
    println!("paths: {n_paths}, horizon: {horizon}, seed: {}", shocks.seed);
    println!(
        "max per-path forecast-error identity residual: {:.3e}",
        res.max_identity_residual
    );
    let mut line = String::from("per-component error std:");
    for s in res.error_std.iter() {
        let _ = write!(line, " {s:.7}");
    }
    println!("{line}");
    if let Some(dir) = out {
        let mut header = vec!["t".to_string()];
        for i in 0..model.n() {
            header.push(format!("mean_err[{i}]"));
        }
        let rows: Vec<Vec<String>> = res
            .mean_error
            .iter()
            .enumerate()
            .map(|(t, v)| {
                let mut row = vec![t.to_string()];
                row.extend(v.iter().map(|x| sig9(*x)));
                row
            })
            .collect();
        write_csv(dir, "mean_error.csv", &header, &rows)?;
        println!("wrote mean_error.csv to {}", dir.display());
    }
    Ok(())
}
