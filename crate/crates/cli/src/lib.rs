//! Command-line front end. [`run`] parses argv, dispatches to the library and
//! returns the process exit code: 0 on success, 1 on a domain error, 2 on a
//! usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use serde_json::{json, Value};
use spectral_te::bounds::{
    binary_cell_bounds_with, dpo_bounds_with, dte_bounds_with, dte_curve_with, BoundOptions,
};
use spectral_te::hetero::{dpo_bounds_hetero_with, dte_bounds_hetero_with};
use spectral_te::io::{
    self, cells_json, interval_json, matrix_json, num, vec_json, CsvOptions, LoadedMatrix,
    MatrixKind, ResultDocument,
};
use spectral_te::smooth::default_bandwidth;
use spectral_te::ste::{weights_objective, DEFAULT_MAX_ITER, DEFAULT_TOL};
use spectral_te::synth::{attempt_seed, draw_certified, gaussian_matrix, random_graph, random_orthonormal};
use spectral_te::{
    binned_cate, bipartite_dpo_bounds, bipartite_sharp_dpo, brute_dte_sharp, censored_test,
    conjunctive_test, gen_diffusion, gen_factor, gen_linkformation, gen_social, hw_gap, indicator,
    matched_pair_test, non_extrapolative_weights, qap_sharp_dpo, rank_invariance_check,
    smoothed_dpo_bounds, smoothed_ste_cdf, ste, ste_hetero, stt, stu, weighted_average_bounds,
    BasisTag, BipartiteMatrix, GeneratedExperiment, HeteroMode, OutcomeMatrix, SharpInterval,
    SmoothKernel, SteMatrix, TestReport,
};

#[derive(Parser, Debug)]
#[command(name = "spectral-te", version, about = "Eigenvalue bounds and spectral treatment effects for outcome matrices")]
struct Cli {
    /// Drop self-pairs (i, i) from the bounded population.
    #[arg(long, global = true)]
    exclude_diagonal: bool,
    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Input CSV files start with a header row.
    #[arg(long, global = true)]
    header: bool,
    /// Input CSV delimiter.
    #[arg(long, global = true, default_value_t = ',')]
    delimiter: char,
    /// Relative asymmetry averaged away on square input.
    #[arg(long, global = true, default_value_t = 1e-12)]
    symmetrize_tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Pair {
    /// Treated-arm outcome matrix (CSV).
    #[arg(long)]
    y1: PathBuf,
    /// Untreated-arm outcome matrix (CSV).
    #[arg(long)]
    y0: PathBuf,
}

#[derive(Args, Debug)]
struct Thresholds {
    #[arg(long, allow_negative_numbers = true)]
    t1: f64,
    #[arg(long, allow_negative_numbers = true)]
    t0: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DesignArg {
    Matched,
    Conjunctive,
    Censored,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GeneratorArg {
    Diffusion,
    Social,
    Linkformation,
    Factor,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SmoothTarget {
    Dpo,
    Ste,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DensitySource {
    Ste,
    Cate,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bounds on P(Y1 <= t1, Y0 <= t0).
    Dpo {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        t: Thresholds,
    },
    /// Bounds on P(Y1 - Y0 <= y) at one point or along a grid.
    Dte {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, allow_negative_numbers = true)]
        y: Option<f64>,
        /// Comma-separated evaluation points.
        #[arg(long, allow_negative_numbers = true)]
        grid: Option<String>,
        /// CSV file of evaluation points.
        #[arg(long)]
        grid_file: Option<PathBuf>,
        /// Replace the curves by their monotone envelopes.
        #[arg(long)]
        monotonize: bool,
    },
    /// Four-cell bounds for binary outcomes, optionally averaged over networks.
    Cells {
        #[arg(long, requires = "y0", conflicts_with = "pairs")]
        y1: Option<PathBuf>,
        #[arg(long, requires = "y1")]
        y0: Option<PathBuf>,
        /// File listing one `y1.csv,y0.csv` pair per line.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// One weight per listed pair (default: n1 + n0).
        #[arg(long, requires = "pairs")]
        weights: Option<PathBuf>,
    },
    /// Spectral treatment effect matrix.
    Ste {
        #[command(flatten)]
        pair: Pair,
        /// `treated`, `untreated`, or a CSV file holding an orthonormal basis.
        #[arg(long, default_value = "treated")]
        basis: String,
        /// Report the rank-invariance diagnostics and the Hoffman-Wielandt gap.
        #[arg(long)]
        rank_check: bool,
        #[arg(long, default_value_t = 1e-8)]
        rank_tol: f64,
        /// Also fit doubly stochastic counterfactual weights.
        #[arg(long)]
        weights: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        fw_tol: f64,
        /// Write the effect matrix as CSV.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
    },
    /// Bounds and effects after removing row effects.
    Hetero {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value = "conservative")]
        mode: HeteroMode,
        #[arg(long, allow_negative_numbers = true)]
        t1: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t0: Option<f64>,
        /// Bound P(Y1 - Y0 <= y) instead of the joint CDF.
        #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["t1", "t0"])]
        y: Option<f64>,
        /// Compute the heterogeneity-adjusted effect matrix in this arm's basis.
        #[arg(long, conflicts_with_all = ["t1", "t0", "y"])]
        basis: Option<String>,
    },
    /// Joint-CDF bounds for rectangular (two-sided) outcome matrices.
    Bipartite {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        t: Thresholds,
    },
    /// Randomization tests for the three experimental designs.
    Randtest {
        #[arg(long, value_enum)]
        design: DesignArg,
        /// Matched pairs: file listing one `m1.csv,m0.csv` pair per line.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Conjunctive: buyer x seller outcome matrix.
        #[arg(long)]
        y: Option<PathBuf>,
        /// Conjunctive: buyer group labels in {1, 2}.
        #[arg(long)]
        buyers: Option<PathBuf>,
        /// Conjunctive: seller group labels in {1, 2}.
        #[arg(long)]
        sellers: Option<PathBuf>,
        /// Censored: treated-set matrix.
        #[arg(long)]
        y1: Option<PathBuf>,
        /// Censored: control-set matrix.
        #[arg(long)]
        y0: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        pi: f64,
        /// Number of resamples.
        #[arg(long = "A", default_value_t = 99)]
        a: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Kernel-smoothed bounds and effect CDFs.
    Smooth {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value = "dpo")]
        target: SmoothTarget,
        #[arg(long, allow_negative_numbers = true)]
        t1: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t0: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        y: Option<f64>,
        /// Bandwidth (default: rule of thumb from the entries).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value = "symmetricQuartic")]
        kernel: SmoothKernel,
        #[arg(long, default_value = "treated")]
        basis: String,
    },
    /// Simulate a relabeled experiment from one of the structural models.
    Synth {
        #[arg(long, value_enum)]
        generator: GeneratorArg,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Adjacency matrix for diffusion and social models (default: random graph).
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Edge probability of the default random graph.
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        a0: f64,
        #[arg(long, default_value_t = 0.2)]
        a1: f64,
        /// Diffusion horizon.
        #[arg(long = "T", default_value_t = 3)]
        horizon: usize,
        #[arg(long, default_value_t = 0.02)]
        b0: f64,
        #[arg(long, default_value_t = 0.05)]
        b1: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        /// Characteristics for link formation (default: Gaussian n x k).
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        /// Factor loadings (default: random orthonormal n x n).
        #[arg(long)]
        lambda: Option<PathBuf>,
        /// Unit variances for the factor model (default: 1, 1.5, 2, ...).
        #[arg(long)]
        variances: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        rho0: f64,
        #[arg(long, default_value_t = 2.0)]
        rho1: f64,
        /// Redraw up to this many times until certified rank invariant with simple spectra.
        #[arg(long)]
        certify: Option<usize>,
        /// Directory for y1.csv, y0.csv, y1_star.csv and y0_star.csv.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Exact sharp interval by enumerating relabelings (small n only).
    Oracle {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, allow_negative_numbers = true)]
        t1: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t0: Option<f64>,
        #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["t1", "t0"])]
        y: Option<f64>,
    },
    /// Effect samples for plotting, with an optional kernel density grid.
    Density {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value = "ste")]
        source: DensitySource,
        #[arg(long, default_value = "treated")]
        basis: String,
        /// Bin labels of the treated-arm agents (cate source).
        #[arg(long)]
        bins1: Option<PathBuf>,
        /// Bin labels of the untreated-arm agents (cate source).
        #[arg(long)]
        bins0: Option<PathBuf>,
        /// Output CSV of `value,weight` samples.
        #[arg(long)]
        samples: PathBuf,
        /// Output CSV of the Gaussian kernel density grid.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        h: Option<f64>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
}

impl From<spectral_te::Error> for Failure {
    fn from(e: spectral_te::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

/// Reads inputs and remembers their bytes for the result digest.
struct Inputs {
    csv: CsvOptions,
    seen: Vec<Vec<u8>>,
}

impl Inputs {
    fn bytes(&mut self, path: &Path) -> Outcome<Vec<u8>> {
        let b = io::read_bytes(path)?;
        self.seen.push(b.clone());
        Ok(b)
    }

    fn matrix(&mut self, path: &Path, kind: MatrixKind) -> Outcome<LoadedMatrix> {
        let b = self.bytes(path)?;
        let opts = CsvOptions { kind, ..self.csv };
        io::parse_matrix_csv(&b, &opts).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
    }

    fn outcome(&mut self, path: &Path) -> Outcome<OutcomeMatrix<f64>> {
        match self.matrix(path, MatrixKind::Square)? {
            LoadedMatrix::Outcome(m) => Ok(m),
            LoadedMatrix::Bipartite(_) => unreachable!("square kind forced"),
        }
    }

    fn bipartite(&mut self, path: &Path) -> Outcome<BipartiteMatrix<f64>> {
        match self.matrix(path, MatrixKind::Bipartite)? {
            LoadedMatrix::Bipartite(m) => Ok(m),
            LoadedMatrix::Outcome(_) => unreachable!("bipartite kind forced"),
        }
    }

    fn pair(&mut self, p: &Pair) -> Outcome<(OutcomeMatrix<f64>, OutcomeMatrix<f64>)> {
        Ok((self.outcome(&p.y1)?, self.outcome(&p.y0)?))
    }

    fn grid(&mut self, path: &Path) -> Outcome<Array2<f64>> {
        let b = self.bytes(path)?;
        let rows = io::parse_grid(&b, self.csv.header, self.csv.delimiter)
            .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
        Ok(Array2::from_shape_fn((rows.len(), rows[0].len()), |(i, j)| rows[i][j]))
    }

    fn values(&mut self, path: &Path) -> Outcome<Vec<f64>> {
        let b = self.bytes(path)?;
        let rows = io::parse_grid(&b, self.csv.header, self.csv.delimiter)
            .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
        Ok(rows.into_iter().flatten().collect())
    }

    fn labels(&mut self, path: &Path) -> Outcome<Vec<i64>> {
        self.values(path)?
            .into_iter()
            .enumerate()
            .map(|(k, v)| {
                if v.fract() == 0.0 && v.abs() < 9.0e15 {
                    Ok(v as i64)
                } else {
                    Err(Failure::Domain(format!("{}: label {} = {v} is not an integer", path.display(), k + 1)))
                }
            })
            .collect()
    }

    /// Pair list: one `a.csv,b.csv` per line, relative to the list's directory.
    fn pair_list(&mut self, path: &Path) -> Outcome<Vec<(PathBuf, PathBuf)>> {
        let b = self.bytes(path)?;
        let text = String::from_utf8_lossy(&b);
        let base = path.parent().unwrap_or(Path::new(""));
        let mut out = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if parts.len() != 2 {
                return Err(Failure::Domain(format!(
                    "{}: line {} must name exactly two files",
                    path.display(),
                    k + 1
                )));
            }
            out.push((base.join(parts[0]), base.join(parts[1])));
        }
        if out.is_empty() {
            return Err(Failure::Domain(format!("{}: no pairs listed", path.display())));
        }
        Ok(out)
    }

    fn digest(&self) -> String {
        let refs: Vec<&[u8]> = self.seen.iter().map(|b| b.as_slice()).collect();
        io::digest_inputs(&refs)
    }
}

fn basis_tag(s: &str) -> Option<BasisTag> {
    match s {
        "treated" => Some(BasisTag::Treated),
        "untreated" => Some(BasisTag::Untreated),
        _ => None,
    }
}

fn arm_basis(s: &str) -> Outcome<BasisTag> {
    basis_tag(s).map_or_else(|| usage(format!("--basis must be treated or untreated, got {s}")), Ok)
}

fn tag_name(t: BasisTag) -> &'static str {
    match t {
        BasisTag::Treated => "treated",
        BasisTag::Untreated => "untreated",
        BasisTag::Custom => "custom",
    }
}

fn ste_json(s: &SteMatrix<f64>) -> Value {
    json!({
        "basis": tag_name(s.basis_tag),
        "eigengapWarning": s.eigengap_warning,
        "frobenius": num(s.frobenius()),
        "matrix": matrix_json(&s.entries),
    })
}

fn sharp_json(s: &SharpInterval<f64>) -> Value {
    json!({
        "min": num(s.min),
        "max": num(s.max),
        "argminPerm": s.argmin_perm,
        "argmaxPerm": s.argmax_perm,
    })
}

fn report_json(t: &TestReport<f64>) -> Value {
    json!({
        "design": t.design,
        "statistic": num(t.statistic),
        "pValue": num(t.p_value),
        "seed": t.seed,
        "resampled": vec_json(&t.resampled),
    })
}

fn experiment_json(e: &GeneratedExperiment<f64>, with_matrices: bool) -> Value {
    let mut v = json!({
        "n": e.y1_obs.n(),
        "perm1": e.perms.0,
        "perm0": e.perms.1,
        "gDescription": e.g_description,
        "rankInvariant": e.rank_invariant,
        "warnings": e.warnings,
    });
    if with_matrices {
        v["y1"] = matrix_json(e.y1_obs.entries());
        v["y0"] = matrix_json(e.y0_obs.entries());
        v["y1Star"] = matrix_json(e.y1_star.entries());
        v["y0Star"] = matrix_json(e.y0_star.entries());
    }
    v
}

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s: u64 = rand::random();
        eprintln!("seed: {s}");
        s
    })
}

fn parse_list(s: &str) -> Outcome<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("--grid entry {x:?} is not a number")))
        })
        .collect()
}

struct Ctx {
    inputs: Inputs,
    opts: BoundOptions,
}

fn no_exclusion(ctx: &Ctx, command: &str) -> Outcome<()> {
    if ctx.opts.exclude_diagonal {
        return usage(format!("--exclude-diagonal is not supported by {command}"));
    }
    Ok(())
}

fn execute(cmd: Command, ctx: &mut Ctx) -> Outcome<ResultDocument> {
    let excl = ctx.opts.exclude_diagonal;
    let (kind, payload, params): (&str, Value, Vec<(&str, Value)>) = match cmd {
        Command::Dpo { pair, t } => {
            let (y1, y0) = ctx.inputs.pair(&pair)?;
            let b = dpo_bounds_with(&y1, &y0, t.t1, t.t0, &ctx.opts)?;
            ("dpo", interval_json(&b), vec![("t1", num(t.t1)), ("t0", num(t.t0))])
        }
        Command::Dte { pair, y, grid, grid_file, monotonize } => {
            let (y1, y0) = ctx.inputs.pair(&pair)?;
            match (y, grid, grid_file) {
                (Some(y), None, None) => {
                    if monotonize {
                        return usage("--monotonize needs --grid or --grid-file");
                    }
                    let b = dte_bounds_with(&y1, &y0, y, &ctx.opts)?;
                    ("dte", interval_json(&b), vec![("y", num(y))])
                }
                (None, Some(g), None) => {
                    let g = parse_list(&g)?;
                    let c = dte_curve_with(&y1, &y0, &g, monotonize, &ctx.opts)?;
                    ("dteCurve", curve_json(&c), vec![("monotonize", json!(monotonize))])
                }
                (None, None, Some(path)) => {
                    let g = ctx.inputs.values(&path)?;
                    let c = dte_curve_with(&y1, &y0, &g, monotonize, &ctx.opts)?;
                    ("dteCurve", curve_json(&c), vec![("monotonize", json!(monotonize))])
                }
                _ => return usage("give exactly one of --y, --grid, --grid-file"),
            }
        }
        Command::Cells { y1, y0, pairs, weights } => {
            let list = match (y1, y0, &pairs) {
                (Some(a), Some(b), None) => vec![(a, b)],
                (None, None, Some(p)) => ctx.inputs.pair_list(p)?,
                _ => return usage("give --y1 and --y0, or --pairs"),
            };
            let mut networks = Vec::new();
            let mut all = Vec::new();
            let mut default_w = Vec::new();
            for (a, b) in &list {
                let m1 = ctx.inputs.outcome(a)?;
                let m0 = ctx.inputs.outcome(b)?;
                let c = binary_cell_bounds_with(&m1, &m0, &ctx.opts)?;
                default_w.push((m1.n() + m0.n()) as f64);
                networks.push(json!({
                    "y1": a.display().to_string(),
                    "y0": b.display().to_string(),
                    "f1": num(c.f1),
                    "f0": num(c.f0),
                    "cells": cells_json(&c),
                }));
                all.push(c);
            }
            let w = match &weights {
                Some(p) => ctx.inputs.values(p)?,
                None => default_w,
            };
            if w.len() != all.len() {
                return Err(Failure::Domain(format!(
                    "{} weights for {} networks",
                    w.len(),
                    all.len()
                )));
            }
            let mut pooled = Vec::new();
            for k in 0..4 {
                let col: Vec<_> = all.iter().map(|c| c.cells()[k].1).collect();
                let b = weighted_average_bounds(&col, &w)?;
                pooled.push(json!({
                    "cell": all[0].cells()[k].0,
                    "lower": num(b.lower),
                    "upper": num(b.upper),
                }));
            }
            (
                "cells",
                json!({"cells": pooled, "weights": vec_json(&w), "networks": networks}),
                vec![],
            )
        }
        Command::Ste { pair, basis, rank_check, rank_tol, weights, max_iter, fw_tol, matrix_out } => {
            no_exclusion(ctx, "ste")?;
            let (y1, y0) = ctx.inputs.pair(&pair)?;
            let s = match basis_tag(&basis) {
                Some(BasisTag::Untreated) => stu(&y1, &y0)?,
                Some(_) => stt(&y1, &y0)?,
                None => {
                    let q = ctx.inputs.grid(Path::new(&basis))?;
                    ste(&y1, &y0, &q)?
                }
            };
            if let Some(p) = &matrix_out {
                io::write_matrix_csv(&s.entries, p)?;
            }
            let mut v = ste_json(&s);
            if rank_check {
                let r = rank_invariance_check(&y1, &y0, rank_tol)?;
                let (spec, direct) = hw_gap(&y1, &y0)?;
                v["rankInvariance"] = json!({
                    "invariant": r.invariant,
                    "maxEigenvectorMisalignment": num(r.max_eigenvector_misalignment),
                    "gMonotonicityViolation": num(r.g_monotonicity_violation),
                    "eigengapWarning": r.eigengap_warning,
                });
                v["hwGap"] = json!({"spectral": num(spec), "direct": num(direct)});
            }
            if weights {
                let w = non_extrapolative_weights(&y1, &y0, max_iter, fw_tol)?;
                v["weights"] = json!({
                    "d": matrix_json(&w.d),
                    "objective": num(w.objective),
                    "identityObjective": num(weights_objective(&y1, &y0, &Array2::eye(y1.n()))),
                    "history": vec_json(&w.history),
                    "iterations": w.iterations,
                    "converged": w.converged,
                });
            }
            ("ste", v, vec![("basis", json!(basis))])
        }
        Command::Hetero { pair, mode, t1, t0, y, basis } => {
            let (y1, y0) = ctx.inputs.pair(&pair)?;
            let mode_p = ("mode", serde_json::to_value(mode).expect("mode serializes"));
            if let Some(b) = basis {
                no_exclusion(ctx, "hetero --basis")?;
                let s = ste_hetero(&y1, &y0, arm_basis(&b)?)?;
                ("heteroSte", ste_json(&s), vec![mode_p])
            } else if let Some(y) = y {
                let b = dte_bounds_hetero_with(&y1, &y0, y, mode, &ctx.opts)?;
                ("heteroDte", interval_json(&b), vec![mode_p, ("y", num(y))])
            } else {
                let (Some(t1), Some(t0)) = (t1, t0) else {
                    return usage("hetero needs --t1 and --t0, --y, or --basis");
                };
                let b = dpo_bounds_hetero_with(&y1, &y0, t1, t0, mode, &ctx.opts)?;
                ("heteroDpo", interval_json(&b), vec![mode_p, ("t1", num(t1)), ("t0", num(t0))])
            }
        }
        Command::Bipartite { pair, t } => {
            no_exclusion(ctx, "bipartite")?;
            let b1 = ctx.inputs.bipartite(&pair.y1)?;
            let b0 = ctx.inputs.bipartite(&pair.y0)?;
            let f = bipartite_dpo_bounds(&b1, &b0, t.t1, t.t0)?;
            ("bipartite", interval_json(&f), vec![("t1", num(t.t1)), ("t0", num(t.t0))])
        }
        Command::Randtest { design, pairs, y, buyers, sellers, y1, y0, pi, a, seed } => {
            no_exclusion(ctx, "randtest")?;
            let seed = seed_or_fresh(seed);
            let report = match design {
                DesignArg::Matched => {
                    let Some(p) = pairs else {
                        return usage("matched design needs --pairs");
                    };
                    let mut ms = Vec::new();
                    for (a1, a0) in ctx.inputs.pair_list(&p)? {
                        ms.push((ctx.inputs.outcome(&a1)?, ctx.inputs.outcome(&a0)?));
                    }
                    matched_pair_test(&ms, a, seed)?
                }
                DesignArg::Conjunctive => {
                    let (Some(y), Some(b), Some(s)) = (y, buyers, sellers) else {
                        return usage("conjunctive design needs --y, --buyers and --sellers");
                    };
                    let m = ctx.inputs.bipartite(&y)?;
                    let b = group_labels(ctx.inputs.labels(&b)?)?;
                    let s = group_labels(ctx.inputs.labels(&s)?)?;
                    conjunctive_test(&m, &b, &s, pi, a, seed)?
                }
                DesignArg::Censored => {
                    let (Some(p1), Some(p0)) = (y1, y0) else {
                        return usage("censored design needs --y1 and --y0");
                    };
                    let m1 = ctx.inputs.outcome(&p1)?;
                    let m0 = ctx.inputs.outcome(&p0)?;
                    censored_test(&m1, &m0, pi, a, seed)?
                }
            };
            (
                "randtest",
                report_json(&report),
                vec![("A", json!(a)), ("pi", num(pi)), ("seed", json!(seed))],
            )
        }
        Command::Smooth { pair, target, t1, t0, y, h, kernel, basis } => {
            no_exclusion(ctx, "smooth")?;
            let (y1, y0) = ctx.inputs.pair(&pair)?;
            let h = h.unwrap_or_else(|| default_bandwidth(&y1).max(default_bandwidth(&y0)));
            let kernel_p = ("kernel", json!(kernel_name(kernel)));
            match target {
                SmoothTarget::Dpo => {
                    let (Some(t1), Some(t0)) = (t1, t0) else {
                        return usage("smooth --target dpo needs --t1 and --t0");
                    };
                    let b = smoothed_dpo_bounds(&y1, &y0, t1, t0, h, kernel)?;
                    (
                        "smoothDpo",
                        interval_json(&b),
                        vec![("h", num(h)), kernel_p, ("t1", num(t1)), ("t0", num(t0))],
                    )
                }
                SmoothTarget::Ste => {
                    let Some(y) = y else {
                        return usage("smooth --target ste needs --y");
                    };
                    let tag = arm_basis(&basis)?;
                    let c = smoothed_ste_cdf(&y1, &y0, tag, y, h, kernel)?;
                    (
                        "smoothSteCdf",
                        json!({"cdf": num(c)}),
                        vec![("h", num(h)), kernel_p, ("y", num(y)), ("basis", json!(basis))],
                    )
                }
            }
        }
        Command::Synth {
            generator,
            n,
            seed,
            graph,
            p,
            a0,
            a1,
            horizon,
            b0,
            b1,
            sigma2,
            x,
            k,
            lambda,
            variances,
            rho0,
            rho1,
            certify,
            out_dir,
        } => {
            no_exclusion(ctx, "synth")?;
            let seed = seed_or_fresh(seed);
            let graph = match &graph {
                Some(g) => Some(ctx.inputs.grid(g)?),
                None => None,
            };
            let x = match &x {
                Some(p) => Some(ctx.inputs.grid(p)?),
                None => None,
            };
            let lambda = match &lambda {
                Some(p) => Some(ctx.inputs.grid(p)?),
                None => None,
            };
            let var = match &variances {
                Some(p) => ctx.inputs.values(p)?,
                None => (0..lambda.as_ref().map_or(n, |l| l.nrows())).map(|i| 1.0 + 0.5 * i as f64).collect(),
            };
            let make = |s: u64| -> spectral_te::Result<GeneratedExperiment<f64>> {
                let input = attempt_seed(s, u64::MAX);
                match generator {
                    GeneratorArg::Diffusion => {
                        let g = graph.clone().unwrap_or_else(|| random_graph(n, p, input));
                        gen_diffusion(&g, a0, a1, horizon, s)
                    }
                    GeneratorArg::Social => {
                        let g = graph.clone().unwrap_or_else(|| random_graph(n, p, input));
                        gen_social(&g, b0, b1, sigma2, s)
                    }
                    GeneratorArg::Linkformation => {
                        let x = x.clone().unwrap_or_else(|| gaussian_matrix(n, k.unwrap_or(n), input));
                        gen_linkformation(&x, b0, b1, s)
                    }
                    GeneratorArg::Factor => {
                        let l = match &lambda {
                            Some(l) => l.clone(),
                            None => random_orthonormal(n, k.unwrap_or(n), input)?,
                        };
                        gen_factor(&l, &var, rho0, rho1, s)
                    }
                }
            };
            let e = match certify {
                Some(tries) => draw_certified(seed, tries, make)?,
                None => make(seed)?,
            };
            if let Some(dir) = &out_dir {
                std::fs::create_dir_all(dir).map_err(|err| Failure::Domain(format!("{}: {err}", dir.display())))?;
                io::write_matrix_csv(e.y1_obs.entries(), &dir.join("y1.csv"))?;
                io::write_matrix_csv(e.y0_obs.entries(), &dir.join("y0.csv"))?;
                io::write_matrix_csv(e.y1_star.entries(), &dir.join("y1_star.csv"))?;
                io::write_matrix_csv(e.y0_star.entries(), &dir.join("y0_star.csv"))?;
            }
            let mut params = vec![
                ("generator", json!(generator_name(generator))),
                ("seed", json!(seed)),
            ];
            if let Some(c) = certify {
                params.push(("certify", json!(c)));
            }
            ("synth", experiment_json(&e, out_dir.is_none()), params)
        }
        Command::Oracle { pair, t1, t0, y } => {
            no_exclusion(ctx, "oracle")?;
            let m1 = ctx.inputs.matrix(&pair.y1, MatrixKind::Auto)?;
            let m0 = ctx.inputs.matrix(&pair.y0, MatrixKind::Auto)?;
            match (m1, m0, y) {
                (LoadedMatrix::Outcome(a), LoadedMatrix::Outcome(b), Some(y)) => {
                    let s = brute_dte_sharp(&a, &b, y)?;
                    ("oracleDte", sharp_json(&s), vec![("y", num(y))])
                }
                (LoadedMatrix::Outcome(a), LoadedMatrix::Outcome(b), None) => {
                    let (Some(t1), Some(t0)) = (t1, t0) else {
                        return usage("oracle needs --t1 and --t0, or --y");
                    };
                    let s = qap_sharp_dpo(&indicator(&a, t1)?, &indicator(&b, t0)?)?;
                    ("oracleDpo", sharp_json(&s), vec![("t1", num(t1)), ("t0", num(t0))])
                }
                (LoadedMatrix::Bipartite(a), LoadedMatrix::Bipartite(b), None) => {
                    let (Some(t1), Some(t0)) = (t1, t0) else {
                        return usage("bipartite oracle needs --t1 and --t0");
                    };
                    let ind = |m: &BipartiteMatrix<f64>, t: f64| {
                        BipartiteMatrix::new(m.entries().mapv(|v| if v <= t { 1.0 } else { 0.0 }))
                    };
                    let s = bipartite_sharp_dpo(&ind(&a, t1)?, &ind(&b, t0)?)?;
                    ("oracleBipartite", sharp_json(&s), vec![("t1", num(t1)), ("t0", num(t0))])
                }
                (LoadedMatrix::Bipartite(_), LoadedMatrix::Bipartite(_), Some(_)) => {
                    return usage("--y is only available for square matrices")
                }
                _ => return Err(Failure::Domain("one input is square and the other rectangular".into())),
            }
        }
        Command::Density { pair, source, basis, bins1, bins0, samples, grid, h } => {
            no_exclusion(ctx, "density")?;
            let (y1, y0) = ctx.inputs.pair(&pair)?;
            let (values, weights, extra) = match source {
                DensitySource::Ste => {
                    let s = match arm_basis(&basis)? {
                        BasisTag::Untreated => stu(&y1, &y0)?,
                        _ => stt(&y1, &y0)?,
                    };
                    let v: Vec<f64> = s.entries.iter().copied().collect();
                    let w = vec![1.0; v.len()];
                    (v, w, json!({"eigengapWarning": s.eigengap_warning}))
                }
                DensitySource::Cate => {
                    let (Some(p1), Some(p0)) = (bins1, bins0) else {
                        return usage("cate source needs --bins1 and --bins0");
                    };
                    let l1 = ctx.inputs.labels(&p1)?;
                    let l0 = ctx.inputs.labels(&p0)?;
                    let c = binned_cate(&y1, &y0, &l1, &l0)?;
                    (c.values, c.weights, json!({"pairs": c.pairs, "selfPairsIncluded": c.self_pairs_included}))
                }
            };
            io::write_density_samples(&values, &weights, &samples)?;
            let mut payload = json!({
                "samples": samples.display().to_string(),
                "count": values.len(),
                "details": extra,
            });
            let mut params = vec![("source", json!(source_name(source)))];
            if let Some(g) = &grid {
                let bw = match h {
                    Some(h) => h,
                    None => silverman(&values, &weights),
                };
                let pts = io::kde_grid(&values, &weights, bw)?;
                io::write_density_grid(&pts, g)?;
                payload["grid"] = json!(g.display().to_string());
                params.push(("h", num(bw)));
            }
            ("density", payload, params)
        }
    };
    let mut doc = ResultDocument::new(kind, ctx.inputs.digest(), payload);
    for (k, v) in params {
        doc = doc.param(k, v);
    }
    if excl {
        doc = doc.param("excludeDiagonal", true);
    }
    Ok(doc)
}

fn curve_json(c: &spectral_te::DteCurve<f64>) -> Value {
    json!({
        "grid": vec_json(&c.grid),
        "lower": vec_json(&c.lower),
        "upper": vec_json(&c.upper),
        "monotonized": c.monotonized,
    })
}

fn group_labels(v: Vec<i64>) -> Outcome<Vec<u8>> {
    v.into_iter()
        .enumerate()
        .map(|(k, l)| match l {
            1 => Ok(1),
            2 => Ok(2),
            _ => Err(Failure::Domain(format!("group label {} = {l} is not 1 or 2", k + 1))),
        })
        .collect()
}

/// Weighted `1.06 sd m^(-1/5)`.
fn silverman(values: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if values.is_empty() || !(total > 0.0) {
        return 1.0;
    }
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let var = values.iter().zip(weights).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / total;
    let h = 1.06 * var.sqrt() * (values.len() as f64).powf(-0.2);
    if h > 0.0 {
        h
    } else {
        1e-3 * mean.abs().max(1.0)
    }
}

fn kernel_name(k: SmoothKernel) -> &'static str {
    match k {
        SmoothKernel::SymmetricQuartic => "symmetricQuartic",
        SmoothKernel::OneSidedQuintic => "oneSidedQuintic",
    }
}

fn generator_name(g: GeneratorArg) -> &'static str {
    match g {
        GeneratorArg::Diffusion => "diffusion",
        GeneratorArg::Social => "social",
        GeneratorArg::Linkformation => "linkformation",
        GeneratorArg::Factor => "factor",
    }
}

fn source_name(s: DensitySource) -> &'static str {
    match s {
        DensitySource::Ste => "ste",
        DensitySource::Cate => "cate",
    }
}

fn emit(doc: &ResultDocument, out: Option<&Path>) -> Outcome<()> {
    match out {
        Some(p) => io::write_result_json(doc, p)?,
        None => print!("{}", io::to_json_string(doc)?),
    }
    Ok(())
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    if !cli.delimiter.is_ascii() {
        eprintln!("error: --delimiter must be a single ASCII character");
        return 2;
    }
    let mut ctx = Ctx {
        inputs: Inputs {
            csv: CsvOptions {
                header: cli.header,
                delimiter: cli.delimiter as u8,
                symmetrize_tol: cli.symmetrize_tol,
                kind: MatrixKind::Auto,
            },
            seen: Vec::new(),
        },
        opts: BoundOptions {
            exclude_diagonal: cli.exclude_diagonal,
        },
    };
    let result = execute(cli.command, &mut ctx).and_then(|doc| emit(&doc, cli.out.as_deref()));
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}
