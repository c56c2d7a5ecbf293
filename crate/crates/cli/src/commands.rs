//! Subcommand drivers. Each resolves its parameters, runs the analysis and
//! streams its tables into the output directory.

use std::path::PathBuf;

use chainspectra::asymptotics::inband::{edge_geometry, in_band_ranks};
use chainspectra::asymptotics::{band_edge_match, classify_regime, inband_pattern, measured_delta_theta, EdgeSide};
use chainspectra::bulk::Band;
use chainspectra::extensions::lattice2d::{lattice2d_spectrum_using, Lattice2DConfig, Lattice2DLabel, Lattice2DSolver};
use chainspectra::extensions::two_layer::{two_layer_spectrum, TwoLayerConfig};
use chainspectra::modes::{classify_spectrum, DEFAULT_EPS_LOC};
use chainspectra::nonlinear::{
    check_nonresonance, continue_branch, lowest_optical_rank, ContinuationSettings, NonlinearConfig,
    DEFAULT_RESONANCE_MARGIN,
};
use chainspectra::semi_infinite::{count_edge_states_semi, solve_semi_infinite};
use chainspectra::{full_spectrum, ChainConfig, ChainError};
use serde_json::json;

use crate::config::{AxisFlags, Config};
use crate::error::CliError;
use crate::table::{ordered_sweep, write_json, Cell, Format, TableWriter};

/// Settings shared by every subcommand.
pub struct Context {
    pub config: Config,
    pub out: PathBuf,
    pub format: Format,
    pub threads: usize,
}

impl Context {
    fn table(&self, stem: &str, columns: &[&'static str]) -> Result<TableWriter, CliError> {
        TableWriter::create(&self.out, stem, columns, self.format)
    }
}

/// Raw chain flags before merging with the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChainFlags {
    pub n: Option<usize>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k31: Option<f64>,
    pub k32: Option<f64>,
}

fn chain_config(ctx: &Context, f: &ChainFlags) -> Result<ChainConfig, CliError> {
    let c = &ctx.config;
    Ok(ChainConfig::new(
        c.usize_req("n", f.n)?,
        c.f64_req("k1", f.k1)?,
        c.f64_req("k2", f.k2)?,
        c.f64_req("k31", f.k31)?,
        c.f64_req("k32", f.k32)?,
    )?)
}

fn parse_band(s: &str) -> Result<Band, CliError> {
    match s {
        "acoustic" => Ok(Band::Acoustic),
        "optical" => Ok(Band::Optical),
        other => Err(CliError::Usage(format!("unknown band `{other}` (expected acoustic or optical)"))),
    }
}

fn parse_side(s: &str) -> Result<EdgeSide, CliError> {
    match s {
        "lower" => Ok(EdgeSide::Lower),
        "upper" => Ok(EdgeSide::Upper),
        other => Err(CliError::Usage(format!("unknown side `{other}` (expected lower or upper)"))),
    }
}

fn band_name(b: Option<Band>) -> Cell {
    match b {
        Some(Band::Acoustic) => "acoustic".into(),
        Some(Band::Optical) => "optical".into(),
        None => "gap".into(),
    }
}

fn debug_name<T: std::fmt::Debug>(x: T) -> Cell {
    Cell::Text(format!("{x:?}"))
}

/// `spectrum.csv` and `modes.csv` of one chain.
pub fn spectrum(ctx: &Context, f: &ChainFlags, eps_loc: Option<f64>) -> Result<(), CliError> {
    let cfg = chain_config(ctx, f)?;
    let eps = ctx.config.f64_or("eps-loc", eps_loc, DEFAULT_EPS_LOC)?;
    let s = full_spectrum(&cfg)?;
    let cs = classify_spectrum(&s, eps)?;
    let p = cfg.bulk();
    let mut t = ctx.table(
        "spectrum",
        &["index", "omega2", "omega", "in_band", "band", "a_re", "a_im", "sigma", "theta", "eta", "xi", "label"],
    )?;
    for m in &cs.modes {
        t.row(vec![
            m.mode_index.into(),
            m.omega2.into(),
            m.omega2.max(0.0).sqrt().into(),
            m.te.in_band().into(),
            band_name(p.band_of(m.omega2)),
            m.te.a.re.into(),
            m.te.a.im.into(),
            m.te.sigma.into(),
            m.te.theta.into(),
            m.eta.into(),
            m.xi.into(),
            m.label.as_str().into(),
        ])?;
    }
    t.finish()?;
    let mut t = ctx.table("modes", &["index", "site", "value"])?;
    for r in 0..s.len() {
        for (j, &v) in s.mode(r).iter().enumerate() {
            t.row(vec![r.into(), j.into(), v.into()])?;
        }
    }
    t.finish()
}

/// Raw flags of the phase diagram.
#[derive(Debug, Clone, Default)]
pub struct PhaseFlags {
    pub n: Option<usize>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k2_axis: AxisFlags,
    pub k31: Option<f64>,
    pub k31_axis: AxisFlags,
    pub k32: Option<f64>,
    pub k32_axis: AxisFlags,
    pub mode: Option<String>,
}

/// `phase.csv`: semi-infinite and finite edge-state counts over a
/// `(k2, k31, k32)` grid, in grid order.
pub fn phase_diagram(ctx: &Context, f: &PhaseFlags) -> Result<(), CliError> {
    let c = &ctx.config;
    let n = c.usize_or("n", f.n, 50)?;
    let k1 = c.f64_or("k1", f.k1, 1.0)?;
    let k2s = c.axis("k2", f.k2, f.k2_axis)?;
    let k31s = c.axis("k31", f.k31, f.k31_axis)?;
    let k32s = c.axis("k32", f.k32, f.k32_axis)?;
    let mode = c.string_or("mode", f.mode.clone(), "both")?;
    let (semi, finite) = match mode.as_str() {
        "both" => (true, true),
        "semi" => (true, false),
        "finite" => (false, true),
        other => return Err(CliError::Usage(format!("unknown mode `{other}` (expected both, semi or finite)"))),
    };
    let mut grid = Vec::with_capacity(k2s.len() * k31s.len() * k32s.len());
    for &k2 in &k2s {
        for &k31 in &k31s {
            grid.extend(k32s.iter().map(|&k32| (k2, k31, k32)));
        }
    }
    // Validate every point before launching the sweep.
    for &(k2, k31, k32) in &grid {
        ChainConfig::new(n, k1, k2, k31, k32)?;
    }
    let mut t = ctx.table("phase", &["k2", "k31", "k32", "count_semi", "count_finite", "regime"])?;
    ordered_sweep(
        grid.len(),
        ctx.threads,
        |i| -> Result<Vec<Cell>, ChainError> {
            let (k2, k31, k32) = grid[i];
            let cfg = ChainConfig::new(n, k1, k2, k31, k32)?;
            let count_semi = if semi { count_edge_states_semi(k1, k2, k31).into() } else { Cell::Missing };
            let count_finite = if finite {
                let cs = classify_spectrum(&full_spectrum(&cfg)?, DEFAULT_EPS_LOC)?;
                cs.out_of_band().iter().filter(|m| m.label.is_edge()).count().into()
            } else {
                Cell::Missing
            };
            Ok(vec![
                k2.into(),
                k31.into(),
                k32.into(),
                count_semi,
                count_finite,
                debug_name(classify_regime(&cfg).tag),
            ])
        },
        |_, row| t.row(row?),
    )?;
    t.finish()
}

/// `sweep_k32.csv` (exact modes) and `sweep_k32_semi.csv` (semi-infinite
/// predictions for both ends) over a `k32` axis.
pub fn sweep_k32(ctx: &Context, f: &ChainFlags, axis: AxisFlags) -> Result<(), CliError> {
    let c = &ctx.config;
    let base = ChainFlags { k32: Some(0.0), ..*f };
    let cfg = chain_config(ctx, &base)?;
    let k32s = c.axis("k32", f.k32, axis)?;
    for &k in &k32s {
        ChainConfig::new(cfg.n, cfg.k1, cfg.k2, cfg.k31, k)?;
    }
    let left = solve_semi_infinite(cfg.k1, cfg.k2, cfg.k31)?;
    let mut exact = ctx.table("sweep_k32", &["k32", "index", "omega2", "band", "label"])?;
    let mut semi = ctx.table("sweep_k32_semi", &["k32", "end", "a_tilde", "omega2", "location"])?;
    ordered_sweep(
        k32s.len(),
        ctx.threads,
        |i| -> Result<_, ChainError> {
            let c = cfg.with_k32(k32s[i]);
            let cs = classify_spectrum(&full_spectrum(&c)?, DEFAULT_EPS_LOC)?;
            let right = solve_semi_infinite(c.k1, c.k2, c.k32)?;
            Ok((cs, right))
        },
        |i, result| {
            let (cs, right) = result?;
            let k32 = k32s[i];
            let p = cfg.bulk();
            for m in &cs.modes {
                exact.row(vec![
                    k32.into(),
                    m.mode_index.into(),
                    m.omega2.into(),
                    band_name(p.band_of(m.omega2)),
                    m.label.as_str().into(),
                ])?;
            }
            for (end, roots) in [("left", &left), ("right", &right)] {
                for r in roots {
                    semi.row(vec![
                        k32.into(),
                        end.into(),
                        r.a_tilde.into(),
                        r.omega2.into(),
                        debug_name(r.location),
                    ])?;
                }
            }
            Ok(())
        },
    )?;
    exact.finish()?;
    semi.finish()
}

/// `band_edge.csv`: exact and asymptotic `k32` that pin a mode to a band
/// edge, one row per chain length.
pub fn band_edge(
    ctx: &Context,
    f: &ChainFlags,
    ns: &[usize],
    band: Option<String>,
    side: Option<String>,
) -> Result<(), CliError> {
    let c = &ctx.config;
    let ns = if ns.is_empty() { vec![c.usize_req("n", None)?] } else { ns.to_vec() };
    let band = parse_band(&c.string_or("band", band, "optical")?)?;
    let side = parse_side(&c.string_or("side", side, "lower")?)?;
    let mut t = ctx.table(
        "band_edge",
        &[
            "n", "k1", "k2", "k31", "band", "side", "a", "sigma", "omega2", "k32_exact", "k32_asymptotic", "tier",
            "branch", "c2", "sign_rule_holds",
        ],
    )?;
    for n in ns {
        let cfg = chain_config(ctx, &ChainFlags { n: Some(n), k32: Some(0.0), ..*f })?;
        let edge = edge_geometry(&cfg.bulk(), band, side)?;
        let m = band_edge_match(&cfg, edge.a, edge.sigma)?;
        t.row(vec![
            n.into(),
            cfg.k1.into(),
            cfg.k2.into(),
            cfg.k31.into(),
            band_name(Some(band)),
            debug_name(side),
            m.a.into(),
            m.sigma.into(),
            m.omega2.into(),
            m.k32.into(),
            m.asymptotic_k32.into(),
            debug_name(m.tier),
            debug_name(m.branch),
            m.c2.into(),
            m.sign_rule_holds.map_or(Cell::Missing, Cell::Flag),
        ])?;
    }
    t.finish()
}

/// `inband.csv`: measured and predicted phase increments of the first
/// `k_max` modes counted from a band edge.
pub fn inband(
    ctx: &Context,
    f: &ChainFlags,
    band: Option<String>,
    side: Option<String>,
    k_max: Option<usize>,
) -> Result<(), CliError> {
    let c = &ctx.config;
    let cfg = chain_config(ctx, f)?;
    let band = parse_band(&c.string_or("band", band, "optical")?)?;
    let side = parse_side(&c.string_or("side", side, "lower")?)?;
    let k_max = c.usize_or("k-max", k_max, 5)?;
    let est = inband_pattern(&cfg, band, side, k_max)?;
    let s = full_spectrum(&cfg)?;
    let measured = measured_delta_theta(&s, band, side, k_max)?;
    let ranks = in_band_ranks(&s, &est.edge, k_max);
    let mut t = ctx.table(
        "inband",
        &["k", "rank", "pattern", "omega2_exact", "omega2_predicted", "delta_theta_exact", "delta_theta_predicted"],
    )?;
    for k in 0..k_max.min(ranks.len()).min(measured.len()) {
        t.row(vec![
            (k + 1).into(),
            ranks[k].into(),
            debug_name(est.pattern),
            s.omega2(ranks[k]).into(),
            est.omega2.get(k).copied().into(),
            measured[k].into(),
            est.delta_theta.get(k).copied().into(),
        ])?;
    }
    t.finish()
}

/// Raw flags of a continuation run.
#[derive(Debug, Clone, Default)]
pub struct ContinueFlags {
    pub chain: ChainFlags,
    pub b: Option<f64>,
    pub seed_rank: Option<usize>,
    pub gap_depth: Option<f64>,
    pub max_points: Option<usize>,
    pub amplitude_max: Option<f64>,
    pub profiles: bool,
}

/// `branch.csv` with one row per accepted point, `branch_summary.json`,
/// and optional `profile_<point>.csv` fundamental-harmonic profiles.
pub fn continue_cmd(ctx: &Context, f: &ContinueFlags) -> Result<(), CliError> {
    let c = &ctx.config;
    let chain = chain_config(ctx, &f.chain)?;
    let b = c.f64_or("b", f.b, 1.0)?;
    let s = full_spectrum(&chain)?;
    let seed = match c.usize("seed-rank", f.seed_rank)? {
        Some(r) if r < s.len() => r,
        Some(r) => return Err(CliError::Usage(format!("seed rank {r} exceeds the {} modes", s.len()))),
        None => lowest_optical_rank(&s).ok_or_else(|| CliError::Usage("chain has no optical mode".into()))?,
    };
    let defaults = ContinuationSettings::default();
    let settings = ContinuationSettings {
        gap_depth: c.f64("gap-depth", f.gap_depth)?,
        max_points: c.usize_or("max-points", f.max_points, defaults.max_points)?,
        amplitude_max: c.f64_or("amplitude-max", f.amplitude_max, defaults.amplitude_max)?,
        ..defaults
    };
    let report = check_nonresonance(&s, seed, DEFAULT_RESONANCE_MARGIN);
    let branch = continue_branch(&NonlinearConfig::new(chain, b), seed, &settings)?;
    let mut t = ctx.table("branch", &["point", "arclength", "omega", "omega2", "energy", "ipr", "residual"])?;
    for (i, p) in branch.points.iter().enumerate() {
        t.row(vec![
            i.into(),
            p.arclength.into(),
            p.omega.into(),
            p.omega2().into(),
            p.energy.into(),
            p.ipr.into(),
            p.residual.into(),
        ])?;
    }
    t.finish()?;
    if f.profiles || c.string_or("profiles", None, "false")? == "true" {
        for (i, p) in branch.points.iter().enumerate() {
            let mut t = ctx.table(&format!("profile_{i}"), &["site", "value"])?;
            for (j, v) in p.fundamental().into_iter().enumerate() {
                t.row(vec![j.into(), v.into()])?;
            }
            t.finish()?;
        }
    }
    let last = branch.points.last();
    write_json(
        &ctx.out,
        "branch_summary.json",
        &json!({
            "seed_rank": seed,
            "seed_omega": branch.seed_omega,
            "b": b,
            "nonresonance_passes": report.passes,
            "nonresonance_min_margin": report.min_margin,
            "exit_event": branch.exit_event,
            "stop": branch.stop,
            "ipr_strictly_increasing": branch.ipr_strictly_increasing(),
            "final_localization": last.map(|p| format!("{:?}", p.localization_site())),
            "points": branch.points.len(),
        }),
    )
}

/// Raw flags of the two-layer chain.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoLayerFlags {
    pub n: Option<usize>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k5: Option<f64>,
    pub k6: Option<f64>,
    pub k31: Option<f64>,
    pub k32: Option<f64>,
    pub k41: Option<f64>,
    pub k42: Option<f64>,
}

/// `two_layer.csv`, `two_layer_modes.csv` and `two_layer_bands.json`.
pub fn two_layer(ctx: &Context, f: &TwoLayerFlags) -> Result<(), CliError> {
    let c = &ctx.config;
    let cfg = TwoLayerConfig {
        n: c.usize_req("n", f.n)?,
        k1: c.f64_req("k1", f.k1)?,
        k2: c.f64_req("k2", f.k2)?,
        k5: c.f64_req("k5", f.k5)?,
        k6: c.f64_req("k6", f.k6)?,
        k31: c.f64_or("k31", f.k31, 0.0)?,
        k32: c.f64_or("k32", f.k32, 0.0)?,
        k41: c.f64_or("k41", f.k41, 0.0)?,
        k42: c.f64_or("k42", f.k42, 0.0)?,
    };
    let s = two_layer_spectrum(&cfg)?;
    let mut t = ctx.table(
        "two_layer",
        &["index", "omega2", "in_pair1", "in_pair2", "symmetry", "channel", "outside_own_pair", "label"],
    )?;
    for (i, m) in s.modes.iter().enumerate() {
        t.row(vec![
            i.into(),
            m.omega2.into(),
            m.in_pair1.into(),
            m.in_pair2.into(),
            m.symmetry.into(),
            debug_name(m.channel),
            m.outside_own_pair.into(),
            m.label.as_str().into(),
        ])?;
    }
    t.finish()?;
    let mut t = ctx.table("two_layer_modes", &["index", "layer", "column", "value"])?;
    for (i, v) in s.eigenvectors.iter().enumerate() {
        for (j, &x) in v.iter().enumerate() {
            t.row(vec![i.into(), (j % 2).into(), (j / 2).into(), x.into()])?;
        }
    }
    t.finish()?;
    write_json(&ctx.out, "two_layer_bands.json", &s.bands)
}

/// Raw flags of the square lattice.
#[derive(Debug, Clone, Default)]
pub struct LatticeFlags {
    pub n: Option<usize>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
    pub k4: Option<f64>,
    pub k5: Option<f64>,
    pub k6: Option<f64>,
    pub solver: Option<String>,
    pub window_lo: Option<f64>,
    pub window_hi: Option<f64>,
    pub dump: Option<String>,
}

/// `lattice2d.csv`, `lattice2d_modes.csv` as `(row, col, value)` triples and
/// `lattice2d_bands.json`.
pub fn lattice2d(ctx: &Context, f: &LatticeFlags) -> Result<(), CliError> {
    let c = &ctx.config;
    let cfg = Lattice2DConfig {
        n: c.usize_req("n", f.n)?,
        k1: c.f64_req("k1", f.k1)?,
        k2: c.f64_req("k2", f.k2)?,
        k3: c.f64_or("k3", f.k3, 0.0)?,
        k4: c.f64_or("k4", f.k4, 0.0)?,
        k5: c.f64_or("k5", f.k5, 0.0)?,
        k6: c.f64_or("k6", f.k6, 0.0)?,
    };
    let solver = match c.string_or("solver", f.solver.clone(), "auto")?.as_str() {
        "auto" => Lattice2DSolver::Auto,
        "dense" => Lattice2DSolver::Dense,
        "windowed" => Lattice2DSolver::Windowed,
        other => return Err(CliError::Usage(format!("unknown solver `{other}` (expected auto, dense or windowed)"))),
    };
    let window = match (c.f64("window-lo", f.window_lo)?, c.f64("window-hi", f.window_hi)?) {
        (Some(lo), Some(hi)) if lo < hi => Some((lo, hi)),
        (None, None) => None,
        _ => return Err(CliError::Usage("`--window-lo` and `--window-hi` must both be given with lo < hi".into())),
    };
    let dump = c.string_or("dump", f.dump.clone(), "edge")?;
    if !matches!(dump.as_str(), "edge" | "all" | "none") {
        return Err(CliError::Usage(format!("unknown dump `{dump}` (expected edge, all or none)")));
    }
    let s = lattice2d_spectrum_using(&cfg, window, solver, ctx.threads)?;
    let mut t = ctx.table("lattice2d", &["index", "omega2", "boundary_fraction", "in_band", "label", "residual"])?;
    for (i, m) in s.modes.iter().enumerate() {
        t.row(vec![
            i.into(),
            m.omega2.into(),
            m.boundary_fraction.into(),
            m.in_band.into(),
            debug_name(m.label),
            m.residual.into(),
        ])?;
    }
    t.finish()?;
    let mut t = ctx.table("lattice2d_modes", &["index", "row", "col", "value"])?;
    for (i, m) in s.modes.iter().enumerate() {
        let keep = match dump.as_str() {
            "all" => true,
            "edge" => m.label == Lattice2DLabel::Edge && !m.in_band,
            _ => false,
        };
        if keep {
            for (r, col, v) in s.mode_grid(i) {
                t.row(vec![i.into(), r.into(), col.into(), v.into()])?;
            }
        }
    }
    t.finish()?;
    write_json(
        &ctx.out,
        "lattice2d_bands.json",
        &json!({ "config": cfg, "bands": s.bands, "window": s.window, "solver": format!("{:?}", s.solver) }),
    )
}
