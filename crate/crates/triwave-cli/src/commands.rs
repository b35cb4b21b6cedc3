//! Subcommand implementations.

use std::path::PathBuf;

use clap::Args;
use num_complex::Complex;

use triwave::analysis::{
    coherent_energy_microscopic, coherent_energy_trilinear, ground_scan_microscopic,
    ground_scan_trilinear, microscopic_coherent_lower_bound, worst_phase_energy, AtomAmplitudes,
    GroundScanResult,
};
use triwave::dynamics::{
    evolve as evolve_state, expect_numbers, init_coherent, init_fock, sample_trajectory,
    EvolutionContext, GlobalState,
};
use triwave::eigen::{default_tol, symmetric_eigenvalues, tridiagonal_eigenvalues};
use triwave::fock::{
    block_basis, block_basis_microscopic, block_basis_trilinear, CoherentSpec, FockOccupation,
    ModelKind,
};
use triwave::models::{
    build_microscopic_block, build_trilinear_block, dispersive_ratios,
    effective_from_microscopic, MicroscopicParams, TrilinearParams,
};
use triwave::opspec::{
    build_sparse_with_limit, commutator_interior_norm_with_limit, derive_invariants,
    parse_operator, parse_operator_with_modes, OperatorExpr, DEFAULT_MAX_DIMENSION,
};

use crate::config::{require, resolve, resolve_or, Config};
use crate::output::{emit, fmt_float, Csv, Json};
use crate::{CliError, CommonArgs, Format};

type C64 = Complex<f64>;

// ---------------------------------------------------------------- helpers

struct Io {
    format: Format,
    output: Option<PathBuf>,
    config: Config,
}

fn setup(common: &CommonArgs) -> Result<Io, CliError> {
    let config = Config::load(common.config.as_deref())?;
    let format = match common.format.as_deref().or_else(|| config.get("format")) {
        None => Format::Json,
        Some(raw) => raw
            .parse()
            .map_err(|e| CliError::validation(format!("--format: {e}")))?,
    };
    Ok(Io {
        format,
        output: common.output.clone(),
        config,
    })
}

fn parse_complex(raw: &str, flag: &str) -> Result<C64, CliError> {
    let bad = || CliError::validation(format!("--{flag}: expected `re` or `re,im`, got `{raw}`"));
    let mut parts = raw.split(',');
    let re: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let im: f64 = match parts.next() {
        Some(s) => s.trim().parse().map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(Complex::new(re, im))
}

fn parse_list<T: std::str::FromStr>(raw: &str, flag: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::validation(format!("--{flag}: cannot parse `{s}`")))
        })
        .collect()
}

fn parse_block(raw: &str, flag: &str) -> Result<(u32, u32), CliError> {
    let values: Vec<u32> = parse_list(raw, flag)?;
    if values.len() != 2 {
        return Err(CliError::validation(format!(
            "--{flag}: expected `m1,m2`, got `{raw}`"
        )));
    }
    Ok((values[0], values[1]))
}

fn parse_mode_names(raw: &str, flag: &str) -> Result<Vec<char>, CliError> {
    let mut modes = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        let mut chars = part.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_lowercase() => modes.push(c),
            _ => {
                return Err(CliError::validation(format!(
                    "--{flag}: mode names are single letters, got `{part}`"
                )))
            }
        }
    }
    Ok(modes)
}

/// Shared model-parameter flags.
#[derive(Args, Debug)]
pub struct ModelArgs {
    /// `trilinear` or `microscopic`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "omega-a", value_name = "W")]
    omega_a: Option<f64>,
    #[arg(long = "omega-b", value_name = "W")]
    omega_b: Option<f64>,
    #[arg(long = "omega-c", value_name = "W")]
    omega_c: Option<f64>,
    /// Trilinear coupling (canonicalized to its magnitude).
    #[arg(long)]
    kappa: Option<f64>,
    /// Atomic level energies (microscopic model).
    #[arg(long)]
    e0: Option<f64>,
    #[arg(long)]
    e1: Option<f64>,
    #[arg(long)]
    e2: Option<f64>,
    /// Dipole couplings (microscopic model).
    #[arg(long = "g-a", value_name = "G")]
    g_a: Option<f64>,
    #[arg(long = "g-b", value_name = "G")]
    g_b: Option<f64>,
    #[arg(long = "g-c", value_name = "G")]
    g_c: Option<f64>,
}

enum ModelChoice {
    Trilinear(TrilinearParams<f64>),
    Microscopic(MicroscopicParams<f64>),
}

impl ModelChoice {
    fn kind(&self) -> ModelKind {
        match self {
            ModelChoice::Trilinear(_) => ModelKind::Trilinear,
            ModelChoice::Microscopic(_) => ModelKind::Microscopic,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            ModelChoice::Trilinear(_) => "trilinear",
            ModelChoice::Microscopic(_) => "microscopic",
        }
    }

    fn context(&self) -> EvolutionContext<f64> {
        match self {
            ModelChoice::Trilinear(p) => EvolutionContext::trilinear(*p),
            ModelChoice::Microscopic(p) => EvolutionContext::microscopic(*p),
        }
    }
}

fn resolve_frequencies(args: &ModelArgs, cfg: &Config) -> Result<(f64, f64, f64), CliError> {
    Ok((
        require(args.omega_a, cfg, "omega-a")?,
        require(args.omega_b, cfg, "omega-b")?,
        require(args.omega_c, cfg, "omega-c")?,
    ))
}

fn resolve_microscopic(args: &ModelArgs, cfg: &Config) -> Result<MicroscopicParams<f64>, CliError> {
    let (omega_a, omega_b, omega_c) = resolve_frequencies(args, cfg)?;
    let levels = [
        require(args.e0, cfg, "e0")?,
        require(args.e1, cfg, "e1")?,
        require(args.e2, cfg, "e2")?,
    ];
    let g_a = require(args.g_a, cfg, "g-a")?;
    let g_b = require(args.g_b, cfg, "g-b")?;
    let g_c = require(args.g_c, cfg, "g-c")?;
    Ok(MicroscopicParams::new(
        omega_a, omega_b, omega_c, levels, g_a, g_b, g_c,
    )?)
}

fn resolve_model(args: &ModelArgs, cfg: &Config) -> Result<ModelChoice, CliError> {
    let model: String = require(args.model.clone(), cfg, "model")?;
    match model.as_str() {
        "trilinear" => {
            let (omega_a, omega_b, omega_c) = resolve_frequencies(args, cfg)?;
            let kappa = require(args.kappa, cfg, "kappa")?;
            Ok(ModelChoice::Trilinear(TrilinearParams::new_real(
                omega_a, omega_b, omega_c, kappa,
            )?))
        }
        "microscopic" => Ok(ModelChoice::Microscopic(resolve_microscopic(args, cfg)?)),
        other => Err(CliError::validation(format!(
            "--model: unknown model `{other}` (expected `trilinear` or `microscopic`)"
        ))),
    }
}

/// Initial-state flags shared by `evolve` and `compare-effective`.
#[derive(Args, Debug)]
pub struct InitialStateArgs {
    /// Coherent amplitude of mode a (`re` or `re,im`).
    #[arg(long, value_name = "AMP")]
    alpha: Option<String>,
    #[arg(long, value_name = "AMP")]
    beta: Option<String>,
    #[arg(long, value_name = "AMP")]
    gamma: Option<String>,
    /// Fock occupation `na,nb,nc` (alternative to coherent amplitudes).
    #[arg(long, value_name = "N,N,N")]
    fock: Option<String>,
    /// Initial atomic level for the microscopic model.
    #[arg(long, value_name = "LEVEL")]
    atom: Option<u8>,
    /// Truncation budget for coherent states.
    #[arg(long = "tail-epsilon", value_name = "EPS")]
    tail_epsilon: Option<f64>,
}

fn resolve_initial_state(
    args: &InitialStateArgs,
    cfg: &Config,
    kind: ModelKind,
) -> Result<GlobalState<f64>, CliError> {
    let alpha = resolve(args.alpha.clone(), cfg, "alpha")?;
    let beta = resolve(args.beta.clone(), cfg, "beta")?;
    let gamma = resolve(args.gamma.clone(), cfg, "gamma")?;
    let fock: Option<String> = resolve(args.fock.clone(), cfg, "fock")?;
    let coherent = alpha.is_some() || beta.is_some() || gamma.is_some();

    if coherent && fock.is_some() {
        return Err(CliError::validation(
            "--fock conflicts with --alpha/--beta/--gamma; choose one initial state",
        ));
    }
    if coherent {
        let tail_epsilon = resolve_or(args.tail_epsilon, cfg, "tail-epsilon", 1e-8)?;
        if !(tail_epsilon > 0.0 && tail_epsilon < 1.0) {
            return Err(CliError::validation(
                "--tail-epsilon must lie strictly in (0, 1)",
            ));
        }
        let parse_amp = |v: Option<String>, flag| -> Result<C64, CliError> {
            match v {
                Some(raw) => parse_complex(&raw, flag),
                None => Ok(Complex::new(0.0, 0.0)),
            }
        };
        let spec = CoherentSpec::three_mode(
            parse_amp(alpha, "alpha")?,
            parse_amp(beta, "beta")?,
            parse_amp(gamma, "gamma")?,
        );
        return Ok(init_coherent(kind, &spec, tail_epsilon)?);
    }

    let Some(fock) = fock else {
        return Err(CliError::validation(
            "an initial state is required: --fock or coherent --alpha/--beta/--gamma",
        ));
    };
    let occupations: Vec<u32> = parse_list(&fock, "fock")?;
    if occupations.len() != 3 {
        return Err(CliError::validation(
            "--fock: expected three occupations `na,nb,nc`",
        ));
    }
    let occupation = match kind {
        ModelKind::Trilinear => FockOccupation::photons(occupations),
        ModelKind::Microscopic => {
            let level = resolve_or(args.atom, cfg, "atom", 0)?;
            if level > 2 {
                return Err(CliError::validation("--atom: level must be 0, 1 or 2"));
            }
            FockOccupation::with_atom(level, occupations)
        }
    };
    Ok(init_fock(kind, &occupation))
}

/// Time-grid flags.
#[derive(Args, Debug)]
pub struct TimeGridArgs {
    #[arg(long = "t-start", value_name = "T")]
    t_start: Option<f64>,
    #[arg(long = "t-end", value_name = "T")]
    t_end: Option<f64>,
    /// Number of sample times, inclusive of both ends.
    #[arg(long, value_name = "N")]
    steps: Option<usize>,
}

fn resolve_time_grid(args: &TimeGridArgs, cfg: &Config) -> Result<Vec<f64>, CliError> {
    let t_start = resolve_or(args.t_start, cfg, "t-start", 0.0)?;
    let t_end = require(args.t_end, cfg, "t-end")?;
    let steps = resolve_or(args.steps, cfg, "steps", 100)?;
    if steps < 1 {
        return Err(CliError::validation("--steps must be at least 1"));
    }
    if t_end < t_start {
        return Err(CliError::validation("--t-end must be >= --t-start"));
    }
    if steps == 1 {
        return Ok(vec![t_start]);
    }
    let dt = (t_end - t_start) / (steps - 1) as f64;
    Ok((0..steps).map(|i| t_start + dt * i as f64).collect())
}

fn sparse_dimension_limit() -> Result<usize, CliError> {
    match std::env::var("TRIWAVE_MAX_DIM") {
        Ok(raw) => raw.parse().map_err(|_| {
            CliError::validation(format!("TRIWAVE_MAX_DIM: cannot parse `{raw}` as a dimension"))
        }),
        Err(_) => Ok(DEFAULT_MAX_DIMENSION),
    }
}

fn int_list_json(values: &[i64]) -> Json {
    Json::Array(values.iter().map(|&v| Json::Int(v)).collect())
}

// ---------------------------------------------------------------- spectrum

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Conserved-quantity block `m1,m2`.
    #[arg(long, value_name = "M1,M2")]
    block: Option<String>,
}

pub fn spectrum(args: SpectrumArgs) -> Result<(), CliError> {
    let io = setup(&args.common)?;
    let model = resolve_model(&args.model, &io.config)?;
    let block_raw: String = require(args.block, &io.config, "block")?;
    let (m1, m2) = parse_block(&block_raw, "block")?;

    let (eigenvalues, detuning, resonant) = match &model {
        ModelChoice::Trilinear(p) => {
            let basis = block_basis_trilinear(m1, m2);
            let matrix = build_trilinear_block(p, &basis);
            (
                tridiagonal_eigenvalues(&matrix, default_tol())?,
                Some(p.detuning()),
                Some(p.is_resonant()),
            )
        }
        ModelChoice::Microscopic(p) => {
            let basis = block_basis_microscopic(m1, m2);
            let matrix = build_microscopic_block(p, &basis);
            (symmetric_eigenvalues(&matrix, default_tol())?, None, None)
        }
    };

    let content = match io.format {
        Format::Json => Json::Object(vec![
            ("model", Json::Str(model.name().to_string())),
            ("block_m1", Json::Int(m1.into())),
            ("block_m2", Json::Int(m2.into())),
            ("dimension", Json::Int(eigenvalues.len() as i64)),
            ("detuning", Json::float_or_null(detuning)),
            ("resonant", resonant.map_or(Json::Null, Json::Bool)),
            (
                "eigenvalues",
                Json::Array(eigenvalues.iter().map(|&x| Json::Float(x)).collect()),
            ),
        ])
        .render(),
        Format::Csv => {
            let mut csv = Csv::new(vec!["index", "eigenvalue"]);
            for (i, &x) in eigenvalues.iter().enumerate() {
                csv.push_row(vec![i.to_string(), fmt_float(x)]);
            }
            csv.render()
        }
    };
    Ok(emit(io.output.as_deref(), content)?)
}

// ------------------------------------------------------------- scan-ground

#[derive(Args, Debug)]
pub struct ScanGroundArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Largest block label to scan (N for trilinear, Q for microscopic).
    #[arg(long = "n-max", value_name = "N")]
    n_max: Option<u32>,
}

pub fn scan_ground(args: ScanGroundArgs) -> Result<(), CliError> {
    let io = setup(&args.common)?;
    let model = resolve_model(&args.model, &io.config)?;
    let n_max = require(args.n_max, &io.config, "n-max")?;
    if n_max < 1 {
        return Err(CliError::validation("--n-max must be at least 1"));
    }

    let scan: GroundScanResult<f64> = match &model {
        ModelChoice::Trilinear(p) => ground_scan_trilinear(p, n_max)?,
        ModelChoice::Microscopic(p) => ground_scan_microscopic(p, n_max)?,
    };

    let content = match io.format {
        Format::Json => {
            let records: Vec<Json> = scan
                .entries
                .iter()
                .map(|e| {
                    Json::Object(vec![
                        ("n", Json::Int(e.n.into())),
                        ("block_m1", Json::Int(e.block.m1.into())),
                        ("block_m2", Json::Int(e.block.m2.into())),
                        ("ground_energy", Json::Float(e.ground_energy)),
                        ("estimate", Json::float_or_null(e.estimate)),
                        ("lower_bound", Json::float_or_null(e.lower_bound)),
                    ])
                })
                .collect();
            Json::Object(vec![
                ("model", Json::Str(model.name().to_string())),
                ("records", Json::Array(records)),
                (
                    "crossing_n",
                    scan.crossing.map_or(Json::Null, |n| Json::Int(n.into())),
                ),
                (
                    "estimated_crossing",
                    Json::float_or_null(scan.estimated_crossing),
                ),
            ])
            .render()
        }
        Format::Csv => {
            let mut csv = Csv::new(vec![
                "n",
                "block_m1",
                "block_m2",
                "ground_energy",
                "estimate",
                "lower_bound",
            ]);
            for e in &scan.entries {
                csv.push_row(vec![
                    e.n.to_string(),
                    e.block.m1.to_string(),
                    e.block.m2.to_string(),
                    fmt_float(e.ground_energy),
                    e.estimate.map_or(String::new(), fmt_float),
                    e.lower_bound.map_or(String::new(), fmt_float),
                ]);
            }
            csv.render()
        }
    };
    Ok(emit(io.output.as_deref(), content)?)
}

// ------------------------------------------------------------------ evolve

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    initial: InitialStateArgs,
    #[command(flatten)]
    grid: TimeGridArgs,
}

pub fn evolve(args: EvolveArgs) -> Result<(), CliError> {
    let io = setup(&args.common)?;
    let model = resolve_model(&args.model, &io.config)?;
    let state0 = resolve_initial_state(&args.initial, &io.config, model.kind())?;
    let times = resolve_time_grid(&args.grid, &io.config)?;

    let mut ctx = model.context();
    ctx.prepare(&state0)?;
    let records = sample_trajectory(&state0, &ctx, &times)?;

    let content = match io.format {
        Format::Json => {
            let rows: Vec<Json> = records
                .iter()
                .map(|r| {
                    Json::Object(vec![
                        ("t", Json::Float(r.t)),
                        ("n_a", Json::Float(r.n_a)),
                        ("n_b", Json::Float(r.n_b)),
                        ("n_c", Json::Float(r.n_c)),
                        ("m1", Json::Float(r.m1)),
                        ("m2", Json::Float(r.m2)),
                        ("pair_bc_re", Json::Float(r.pair_bc.re)),
                        ("pair_bc_im", Json::Float(r.pair_bc.im)),
                        ("abs_b", Json::Float(r.abs_b)),
                        ("abs_c", Json::Float(r.abs_c)),
                        ("energy", Json::Float(r.energy)),
                        ("tail_bound", Json::Float(r.tail_bound)),
                    ])
                })
                .collect();
            Json::Object(vec![
                ("model", Json::Str(model.name().to_string())),
                ("records", Json::Array(rows)),
            ])
            .render()
        }
        Format::Csv => {
            let mut csv = Csv::new(vec![
                "t",
                "n_a",
                "n_b",
                "n_c",
                "m1",
                "m2",
                "pair_bc_re",
                "pair_bc_im",
                "abs_b",
                "abs_c",
                "energy",
                "tail_bound",
            ]);
            for r in &records {
                csv.push_row(vec![
                    fmt_float(r.t),
                    fmt_float(r.n_a),
                    fmt_float(r.n_b),
                    fmt_float(r.n_c),
                    fmt_float(r.m1),
                    fmt_float(r.m2),
                    fmt_float(r.pair_bc.re),
                    fmt_float(r.pair_bc.im),
                    fmt_float(r.abs_b),
                    fmt_float(r.abs_c),
                    fmt_float(r.energy),
                    fmt_float(r.tail_bound),
                ]);
            }
            csv.render()
        }
    };
    Ok(emit(io.output.as_deref(), content)?)
}

// ------------------------------------------------------- compare-effective

#[derive(Args, Debug)]
pub struct CompareEffectiveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    initial: InitialStateArgs,
    #[command(flatten)]
    grid: TimeGridArgs,
}

pub fn compare_effective(args: CompareEffectiveArgs) -> Result<(), CliError> {
    let io = setup(&args.common)?;
    let params = resolve_microscopic(&args.model, &io.config)?;
    let (reduced, stark_a, stark_b) = effective_from_microscopic(&params)?;

    let micro0 = resolve_initial_state(&args.initial, &io.config, ModelKind::Microscopic)?;
    if let Some(level) = resolve(args.initial.atom, &io.config, "atom")? {
        if level != 0 {
            return Err(CliError::validation(
                "--atom: the reduced model assumes the atom starts in level 0",
            ));
        }
    }
    let times = resolve_time_grid(&args.grid, &io.config)?;

    // Matching trilinear initial state: same photon content, atom dropped.
    let tri0 = photon_projection(&micro0)?;

    let mut micro_ctx = EvolutionContext::microscopic(params);
    micro_ctx.prepare(&micro0)?;
    let mut tri_ctx = EvolutionContext::trilinear(reduced);
    tri_ctx.prepare(&tri0)?;

    // Dispersive validity at the largest retained occupations.
    let (max_na, max_nb) = max_occupations(&micro0);
    let (ratio_a, ratio_b) = dispersive_ratios(
        &params,
        &FockOccupation::with_atom(0, vec![max_na, max_nb, 0]),
    )?;

    struct Row {
        t: f64,
        micro: [f64; 3],
        effective: [f64; 3],
        deviation: f64,
    }

    let mut rows = Vec::with_capacity(times.len());
    let mut max_deviation = 0.0f64;
    for &t in &times {
        let m = expect_numbers(&evolve_state(&micro0, &micro_ctx, t)?);
        let e = expect_numbers(&evolve_state(&tri0, &tri_ctx, t)?);
        let micro = [m.n_a, m.n_b, m.n_c];
        let effective = [e.n_a, e.n_b, e.n_c];
        let deviation = micro
            .iter()
            .zip(&effective)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        max_deviation = max_deviation.max(deviation);
        rows.push(Row {
            t,
            micro,
            effective,
            deviation,
        });
    }

    let content = match io.format {
        Format::Json => {
            let records: Vec<Json> = rows
                .iter()
                .map(|r| {
                    Json::Object(vec![
                        ("t", Json::Float(r.t)),
                        ("n_a_microscopic", Json::Float(r.micro[0])),
                        ("n_b_microscopic", Json::Float(r.micro[1])),
                        ("n_c_microscopic", Json::Float(r.micro[2])),
                        ("n_a_effective", Json::Float(r.effective[0])),
                        ("n_b_effective", Json::Float(r.effective[1])),
                        ("n_c_effective", Json::Float(r.effective[2])),
                        ("deviation", Json::Float(r.deviation)),
                    ])
                })
                .collect();
            Json::Object(vec![
                ("kappa", Json::Float(reduced.kappa())),
                ("stark_a", Json::Float(stark_a)),
                ("stark_b", Json::Float(stark_b)),
                ("omega_a_effective", Json::Float(reduced.omega_a())),
                ("omega_b_effective", Json::Float(reduced.omega_b())),
                ("omega_c_effective", Json::Float(reduced.omega_c())),
                ("ratio_a", Json::Float(ratio_a)),
                ("ratio_b", Json::Float(ratio_b)),
                ("records", Json::Array(records)),
                ("max_deviation", Json::Float(max_deviation)),
            ])
            .render()
        }
        Format::Csv => {
            let mut csv = Csv::new(vec![
                "t",
                "n_a_microscopic",
                "n_b_microscopic",
                "n_c_microscopic",
                "n_a_effective",
                "n_b_effective",
                "n_c_effective",
                "deviation",
            ]);
            for r in &rows {
                csv.push_row(vec![
                    fmt_float(r.t),
                    fmt_float(r.micro[0]),
                    fmt_float(r.micro[1]),
                    fmt_float(r.micro[2]),
                    fmt_float(r.effective[0]),
                    fmt_float(r.effective[1]),
                    fmt_float(r.effective[2]),
                    fmt_float(r.deviation),
                ]);
            }
            csv.render()
        }
    };
    Ok(emit(io.output.as_deref(), content)?)
}

/// Project a microscopic state with the atom in level 0 onto the pure
/// photon state with the same amplitudes.
fn photon_projection(state: &GlobalState<f64>) -> Result<GlobalState<f64>, CliError> {
    use triwave::dynamics::BlockState;
    let mut blocks = Vec::new();
    for block in state.blocks() {
        let basis = block_basis(ModelKind::Microscopic, block.block());
        let tri_basis = block_basis(ModelKind::Trilinear, block.block());
        let mut amplitudes = vec![Complex::new(0.0, 0.0); tri_basis.dimension()];
        for (pos, occ) in basis.states().iter().enumerate() {
            let amp = block.amplitudes()[pos];
            if amp == Complex::new(0.0, 0.0) {
                continue;
            }
            if occ.atom_level() != Some(0) {
                return Err(CliError::validation(
                    "initial state has excited-atom amplitude; cannot map onto the reduced model",
                ));
            }
            let photon = FockOccupation::photons(occ.occupations().to_vec());
            let target = tri_basis
                .position(&photon)
                .expect("level-0 states share the block layout");
            amplitudes[target] = amp;
        }
        blocks.push(BlockState::new(block.block(), amplitudes));
    }
    Ok(GlobalState::from_blocks(
        ModelKind::Trilinear,
        blocks,
        state.tail_bound(),
    ))
}

fn max_occupations(state: &GlobalState<f64>) -> (u32, u32) {
    let mut max_na = 0;
    let mut max_nb = 0;
    for block in state.blocks() {
        let basis = block_basis(state.model_kind(), block.block());
        for occ in basis.states() {
            max_na = max_na.max(occ.occupation(0));
            max_nb = max_nb.max(occ.occupation(1));
        }
    }
    (max_na, max_nb)
}

// --------------------------------------------------------- coherent-energy

#[derive(Args, Debug)]
pub struct CoherentEnergyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "r-min", value_name = "R")]
    r_min: Option<f64>,
    #[arg(long = "r-max", value_name = "R")]
    r_max: Option<f64>,
    #[arg(long = "r-steps", value_name = "N")]
    r_steps: Option<usize>,
    /// Atomic superposition `c0,c1,c2` (real; microscopic model only).
    #[arg(long = "atom-amps", value_name = "C0,C1,C2")]
    atom_amps: Option<String>,
}

pub fn coherent_energy(args: CoherentEnergyArgs) -> Result<(), CliError> {
    let io = setup(&args.common)?;
    let model = resolve_model(&args.model, &io.config)?;
    let r_min = resolve_or(args.r_min, &io.config, "r-min", 0.0)?;
    let r_max = require(args.r_max, &io.config, "r-max")?;
    let r_steps = resolve_or(args.r_steps, &io.config, "r-steps", 50)?;
    if r_steps < 1 {
        return Err(CliError::validation("--r-steps must be at least 1"));
    }
    if r_max < r_min {
        return Err(CliError::validation("--r-max must be >= --r-min"));
    }

    let radii: Vec<f64> = if r_steps == 1 {
        vec![r_min]
    } else {
        let dr = (r_max - r_min) / (r_steps - 1) as f64;
        (0..r_steps).map(|i| r_min + dr * i as f64).collect()
    };

    let atom = match (&model, resolve(args.atom_amps, &io.config, "atom-amps")?) {
        (ModelChoice::Trilinear(_), Some(_)) => {
            return Err(CliError::validation(
                "--atom-amps only applies to the microscopic model",
            ));
        }
        (ModelChoice::Trilinear(_), None) => None,
        (ModelChoice::Microscopic(_), raw) => {
            let amps: Vec<f64> = match raw {
                Some(raw) => parse_list(&raw, "atom-amps")?,
                // Equal superposition makes the coupling terms visible.
                None => vec![1.0 / 3f64.sqrt(); 3],
            };
            if amps.len() != 3 {
                return Err(CliError::validation(
                    "--atom-amps: expected three amplitudes `c0,c1,c2`",
                ));
            }
            Some(AtomAmplitudes::new(
                Complex::new(amps[0], 0.0),
                Complex::new(amps[1], 0.0),
                Complex::new(amps[2], 0.0),
            )?)
        }
    };

    // Worst-phase configuration: alpha = -r, beta = gamma = r.
    let records: Vec<(f64, f64, f64)> = radii
        .iter()
        .map(|&r| {
            let alpha = Complex::new(-r, 0.0);
            let beta = Complex::new(r, 0.0);
            let gamma = Complex::new(r, 0.0);
            match &model {
                ModelChoice::Trilinear(p) => (
                    r,
                    coherent_energy_trilinear(p, alpha, beta, gamma),
                    worst_phase_energy(p, r),
                ),
                ModelChoice::Microscopic(p) => (
                    r,
                    coherent_energy_microscopic(p, alpha, beta, gamma, atom.as_ref().unwrap()),
                    microscopic_coherent_lower_bound(p, r),
                ),
            }
        })
        .collect();

    let third_column = match &model {
        ModelChoice::Trilinear(_) => "worst_phase",
        ModelChoice::Microscopic(_) => "lower_bound",
    };

    let content = match io.format {
        Format::Json => {
            let rows: Vec<Json> = records
                .iter()
                .map(|&(r, energy, third)| {
                    Json::Object(vec![
                        ("r", Json::Float(r)),
                        ("energy", Json::Float(energy)),
                        (third_column, Json::Float(third)),
                    ])
                })
                .collect();
            Json::Object(vec![
                ("model", Json::Str(model.name().to_string())),
                ("records", Json::Array(rows)),
            ])
            .render()
        }
        Format::Csv => {
            let mut csv = Csv::new(vec!["r", "energy", third_column]);
            for &(r, energy, third) in &records {
                csv.push_row(vec![fmt_float(r), fmt_float(energy), fmt_float(third)]);
            }
            csv.render()
        }
    };
    Ok(emit(io.output.as_deref(), content)?)
}

// -------------------------------------------------------------- invariants

#[derive(Args, Debug)]
pub struct InvariantsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Operator expression, e.g. "a' b c + hc".
    #[arg(long, value_name = "EXPR")]
    interaction: Option<String>,
    /// Ordered mode list, e.g. `a,b,c` (inferred when omitted).
    #[arg(long, value_name = "MODES")]
    modes: Option<String>,
}

fn parse_expression(
    interaction: &str,
    modes: Option<&str>,
) -> Result<OperatorExpr<f64>, CliError> {
    match modes {
        Some(raw) => {
            let modes = parse_mode_names(raw, "modes")?;
            Ok(parse_operator_with_modes(interaction, &modes)?)
        }
        None => Ok(parse_operator(interaction)?),
    }
}

pub fn invariants(args: InvariantsArgs) -> Result<(), CliError> {
    let io = setup(&args.common)?;
    let interaction: String = require(args.interaction, &io.config, "interaction")?;
    let modes: Option<String> = resolve(args.modes, &io.config, "modes")?;
    let expr = parse_expression(&interaction, modes.as_deref())?;
    let basis = derive_invariants(&expr);

    let content = match io.format {
        Format::Json => Json::Object(vec![
            (
                "modes",
                Json::Array(
                    expr.modes()
                        .iter()
                        .map(|c| Json::Str(c.to_string()))
                        .collect(),
                ),
            ),
            (
                "basis",
                Json::Array(basis.vectors().iter().map(|v| int_list_json(v)).collect()),
            ),
        ])
        .render(),
        Format::Csv => {
            let mut csv = Csv::new(vec!["vector"]);
            for v in basis.vectors() {
                let cells: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                csv.push_row(vec![cells.join(" ")]);
            }
            csv.render()
        }
    };
    Ok(emit(io.output.as_deref(), content)?)
}

// ------------------------------------------------------------------- audit

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_name = "EXPR")]
    interaction: Option<String>,
    #[arg(long, value_name = "MODES")]
    modes: Option<String>,
    /// Per-mode occupation cutoffs, e.g. `2,2,2`.
    #[arg(long, value_name = "N,..")]
    cutoffs: Option<String>,
    /// Extra integer vectors to test, e.g. `1,0,0` (repeatable).
    #[arg(long, value_name = "L,..")]
    lambda: Vec<String>,
    /// Mode frequencies for resonance-defect reporting.
    #[arg(long, value_name = "W,..")]
    omega: Option<String>,
}

pub fn audit(args: AuditArgs) -> Result<(), CliError> {
    let io = setup(&args.common)?;
    let interaction: String = require(args.interaction, &io.config, "interaction")?;
    let modes: Option<String> = resolve(args.modes, &io.config, "modes")?;
    let expr = parse_expression(&interaction, modes.as_deref())?;
    let cutoffs_raw: String = require(args.cutoffs, &io.config, "cutoffs")?;
    let cutoffs: Vec<u32> = parse_list(&cutoffs_raw, "cutoffs")?;
    let limit = sparse_dimension_limit()?;

    let sparse = build_sparse_with_limit(&expr, &cutoffs, limit)?;

    let basis = derive_invariants(&expr);
    let mut derived = Vec::new();
    for lambda in basis.vectors() {
        let norm = commutator_interior_norm_with_limit(&expr, lambda, &cutoffs, limit)?;
        derived.push((lambda.clone(), norm));
    }
    let mut checks = Vec::new();
    for raw in &args.lambda {
        let lambda: Vec<i64> = parse_list(raw, "lambda")?;
        let norm = commutator_interior_norm_with_limit(&expr, &lambda, &cutoffs, limit)?;
        checks.push((lambda, norm));
    }

    let defects = match resolve(args.omega, &io.config, "omega")? {
        Some(raw) => {
            let omegas: Vec<f64> = parse_list(&raw, "omega")?;
            Some(expr.resonance_defect(&omegas)?)
        }
        None => None,
    };

    let content = match io.format {
        Format::Json => {
            let vector_entry = |(lambda, norm): &(Vec<i64>, f64)| {
                Json::Object(vec![
                    ("lambda", int_list_json(lambda)),
                    ("commutator_interior_norm", Json::Float(*norm)),
                ])
            };
            let mut fields = vec![
                (
                    "modes",
                    Json::Array(
                        expr.modes()
                            .iter()
                            .map(|c| Json::Str(c.to_string()))
                            .collect(),
                    ),
                ),
                (
                    "cutoffs",
                    Json::Array(cutoffs.iter().map(|&c| Json::Int(c.into())).collect()),
                ),
                ("dimension", Json::Int(sparse.dimension() as i64)),
                (
                    "boundary_states",
                    Json::Int(sparse.boundary_count() as i64),
                ),
                (
                    "invariants",
                    Json::Array(derived.iter().map(vector_entry).collect()),
                ),
                (
                    "checks",
                    Json::Array(checks.iter().map(vector_entry).collect()),
                ),
            ];
            fields.push((
                "resonance_defects",
                match &defects {
                    Some(d) => Json::Array(d.iter().map(|&x| Json::Float(x)).collect()),
                    None => Json::Null,
                },
            ));
            Json::Object(fields).render()
        }
        Format::Csv => {
            let mut csv = Csv::new(vec!["kind", "lambda", "commutator_interior_norm"]);
            for (lambda, norm) in &derived {
                let cells: Vec<String> = lambda.iter().map(|x| x.to_string()).collect();
                csv.push_row(vec![
                    "invariant".to_string(),
                    cells.join(" "),
                    fmt_float(*norm),
                ]);
            }
            for (lambda, norm) in &checks {
                let cells: Vec<String> = lambda.iter().map(|x| x.to_string()).collect();
                csv.push_row(vec![
                    "check".to_string(),
                    cells.join(" "),
                    fmt_float(*norm),
                ]);
            }
            csv.render()
        }
    };
    Ok(emit(io.output.as_deref(), content)?)
}
