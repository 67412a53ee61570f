//! One function per subcommand, each a thin binding of a core operation
//! chain.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use polemap::deembed::{
    compose_h_vn, compute_h_input, compute_h_n_with_floor, extend_block_with_combiner,
    DeembedInputs, DEFAULT_REFERENCE_FLOOR,
};
use polemap::ident::{
    fit_common_poles_mimo, fit_rational_siso, margin_metrics, residue_localization,
    select_critical_pair, FitOptions, PoleZeroModel, Weighting,
};
use polemap::netalg::bisect_symmetric;
use polemap::netio::{
    parse_response_table, parse_touchstone, write_pole_report, write_response_table,
    write_touchstone, write_touchstone_one_port, FrequencyResponse, OnePortNetwork, PoleReport,
    PoleReportEntry, ReportFormat, ReportedPole, ResponseRole, ResponseTableFormat,
    TouchstoneFormat, TwoPortNetwork,
};
use polemap::oracle::{
    attach_probe, build_preset, exact_poles, preset_observation_nodes,
    synthesize_measurement_set, upper_half, Netlist, PresetName, SynthesisOptions,
};
use polemap::track::{
    build_tracks, detect_bifurcation_with_threshold, emit_report, BifurcationBracket, PoleTrack,
    DEFAULT_RMS_EXCLUSION_THRESHOLD,
};

use crate::globber;
use crate::flags;

/// Error with the process exit code it maps to.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl From<polemap::Error> for CliError {
    fn from(e: polemap::Error) -> Self {
        let code = match &e {
            polemap::Error::Singular { .. }
            | polemap::Error::Numerical(_)
            | polemap::Error::Convergence { .. } => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<String> for CliError {
    fn from(message: String) -> Self {
        CliError { code: 1, message }
    }
}

type CliResult = Result<(), CliError>;

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError {
        code: 1,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError {
                code: 1,
                message: format!("cannot create {}: {e}", parent.display()),
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|e| CliError {
        code: 1,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn touchstone_format(s: &str) -> Result<TouchstoneFormat, CliError> {
    match s {
        "ri" => Ok(TouchstoneFormat::Ri),
        "ma" => Ok(TouchstoneFormat::Ma),
        "db" => Ok(TouchstoneFormat::Db),
        other => Err(format!("unknown Touchstone format '{other}' (ri|ma|db)").into()),
    }
}

fn table_format(s: &str) -> Result<ResponseTableFormat, CliError> {
    match s {
        "ri" => Ok(ResponseTableFormat::RealImag),
        "db" => Ok(ResponseTableFormat::MagDb),
        other => Err(format!("unknown table format '{other}' (ri|db)").into()),
    }
}

fn report_format(s: &str) -> Result<ReportFormat, CliError> {
    match s {
        "json" => Ok(ReportFormat::Json),
        "csv" => Ok(ReportFormat::Csv),
        other => Err(format!("unknown report format '{other}' (json|csv)").into()),
    }
}

fn weighting(s: &str) -> Result<Weighting, CliError> {
    match s {
        "uniform" => Ok(Weighting::Uniform),
        "invmag" => Ok(Weighting::InverseMagnitude),
        other => Err(format!("unknown weighting '{other}' (uniform|invmag)").into()),
    }
}

fn read_two_port(path: &Path) -> Result<TwoPortNetwork, CliError> {
    let net = parse_touchstone(&read_file(path)?)
        .map_err(CliError::from)?
        .two_port()
        .map_err(CliError::from)?;
    Ok(net)
}

fn warn_z0(file_z0: f64, flag_z0: f64, what: &str) {
    if file_z0 != flag_z0 {
        eprintln!(
            "note: {what} carries z0 = {file_z0} ohm; the file value governs its S-parameters \
             (--z0 {flag_z0} sets the source impedance only)"
        );
    }
}

/// Gamma data arrives as .s1p or as a response CSV with role gamma_in.
fn read_gamma(path: &Path) -> Result<FrequencyResponse, CliError> {
    let text = read_file(path)?;
    let is_touchstone = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("s1p"))
        .unwrap_or(false);
    if is_touchstone {
        let one = parse_touchstone(&text)
            .map_err(CliError::from)?
            .one_port()
            .map_err(CliError::from)?;
        Ok(one.into_response())
    } else {
        let resp = parse_response_table(&text).map_err(CliError::from)?;
        if resp.role() != ResponseRole::GammaIn {
            return Err(format!(
                "{} must carry role gamma_in (found {})",
                path.display(),
                resp.role().as_str()
            )
            .into());
        }
        Ok(resp)
    }
}

/// One report entry from a fitted model: every upper-half pole with its
/// margin metrics, the critical pair flagged.
fn report_entry_from_model(
    model: &PoleZeroModel,
    params: BTreeMap<String, f64>,
) -> Result<PoleReportEntry, CliError> {
    let critical = select_critical_pair(model, model.band_hz()).ok();
    let mut poles = Vec::new();
    for p in model.upper_half_poles() {
        let m = margin_metrics(p);
        poles.push(ReportedPole {
            re_per_s: p.re,
            im_per_s: p.im,
            f_res_hz: m.f_res_hz,
            damping_ratio: m.damping_ratio,
            q_factor: m.q_factor,
            critical: critical.map(|c| c == p).unwrap_or(false),
        });
    }
    PoleReportEntry::new(params, poles, model.fit_rms_error()).map_err(CliError::from)
}

fn fit_options(weight: &str) -> Result<FitOptions, CliError> {
    Ok(FitOptions {
        weighting: weighting(weight)?,
        ..Default::default()
    })
}

// ---------------------------------------------------------------- split2x

#[derive(Args)]
pub struct Split2xArgs {
    /// Measured 2x device (.s2p).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output half network (.s2p).
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Output number format.
    #[arg(long, default_value = "ri")]
    pub format: String,
}

pub fn split2x(args: &Split2xArgs, z0: f64) -> CliResult {
    let total = read_two_port(&args.input)?;
    warn_z0(total.z0_ohm(), z0, "2x device");
    let bis = bisect_symmetric(&total).map_err(CliError::from)?;
    eprintln!(
        "split2x: symmetry error {:.3e}, reciprocity error {:.3e}, mirror asymmetry {:.3e}",
        bis.symmetry_error, bis.reciprocity_error, bis.mirror_asymmetry
    );
    let text =
        write_touchstone(&bis.half, touchstone_format(&args.format)?).map_err(CliError::from)?;
    write_file(&args.output, &text)
}

// ----------------------------------------------------------------- hinput

#[derive(Args)]
pub struct HinputArgs {
    /// Input-block S-parameters (.s2p).
    #[arg(long)]
    pub block: PathBuf,
    /// Input reflection coefficient of the DUT (.s1p or CSV with role
    /// gamma_in).
    #[arg(long)]
    pub gamma: PathBuf,
    /// Power-combiner 2-port to cascade before the block (large-signal
    /// setup).
    #[arg(long)]
    pub combiner: Option<PathBuf>,
    /// Output H_input response CSV.
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Output table format.
    #[arg(long, default_value = "ri")]
    pub format: String,
}

pub fn hinput(args: &HinputArgs, z0: f64) -> CliResult {
    let mut block = read_two_port(&args.block)?;
    warn_z0(block.z0_ohm(), z0, "input block");
    if let Some(path) = &args.combiner {
        let combiner = read_two_port(path)?;
        block = extend_block_with_combiner(&combiner, &block).map_err(CliError::from)?;
    }
    let gamma = read_gamma(&args.gamma)?;
    let inputs = DeembedInputs::new(block, gamma, z0).map_err(CliError::from)?;
    let out = compute_h_input(&inputs).map_err(CliError::from)?;
    if out.active_flagged {
        eprintln!("note: |gamma_in| exceeds 1 at some frequencies (active DUT)");
    }
    let text =
        write_response_table(&out.h_input, table_format(&args.format)?).map_err(CliError::from)?;
    write_file(&args.output, &text)
}

// ---------------------------------------------------------------- compose

#[derive(Args)]
pub struct ComposeArgs {
    /// H_input response CSV.
    #[arg(long)]
    pub hinput: PathBuf,
    /// Pre-computed H_n response CSV (alternative to the ratio pair).
    #[arg(long)]
    pub hn: Option<PathBuf>,
    /// Probe ratio measured at node n.
    #[arg(long = "ratio-n")]
    pub ratio_n: Option<PathBuf>,
    /// Probe ratio measured at the input reference node.
    #[arg(long = "ratio-ref")]
    pub ratio_ref: Option<PathBuf>,
    /// Reference-ratio magnitude floor.
    #[arg(long, default_value_t = DEFAULT_REFERENCE_FLOOR)]
    pub floor: f64,
    /// Output H_vn response CSV.
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Output table format.
    #[arg(long, default_value = "ri")]
    pub format: String,
}

pub fn compose(args: &ComposeArgs) -> CliResult {
    let h_input = parse_response_table(&read_file(&args.hinput)?).map_err(CliError::from)?;
    let h_n = match (&args.hn, &args.ratio_n, &args.ratio_ref) {
        (Some(path), None, None) => {
            parse_response_table(&read_file(path)?).map_err(CliError::from)?
        }
        (None, Some(n), Some(r)) => {
            let at_n = parse_response_table(&read_file(n)?).map_err(CliError::from)?;
            let at_ref = parse_response_table(&read_file(r)?).map_err(CliError::from)?;
            compute_h_n_with_floor(&at_n, &at_ref, args.floor).map_err(CliError::from)?
        }
        _ => {
            return Err(
                "pass either --hn, or both --ratio-n and --ratio-ref".to_string().into(),
            )
        }
    };
    let h_vn = compose_h_vn(&h_input, &h_n).map_err(CliError::from)?;
    let text = write_response_table(&h_vn, table_format(&args.format)?).map_err(CliError::from)?;
    write_file(&args.output, &text)
}

// --------------------------------------------------------------- identify

#[derive(Args)]
pub struct IdentifyArgs {
    /// Response CSV to fit.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Analysis band LOW:HIGH in Hz.
    #[arg(long)]
    pub band: String,
    /// Fit order: 'auto' or a positive integer.
    #[arg(long, default_value = "auto")]
    pub order: String,
    /// Sample weighting.
    #[arg(long, default_value = "uniform")]
    pub weight: String,
    /// Output pole report.
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Report format.
    #[arg(long, default_value = "json")]
    pub format: String,
    /// Also write the fitted rational model.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

pub fn identify(args: &IdentifyArgs) -> CliResult {
    let resp = parse_response_table(&read_file(&args.input)?).map_err(CliError::from)?;
    let band = flags::parse_band(&args.band)?;
    let order = flags::parse_order(&args.order)?;
    let model =
        fit_rational_siso(&resp, band, order, &fit_options(&args.weight)?).map_err(CliError::from)?;
    eprintln!(
        "identify: order {} relative rms {:.3e} ({} iterations)",
        model.order(),
        model.fit_rms_error(),
        model.diagnostics().iterations
    );
    let entry = report_entry_from_model(&model, resp.params().clone())?;
    let report = PoleReport {
        entries: vec![entry],
    };
    let text =
        write_pole_report(&report, report_format(&args.format)?).map_err(CliError::from)?;
    write_file(&args.output, &text)?;
    if let Some(path) = &args.model {
        write_file(path, &model.to_json())?;
    }
    Ok(())
}

// ------------------------------------------------------------------- mimo

#[derive(Args)]
pub struct MimoArgs {
    /// Response CSVs sharing one frequency grid (repeat the flag).
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Analysis band LOW:HIGH in Hz.
    #[arg(long)]
    pub band: String,
    /// Fit order: 'auto' or a positive integer.
    #[arg(long, default_value = "auto")]
    pub order: String,
    /// Sample weighting.
    #[arg(long, default_value = "uniform")]
    pub weight: String,
    /// Output model JSON (shared poles, per-response residues).
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Optional pole report alongside the model.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Report format.
    #[arg(long = "report-format", default_value = "json")]
    pub report_format: String,
}

pub fn mimo(args: &MimoArgs) -> CliResult {
    let mut resps = Vec::new();
    for path in &args.inputs {
        resps.push(parse_response_table(&read_file(path)?).map_err(CliError::from)?);
    }
    let band = flags::parse_band(&args.band)?;
    let order = flags::parse_order(&args.order)?;
    let model = fit_common_poles_mimo(&resps, band, order, &fit_options(&args.weight)?)
        .map_err(CliError::from)?;
    eprintln!(
        "mimo: {} responses, order {}, relative rms {:.3e}",
        resps.len(),
        model.order(),
        model.fit_rms_error()
    );
    write_file(&args.output, &model.to_json())?;
    if let Some(path) = &args.report {
        let entry = report_entry_from_model(&model, BTreeMap::new())?;
        let report = PoleReport {
            entries: vec![entry],
        };
        let text = write_pole_report(&report, report_format(&args.report_format)?)
            .map_err(CliError::from)?;
        write_file(path, &text)?;
    }
    Ok(())
}

// --------------------------------------------------------------- residues

#[derive(Args)]
pub struct ResiduesArgs {
    /// Fitted model JSON from `mimo` (or `identify --model`).
    #[arg(long)]
    pub model: PathBuf,
    /// Band LOW:HIGH used to select the critical pair.
    #[arg(long)]
    pub band: Option<String>,
    /// Explicit critical pole RE:IM in rad/s (overrides --band).
    #[arg(long, allow_negative_numbers = true)]
    pub critical: Option<String>,
    /// Output residue report JSON.
    #[arg(long = "out")]
    pub output: PathBuf,
}

pub fn residues(args: &ResiduesArgs) -> CliResult {
    let model = PoleZeroModel::from_json(&read_file(&args.model)?).map_err(CliError::from)?;
    let critical = match (&args.critical, &args.band) {
        (Some(c), _) => flags::parse_complex(c)?,
        (None, Some(band)) => {
            let band = flags::parse_band(band)?;
            select_critical_pair(&model, band).map_err(CliError::from)?
        }
        (None, None) => select_critical_pair(&model, model.band_hz()).map_err(CliError::from)?,
    };
    let report = residue_localization(&model, critical).map_err(CliError::from)?;
    let origin = report
        .labels
        .iter()
        .zip(&report.normalized_residues)
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(l, _)| l.clone())
        .unwrap_or_default();
    eprintln!(
        "residues: critical pole {:+.4e} {:+.4e}j rad/s, origin {}",
        report.critical_pole.re, report.critical_pole.im, origin
    );
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError {
        code: 1,
        message: format!("serialization failed: {e}"),
    })?;
    text.push('\n');
    write_file(&args.output, &text)
}

// ------------------------------------------------------------------ track

/// On-disk track document: the built track plus bifurcation analysis.
#[derive(Serialize, Deserialize)]
pub struct TrackDocument {
    pub track: PoleTrack,
    pub brackets: Vec<BifurcationBracket>,
    pub rms_exclusion_threshold: f64,
    pub band_hz: (f64, f64),
}

#[derive(Args)]
pub struct TrackArgs {
    /// Glob pattern for the swept response CSVs ('*' and '?').
    #[arg(long)]
    pub glob: String,
    /// Sweep parameter key; every file must carry it as metadata.
    #[arg(long)]
    pub param: String,
    /// Analysis band LOW:HIGH in Hz.
    #[arg(long)]
    pub band: String,
    /// Fit order: 'auto' or a positive integer.
    #[arg(long, default_value = "auto")]
    pub order: String,
    /// Sample weighting.
    #[arg(long, default_value = "uniform")]
    pub weight: String,
    /// Fit-error threshold excluding points from bifurcation
    /// interpolation.
    #[arg(long = "rms-threshold", default_value_t = DEFAULT_RMS_EXCLUSION_THRESHOLD)]
    pub rms_threshold: f64,
    /// Output track document JSON.
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Optional SVG pole map.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Optional flattened pole report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Report format.
    #[arg(long = "report-format", default_value = "csv")]
    pub report_format: String,
}

pub fn track(args: &TrackArgs) -> CliResult {
    let files = globber::expand(&args.glob).map_err(|e| CliError {
        code: 1,
        message: format!("glob '{}' failed: {e}", args.glob),
    })?;
    if files.is_empty() {
        return Err(format!("glob '{}' matched no files", args.glob).into());
    }
    let band = flags::parse_band(&args.band)?;
    let order = flags::parse_order(&args.order)?;
    let options = fit_options(&args.weight)?;
    let mut sweep = Vec::new();
    for path in &files {
        let resp = parse_response_table(&read_file(path)?).map_err(CliError::from)?;
        if !resp.params().contains_key(&args.param) {
            return Err(format!(
                "{} is missing the sweep parameter '{}' in its metadata",
                path.display(),
                args.param
            )
            .into());
        }
        let model = fit_rational_siso(&resp, band, order, &options).map_err(CliError::from)?;
        eprintln!(
            "track: {} ({}={}) order {} rms {:.3e}",
            path.display(),
            args.param,
            resp.params()[&args.param],
            model.order(),
            model.fit_rms_error()
        );
        sweep.push((resp.params().clone(), model));
    }
    let track = build_tracks(&sweep, &args.param).map_err(CliError::from)?;
    let brackets = detect_bifurcation_with_threshold(&track, args.rms_threshold);
    for b in &brackets {
        eprintln!(
            "track: trajectory {} crosses the axis in [{}, {}], estimate {}",
            b.trajectory, b.param_low, b.param_high, b.crossing_estimate
        );
    }
    for i in track.degraded_points(args.rms_threshold) {
        eprintln!(
            "track: sweep point {}={} excluded from interpolation (fit rms {:.3e})",
            args.param, track.param_values[i], track.fit_errors[i]
        );
    }
    let doc = TrackDocument {
        track,
        brackets,
        rms_exclusion_threshold: args.rms_threshold,
        band_hz: band,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError {
        code: 1,
        message: format!("serialization failed: {e}"),
    })?;
    text.push('\n');
    write_file(&args.output, &text)?;
    emit_views(&doc, args.svg.as_deref(), args.report.as_deref(), &args.report_format)
}

fn emit_views(
    doc: &TrackDocument,
    svg: Option<&Path>,
    report: Option<&Path>,
    report_fmt: &str,
) -> CliResult {
    if svg.is_none() && report.is_none() {
        return Ok(());
    }
    let (pole_report, svg_text) = emit_report(&doc.track).map_err(CliError::from)?;
    if let Some(path) = svg {
        write_file(path, &svg_text)?;
    }
    if let Some(path) = report {
        let text = write_pole_report(&pole_report, report_format(report_fmt)?)
            .map_err(CliError::from)?;
        write_file(path, &text)?;
    }
    Ok(())
}

// --------------------------------------------------------------- simulate

#[derive(Args)]
pub struct SimulateArgs {
    /// Preset circuit: rlc_shunt, hartley_single_stage, three_stage.
    #[arg(long)]
    pub preset: String,
    /// Parameter overrides key=value (repeatable).
    #[arg(long = "set")]
    pub set: Vec<String>,
    /// Observation node labels, comma separated (defaults to the
    /// preset's nodes).
    #[arg(long)]
    pub nodes: Option<String>,
    /// Frequency grid LOW:HIGH:POINTS[:lin], logarithmic by default.
    #[arg(long, default_value = "1e6:5e8:401")]
    pub grid: String,
    /// Probe loading: off, default, or r=OHMS,c=FARADS.
    #[arg(long, default_value = "off")]
    pub probe: String,
    /// Additive measurement noise in dB relative to each ratio's RMS.
    #[arg(long = "noise-db", allow_negative_numbers = true)]
    pub noise_db: Option<f64>,
    /// Noise generator seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also emit admittance-type responses: a unit voltage source in
    /// series with each named element, observing the source current
    /// (comma-separated element labels).
    #[arg(long)]
    pub admittance: Option<String>,
    /// Output directory for the synthesized measurement set.
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

pub fn simulate(args: &SimulateArgs, z0: f64) -> CliResult {
    let preset = PresetName::parse(&args.preset).map_err(CliError::from)?;
    let mut overrides = flags::parse_overrides(&args.set)?;
    if preset != PresetName::RlcShunt && z0 != 50.0 && !overrides.contains_key("z0") {
        overrides.insert("z0".to_string(), z0);
    }
    let net = build_preset(preset, &overrides).map_err(CliError::from)?;
    let node_spec: Vec<String> = match &args.nodes {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => preset_observation_nodes(preset)
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    let node_refs: Vec<&str> = node_spec.iter().map(String::as_str).collect();
    let freqs = flags::parse_grid(&args.grid)?;
    let options = SynthesisOptions {
        probe: flags::parse_probe(&args.probe)?,
        noise_db: args.noise_db,
        seed: args.seed,
        params: overrides.clone(),
    };
    let bundle =
        synthesize_measurement_set(&net, &node_refs, &freqs, &options).map_err(CliError::from)?;

    let dir = &args.out_dir;
    write_file(
        &dir.join("block.s2p"),
        &write_touchstone(&bundle.block, TouchstoneFormat::Ri).map_err(CliError::from)?,
    )?;
    let gamma = OnePortNetwork::new(
        bundle.gamma_in.freqs_hz().to_vec(),
        bundle.gamma_in.values().to_vec(),
        bundle.block.z0_ohm(),
    )
    .map_err(CliError::from)?;
    write_file(
        &dir.join("gamma_in.s1p"),
        &write_touchstone_one_port(&gamma, TouchstoneFormat::Ri).map_err(CliError::from)?,
    )?;
    for resp in &bundle.node_ratios {
        let label = resp.node_id().unwrap_or("node");
        write_file(
            &dir.join(format!("ratio_{label}.csv")),
            &write_response_table(resp, ResponseTableFormat::RealImag).map_err(CliError::from)?,
        )?;
    }
    write_file(
        &dir.join("ratio_ref.csv"),
        &write_response_table(&bundle.ref_ratio, ResponseTableFormat::RealImag)
            .map_err(CliError::from)?,
    )?;
    for resp in &bundle.direct_hvn {
        let label = resp.node_id().unwrap_or("node");
        write_file(
            &dir.join(format!("hvn_{label}.csv")),
            &write_response_table(resp, ResponseTableFormat::RealImag).map_err(CliError::from)?,
        )?;
    }
    if let Some(list) = &args.admittance {
        for label in list.split(',').map(str::trim) {
            let resp = polemap::oracle::frequency_response(
                &net,
                &polemap::oracle::Excitation::BranchVoltage {
                    element_label: label.to_string(),
                },
                polemap::oracle::Observable::SourceCurrent,
                &freqs,
            )
            .map_err(CliError::from)?
            .with_node_id(label)
            .with_params(overrides.clone());
            write_file(
                &dir.join(format!("y_{label}.csv")),
                &write_response_table(&resp, ResponseTableFormat::RealImag)
                    .map_err(CliError::from)?,
            )?;
        }
    }
    write_file(&dir.join("netlist.json"), &net.to_json())?;
    eprintln!(
        "simulate: wrote block, gamma_in, {} ratio file(s), reference ratio and direct H_vn to {}",
        bundle.node_ratios.len(),
        dir.display()
    );
    Ok(())
}

// ------------------------------------------------------------- exactpoles

#[derive(Args)]
pub struct ExactpolesArgs {
    /// Preset circuit name (alternative to --netlist).
    #[arg(long)]
    pub preset: Option<String>,
    /// Parameter overrides key=value (repeatable).
    #[arg(long = "set")]
    pub set: Vec<String>,
    /// Netlist JSON file (alternative to --preset).
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    /// Attach a probe before the pole computation: default or
    /// r=OHMS,c=FARADS.
    #[arg(long)]
    pub probe: Option<String>,
    /// Node label the probe attaches to.
    #[arg(long = "probe-node")]
    pub probe_node: Option<String>,
    /// Output pole report.
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Report format.
    #[arg(long, default_value = "json")]
    pub format: String,
}

pub fn exactpoles(args: &ExactpolesArgs, z0: f64) -> CliResult {
    let overrides = flags::parse_overrides(&args.set)?;
    let net: Netlist = match (&args.preset, &args.netlist) {
        (Some(name), None) => {
            let preset = PresetName::parse(name).map_err(CliError::from)?;
            let mut ov = overrides.clone();
            if preset != PresetName::RlcShunt && z0 != 50.0 && !ov.contains_key("z0") {
                ov.insert("z0".to_string(), z0);
            }
            build_preset(preset, &ov).map_err(CliError::from)?
        }
        (None, Some(path)) => Netlist::from_json(&read_file(path)?).map_err(CliError::from)?,
        _ => return Err("pass exactly one of --preset or --netlist".to_string().into()),
    };
    let net = match (&args.probe, &args.probe_node) {
        (Some(probe), Some(label)) => {
            let probe = flags::parse_probe(probe)?
                .ok_or_else(|| CliError::from("probe 'off' makes no sense here".to_string()))?;
            let node = net.node_by_label(label).map_err(CliError::from)?;
            attach_probe(&net, node, &probe).map_err(CliError::from)?
        }
        (None, None) => net,
        _ => return Err("--probe and --probe-node go together".to_string().into()),
    };
    let poles = exact_poles(&net).map_err(CliError::from)?;
    let uh = upper_half(&poles);
    let critical = uh
        .iter()
        .copied()
        .max_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    let mut reported = Vec::new();
    for p in &uh {
        if p.norm() == 0.0 {
            continue;
        }
        let m = margin_metrics(*p);
        reported.push(ReportedPole {
            re_per_s: p.re,
            im_per_s: p.im,
            f_res_hz: m.f_res_hz,
            damping_ratio: m.damping_ratio,
            q_factor: m.q_factor,
            critical: critical == Some(*p),
        });
    }
    let entry =
        PoleReportEntry::new(overrides, reported, 0.0).map_err(CliError::from)?;
    let report = PoleReport {
        entries: vec![entry],
    };
    let text =
        write_pole_report(&report, report_format(&args.format)?).map_err(CliError::from)?;
    write_file(&args.output, &text)
}

// ----------------------------------------------------------------- report

#[derive(Args)]
pub struct ReportArgs {
    /// Track document JSON produced by `track`.
    #[arg(long)]
    pub track: PathBuf,
    /// Output report path.
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Report format.
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Optional SVG pole map.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn report(args: &ReportArgs) -> CliResult {
    let doc: TrackDocument =
        serde_json::from_str(&read_file(&args.track)?).map_err(|e| CliError {
            code: 1,
            message: format!("invalid track document {}: {e}", args.track.display()),
        })?;
    let (pole_report, svg_text) = emit_report(&doc.track).map_err(CliError::from)?;
    let text =
        write_pole_report(&pole_report, report_format(&args.format)?).map_err(CliError::from)?;
    write_file(&args.output, &text)?;
    if let Some(path) = &args.svg {
        write_file(path, &svg_text)?;
    }
    Ok(())
}
