//! File-based command layer: configuration, state files, run manifests, and
//! the named demonstration pipelines emitted by `squeezer reproduce`.
//!
//! All tabular outputs are flat CSV and all structured outputs are JSON, so
//! downstream plotting needs no bespoke parsers. Every command writes a
//! `manifest.json` with SHA-256 digests of its outputs; identical
//! configuration and seed reproduce identical bytes.

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, DensityMatrixJson, Ket, Parity};
use crate::gates::{
    photon_subtract, prepare_experimental_photon, rotate, squeeze_unitary, AncillaModel,
    LossBudget, SqueezeOrientation,
};
use crate::mb_squeezer::{mb_squeeze_channel, SqueezeGateConfig};
use crate::metrics::{
    anticorrelation, coherent_mixture_bound, fit_css_amplitude, gaussian_mixture_bound,
    metric_curve_beta, metric_curve_phase,
};
use crate::phase_space::{marginal, wigner, wigner_min, GridSpec};
use crate::tomography::{maxlik_reconstruct, sample_quadratures, write_records_csv};
use crate::{C64, CMat};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/* Configuration **************************************************************/

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum InputStateSpec {
    Fock {
        n: usize,
    },
    Coherent {
        alpha_re: f64,
        #[serde(default)]
        alpha_im: f64,
    },
    Css {
        alpha: f64,
        parity: Parity,
    },
    ExperimentalPhoton,
    /// Photon-subtracted squeezed vacuum (the realistic superposition
    /// source); identical to the squeezed single photon at the same `r`.
    SubtractedSqueezed {
        r: f64,
    },
}

impl Default for InputStateSpec {
    fn default() -> Self {
        InputStateSpec::Fock { n: 1 }
    }
}

/// Ancilla resource in dB or linear-variance form.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AncillaSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeezed_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antisqueezed_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeezed_variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antisqueezed_variance: Option<f64>,
}

impl AncillaSpec {
    pub fn to_model(&self, orientation: SqueezeOrientation) -> Result<AncillaModel> {
        let model = match (
            self.squeezed_db,
            self.antisqueezed_db,
            self.squeezed_variance,
            self.antisqueezed_variance,
        ) {
            (None, None, None, None) => AncillaModel::experimental(orientation),
            (Some(s), Some(a), None, None) => AncillaModel::from_db(s, a, orientation),
            (None, None, Some(s), Some(a)) => AncillaModel {
                squeezed_variance: s,
                antisqueezed_variance: a,
                orientation,
            },
            (None, None, Some(s), None) => AncillaModel::pure_with_variance(s, orientation),
            _ => {
                return Err(Error::InvalidParameter(
                    "ancilla must be given in dB or variance form, not a mix".into(),
                ))
            }
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateSpec {
    pub gamma: f64,
    #[serde(default)]
    pub ancilla: AncillaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedforward_gain: Option<f64>,
}

impl Default for GateSpec {
    fn default() -> Self {
        GateSpec {
            gamma: 0.26,
            ancilla: AncillaSpec::default(),
            feedforward_gain: None,
        }
    }
}

impl GateSpec {
    pub fn to_config(&self) -> Result<SqueezeGateConfig> {
        let orientation = if self.gamma >= 0.0 {
            SqueezeOrientation::SqueezeP
        } else {
            SqueezeOrientation::SqueezeX
        };
        let cfg = SqueezeGateConfig::new(self.gamma, self.ancilla.to_model(orientation)?)?;
        match self.feedforward_gain {
            Some(g) => cfg.with_gain(g),
            None => Ok(cfg),
        }
    }
}

fn default_phases() -> usize {
    12
}
fn default_samples() -> usize {
    8334
}
fn default_seed() -> u64 {
    7
}
fn default_bin_width() -> f64 {
    crate::tomography::DEFAULT_BIN_WIDTH
}
fn default_max_iters() -> usize {
    500
}
fn default_tol() -> f64 {
    1e-9
}
fn default_efficiency() -> f64 {
    1.0
}

/// Acquisition and reconstruction settings; the defaults are recorded in the
/// run manifest since they are conventions, not physics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TomoSettings {
    #[serde(default = "default_phases")]
    pub phases: usize,
    #[serde(default = "default_samples")]
    pub samples_per_phase: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_efficiency")]
    pub efficiency: f64,
}

impl Default for TomoSettings {
    fn default() -> Self {
        TomoSettings {
            phases: default_phases(),
            samples_per_phase: default_samples(),
            seed: default_seed(),
            bin_width: default_bin_width(),
            max_iters: default_max_iters(),
            tol: default_tol(),
            efficiency: default_efficiency(),
        }
    }
}

fn default_cutoff() -> usize {
    40
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default)]
    pub input_state: InputStateSpec,
    #[serde(default)]
    pub gate: GateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_budget: Option<LossBudget>,
    #[serde(default)]
    pub tomography: TomoSettings,
    /// Gaussian phase jitter (radians) averaged over the gate output; 0
    /// disables the knob.
    #[serde(default)]
    pub dephasing_stddev: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cutoff: default_cutoff(),
            input_state: InputStateSpec::default(),
            gate: GateSpec::default(),
            loss_budget: None,
            tomography: TomoSettings::default(),
            dephasing_stddev: 0.0,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn budget(&self) -> LossBudget {
        self.loss_budget.unwrap_or_else(LossBudget::experimental)
    }

    pub fn build_input_state(&self) -> Result<DensityMatrix> {
        build_state(&self.input_state, &self.budget(), self.cutoff)
    }
}

pub fn build_state(
    spec: &InputStateSpec,
    budget: &LossBudget,
    cutoff: usize,
) -> Result<DensityMatrix> {
    match spec {
        InputStateSpec::Fock { n } => Ok(Ket::fock(*n, cutoff)?.to_density_matrix()),
        InputStateSpec::Coherent { alpha_re, alpha_im } => {
            Ok(Ket::coherent(C64::new(*alpha_re, *alpha_im), cutoff)?.to_density_matrix())
        }
        InputStateSpec::Css { alpha, parity } => {
            Ok(Ket::css(C64::new(*alpha, 0.0), *parity, cutoff)?.to_density_matrix())
        }
        InputStateSpec::ExperimentalPhoton => prepare_experimental_photon(budget, cutoff),
        InputStateSpec::SubtractedSqueezed { r } => {
            let sq = squeeze_unitary(*r, cutoff)
                .apply(&Ket::fock(0, cutoff)?)?
                .to_density_matrix();
            Ok(photon_subtract(&sq)?.0)
        }
    }
}

/// Average the state over Gaussian phase jitter of the given standard
/// deviation (32-point quadrature over rotations).
pub fn apply_dephasing(rho: &DensityMatrix, sigma: f64) -> Result<DensityMatrix> {
    if sigma == 0.0 {
        return Ok(rho.clone());
    }
    if sigma < 0.0 {
        return Err(Error::InvalidParameter("dephasing stddev must be >= 0".into()));
    }
    let gh = crate::numeric::gauss_hermite(32);
    let dim = rho.dim();
    let mut acc = CMat::zeros(dim, dim);
    let scale = std::f64::consts::SQRT_2 * sigma;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    for (&t, &w) in gh.nodes.iter().zip(&gh.weights) {
        let r = rotate(scale * t, dim);
        acc += (r.matrix() * rho.matrix() * r.matrix().adjoint()).scale(w * inv_sqrt_pi);
    }
    Ok(DensityMatrix::renormalized(acc, 1e-9)?.0)
}

/* Manifest *******************************************************************/

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub cutoff: usize,
    pub config: serde_json::Value,
    pub files: Vec<FileDigest>,
}

/// Collects emitted files and their digests for one command run.
pub struct Emitter {
    dir: PathBuf,
    files: Vec<FileDigest>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        let digest = Sha256::digest(bytes);
        let mut hexd = String::with_capacity(64);
        for b in digest {
            hexd.push_str(&format!("{b:02x}"));
        }
        self.files.push(FileDigest {
            path: name.to_string(),
            sha256: hexd,
        });
        Ok(path)
    }

    pub fn emit_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.emit(name, text.as_bytes())
    }

    pub fn finish(mut self, command: &str, cfg: &RunConfig) -> Result<RunManifest> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.tomography.seed,
            cutoff: cfg.cutoff,
            config: serde_json::to_value(cfg)?,
            files: self.files.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

/* State files ****************************************************************/

pub fn write_state(emitter: &mut Emitter, name: &str, rho: &DensityMatrix) -> Result<PathBuf> {
    let json: DensityMatrixJson = rho.into();
    emitter.emit_json(name, &json)
}

pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    let text = fs::read_to_string(path)?;
    let json: DensityMatrixJson = serde_json::from_str(&text)?;
    let rho: DensityMatrix = json.try_into()?;
    rho.validate()?;
    Ok(rho)
}

/* Commands *******************************************************************/

pub fn cmd_prepare(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    let mut em = Emitter::new(out_dir)?;
    let rho = cfg.build_input_state()?;
    rho.validate()?;
    let path = write_state(&mut em, "state.json", &rho)?;
    em.finish("prepare", cfg)?;
    Ok(path)
}

pub fn cmd_apply(cfg: &RunConfig, state_path: &Path, out_dir: &Path) -> Result<PathBuf> {
    let mut em = Emitter::new(out_dir)?;
    let rho = read_state(state_path)?;
    let gate = cfg.gate.to_config()?;
    let out = mb_squeeze_channel(&rho, &gate)?;
    let out = apply_dephasing(&out, cfg.dephasing_stddev)?;
    out.validate()?;
    let path = write_state(&mut em, "state_out.json", &out)?;
    em.finish("apply", cfg)?;
    Ok(path)
}

#[derive(Debug, Serialize)]
struct WignerSummary {
    min_value: f64,
    min_x: f64,
    min_p: f64,
    integral: f64,
    grid_half_range: f64,
    grid_points: usize,
}

/// Grid half-width covering the state comfortably.
fn auto_half_range(rho: &DensityMatrix) -> f64 {
    let m = rho.quadrature_moments();
    let sigma = m.cov[0][0].max(m.cov[1][1]).sqrt();
    let center = m.mean[0].abs().max(m.mean[1].abs());
    ((center + 3.5 * sigma + 1.0) * 2.0).ceil() / 2.0
}

pub fn cmd_wigner(
    cfg: &RunConfig,
    state_path: &Path,
    half_range: Option<f64>,
    points: usize,
    out_dir: &Path,
) -> Result<()> {
    let mut em = Emitter::new(out_dir)?;
    let rho = read_state(state_path)?;
    emit_wigner_artifacts(&mut em, "wigner", &rho, half_range, points)?;
    em.finish("wigner", cfg)?;
    Ok(())
}

fn emit_wigner_artifacts(
    em: &mut Emitter,
    stem: &str,
    rho: &DensityMatrix,
    half_range: Option<f64>,
    points: usize,
) -> Result<WignerSummary> {
    let half = half_range.unwrap_or_else(|| auto_half_range(rho));
    let grid = wigner(rho, &GridSpec::square(half, points))?;
    let mut csv = Vec::new();
    grid.write_csv(&mut csv)?;
    em.emit(&format!("{stem}.csv"), &csv)?;
    let (v, (x, p)) = wigner_min(rho, half.min(3.5), 81);
    let summary = WignerSummary {
        min_value: v,
        min_x: x,
        min_p: p,
        integral: grid.integral(),
        grid_half_range: half,
        grid_points: points,
    };
    em.emit_json(&format!("{stem}_summary.json"), &summary)?;
    Ok(summary)
}

fn emit_marginals(
    em: &mut Emitter,
    stem: &str,
    rho: &DensityMatrix,
    n_phases: usize,
) -> Result<Vec<f64>> {
    let half = auto_half_range(rho);
    let points = 601;
    let xs: Vec<f64> = (0..points)
        .map(|i| -half + 2.0 * half * i as f64 / (points - 1) as f64)
        .collect();
    let mut combined = Vec::new();
    writeln!(combined, "theta,x,pdf").map_err(Error::from)?;
    let mut variances = Vec::new();
    writeln!(variances, "theta,variance").map_err(Error::from)?;
    let mut var_list = Vec::with_capacity(n_phases);
    for k in 0..n_phases {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n_phases as f64;
        let m = marginal(rho, theta, &xs)?;
        for (x, p) in m.xs.iter().zip(&m.pdf) {
            writeln!(combined, "{},{},{}", theta, x, p).map_err(Error::from)?;
        }
        let v = m.variance();
        writeln!(variances, "{},{}", theta, v).map_err(Error::from)?;
        var_list.push(v);
    }
    em.emit(&format!("{stem}.csv"), &combined)?;
    em.emit(&format!("{stem}_variances.csv"), &variances)?;
    Ok(var_list)
}

pub fn cmd_marginals(
    cfg: &RunConfig,
    state_path: &Path,
    n_phases: usize,
    out_dir: &Path,
) -> Result<()> {
    let mut em = Emitter::new(out_dir)?;
    let rho = read_state(state_path)?;
    emit_marginals(&mut em, "marginals", &rho, n_phases)?;
    em.finish("marginals", cfg)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct MetricsReport {
    d_extremum_beta: f64,
    d_extremum_value: f64,
    v_extremum_beta: f64,
    v_extremum_value: f64,
    css_fit_alpha: f64,
    css_fit_fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    anticorrelation: Option<crate::metrics::AnticorrelationResult>,
}

pub struct MetricsOptions {
    pub beta_max: f64,
    pub beta_points: usize,
    pub with_bounds: bool,
    pub anticorrelation_eta: Option<f64>,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            beta_max: 2.2,
            beta_points: 45,
            with_bounds: false,
            anticorrelation_eta: None,
        }
    }
}

pub fn cmd_metrics(
    cfg: &RunConfig,
    state_path: &Path,
    opts: &MetricsOptions,
    out_dir: &Path,
) -> Result<()> {
    let mut em = Emitter::new(out_dir)?;
    let rho = read_state(state_path)?;
    let betas: Vec<f64> = (1..=opts.beta_points)
        .map(|i| opts.beta_max * i as f64 / opts.beta_points as f64)
        .collect();
    let curve = metric_curve_beta(&rho, &betas, 0.0, "state")?;
    let mut csv = Vec::new();
    curve.write_csv(&mut csv)?;
    em.emit("metric_curve.csv", &csv)?;
    if opts.with_bounds {
        emit_bounds(&mut em, &betas)?;
    }
    let (alpha, fid) = fit_css_amplitude(&rho)?;
    let anti = match opts.anticorrelation_eta {
        Some(eta) => Some(anticorrelation(&rho, eta)?),
        None => None,
    };
    let report = MetricsReport {
        d_extremum_beta: curve.d_extremum.0,
        d_extremum_value: curve.d_extremum.1,
        v_extremum_beta: curve.v_extremum.0,
        v_extremum_value: curve.v_extremum.1,
        css_fit_alpha: alpha,
        css_fit_fidelity: fid,
        anticorrelation: anti,
    };
    em.emit_json("metrics_report.json", &report)?;
    em.finish("metrics", cfg)?;
    Ok(())
}

fn emit_bounds(em: &mut Emitter, betas: &[f64]) -> Result<()> {
    let mut csv = Vec::new();
    writeln!(csv, "beta,coherent_bound,gaussian_bound").map_err(Error::from)?;
    for &b in betas {
        let c = coherent_mixture_bound(b)?;
        let g = gaussian_mixture_bound(b)?;
        writeln!(csv, "{},{},{}", b, c, g).map_err(Error::from)?;
    }
    em.emit("bounds.csv", &csv)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct TomoReport {
    rho: DensityMatrixJson,
    seed: u64,
    phases: usize,
    samples_per_phase: usize,
    bin_width: f64,
    tol: f64,
    efficiency_assumed: f64,
    iterations: usize,
    converged: bool,
    underdetermined: bool,
    final_log_likelihood: f64,
    fidelity_with_input: f64,
    wigner_min_input: f64,
    wigner_min_reconstructed: f64,
}

pub fn cmd_tomo(cfg: &RunConfig, state_path: &Path, out_dir: &Path) -> Result<()> {
    let mut em = Emitter::new(out_dir)?;
    let rho = read_state(state_path)?;
    let t = &cfg.tomography;
    let phases: Vec<f64> = (0..t.phases)
        .map(|i| std::f64::consts::PI * i as f64 / t.phases as f64)
        .collect();
    let records = sample_quadratures(&rho, &phases, t.samples_per_phase, t.seed)?;
    let mut csv = Vec::new();
    write_records_csv(&records, &mut csv)?;
    em.emit("records.csv", &csv)?;

    // Reconstruct at a reduced cutoff: the battery states live well below
    // the acquisition cutoff and the iteration cost scales with dim².
    let recon_dim = cfg.cutoff.min(15);
    let rep = maxlik_reconstruct(
        &records,
        recon_dim,
        t.efficiency,
        t.bin_width,
        t.max_iters,
        t.tol,
    )?;
    let truth_small = project_state(&rho, recon_dim)?;
    let fid = rep.rho.fidelity(&truth_small)?;
    let (wm_in, _) = wigner_min(&rho, 3.0, 61);
    let (wm_rec, _) = wigner_min(&rep.rho, 3.0, 61);
    let report = TomoReport {
        rho: (&rep.rho).into(),
        seed: t.seed,
        phases: t.phases,
        samples_per_phase: t.samples_per_phase,
        bin_width: t.bin_width,
        tol: t.tol,
        efficiency_assumed: rep.efficiency_assumed,
        iterations: rep.iterations,
        converged: rep.converged,
        underdetermined: rep.underdetermined,
        final_log_likelihood: *rep.log_likelihood_trace.last().unwrap(),
        fidelity_with_input: fid,
        wigner_min_input: wm_in,
        wigner_min_reconstructed: wm_rec,
    };
    em.emit_json("reconstruction.json", &report)?;
    em.finish("tomo", cfg)?;
    Ok(())
}

/// Truncate a state to a smaller cutoff (renormalizing the lost tail).
pub fn project_state(rho: &DensityMatrix, dim: usize) -> Result<DensityMatrix> {
    if dim >= rho.dim() {
        return Ok(rho.clone());
    }
    let mut m = CMat::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            m[(r, c)] = rho.element(r, c);
        }
    }
    Ok(DensityMatrix::renormalized(m, 0.05)?.0)
}

/* Figure pipelines ***********************************************************/

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    SupplFig1,
    SupplFig2,
}

impl std::str::FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "supplfig1" => Ok(Figure::SupplFig1),
            "supplfig2" => Ok(Figure::SupplFig2),
            other => Err(Error::InvalidParameter(format!(
                "unknown figure '{other}' (expected fig2|fig3|supplfig1|supplfig2)"
            ))),
        }
    }
}

/// The three demonstrated squeezing levels of the particle-to-wave run.
pub const DEMO_GAMMAS: [f64; 3] = [0.26, 0.37, 0.67];

fn gamma_tag(gamma: f64) -> String {
    format!("g{:03}", (gamma.abs() * 100.0).round() as i64)
}

#[derive(Debug, Serialize)]
struct Fig2Entry {
    gamma: f64,
    transmittance: f64,
    wigner_min: f64,
    css_fit_alpha: f64,
    css_fit_fidelity: f64,
    anticorrelation_a: f64,
}

#[derive(Debug, Serialize)]
struct Fig2Summary {
    input_wigner_min: f64,
    input_single_photon_fraction: f64,
    outputs: Vec<Fig2Entry>,
}

fn emit_photon_numbers(em: &mut Emitter, stem: &str, rho: &DensityMatrix) -> Result<()> {
    let mut csv = Vec::new();
    writeln!(csv, "n,p").map_err(Error::from)?;
    for (n, p) in rho.photon_distribution().iter().enumerate() {
        writeln!(csv, "{},{}", n, p).map_err(Error::from)?;
    }
    em.emit(&format!("{stem}.csv"), &csv)?;
    Ok(())
}

/// Particle-to-wave run: realistic photon through the finite-ancilla gate at
/// the three demonstration squeezing levels.
pub fn reproduce_fig2(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let mut em = Emitter::new(out_dir)?;
    let cutoff = cfg.cutoff;
    let input = prepare_experimental_photon(&cfg.budget(), cutoff)?;
    write_state(&mut em, "input_state.json", &input)?;
    let input_summary = emit_wigner_artifacts(&mut em, "input_wigner", &input, None, 201)?;
    emit_marginals(&mut em, "input_marginals", &input, 24)?;
    emit_photon_numbers(&mut em, "input_photon_numbers", &input)?;

    let mut outputs = Vec::new();
    for &gamma in &DEMO_GAMMAS {
        let tag = gamma_tag(gamma);
        let gate = SqueezeGateConfig::new(
            gamma,
            AncillaModel::experimental(SqueezeOrientation::SqueezeP),
        )?;
        let out = mb_squeeze_channel(&input, &gate)?;
        let out = apply_dephasing(&out, cfg.dephasing_stddev)?;
        write_state(&mut em, &format!("state_{tag}.json"), &out)?;
        let wsum = emit_wigner_artifacts(&mut em, &format!("wigner_{tag}"), &out, None, 201)?;
        emit_marginals(&mut em, &format!("marginals_{tag}"), &out, 24)?;
        emit_photon_numbers(&mut em, &format!("photon_numbers_{tag}"), &out)?;
        let (alpha, fid) = fit_css_amplitude(&out)?;
        let anti = anticorrelation(&out, 1.0)?;
        outputs.push(Fig2Entry {
            gamma,
            transmittance: gate.transmittance(),
            wigner_min: wsum.min_value,
            css_fit_alpha: alpha,
            css_fit_fidelity: fid,
            anticorrelation_a: anti.a_value,
        });
    }
    let summary = Fig2Summary {
        input_wigner_min: input_summary.min_value,
        input_single_photon_fraction: input.element(1, 1).re,
        outputs,
    };
    em.emit_json("summary.json", &summary)?;
    em.finish("reproduce fig2", cfg)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Fig3Summary {
    gamma: f64,
    input_wigner_min: f64,
    output_wigner_min: f64,
    input_variance_spread: f64,
    output_variance_spread: f64,
    ideal_ancilla_photon_fidelity: f64,
    input_css_fit_alpha: f64,
    output_anticorrelation_a: f64,
    input_anticorrelation_a: f64,
}

fn variance_spread(vars: &[f64]) -> f64 {
    let max = vars.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vars.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = vars.iter().sum::<f64>() / vars.len() as f64;
    (max - min) / mean
}

/// Wave-to-particle run: the superposition source state unsqueezed with
/// γ = -0.26 through the finite-ancilla gate.
pub fn reproduce_fig3(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let mut em = Emitter::new(out_dir)?;
    let cutoff = cfg.cutoff;
    let gamma = -0.26;
    // The realistic superposition source is the photon-subtracted squeezed
    // vacuum, which at matched squeezing is exactly the squeezed photon.
    let input = build_state(
        &InputStateSpec::SubtractedSqueezed { r: -gamma },
        &cfg.budget(),
        cutoff,
    )?;
    write_state(&mut em, "input_state.json", &input)?;
    let in_wigner = emit_wigner_artifacts(&mut em, "input_wigner", &input, None, 201)?;
    let in_vars = emit_marginals(&mut em, "input_marginals", &input, 24)?;
    emit_photon_numbers(&mut em, "input_photon_numbers", &input)?;
    let (in_alpha, _) = fit_css_amplitude(&input)?;
    let in_anti = anticorrelation(&input, 1.0)?;

    let gate = SqueezeGateConfig::new(
        gamma,
        AncillaModel::experimental(SqueezeOrientation::SqueezeX),
    )?;
    let out = mb_squeeze_channel(&input, &gate)?;
    let out = apply_dephasing(&out, cfg.dephasing_stddev)?;
    write_state(&mut em, "state_out.json", &out)?;
    let out_wigner = emit_wigner_artifacts(&mut em, "output_wigner", &out, None, 201)?;
    let out_vars = emit_marginals(&mut em, "output_marginals", &out, 24)?;
    emit_photon_numbers(&mut em, "output_photon_numbers", &out)?;
    let out_anti = anticorrelation(&out, 1.0)?;

    // Ideal-ancilla reference recovers the bare photon.
    let ideal_gate = SqueezeGateConfig::new(
        gamma,
        AncillaModel::pure_with_variance(5e-5, SqueezeOrientation::SqueezeX),
    )?;
    let ideal_out = mb_squeeze_channel(&input, &ideal_gate)?;
    let photon_fid = ideal_out.fidelity_pure(&Ket::fock(1, cutoff)?)?;

    let summary = Fig3Summary {
        gamma,
        input_wigner_min: in_wigner.min_value,
        output_wigner_min: out_wigner.min_value,
        input_variance_spread: variance_spread(&in_vars),
        output_variance_spread: variance_spread(&out_vars),
        ideal_ancilla_photon_fidelity: photon_fid,
        input_css_fit_alpha: in_alpha,
        output_anticorrelation_a: out_anti.a_value,
        input_anticorrelation_a: in_anti.a_value,
    };
    em.emit_json("summary.json", &summary)?;
    em.finish("reproduce fig3", cfg)?;
    Ok(())
}

/// States shown on the metric-curve figures: the realistic photon and the
/// three gate outputs.
fn metric_states(cfg: &RunConfig) -> Result<Vec<(String, DensityMatrix)>> {
    let cutoff = cfg.cutoff;
    let input = prepare_experimental_photon(&cfg.budget(), cutoff)?;
    let mut states = vec![("photon".to_string(), input.clone())];
    for &gamma in &DEMO_GAMMAS {
        let gate = SqueezeGateConfig::new(
            gamma,
            AncillaModel::experimental(SqueezeOrientation::SqueezeP),
        )?;
        let out = mb_squeeze_channel(&input, &gate)?;
        states.push((format!("squeezed_{}", gamma_tag(gamma)), out));
    }
    Ok(states)
}

/// Distinguishability/interference curves over β with both classical bounds.
pub fn reproduce_supplfig1(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let mut em = Emitter::new(out_dir)?;
    let betas: Vec<f64> = (1..=45).map(|i| 2.2 * i as f64 / 45.0).collect();
    let mut extrema = Vec::new();
    for (label, rho) in metric_states(cfg)? {
        let curve = metric_curve_beta(&rho, &betas, 0.0, &label)?;
        let mut csv = Vec::new();
        curve.write_csv(&mut csv)?;
        em.emit(&format!("curve_{label}.csv"), &csv)?;
        extrema.push(serde_json::json!({
            "state": label,
            "d_max_beta": curve.d_extremum.0,
            "d_max": curve.d_extremum.1,
            "v_min_beta": curve.v_extremum.0,
            "v_min": curve.v_extremum.1,
        }));
    }
    emit_bounds(&mut em, &betas)?;
    em.emit_json("summary.json", &serde_json::json!({ "extrema": extrema }))?;
    em.finish("reproduce supplfig1", cfg)?;
    Ok(())
}

/// Phase dependence of the metrics at each state's own extremal β₀.
pub fn reproduce_supplfig2(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let mut em = Emitter::new(out_dir)?;
    let betas: Vec<f64> = (1..=45).map(|i| 2.2 * i as f64 / 45.0).collect();
    let phases: Vec<f64> = (0..121)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / 120.0)
        .collect();
    let mut beta0s = Vec::new();
    for (label, rho) in metric_states(cfg)? {
        let base = metric_curve_beta(&rho, &betas, 0.0, &label)?;
        let v_curve = metric_curve_phase(&rho, base.v_extremum.0, &phases, &label)?;
        let mut csv = Vec::new();
        v_curve.write_csv(&mut csv)?;
        em.emit(&format!("phase_v_{label}.csv"), &csv)?;
        let d_curve = metric_curve_phase(&rho, base.d_extremum.0, &phases, &label)?;
        let mut csv = Vec::new();
        d_curve.write_csv(&mut csv)?;
        em.emit(&format!("phase_d_{label}.csv"), &csv)?;
        beta0s.push(serde_json::json!({
            "state": label,
            "beta0_for_v": base.v_extremum.0,
            "beta0_for_d": base.d_extremum.0,
        }));
    }
    em.emit_json("summary.json", &serde_json::json!({ "beta0": beta0s }))?;
    em.finish("reproduce supplfig2", cfg)?;
    Ok(())
}

pub fn cmd_reproduce(cfg: &RunConfig, figure: Figure, out_root: &Path) -> Result<PathBuf> {
    let dir = match figure {
        Figure::Fig2 => out_root.join("fig2"),
        Figure::Fig3 => out_root.join("fig3"),
        Figure::SupplFig1 => out_root.join("supplfig1"),
        Figure::SupplFig2 => out_root.join("supplfig2"),
    };
    match figure {
        Figure::Fig2 => reproduce_fig2(cfg, &dir)?,
        Figure::Fig3 => reproduce_fig3(cfg, &dir)?,
        Figure::SupplFig1 => reproduce_supplfig1(cfg, &dir)?,
        Figure::SupplFig2 => reproduce_supplfig2(cfg, &dir)?,
    }
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn config_round_trip_and_defaults() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.cutoff, 40);
        assert_eq!(back.tomography.phases, 12);
        // Partial configs fill with defaults.
        let partial: RunConfig =
            serde_json::from_str(r#"{"gate": {"gamma": -0.26}}"#).unwrap();
        assert_eq!(partial.cutoff, 40);
        assert!((partial.gate.gamma + 0.26).abs() < 1e-12);
        let gate = partial.gate.to_config().unwrap();
        assert_eq!(gate.orientation(), SqueezeOrientation::SqueezeX);
    }

    #[test]
    fn prepare_apply_round_trip() {
        let dir = tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.cutoff = 30;
        cfg.input_state = InputStateSpec::Fock { n: 1 };
        let state_path = cmd_prepare(&cfg, dir.path()).unwrap();
        let rho = read_state(&state_path).unwrap();
        assert!((rho.element(1, 1).re - 1.0).abs() < 1e-12);

        cfg.gate = GateSpec {
            gamma: 0.26,
            ancilla: AncillaSpec::default(),
            feedforward_gain: None,
        };
        let out_path = cmd_apply(&cfg, &state_path, dir.path()).unwrap();
        let out = read_state(&out_path).unwrap();
        assert!(out.validate().is_ok());
        // Squeezed output has stretched x.
        let m = out.quadrature_moments();
        assert!(m.cov[0][0] > 2.0 && m.cov[1][1] < 1.1);
        // Manifest exists and lists the state file.
        let manifest: RunManifest = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert!(manifest.files.iter().any(|f| f.path == "state_out.json"));
    }

    #[test]
    fn dephasing_averages_rotations() {
        let cat = Ket::css(C64::new(1.2, 0.0), Parity::Odd, 30)
            .unwrap()
            .to_density_matrix();
        let fuzzed = apply_dephasing(&cat, 0.2).unwrap();
        assert!(fuzzed.validate().is_ok());
        // Purity must drop; diagonal stays.
        assert!(fuzzed.purity() < cat.purity() - 1e-3);
        let d0: f64 = cat.photon_distribution().iter().sum();
        let d1: f64 = fuzzed.photon_distribution().iter().sum();
        assert!((d0 - d1).abs() < 1e-9);
        // σ = 0 is the identity.
        let same = apply_dephasing(&cat, 0.0).unwrap();
        assert!(same.trace_distance(&cat).unwrap() < 1e-15);
    }

    #[test]
    fn state_files_validate_on_reload() {
        let dir = tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.cutoff = 24;
        cfg.input_state = InputStateSpec::ExperimentalPhoton;
        let path = cmd_prepare(&cfg, dir.path()).unwrap();
        let rho = read_state(&path).unwrap();
        rho.validate().unwrap();
        assert!((rho.element(1, 1).re - 0.84).abs() < 0.01);
    }
}
