//! Stage orchestration: parse, cluster, extract, place, flip, report.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{build_clusters, ClusterThresholds, ClusteredNetlist, ClusteringError};
use crate::dataflow::{extract_dataflow, DataflowError, DataflowGraph, ExtractionConfig};
use crate::finetune::{flip_pass, FinetuneError, FlipConfig, FlipDecision};
use crate::metrics::{
    auto_capacity, congestion, emit_report, flip_log, CongestionGrid, MetricsError, RunReport, StageTiming,
};
use crate::netlist::{bundle_buses, parse_netlist, parse_verilog_subset, GeometrySidecar, Netlist, NetlistError};
use crate::placer::{
    global_place_clusters, macro_blocks, normalize_macro_area, run_sa, Floorplan, GpConfig, LossBreakdown,
    LossConfig, LossModel, MacroPlacementProblem, PlacerError, Schedule, SequencePair,
};
use crate::render::{render_svg, SvgOptions};

/// Wall clock where the platform has one; browsers without a clock read zero.
struct Instant(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Instant {
    fn now() -> Self {
        #[cfg(not(target_arch = "wasm32"))]
        return Instant(std::time::Instant::now());
        #[cfg(target_arch = "wasm32")]
        return Instant();
    }

    fn elapsed(&self) -> std::time::Duration {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed();
        #[cfg(target_arch = "wasm32")]
        return std::time::Duration::ZERO;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Parse,
    Cluster,
    Extract,
    Gp,
    Sa,
    Flip,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Parse,
        Stage::Cluster,
        Stage::Extract,
        Stage::Gp,
        Stage::Sa,
        Stage::Flip,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::Cluster => "cluster",
            Stage::Extract => "extract",
            Stage::Gp => "gp",
            Stage::Sa => "sa",
            Stage::Flip => "flip",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: NetlistError,
    },
    #[error("stage cluster: {0}")]
    Cluster(#[from] ClusteringError),
    #[error("stage extract: {0}")]
    Extract(#[from] DataflowError),
    #[error("stage {stage}: {source}")]
    Place {
        stage: Stage,
        #[source]
        source: PlacerError,
    },
    #[error("stage flip: {0}")]
    Finetune(#[from] FinetuneError),
    #[error("stage report: {0}")]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    /// JSON netlist document.
    pub netlist: Option<PathBuf>,
    /// Structural Verilog, used with `sidecar`.
    pub verilog: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Bins per outline axis.
    pub bins: usize,
    /// Per-bin capacity; derived from a baseline floorplan when unset.
    pub capacity: Option<f64>,
    /// Demand quantile of the baseline used as derived capacity.
    pub capacity_quantile: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            bins: 32,
            capacity: None,
            capacity_quantile: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub svg_edges: bool,
    pub svg_heat: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            svg_edges: false,
            svg_heat: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub run: String,
    pub seed: u64,
    /// Last stage to execute.
    pub stop_after: Stage,
    /// GP and annealing alternations.
    pub rounds: usize,
    pub input: InputConfig,
    pub clustering: ClusterThresholds,
    pub extraction: ExtractionConfig,
    pub gp: GpConfig,
    pub sa: Schedule,
    pub loss: LossConfig,
    pub flip: FlipConfig,
    pub metrics: MetricsConfig,
    pub output: OutputConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            run: "run".into(),
            seed: 1,
            stop_after: Stage::Report,
            rounds: 2,
            input: InputConfig::default(),
            clustering: ClusterThresholds::default(),
            extraction: ExtractionConfig::default(),
            gp: GpConfig::default(),
            sa: Schedule::default(),
            loss: LossConfig::default(),
            flip: FlipConfig::default(),
            metrics: MetricsConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Strict TOML parse; unknown keys are errors.
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let config: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.metrics.bins == 0 {
            return bad("metrics.bins must be positive".into());
        }
        if let Some(c) = self.metrics.capacity {
            if !(c > 0.0) {
                return bad(format!("metrics.capacity {c} must be positive"));
            }
        }
        if self.run.is_empty() || self.run.contains(['/', '\\']) {
            return bad(format!("run name `{}` must be a plain file stem", self.run));
        }
        self.sa.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Resolves relative input paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        for p in [&mut self.input.netlist, &mut self.input.verilog, &mut self.input.sidecar]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// Independent seed per stage so toggling one stage leaves the others' streams intact.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads and bundles the configured input netlist.
pub fn load_netlist(input: &InputConfig) -> Result<Netlist, PipelineError> {
    let netlist = match (&input.netlist, &input.verilog) {
        (Some(path), None) => parse_netlist(&read(path)?).map_err(|source| PipelineError::Parse {
            path: path.clone(),
            source,
        })?,
        (None, Some(path)) => {
            let side = input
                .sidecar
                .as_ref()
                .ok_or_else(|| PipelineError::Config("input.verilog needs input.sidecar".into()))?;
            let sidecar: GeometrySidecar =
                serde_json::from_str(&read(side)?).map_err(|e| PipelineError::Parse {
                    path: side.clone(),
                    source: NetlistError::Document(e),
                })?;
            parse_verilog_subset(&read(path)?, &sidecar).map_err(|source| PipelineError::Parse {
                path: path.clone(),
                source,
            })?
        }
        (Some(_), Some(_)) => {
            return Err(PipelineError::Config("set only one of input.netlist and input.verilog".into()))
        }
        (None, None) => return Err(PipelineError::Config("no input netlist configured".into())),
    };
    Ok(bundle_buses(&netlist))
}

/// Everything a run produced, up to the stage it stopped after.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub config: PipelineConfig,
    pub netlist: Netlist,
    pub clustered: Option<ClusteredNetlist>,
    pub graph: Option<DataflowGraph>,
    pub floorplan: Option<Floorplan>,
    pub sequence_pair: Option<SequencePair>,
    pub loss: Option<LossBreakdown>,
    pub flips: Option<Vec<FlipDecision>>,
    pub grid: Option<CongestionGrid>,
    pub report: Option<RunReport>,
    pub timing: StageTiming,
}

/// Runs from a file-backed config.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    config.validate()?;
    let t = Instant::now();
    let netlist = load_netlist(&config.input)?;
    run_on_netlist(netlist, config, t.elapsed().as_secs_f64())
}

fn place_err(stage: Stage) -> impl Fn(PlacerError) -> PipelineError {
    move |source| PipelineError::Place { stage, source }
}

/// Runs every stage after parsing on an in-memory netlist.
pub fn run_on_netlist(
    netlist: Netlist,
    config: &PipelineConfig,
    parse_seconds: f64,
) -> Result<PipelineRun, PipelineError> {
    config.validate()?;
    let mut timing = StageTiming::default();
    timing.record("parse", parse_seconds);
    let mut run = PipelineRun {
        config: config.clone(),
        netlist,
        clustered: None,
        graph: None,
        floorplan: None,
        sequence_pair: None,
        loss: None,
        flips: None,
        grid: None,
        report: None,
        timing: StageTiming::default(),
    };
    let stop = config.stop_after;
    if stop == Stage::Parse {
        run.timing = timing;
        return Ok(run);
    }

    let t = Instant::now();
    let cn = build_clusters(&run.netlist, &config.clustering)?;
    timing.record("cluster", t.elapsed().as_secs_f64());
    run.clustered = Some(cn.clone());
    if stop == Stage::Cluster {
        run.timing = timing;
        return Ok(run);
    }

    let t = Instant::now();
    let graph = extract_dataflow(&cn, &run.netlist, &config.extraction)?;
    timing.record("extract", t.elapsed().as_secs_f64());
    run.graph = Some(graph.clone());
    if stop == Stage::Extract {
        run.timing = timing;
        return Ok(run);
    }

    let blocks = macro_blocks(&cn, &run.netlist);
    let mut fp = Floorplan::new(run.netlist.outline, &cn, &blocks);
    let areas: Vec<f64> = blocks.iter().map(|b| b.area).collect();
    let area_factors = normalize_macro_area(&areas);
    let model = LossModel::new(&graph, &fp, &area_factors, &config.loss);
    let mut gp_rng = ChaCha8Rng::seed_from_u64(stage_seed(config.seed, "gp"));
    let sa_seed = stage_seed(config.seed, "sa");

    // round 0 GP sees IO anchors only; it doubles as the congestion baseline
    let t = Instant::now();
    global_place_clusters(&mut fp, &cn, &graph, false, &config.gp, &mut gp_rng).map_err(place_err(Stage::Gp))?;
    let sp = SequencePair::identity(fp.macros.len());
    let baseline = MacroPlacementProblem::new(fp.clone(), model.clone())
        .evaluate(&sp)
        .map_err(place_err(Stage::Gp))?
        .0;
    let mut gp_secs = t.elapsed().as_secs_f64();
    if stop == Stage::Gp {
        timing.record("gp", gp_secs);
        run.floorplan = Some(baseline);
        run.timing = timing;
        return Ok(run);
    }

    let mut sa_secs = 0.0;
    let mut sp = sp;
    let mut loss = LossBreakdown::default();
    for round in 0..config.rounds {
        if round > 0 {
            let t = Instant::now();
            global_place_clusters(&mut fp, &cn, &graph, true, &config.gp, &mut gp_rng)
                .map_err(place_err(Stage::Gp))?;
            gp_secs += t.elapsed().as_secs_f64();
        }
        let t = Instant::now();
        let problem = MacroPlacementProblem::new(fp.clone(), model.clone());
        let out = run_sa(&problem, &sp, &config.sa, sa_seed.wrapping_add(round as u64))
            .map_err(place_err(Stage::Sa))?;
        sa_secs += t.elapsed().as_secs_f64();
        sp = out.sequence_pair;
        fp = out.floorplan;
        loss = out.loss;
    }
    timing.record("gp", gp_secs);
    timing.record("sa", sa_secs);
    run.sequence_pair = Some(sp);
    run.loss = Some(loss);
    if stop == Stage::Sa {
        run.floorplan = Some(fp);
        run.timing = timing;
        return Ok(run);
    }

    let t = Instant::now();
    let flips = if config.flip.enabled {
        flip_pass(&mut fp, &graph, &config.flip)?
    } else {
        Vec::new()
    };
    let loss = model.evaluate(&fp).map_err(place_err(Stage::Flip))?;
    timing.record("flip", t.elapsed().as_secs_f64());
    run.loss = Some(loss);
    run.flips = Some(flips.clone());
    if stop == Stage::Flip {
        run.floorplan = Some(fp);
        run.timing = timing;
        return Ok(run);
    }

    let t = Instant::now();
    let bins = config.metrics.bins as f64;
    let (bw, bh) = (fp.outline.width / bins, fp.outline.height / bins);
    let capacity = match config.metrics.capacity {
        Some(c) => c,
        None => {
            let (grid, _) = congestion(&baseline, &graph, bw, bh, 1.0)?;
            auto_capacity(&grid, config.metrics.capacity_quantile)
        }
    };
    let (grid, _) = congestion(&fp, &graph, bw, bh, capacity)?;
    let mut report = emit_report(&fp, &graph, &grid, loss, flips, None)?;
    report.run = config.run.clone();
    report.seed = config.seed;
    timing.record("report", t.elapsed().as_secs_f64());
    run.floorplan = Some(fp);
    run.grid = Some(grid);
    run.report = Some(report);
    run.timing = timing;
    Ok(run)
}

impl PipelineRun {
    /// Output files as `(file name, contents)`, in a fixed order. Only the
    /// timing file varies between identical runs.
    pub fn artifacts(&self) -> Vec<(String, String)> {
        let stem = &self.config.run;
        let mut out = Vec::new();
        if let Some(cn) = &self.clustered {
            out.push((format!("{stem}.clusters.txt"), cn.dump()));
        }
        if let Some(g) = &self.graph {
            out.push((format!("{stem}.graph.txt"), g.export()));
        }
        if let (Some(fp), Some(cn)) = (&self.floorplan, &self.clustered) {
            out.push((format!("{stem}.placement.txt"), fp.placement_text(cn)));
            out.push((format!("{stem}.placement.json"), fp.to_json()));
            let graph = self.graph.clone().unwrap_or_default();
            let heat = if self.config.output.svg_heat { self.grid.as_ref() } else { None };
            let opts = SvgOptions {
                edges: self.config.output.svg_edges,
                heat,
                width_px: None,
            };
            out.push((format!("{stem}.svg"), render_svg(fp, &graph, Some(cn), &opts)));
        }
        if let Some(flips) = &self.flips {
            out.push((format!("{stem}.flips.txt"), flip_log(flips)));
        }
        if let Some(r) = &self.report {
            out.push((format!("{stem}.report.txt"), r.to_text()));
            out.push((format!("{stem}.report.json"), r.to_json()));
        }
        if let Some(g) = &self.grid {
            out.push((format!("{stem}.congestion.csv"), g.to_csv()));
        }
        out.push((format!("{stem}.timing.json"), self.timing.to_json()));
        out
    }

    /// Writes every artifact into `dir`, creating it if needed.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| PipelineError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        for (name, text) in self.artifacts() {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    fn small() -> Netlist {
        generate(&SynthConfig {
            macros: 3,
            blocks: 2,
            cells_per_block: 60,
            ..Default::default()
        })
    }

    fn fast() -> PipelineConfig {
        PipelineConfig {
            sa: Schedule {
                moves_per_temp: 30,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn defaults_are_paper_faithful() {
        let c = PipelineConfig::default();
        assert_eq!(c.loss.variant, crate::placer::LossVariant::Eq8);
        assert!(c.flip.enabled && c.flip.guard);
        assert_eq!(c.loss.boundary_weight, 0.0);
    }

    #[test]
    fn toml_is_strict() {
        let ok = "run = \"x\"\nseed = 4\n[sa]\ncooling = 0.9\n[loss]\nvariant = \"eq5\"\n";
        let c = PipelineConfig::from_toml(ok).unwrap();
        assert_eq!((c.seed, c.sa.cooling), (4, 0.9));
        assert!(PipelineConfig::from_toml("sed = 4\n").is_err());
        assert!(PipelineConfig::from_toml("[sa]\ncooling = 1.5\n").is_err());
        assert!(PipelineConfig::from_toml("[gp]\nbogus = 1\n").is_err());
    }

    #[test]
    fn stage_seeds_differ() {
        assert_ne!(stage_seed(1, "gp"), stage_seed(1, "sa"));
        assert_eq!(stage_seed(7, "gp"), stage_seed(7, "gp"));
    }

    #[test]
    fn stops_after_extract() {
        let c = PipelineConfig {
            stop_after: Stage::Extract,
            ..fast()
        };
        let run = run_on_netlist(small(), &c, 0.0).unwrap();
        let names: Vec<String> = run.artifacts().into_iter().map(|(n, _)| n).collect();
        assert!(names.contains(&"run.graph.txt".to_string()));
        assert!(!names.iter().any(|n| n.contains("placement")));
    }

    #[test]
    fn full_run_is_deterministic() {
        let a = run_on_netlist(small(), &fast(), 0.0).unwrap();
        let b = run_on_netlist(small(), &fast(), 0.0).unwrap();
        let strip = |r: &PipelineRun| {
            r.artifacts()
                .into_iter()
                .filter(|(n, _)| !n.ends_with("timing.json"))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        let report = a.report.unwrap();
        assert_eq!(report.flips.len(), 3);
        let shares: f64 = a.timing.shares().iter().map(|(_, s)| s).sum();
        assert!((shares - 1.0).abs() < 1e-6);
    }
}
