//! End-to-end dominating-set pipelines: LP initialization, factor-two
//! doubling stages, one-shot rounding, and the CDS extension on top.

use serde::Serialize;

use crate::cds::{build_cds, CdsParams, CDS_PARAM_DIVISOR};
use crate::cfds::{fractionality, validate_cfds, Cfds};
use crate::derand_color::{delta_factor_two, delta_one_shot, eps_log_bound};
use crate::derand_decomp::{n_factor_two, n_one_shot, ClusterStageConfig, FixOrder};
use crate::error::{Error, Result};
use crate::fractional::{initial_fds, lp_fractional_opt};
use crate::graph::{Graph, NodeId};
use crate::oracle::{brute_force_cds, brute_force_mds};
use crate::rounding::DEFAULT_ENUM_BUDGET;
use crate::sim::{CostModel, RoundStats, SimConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Decomposition-based stages, round count in terms of n.
    MdsN,
    /// Coloring-based stages, round count in terms of Δ.
    MdsDelta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PipelineParams {
    pub epsilon: f64,
    pub eps1: f64,
    pub rho: u32,
    pub eps2: f64,
    #[serde(rename = "F")]
    pub f: u64,
}

impl PipelineParams {
    pub fn new(g: &Graph, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::precondition("pipeline", format!("ε = {epsilon} not in (0, 1]")));
        }
        let eps1 = (epsilon / 16.0).min(0.25);
        let delta = g.max_degree().max(1) as f64;
        let rho = ((delta / epsilon).log2().ceil() as u32).max(1);
        let eps2 = eps1 / (100.0 * f64::from(rho));
        let f = eps_log_bound(256.0, eps1, 3, g.delta_tilde()).max(1);
        Ok(PipelineParams {
            epsilon,
            eps1,
            rho,
            eps2,
            f,
        })
    }

    /// `(1+ε)(2+ln Δ̃)`.
    pub fn ratio_bound(&self, g: &Graph) -> f64 {
        (1.0 + self.epsilon) * (2.0 + (g.delta_tilde() as f64).ln())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub epsilon: f64,
    pub cost_model: CostModel,
    pub beta: usize,
    pub enum_budget: usize,
    pub seed: u64,
    pub order: FixOrder,
    /// Brute-force optimum up to this many nodes, LP optimum above.
    pub opt_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            epsilon: 0.5,
            cost_model: CostModel::Congest,
            beta: SimConfig::default().beta,
            enum_budget: DEFAULT_ENUM_BUDGET,
            seed: 0,
            order: FixOrder::default(),
            opt_cap: 16,
        }
    }
}

impl RunConfig {
    pub fn sim(&self) -> SimConfig {
        SimConfig {
            cost_model: self.cost_model,
            beta: self.beta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphInfo {
    pub n: usize,
    pub m: usize,
    pub delta: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportParams {
    pub variant: &'static str,
    #[serde(flatten)]
    pub pipeline: PipelineParams,
    pub cost_model: CostModel,
    pub beta: usize,
    pub enum_budget: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub size: f64,
    pub fractionality: f64,
    pub sim_rounds: u64,
    pub charged_rounds: u64,
}

impl StageRecord {
    fn new(name: impl Into<String>, cfds: &Cfds, stats: &RoundStats) -> Self {
        StageRecord {
            name: name.into(),
            size: cfds.size_f64(),
            fractionality: fractionality(cfds).to_f64(),
            sim_rounds: stats.simulated_rounds,
            charged_rounds: stats.charged_rounds,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptKind {
    /// Exact integral optimum.
    Brute,
    /// Fractional LP optimum, a lower bound.
    Lp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinalInfo {
    pub size: usize,
    pub opt: Option<f64>,
    pub opt_kind: Option<OptKind>,
    pub ratio: Option<f64>,
    pub ratio_bound: f64,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub connected: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdsInfo {
    pub s_size: usize,
    pub clusters: usize,
    pub extra_centers: usize,
    pub tree_nodes: usize,
    pub size_bound: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub graph: GraphInfo,
    pub params: ReportParams,
    pub stages: Vec<StageRecord>,
    #[serde(rename = "final")]
    pub final_: FinalInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cds: Option<CdsInfo>,
}

impl RunReport {
    pub fn total_sim_rounds(&self) -> u64 {
        self.stages.iter().map(|s| s.sim_rounds).sum()
    }

    pub fn total_charged_rounds(&self) -> u64 {
        self.stages.iter().map(|s| s.charged_rounds).sum()
    }

    /// Whether the ratio respects `(1+ε)(2+ln Δ̃)`; vacuous without an
    /// optimum.
    pub fn within_bound(&self) -> bool {
        self.final_.ratio.is_none_or(|r| r <= self.final_.ratio_bound)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "graph n={} m={} delta={}\nparams variant={} eps={} eps1={} rho={} eps2={} F={}\n",
            self.graph.n,
            self.graph.m,
            self.graph.delta,
            self.params.variant,
            self.params.pipeline.epsilon,
            self.params.pipeline.eps1,
            self.params.pipeline.rho,
            self.params.pipeline.eps2,
            self.params.pipeline.f
        );
        for s in &self.stages {
            out += &format!(
                "stage {:<12} size={:.6} frac={:.6} sim={} charged={}\n",
                s.name, s.size, s.fractionality, s.sim_rounds, s.charged_rounds
            );
        }
        let f = &self.final_;
        out += &format!("final size={} valid={}", f.size, f.valid);
        if let (Some(opt), Some(ratio)) = (f.opt, f.ratio) {
            out += &format!(" opt={opt} ratio={ratio:.4} bound={:.4}", f.ratio_bound);
        }
        if let Some(c) = f.connected {
            out += &format!(" connected={c}");
        }
        out.push('\n');
        if let Some(c) = &self.cds {
            out += &format!(
                "cds s={} clusters={} extra_centers={} tree_nodes={} bound={}\n",
                c.s_size, c.clusters, c.extra_centers, c.tree_nodes, c.size_bound
            );
        }
        out
    }
}

/// Dominating set plus its report.
#[derive(Clone, Debug)]
pub struct MdsRun {
    pub set: Vec<NodeId>,
    pub cfds: Cfds,
    pub report: RunReport,
}

fn check_stage(g: &Graph, cfds: &Cfds, name: &str) -> Result<()> {
    let bad = validate_cfds(g, cfds)?;
    if !bad.is_empty() {
        return Err(Error::Invariant(format!("stage {name} leaves nodes {bad:?} uncovered")));
    }
    Ok(())
}

/// Factor-two doubling from the current FDS until it is `1/F`-fractional
/// or `rho` stages have run. Each stage runs at `r = max(⌈1/frac⌉, r_min)`.
pub fn part_two(
    g: &Graph,
    mut x: Cfds,
    eps: f64,
    rho: u32,
    f: u64,
    variant: Variant,
    cfg: &RunConfig,
) -> Result<(Cfds, Vec<StageRecord>)> {
    let sim = cfg.sim();
    let stage_cfg = ClusterStageConfig {
        budget: cfg.enum_budget,
        order: cfg.order,
        sim,
        ..ClusterStageConfig::default()
    };
    let r_min = eps_log_bound(256.0, eps, 3, g.delta_tilde().max(2));
    let mut records = Vec::new();
    for i in 0..rho {
        let frac = fractionality(&x);
        if is_at_least_inverse(frac, f) {
            break;
        }
        let r = inverse_ceil(frac).max(r_min);
        let (next, stats) = match variant {
            Variant::MdsN => {
                let s = n_factor_two(g, &x, eps, r, &stage_cfg)?;
                (s.cfds, s.stats)
            }
            Variant::MdsDelta => {
                let s = delta_factor_two(g, &x, eps, r, cfg.enum_budget, &sim)?;
                (s.cfds, s.stats)
            }
        };
        let name = format!("double-{}", i + 1);
        check_stage(g, &next, &name)?;
        records.push(StageRecord::new(name, &next, &stats));
        x = next;
    }
    Ok((x, records))
}

/// Whether `v ≥ 1/f`.
fn is_at_least_inverse(v: crate::fixed::FixedPoint, f: u64) -> bool {
    num_bigint::BigUint::from(v.numerator()) * f >= num_bigint::BigUint::from(1u32) << v.scale()
}

/// `⌈1/v⌉` for a nonzero grid value.
fn inverse_ceil(v: crate::fixed::FixedPoint) -> u64 {
    let one = num_bigint::BigUint::from(1u32) << v.scale();
    let num = num_bigint::BigUint::from(v.numerator());
    let q: num_bigint::BigUint = (one + &num - 1u32) / num;
    u64::try_from(q).unwrap_or(u64::MAX)
}

fn mds(g: &Graph, variant: Variant, cfg: &RunConfig) -> Result<MdsRun> {
    let params = PipelineParams::new(g, cfg.epsilon)?;
    let sim = cfg.sim();
    let mut stages = Vec::new();

    let init = initial_fds(g, params.eps1)?;
    check_stage(g, &init.cfds, "init")?;
    let mut init_stats = RoundStats::new(cfg.cost_model);
    init_stats.charge_oracle(init.charged_rounds, "fractional LP");
    stages.push(StageRecord::new("init", &init.cfds, &init_stats));

    let (x, doubling) = part_two(g, init.cfds, params.eps2, params.rho, params.f, variant, cfg)?;
    stages.extend(doubling);

    let (out, stats) = match variant {
        Variant::MdsN => {
            let stage_cfg = ClusterStageConfig {
                budget: cfg.enum_budget,
                order: cfg.order,
                sim,
                ..ClusterStageConfig::default()
            };
            let s = n_one_shot(g, &x, params.f, &stage_cfg)?;
            (s.cfds, s.stats)
        }
        Variant::MdsDelta => {
            let s = delta_one_shot(g, &x, params.f, cfg.enum_budget, &sim)?;
            (s.cfds, s.stats)
        }
    };
    check_stage(g, &out, "one-shot")?;
    if !out.is_integral() {
        return Err(Error::Invariant("one-shot output is not integral".into()));
    }
    stages.push(StageRecord::new("one-shot", &out, &stats));
    let set = out.members();
    let valid = g.is_dominating(&out.member_flags());
    let report = RunReport {
        graph: GraphInfo {
            n: g.n(),
            m: g.m(),
            delta: g.max_degree(),
        },
        params: ReportParams {
            variant: match variant {
                Variant::MdsN => "mds-n",
                Variant::MdsDelta => "mds-delta",
            },
            pipeline: params,
            cost_model: cfg.cost_model,
            beta: cfg.beta,
            enum_budget: cfg.enum_budget,
            seed: cfg.seed,
        },
        stages,
        final_: FinalInfo {
            size: set.len(),
            opt: None,
            opt_kind: None,
            ratio: None,
            ratio_bound: params.ratio_bound(g),
            valid,
            connected: None,
        },
        cds: None,
    };
    Ok(MdsRun { set, cfds: out, report })
}

/// Optimum for the ratio: brute force up to `cap` nodes, else the LP value.
pub fn reference_opt(g: &Graph, cap: usize) -> Result<(f64, OptKind)> {
    if g.n() <= cap {
        Ok((brute_force_mds(g, cap)?.0 as f64, OptKind::Brute))
    } else {
        Ok((lp_fractional_opt(g, 0.1)?.objective, OptKind::Lp))
    }
}

fn attach_opt(report: &mut RunReport, opt: f64, kind: OptKind) {
    report.final_.opt = Some(opt);
    report.final_.opt_kind = Some(kind);
    report.final_.ratio = (opt > 0.0).then(|| report.final_.size as f64 / opt);
}

fn run(g: &Graph, variant: Variant, cfg: &RunConfig, with_opt: bool) -> Result<MdsRun> {
    let mut out = mds(g, variant, cfg)?;
    if with_opt {
        let (opt, kind) = reference_opt(g, cfg.opt_cap)?;
        attach_opt(&mut out.report, opt, kind);
    }
    Ok(out)
}

pub fn run_mds_n(g: &Graph, cfg: &RunConfig) -> Result<MdsRun> {
    run(g, Variant::MdsN, cfg, true)
}

pub fn run_mds_delta(g: &Graph, cfg: &RunConfig) -> Result<MdsRun> {
    run(g, Variant::MdsDelta, cfg, true)
}

/// Pipeline without the optimum attached.
pub fn run_mds(g: &Graph, variant: Variant, cfg: &RunConfig) -> Result<MdsRun> {
    run(g, variant, cfg, false)
}

/// `run_mds_n` then the CDS construction; the optimum reported is the
/// connected one when `n` is within the cap, else the LP lower bound.
pub fn run_cds(g: &Graph, cfg: &RunConfig) -> Result<MdsRun> {
    if g.n() == 0 || !g.is_connected() {
        return Err(Error::precondition("cds", "graph must be connected and nonempty"));
    }
    let mut base = run(g, Variant::MdsN, cfg, false)?;
    let sim = cfg.sim();
    let cds = build_cds(g, &base.set, CdsParams::for_n(g.n(), CDS_PARAM_DIVISOR), &sim)?;
    let member: Vec<bool> = {
        let mut m = vec![false; g.n()];
        for &v in &cds.set {
            m[v] = true;
        }
        m
    };
    let cfds = Cfds::from_set(&member, base.cfds.scale());
    base.report.stages.push(StageRecord::new("cds", &cfds, &cds.stats));
    let r = &mut base.report;
    r.params.variant = "cds";
    r.final_.size = cds.set.len();
    r.final_.valid = g.is_dominating(&member);
    r.final_.connected = Some(g.induces_connected(&member));
    r.final_.ratio_bound *= 3.0;
    r.cds = Some(CdsInfo {
        s_size: cds.s_size,
        clusters: cds.num_clusters(),
        extra_centers: cds.clustering.extra_centers,
        tree_nodes: cds.tree_nodes,
        size_bound: cds.size_bound(),
    });
    if g.n() <= cfg.opt_cap.min(crate::oracle::DEFAULT_CDS_CAP) {
        attach_opt(r, brute_force_cds(g, cfg.opt_cap)?.0 as f64, OptKind::Brute);
    } else {
        attach_opt(r, lp_fractional_opt(g, 0.1)?.objective, OptKind::Lp);
    }
    Ok(MdsRun {
        set: cds.set,
        cfds,
        report: base.report,
    })
}
