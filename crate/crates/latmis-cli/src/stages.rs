use crate::artifact::{Kind, Store};
use latmis::annealer::{default_gamma0, evolve, gap_sweep, Evolution, Schedule, SpectrumResult};
use latmis::defects::{defect_sweep, is_monotone, random_defects, reroute, sweep_csv, DefectMap, SweepRow};
use latmis::drawing::Drawing;
use latmis::embedder::{embed_planar, ClusterLayout};
use latmis::error::{Error, Result};
use latmis::gadget::{planarize, Planarized};
use latmis::hardware::{compile_direct_layout, compile_random_layout, compile_simulated_triangular, HardwareProgram};
use latmis::io::{read_graph, GraphDoc};
use latmis::ising::IsingInstance;
use latmis::oracle::Budget;
use latmis::planar::is_planar;
use latmis::reduction::mis_to_ising;
use latmis::verify::{verify_pipeline, Certificate, StageOutputs, Status};
use latmis::Graph;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Stage {
    Planarize,
    Reduce,
    Embed,
    Compile,
    Route,
    Verify,
    Anneal,
}

impl Stage {
    pub const ALL: [Stage; 7] = [Stage::Planarize, Stage::Reduce, Stage::Embed, Stage::Compile, Stage::Route, Stage::Verify, Stage::Anneal];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Planarize => "planarize",
            Stage::Reduce => "reduce",
            Stage::Embed => "embed",
            Stage::Compile => "compile",
            Stage::Route => "route",
            Stage::Verify => "verify",
            Stage::Anneal => "anneal",
        }
    }
}

/// Parses `all` or a comma-separated list of stages in pipeline order.
pub fn parse_stages(text: &str) -> Result<Vec<Stage>> {
    if text.trim() == "all" {
        return Ok(Stage::ALL.to_vec());
    }
    let mut stages = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let s = Stage::ALL.into_iter().find(|s| s.name() == part).ok_or_else(|| Error::Config(format!("unknown stage `{part}`")))?;
        if stages.last().is_some_and(|&last| last >= s) {
            return Err(Error::Config(format!("stage `{part}` is out of pipeline order")));
        }
        stages.push(s);
    }
    if stages.is_empty() {
        return Err(Error::Config("no stages given".into()));
    }
    Ok(stages)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// Frustrated square pattern simulating a triangular lattice.
    Fig6,
    /// Direct embedding on a square lattice with one antiferromagnetic bond per plaquette.
    Direct,
    /// Square lattice with random bond signs (experimental).
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// The reduced Ising instance.
    Ising,
    /// The compiled program with deleted qubits removed.
    Program,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub threshold: f64,
    pub pattern: Pattern,
    pub seed: u64,
    pub budget: Budget,
    pub density: f64,
    pub defects: Option<PathBuf>,
    pub gamma0: Option<f64>,
    pub points: usize,
    pub total_time: f64,
    pub source: Source,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.input {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        if let Some(p) = &self.defects {
            if !p.is_file() {
                return Err(Error::Config(format!("defect file {} does not exist", p.display())));
            }
        }
        let b = &self.budget;
        if b.spins == 0 || b.vertices == 0 || b.width == 0 || b.max_configs == 0 {
            return Err(Error::Config("oracle budgets must be positive".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Config(format!("threshold must be positive, got {}", self.threshold)));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::Config(format!("defect density {} is outside [0, 1]", self.density)));
        }
        if self.points < 2 {
            return Err(Error::Config(format!("gap sweep needs at least 2 points, got {}", self.points)));
        }
        if self.gamma0.is_some_and(|g| !(g > 0.0)) || !(self.total_time >= 0.0) {
            return Err(Error::Config("gamma0 must be positive and T non-negative".into()));
        }
        Ok(())
    }
}

/// An error tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Routed {
    pub density: f64,
    pub seed: u64,
    pub defects: DefectMap,
    pub program: HardwareProgram,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Anneal {
    pub source: Source,
    pub spins: usize,
    pub gamma0: f64,
    pub points: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolution: Option<Evolution>,
    /// Why the spectrum was not computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sweep {
    pub seed: u64,
    pub rows: Vec<SweepRow>,
    pub monotone: bool,
}

/// Stage runner over one artifact directory.
///
/// With `fresh` set, only artifacts produced by this runner are used;
/// otherwise missing ones are read from the directory.
pub struct Ctx {
    pub cfg: PipelineConfig,
    pub store: Store,
    fresh: bool,
    graph: Option<(Graph, Option<Drawing>)>,
    planarized: Option<Planarized>,
    ising: Option<IsingInstance>,
    layout: Option<ClusterLayout>,
    program: Option<HardwareProgram>,
    routed: Option<Routed>,
    /// Set by `run`: an anneal over budget is recorded instead of failing.
    pub tolerate_budget: bool,
    pub certificate: Option<Certificate>,
}

impl Ctx {
    pub fn new(cfg: PipelineConfig, fresh: bool) -> Result<Self> {
        cfg.validate()?;
        let store = Store::new(&cfg.out)?;
        Ok(Ctx {
            cfg,
            store,
            fresh,
            graph: None,
            planarized: None,
            ising: None,
            layout: None,
            program: None,
            routed: None,
            tolerate_budget: false,
            certificate: None,
        })
    }

    fn stored<T: DeserializeOwned + Clone>(&self, mem: &Option<T>, kind: Kind) -> Result<Option<T>> {
        match mem {
            Some(x) => Ok(Some(x.clone())),
            None if self.fresh => Ok(None),
            None => self.store.read_opt(kind),
        }
    }

    fn require<T: DeserializeOwned + Clone>(&self, mem: &Option<T>, kind: Kind) -> Result<T> {
        self.stored(mem, kind)?.ok_or_else(|| Error::MissingArtifact(self.store.path(&kind.file()).display().to_string()))
    }

    /// The input graph: `--input` if given, else the stored graph artifact.
    fn input(&mut self) -> Result<(Graph, Option<Drawing>)> {
        if self.graph.is_none() {
            self.graph = Some(match &self.cfg.input {
                Some(p) => read_graph(p)?,
                None if !self.fresh && self.store.has(Kind::Graph) => self.store.read::<GraphDoc>(Kind::Graph)?.into_parts()?,
                None => return Err(Error::Config("no input graph; pass --input".into())),
            });
        }
        Ok(self.graph.clone().unwrap())
    }

    /// Graph the later stages work on: planarized if available.
    fn target(&mut self) -> Result<Graph> {
        match self.stored(&self.planarized, Kind::Planarized)? {
            Some(p) => Ok(p.graph),
            None => Ok(self.input()?.0),
        }
    }

    pub fn run_stage(&mut self, stage: Stage) -> std::result::Result<(), StageError> {
        let r = match stage {
            Stage::Planarize => self.planarize(),
            Stage::Reduce => self.reduce(),
            Stage::Embed => self.embed(),
            Stage::Compile => self.compile(),
            Stage::Route => self.route(),
            Stage::Verify => self.verify(),
            Stage::Anneal => self.anneal(),
        };
        r.map_err(|error| StageError { stage: stage.name(), error })
    }

    pub fn planarize(&mut self) -> Result<()> {
        let (g, d) = self.input()?;
        let p = match &d {
            Some(d) => planarize(&g, d)?,
            None if is_planar(&g) => Planarized { graph: g.clone(), original_vertices: g.n(), crossings: Vec::new(), cardinality_offset: 0 },
            None => return Err(Error::Config("graph is not planar; give vertex coordinates to planarize it".into())),
        };
        self.store.write(Kind::Graph, &GraphDoc::from_parts(&g, d.as_ref()))?;
        self.store.write(Kind::Planarized, &p)?;
        println!("planarize: {} crossings, {} vertices, offset {}", p.crossings.len(), p.graph.n(), p.cardinality_offset);
        self.planarized = Some(p);
        Ok(())
    }

    pub fn reduce(&mut self) -> Result<()> {
        let g = self.target()?;
        let j = self.cfg.threshold;
        let inst = mis_to_ising(&g, &vec![-j; g.m()], j)?;
        self.store.write(Kind::Ising, &inst)?;
        println!("reduce: {} spins, {} couplings, J = {j}", inst.spins, inst.couplings.len());
        self.ising = Some(inst);
        Ok(())
    }

    pub fn embed(&mut self) -> Result<()> {
        let g = self.target()?;
        let layout = embed_planar(&g)?;
        self.store.write(Kind::Layout, &layout)?;
        let s = layout.stats();
        println!("embed: side {}, {} sites, largest cluster {}", s.side, s.sites, s.max_cluster_size);
        self.layout = Some(layout);
        Ok(())
    }

    pub fn compile(&mut self) -> Result<()> {
        let layout = self.require(&self.layout, Kind::Layout)?;
        let prog = match self.cfg.pattern {
            Pattern::Fig6 => compile_simulated_triangular(&layout)?,
            Pattern::Direct => compile_direct_layout(&layout)?,
            Pattern::Random => compile_random_layout(&layout, self.cfg.seed)?,
        };
        prog.check()?;
        self.store.write(Kind::Program, &prog)?;
        let s = prog.stats();
        println!("compile: {} sites ({} x {}), {} deleted, {} working", s.sites, s.width, s.height, s.deleted, s.working);
        self.program = Some(prog);
        Ok(())
    }

    pub fn route(&mut self) -> Result<()> {
        let prog = self.require(&self.program, Kind::Program)?;
        let defects = match &self.cfg.defects {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                match serde_json::from_str::<DefectMap>(&text) {
                    Ok(map) => map,
                    Err(_) => DefectMap::from_sites(serde_json::from_str::<Vec<usize>>(&text)?),
                }
            }
            None => random_defects(&prog, self.cfg.density, self.cfg.seed, 0),
        };
        if let Some(&s) = defects.implicated().iter().find(|&&s| s >= prog.sites.len()) {
            return Err(Error::Config(format!("defective site {s} is not in the program")));
        }
        let program = reroute(&prog, &defects)?;
        let routed = Routed { density: self.cfg.density, seed: self.cfg.seed, defects, program };
        self.store.write(Kind::Routed, &routed)?;
        println!("route: {} defective sites, {} sites kept", routed.defects.implicated().len(), routed.program.kept().iter().filter(|&&k| k).count());
        self.routed = Some(routed);
        Ok(())
    }

    pub fn verify(&mut self) -> Result<()> {
        let (g, _) = self.input()?;
        let ising = self.stored(&self.ising, Kind::Ising)?;
        let program = match self.stored(&self.routed, Kind::Routed)? {
            Some(r) => Some(r.program),
            None => self.stored(&self.program, Kind::Program)?,
        };
        let out = StageOutputs {
            planarized: self.stored(&self.planarized, Kind::Planarized)?,
            threshold: ising.as_ref().map_or(self.cfg.threshold, |i| i.threshold),
            ising,
            layout: self.stored(&self.layout, Kind::Layout)?,
            program,
            realized: None,
        };
        let cert = verify_pipeline(&g, &out, &self.cfg.budget);
        self.store.write_json("certificate.json", &cert)?;
        let count = |s: Status| cert.checks.iter().filter(|c| c.status == s).count();
        println!(
            "verify: {} ({} pass, {} fail, {} skipped)",
            if cert.passed { "PASS" } else { "FAIL" },
            count(Status::Pass),
            count(Status::Fail),
            count(Status::Skipped)
        );
        for c in cert.failures() {
            println!("  {}/{}: {}", c.stage, c.name, c.detail);
        }
        self.certificate = Some(cert);
        Ok(())
    }

    fn anneal_instance(&mut self) -> Result<IsingInstance> {
        match self.cfg.source {
            Source::Ising => self.require(&self.ising, Kind::Ising),
            Source::Program => {
                let prog = match self.stored(&self.routed, Kind::Routed)? {
                    Some(r) => r.program,
                    None => self.require(&self.program, Kind::Program)?,
                };
                Ok(prog.reduced().0)
            }
        }
    }

    pub fn anneal(&mut self) -> Result<()> {
        let inst = self.anneal_instance()?;
        let gamma0 = self.cfg.gamma0.unwrap_or_else(|| default_gamma0(&inst));
        let mut rec = Anneal {
            source: self.cfg.source,
            spins: inst.spins,
            gamma0,
            points: self.cfg.points,
            seed: self.cfg.seed,
            spectrum: None,
            total_time: None,
            evolution: None,
            skipped: None,
        };
        let result = gap_sweep(&inst, gamma0, self.cfg.points).and_then(|s| {
            rec.spectrum = Some(s);
            if self.cfg.total_time > 0.0 {
                rec.total_time = Some(self.cfg.total_time);
                rec.evolution = Some(evolve(&inst, &Schedule::linear(&inst, self.cfg.total_time, gamma0))?);
            }
            Ok(())
        });
        match result {
            Ok(()) => {}
            Err(e @ Error::BudgetExceeded { .. }) if self.tolerate_budget => rec.skipped = Some(e.to_string()),
            Err(e) => return Err(e),
        }
        self.store.write(Kind::Spectrum, &rec)?;
        match (&rec.spectrum, &rec.skipped) {
            (Some(s), _) => {
                self.store.write_text("spectrum.csv", &s.csv())?;
                print!("anneal: {} spins, g_min {} at gamma {}", inst.spins, s.g_min, s.gamma_star);
                match &rec.evolution {
                    Some(e) => println!(", overlap {} after T = {}", e.overlap, self.cfg.total_time),
                    None => println!(),
                }
            }
            (None, Some(why)) => println!("anneal: skipped, {why}"),
            (None, None) => unreachable!(),
        }
        Ok(())
    }

    pub fn sweep(&mut self, densities: &[f64], trials: usize) -> Result<()> {
        let prog = self.require(&self.program, Kind::Program)?;
        let rows = defect_sweep(&prog, densities, trials, self.cfg.seed);
        let sweep = Sweep { seed: self.cfg.seed, monotone: is_monotone(&rows), rows };
        self.store.write(Kind::Sweep, &sweep)?;
        self.store.write_text("sweep.csv", &sweep_csv(&sweep.rows))?;
        for r in &sweep.rows {
            println!("sweep-defects: density {} success {}/{}", r.density, r.successes, r.trials);
        }
        Ok(())
    }
}
