//! Human-readable summary of an artifact directory, plus plot-ready CSVs.

use crate::artifact::{check_schema, Kind, Store};
use crate::stages::{Anneal, Routed, Sweep};
use latmis::annealer::EnsembleReport;
use latmis::defects::sweep_csv;
use latmis::embedder::ClusterLayout;
use latmis::error::{Error, Result};
use latmis::gadget::Planarized;
use latmis::hardware::{HardwareProgram, PatternId};
use latmis::io::GraphDoc;
use latmis::ising::IsingInstance;
use latmis::verify::{Certificate, Status, CERTIFICATE_SCHEMA};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ensemble {
    pub seed: u64,
    pub count: usize,
    pub max_vertices: usize,
    pub report: EnsembleReport,
}

/// Writes `summary.txt` and the report CSVs into `dir` and returns the summary.
pub fn report(dir: &Path) -> Result<String> {
    let store = Store::open(dir);
    let has_cert = store.path("certificate.json").is_file();
    if !has_cert && !Kind::ALL.iter().any(|&k| store.has(k)) {
        return Err(Error::MissingArtifact(format!("no artifacts in {}", dir.display())));
    }
    let mut s = String::new();
    let mut line = |text: String| {
        s.push_str(&text);
        s.push('\n');
    };

    let graph: Option<GraphDoc> = store.read_opt(Kind::Graph)?;
    let planarized: Option<Planarized> = store.read_opt(Kind::Planarized)?;
    if let Some(g) = &graph {
        line(format!("graph: {} vertices, {} edges", g.n, g.edges.len()));
    }
    if let Some(p) = &planarized {
        line(format!(
            "planarized: {} vertices, {} edges, {} crossings, MIS offset {}",
            p.graph.n(),
            p.graph.m(),
            p.crossings.len(),
            p.cardinality_offset
        ));
    }
    let n = planarized.as_ref().map(|p| p.graph.n()).or(graph.as_ref().map(|g| g.n));
    if let Some(inst) = store.read_opt::<IsingInstance>(Kind::Ising)? {
        line(format!("ising: {} spins, {} couplings, J = {}", inst.spins, inst.couplings.len(), inst.threshold));
    }
    let layout: Option<ClusterLayout> = store.read_opt(Kind::Layout)?;
    if let Some(l) = &layout {
        let n = n.unwrap_or(l.vertices);
        let side_bound = 2 * n.saturating_sub(1);
        let site_bound = 2 * n * n;
        line(format!(
            "layout: side {} (bound 2(N-1) = {side_bound}, {}), sites {} (bound 2N^2 = {site_bound}, {})",
            l.side,
            ok(l.side <= side_bound),
            l.sites.len(),
            ok(l.sites.len() <= site_bound)
        ));
    }
    let program: Option<HardwareProgram> = store.read_opt(Kind::Program)?;
    if let Some(p) = &program {
        let st = p.stats();
        line(format!("program: pattern {:?}, {} sites ({} x {}), {} deleted, {} working", p.lattice.pattern, st.sites, st.width, st.height, st.deleted, st.working));
        match (p.lattice.pattern, &layout, n) {
            (PatternId::Fig6, Some(l), _) => {
                line(format!("  fig6 overhead: {} sites = 8 x {} simulated sites ({})", st.sites, l.sites.len(), ok(st.sites == 8 * l.sites.len())));
            }
            (PatternId::Direct | PatternId::Random, _, Some(n)) => {
                let steps = p.growth.windows(2).map(|w| w[1].saturating_sub(w[0])).max().unwrap_or(0);
                line(format!("  direct: sites {} (bound 36N^2 = {}, {}), largest side growth {steps} (bound 6, {})", st.sites, 36 * n * n, ok(st.sites <= 36 * n * n), ok(steps <= 6)));
            }
            _ => {}
        }
    }
    if let Some(r) = store.read_opt::<Routed>(Kind::Routed)? {
        line(format!("routed: {} defective sites, {} sites kept", r.defects.implicated().len(), r.program.kept().iter().filter(|&&k| k).count()));
    }
    if has_cert {
        let cert: Certificate = serde_json::from_str(&std::fs::read_to_string(store.path("certificate.json"))?)?;
        check_schema(&cert.schema, "certificate").map_err(|_| Error::Parse(format!("expected {CERTIFICATE_SCHEMA}, found {}", cert.schema)))?;
        let count = |st: Status| cert.checks.iter().filter(|c| c.status == st).count();
        line(format!(
            "certificate: {} ({} pass, {} fail, {} skipped)",
            if cert.passed { "PASS" } else { "FAIL" },
            count(Status::Pass),
            count(Status::Fail),
            count(Status::Skipped)
        ));
        for c in &cert.checks {
            line(format!("  {:<9} {:<18} {:<7} {}", c.stage, c.name, format!("{:?}", c.status).to_lowercase(), c.detail));
        }
    }
    if let Some(a) = store.read_opt::<Anneal>(Kind::Spectrum)? {
        match &a.spectrum {
            Some(sp) => {
                line(format!("spectrum: {} spins, gamma0 {}, {} points, g_min {} at gamma {}", a.spins, a.gamma0, sp.points.len(), sp.g_min, sp.gamma_star));
                store.write_text("report_spectrum.csv", &sp.csv())?;
            }
            None => line(format!("spectrum: skipped, {}", a.skipped.as_deref().unwrap_or("no data"))),
        }
        if let (Some(e), Some(t)) = (&a.evolution, a.total_time) {
            line(format!("evolution: T = {t}, {} steps, ground overlap {}, drift {:e}", e.steps, e.overlap, e.drift));
        }
    }
    if let Some(sw) = store.read_opt::<Sweep>(Kind::Sweep)? {
        line(format!("defect sweep: seed {}, success non-increasing in density: {}", sw.seed, sw.monotone));
        for r in &sw.rows {
            line(format!("  density {:<6} {}/{}", r.density, r.successes, r.trials));
        }
        store.write_text("report_sweep.csv", &sweep_csv(&sw.rows))?;
    }
    if let Some(e) = store.read_opt::<Ensemble>(Kind::Ensemble)? {
        let r = &e.report;
        line(format!(
            "ensemble: {} instances, <min g> = {} <= min <g> = {} at gamma {} ({})",
            r.gaps.len(),
            r.mean_of_min,
            r.min_of_mean,
            r.min_of_mean_gamma,
            ok(r.ordering_holds())
        ));
        for b in &r.histogram {
            line(format!("  gamma* in [{:.4}, {:.4}): {}", b.lo, b.hi, b.count));
        }
        store.write_text("report_ensemble.csv", &r.csv())?;
    }
    store.write_text("summary.txt", &s)?;
    Ok(s)
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "VIOLATED"
    }
}
