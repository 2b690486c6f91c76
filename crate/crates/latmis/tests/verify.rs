use latmis::defects::RealizedCoupling;
use latmis::drawing::{k33_drawing, k5_drawing};
use latmis::embedder::embed_planar;
use latmis::gadget::planarize;
use latmis::hardware::*;
use latmis::oracle::Budget;
use latmis::reduction::{mis_to_ising_unchecked, mis_to_ising_unit};
use latmis::verify::*;
use latmis::Graph;

fn full(g: &Graph) -> StageOutputs {
    let layout = embed_planar(g).unwrap();
    StageOutputs {
        ising: Some(mis_to_ising_unit(g)),
        program: Some(compile_direct_layout(&layout).unwrap()),
        layout: Some(layout),
        threshold: 1.0,
        ..Default::default()
    }
}

fn statuses(c: &Certificate) -> Vec<(String, String, Status)> {
    c.checks.iter().map(|k| (k.stage.clone(), k.name.clone(), k.status)).collect()
}

#[test]
fn k4_pipeline_passes() {
    let g = Graph::complete(4);
    let cert = verify_pipeline(&g, &full(&g), &Budget::default());
    assert!(cert.passed, "{:#?}", cert.checks);
    for stage in ["reduce", "embed", "compile"] {
        assert!(cert.checks.iter().any(|c| c.stage == stage && c.name == "ground_sets" && c.status == Status::Pass), "{stage}");
    }
    assert!(cert.checks.iter().any(|c| c.name == "pinning" && c.status == Status::Pass), "{:?}", statuses(&cert));
}

#[test]
fn threshold_above_couplings_exhibits_a_spurious_ground_state() {
    let g = Graph::path(3);
    let inst = mis_to_ising_unchecked(&g, &[-1.0, -1.0], 10.0);
    let out = StageOutputs { ising: Some(inst), threshold: 10.0, ..Default::default() };
    let cert = verify_pipeline(&g, &out, &Budget::default());
    assert!(!cert.passed);
    assert!(cert.failures().any(|c| c.name == "threshold"));
    let bad = cert.failures().find(|c| c.name == "ground_sets").unwrap();
    let w = bad.witness.as_ref().unwrap();
    assert!(!g.is_independent(&latmis::reduction::decode(w)));
}

#[test]
fn unrouted_wrong_sign_defect_breaks_the_program() {
    let g = Graph::path(2);
    let prog = compile_direct_square(&g).unwrap();
    let kept = prog.kept();
    let nominal: Vec<RealizedCoupling> = prog.bonds().iter().map(|&(a, b, j)| RealizedCoupling { edge: [a, b], value: j }).collect();
    let mut exhibited = false;
    for (k, r) in nominal.iter().enumerate() {
        if !(kept[r.edge[0]] && kept[r.edge[1]]) {
            continue;
        }
        let mut real = nominal.clone();
        real[k].value = -r.value;
        let out = StageOutputs { program: Some(prog.clone()), realized: Some(real), threshold: 1.0, ..Default::default() };
        let cert = verify_pipeline(&g, &out, &Budget::default());
        assert!(!cert.passed, "flipping bond {:?} went unnoticed", r.edge);
        exhibited |= cert.failures().any(|c| c.witness.is_some());
    }
    assert!(exhibited);
    let out = StageOutputs { program: Some(prog), realized: Some(nominal), threshold: 1.0, ..Default::default() };
    assert!(verify_pipeline(&g, &out, &Budget::default()).passed);
}

#[test]
fn nonplanar_graphs_pass_after_planarization() {
    for (g, d) in [(Graph::complete(5), k5_drawing()), (Graph::complete_bipartite(3, 3), k33_drawing())] {
        let p = planarize(&g, &d).unwrap();
        let out = StageOutputs { ising: Some(mis_to_ising_unit(&p.graph)), planarized: Some(p), threshold: 1.0, ..Default::default() };
        let cert = verify_pipeline(&g, &out, &Budget::default());
        assert!(cert.passed, "{:#?}", cert.checks);
        assert!(cert.checks.iter().any(|c| c.name == "projection" && c.status == Status::Pass));
    }
}

#[test]
fn certificate_round_trips_through_json() {
    let g = Graph::cycle(4);
    let cert = verify_pipeline(&g, &full(&g), &Budget::default());
    let text = serde_json::to_string(&cert).unwrap();
    assert!(text.contains(CERTIFICATE_SCHEMA));
    assert_eq!(serde_json::from_str::<Certificate>(&text).unwrap(), cert);
}
