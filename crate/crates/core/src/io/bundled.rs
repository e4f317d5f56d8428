//! Small built-in workflows shaped after the Montage, CyberShake, LIGO
//! Inspiral and SIPHT families. Sizes are MI at 1000 MIPS (seconds of
//! reference runtime × 1000), volumes are MB. Task counts are cut down to
//! desk scale; only the dependency structure follows the real workflows.

use crate::workflow::{DataEdge, Task, Workflow};

pub const BUNDLED_NAMES: [&str; 5] =
    ["diamond", "montage-small", "cybershake-small", "ligo-small", "sipht-small"];

#[derive(Default)]
struct Builder {
    tasks: Vec<Task>,
    edges: Vec<DataEdge>,
}

impl Builder {
    fn task(&mut self, id: impl Into<String>, size: f64) -> String {
        let id = id.into();
        self.tasks.push(Task::new(id.clone(), size));
        id
    }

    fn edge(&mut self, parent: &str, child: &str, volume: f64) {
        self.edges.push(DataEdge::new(parent, child, volume));
    }

    fn build(self, name: &str, deadline: Option<f64>) -> Workflow {
        Workflow::new(name, self.tasks, self.edges, deadline).expect("bundled workflow is valid")
    }
}

pub fn bundled(name: &str) -> Option<Workflow> {
    Some(match name {
        "diamond" => diamond(),
        "montage-small" => montage_small(),
        "cybershake-small" => cybershake_small(),
        "ligo-small" => ligo_small(),
        "sipht-small" => sipht_small(),
        _ => return None,
    })
}

/// The four benchmark families, in grid order.
pub fn bundled_instances() -> Vec<Workflow> {
    vec![montage_small(), cybershake_small(), ligo_small(), sipht_small()]
}

/// A -> {B, C} -> D.
pub fn diamond() -> Workflow {
    let mut b = Builder::default();
    b.task("A", 10_000.0);
    b.task("B", 20_000.0);
    b.task("C", 15_000.0);
    b.task("D", 10_000.0);
    b.edge("A", "B", 40.0);
    b.edge("A", "C", 60.0);
    b.edge("B", "D", 30.0);
    b.edge("C", "D", 20.0);
    b.build("diamond", Some(600.0))
}

fn montage_small() -> Workflow {
    let mut b = Builder::default();
    let project: Vec<String> = (0..4).map(|i| b.task(format!("mProjectPP_{i}"), 13_600.0)).collect();
    let overlaps = [(0, 1), (1, 2), (2, 3), (0, 2), (1, 3)];
    let concat = "mConcatFit";
    let diffs: Vec<String> = overlaps
        .iter()
        .map(|(l, r)| b.task(format!("mDiffFit_{l}{r}"), 10_800.0))
        .collect();
    for (d, (l, r)) in diffs.iter().zip(overlaps) {
        b.edge(&project[l], d, 4.2);
        b.edge(&project[r], d, 4.2);
    }
    b.task(concat, 42_000.0);
    for d in &diffs {
        b.edge(d, concat, 0.6);
    }
    let model = b.task("mBgModel", 18_000.0);
    b.edge(concat, &model, 0.8);
    let imgtbl = "mImgtbl";
    let backgrounds: Vec<String> = (0..4).map(|i| b.task(format!("mBackground_{i}"), 10_500.0)).collect();
    b.task(imgtbl, 2_800.0);
    for (i, bg) in backgrounds.iter().enumerate() {
        b.edge(&project[i], bg, 4.2);
        b.edge(&model, bg, 0.1);
        b.edge(bg, imgtbl, 4.2);
    }
    let add = b.task("mAdd", 30_000.0);
    b.edge(imgtbl, &add, 16.8);
    let shrink = b.task("mShrink", 4_500.0);
    b.edge(&add, &shrink, 70.0);
    let jpeg = b.task("mJPEG", 1_200.0);
    b.edge(&shrink, &jpeg, 2.0);
    b.build("montage-small", None)
}

fn cybershake_small() -> Workflow {
    let mut b = Builder::default();
    let zip_seis = b.task("ZipSeis", 5_000.0);
    let zip_psa = b.task("ZipPSA", 4_000.0);
    for j in 0..2 {
        let extract = b.task(format!("ExtractSGT_{j}"), 110_000.0);
        for k in 0..4 {
            let synth = b.task(format!("SeismogramSynthesis_{j}{k}"), 45_000.0);
            let peak = b.task(format!("PeakValCalcOkaya_{j}{k}"), 1_000.0);
            b.edge(&extract, &synth, 150.0);
            b.edge(&synth, &peak, 0.02);
            b.edge(&synth, &zip_seis, 0.02);
            b.edge(&peak, &zip_psa, 0.001);
        }
    }
    b.build("cybershake-small", None)
}

fn ligo_small() -> Workflow {
    let mut b = Builder::default();
    for g in 0..2 {
        let thinca1 = b.task(format!("Thinca1_{g}"), 5_000.0);
        let thinca2 = b.task(format!("Thinca2_{g}"), 5_000.0);
        for p in 0..3 {
            let bank = b.task(format!("TmpltBank_{g}{p}"), 18_000.0);
            let first = b.task(format!("Inspiral1_{g}{p}"), 220_000.0);
            let trig = b.task(format!("TrigBank_{g}{p}"), 4_000.0);
            let second = b.task(format!("Inspiral2_{g}{p}"), 220_000.0);
            b.edge(&bank, &first, 0.9);
            b.edge(&first, &thinca1, 0.3);
            b.edge(&thinca1, &trig, 0.05);
            b.edge(&trig, &second, 0.01);
            b.edge(&second, &thinca2, 0.3);
        }
    }
    b.build("ligo-small", None)
}

fn sipht_small() -> Workflow {
    let mut b = Builder::default();
    let concate = b.task("Patser_concate", 300.0);
    for i in 0..10 {
        let patser = b.task(format!("Patser_{i}"), 1_200.0);
        b.edge(&patser, &concate, 0.005);
    }
    let srna = b.task("SRNA", 20_000.0);
    for (id, size, out) in [
        ("Transterm", 32_000.0, 0.3),
        ("Findterm", 150_000.0, 1.2),
        ("RNAMotif", 40_000.0, 0.1),
        ("Blast", 120_000.0, 2.1),
    ] {
        b.task(id, size);
        b.edge(id, &srna, out);
    }
    let annotate = b.task("SRNA_annotate", 800.0);
    for (id, size) in [
        ("FFN_parse", 700.0),
        ("Blast_synteny", 3_200.0),
        ("Blast_candidate", 900.0),
        ("Blast_QRNA", 28_000.0),
        ("Blast_paralogues", 1_400.0),
    ] {
        b.task(id, size);
        b.edge(&srna, id, 0.4);
        b.edge(id, &annotate, 0.05);
    }
    b.edge(&concate, &annotate, 0.04);
    b.build("sipht-small", None)
}
