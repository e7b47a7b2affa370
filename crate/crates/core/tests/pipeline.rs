use std::sync::Arc;
use std::time::Instant;

use morse_core::graph::{ball_exhaustion, ball_exhaustion_with, build_half_line, build_lattice, BallMetric, PotentialField, Profiles, Region};
use morse_core::operator::OperatorBundle;
use morse_core::pipeline::{main_theorem_pipeline, PipelineConfig};

fn half_line_well(length: usize) -> (OperatorBundle, morse_core::graph::Exhaustion) {
    let g = Arc::new(build_half_line(length, &Profiles::default()).unwrap());
    let v = PotentialField::indicator(g.len(), &Region::new(0..5), -8.0);
    let radii: Vec<usize> = (1..length).collect();
    let ex = ball_exhaustion(&g, 0, &radii).unwrap();
    (OperatorBundle::assemble(g, v).unwrap(), ex)
}

fn z3_well(radius: usize) -> (OperatorBundle, morse_core::graph::Exhaustion) {
    let g = Arc::new(build_lattice(3, radius, &Profiles::default().with_vertex_cap(80_000)).unwrap());
    let o = g.vertex("0,0,0").unwrap();
    let unit = ball_exhaustion(&g, o, &[1]).unwrap().levels()[0].clone();
    let v = PotentialField::indicator(g.len(), &unit, -5.0);
    let radii: Vec<usize> = (1..radius).collect();
    let ex = ball_exhaustion_with(&g, o, &radii, BallMetric::SupNorm).unwrap();
    (OperatorBundle::assemble(g, v).unwrap(), ex)
}

#[test]
fn half_line_flagship() {
    let (b, ex) = half_line_well(60);
    let r = main_theorem_pipeline(&b, &ex, &PipelineConfig::default()).unwrap();
    let mut j = serde_json::to_value(&r).unwrap();
    j.as_object_mut().unwrap().remove("phi");
    println!("{}", serde_json::to_string_pretty(&j).unwrap());
    assert!(r.verdicts.all());
}

#[test]
fn z3_flagship() {
    let t = Instant::now();
    let (b, ex) = z3_well(10);
    let r = main_theorem_pipeline(&b, &ex, &PipelineConfig::default()).unwrap();
    let mut j = serde_json::to_value(&r).unwrap();
    j.as_object_mut().unwrap().remove("phi");
    println!("{}", serde_json::to_string_pretty(&j).unwrap());
    println!("elapsed {:?}", t.elapsed());
    assert!(r.verdicts.all());
}
