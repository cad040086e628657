#![allow(dead_code)]

use std::sync::Arc;

use backfire_core::{CategoricalSchema, EffectRule, SyntheticSpec, Variable};

/// Segment drives the effect; Region, Sex and Age are noise.
pub fn fixture_schema() -> Arc<CategoricalSchema> {
    Arc::new(
        CategoricalSchema::new(
            vec![
                Variable::new("Segment", ["A", "B"]),
                Variable::new("Region", ["North", "South", "East"]),
                Variable::new("Sex", ["F", "M"]),
                Variable::new("Age", ["18-34", "35-54", "55+"]),
            ],
            "condition",
            "belief",
        )
        .unwrap(),
    )
}

/// Two planted segments: τ = +0.4 for A and −0.3 for B around base rate 0.5.
pub fn two_segment_spec(seed: u64) -> SyntheticSpec {
    let schema = fixture_schema();
    SyntheticSpec::uniform(Arc::clone(&schema), 0.5, seed)
        .with_effect(EffectRule::when(&schema, &[("Segment", "A")], 0.4).unwrap())
        .with_effect(EffectRule::when(&schema, &[("Segment", "B")], -0.3).unwrap())
}

pub fn null_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec::uniform(fixture_schema(), 0.5, seed)
}

/// Average ranks, ties sharing the mean rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[order[k]] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}
