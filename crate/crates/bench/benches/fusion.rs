use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tfmd_core::datagen::DrugFeatures;
use tfmd_core::fusion::ForwardCache;
use tfmd_core::{FusionModel, ModelConfig};

fn features(dims: [usize; 4], shift: f64) -> DrugFeatures {
    DrugFeatures {
        blocks: dims.map(|d| (0..d).map(|i| ((i as f64 + shift) * 0.37).sin()).collect()),
    }
}

fn fusion(c: &mut Criterion) {
    let mut group = c.benchmark_group("fusion");
    for (label, dims, hidden) in [("small", [16; 4], 16), ("default", [64; 4], 256)] {
        let mut config = ModelConfig::new(86, dims);
        config.hidden_dim = hidden;
        let model = FusionModel::init(config, 0).unwrap();
        let a = features(dims, 0.0);
        let b = features(dims, 1.5);
        let mut cache = ForwardCache::new();
        group.bench_function(format!("forward_{label}"), |bench| {
            bench.iter(|| model.forward_into(black_box(&a), black_box(&b), &mut cache).unwrap())
        });
        let (logits, cache) = model.forward(&a, &b).unwrap();
        let upstream: Vec<f64> = logits.iter().map(|z| z * 0.01).collect();
        let mut grads = vec![0.0; model.n_params()];
        group.bench_function(format!("backward_{label}"), |bench| {
            bench.iter(|| model.backward_into(&cache, black_box(&upstream), &mut grads, None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, fusion);
criterion_main!(benches);
