use criterion::{criterion_group, criterion_main, Criterion};
use wildfire_bench::uniform_matrix;
use wildfire_core::autoencoder::AutoencoderSpec;
use wildfire_core::nn::{OptimizerConfig, OptimizerKind, Schedule, Tensor, TrainConfig};
use wildfire_core::Autoencoder;

fn one_epoch(c: &mut Criterion) {
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 32,
        patience: 0,
        ..TrainConfig::default()
    };
    let opt = OptimizerConfig::new(OptimizerKind::adam(), 1e-3, Schedule::None);
    let rows = Tensor::Matrix(uniform_matrix(2_048, 28, 4));
    let windows = Tensor::Sequence(
        uniform_matrix(256 * 10, 28, 5)
            .into_shape_with_order((256, 10, 28))
            .unwrap(),
    );

    let mut group = c.benchmark_group("epoch");
    group.sample_size(10);
    group.bench_function("fc_default_2048_rows", |b| {
        b.iter(|| {
            let ae = Autoencoder::build(AutoencoderSpec::fc(28), 0).unwrap();
            ae.fit(&rows, None, &cfg, &opt).unwrap()
        })
    });
    group.bench_function("lstm_default_256_windows", |b| {
        b.iter(|| {
            let ae = Autoencoder::build(AutoencoderSpec::lstm(28, 10), 0).unwrap();
            ae.fit(&windows, None, &cfg, &opt).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, one_epoch);
criterion_main!(benches);
