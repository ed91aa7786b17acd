use dmpk_core::analysis::mean_variance;
use dmpk_core::noise::{sample_b_increment, driving_brownian, NoiseStream};
use dmpk_core::SymmetryClass;

fn main() {
    let class = SymmetryClass::new(1, 3).unwrap();
    for seed in [2024u64, 7, 99] {
        let mut stream = NoiseStream::new(seed, 1);
        for n_samples in [100_000usize, 1_000_000] {
            let mut db = Vec::with_capacity(n_samples);
            for _ in 0..n_samples {
                let b = sample_b_increment(class, 1.0, &mut stream).unwrap();
                let diag: Vec<f64> = (0..3).map(|k| b[(k, k)].re).collect();
                db.push(driving_brownian(&diag, class)[0]);
            }
            let (m, v) = mean_variance(&db);
            let se = (2.0f64 / (n_samples as f64 - 1.0)).sqrt();
            println!("seed={seed} n={n_samples}: mean={m:+.5} var={v:.5} ({:+.2} se)", (v - 1.0) / se);
        }
    }
}
