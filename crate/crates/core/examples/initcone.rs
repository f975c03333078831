use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use softdrop::data::{generate, DatasetSpec};
use softdrop::model::Model;
use softdrop::tensor::{dot, l2_norm, l2_normalize};

fn spread(model: &Model, ds: &softdrop::data::Dataset) -> (f64, f64) {
    let mut units: Vec<Vec<f64>> = Vec::new();
    let mut fnorm = 0.0;
    for s in ds.samples.iter().take(150) {
        let tr = model.forward_trace(&s.features).unwrap();
        units.push(l2_normalize(&tr.feature).unwrap());
        fnorm += l2_norm(&tr.feature);
    }
    let mut acc = 0.0;
    let mut cnt = 0;
    for i in 0..units.len() {
        for j in (i + 1)..units.len() {
            acc += dot(&units[i], &units[j]);
            cnt += 1;
        }
    }
    (acc / cnt as f64, fnorm / 150.0)
}

fn main() {
    for (rmin, rmax) in [(0.5, 2.0), (1.0, 1.0), (2.0, 4.0), (4.0, 8.0), (8.0, 16.0)] {
        let spec = DatasetSpec {
            open_noise_rate: 0.2,
            radial_min: rmin,
            radial_max: rmax,
            seed: 1,
            ..DatasetSpec::default()
        };
        let bundle = generate(&spec).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let model = Model::init(16, Some(32), 16, 20, 30.0, &mut rng).unwrap();
        let (s, f) = spread(&model, &bundle.train);
        println!("radial [{rmin},{rmax}]: init feat spread {s:.3}  ||f|| {f:.2}");
    }
}
