use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use softdrop::loss::{smooth_loss, SmoothingConfig};
use softdrop::model::Model;
use softdrop::tensor::{finite_diff_gradient, gradient_rel_error};

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    for trial in 0..5 {
        let model = Model::init(6, Some(7), 5, 4, 30.0, &mut rng).unwrap();
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = rng.random_range(0..4);
        let cfg = SmoothingConfig::new(0.5, 4).unwrap();
        let (_, grads) = smooth_loss(&model, &x, y, &cfg).unwrap();
        let analytic = grads.to_flat();
        let base = model.to_flat();
        let fd = finite_diff_gradient(
            |params| {
                let m = model.from_flat(params)?;
                Ok(smooth_loss(&m, &x, y, &cfg)?.0)
            },
            &base,
            1e-6,
        )
        .unwrap();
        let err = gradient_rel_error(&analytic, &fd);
        println!("trial {trial}: rel err {err:.2e}");
    }
}
