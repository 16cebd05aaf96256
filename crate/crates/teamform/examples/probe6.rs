use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use teamform::learner::net::{AdamHyper, Mlp, Optimizer, ParamSet};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dims = [23usize, 64, 64, 64, 1003];
    let net = Mlp::new(&dims, true, &mut rng);
    let obs: Vec<f64> = (0..23).map(|i| (i as f64) / 23.0).collect();
    let reps = 2000;

    let t0 = std::time::Instant::now();
    for _ in 0..reps { let _ = net.forward_cached(&obs); }
    println!("forward_cached: {:.1} us", t0.elapsed().as_micros() as f64 / reps as f64);

    let (out, cache) = net.forward_cached(&obs);
    let mut dout = Array1::zeros(out.len());
    dout[7] = 1.0;
    let t0 = std::time::Instant::now();
    for _ in 0..reps { let _ = net.backward(&cache, &dout); }
    println!("backward: {:.1} us", t0.elapsed().as_micros() as f64 / reps as f64);

    let grads = net.backward(&cache, &dout);
    let mut trace = net.zeros_like_grads();
    let t0 = std::time::Instant::now();
    for _ in 0..reps { trace.scale_add(0.1, &grads, 1.0); }
    println!("trace scale_add: {:.1} us", t0.elapsed().as_micros() as f64 / reps as f64);

    let mut net2 = Mlp::new(&dims, true, &mut rng);
    let mut opt = Optimizer::adam(AdamHyper::default(), net2.flat_len());
    let t0 = std::time::Instant::now();
    for _ in 0..reps { opt.step(&mut net2, &grads); }
    println!("adam step: {:.1} us", t0.elapsed().as_micros() as f64 / reps as f64);

    let t0 = std::time::Instant::now();
    for _ in 0..reps { let _ = net.zeros_like_grads(); }
    println!("zeros_like_grads: {:.1} us", t0.elapsed().as_micros() as f64 / reps as f64);
}
