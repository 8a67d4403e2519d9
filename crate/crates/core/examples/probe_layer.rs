use ising_mfg::potential::PotentialParams;
use ising_mfg::profiles::{v_init, LayerOpts};
use std::time::Instant;

fn main() {
    let p = PotentialParams::new(1.0 / 0.9, 1.0).unwrap();
    let s_star = p.s_star();
    for h in [0.02, 0.01, 0.005] {
        let opts = LayerOpts { h, max_iters: 40_000, ..Default::default() };
        let t0 = Instant::now();
        match v_init(0.0, s_star, &p, &opts) {
            Ok(res) => eprintln!(
                "h={h}: value={:.9} R={} iters={} conv={} [{:?}]",
                res.value, res.r_used, res.iterations, res.converged, t0.elapsed()
            ),
            Err(e) => eprintln!("h={h}: ERR {e} [{:?}]", t0.elapsed()),
        }
    }
}
