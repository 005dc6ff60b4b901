//! Seeded FPN and PA-FPN passes over toy backbone features, and how much a
//! change in the finest input level reaches the coarsest output with and
//! without the bottom-up path.
//!
//! `cargo run --example feature_pyramid`

use detkit::pyramid::{fpn_forward, pafpn_forward, seeded_inputs, shape_summary, FeatureMap, PyramidWeights};

fn max_abs_diff(a: &FeatureMap, b: &FeatureMap) -> f64 {
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn run() -> String {
    let channels = [4, 8, 8, 16];
    let weights = PyramidWeights::seeded(7, channels, 4);
    let inputs = seeded_inputs(8, 64, channels).unwrap();
    let p = fpn_forward(&inputs, &weights).unwrap();
    let n = pafpn_forward(&p, &weights).unwrap();
    let mut out = format!("inputs\n{}outputs\n{}", shape_summary(&inputs), shape_summary(&n));

    let mut bumped = inputs.clone();
    bumped[0].data[0] += 1.0;
    let p_b = fpn_forward(&bumped, &weights).unwrap();
    let n_b = pafpn_forward(&p_b, &weights).unwrap();
    out.push_str(&format!(
        "bump at C2 -> change at P5: {:.3e}\n",
        max_abs_diff(&p[3], &p_b[3])
    ));
    out.push_str(&format!(
        "bump at C2 -> change at N5: {:.3e}\n",
        max_abs_diff(&n[3], &n_b[3])
    ));

    let severed = weights.with_severed_bottom_up();
    let n_s = pafpn_forward(&fpn_forward(&inputs, &severed).unwrap(), &severed).unwrap();
    out.push_str(&format!("severed bottom-up equals FPN: {}\n", n_s == p));
    out
}

fn main() {
    print!("{}", run());
}
