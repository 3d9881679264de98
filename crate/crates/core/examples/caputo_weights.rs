//! Prints the L1 memory weights and step factor for a few fractional orders.

use fracrd::fractional::{caputo_weights, FractionalState};

fn main() -> fracrd::Result<()> {
    for alpha in [0.1, 0.5, 0.9, 1.0] {
        let weights = caputo_weights(alpha, 5)?;
        let state = FractionalState::new(alpha, 1.0)?;
        let shown: Vec<String> = weights.iter().map(|w| format!("{w:.5}")).collect();
        println!("alpha={alpha:.1}  S={:.6}  a_0..a_5 = [{}]", state.s_factor(), shown.join(", "));
    }
    Ok(())
}
