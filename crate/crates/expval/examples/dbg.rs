use expval::*;
fn main() {
    let obs = Observable::new(vec![1.1, -0.1]).unwrap();
    let s = Composition::new(vec![0, 2]).unwrap();
    let m = DeviationMeasure::power(1.1).unwrap();
    let quad = SimplexQuadratureConfig::default();
    // scan omegas to find nonconvergent ones
    for i in 0..=60 {
        let om = -0.1 + 1.2 * i as f64 / 60.0;
        match w_function(&s, om, &obs, &m, &quad) {
            Ok(_) => {}
            Err(e) => println!("omega {om:.4}: {e}"),
        }
    }
    let solver = SolverConfig::default();
    match minimize_w(&s, &obs, &m, &solver, &quad) {
        Ok((o, w)) => println!("min at {o} w {w}"),
        Err(e) => println!("minimize error: {e}"),
    }
}
