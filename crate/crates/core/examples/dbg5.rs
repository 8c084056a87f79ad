use parafold_core::conjugacy::*;
use parafold_core::flow::IntegrationBudget;
use parafold_core::Complex64;
fn main() {
    let c = |r: f64, i: f64| Complex64::new(r, i);
    let pr = ConjugacyProblem::new(c(1.0,0.0), c(2.0,0.0), c(0.5,0.0)).unwrap();
    let budget = IntegrationBudget::default();
    let t0 = std::time::Instant::now();
    match verify_conjugacy(&pr, &budget) {
        Ok(rep) => {
            println!("residue_match_max = {:.3e}", rep.residue_match_max);
            println!("kappa_min = {:.9} bound = {:.9}", rep.kappa_min, rep.kappa_bound);
            println!("tilrho_y_variation = {:.3e}", rep.tilrho_y_variation);
            println!("tilrho_values = {:?}", rep.tilrho_values);
            println!("limrho_maxima = {:?}", rep.limrho_maxima);
            println!("transport_gap = {:.3e}", rep.transport_gap);
            println!("base_point_error = {:.3e}", rep.base_point_error);
            println!("nonholomorphy = {:.4} (|s1| = 0.5)", rep.nonholomorphy);
            println!("affinity_error = {:.3e}", rep.affinity_error);
        }
        Err(e) => println!("ERR: {e}"),
    }
    println!("elapsed {:?}", t0.elapsed());
}
