use outbreak_hmm::glm::{irls_fit, IrlsOptions, PooledDesign};
use outbreak_hmm::series::{SeriesGroup, YearWeek};
use outbreak_hmm::simulate::{simulate_scenario, ScenarioMeans, ScenarioSpec};

fn main() -> anyhow::Result<()> {
    let spec = ScenarioSpec::get(9)?;
    let means = ScenarioMeans::new(&spec)?;
    let sims = simulate_scenario(&means, 10, 3, YearWeek::new(2000, 1)?)?;
    let group = SeriesGroup::new("demo", sims.into_iter().map(|s| s.series).collect())?;

    let fit = irls_fit(&PooledDesign::from_group(&group)?, IrlsOptions::default())?;
    println!("converged {} after {} iterations, loglik {:.2}", fit.converged, fit.iterations, fit.log_likelihood);
    println!("shared outbreak factor exp(b4) = {:.3}", fit.outbreak_effect().exp());
    println!("truth: {:?}, phi {}", spec.beta, spec.phi);
    for (n, s) in group.series().iter().enumerate() {
        let b = fit.series_coefs(n);
        println!(
            "{}: b0 {:7.3}  b1 {:8.5}  b2 {:6.3}  b3 {:6.3}  size {:8.2}",
            s.id(),
            b[0],
            b[1],
            b[2],
            b[3],
            fit.size_r[n]
        );
    }
    Ok(())
}
