use outbreak_hmm::series::{Label, YearWeek};
use outbreak_hmm::simulate::{simulate_scenario, ScenarioMeans, ScenarioSpec};

fn main() -> anyhow::Result<()> {
    let start = YearWeek::new(2000, 1)?;
    println!("scenario  phi   mu(26)  outbreak mu(26)  outbreak share  mean count");
    for spec in ScenarioSpec::all() {
        let means = ScenarioMeans::new(&spec)?;
        let sims = simulate_scenario(&means, 20, 42, start)?;
        let weeks: usize = sims.iter().map(|s| s.series.len()).sum();
        let outbreak = sims
            .iter()
            .flat_map(|s| s.series.labels().unwrap_or_default())
            .filter(|&&l| l == Label::Outbreak)
            .count();
        let total: u64 = sims.iter().flat_map(|s| s.series.counts()).sum();
        println!(
            "{:8}  {:4.1}  {:6.2}  {:15.2}  {:14.3}  {:10.2}",
            spec.id,
            spec.phi,
            means.endemic[25],
            means.outbreak[25],
            outbreak as f64 / weeks as f64,
            total as f64 / weeks as f64
        );
    }
    Ok(())
}
