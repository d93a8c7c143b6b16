use outbreak_hmm::hmm::{posterior_group, train, ForwardOptions, TrainConfig};
use outbreak_hmm::series::{SeriesGroup, WeekIndex, YearWeek};
use outbreak_hmm::simulate::{simulate_scenario, ScenarioMeans, ScenarioSpec};

fn main() -> anyhow::Result<()> {
    let means = ScenarioMeans::new(&ScenarioSpec::get(9)?)?;
    let sims = simulate_scenario(&means, 10, 17, YearWeek::new(2000, 1)?)?;
    let current = WeekIndex::new(600)?;
    // labels arrive late: nothing is known after the holdout cut
    let cut = current.minus(26);
    let observed = sims
        .iter()
        .map(|s| s.series.window(WeekIndex::new(1)?, s.series.last_t(), cut))
        .collect::<Result<Vec<_>, _>>()?;
    let group = SeriesGroup::new("g01", observed)?;

    let model = train(&group, current, &TrainConfig::default())?;
    println!("pi {:?}\ntransitions {:?}", model.pi(), model.trans());
    println!("outbreak factor {:.3}", model.outbreak_factor());

    // the model stays fixed while later weeks arrive
    let watched = &group.series()[0];
    let truth = &sims[0].series;
    println!("\n{} week  count  truth     p(outbreak)", watched.id());
    for t in 600..=624 {
        let t = WeekIndex::new(t)?;
        let post = posterior_group(&model, &group, t, ForwardOptions::default())?;
        println!(
            "{}  {:5}  {:8}  {:.4}",
            watched.year_week_at(t),
            watched.count_at(t).unwrap_or(0),
            format!("{:?}", truth.label_at(t)),
            post[0].p_outbreak
        );
    }
    Ok(())
}
