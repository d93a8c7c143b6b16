use outbreak_hmm::hmm::{train, TrainConfig};
use outbreak_hmm::io::{self, ModelFile};
use outbreak_hmm::series::{SeriesGroup, SurveillanceSeries, YearWeek};
use outbreak_hmm::simulate::{simulate_scenario, ScenarioMeans, ScenarioSpec};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let counts = dir.path().join("counts.csv");
    let labels = dir.path().join("labels.csv");

    let means = ScenarioMeans::new(&ScenarioSpec::get(4)?)?;
    let sims = simulate_scenario(&means, 8, 1, YearWeek::new(2003, 1)?)?;
    let series: Vec<&SurveillanceSeries> = sims.iter().map(|s| &s.series).collect();
    io::write_counts(&counts, &series)?;
    io::write_labels(&labels, &series)?;

    let data = io::load_dataset(&counts, Some(&labels))?;
    println!("loaded {} series from {} to {}", data.series.len(), data.grid_start, data.last_week());

    let group = SeriesGroup::new("g01", data.series.clone())?;
    let cur = data.week_index(data.last_week())?;
    let model = train(&group, cur, &TrainConfig::default())?;
    let path = dir.path().join(io::model_file_name(&model.group_id));
    io::write_json(&path, &ModelFile::new(data.grid_start, model))?;

    let back = io::read_models(dir.path())?;
    println!("{} model file(s); {} covers {:?}", back.len(), path.display(), back[0].model.series_ids);
    println!("outbreak factor {:.3}", back[0].model.outbreak_factor());
    Ok(())
}
