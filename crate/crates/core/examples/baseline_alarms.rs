use outbreak_hmm::baseline::{BaselineConfig, BaselineFit};
use outbreak_hmm::pipeline::{rolling_baseline, RollingConfig};
use outbreak_hmm::series::{WeekIndex, YearWeek};
use outbreak_hmm::simulate::{simulate_series, ScenarioMeans, ScenarioSpec};

fn main() -> anyhow::Result<()> {
    let means = ScenarioMeans::new(&ScenarioSpec::get(12)?)?;
    let series = simulate_series(&means, "county", YearWeek::new(2000, 1)?, 99)?.series;

    let t = WeekIndex::new(580)?;
    let fit = BaselineFit::fit(&series, t, &BaselineConfig::default())?;
    let d = fit.predict(t);
    println!("week {}: expected {:.2}, variance {:.2}", series.year_week_at(t), d.mean(), d.variance());
    for alpha in [0.05, 0.01, 0.001] {
        println!("  alarm at alpha {alpha}: count >= {}", d.alarm_threshold(alpha));
    }

    let cfg = RollingConfig::default();
    let rows = rolling_baseline(&series, WeekIndex::new(573)?, WeekIndex::new(624)?, &cfg)?;
    println!("\nalarms in the final year:");
    for r in rows.iter().filter(|r| r.alarm) {
        println!(
            "  {} count {} expected {:.1} p {:.2e} label {:?}",
            series.year_week_at(r.week),
            r.count,
            r.expected,
            r.p_value,
            series.label_at(r.week)
        );
    }
    Ok(())
}
