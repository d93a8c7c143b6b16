use outbreak_hmm::benchmark::{run_scenario, BenchmarkConfig};
use outbreak_hmm::eval::{match_sensitivity, metrics_at, Method};

fn main() -> anyhow::Result<()> {
    let cfg = BenchmarkConfig {
        n_series: 20,
        eval_weeks: 104,
        ..BenchmarkConfig::default()
    };
    let res = run_scenario(9, &cfg)?;
    let r = &res.report;
    println!("{} weeks scored, {} outbreak, {} endemic", r.n_weeks, r.n_outbreak, r.n_endemic);
    for m in &r.methods {
        println!("{:>20} auc {:.4}", m.method, m.auc);
    }

    for sens in [0.5, 0.7, 0.9] {
        let th = match_sensitivity(&res.scored, sens, Method::Hmm)?;
        let m = metrics_at(&res.scored, th, Method::Hmm);
        println!("hmm at sensitivity {sens}: threshold {th:.4} fpr {:?} precision {:?}", m.fpr, m.precision);
    }

    println!("\nposterior by outbreak size:");
    for s in &r.methods[0].strata {
        println!("{:>8} n {:5} median {:?}", s.stratum, s.n, s.median);
    }
    Ok(())
}
