use std::time::Instant;

use outbreak_hmm::benchmark::{run_benchmark, BenchmarkConfig};

fn main() -> anyhow::Result<()> {
    let mut cfg = BenchmarkConfig::default();
    if let Some(n) = std::env::args().nth(1) {
        cfg.n_series = n.parse()?;
    }
    let started = Instant::now();
    let res = run_benchmark(&cfg)?;
    for s in &res.scenarios {
        let r = &s.report;
        let m = r.matched.as_ref();
        println!(
            "scenario {:2}: auc hmm {:.3} baseline {:.3} | sens {:?} fpr hmm {:?} baseline {:?} | prec hmm {:?} baseline {:?}",
            s.scenario,
            r.methods[0].auc,
            r.methods[1].auc,
            m.and_then(|m| m.baseline.sensitivity),
            m.and_then(|m| m.hmm.fpr),
            m.and_then(|m| m.baseline.fpr),
            m.and_then(|m| m.hmm.precision),
            m.and_then(|m| m.baseline.precision),
        );
    }
    let p = &res.pooled;
    println!("pooled: auc hmm {:.4} baseline {:.4}", p.methods[0].auc, p.methods[1].auc);
    if let Some(m) = &p.matched {
        println!(
            "pooled at baseline sensitivity {:.4}: fpr hmm {:.5} baseline {:.5}, precision hmm {:.4} baseline {:.4}",
            m.baseline.sensitivity.unwrap_or(f64::NAN),
            m.hmm.fpr.unwrap_or(f64::NAN),
            m.baseline.fpr.unwrap_or(f64::NAN),
            m.hmm.precision.unwrap_or(f64::NAN),
            m.baseline.precision.unwrap_or(f64::NAN),
        );
        println!("overlap {:?}", m.overlap);
    }
    println!("elapsed {:.1?}", started.elapsed());
    Ok(())
}
