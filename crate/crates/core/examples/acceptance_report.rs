//! Runs an acceptance suite in-process: `cargo run --release --example acceptance_report -- full`.

fn main() -> pendubot_agat::Result<()> {
    let suite = std::env::args().nth(1).unwrap_or_else(|| "quick".into());
    let reports = pendubot_agat::acceptance::run_suite(&suite)?;
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", reports.len() - failed, reports.len());
    Ok(())
}
