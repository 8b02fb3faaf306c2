//! Scenario config files: dump a built-in, edit it as text, parse it back and run.

use pendubot_agat::scenario::{self, find_scenario, parse_config, to_config};

fn main() -> pendubot_agat::Result<()> {
    let base = find_scenario("s3")?;
    let text = to_config(&base);
    print!("{text}");
    assert_eq!(parse_config(&text)?, base);

    let edited = text
        .lines()
        .map(|l| match l.split_once(" = ") {
            Some(("gains.kp", _)) => "gains.kp = 4".to_string(),
            Some(("integrator.t_end", _)) => "integrator.t_end = 2".to_string(),
            Some(("integrator.stride", _)) => "integrator.stride = 500".to_string(),
            _ => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n");
    let tuned = parse_config(&edited)?;
    println!("\nparsed Kp = {}, t_end = {}", tuned.gains.kp, tuned.spec.t_end);

    let (record, failure) = tuned.simulate();
    scenario::write_csv(&record, std::io::stdout().lock())?;
    if let Some(e) = failure {
        println!("run stopped: {e}");
    }
    Ok(())
}
