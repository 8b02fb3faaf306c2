//! The elbow error as its own mechanical system, integrated without the plant.

use pendubot_agat::agat::{simulate_error_sms, SmsInertia};
use pendubot_agat::so2;
use pendubot_agat::{ErrorState, GainSet, IntegratorSpec};

fn main() -> pendubot_agat::Result<()> {
    let gains = GainSet::diagonal(2.3, (-1.5, -2.0), (1.0, 1.5))?;
    let spec = IntegratorSpec::new(1e-3, 15.0, 1000)?;

    for (phi, eta) in [(3.0, 0.0), (-2.0, 1.5), (0.5, -4.0)] {
        let start = ErrorState::new(so2::exp(phi), eta);
        let samples = simulate_error_sms(&start, &SmsInertia::Constant(0.01), &gains, &spec)?;
        println!("start phi = {phi:+.1}, eta = {eta:+.1}");
        for s in samples.iter().step_by(3) {
            println!(
                "  t = {:4.1}  phi = {:+.6}  eta = {:+.3e}  E_cl = {:.6e}",
                s.t,
                so2::log(&s.err.e),
                s.err.eta,
                s.e_cl
            );
        }
    }
    Ok(())
}
