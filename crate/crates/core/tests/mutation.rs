//! A controller with the passive gravity term sign-flipped must be caught by
//! the tracking metrics that the correct controller satisfies.

use pendubot_agat::acceptance::{tracking_check, TrackingThresholds};
use pendubot_agat::agat::{self, error_state, stabilizing_u};
use pendubot_agat::scenario::find_scenario;
use pendubot_agat::{pendubot, PendubotState, Result};

#[test]
fn flipped_gamma2_breaks_dissipation_on_s3() {
    let s = find_scenario("s3").unwrap();
    let th = TrackingThresholds::standard();

    let correct = tracking_check(&s, &s.controller());
    assert!(correct.passes(&th), "{correct}");

    let mutant = |state: &PendubotState, t: f64| -> Result<f64> {
        let mut c = pendubot::coefficients(state, &s.params)?;
        c.gamma2 = -c.gamma2;
        let sample = s.reference.sample(t);
        let u = stabilizing_u(&error_state(state, &s.reference, t), &s.gains);
        Ok(agat::torque_from_coefficients(&c, state, &sample, u))
    };
    let broken = tracking_check(&s, &mutant);
    assert!(!broken.passes(&th), "{broken}");
    assert!(broken.failure.is_some() || broken.max_ecl_increase > 1e-7, "{broken}");
}
