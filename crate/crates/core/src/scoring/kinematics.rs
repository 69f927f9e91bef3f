use super::ScoringError;

/// Per-frame comfort inputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Kinematics {
    pub accel: Vec<f64>,
    pub jerk: Vec<f64>,
    pub lat_accel: Vec<f64>,
    pub lat_jerk: Vec<f64>,
}

/// First derivative: central differences inside, one-sided at the ends.
pub fn first_difference(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    out[0] = (x[1] - x[0]) / dt;
    out[n - 1] = (x[n - 1] - x[n - 2]) / dt;
    for i in 1..n - 1 {
        out[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
    }
    out
}

/// Second derivative: centred three-point stencil inside, the neighbouring
/// stencil reused at the ends. Needs at least three points.
pub fn second_difference(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    let dt2 = dt * dt;
    for i in 1..n - 1 {
        out[i] = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / dt2;
    }
    out[0] = out[1];
    out[n - 1] = out[n - 2];
    out
}

/// Longitudinal and lateral acceleration and jerk from sampled speed and
/// lateral position. Lateral acceleration adds the centripetal term
/// `v^2 * curvature` of the segment under each sample.
pub fn kinematic_derivatives(
    speed: &[f64],
    lateral: &[f64],
    curvature: &[f64],
    dt: f64,
) -> Result<Kinematics, ScoringError> {
    let n = speed.len();
    if n < 3 {
        return Err(ScoringError::SeriesTooShort(n));
    }
    if lateral.len() != n || curvature.len() != n {
        return Err(ScoringError::LengthMismatch);
    }
    if !(dt > 0.0) {
        return Err(ScoringError::InvalidParam("dt must be positive"));
    }
    let accel = first_difference(speed, dt);
    let jerk = first_difference(&accel, dt);
    let lat_accel: Vec<f64> = second_difference(lateral, dt)
        .into_iter()
        .zip(speed.iter().zip(curvature))
        .map(|(lat, (v, k))| lat + v * v * k)
        .collect();
    let lat_jerk = first_difference(&lat_accel, dt);
    Ok(Kinematics {
        accel,
        jerk,
        lat_accel,
        lat_jerk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_speed_has_no_accel_or_jerk() {
        let v = vec![10.0; 50];
        let k = kinematic_derivatives(&v, &[0.0; 50], &[0.0; 50], 0.1).unwrap();
        assert!(k.accel.iter().chain(&k.jerk).all(|&x| x == 0.0));
        assert!(k.lat_accel.iter().chain(&k.lat_jerk).all(|&x| x == 0.0));
    }

    #[test]
    fn linear_ramp_matches_analytic_derivative() {
        // v(t) = t on [0, 10] sampled at dt = 0.1: dv/dt = 1, d2v/dt2 = 0
        let dt = 0.1;
        let v: Vec<f64> = (0..=100).map(|i| f64::from(i) * dt).collect();
        let n = v.len();
        let k = kinematic_derivatives(&v, &vec![0.0; n], &vec![0.0; n], dt).unwrap();
        assert!(k.accel.iter().all(|a| (a - 1.0).abs() < 1e-9));
        assert!(k.jerk[1..n - 1].iter().all(|j| j.abs() < 1e-6));
    }

    #[test]
    fn quadratic_lateral_position() {
        // y(t) = 0.5 * 1.2 * t^2 has constant lateral acceleration 1.2
        let dt = 0.1;
        let y: Vec<f64> = (0..30).map(|i| 0.6 * (f64::from(i) * dt).powi(2)).collect();
        let k = kinematic_derivatives(&vec![5.0; 30], &y, &vec![0.0; 30], dt).unwrap();
        assert!(k.lat_accel.iter().all(|a| (a - 1.2).abs() < 1e-9));
    }

    #[test]
    fn centripetal_term_on_arc() {
        let k = kinematic_derivatives(&[10.0; 5], &[0.0; 5], &[0.01; 5], 0.1).unwrap();
        assert!(k.lat_accel.iter().all(|a| (a - 1.0).abs() < 1e-12));
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            kinematic_derivatives(&[1.0, 2.0], &[0.0; 2], &[0.0; 2], 0.1),
            Err(ScoringError::SeriesTooShort(2))
        ));
    }
}
