//! Integration of the Moser flow `dp/dt = v_t(p)` on [0, 1] together with
//! the log of the transported density.

use serde::Serialize;

use crate::matrix_lie::{kappa_t, phi_t, PointV, QuadraticLieAlgebra, Vector};
use crate::poisson::{max_abs, moser_v};
use crate::{KvError, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowState {
    pub t: f64,
    #[serde(serialize_with = "serialize_point")]
    pub point: PointV,
    /// `-∫₀ᵗ div v_s(p(s)) ds`; equals `log κ_t(p(t))` along an exact flow.
    pub log_density: f64,
}

fn serialize_point<S: serde::Serializer>(p: &PointV, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("PointV", 2)?;
    st.serialize_field("x", p.x.as_slice())?;
    st.serialize_field("y", p.y.as_slice())?;
    st.end()
}

/// Step of the central differences used for `div v_t`.
pub const DIV_STEP: f64 = 1e-4;

/// `div v_t` at `p` with respect to Lebesgue measure, by central differences.
pub fn divergence(alg: &QuadraticLieAlgebra, t: f64, p: &PointV, h: f64) -> Result<f64> {
    let z = p.to_vector();
    let mut div = 0.0;
    for j in 0..z.len() {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += h;
        zm[j] -= h;
        let vp = moser_v(alg, t, &PointV::from_vector(&zp))?;
        let vm = moser_v(alg, t, &PointV::from_vector(&zm))?;
        div += (vp[j] - vm[j]) / (2.0 * h);
    }
    Ok(div)
}

fn field(alg: &QuadraticLieAlgebra, t: f64, z: &Vector) -> Result<Vector> {
    let p = PointV::from_vector(z);
    if !alg.in_domain(&p) {
        return Err(KvError::DomainExit { time: t, reason: "trajectory left the coordinate domain".into() });
    }
    moser_v(alg, t, &p).map_err(|e| KvError::DomainExit { time: t, reason: e.to_string() })
}

/// Classical RK4 with fixed step `1/steps`, returning the `steps + 1` states
/// at `t = k/steps`. The density integral uses the third-order rule
/// `h(5f_k + 8f_{k+1} - f_{k+2})/12` on each interval.
pub fn flow_integrate(alg: &QuadraticLieAlgebra, p0: &PointV, steps: usize) -> Result<Vec<FlowState>> {
    if steps == 0 {
        return Err(KvError::InvalidArgument("steps must be positive".into()));
    }
    let h = 1.0 / steps as f64;
    let mut points = Vec::with_capacity(steps + 1);
    let mut z = p0.to_vector();
    points.push(z.clone());
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = field(alg, t, &z)?;
        let k2 = field(alg, t + 0.5 * h, &(&z + &k1 * (0.5 * h)))?;
        let k3 = field(alg, t + 0.5 * h, &(&z + &k2 * (0.5 * h)))?;
        let k4 = field(alg, t + h, &(&z + &k3 * h))?;
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !z.iter().all(|v| v.is_finite()) {
            return Err(KvError::DomainExit { time: t + h, reason: "non-finite state".into() });
        }
        points.push(z.clone());
    }
    let mut divs = Vec::with_capacity(steps + 1);
    for (k, zk) in points.iter().enumerate() {
        let t = k as f64 * h;
        let div = divergence(alg, t, &PointV::from_vector(zk), DIV_STEP)
            .map_err(|e| KvError::DomainExit { time: t, reason: e.to_string() })?;
        divs.push(div);
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut integral = 0.0;
    states.push(FlowState { t: 0.0, point: PointV::from_vector(&points[0]), log_density: 0.0 });
    for k in 0..steps {
        integral += if steps == 1 {
            0.5 * h * (divs[0] + divs[1])
        } else if k + 2 <= steps {
            h * (5.0 * divs[k] + 8.0 * divs[k + 1] - divs[k + 2]) / 12.0
        } else {
            h * (-divs[k - 1] + 8.0 * divs[k] + 5.0 * divs[k + 1]) / 12.0
        };
        states.push(FlowState {
            t: (k + 1) as f64 * h,
            point: PointV::from_vector(&points[k + 1]),
            log_density: -integral,
        });
    }
    Ok(states)
}

/// Largest drifts along a trajectory: `|Φ_t(p(t)) - Φ₀(p(0))|` and
/// `|log κ_t(p(t)) - logDensity(t)|`.
pub fn transport_errors(alg: &QuadraticLieAlgebra, states: &[FlowState]) -> Result<(f64, f64)> {
    let first = states.first().ok_or_else(|| KvError::InvalidArgument("empty trajectory".into()))?;
    let phi0 = phi_t(alg, 0.0, &first.point)?;
    let mut phi_err = 0.0f64;
    let mut vol_err = 0.0f64;
    for s in states {
        phi_err = phi_err.max(max_abs(&(phi_t(alg, s.t, &s.point)? - &phi0)));
        vol_err = vol_err.max((kappa_t(alg, s.t, &s.point)?.ln() - s.log_density).abs());
    }
    Ok((phi_err, vol_err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_lie::so3;
    use crate::poisson::point;

    #[test]
    fn origin_is_stationary() {
        let alg = so3();
        let states = flow_integrate(&alg, &PointV::zeros(3), 4).unwrap();
        assert_eq!(states.len(), 5);
        for s in &states {
            assert_eq!(s.point, PointV::zeros(3));
            assert!(s.log_density.abs() < 1e-12);
        }
    }

    #[test]
    fn short_flow_transports_phi() {
        let alg = so3();
        let p = point(&[0.1, -0.2, 0.05], &[0.15, 0.1, -0.1]);
        let states = flow_integrate(&alg, &p, 20).unwrap();
        let (phi, vol) = transport_errors(&alg, &states).unwrap();
        assert!(phi < 1e-6, "{phi}");
        assert!(vol < 1e-5, "{vol}");
    }

    #[test]
    fn domain_exit_is_reported() {
        let alg = so3();
        let p = point(&[0.6, 0.0, 0.0], &[0.0, 0.1, 0.0]);
        assert!(matches!(flow_integrate(&alg, &p, 4), Err(KvError::DomainExit { .. })));
    }
}
