//! Quadrature rules. Triangle rules are given in barycentric coordinates
//! with weights summing to one (scale by the cell area); the edge rule is
//! given on [0, 1] with weights summing to one (scale by the edge length).

/// Edge-midpoint rule, exact for degree 2.
pub const TRI_MIDPOINT: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

/// Six-point rule, exact for degree 4.
pub const TRI_DEGREE4: [([f64; 3], f64); 6] = [
    (
        [0.108103018168070, 0.445948490915965, 0.445948490915965],
        0.223381589678011,
    ),
    (
        [0.445948490915965, 0.108103018168070, 0.445948490915965],
        0.223381589678011,
    ),
    (
        [0.445948490915965, 0.445948490915965, 0.108103018168070],
        0.223381589678011,
    ),
    (
        [0.816847572980459, 0.091576213509771, 0.091576213509771],
        0.109951743655322,
    ),
    (
        [0.091576213509771, 0.816847572980459, 0.091576213509771],
        0.109951743655322,
    ),
    (
        [0.091576213509771, 0.091576213509771, 0.816847572980459],
        0.109951743655322,
    ),
];

/// Two-point Gauss rule on [0, 1], exact for degree 3.
pub const EDGE_GAUSS2: [(f64, f64); 2] = [
    (0.211324865405187, 0.5), // (1 - 1/sqrt(3)) / 2
    (0.788675134594813, 0.5),
];

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_tri(rule: &[([f64; 3], f64)], f: impl Fn(f64, f64) -> f64) -> f64 {
        // reference triangle (0,0)-(1,0)-(0,1), area 1/2
        rule.iter()
            .map(|(l, w)| {
                let x = l[1];
                let y = l[2];
                w * f(x, y) * 0.5
            })
            .sum()
    }

    #[test]
    fn midpoint_rule_exact_degree2() {
        // integral of x^2 over the reference triangle = 1/12
        let v = integrate_tri(&TRI_MIDPOINT, |x, _| x * x);
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
        let v = integrate_tri(&TRI_MIDPOINT, |x, y| x * y);
        assert!((v - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn degree4_rule_exact_degree4() {
        // integral of x^4 = 1/30; x^2 y^2 = 1/180
        let v = integrate_tri(&TRI_DEGREE4, |x, _| x.powi(4));
        assert!((v - 1.0 / 30.0).abs() < 1e-14);
        let v = integrate_tri(&TRI_DEGREE4, |x, y| x * x * y * y);
        assert!((v - 1.0 / 180.0).abs() < 1e-14);
    }

    #[test]
    fn edge_rule_exact_degree3() {
        let v: f64 = EDGE_GAUSS2.iter().map(|(t, w)| w * t * t * t).sum();
        assert!((v - 0.25).abs() < 1e-15);
    }
}
