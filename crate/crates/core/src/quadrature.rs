//! Symmetric triangle rules (Dunavant) and Gauss-Legendre rules on `[0,1]`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    Triangle,
    Edge,
}

/// Quadrature on the reference triangle `(0,0),(1,0),(0,1)` (points are
/// `(xi, eta)`, weights sum to 1/2) or on the unit interval (points use the
/// first coordinate only, weights sum to 1).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub entity: Entity,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

pub const MAX_DEGREE: usize = 6;

pub fn quadrature_rule(entity: Entity, degree: usize) -> Result<QuadratureRule> {
    match entity {
        Entity::Triangle => triangle_rule(degree),
        Entity::Edge => edge_rule(degree),
    }
}

pub fn triangle_rule(degree: usize) -> Result<QuadratureRule> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    // barycentric orbits with weights normalized to sum 1
    let mut centroid = |w: f64| {
        points.push([1.0 / 3.0, 1.0 / 3.0]);
        weights.push(w);
    };
    let exact = match degree {
        0 | 1 => {
            centroid(1.0);
            1
        }
        2 => {
            orbit3(&mut points, &mut weights, 1.0 / 6.0, 1.0 / 3.0);
            2
        }
        3 | 4 => {
            orbit3(&mut points, &mut weights, 0.445948490915965, 0.223381589678011);
            orbit3(&mut points, &mut weights, 0.091576213509771, 0.109951743655322);
            4
        }
        5 => {
            centroid(0.225);
            let s = 15f64.sqrt();
            orbit3(&mut points, &mut weights, (6.0 - s) / 21.0, (155.0 - s) / 1200.0);
            orbit3(&mut points, &mut weights, (6.0 + s) / 21.0, (155.0 + s) / 1200.0);
            5
        }
        6 => {
            orbit3(&mut points, &mut weights, 0.249286745170910, 0.116786275726379);
            orbit3(&mut points, &mut weights, 0.063089014491502, 0.050844906370207);
            orbit6(
                &mut points,
                &mut weights,
                [0.053145049844817, 0.310352451033784],
                0.082851075618374,
            );
            6
        }
        _ => {
            return Err(Error::UnsupportedQuadrature {
                entity: "triangle",
                degree,
            })
        }
    };
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w *= 0.5 / total;
    }
    Ok(QuadratureRule {
        entity: Entity::Triangle,
        points,
        weights,
        degree: exact,
    })
}

// (a, a, 1-2a) and its permutations
fn orbit3(points: &mut Vec<[f64; 2]>, weights: &mut Vec<f64>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    for p in [[a, a], [b, a], [a, b]] {
        points.push(p);
        weights.push(w);
    }
}

// (a, b, 1-a-b) and its six permutations
fn orbit6(points: &mut Vec<[f64; 2]>, weights: &mut Vec<f64>, [a, b]: [f64; 2], w: f64) {
    let c = 1.0 - a - b;
    for p in [[a, b], [b, a], [a, c], [c, a], [b, c], [c, b]] {
        points.push(p);
        weights.push(w);
    }
}

pub fn edge_rule(degree: usize) -> Result<QuadratureRule> {
    if degree > 2 * 5 - 1 {
        return Err(Error::UnsupportedQuadrature {
            entity: "edge",
            degree,
        });
    }
    let n = degree / 2 + 1;
    let (x, w): (&[f64], &[f64]) = match n {
        1 => (&[0.0], &[2.0]),
        2 => {
            const X: f64 = 0.577_350_269_189_625_8;
            (&[-X, X], &[1.0, 1.0])
        }
        3 => (
            &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
            &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
        ),
        4 => (
            &[
                -0.861_136_311_594_052_6,
                -0.339_981_043_584_856_3,
                0.339_981_043_584_856_3,
                0.861_136_311_594_052_6,
            ],
            &[
                0.347_854_845_137_453_9,
                0.652_145_154_862_546_1,
                0.652_145_154_862_546_1,
                0.347_854_845_137_453_9,
            ],
        ),
        _ => (
            &[
                -0.906_179_845_938_664,
                -0.538_469_310_105_683_1,
                0.0,
                0.538_469_310_105_683_1,
                0.906_179_845_938_664,
            ],
            &[
                0.236_926_885_056_189_1,
                0.478_628_670_499_366_5,
                0.568_888_888_888_888_9,
                0.478_628_670_499_366_5,
                0.236_926_885_056_189_1,
            ],
        ),
    };
    Ok(QuadratureRule {
        entity: Entity::Edge,
        points: x.iter().map(|&t| [0.5 * (t + 1.0), 0.0]).collect(),
        weights: w.iter().map(|&v| 0.5 * v).collect(),
        degree: 2 * n - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn triangle_rules_integrate_monomials() {
        for degree in 1..=MAX_DEGREE {
            let rule = triangle_rule(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert!((rule.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
            for a in 0..=degree {
                for b in 0..=degree - a {
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let q: f64 = rule
                        .iter()
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    assert!(
                        (q - exact).abs() <= 1e-13 * exact,
                        "degree {degree}: x^{a} y^{b}: {q} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn x_squared_over_reference_triangle() {
        let rule = triangle_rule(4).unwrap();
        let q: f64 = rule.iter().map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((q - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn edge_rules() {
        let r = edge_rule(3).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for degree in 0..=9 {
            let r = edge_rule(degree).unwrap();
            for k in 0..=degree {
                let q: f64 = r.iter().map(|(p, w)| w * p[0].powi(k as i32)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn unsupported_degrees() {
        assert!(triangle_rule(7).is_err());
        assert!(edge_rule(10).is_err());
        assert!(quadrature_rule(Entity::Edge, 4).is_ok());
    }
}
