//! Truncated Taylor series arithmetic. `c[k]` holds f^(k)(y0) / k!.

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Self { c }
    }

    /// The identity function expanded at `y0`.
    pub fn variable(y0: f64, order: usize) -> Self {
        let mut j = Self::constant(y0, order);
        if order >= 1 {
            j.c[1] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        if k > self.order() {
            return 0.0;
        }
        let fact: f64 = (1..=k).map(|m| m as f64).product();
        self.c[k] * fact
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet { c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        Jet { c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { c: self.c.iter().map(|a| a * s).collect() }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let n = self.order().min(o.order());
        let c = (0..=n).map(|k| (0..=k).map(|j| self.c[j] * o.c[k - j]).sum()).collect();
        Jet { c }
    }

    pub fn powi(&self, p: u32) -> Jet {
        let mut out = Jet::constant(1.0, self.order());
        for _ in 0..p {
            out = out.mul(self);
        }
        out
    }

    /// Quotient; requires a nonzero constant term in `o`.
    pub fn div(&self, o: &Jet) -> Jet {
        let n = self.order().min(o.order());
        let mut q = vec![0.0; n + 1];
        for k in 0..=n {
            let s: f64 = (1..=k).map(|j| o.c[j] * q[k - j]).sum();
            q[k] = (self.c[k] - s) / o.c[0];
        }
        Jet { c: q }
    }

    /// Divide by (y - y0); drops the constant term, so the order decreases by one.
    pub fn shift_down(&self) -> Jet {
        Jet { c: self.c[1..].to_vec() }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        Jet { c: self.c[..=order.min(self.order())].to_vec() }
    }

    /// Jet of f' from the jet of f; order decreases by one.
    pub fn deriv_jet(&self) -> Jet {
        Jet { c: (1..self.c.len()).map(|k| k as f64 * self.c[k]).collect() }
    }

    pub fn sin_cos(&self) -> (Jet, Jet) {
        let n = self.order();
        let mut s = vec![0.0; n + 1];
        let mut c = vec![0.0; n + 1];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..=n {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                let a = j as f64 * self.c[j];
                ss += a * c[k - j];
                cc -= a * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (Jet { c: s }, Jet { c })
    }

    pub fn exp(&self) -> Jet {
        let n = self.order();
        let mut e = vec![0.0; n + 1];
        e[0] = self.c[0].exp();
        for k in 1..=n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.c[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet { c: e }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let y = Jet::variable(2.0, 5);
        let f = y.powi(3).add(&y.scale(-4.0));
        assert_eq!(f.derivative(0), 0.0);
        assert_eq!(f.derivative(1), 8.0);
        assert_eq!(f.derivative(2), 12.0);
        assert_eq!(f.derivative(3), 6.0);
        assert_eq!(f.derivative(4), 0.0);
    }

    #[test]
    fn sin_derivatives_cycle() {
        let y = Jet::variable(0.7, 7);
        let (s, c) = y.sin_cos();
        let expect = [0.7f64.sin(), 0.7f64.cos(), -0.7f64.sin(), -0.7f64.cos()];
        for (k, e) in expect.iter().enumerate() {
            assert!((s.derivative(k) - e).abs() < 1e-13);
            assert!((c.derivative(k + 3) - e).abs() < 1e-13);
        }
        let e = y.exp();
        assert!((e.derivative(4) - 0.7f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn division_inverts_multiplication() {
        let y = Jet::variable(0.3, 6);
        let a = y.exp();
        let b = y.sin_cos().1;
        let q = a.mul(&b).div(&b);
        for k in 0..=6 {
            assert!((q.c[k] - a.c[k]).abs() < 1e-12);
        }
    }
}
