//! Compensated (Kahan) accumulator used by the summation routines.

/// Kahan summation: the compensation term recovers the low-order bits lost
/// when adding terms of very different magnitude.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum::default()
    }

    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_low_order_mass() {
        // 1 + 1e-16 added 10_000 times: naive accumulation loses the small
        // terms entirely; the compensated sum keeps them.
        let mut k = KahanSum::new();
        k.add(1.0);
        for _ in 0..10_000 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn exact_on_exact_inputs() {
        let mut k = KahanSum::new();
        for i in 1..=100u32 {
            k.add(f64::from(i) / 64.0);
        }
        assert_eq!(k.value(), 5050.0 / 64.0);
    }
}
