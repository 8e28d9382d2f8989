//! Linear-time evaluation of `sum_j w_j exp(-|x - s_j|)` for sorted sources and
//! targets. Every peakon-kernel sum in the crate (multipeakon vector field,
//! field reconstruction, Green convolution on atoms) goes through here.

/// Split exponential sums at each target.
///
/// `left[i]` collects sources with `s_j <= x_i`, `right[i]` those with
/// `s_j > x_i`; the full sum is `left[i] + right[i]`.
#[derive(Clone, Debug)]
pub(crate) struct ExpSums {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl ExpSums {
    pub fn total(&self, i: usize) -> f64 {
        self.left[i] + self.right[i]
    }
}

/// Both `sources` and `targets` must be sorted ascending.
pub(crate) fn exp_sums(sources: &[f64], weights: &[f64], targets: &[f64]) -> ExpSums {
    debug_assert_eq!(sources.len(), weights.len());
    debug_assert!(sources.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(targets.windows(2).all(|w| w[0] <= w[1]));

    let nt = targets.len();
    let ns = sources.len();
    let mut left = vec![0.0; nt];
    let mut right = vec![0.0; nt];

    let mut acc = 0.0;
    let mut j = 0;
    for i in 0..nt {
        let x = targets[i];
        if i > 0 {
            acc *= (-(x - targets[i - 1])).exp();
        }
        while j < ns && sources[j] <= x {
            acc += weights[j] * (-(x - sources[j])).exp();
            j += 1;
        }
        left[i] = acc;
    }

    acc = 0.0;
    let mut j = ns;
    for i in (0..nt).rev() {
        let x = targets[i];
        if i + 1 < nt {
            acc *= (-(targets[i + 1] - x)).exp();
        }
        while j > 0 && sources[j - 1] > x {
            acc += weights[j - 1] * (-(sources[j - 1] - x)).exp();
            j -= 1;
        }
        right[i] = acc;
    }

    ExpSums { left, right }
}
