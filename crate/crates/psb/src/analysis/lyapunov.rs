//! QR-accumulated Lyapunov exponents of orbit tangent products.

use crate::dynamics::{piece_jacobian, return_step, BoundaryState};
use crate::error::{Error, Result};
use crate::math::{qr_gram_schmidt, Mat};
use crate::model::PseudoBilliardModel;

#[derive(Debug, Clone)]
pub struct LyapunovReport {
    /// Exponents sorted descending, one per tangent dimension.
    pub exponents: Vec<f64>,
    pub steps: usize,
    /// Variance of block estimates of the top exponent over the tail half.
    pub tail_variance: f64,
    /// Standard error of the top exponent from the tail blocks.
    pub tail_stderr: f64,
    /// Top-exponent estimates from the two disjoint orbit halves.
    pub half_estimates: (f64, f64),
    /// Extremes of single-piece singular values along the orbit.
    pub piece_sv_min: f64,
    pub piece_sv_max: f64,
    /// (k, min, max) of singular values of k-step compositions, k = 2..4,
    /// sampled over the orbit prefix.
    pub k_step_sv: Vec<(usize, f64, f64)>,
}

/// Accumulate the exponents of the piece-Jacobian product along the orbit
/// of `s0`, renormalizing by QR at every step.
///
/// An orbit that dies at a degenerate vertex (possible when it converges
/// onto a polytope vertex) still yields an estimate as long as at least
/// ten steps completed; `steps` reports the count actually used.
pub fn lyapunov_spectrum(
    model: &PseudoBilliardModel,
    s0: &BoundaryState,
    n: usize,
) -> Result<LyapunovReport> {
    if n < 100 {
        return Err(Error::OrbitTooShort(100));
    }
    let k = model
        .facet(s0.facet)
        .ok_or_else(|| Error::BadModel("unknown start facet".into()))?
        .tangent
        .len();
    let mut q = Mat::identity(k);
    let mut log_sums = vec![0.0; k];
    let mut state = s0.clone();
    let mut piece_sv_min = f64::INFINITY;
    let mut piece_sv_max = f64::NEG_INFINITY;
    // rolling window of recent pieces for k-step composition stats
    let sample_prefix = n.min(10_000);
    let mut window: Vec<Mat> = Vec::new();
    let mut kstep: Vec<(usize, f64, f64)> = (2..=4.min(sample_prefix))
        .map(|k| (k, f64::INFINITY, f64::NEG_INFINITY))
        .collect();
    // per-step log of the leading R entry, for post-hoc tail statistics
    let mut top_logs: Vec<f64> = Vec::with_capacity(n.min(1 << 22));

    let mut completed = 0usize;
    for step in 0..n {
        let next = match return_step(model, &state) {
            Ok(s) => s,
            Err(Error::DegenerateVertex) if completed >= 10 => break,
            Err(e) => return Err(e),
        };
        let piece = piece_jacobian(model, state.facet, &state.field, next.facet)?;
        if step < sample_prefix {
            let sv = piece.linear.singular_values();
            piece_sv_min = piece_sv_min.min(*sv.last().unwrap());
            piece_sv_max = piece_sv_max.max(sv[0]);
            window.push(piece.linear.clone());
            if window.len() > 4 {
                window.remove(0);
            }
            for (kk, lo, hi) in kstep.iter_mut() {
                if window.len() >= *kk {
                    let mut comp = window[window.len() - *kk].clone();
                    for m in &window[window.len() - *kk + 1..] {
                        comp = m.matmul(&comp);
                    }
                    let sv = comp.singular_values();
                    *lo = lo.min(*sv.last().unwrap());
                    *hi = hi.max(sv[0]);
                }
            }
        }
        let b = piece.linear.matmul(&q);
        let (qn, rdiag) = qr_gram_schmidt(&b);
        q = qn;
        for (ls, r) in log_sums.iter_mut().zip(&rdiag) {
            *ls += r.max(1e-300).ln();
        }
        top_logs.push(rdiag.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(1e-300).ln());
        completed += 1;
        state = next;
    }
    if completed < 10 {
        return Err(Error::DegenerateVertex);
    }

    let mut exponents: Vec<f64> = log_sums.iter().map(|s| s / completed as f64).collect();
    exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let half = completed / 2;
    let half_first = top_logs[..half].iter().sum::<f64>() / half.max(1) as f64;
    let half_second = top_logs[half..].iter().sum::<f64>() / (completed - half).max(1) as f64;

    let nblocks = 10.min(half.max(1));
    let block_len = (completed - half) / nblocks.max(1);
    let mut block_tops = Vec::new();
    if block_len > 0 {
        for b in 0..nblocks {
            let lo = half + b * block_len;
            let hi = (lo + block_len).min(completed);
            if hi > lo {
                block_tops.push(top_logs[lo..hi].iter().sum::<f64>() / (hi - lo) as f64);
            }
        }
    }
    let mean_block = if block_tops.is_empty() {
        0.0
    } else {
        block_tops.iter().sum::<f64>() / block_tops.len() as f64
    };
    let tail_variance = if block_tops.len() > 1 {
        block_tops.iter().map(|b| (b - mean_block).powi(2)).sum::<f64>()
            / (block_tops.len() - 1) as f64
    } else {
        0.0
    };
    let tail_stderr = (tail_variance / block_tops.len().max(1) as f64).sqrt();

    Ok(LyapunovReport {
        exponents,
        steps: completed,
        tail_variance,
        tail_stderr,
        half_estimates: (half_first, half_second),
        piece_sv_min,
        piece_sv_max,
        k_step_sv: kstep,
    })
}
