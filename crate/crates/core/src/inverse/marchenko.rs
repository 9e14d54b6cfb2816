//! Nystrom solution of the Marchenko equation
//! `K(x,y) + F(x+y) + int_x^{x+T} K(x,t) F(t+y) dt = 0`.
//!
//! Row by row in `x`, the discretized equation for the adjoint unknowns
//! `X_j = K(x,t_j)^dag` is the block system
//! `X_i + sum_j w_j F(t_i + t_j) X_j = -F(x + t_i)`, with Gregory-corrected
//! trapezoid weights `w_j` (trapezoid plus three end-node corrections, fourth
//! order on smooth kernels, nothing lost on merely once-differentiable ones).
//!
//! A single row is solved by dense LU. The full sweep over the position grid
//! instead maintains the window inverse incrementally: the window `[x, R]`
//! grows leftward node by node, and each step is a rank-`3n` weight fix plus
//! one block bordering update, `O(N^2)` instead of `O(N^3)` per row. Both
//! paths are checked against each other in the tests.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::matrix::{check_finite, identity, mat_norm, CMat};

use super::fkernel::FKernel;
use super::zmat::ZMat;

/// Beyond this system condition number the Fredholm solve is meaningless;
/// the data violates unique solvability.
const COND_LIMIT: f64 = 1e10;

/// Gregory end corrections: weights `3/8, 7/6, 23/24` at the three nodes on
/// each end, `1` inside (all times the step).
const GREGORY_END: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];

/// Quadrature weight at position `j` of an `m`-node window with step `h`.
fn weight_at(j: usize, m: usize, h: f64) -> f64 {
    debug_assert!(j < m);
    if m < 6 {
        // plain trapezoid for windows too small for end corrections
        return if j == 0 || j == m - 1 { 0.5 * h } else { h };
    }
    let from_left = j;
    let from_right = m - 1 - j;
    if from_left < 3 {
        GREGORY_END[from_left] * h
    } else if from_right < 3 {
        GREGORY_END[from_right] * h
    } else {
        h
    }
}

/// One solved row of the Marchenko kernel: `K(x, t)` on its quadrature nodes.
#[derive(Debug, Clone)]
pub struct MarchenkoRow {
    pub x: f64,
    pub ts: Vec<f64>,
    pub k: Vec<CMat>,
    /// Max re-substitution residual on a shifted (off-node) test grid.
    pub residual: f64,
}

impl MarchenkoRow {
    /// `K(x, x)`, the diagonal sample the potential is read from.
    pub fn diagonal(&self) -> &CMat {
        &self.k[0]
    }
}

/// Integration window for a row at `x`: extends to the kernel's decay cutoff,
/// never less than a few nodes.
fn window_length(f: &FKernel, x: f64, min_len: f64) -> f64 {
    (f.envelope_cutoff() - x).max(min_len)
}

fn assemble_system(f: &FKernel, x: f64, ts: &[f64], weights: &[f64]) -> (CMat, CMat) {
    let n = f.n();
    let m = ts.len();
    let big = n * m;
    let mut a = CMat::zeros(big, big);
    let mut rhs = CMat::zeros(big, n);
    for i in 0..m {
        let fi = f.eval(x + ts[i]);
        for r in 0..n {
            for c in 0..n {
                rhs[(i * n + r, c)] = -fi[(r, c)];
            }
        }
        for j in 0..m {
            let blk = f.eval(ts[i] + ts[j]);
            let w = Complex64::new(weights[j], 0.0);
            for r in 0..n {
                for c in 0..n {
                    a[(i * n + r, j * n + c)] = blk[(r, c)] * w;
                }
            }
        }
        for r in 0..n {
            a[(i * n + r, i * n + r)] += Complex64::new(1.0, 0.0);
        }
    }
    (a, rhs)
}

/// Re-substitution residual at off-node points `y = x + (s + 1/2) h`:
/// the solved nodes are interpolated cubically and compared against what the
/// equation demands there. Aliasing in the quadrature shows up here.
fn row_residual(f: &FKernel, x: f64, ts: &[f64], weights: &[f64], k: &[CMat]) -> f64 {
    let m = ts.len();
    if m < 5 {
        return 0.0;
    }
    let h = ts[1] - ts[0];
    let mut samples: Vec<usize> = vec![0, 1, 2, 3];
    let mut s = 6;
    while s < m - 2 {
        samples.push(s);
        s *= 2;
    }
    samples.push(m / 2);
    samples.push(m - 3);
    samples.sort_unstable();
    samples.dedup();

    let mut worst = 0.0_f64;
    for &s in &samples {
        if s + 1 >= m {
            continue;
        }
        let y = ts[s] + 0.5 * h;
        // cubic interpolation of the solved nodes at the midpoint
        let interp = if s == 0 {
            let w = [5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0];
            &k[0] * Complex64::new(w[0], 0.0)
                + &k[1] * Complex64::new(w[1], 0.0)
                + &k[2] * Complex64::new(w[2], 0.0)
                + &k[3] * Complex64::new(w[3], 0.0)
        } else if s + 2 < m {
            let w = [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0];
            &k[s - 1] * Complex64::new(w[0], 0.0)
                + &k[s] * Complex64::new(w[1], 0.0)
                + &k[s + 1] * Complex64::new(w[2], 0.0)
                + &k[s + 2] * Complex64::new(w[3], 0.0)
        } else {
            (&k[s] + &k[s + 1]) * Complex64::new(0.5, 0.0)
        };
        let mut r = interp + f.eval(x + y);
        for j in 0..m {
            r += &k[j] * f.eval(ts[j] + y) * Complex64::new(weights[j], 0.0);
        }
        worst = worst.max(mat_norm(&r));
    }
    worst
}

/// Condition estimate of the assembled system via its LU factors: power
/// iteration on `(A A^dag)^{-1}` gives the smallest singular value, and the
/// norm bound `sqrt(|A|_1 |A|_inf)` the largest.
fn condition_estimate(a: &CMat) -> f64 {
    let big = a.nrows();
    let lu = a.clone().lu();
    let lu_h = a.adjoint().lu();
    let mut z = CMat::from_element(big, 1, Complex64::new(1.0 / (big as f64).sqrt(), 0.0));
    let mut sigma_min = 0.0_f64;
    for _ in 0..10 {
        let mut w = z.clone();
        if !lu_h.solve_mut(&mut w) {
            return f64::INFINITY;
        }
        if !lu.solve_mut(&mut w) {
            return f64::INFINITY;
        }
        let growth = w.norm();
        if growth == 0.0 || !growth.is_finite() {
            return f64::INFINITY;
        }
        sigma_min = 1.0 / growth.sqrt();
        z = w / Complex64::new(growth, 0.0);
    }
    let norm_1 = (0..big)
        .map(|j| (0..big).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let norm_inf = (0..big)
        .map(|i| (0..big).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    (norm_1 * norm_inf).sqrt() / sigma_min
}

/// Solves one row of the Marchenko equation on `grid.n_x` quadrature nodes
/// spanning `[x, x + T]`, `T` chosen from the kernel's decay.
pub fn marchenko_solve(f: &FKernel, x: f64, grid: &GridSpec) -> Result<MarchenkoRow> {
    grid.validate()?;
    if !(x >= 0.0) {
        return Err(Error::InvalidInput("row position must be nonnegative".into()));
    }
    let m = grid.n_x;
    let t_len = window_length(f, x, 10.0 * grid.x_step());
    let h = t_len / (m - 1) as f64;
    let ts: Vec<f64> = (0..m).map(|j| x + j as f64 * h).collect();
    let weights: Vec<f64> = (0..m).map(|j| weight_at(j, m, h)).collect();

    let (a, rhs) = assemble_system(f, x, &ts, &weights);
    let cond = condition_estimate(&a);
    if cond > COND_LIMIT {
        return Err(Error::NearSingularSystem { x, cond });
    }
    let lu = a.lu();
    let solution = lu
        .solve(&rhs)
        .ok_or(Error::NearSingularSystem { x, cond: f64::INFINITY })?;

    let n = f.n();
    let mut k = Vec::with_capacity(m);
    for j in 0..m {
        let mut blk = CMat::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                // unknowns are K^dag blocks
                blk[(c, r)] = solution[(j * n + r, c)].conj();
            }
        }
        check_finite(&blk, "Marchenko kernel row")?;
        k.push(blk);
    }
    let residual = row_residual(f, x, &ts, &weights, &k);
    Ok(MarchenkoRow { x, ts, k, residual })
}

/// Smallest singular value of the Nystrom matrix `I + (quadrature-weighted
/// F shift)` at `x`; bounded away from zero it certifies that the
/// homogeneous equation has only the zero solution, i.e. the row solve is
/// trustworthy.
pub fn homogeneous_margin(f: &FKernel, x: f64, grid: &GridSpec) -> Result<f64> {
    grid.validate()?;
    let m = grid.n_x;
    let t_len = window_length(f, x, 10.0 * grid.x_step());
    let h = t_len / (m - 1) as f64;
    let ts: Vec<f64> = (0..m).map(|j| x + j as f64 * h).collect();
    let weights: Vec<f64> = (0..m).map(|j| weight_at(j, m, h)).collect();
    let (a, _) = assemble_system(f, x, &ts, &weights);
    if a.nrows() <= 600 {
        let svd = a.svd(false, false);
        Ok(svd.singular_values.min())
    } else {
        let lu = a.clone().lu();
        let lu_h = a.adjoint().lu();
        let big = a.nrows();
        let mut z = CMat::from_element(big, 1, Complex64::new(1.0 / (big as f64).sqrt(), 0.0));
        let mut sigma = f64::INFINITY;
        for _ in 0..14 {
            let mut w = z.clone();
            if !lu_h.solve_mut(&mut w) || !lu.solve_mut(&mut w) {
                return Ok(0.0);
            }
            let growth = w.norm();
            if !growth.is_finite() || growth == 0.0 {
                return Ok(0.0);
            }
            sigma = 1.0 / growth.sqrt();
            z = w / Complex64::new(growth, 0.0);
        }
        Ok(sigma)
    }
}

/// The Marchenko kernel on the whole position grid: rows at `x_p = p h` for
/// `p = 0..=n_x`, all sharing quadrature nodes with the grid itself.
#[derive(Debug)]
pub struct MarchenkoKernel {
    pub h: f64,
    pub rows: Vec<MarchenkoRow>,
    pub max_residual: f64,
    /// sampled `(x, sigma_min)` estimates along the sweep
    pub margins: Vec<(f64, f64)>,
    /// largest kernel value at a window end; a truncation-length diagnostic
    pub tail_norm: f64,
}

impl MarchenkoKernel {
    pub fn diagonal(&self) -> Vec<CMat> {
        self.rows.iter().map(|r| r.diagonal().clone()).collect()
    }
}

/// Sweeps the Marchenko solve over the full position grid by growing the
/// window leftward from `R = max(cutoff, x_max + 8h)` down to `x = 0`,
/// updating the window inverse incrementally.
pub fn marchenko_sweep(f: &FKernel, grid: &GridSpec) -> Result<MarchenkoKernel> {
    grid.validate()?;
    let n = f.n();
    let h = grid.x_step();
    if f.step() > 0.0 && (f.step() - h).abs() > 1e-9 * h && !f.fourier_table().is_empty() {
        return Err(Error::InvalidInput(
            "kernel tabulation step must match the position grid".into(),
        ));
    }
    let rows_wanted = grid.n_x; // rows at p = 0..=rows_wanted
    let cutoff_nodes = (f.envelope_cutoff() / h).ceil() as usize;
    let m_end = cutoff_nodes.max(rows_wanted + 8);

    // Node tables of F at integer and half-integer multiples of h.
    let ftab: Vec<CMat> = (0..=2 * m_end).map(|s| f.eval(s as f64 * h)).collect();
    let fhalf: Vec<CMat> = (0..2 * m_end).map(|s| f.eval((s as f64 + 0.5) * h)).collect();
    let fnorm: Vec<f64> = ftab.iter().map(mat_norm).collect();

    // |A|_1-style bound over the largest window, reused for the cond check.
    let a_norm_bound = {
        let m = m_end + 1;
        let mut worst = 0.0_f64;
        for i in 0..m {
            let mut acc = 1.0;
            for j in 0..m {
                acc += weight_at(j, m, h) * fnorm[i + j];
            }
            worst = worst.max(acc);
        }
        worst
    };

    let start = m_end - 7; // initial window: 8 nodes, inverted directly
    debug_assert!(start > rows_wanted);

    let build_u_zmat = |p: usize, m_old: usize| -> ZMat {
        // weight-fix columns for the window that starts at p+1
        let delta = [
            (GREGORY_END[1] - GREGORY_END[0]) * h,
            (GREGORY_END[2] - GREGORY_END[1]) * h,
            (1.0 - GREGORY_END[2]) * h,
        ];
        let big = n * m_old;
        let mut u = ZMat::zeros(big, 3 * n);
        for c in 0..3 {
            for i in 0..m_old {
                let blk = &ftab[2 * p + 2 + i + c];
                for r in 0..n {
                    for cc in 0..n {
                        u.re[(i * n + r, c * n + cc)] = blk[(r, cc)].re * delta[c];
                        u.im[(i * n + r, c * n + cc)] = blk[(r, cc)].im * delta[c];
                    }
                }
            }
        }
        u
    };

    // initial inverse at window [start..=m_end]
    let mut inv = {
        let m0 = m_end - start + 1;
        let ts: Vec<f64> = (0..m0).map(|j| (start + j) as f64 * h).collect();
        let weights: Vec<f64> = (0..m0).map(|j| weight_at(j, m0, h)).collect();
        let (a, _) = assemble_system(f, start as f64 * h, &ts, &weights);
        let ainv = a
            .try_inverse()
            .ok_or(Error::NearSingularSystem { x: start as f64 * h, cond: f64::INFINITY })?;
        ZMat::from_cmat(&ainv)
    };

    let mut rows: Vec<MarchenkoRow> = Vec::with_capacity(rows_wanted + 1);
    let mut margins: Vec<(f64, f64)> = Vec::new();
    let mut tail_norm = 0.0_f64;

    for p in (0..start).rev() {
        let m_old = m_end - p; // nodes in the current (pre-border) window
        let big_old = n * m_old;

        // rank-3n weight fix: the three leading nodes of the old window move
        // from Gregory-start weights to their interior values
        if m_old >= 6 {
            let u = build_u_zmat(p, m_old);
            let y = inv.mul(&u);
            let z = inv.block(0, 0, 3 * n, big_old);
            let mut w_small = y.block(0, 0, 3 * n, 3 * n).to_cmat();
            for d in 0..3 * n {
                w_small[(d, d)] += Complex64::new(1.0, 0.0);
            }
            let w_inv = w_small
                .try_inverse()
                .ok_or(Error::NearSingularSystem { x: p as f64 * h, cond: f64::INFINITY })?;
            let t1 = y.mul(&ZMat::from_cmat(&w_inv));
            inv.gemm_acc(-1.0, &t1, &z);
        }

        // bordering: prepend node p
        let m_new = m_old + 1;
        let w0 = weight_at(0, m_new, h);
        let mut b = ZMat::zeros(n, big_old);
        let mut c = ZMat::zeros(big_old, n);
        for j in 0..m_old {
            let blk = &ftab[2 * p + 1 + j];
            let wj = weight_at(j + 1, m_new, h);
            for r in 0..n {
                for cc in 0..n {
                    b.re[(r, j * n + cc)] = blk[(r, cc)].re * wj;
                    b.im[(r, j * n + cc)] = blk[(r, cc)].im * wj;
                    c.re[(j * n + r, cc)] = blk[(r, cc)].re * w0;
                    c.im[(j * n + r, cc)] = blk[(r, cc)].im * w0;
                }
            }
        }
        let a_corner = identity(n) + &ftab[2 * p] * Complex64::new(w0, 0.0);

        let dc = inv.mul(&c);
        let bd = b.mul(&inv);
        let e_mat = &a_corner - b.mul(&dc).to_cmat();
        let e = e_mat
            .try_inverse()
            .ok_or(Error::NearSingularSystem { x: p as f64 * h, cond: f64::INFINITY })?;
        let e_z = ZMat::from_cmat(&e);
        let mut f_blk = e_z.mul(&bd);
        f_blk.scale_in_place(-1.0);
        let dce = dc.mul(&e_z);
        let mut g_blk = dce.clone();
        g_blk.scale_in_place(-1.0);
        inv.gemm_acc(1.0, &dce, &bd);

        let big_new = n * m_new;
        let mut grown = ZMat::zeros(big_new, big_new);
        grown.set_block(0, 0, &e_z);
        grown.set_block(0, n, &f_blk);
        grown.set_block(n, 0, &g_blk);
        grown.set_block(n, n, &inv);
        inv = grown;

        if p <= rows_wanted {
            // row extraction: X = Inv * (-F(x_p + t_i)) blocks, K_j = X_j^dag
            let mut rhs = ZMat::zeros(big_new, n);
            for i in 0..m_new {
                let blk = &ftab[2 * p + i];
                for r in 0..n {
                    for cc in 0..n {
                        rhs.re[(i * n + r, cc)] = -blk[(r, cc)].re;
                        rhs.im[(i * n + r, cc)] = -blk[(r, cc)].im;
                    }
                }
            }
            let x_sol = inv.mul(&rhs);
            let mut k = Vec::with_capacity(m_new);
            for j in 0..m_new {
                let mut blk = CMat::zeros(n, n);
                for r in 0..n {
                    for cc in 0..n {
                        blk[(cc, r)] = Complex64::new(
                            x_sol.re[(j * n + r, cc)],
                            -x_sol.im[(j * n + r, cc)],
                        );
                    }
                }
                check_finite(&blk, "Marchenko kernel row")?;
                k.push(blk);
            }
            tail_norm = tail_norm.max(mat_norm(&k[m_new - 1]));

            let ts: Vec<f64> = (0..m_new).map(|j| (p + j) as f64 * h).collect();
            let residual = sweep_row_residual(p, m_new, h, &ftab, &fhalf, &k, n);
            if p % 16 == 0 {
                let sigma = margin_from_inverse(&inv);
                let cond = a_norm_bound / sigma.max(f64::MIN_POSITIVE);
                if cond > COND_LIMIT {
                    return Err(Error::NearSingularSystem { x: p as f64 * h, cond });
                }
                margins.push((p as f64 * h, sigma));
            }
            rows.push(MarchenkoRow { x: p as f64 * h, ts, k, residual });
        }
    }

    rows.reverse();
    margins.reverse();
    let max_residual = rows.iter().fold(0.0_f64, |a, r| a.max(r.residual));
    Ok(MarchenkoKernel { h, rows, max_residual, margins, tail_norm })
}

/// Off-node residual for a sweep row, from the precomputed half-step table.
fn sweep_row_residual(
    p: usize,
    m: usize,
    h: f64,
    ftab: &[CMat],
    fhalf: &[CMat],
    k: &[CMat],
    n: usize,
) -> f64 {
    let _ = ftab;
    if m < 5 {
        return 0.0;
    }
    let mut samples: Vec<usize> = vec![0, 1, 2, 3];
    let mut s = 6;
    while s < m - 2 {
        samples.push(s);
        s *= 2;
    }
    samples.push(m / 2);
    samples.push(m - 3);
    samples.sort_unstable();
    samples.dedup();

    let mut worst = 0.0_f64;
    for &s in &samples {
        if s + 1 >= m || 2 * p + s >= fhalf.len() {
            continue;
        }
        let interp = if s == 0 {
            let w = [5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0];
            &k[0] * Complex64::new(w[0], 0.0)
                + &k[1] * Complex64::new(w[1], 0.0)
                + &k[2] * Complex64::new(w[2], 0.0)
                + &k[3] * Complex64::new(w[3], 0.0)
        } else if s + 2 < m {
            let w = [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0];
            &k[s - 1] * Complex64::new(w[0], 0.0)
                + &k[s] * Complex64::new(w[1], 0.0)
                + &k[s + 1] * Complex64::new(w[2], 0.0)
                + &k[s + 2] * Complex64::new(w[3], 0.0)
        } else {
            (&k[s] + &k[s + 1]) * Complex64::new(0.5, 0.0)
        };
        // r = K~(y) + F(x+y) + sum_j w_j K_j F(t_j + y), y = (p+s+1/2) h
        let mut r = interp + &fhalf[2 * p + s];
        for j in 0..m {
            let idx = 2 * p + j + s;
            if idx >= fhalf.len() {
                break;
            }
            let wj = weight_at(j, m, h);
            r += &k[j] * &fhalf[idx] * Complex64::new(wj, 0.0);
        }
        worst = worst.max(mat_norm(&r));
        let _ = n;
    }
    worst
}

/// `sigma_min(A) = 1/sigma_max(A^{-1})` by power iteration on `Inv^dag Inv`.
fn margin_from_inverse(inv: &ZMat) -> f64 {
    let big = inv.nrows();
    let mut z = ZMat::zeros(big, 1);
    let scale = 1.0 / (big as f64).sqrt();
    for i in 0..big {
        z.re[(i, 0)] = scale;
    }
    let mut lambda = 0.0_f64;
    for _ in 0..12 {
        let w = inv.adjoint_mul(&inv.mul(&z));
        lambda = w.frobenius_norm();
        if lambda == 0.0 || !lambda.is_finite() {
            return 0.0;
        }
        z = w;
        z.scale_in_place(1.0 / lambda);
    }
    1.0 / lambda.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::from_rows;

    fn soliton_kernel(scale: f64) -> FKernel {
        let c2 = CMat::from_element(1, 1, Complex64::new(scale, 0.0));
        FKernel::from_parts(1, 0.025, Vec::new(), vec![(1.0, c2)], 1e-8).unwrap()
    }

    fn closed_form_k(x: f64, y: f64) -> f64 {
        -2.0 * (-(x + y)).exp() / (1.0 + (-2.0 * x).exp())
    }

    #[test]
    fn zero_kernel_row_is_zero_with_unit_margin() {
        let f = FKernel::from_parts(1, 0.05, Vec::new(), Vec::new(), 1e-8).unwrap();
        let grid = GridSpec { n_x: 80, x_max: 4.0, ..GridSpec::default() };
        let row = marchenko_solve(&f, 0.0, &grid).unwrap();
        for blk in &row.k {
            assert!(mat_norm(blk) < 1e-14);
        }
        assert!(row.residual < 1e-14);
        let margin = homogeneous_margin(&f, 0.0, &grid).unwrap();
        assert!((margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_closed_form_single_row() {
        // F = 2 e^{-t}: K(x,y) = -2 e^{-(x+y)}/(1 + e^{-2x})
        let f = soliton_kernel(2.0);
        let grid = GridSpec { n_x: 900, x_max: 12.0, ..GridSpec::default() };
        for &x in &[0.0, 0.5, 1.5] {
            let row = marchenko_solve(&f, x, &grid).unwrap();
            let mut worst = 0.0_f64;
            for (t, blk) in row.ts.iter().zip(&row.k) {
                worst = worst.max((blk[(0, 0)].re - closed_form_k(x, *t)).abs());
                assert!(blk[(0, 0)].im.abs() < 1e-12);
            }
            assert!(worst < 1e-6, "x={x} sup error {worst}");
            assert!(row.residual < 1e-8, "x={x} residual {}", row.residual);
        }
    }

    #[test]
    fn sweep_matches_closed_form_everywhere() {
        let f = soliton_kernel(2.0);
        let grid = GridSpec { n_x: 260, x_max: 6.5, ..GridSpec::default() };
        let kernel = marchenko_sweep(&f, &grid).unwrap();
        assert_eq!(kernel.rows.len(), 261);
        let mut worst = 0.0_f64;
        for row in &kernel.rows {
            for (t, blk) in row.ts.iter().zip(&row.k) {
                worst = worst.max((blk[(0, 0)].re - closed_form_k(row.x, *t)).abs());
            }
        }
        assert!(worst < 1e-6, "sup error {worst}");
        assert!(kernel.max_residual < 1e-7, "residual {}", kernel.max_residual);
        assert!(kernel.tail_norm < 1e-7, "tail {}", kernel.tail_norm);
        for (_, sigma) in &kernel.margins {
            assert!(*sigma > 0.4, "margin {sigma}");
        }
    }

    #[test]
    fn sweep_agrees_with_direct_lu_rows() {
        // matrix-valued kernel with two decay rates; checks the incremental
        // inverse (weight fix + bordering) against a direct dense solve
        let c2a = from_rows(2, &[
            Complex64::new(0.8, 0.0),
            Complex64::new(0.2, 0.1),
            Complex64::new(0.2, -0.1),
            Complex64::new(0.5, 0.0),
        ]);
        let c2b = from_rows(2, &[
            Complex64::new(0.3, 0.0),
            Complex64::new(-0.1, 0.05),
            Complex64::new(-0.1, -0.05),
            Complex64::new(0.6, 0.0),
        ]);
        let h = 0.05;
        let f = FKernel::from_parts(2, h, Vec::new(), vec![(0.7, c2a), (1.3, c2b)], 1e-8).unwrap();
        let grid = GridSpec { n_x: 60, x_max: 3.0, ..GridSpec::default() };
        let kernel = marchenko_sweep(&f, &grid).unwrap();

        // reproduce two rows with a direct assembly on identical nodes
        for &p in &[0usize, 37] {
            let row = &kernel.rows[p];
            let weights: Vec<f64> = (0..row.ts.len())
                .map(|j| weight_at(j, row.ts.len(), h))
                .collect();
            let (a, rhs) = assemble_system(&f, row.x, &row.ts, &weights);
            let sol = a.lu().solve(&rhs).unwrap();
            let n = 2;
            for j in 0..row.ts.len() {
                let mut blk = CMat::zeros(n, n);
                for r in 0..n {
                    for c in 0..n {
                        blk[(c, r)] = sol[(j * n + r, c)].conj();
                    }
                }
                let diff = mat_norm(&(&blk - &row.k[j]));
                assert!(diff < 1e-10, "p={p} node {j} diff {diff}");
            }
        }
    }

    #[test]
    fn margin_detects_singular_data() {
        // F = -2 e^{-t} puts an eigenvalue exactly at -1 for the window at
        // x = 0 (the rank-one kernel has eigenvalue -e^{-2x}), so the margin
        // collapses; the +10-scaled positive version stays safely regular.
        let f_bad = soliton_kernel(-2.0);
        let grid = GridSpec { n_x: 400, x_max: 10.0, ..GridSpec::default() };
        let margin = homogeneous_margin(&f_bad, 0.0, &grid).unwrap();
        assert!(margin < 1e-4, "margin should collapse, got {margin}");

        let f_big = soliton_kernel(20.0);
        let margin_big = homogeneous_margin(&f_big, 0.0, &grid).unwrap();
        assert!(margin_big > 0.5, "positive kernels stay regular, got {margin_big}");
    }

    #[test]
    fn separable_margin_near_one() {
        // I + rank-one PSD kernel: spectrum {1 + e^{-2x}, 1, ...}; the
        // discretized sigma_min sits near 1 (weight asymmetry allows a
        // modest deviation).
        let f = soliton_kernel(2.0);
        let grid = GridSpec { n_x: 400, x_max: 10.0, ..GridSpec::default() };
        let margin = homogeneous_margin(&f, 0.0, &grid).unwrap();
        assert!(margin > 0.8 && margin < 1.2, "margin {margin}");
    }
}
