//! Polynomials in `W` with 2×2 matrix coefficients.
//!
//! The total transfer matrix of the fast scheme is `P(W)·Z^{-d}` where `P` is
//! the product of all step polynomials. This module multiplies them (naive
//! convolution for short operands, FFT otherwise), assembles the full product
//! with a fixed binary tree, and evaluates the result on spectral grids.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::mat2::{Cx, Mat2, ZERO};
use crate::par;
use crate::phase::{cis_multiple, reduced_angle};
use crate::schemes::StepPoly;

/// Products with output degree below this always use direct convolution.
pub const NAIVE_DEGREE_THRESHOLD: usize = 32;

/// Matrix polynomial `Σ coeffs[k]·W^k`, understood as divided by
/// `Z^{denom_z_exp}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatPoly {
    pub coeffs: Vec<Mat2>,
    pub denom_z_exp: u64,
}

impl MatPoly {
    pub fn identity() -> Self {
        MatPoly {
            coeffs: vec![Mat2::IDENTITY],
            denom_z_exp: 0,
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    fn entry(&self, idx: usize) -> Vec<Cx> {
        self.coeffs.iter().map(|m| m.entries()[idx]).collect()
    }
}

impl From<StepPoly> for MatPoly {
    fn from(s: StepPoly) -> Self {
        MatPoly {
            coeffs: s.coeffs.to_vec(),
            denom_z_exp: s.denom_z_exp,
        }
    }
}

impl From<&StepPoly> for MatPoly {
    fn from(s: &StepPoly) -> Self {
        MatPoly::from(*s)
    }
}

/// Direct convolution `Σₖ p_k·q_{m-k}`.
pub fn matpoly_mul_naive(p: &MatPoly, q: &MatPoly) -> MatPoly {
    Split::from(p).mul_naive(&Split::from(q)).into()
}

/// `p·q` with `p` the later-in-time factor (applied on the left).
pub fn matpoly_mul(p: &MatPoly, q: &MatPoly) -> MatPoly {
    Split::from(p).mul(Split::from(q), false).into()
}

/// FFT product. Entry polynomials that vanish or have a single nonzero
/// coefficient are handled exactly in the coefficient domain.
pub fn matpoly_mul_fft(p: &MatPoly, q: &MatPoly) -> MatPoly {
    Split::from(p).mul_fft(Split::from(q), false).into()
}

/// Rough operation-count comparison between the two product paths.
fn prefer_fft(len_p: usize, len_q: usize) -> bool {
    let out_len = len_p + len_q - 1;
    if out_len <= NAIVE_DEGREE_THRESHOLD {
        return false;
    }
    let n = out_len.next_power_of_two() as f64;
    let fft_cost = 6.0 * n * n.log2() + 8.0 * n;
    let naive_cost = 8.0 * len_p as f64 * len_q as f64;
    fft_cost < naive_cost
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static BUFFERS: RefCell<Vec<Vec<Cx>>> = const { RefCell::new(Vec::new()) };
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Zeroed buffer of length `n`, reusing freed allocations on this thread.
fn take_buffer(n: usize) -> Vec<Cx> {
    let mut buf = BUFFERS
        .with(|b| {
            let mut b = b.borrow_mut();
            let fit = b.iter().position(|v| v.capacity() >= n)?;
            Some(b.swap_remove(fit))
        })
        .unwrap_or_default();
    buf.clear();
    buf.resize(n, ZERO);
    buf
}

fn give_buffer(buf: Vec<Cx>) {
    BUFFERS.with(|b| {
        let mut b = b.borrow_mut();
        if b.len() < 16 {
            b.push(buf);
        } else if let Some(small) = b.iter_mut().min_by_key(|v| v.capacity()) {
            if small.capacity() < buf.capacity() {
                *small = buf;
            }
        }
    });
}

fn transform(fft: &dyn Fft<f64>, buf: &mut [Cx]) {
    let mut scratch = take_buffer(fft.get_inplace_scratch_len());
    fft.process_with_scratch(buf, &mut scratch);
    give_buffer(scratch);
}

/// Sparsity class of one scalar entry polynomial.
#[derive(Clone, Copy)]
enum Entry {
    Zero,
    Monomial(usize, Cx),
    Dense,
}

impl Entry {
    fn classify(coeffs: &[Cx]) -> Entry {
        let mut nonzero = coeffs.iter().enumerate().filter(|(_, c)| **c != ZERO);
        match (nonzero.next(), nonzero.next()) {
            (None, _) => Entry::Zero,
            (Some((k, c)), None) => Entry::Monomial(k, *c),
            _ => Entry::Dense,
        }
    }
}

/// `acc[k + shift] += scale·src[k]`
fn add_shifted(acc: &mut [Cx], src: &[Cx], shift: usize, scale: Cx) {
    for (dst, s) in acc[shift..].iter_mut().zip(src) {
        *dst += *s * scale;
    }
}

/// Entry-major form of a matrix polynomial: one coefficient vector per
/// entry, row-major. Products work on this layout so each entry can be
/// transformed in place; `MatPoly` is only assembled at the end.
struct Split {
    e: [Vec<Cx>; 4],
    /// Length-`2^k` DFTs of the entries divided by `2^k`, kept from the FFT
    /// product that produced them so the next product only has to compute
    /// the odd bins.
    spectra: Option<[Vec<Cx>; 4]>,
    denom_z_exp: u64,
}

impl From<&MatPoly> for Split {
    fn from(m: &MatPoly) -> Self {
        Split::from_coeffs(&m.coeffs, m.denom_z_exp)
    }
}

impl From<Split> for MatPoly {
    fn from(s: Split) -> Self {
        let [a, b, c, d] = &s.e;
        let coeffs = (0..s.len())
            .map(|k| Mat2::new(a[k], b[k], c[k], d[k]))
            .collect();
        MatPoly {
            coeffs,
            denom_z_exp: s.denom_z_exp,
        }
    }
}

/// `exp(-2πik/n)` for `k < n`.
fn twiddles(n: usize) -> Arc<Vec<Cx>> {
    thread_local! {
        static TABLES: RefCell<Vec<Arc<Vec<Cx>>>> = const { RefCell::new(Vec::new()) };
    }
    TABLES.with(|t| {
        let mut t = t.borrow_mut();
        if let Some(tab) = t.iter().find(|tab| tab.len() == n) {
            return tab.clone();
        }
        let step = -2.0 * std::f64::consts::PI / n as f64;
        let tab = Arc::new((0..n).map(|k| Cx::cis(step * k as f64)).collect());
        t.push(Arc::clone(&tab));
        tab
    })
}

/// Length-`n` DFT of `coeffs` (at most `n/2` of them), given their length-`n/2`
/// DFT divided by `n/2`: the even bins are `half` rescaled, the odd bins the
/// DFT of the twisted input.
fn extend_spectrum(coeffs: &[Cx], half: &[Cx], n: usize) -> Vec<Cx> {
    let (fwd_half, _) = plans(n / 2);
    let mut odd = take_buffer(n / 2);
    for ((dst, c), w) in odd.iter_mut().zip(coeffs).zip(twiddles(n).iter()) {
        *dst = c * w;
    }
    transform(&*fwd_half, &mut odd);
    let mut out = take_buffer(n);
    let unscale = (n / 2) as f64;
    for ((pair, e), o) in out.chunks_exact_mut(2).zip(half).zip(&odd) {
        pair[0] = e * unscale;
        pair[1] = *o;
    }
    give_buffer(odd);
    out
}

/// Length-`n` DFT of one entry, reusing its kept half-length DFT if any.
fn entry_spectrum(mut coeffs: Vec<Cx>, half: Option<Vec<Cx>>, n: usize) -> Vec<Cx> {
    match half {
        Some(h) if 2 * h.len() == n => {
            let s = extend_spectrum(&coeffs, &h, n);
            give_buffer(h);
            give_buffer(coeffs);
            s
        }
        h => {
            h.into_iter().for_each(give_buffer);
            let (fwd, _) = plans(n);
            coeffs.resize(n, ZERO);
            transform(&*fwd, &mut coeffs);
            coeffs
        }
    }
}

/// Inverse of a product spectrum already divided by `n`, truncated to
/// `out_len`, optionally keeping a copy of the spectrum.
fn finish_entry(mut spec: Vec<Cx>, out_len: usize, keep: bool) -> (Vec<Cx>, Option<Vec<Cx>>) {
    let n = spec.len();
    let kept = keep.then(|| {
        let mut k = take_buffer(n);
        k.copy_from_slice(&spec);
        k
    });
    let (_, inv) = plans(n);
    transform(&*inv, &mut spec);
    spec.truncate(out_len);
    (spec, kept)
}

impl Split {
    fn from_coeffs(coeffs: &[Mat2], denom_z_exp: u64) -> Self {
        Split {
            e: std::array::from_fn(|i| coeffs.iter().map(|m| m.entries()[i]).collect()),
            spectra: None,
            denom_z_exp,
        }
    }

    fn len(&self) -> usize {
        self.e[0].len()
    }

    /// `self·q`. With `keep_spectra` the result remembers its entry DFTs.
    fn mul(self, q: Split, keep_spectra: bool) -> Split {
        if prefer_fft(self.len(), q.len()) {
            self.mul_fft(q, keep_spectra)
        } else {
            self.mul_naive(&q)
        }
    }

    fn mul_naive(&self, q: &Split) -> Split {
        let out_len = self.len() + q.len() - 1;
        let e = std::array::from_fn(|rc| {
            let (r, c) = (rc / 2, rc % 2);
            let mut out = vec![ZERO; out_len];
            for (i, (x0, x1)) in self.e[2 * r].iter().zip(&self.e[2 * r + 1]).enumerate() {
                for ((dst, y0), y1) in out[i..].iter_mut().zip(&q.e[c]).zip(&q.e[2 + c]) {
                    *dst += x0 * y0 + x1 * y1;
                }
            }
            out
        });
        Split {
            e,
            spectra: None,
            denom_z_exp: self.denom_z_exp + q.denom_z_exp,
        }
    }

    fn mul_fft(self, q: Split, keep_spectra: bool) -> Split {
        let classes: Vec<Entry> = self
            .e
            .iter()
            .chain(&q.e)
            .map(|c| Entry::classify(c))
            .collect();
        if classes.iter().all(|c| matches!(c, Entry::Dense)) {
            self.mul_fft_dense(q, keep_spectra)
        } else {
            self.mul_fft_sparse(&q, &classes)
        }
    }

    /// Entry DFTs of length `n`, consuming the coefficients.
    fn into_spectra(self, n: usize) -> Vec<Vec<Cx>> {
        let Split { e, spectra, .. } = self;
        let halves: [Option<Vec<Cx>>; 4] = match spectra {
            Some(h) => h.map(Some),
            None => Default::default(),
        };
        let pairs: Vec<(Vec<Cx>, Option<Vec<Cx>>)> = e.into_iter().zip(halves).collect();
        par::map_vec(pairs, |(c, h)| entry_spectrum(c, h, n))
    }

    /// All eight entries dense: combine each output row of the spectra into
    /// the left operand's buffers, transform back and truncate.
    fn mul_fft_dense(self, q: Split, keep_spectra: bool) -> Split {
        let out_len = self.len() + q.len() - 1;
        let n = out_len.next_power_of_two();
        let denom_z_exp = self.denom_z_exp + q.denom_z_exp;

        let (mut bufs, q_spec) = par::join(|| self.into_spectra(n), || q.into_spectra(n));
        let scale = 1.0 / n as f64;
        let mut rows: Vec<&mut [Vec<Cx>]> = bufs.chunks_mut(2).collect();
        par::for_each_mut(&mut rows, |row| {
            let [x0, x1] = row else { unreachable!() };
            let ys = q_spec[0]
                .iter()
                .zip(&q_spec[1])
                .zip(&q_spec[2])
                .zip(&q_spec[3]);
            for ((a, b), (((y00, y01), y10), y11)) in x0.iter_mut().zip(x1.iter_mut()).zip(ys) {
                let (p0, p1) = (*a, *b);
                *a = (p0 * y00 + p1 * y10) * scale;
                *b = (p0 * y01 + p1 * y11) * scale;
            }
        });
        q_spec.into_iter().for_each(give_buffer);
        let pairs = par::map_vec(bufs, |b| finish_entry(b, out_len, keep_spectra));
        let (e, kept): (Vec<Vec<Cx>>, Vec<Option<Vec<Cx>>>) = pairs.into_iter().unzip();
        let spectra = kept
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .map(|v| v.try_into().expect("four entries"));
        Split {
            e: e.try_into().expect("four entries"),
            spectra,
            denom_z_exp,
        }
    }

    /// Zero and single-term entries contribute exactly in the coefficient
    /// domain; only dense-by-dense terms go through the FFT.
    fn mul_fft_sparse(&self, q: &Split, classes: &[Entry]) -> Split {
        let out_len = self.len() + q.len() - 1;
        let n = out_len.next_power_of_two();
        let (fwd, inv) = plans(n);
        let inputs: Vec<&[Cx]> = self.e.iter().chain(&q.e).map(|c| c.as_slice()).collect();

        let spectra: Vec<Option<Vec<Cx>>> = par::map_slice(&[0, 1, 2, 3, 4, 5, 6, 7], |&i| {
            matches!(classes[i], Entry::Dense).then(|| {
                let mut buf = take_buffer(n);
                buf[..inputs[i].len()].copy_from_slice(inputs[i]);
                transform(&*fwd, &mut buf);
                buf
            })
        });
        let e: Vec<Vec<Cx>> = par::map_slice(&[0, 1, 2, 3], |&rc| {
            let (r, c) = (rc / 2, rc % 2);
            let mut coeff_acc = vec![ZERO; out_len];
            let mut freq_acc: Option<Vec<Cx>> = None;
            for k in 0..2 {
                let (a, b) = (2 * r + k, 4 + 2 * k + c);
                match (classes[a], classes[b]) {
                    (Entry::Zero, _) | (_, Entry::Zero) => {}
                    (Entry::Monomial(i, x), Entry::Monomial(j, y)) => coeff_acc[i + j] += x * y,
                    (Entry::Monomial(i, x), Entry::Dense) => {
                        add_shifted(&mut coeff_acc, inputs[b], i, x)
                    }
                    (Entry::Dense, Entry::Monomial(j, y)) => {
                        add_shifted(&mut coeff_acc, inputs[a], j, y)
                    }
                    (Entry::Dense, Entry::Dense) => {
                        let (sa, sb) = (spectra[a].as_ref().unwrap(), spectra[b].as_ref().unwrap());
                        let acc = freq_acc.get_or_insert_with(|| take_buffer(n));
                        for ((dst, x), y) in acc.iter_mut().zip(sa).zip(sb) {
                            *dst += x * y;
                        }
                    }
                }
            }
            if let Some(mut f) = freq_acc {
                transform(&*inv, &mut f);
                let scale = 1.0 / n as f64;
                for (dst, v) in coeff_acc.iter_mut().zip(&f) {
                    *dst += v * scale;
                }
                give_buffer(f);
            }
            coeff_acc
        });
        spectra.into_iter().flatten().for_each(give_buffer);
        Split {
            e: e.try_into().expect("four entries"),
            spectra: None,
            denom_z_exp: self.denom_z_exp + q.denom_z_exp,
        }
    }
}

/// `y_k = conj(x_{D-k})` with `D = x.len() - 1`.
fn reflect(x: &[Cx]) -> Vec<Cx> {
    x.iter().rev().map(|c| c.conj()).collect()
}

/// Matrix polynomial of the form `[[A, B], [-s·B̃, Ã]]` with `X̃` the
/// reflection `x̃_k = conj(x_{D-k})`, stored by its first row.
///
/// Every step polynomial has this form with `s = σ` (it is the coefficient
/// version of `T₂₂(ζ) = conj T₁₁(ζ*)`, `T₂₁(ζ) = -σ conj T₁₂(ζ*)`), and
/// products preserve it, so the tree only has to carry and multiply rows.
struct Row {
    e: [Vec<Cx>; 2],
    /// As in [`Split`], scaled DFTs of `A` and `B`.
    spectra: Option<[Vec<Cx>; 2]>,
    sign: f64,
    denom_z_exp: u64,
}

/// Whether `coeffs` has the row form with `s = +1` and with `s = -1`,
/// checked exactly. Both hold when the off-diagonal entries vanish.
fn row_form(coeffs: &[Mat2]) -> (bool, bool) {
    let d = coeffs.len() - 1;
    let fits = |s: f64| {
        (0..=d).all(|k| {
            let (x, y) = (coeffs[k], coeffs[d - k]);
            x.a22 == y.a11.conj() && x.a21 == -s * y.a12.conj()
        })
    };
    (fits(1.0), fits(-1.0))
}

impl Row {
    fn from_coeffs(coeffs: &[Mat2], sign: f64, denom_z_exp: u64) -> Self {
        Row {
            e: [
                coeffs.iter().map(|m| m.a11).collect(),
                coeffs.iter().map(|m| m.a12).collect(),
            ],
            spectra: None,
            sign,
            denom_z_exp,
        }
    }

    fn from_split(s: Split, sign: f64) -> Self {
        let [a, b, _, _] = s.e;
        Row {
            e: [a, b],
            spectra: None,
            sign,
            denom_z_exp: s.denom_z_exp,
        }
    }

    fn len(&self) -> usize {
        self.e[0].len()
    }

    fn to_split(&self) -> Split {
        let [a, b] = &self.e;
        let c = reflect(b).into_iter().map(|v| -self.sign * v).collect();
        Split {
            e: [a.clone(), b.clone(), c, reflect(a)],
            spectra: None,
            denom_z_exp: self.denom_z_exp,
        }
    }

    /// `self·q`.
    fn mul(self, q: Row, keep_spectra: bool) -> Row {
        let sign = self.sign;
        let out_len = self.len() + q.len() - 1;
        let dense = self
            .e
            .iter()
            .chain(&q.e)
            .all(|c| matches!(Entry::classify(c), Entry::Dense));
        if !prefer_fft(self.len(), q.len()) {
            self.mul_naive(&q, out_len)
        } else if dense {
            self.mul_fft_dense(q, out_len, keep_spectra)
        } else {
            let (p, q) = (self.to_split(), q.to_split());
            let classes: Vec<Entry> = p.e.iter().chain(&q.e).map(|c| Entry::classify(c)).collect();
            Row::from_split(p.mul_fft_sparse(&q, &classes), sign)
        }
    }

    fn mul_naive(&self, q: &Row, out_len: usize) -> Row {
        let [qa, qb] = &q.e;
        let qc: Vec<Cx> = reflect(qb).into_iter().map(|v| -self.sign * v).collect();
        let qd = reflect(qa);
        let [pa, pb] = &self.e;
        let mut e = [vec![ZERO; out_len], vec![ZERO; out_len]];
        for (i, (x, y)) in pa.iter().zip(pb).enumerate() {
            let cols = qa.iter().zip(qb).zip(&qc).zip(&qd);
            let (ea, eb) = e.split_at_mut(1);
            for ((da, db), (((u, v), w), z)) in ea[0][i..].iter_mut().zip(&mut eb[0][i..]).zip(cols)
            {
                *da += x * u + y * w;
                *db += x * v + y * z;
            }
        }
        Row {
            e,
            spectra: None,
            sign: self.sign,
            denom_z_exp: self.denom_z_exp + q.denom_z_exp,
        }
    }

    /// The second column of `Q` comes from the spectra of its first row:
    /// the DFT of `x̃` is `ω^{mD}·conj(X_m)` with `ω = exp(-2πi/n)`.
    fn mul_fft_dense(self, q: Row, out_len: usize, keep_spectra: bool) -> Row {
        let n = out_len.next_power_of_two();
        let (sign, denom_z_exp) = (self.sign, self.denom_z_exp + q.denom_z_exp);
        let shift = (q.len() - 1) % n;
        let split = |r: Row| -> Vec<(Vec<Cx>, Option<Vec<Cx>>)> {
            let halves: [Option<Vec<Cx>>; 2] = match r.spectra {
                Some(h) => h.map(Some),
                None => Default::default(),
            };
            r.e.into_iter().zip(halves).collect()
        };
        let (mut ps, qs) = par::join(
            || par::map_vec(split(self), |(c, h)| entry_spectrum(c, h, n)),
            || par::map_vec(split(q), |(c, h)| entry_spectrum(c, h, n)),
        );
        let tw = twiddles(n);
        let scale = 1.0 / n as f64;
        let [pa, pb] = &mut ps[..] else {
            unreachable!()
        };
        let mut idx = 0;
        for (((a, b), qa), qb) in pa.iter_mut().zip(pb.iter_mut()).zip(&qs[0]).zip(&qs[1]) {
            let t = tw[idx];
            idx += shift;
            if idx >= n {
                idx -= n;
            }
            let qc = -sign * t * qb.conj();
            let qd = t * qa.conj();
            let (x, y) = (*a, *b);
            *a = (x * qa + y * qc) * scale;
            *b = (x * qb + y * qd) * scale;
        }
        qs.into_iter().for_each(give_buffer);
        let done = par::map_vec(ps, |s| finish_entry(s, out_len, keep_spectra));
        let (e, kept): (Vec<Vec<Cx>>, Vec<Option<Vec<Cx>>>) = done.into_iter().unzip();
        Row {
            e: e.try_into().expect("two entries"),
            spectra: kept
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .map(|v| v.try_into().expect("two entries")),
            sign,
            denom_z_exp,
        }
    }
}

/// Product `T_M ⋯ T_0` of time-ordered step polynomials.
///
/// The steps are halved recursively (the earlier half gets `⌊n/2⌋`) and the
/// halves multiplied as `later·earlier`. The split does not depend on the
/// number of worker threads. Depth-first order keeps small subtrees in cache.
/// Steps in row form with a common sign (all step polynomials are) are
/// multiplied by rows; anything else takes the general path.
pub fn tree_product(steps: &[StepPoly]) -> Result<MatPoly> {
    if steps.is_empty() {
        return Err(Error::EmptySteps);
    }
    // Outer `None`: some step is not in row form for a common sign.
    let sign = steps
        .iter()
        .try_fold(None, |common, s| match (row_form(&s.coeffs), common) {
            ((true, true), c) => Some(c),
            ((true, false), None | Some(1.0)) => Some(Some(1.0)),
            ((false, true), None | Some(-1.0)) => Some(Some(-1.0)),
            _ => None,
        });
    Ok(match sign {
        Some(sign) => row_subtree(steps, sign.unwrap_or(1.0), false).into(),
        None => subtree(steps, false).into(),
    })
}

/// Subtrees below this many steps are not split across workers.
const PARALLEL_SUBTREE: usize = 64;

fn subtree(steps: &[StepPoly], keep_spectra: bool) -> Split {
    if let [s] = steps {
        return Split::from_coeffs(&s.coeffs, s.denom_z_exp);
    }
    let (earlier, later) = steps.split_at(steps.len() / 2);
    let (earlier, later) = if steps.len() >= PARALLEL_SUBTREE {
        par::join(|| subtree(earlier, true), || subtree(later, true))
    } else {
        (subtree(earlier, true), subtree(later, true))
    };
    later.mul(earlier, keep_spectra)
}

fn row_subtree(steps: &[StepPoly], sign: f64, keep_spectra: bool) -> Row {
    if let [s] = steps {
        return Row::from_coeffs(&s.coeffs, sign, s.denom_z_exp);
    }
    let (earlier, later) = steps.split_at(steps.len() / 2);
    let (earlier, later) = if steps.len() >= PARALLEL_SUBTREE {
        par::join(
            || row_subtree(earlier, sign, true),
            || row_subtree(later, sign, true),
        )
    } else {
        (
            row_subtree(earlier, sign, true),
            row_subtree(later, sign, true),
        )
    };
    later.mul(earlier, keep_spectra)
}

impl From<Row> for MatPoly {
    fn from(r: Row) -> Self {
        r.to_split().into()
    }
}

/// `Z^n = exp(-iτζn/3)`, with the oscillatory part reduced accurately.
pub fn z_power(zeta: Cx, tau: f64, n: f64) -> Cx {
    let magnitude = (tau * zeta.im * n / 3.0).exp();
    cis_multiple(-tau * zeta.re / 3.0, n) * magnitude
}

/// Horner evaluation of `P(W)·Z^{-d}` at one spectral point.
///
/// When `|W| > 1` (Im ζ > 0) the polynomial is evaluated in `1/W` and the
/// factor `W^D·Z^{-d}` is formed from its exponent, so intermediate powers
/// never overflow. Zero and single-term entries are evaluated exactly.
pub fn evaluate_horner(p: &MatPoly, zeta: Cx, tau: f64) -> Mat2 {
    let denom = p.denom_z_exp as f64;
    let e: Vec<Cx> = (0..4)
        .map(|i| {
            let c = p.entry(i);
            match Entry::classify(&c) {
                Entry::Dense => horner_scalar(&c, zeta, tau, denom),
                class => eval_entry(class, zeta, tau, denom),
            }
        })
        .collect();
    Mat2::new(e[0], e[1], e[2], e[3])
}

/// Value of a zero or single-term entry.
fn eval_entry(e: Entry, zeta: Cx, tau: f64, denom: f64) -> Cx {
    match e {
        Entry::Zero => ZERO,
        Entry::Monomial(k, c) => c * z_power(zeta, tau, 2.0 * k as f64 - denom),
        Entry::Dense => unreachable!("dense entries need their coefficients"),
    }
}

fn horner_scalar(coeffs: &[Cx], zeta: Cx, tau: f64, denom: f64) -> Cx {
    let w = z_power(zeta, tau, 2.0);
    if w.norm() <= 1.0 {
        let acc = coeffs.iter().rev().fold(ZERO, |acc, c| acc * w + c);
        acc * z_power(zeta, tau, -denom)
    } else {
        let w_inv = w.inv();
        let acc = coeffs.iter().fold(ZERO, |acc, c| acc * w_inv + c);
        let d = (coeffs.len() - 1) as f64;
        acc * z_power(zeta, tau, 2.0 * d - denom)
    }
}

/// Real spectral points at which spectra are evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalGrid {
    xi: Vec<f64>,
    uniform: Option<(f64, f64)>,
}

impl EvalGrid {
    /// `n` points `ξ_j = ξ_min + j·Δξ` spanning `[xi_min, xi_max]`.
    pub fn uniform(xi_min: f64, xi_max: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(xi_min.is_finite() && xi_max.is_finite()) || (n > 1 && xi_min >= xi_max) {
            return Err(Error::InvalidGrid(format!(
                "need xi_min < xi_max, got [{xi_min}, {xi_max}]"
            )));
        }
        let step = if n > 1 {
            (xi_max - xi_min) / (n - 1) as f64
        } else {
            0.0
        };
        let xi = (0..n).map(|j| xi_min + j as f64 * step).collect();
        Ok(EvalGrid {
            xi,
            uniform: Some((xi_min, step)),
        })
    }

    /// Arbitrary points; evaluated point by point.
    pub fn from_points(xi: Vec<f64>) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("non-finite spectral point".into()));
        }
        Ok(EvalGrid { xi, uniform: None })
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform.is_some()
    }

    /// `(ξ₀, Δξ)` of a uniform grid.
    pub fn uniform_params(&self) -> Option<(f64, f64)> {
        self.uniform
    }
}

/// Evaluates `P(W)·Z^{-d}` at every grid point.
///
/// Dense entries on uniform grids with more than one point use a chirp-Z
/// transform: the nodes `W_j = exp(i(α + jβ))` lie equispaced on the unit
/// circle, so all values come from one length-`O(D + N)` convolution. Zero
/// and single-term entries are evaluated exactly.
pub fn evaluate_grid(p: &MatPoly, grid: &EvalGrid, tau: f64) -> Vec<Mat2> {
    let n = grid.len();
    let denom = p.denom_z_exp as f64;
    let entries: Vec<(usize, Entry)> = (0..4).map(|i| (i, Entry::classify(&p.entry(i)))).collect();
    let chirp = match grid.uniform {
        Some((xi0, dxi)) if n > 1 && entries.iter().any(|e| matches!(e.1, Entry::Dense)) => {
            Some(ChirpPlan::new(p.coeffs.len(), xi0, dxi, n, tau))
        }
        _ => None,
    };
    let cols: Vec<Vec<Cx>> = par::map_slice(&entries, |&(i, e)| match (e, &chirp) {
        (Entry::Dense, Some(plan)) => plan
            .apply(&p.entry(i))
            .into_iter()
            .zip(grid.xi())
            .map(|(v, &xi)| v * z_power(Cx::new(xi, 0.0), tau, -denom))
            .collect(),
        (Entry::Dense, None) => {
            let c = p.entry(i);
            grid.xi()
                .iter()
                .map(|&xi| horner_scalar(&c, Cx::new(xi, 0.0), tau, denom))
                .collect()
        }
        _ => grid
            .xi()
            .iter()
            .map(|&xi| eval_entry(e, Cx::new(xi, 0.0), tau, denom))
            .collect(),
    });
    (0..n)
        .map(|j| Mat2::new(cols[0][j], cols[1][j], cols[2][j], cols[3][j]))
        .collect()
}

/// Smallest convolution length of a blocked chirp-Z evaluation. Many short
/// blocks lose accuracy in the Horner recombination when the coefficients
/// are much larger than the values.
const MIN_CHIRP_BLOCK: usize = 1 << 16;

/// Precomputed chirp-Z data for `W_j = Z_j²`, `Z_j = exp(-iτ(ξ₀ + jΔξ)/3)`,
/// `j < n`, and polynomials of up to `len` coefficients.
///
/// Long polynomials are cut into blocks of `block` coefficients, each
/// transformed with one short convolution and combined by Horner's rule in
/// `W_j^block`, so the cost is linear in the degree.
struct ChirpPlan {
    n: usize,
    block: usize,
    fft_len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kernel: Vec<Cx>,
    premod: Vec<Cx>,
    post: Vec<Cx>,
    /// `W_j^block`, the shift between consecutive blocks.
    step: Vec<Cx>,
}

impl ChirpPlan {
    fn new(len: usize, xi0: f64, dxi: f64, n: usize, tau: f64) -> Self {
        let alpha = -2.0 * tau * xi0 / 3.0;
        let half_beta = -tau * dxi / 3.0;
        let blocked_len = (4 * n).next_power_of_two().max(MIN_CHIRP_BLOCK);
        let (fft_len, block) = if len + n - 1 <= blocked_len {
            ((len + n - 1).next_power_of_two(), len)
        } else {
            (blocked_len, blocked_len - n + 1)
        };
        let (fwd, inv) = plans(fft_len);
        let chirp = |k: usize| -> f64 { reduced_angle(half_beta, (k as f64) * (k as f64)) };

        // Kernel h(m) = exp(-iβm²/2) on offsets -(block-1) ..= n-1, wrapped.
        let mut kernel = vec![ZERO; fft_len];
        for m in 0..n.max(block) {
            let h = Cx::cis(-chirp(m));
            if m < n {
                kernel[m] = h;
            }
            if m >= 1 && m < block {
                kernel[fft_len - m] = h;
            }
        }
        fwd.process(&mut kernel);
        let premod = (0..block)
            .map(|k| Cx::cis(reduced_angle(alpha, k as f64) + chirp(k)))
            .collect();
        let post = (0..n).map(|j| Cx::cis(chirp(j))).collect();
        let step = (0..n)
            .map(|j| z_power(Cx::new(xi0 + j as f64 * dxi, 0.0), tau, 2.0 * block as f64))
            .collect();
        ChirpPlan {
            n,
            block,
            fft_len,
            fwd,
            inv,
            kernel,
            premod,
            post,
            step,
        }
    }

    /// `Σ_k c_k W_j^k` for every `j`.
    fn apply(&self, coeffs: &[Cx]) -> Vec<Cx> {
        let mut acc = vec![ZERO; self.n];
        let mut buf = take_buffer(self.fft_len);
        let scale = 1.0 / self.fft_len as f64;
        for chunk in coeffs.chunks(self.block).rev() {
            buf.fill(ZERO);
            for ((dst, c), m) in buf.iter_mut().zip(chunk).zip(&self.premod) {
                *dst = c * m;
            }
            transform(&*self.fwd, &mut buf);
            for (b, k) in buf.iter_mut().zip(&self.kernel) {
                *b *= k;
            }
            transform(&*self.inv, &mut buf);
            for (((a, y), s), w) in acc.iter_mut().zip(&buf).zip(&self.post).zip(&self.step) {
                *a = *a * w + y * s * scale;
            }
        }
        give_buffer(buf);
        acc
    }
}
