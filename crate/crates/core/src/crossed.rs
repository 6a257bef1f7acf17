//! The finite crossed product `G ⋉ C(G/N, M_d)` twisted by a unitary cocycle `μ̄`, and the
//! Fourier transform `T_μ̄` onto `C(Ĝ/N⊥, M_{|G/N|·d})`.
//!
//! Elements are functions `f : G × G/N → M_d` stored as `values[g · |G/N| + z]`. The dual
//! side `\widehat{G/N}` is identified with `N⊥ ⊆ Ĝ ≅ G` and indexed by position in
//! `N⊥.elements()`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cech::Nerve;
use crate::error::{Error, Result};
use crate::io::{matrix_from_json, matrix_to_json, MatrixJson};
use crate::lca::{annihilator, Pair};
use crate::linalg::{self, root, CMat, Tolerances};
use crate::triples::dual::dual_decker;
use crate::triples::{inv, Check, Dual, TripleLocalData};

/// A weight `num/den` per point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weight {
    pub num: u64,
    pub den: u64,
}

impl Weight {
    fn inv(n: usize) -> Weight {
        Weight { num: 1, den: n as u64 }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `count · w` as a reduced fraction.
    fn total(&self, count: usize) -> (u64, u64) {
        let (a, b) = (self.num * count as u64, self.den);
        let g = gcd(a, b);
        (a / g, b / g)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a.max(1) } else { gcd(b, a % b) }
}

/// Haar weights on `G`, `G/N`, `N` and their duals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarWeights {
    pub g: Weight,
    pub quotient: Weight,
    pub n: Weight,
    pub g_hat: Weight,
    pub n_perp: Weight,
    pub dual_quotient: Weight,
}

impl HaarWeights {
    /// `G/N` has mass one, `N` counting measure, and the duals are fixed by Plancherel.
    pub fn new(pair: &Pair) -> HaarWeights {
        let q = pair.q();
        let n = pair.n.order();
        HaarWeights {
            g: Weight::inv(q),
            quotient: Weight::inv(q),
            n: Weight::inv(1),
            g_hat: Weight::inv(n),
            n_perp: Weight::inv(1),
            dual_quotient: Weight::inv(n),
        }
    }

    /// Weil's formula on both sides, compared as exact fractions.
    pub fn weil_holds(&self, pair: &Pair) -> bool {
        let q = pair.q();
        let n = pair.n.order();
        let g = pair.g.order();
        let mul = |x: (u64, u64), y: (u64, u64)| {
            let (a, b) = (x.0 * y.0, x.1 * y.1);
            let c = gcd(a, b);
            (a / c, b / c)
        };
        self.g.total(g) == mul(self.n.total(n), self.quotient.total(q))
            && self.g_hat.total(g) == mul(self.n_perp.total(q), self.dual_quotient.total(n))
    }
}

/// `G ⋉_μ̄ C(G/N, M_d)` together with the dual section `σ̂` used to evaluate `T`.
#[derive(Clone, Debug)]
pub struct CrossedProduct {
    pub pair: Pair,
    pub dual: Pair,
    pub d: usize,
    pub m: u64,
    /// `μ̄[g · |G/N| + z]`.
    pub mu: Vec<CMat>,
    pub weights: HaarWeights,
    perp: Vec<usize>,
    ex: u64,
}

/// `f : G × G/N → M_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionElement {
    pub d: usize,
    pub values: Vec<CMat>,
}

/// `ẑ ↦ Tf(ẑ)` over `Ĝ/N⊥`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSection {
    pub values: Vec<CMat>,
}

impl DualSection {
    pub fn max_diff(&self, other: &DualSection) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| linalg::op_norm(&(a - b)))
            .fold(0.0, f64::max)
    }

    /// `sup_ẑ ‖Tf(ẑ)‖`.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(linalg::op_norm).fold(0.0, f64::max)
    }
}

impl ConvolutionElement {
    pub fn zero(cp: &CrossedProduct) -> ConvolutionElement {
        ConvolutionElement {
            d: cp.d,
            values: vec![CMat::zeros(cp.d, cp.d); cp.len()],
        }
    }

    /// Point mass at `g = 0` with value `I / w_G`.
    pub fn unit(cp: &CrossedProduct) -> ConvolutionElement {
        let mut f = ConvolutionElement::zero(cp);
        let s = Complex64::new(1.0 / cp.weights.g.value(), 0.0);
        for z in 0..cp.pair.q() {
            f.values[z] = linalg::scalar(cp.d, s);
        }
        f
    }

    pub fn random<R: Rng + ?Sized>(cp: &CrossedProduct, rng: &mut R) -> ConvolutionElement {
        ConvolutionElement {
            d: cp.d,
            values: (0..cp.len()).map(|_| linalg::random_matrix(cp.d, cp.d, rng)).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &ConvolutionElement, b: Complex64) -> ConvolutionElement {
        ConvolutionElement {
            d: self.d,
            values: self.values.iter().zip(&other.values).map(|(x, y)| x * a + y * b).collect(),
        }
    }

    pub fn max_diff(&self, other: &ConvolutionElement) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| linalg::max_diff(a, b))
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> ElementJson {
        ElementJson {
            d: self.d,
            values: self.values.iter().map(matrix_to_json).collect(),
        }
    }

    pub fn from_json(cp: &CrossedProduct, j: &ElementJson) -> Result<ConvolutionElement> {
        if j.d != cp.d || j.values.len() != cp.len() {
            return Err(Error::Shape(format!(
                "element has {} values of size {}, expected {} of size {}",
                j.values.len(),
                j.d,
                cp.len(),
                cp.d
            )));
        }
        let values = j.values.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| v.nrows() != cp.d || v.ncols() != cp.d) {
            return Err(Error::Shape("element value has the wrong size".into()));
        }
        Ok(ConvolutionElement { d: cp.d, values })
    }
}

/// Serialized element: `values[g · |G/N| + z]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementJson {
    pub d: usize,
    pub values: Vec<MatrixJson>,
}

impl CrossedProduct {
    /// `m` must be a multiple of the exponent of `G`; it fixes the roots of unity used for `μ̂`.
    pub fn new(pair: Pair, dual: Pair, d: usize, m: u64, mu: Vec<CMat>) -> Result<CrossedProduct> {
        let ex = pair.g.exponent();
        if m == 0 || !m.is_multiple_of(ex) {
            return Err(Error::Invalid(format!("modulus {m} is not a multiple of the exponent {ex}")));
        }
        if dual.n != annihilator(&pair.n) {
            return Err(Error::Invalid("dual pair is not (Ĝ, N⊥)".into()));
        }
        let len = pair.g.order() * pair.q();
        if d == 0 || mu.len() != len || mu.iter().any(|u| u.nrows() != d || u.ncols() != d) {
            return Err(Error::Shape(format!("μ̄ must have {len} entries of size {d}×{d}")));
        }
        let perp = dual.n.elements().to_vec();
        Ok(CrossedProduct {
            weights: HaarWeights::new(&pair),
            pair,
            dual,
            d,
            m,
            mu,
            perp,
            ex,
        })
    }

    pub fn trivial(pair: Pair, dual: Pair, d: usize) -> Result<CrossedProduct> {
        let len = pair.g.order() * pair.q();
        let m = pair.g.exponent();
        CrossedProduct::new(pair, dual, d, m, vec![linalg::identity(d); len])
    }

    /// The decker of vertex `a`, with the dual section of `dual`.
    pub fn at_vertex(t: &TripleLocalData, dual: &Pair, a: usize) -> Result<CrossedProduct> {
        CrossedProduct::new(t.pair.clone(), dual.clone(), t.dim, t.m, t.mu[a].clone())
    }

    fn len(&self) -> usize {
        self.pair.g.order() * self.pair.q()
    }

    fn mu(&self, g: usize, z: usize) -> &CMat {
        &self.mu[g * self.pair.q() + z]
    }

    fn e(&self, chi: usize, g: usize) -> Complex64 {
        root(self.pair.g.pairing_zm(chi, g, self.ex), self.ex)
    }

    /// `|G/N|`, the number of points of `\widehat{G/N} ≅ N⊥`.
    pub fn q(&self) -> usize {
        self.pair.q()
    }

    /// `max ‖μ̄(g+h, z) − μ̄(g, z+hN) μ̄(h, z)‖`.
    pub fn cocycle_residual(&self) -> f64 {
        let g = &self.pair.g;
        let mut r: f64 = 0.0;
        for a in 0..g.order() {
            for b in 0..g.order() {
                for z in 0..self.q() {
                    let rhs = self.mu(a, self.pair.shift(z, b)) * self.mu(b, z);
                    r = r.max(linalg::max_diff(self.mu(g.add(a, b), z), &rhs));
                }
            }
        }
        r
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.mu.iter().map(linalg::unitarity_defect).fold(0.0, f64::max)
    }

    /// `(f₁ × f₂)(g, z) = Σ_h w_G f₁(h, z) μ̄(h, z)⁻¹ f₂(g − h, z + hN) μ̄(h, z)`.
    pub fn convolve(&self, f1: &ConvolutionElement, f2: &ConvolutionElement) -> ConvolutionElement {
        let grp = &self.pair.g;
        let q = self.q();
        let w = self.weights.g.value();
        let mut out = ConvolutionElement::zero(self);
        for g in 0..grp.order() {
            for z in 0..q {
                let mut acc = CMat::zeros(self.d, self.d);
                for h in 0..grp.order() {
                    let mu = self.mu(h, z);
                    let moved = inv(mu) * &f2.values[grp.sub(g, h) * q + self.pair.shift(z, h)] * mu;
                    acc += &f1.values[h * q + z] * moved;
                }
                out.values[g * q + z] = acc * Complex64::new(w, 0.0);
            }
        }
        out
    }

    /// `f^×(g, z) = μ̄(g, z)⁻¹ f(−g, z + gN)* μ̄(g, z)`.
    pub fn involute(&self, f: &ConvolutionElement) -> ConvolutionElement {
        let grp = &self.pair.g;
        let q = self.q();
        let mut out = ConvolutionElement::zero(self);
        for g in 0..grp.order() {
            for z in 0..q {
                let mu = self.mu(g, z);
                out.values[g * q + z] = inv(mu) * f.values[grp.neg(g) * q + self.pair.shift(z, g)].adjoint() * mu;
            }
        }
        out
    }

    /// The dual action `(α̂_χ f)(g, z) = ⟨χ, g⟩ f(g, z)`.
    pub fn dual_action(&self, chi: usize, f: &ConvolutionElement) -> ConvolutionElement {
        let q = self.q();
        let mut out = f.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            *v *= self.e(chi, i / q);
        }
        out
    }

    /// Matrix of `F ↦ f × F` on `L²(G × G/N, ℂ^d)`, basis index `(g · |G/N| + z) · d + i`:
    /// `(f × F)(g, z) = Σ_h w_G μ̄(−g, z)⁻¹ f(h, z − gN) μ̄(−g, z) F(g − h, z)`.
    pub fn representation(&self, f: &ConvolutionElement) -> CMat {
        let grp = &self.pair.g;
        let q = self.q();
        let d = self.d;
        let w = Complex64::new(self.weights.g.value(), 0.0);
        let mut out = CMat::zeros(self.len() * d, self.len() * d);
        for g in 0..grp.order() {
            for z in 0..q {
                let mu = self.mu(grp.neg(g), z);
                let mu_inv = inv(mu);
                let zg = self.pair.qsub(z, self.pair.quotient(g));
                for h in 0..grp.order() {
                    let block = &mu_inv * &f.values[h * q + zg] * mu * w;
                    let row = (g * q + z) * d;
                    let col = (grp.sub(g, h) * q + z) * d;
                    out.view_mut((row, col), (d, d)).copy_from(&block);
                }
            }
        }
        out
    }

    /// `‖f × _‖`.
    pub fn operator_norm(&self, f: &ConvolutionElement) -> f64 {
        linalg::op_norm(&self.representation(f))
    }

    /// `f̂(χ, β) = Σ_{g,z} w_G w_{G/N} ⟨χ, g⟩ ⟨β, σ(z)⟩ f(g, z)` for `χ ∈ Ĝ`, `β ∈ N⊥`.
    pub fn fourier(&self, values: &[CMat], chi: usize, beta: usize) -> CMat {
        let grp = &self.pair.g;
        let q = self.q();
        let w = self.weights.g.value() * self.weights.quotient.value();
        let mut acc = CMat::zeros(values[0].nrows(), values[0].ncols());
        for g in 0..grp.order() {
            let pg = self.e(chi, g);
            for z in 0..q {
                acc += &values[g * q + z] * (pg * self.e(beta, self.pair.sigma(z)) * w);
            }
        }
        acc
    }

    /// All of `f̂`, indexed `[χ · |N⊥| + position of β]`.
    pub fn fourier_table(&self, values: &[CMat]) -> Vec<CMat> {
        let mut out = Vec::with_capacity(self.pair.g.order() * self.perp.len());
        for chi in 0..self.pair.g.order() {
            for &beta in &self.perp {
                out.push(self.fourier(values, chi, beta));
            }
        }
        out
    }

    /// Inverse of [`fourier_table`](Self::fourier_table) under the dual weights.
    pub fn inverse_fourier(&self, table: &[CMat]) -> Vec<CMat> {
        let grp = &self.pair.g;
        let q = self.q();
        let np = self.perp.len();
        let w = self.weights.g_hat.value() * self.weights.n_perp.value();
        let mut out = Vec::with_capacity(self.len());
        for g in 0..grp.order() {
            for z in 0..q {
                let mut acc = CMat::zeros(table[0].nrows(), table[0].ncols());
                for chi in 0..grp.order() {
                    for (bi, &beta) in self.perp.iter().enumerate() {
                        let p = (self.e(chi, g) * self.e(beta, self.pair.sigma(z))).conj();
                        acc += &table[chi * np + bi] * (p * w);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    /// `F[β][x] = w_{G/N} ⟨β, σ(x)⟩`, from `L²(G/N)` to `L²(\widehat{G/N})`.
    pub fn dft(&self) -> CMat {
        let q = self.q();
        let w = self.weights.quotient.value();
        CMat::from_fn(q, q, |b, x| self.e(self.perp[b], self.pair.sigma(x)) * w)
    }

    pub fn dft_inverse(&self) -> CMat {
        let q = self.q();
        CMat::from_fn(q, q, |x, b| self.e(self.perp[b], self.pair.sigma(x)).conj())
    }

    /// `Λ(χ) = F ∘ ⟨χ, −σ(_)⟩ ∘ F⁻¹`.
    pub fn big_lambda(&self, chi: usize) -> CMat {
        let grp = &self.pair.g;
        let phases: Vec<Complex64> = (0..self.q()).map(|x| self.e(chi, grp.neg(self.pair.sigma(x)))).collect();
        self.dft() * linalg::diag(&phases) * self.dft_inverse()
    }

    /// Kernel `f^μ̄(χ)(α, γ) = (f μ̄⁻¹)^(χ + γ⊥, γ − α)` as a `|G/N|·d` square matrix.
    pub fn kernel(&self, f: &ConvolutionElement, chi: usize) -> CMat {
        let fm = self.twisted(f);
        self.kernel_of(&fm, chi)
    }

    fn twisted(&self, f: &ConvolutionElement) -> Vec<CMat> {
        f.values.iter().zip(&self.mu).map(|(v, u)| v * inv(u)).collect()
    }

    fn kernel_of(&self, fm: &[CMat], chi: usize) -> CMat {
        let grp = &self.pair.g;
        let q = self.q();
        let d = self.d;
        let mut out = CMat::zeros(q * d, q * d);
        for (ai, &alpha) in self.perp.iter().enumerate() {
            for (gi, &gamma) in self.perp.iter().enumerate() {
                let block = self.fourier(fm, grp.add(chi, gamma), grp.sub(gamma, alpha));
                out.view_mut((ai * d, gi * d), (d, d)).copy_from(&block);
            }
        }
        out
    }

    /// `(Λ(χ) ⊗ 1) f^μ̄(χ) (Λ(χ)⁻¹ ⊗ 1)` for an arbitrary `χ ∈ Ĝ`.
    pub fn t_at(&self, f: &ConvolutionElement, chi: usize) -> CMat {
        self.conjugate(&self.kernel(f, chi), chi)
    }

    fn conjugate(&self, k: &CMat, chi: usize) -> CMat {
        let id = linalg::identity(self.d);
        let l = linalg::kron(&self.big_lambda(chi), &id);
        let l_inv = linalg::kron(&self.big_lambda(self.pair.g.neg(chi)), &id);
        l * k * l_inv
    }

    /// `Tf(ẑ)`, evaluated at `χ = σ̂(ẑ)`.
    pub fn t_transform(&self, f: &ConvolutionElement) -> DualSection {
        let fm = self.twisted(f);
        DualSection {
            values: (0..self.dual.q())
                .map(|zh| {
                    let chi = self.dual.sigma(zh);
                    self.conjugate(&self.kernel_of(&fm, chi), chi)
                })
                .collect(),
        }
    }

    /// `max ‖T f(χ + β) − T f(χ)‖` over `χ ∈ Ĝ`, `β ∈ N⊥`.
    pub fn periodicity_residual(&self, f: &ConvolutionElement) -> f64 {
        let grp = &self.pair.g;
        let mut r: f64 = 0.0;
        for chi in 0..grp.order() {
            let base = self.t_at(f, chi);
            for &beta in &self.perp[1..] {
                r = r.max(linalg::max_diff(&self.t_at(f, grp.add(chi, beta)), &base));
            }
        }
        r
    }

    /// `(F ⊗ 1) μ̂(χ, ẑ) (F⁻¹ ⊗ 1)` with `μ̂` as built by the duality transform.
    pub fn transported_dual_decker(&self) -> Vec<CMat> {
        let t = TripleLocalData {
            nerve: Nerve::point(),
            pair: self.pair.clone(),
            m: self.m,
            dim: self.d,
            twist: crate::cech::Twist { labels: vec![] },
            zeta: vec![],
            mu: vec![self.mu.clone()],
        };
        let id = linalg::identity(self.d);
        let f = linalg::kron(&self.dft(), &id);
        let f_inv = linalg::kron(&self.dft_inverse(), &id);
        dual_decker(&t, &self.dual)
            .swap_remove(0)
            .into_iter()
            .map(|u| &f * u * &f_inv)
            .collect()
    }

    /// Matrix of the linear map `f ↦ Tf` in the standard bases.
    pub fn t_matrix(&self) -> CMat {
        let d = self.d;
        let src = self.len() * d * d;
        let blk = self.q() * d;
        let dst = self.dual.q() * blk * blk;
        let mut out = CMat::zeros(dst, src);
        let mut col = 0;
        for p in 0..self.len() {
            for i in 0..d {
                for j in 0..d {
                    let mut f = ConvolutionElement::zero(self);
                    f.values[p][(i, j)] = linalg::ONE;
                    let tf = self.t_transform(&f);
                    let flat = tf.values.iter().flat_map(|v| v.iter().copied());
                    for (r, x) in flat.enumerate() {
                        out[(r, col)] = x;
                    }
                    col += 1;
                }
            }
        }
        out
    }

    /// `Some((rank, source dimension))` when `|G|·|G/N|·d` is at most 96.
    pub fn injectivity_rank(&self) -> Option<(usize, usize)> {
        (self.len() * self.d <= INJECTIVITY_LIMIT).then(|| {
            let t = self.t_matrix();
            (linalg::rank(&t, 1e-9), t.ncols())
        })
    }
}

pub const INJECTIVITY_LIMIT: usize = 96;

#[derive(Clone, Debug, Serialize)]
pub struct PointReport {
    pub checks: Vec<Check>,
    pub rank: Option<(usize, usize)>,
}

impl PointReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Random-element checks that `T` is an equivariant, isometric *-homomorphism.
pub fn verify_point_theorem(cp: &CrossedProduct, trials: usize, seed: u64, tol: &Tolerances) -> PointReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grp = &cp.pair.g;
    let (mut hom, mut star, mut norm, mut equi, mut per) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let hat_mu = cp.transported_dual_decker();
    let qh = cp.dual.q();
    for _ in 0..trials {
        let f1 = ConvolutionElement::random(cp, &mut rng);
        let f2 = ConvolutionElement::random(cp, &mut rng);
        let t1 = cp.t_transform(&f1);
        let t2 = cp.t_transform(&f2);
        let prod = cp.t_transform(&cp.convolve(&f1, &f2));
        for (p, (a, b)) in prod.values.iter().zip(t1.values.iter().zip(&t2.values)) {
            hom = hom.max(linalg::op_norm(&(p - a * b)));
        }
        let ts = cp.t_transform(&cp.involute(&f1));
        for (s, a) in ts.values.iter().zip(&t1.values) {
            star = star.max(linalg::op_norm(&(s - a.adjoint())));
        }
        norm = norm.max((cp.operator_norm(&f1) - t1.norm()).abs());
        for chi in 0..grp.order() {
            let moved = cp.t_transform(&cp.dual_action(chi, &f1));
            let shift = cp.dual.quotient(chi);
            for zh in 0..qh {
                let w = &hat_mu[chi * qh + zh];
                let rhs = inv(w) * &t1.values[cp.dual.qadd(zh, shift)] * w;
                equi = equi.max(linalg::op_norm(&(&moved.values[zh] - rhs)));
            }
        }
        per = per.max(cp.periodicity_residual(&f1));
    }
    let zero = cp.t_transform(&ConvolutionElement::zero(cp));
    let zero_ok = zero.values.iter().all(|v| v.iter().all(|x| *x == linalg::ZERO));
    let mut checks = vec![
        Check::residual("crossed_cocycle", cp.cocycle_residual(), tol.unitary),
        Check::residual("crossed_homomorphism", hom, tol.pipeline),
        Check::residual("crossed_star", star, tol.pipeline),
        Check::residual("crossed_norm", norm, tol.pipeline),
        Check::residual("crossed_equivariance", equi, tol.pipeline),
        Check::residual("crossed_periodicity", per, tol.unitary),
        Check::exact("crossed_zero", zero_ok, None),
    ];
    let rank = cp.injectivity_rank();
    if let Some((r, n)) = rank {
        checks.push(Check::exact(
            "crossed_injective",
            r == n,
            Some(format!("rank {r} of {n}")),
        ));
    }
    PointReport { checks, rank }
}

/// Basis of the global sections `{f_a}` at a fixed `g`, i.e. the solutions of
/// `f_b(z) = ζ̄_ab(z)⁻¹ f_a(g_ab + z) ζ̄_ab(z)` on every edge. Vectors are indexed
/// `((a · |G/N| + z) · d + i) · d + j`.
pub fn section_basis(t: &TripleLocalData) -> Vec<nalgebra::DVector<Complex64>> {
    let pair = &t.pair;
    let q = pair.q();
    let d = t.dim;
    let per = q * d * d;
    let cols = t.nerve.count(0) * per;
    let edges = t.nerve.simplices(1);
    let mut a = CMat::zeros(edges.len() * per, cols);
    for col in 0..cols {
        let (v, rest) = (col / per, col % per);
        let (z0, i, j) = (rest / (d * d), (rest / d) % d, rest % d);
        for (ei, e) in edges.iter().enumerate() {
            let (ea, eb) = (e[0], e[1]);
            let gab = t.g(ea, eb);
            for z in 0..q {
                let mut r = CMat::zeros(d, d);
                if v == eb && z == z0 {
                    r[(i, j)] += linalg::ONE;
                }
                if v == ea && pair.qadd(gab, z) == z0 {
                    let zeta = t.zeta(ea, eb, z);
                    let mut unit = CMat::zeros(d, d);
                    unit[(i, j)] = linalg::ONE;
                    r -= inv(zeta) * unit * zeta;
                }
                for (k, x) in r.iter().enumerate() {
                    // column-major storage: k = col · d + row
                    let (ri, rj) = (k % d, k / d);
                    a[(ei * per + (z * d + ri) * d + rj, col)] = *x;
                }
            }
        }
    }
    let eig = (a.adjoint() * &a).symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    (0..cols)
        .filter(|&k| eig.eigenvalues[k].abs() < 1e-10 * scale)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect()
}

/// A random global section, `f[vertex][g · |G/N| + z]`.
pub fn random_section<R: Rng + ?Sized>(
    t: &TripleLocalData,
    basis: &[nalgebra::DVector<Complex64>],
    rng: &mut R,
) -> Vec<Vec<CMat>> {
    let q = t.pair.q();
    let d = t.dim;
    let n = t.pair.g.order();
    let verts = t.nerve.count(0);
    let mut f = vec![vec![CMat::zeros(d, d); n * q]; verts];
    for g in 0..n {
        let coef = linalg::random_matrix(basis.len(), 1, rng);
        for (b, c) in basis.iter().zip(coef.iter()) {
            for (k, x) in b.iter().enumerate() {
                let (rest, j) = (k / d, k % d);
                let (rest, i) = (rest / d, rest % d);
                let (a, z) = (rest / q, rest % q);
                f[a][g * q + z][(i, j)] += x * c;
            }
        }
    }
    f
}

/// Largest violation of the section relation on any edge.
pub fn section_residual(t: &TripleLocalData, f: &[Vec<CMat>]) -> f64 {
    let pair = &t.pair;
    let q = pair.q();
    let mut r: f64 = 0.0;
    for e in t.nerve.simplices(1) {
        let (a, b) = (e[0], e[1]);
        let gab = t.g(a, b);
        for g in 0..pair.g.order() {
            for z in 0..q {
                let zeta = t.zeta(a, b, z);
                let rhs = inv(zeta) * &f[a][g * q + pair.qadd(gab, z)] * zeta;
                r = r.max(linalg::max_diff(&f[b][g * q + z], &rhs));
            }
        }
    }
    r
}

#[derive(Clone, Debug, Serialize)]
pub struct GluingReport {
    pub checks: Vec<Check>,
    pub vertices: Vec<PointReport>,
}

impl GluingReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.vertices.iter().all(PointReport::pass)
    }
}

/// `T_b f_b(ẑ) = W⁻¹ T_a f_a(ĝ_ab + ẑ) W` with `W = (F ⊗ 1) ζ̂_ab(ẑ) (F⁻¹ ⊗ 1)`, on random
/// sections of a normalized triple, plus the point theorem at every vertex.
pub fn verify_gluing(t: &TripleLocalData, d: &Dual, trials: usize, seed: u64, tol: &Tolerances) -> Result<GluingReport> {
    let dual = &d.triple.pair;
    let cps = (0..t.nerve.count(0))
        .map(|a| CrossedProduct::at_vertex(t, dual, a))
        .collect::<Result<Vec<_>>>()?;
    let vertices = cps
        .iter()
        .enumerate()
        .map(|(a, cp)| verify_point_theorem(cp, 2, seed ^ (a as u64) << 8, tol))
        .collect();
    let id = linalg::identity(t.dim);
    let (f, f_inv) = match cps.first() {
        Some(cp) => (linalg::kron(&cp.dft(), &id), linalg::kron(&cp.dft_inverse(), &id)),
        None => (id.clone(), id),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = section_basis(t);
    let mut section: f64 = 0.0;
    let mut glue: f64 = 0.0;
    let t_of = |a: usize, v: &[CMat]| cps[a].t_transform(&ConvolutionElement { d: t.dim, values: v.to_vec() });
    let transition = |ei: usize, zh: usize| &f * &d.triple.zeta[ei][zh] * &f_inv;
    for _ in 0..trials {
        let s = random_section(t, &basis, &mut rng);
        section = section.max(section_residual(t, &s));
        let tf: Vec<DualSection> = s.iter().enumerate().map(|(a, v)| t_of(a, v)).collect();
        for (ei, e) in t.nerve.simplices(1).iter().enumerate() {
            glue = glue.max(edge_residual(&tf[e[0]], &tf[e[1]], dual, d.triple.twist.labels[ei], |zh| transition(ei, zh)));
        }
    }
    // The same relation for a random local element on one chart, transported along a single edge.
    let mut local: f64 = 0.0;
    let pair = &t.pair;
    let q = pair.q();
    for (ei, e) in t.nerve.simplices(1).iter().enumerate() {
        let (a, b) = (e[0], e[1]);
        let gab = t.g(a, b);
        let fa = ConvolutionElement::random(&cps[a], &mut rng);
        let fb: Vec<CMat> = (0..fa.values.len())
            .map(|i| {
                let (g, z) = (i / q, i % q);
                let zeta = t.zeta(a, b, z);
                inv(zeta) * &fa.values[g * q + pair.qadd(gab, z)] * zeta
            })
            .collect();
        let (ta, tb) = (t_of(a, &fa.values), t_of(b, &fb));
        local = local.max(edge_residual(&ta, &tb, dual, d.triple.twist.labels[ei], |zh| transition(ei, zh)));
    }
    Ok(GluingReport {
        checks: vec![
            Check::residual("crossed_section_relation", section, tol.unitary)
                .with_detail(format!("{} basis sections per group element", basis.len())),
            Check::residual("crossed_gluing", glue, tol.pipeline),
            Check::residual("crossed_gluing_local", local, tol.pipeline),
        ],
        vertices,
    })
}

/// `max_ẑ ‖T_b f_b(ẑ) − W⁻¹ T_a f_a(ĝ_ab + ẑ) W‖`.
fn edge_residual(ta: &DualSection, tb: &DualSection, dual: &Pair, gh: usize, w: impl Fn(usize) -> CMat) -> f64 {
    (0..dual.q())
        .map(|zh| {
            let w = w(zh);
            let rhs = inv(&w) * &ta.values[dual.qadd(gh, zh)] * &w;
            linalg::op_norm(&(&tb.values[zh] - rhs))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lca::SectionPolicy;
    use crate::triples::{build_random_triple, dualize, normalized, FixtureKind};

    fn z2_point() -> CrossedProduct {
        let pair = Pair::from_coords(&[2], &[]).unwrap();
        let dual = pair.dual(SectionPolicy::LeastRepresentative).unwrap();
        CrossedProduct::trivial(pair, dual, 1).unwrap()
    }

    fn z4(d: usize, seed: u64) -> CrossedProduct {
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap().with_section(SectionPolicy::Seeded(seed)).unwrap();
        let (t, _) = build_random_triple(&Nerve::circle(), &pair, d, 4, seed, FixtureKind::Generic, None).unwrap();
        let (tn, _) = normalized(&t, &Tolerances::default(), 512).unwrap();
        let dual = pair.dual(SectionPolicy::Seeded(seed + 1)).unwrap();
        CrossedProduct::at_vertex(&tn, &dual, 1).unwrap()
    }

    #[test]
    fn weights_satisfy_weil() {
        for (f, n) in [(vec![4], vec![vec![2]]), (vec![6], vec![vec![3]]), (vec![2, 2], vec![vec![1, 1]]), (vec![2], vec![])] {
            let pair = Pair::from_coords(&f, &n).unwrap();
            assert!(HaarWeights::new(&pair).weil_holds(&pair));
        }
        let pair = Pair::from_coords(&[6], &[vec![3]]).unwrap();
        let mut w = HaarWeights::new(&pair);
        w.g = Weight { num: 1, den: 2 };
        assert!(!w.weil_holds(&pair));
    }

    #[test]
    fn fourier_inversion_round_trip() {
        let cp = z4(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = ConvolutionElement::random(&cp, &mut rng);
        let back = cp.inverse_fourier(&cp.fourier_table(&f.values));
        let r = f.values.iter().zip(&back).map(|(a, b)| linalg::max_diff(a, b)).fold(0.0, f64::max);
        assert!(r < 1e-12, "{r}");
        assert!(linalg::max_diff(&(cp.dft() * cp.dft_inverse()), &linalg::identity(cp.q())) < 1e-12);
    }

    #[test]
    fn unit_and_associativity() {
        let cp = z4(2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f: Vec<_> = (0..3).map(|_| ConvolutionElement::random(&cp, &mut rng)).collect();
        let u = ConvolutionElement::unit(&cp);
        assert!(cp.convolve(&u, &f[0]).max_diff(&f[0]) < 1e-12);
        assert!(cp.convolve(&f[0], &u).max_diff(&f[0]) < 1e-12);
        let l = cp.convolve(&cp.convolve(&f[0], &f[1]), &f[2]);
        let r = cp.convolve(&f[0], &cp.convolve(&f[1], &f[2]));
        assert!(l.max_diff(&r) < 1e-9);
        assert!((cp.operator_norm(&u) - 1.0).abs() < 1e-12);
        assert_eq!(cp.operator_norm(&ConvolutionElement::zero(&cp)), 0.0);
    }

    #[test]
    fn supported_at_zero_is_pointwise() {
        let cp = z4(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut a = ConvolutionElement::zero(&cp);
        let mut b = ConvolutionElement::zero(&cp);
        for z in 0..cp.q() {
            a.values[z] = linalg::random_matrix(2, 2, &mut rng);
            b.values[z] = linalg::random_matrix(2, 2, &mut rng);
        }
        let c = cp.convolve(&a, &b);
        let w = cp.weights.g.value();
        for z in 0..cp.q() {
            assert!(linalg::max_diff(&c.values[z], &(&a.values[z] * &b.values[z] * Complex64::new(w, 0.0))) < 1e-12);
        }
        assert!(c.values[cp.q()..].iter().all(|v| linalg::max_abs(v) < 1e-12));
    }

    #[test]
    fn involution_laws() {
        let cp = z4(2, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f1 = ConvolutionElement::random(&cp, &mut rng);
        let f2 = ConvolutionElement::random(&cp, &mut rng);
        assert!(cp.involute(&cp.involute(&f1)).max_diff(&f1) < 1e-12);
        let l = cp.involute(&cp.convolve(&f1, &f2));
        let r = cp.convolve(&cp.involute(&f2), &cp.involute(&f1));
        assert!(l.max_diff(&r) < 1e-9);
        // the involution is the operator adjoint
        let a = cp.representation(&cp.involute(&f1));
        assert!(linalg::max_diff(&a, &cp.representation(&f1).adjoint()) < 1e-12);
        let mut h = ConvolutionElement::zero(&cp);
        let x = linalg::random_matrix(2, 2, &mut rng);
        for z in 0..cp.q() {
            h.values[z] = &x + x.adjoint();
        }
        assert!(cp.involute(&h).max_diff(&h) < 1e-12);
    }

    #[test]
    fn c_star_identity() {
        let cp = z4(2, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = ConvolutionElement::random(&cp, &mut rng);
        let lhs = cp.operator_norm(&cp.convolve(&cp.involute(&f), &f));
        let n = cp.operator_norm(&f);
        assert!((lhs - n * n).abs() < 1e-9 * n * n.max(1.0));
    }

    #[test]
    fn representation_is_multiplicative() {
        let cp = z4(2, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f1 = ConvolutionElement::random(&cp, &mut rng);
        let f2 = ConvolutionElement::random(&cp, &mut rng);
        let l = cp.representation(&cp.convolve(&f1, &f2));
        let r = cp.representation(&f1) * cp.representation(&f2);
        assert!(linalg::max_diff(&l, &r) < 1e-9);
    }

    #[test]
    fn unit_maps_to_identity() {
        let pair = Pair::from_coords(&[6], &[vec![3]]).unwrap();
        let dual = pair.dual(SectionPolicy::Seeded(1)).unwrap();
        let cp = CrossedProduct::trivial(pair, dual, 2).unwrap();
        let tu = cp.t_transform(&ConvolutionElement::unit(&cp));
        assert_eq!(tu.values.len(), 2);
        for v in &tu.values {
            assert!(linalg::max_diff(v, &linalg::identity(6)) < 1e-12);
        }
    }

    #[test]
    fn z2_minimal_instance_is_bijective() {
        let cp = z2_point();
        assert_eq!(cp.dual.q(), 1);
        assert_eq!(cp.injectivity_rank(), Some((4, 4)));
        let r = verify_point_theorem(&cp, 5, 0, &Tolerances::default());
        assert!(r.pass(), "{:?}", r.checks);
    }

    #[test]
    fn t_is_linear() {
        let cp = z4(1, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = ConvolutionElement::random(&cp, &mut rng);
        let g = ConvolutionElement::random(&cp, &mut rng);
        let (a, b) = (Complex64::new(0.5, -2.0), Complex64::new(3.0, 1.0));
        let lhs = cp.t_transform(&f.combine(a, &g, b));
        let (tf, tg) = (cp.t_transform(&f), cp.t_transform(&g));
        for (l, (x, y)) in lhs.values.iter().zip(tf.values.iter().zip(&tg.values)) {
            assert!(linalg::max_diff(l, &(x * a + y * b)) < 1e-12);
        }
    }

    #[test]
    fn point_theorem_on_fixture() {
        let cp = z4(2, 19);
        let r = verify_point_theorem(&cp, 3, 1, &Tolerances::default());
        assert!(r.pass(), "{:?}", r.checks);
    }

    #[test]
    fn non_cocycle_breaks_periodicity() {
        let mut cp = z4(2, 23);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let i = cp.q() + 1;
        cp.mu[i] = linalg::random_unitary(2, &mut rng);
        assert!(cp.cocycle_residual() > 1e-3);
        assert!(!verify_point_theorem(&cp, 1, 0, &Tolerances::default()).pass());
    }

    #[test]
    fn gluing_on_circle() {
        let tol = Tolerances::default();
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
        let (t, _) = build_random_triple(&Nerve::circle(), &pair, 2, 4, 3, FixtureKind::Generic, None).unwrap();
        let (tn, _) = normalized(&t, &tol, 512).unwrap();
        let d = dualize(&tn, SectionPolicy::Seeded(5), &tol).unwrap();
        let r = verify_gluing(&tn, &d, 3, 0, &tol).unwrap();
        assert!(r.pass(), "{:?}", r.checks);
        let n = section_basis(&tn).len();
        assert!(n > 1, "{n}");
    }

    #[test]
    fn gluing_orientation_matters() {
        // Conjugating by W instead of W⁻¹ breaks the relation.
        let tol = Tolerances::default();
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
        let (t, _) = build_random_triple(&Nerve::circle(), &pair, 2, 4, 8, FixtureKind::Generic, None).unwrap();
        let (tn, _) = normalized(&t, &tol, 512).unwrap();
        let d = dualize(&tn, SectionPolicy::Seeded(1), &tol).unwrap();
        let cps: Vec<_> = (0..3).map(|a| CrossedProduct::at_vertex(&tn, &d.triple.pair, a).unwrap()).collect();
        let id = linalg::identity(2);
        let (f, f_inv) = (linalg::kron(&cps[0].dft(), &id), linalg::kron(&cps[0].dft_inverse(), &id));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = random_section(&tn, &section_basis(&tn), &mut rng);
        let tf: Vec<_> = (0..3)
            .map(|a| cps[a].t_transform(&ConvolutionElement { d: 2, values: s[a].clone() }))
            .collect();
        let gh = d.triple.twist.labels[0];
        let right = edge_residual(&tf[0], &tf[1], &d.triple.pair, gh, |zh| &f * &d.triple.zeta[0][zh] * &f_inv);
        let wrong = edge_residual(&tf[0], &tf[1], &d.triple.pair, gh, |zh| inv(&(&f * &d.triple.zeta[0][zh] * &f_inv)));
        assert!(right < 1e-8);
        assert!(wrong > 1e-3);
    }

    #[test]
    fn gluing_on_point_is_point_theorem() {
        let tol = Tolerances::default();
        let pair = Pair::from_coords(&[6], &[vec![3]]).unwrap();
        let (t, _) = build_random_triple(&Nerve::point(), &pair, 2, 6, 2, FixtureKind::Generic, None).unwrap();
        let (tn, _) = normalized(&t, &tol, 512).unwrap();
        let d = dualize(&tn, SectionPolicy::LeastRepresentative, &tol).unwrap();
        let r = verify_gluing(&tn, &d, 2, 0, &tol).unwrap();
        assert!(r.pass());
        assert_eq!(r.vertices.len(), 1);
        assert_eq!(r.vertices[0].rank, Some((72, 72)));
    }

    #[test]
    fn element_json_round_trip() {
        let cp = z4(1, 29);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = ConvolutionElement::random(&cp, &mut rng);
        let s = serde_json::to_string(&f.to_json()).unwrap();
        let back = ConvolutionElement::from_json(&cp, &serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, f);
        let bad = ElementJson { d: 1, values: vec![] };
        assert!(ConvolutionElement::from_json(&cp, &bad).is_err());
    }
}
