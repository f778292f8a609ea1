//! Rank-invariant synthetic experiments: aligned potential-outcome pairs plus
//! independently relabeled observed copies.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectra::{eig_sorted, OutcomeMatrix};
use crate::ste::rank_invariance_check;

/// Tolerance of the numeric rank-invariance certificate.
pub const CERTIFY_TOL: f64 = 1e-8;
/// Smallest normalized eigengap accepted as a simple spectrum.
pub const SIMPLE_GAP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedExperiment<T: Scalar> {
    pub y1_star: OutcomeMatrix<T>,
    pub y0_star: OutcomeMatrix<T>,
    pub y1_obs: OutcomeMatrix<T>,
    pub y0_obs: OutcomeMatrix<T>,
    /// `y_t_obs[i][j] = y_t_star[perm_t[i]][perm_t[j]]` for `(perm_1, perm_0)`.
    pub perms: (Vec<usize>, Vec<usize>),
    pub g_description: String,
    pub rank_invariant: bool,
    pub warnings: Vec<String>,
}

impl<T: Scalar> GeneratedExperiment<T> {
    /// True when both starred arms have all normalized eigengaps above [`SIMPLE_GAP`].
    pub fn simple_spectra(&self) -> Result<bool> {
        Ok(simple_spectrum(&self.y1_star, T::lit(SIMPLE_GAP))?
            && simple_spectrum(&self.y0_star, T::lit(SIMPLE_GAP))?)
    }
}

pub fn simple_spectrum<T: Scalar>(y: &OutcomeMatrix<T>, gap: T) -> Result<bool> {
    Ok(eig_sorted(y.entries())?.min_gap().is_none_or(|g| g >= gap))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn finish<T: Scalar>(
    y1: Array2<T>,
    y0: Array2<T>,
    seed: u64,
    g_description: String,
    claimed: bool,
    mut warnings: Vec<String>,
) -> Result<GeneratedExperiment<T>> {
    let y1_star = OutcomeMatrix::new(y1)?;
    let y0_star = OutcomeMatrix::new(y0)?;
    let n = y1_star.n();
    let mut r = rng(seed);
    let mut p1: Vec<usize> = (0..n).collect();
    let mut p0: Vec<usize> = (0..n).collect();
    p1.shuffle(&mut r);
    p0.shuffle(&mut r);
    let check = rank_invariance_check(&y1_star, &y0_star, T::lit(CERTIFY_TOL))?;
    if claimed && !check.invariant {
        warnings.push(format!(
            "numeric rank-invariance check failed (misalignment {}, monotonicity violation {})",
            check.max_eigenvector_misalignment, check.g_monotonicity_violation
        ));
    }
    Ok(GeneratedExperiment {
        y1_obs: y1_star.permuted(&p1),
        y0_obs: y0_star.permuted(&p0),
        y1_star,
        y0_star,
        perms: (p1, p0),
        g_description,
        rank_invariant: claimed && check.invariant,
        warnings,
    })
}

fn require_graph<T: Scalar>(g: &Array2<T>) -> Result<()> {
    let (r, c) = g.dim();
    if r != c || r == 0 {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    for ((i, j), &v) in g.indexed_iter() {
        if v != T::zero() && v != T::one() {
            return Err(Error::InvalidArgument(format!("adjacency entry ({i}, {j}) is not 0 or 1")));
        }
        if i == j && v != T::zero() {
            return Err(Error::InvalidArgument(format!("adjacency has a self-loop at {i}")));
        }
        if g[[j, i]] != v {
            return Err(Error::InvalidArgument(format!("adjacency is not symmetric at ({i}, {j})")));
        }
    }
    Ok(())
}

fn ordered_pair<T: Scalar>(lo: T, hi: T, what: &str) -> Result<()> {
    if !(lo > T::zero() && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "{what} must satisfy 0 < {what}0 < {what}1, got {lo} and {hi}"
        )));
    }
    Ok(())
}

/// Expected diffusion counts `Σ_{t=1..T} α^t G^t` for two passing rates.
pub fn gen_diffusion<T: Scalar>(
    g: &Array2<T>,
    alpha0: T,
    alpha1: T,
    t: usize,
    seed: u64,
) -> Result<GeneratedExperiment<T>> {
    require_graph(g)?;
    ordered_pair(alpha0, alpha1, "alpha")?;
    if t < 1 {
        return Err(Error::InvalidArgument("T must be at least 1".into()));
    }
    let power_sum = |a: T| {
        let mut acc = Array2::<T>::zeros(g.dim());
        let mut p = g.clone();
        let mut w = a;
        for k in 1..=t {
            acc = acc + &p * w;
            if k < t {
                p = p.dot(g);
                w *= a;
            }
        }
        acc
    };
    let mut warnings = Vec::new();
    let mut condition = true;
    if t > 2 {
        let bound = (T::one() / T::count(t)).powf(T::one() / T::count(t - 2));
        if !(alpha1 < bound) {
            condition = false;
            warnings.push(format!(
                "alpha1 = {alpha1} violates alpha1 < (1/T)^(1/(T-2)) = {bound}; rank invariance is not guaranteed"
            ));
        }
    }
    finish(
        power_sum(alpha1),
        power_sum(alpha0),
        seed,
        format!("diffusion, T = {t}: g maps Σ a0^t μ^t to Σ a1^t μ^t (no closed form)"),
        condition,
        warnings,
    )
}

/// Equilibrium covariances `σ² (I - β G)^(-2)` of a linear-in-means game.
pub fn gen_social<T: Scalar>(
    g: &Array2<T>,
    beta0: T,
    beta1: T,
    sigma2: T,
    seed: u64,
) -> Result<GeneratedExperiment<T>> {
    ordered_pair(beta0, beta1, "beta")?;
    if !(sigma2 > T::zero()) {
        return Err(Error::InvalidArgument("sigma2 must be positive".into()));
    }
    let spec = eig_sorted(g)?;
    let n = g.nrows();
    let nn = T::count(n);
    let radius = spec.values.iter().fold(T::zero(), |m, &v| m.max((v * nn).abs()));
    if radius > T::zero() && !(beta1 * radius < T::one()) {
        return Err(Error::InvalidArgument(format!(
            "beta1 = {beta1} must be below 1 / spectral radius = {}",
            T::one() / radius
        )));
    }
    let build = |beta: T| {
        let mut out = Array2::<T>::zeros((n, n));
        for (r, &l) in spec.values.iter().enumerate() {
            let d = T::one() - beta * l * nn;
            let w = sigma2 / (d * d);
            let v = spec.vectors.column(r);
            for i in 0..n {
                for j in 0..n {
                    out[[i, j]] += w * v[i] * v[j];
                }
            }
        }
        out
    };
    finish(
        build(beta1),
        build(beta0),
        seed,
        format!(
            "social interaction: g(x) = {sigma2} (1 - ({beta1}/{beta0})(1 - sqrt({sigma2}/x)))^(-2)"
        ),
        true,
        Vec::new(),
    )
}

/// Doubly demeaned Gram matrix of the characteristics.
pub fn double_centered_gram<T: Scalar>(x: &Array2<T>) -> Array2<T> {
    let gram = x.dot(&x.t());
    let n = gram.nrows();
    let nn = T::count(n);
    let rows: Vec<T> = (0..n).map(|i| gram.row(i).iter().copied().sum::<T>() / nn).collect();
    let grand = rows.iter().copied().sum::<T>() / nn;
    Array2::from_shape_fn((n, n), |(i, j)| gram[[i, j]] - rows[i] - rows[j] + grand)
}

/// Demeaned conditional-logit index `2 β X̃`.
pub fn gen_linkformation<T: Scalar>(
    x: &Array2<T>,
    beta0: T,
    beta1: T,
    seed: u64,
) -> Result<GeneratedExperiment<T>> {
    ordered_pair(beta0, beta1, "beta")?;
    if x.nrows() == 0 {
        return Err(Error::Empty("characteristics"));
    }
    let xt = double_centered_gram(x);
    let two = T::lit(2.0);
    finish(
        &xt * (two * beta1),
        &xt * (two * beta0),
        seed,
        format!("link formation: g(x) = ({beta1}/{beta0}) x"),
        true,
        Vec::new(),
    )
}

/// Rotated factor-model outcomes `ρ Λ' diag(σ²) Λ` on the R × R scale.
pub fn gen_factor<T: Scalar>(
    lambda: &Array2<T>,
    sigma2: &[T],
    rho0: T,
    rho1: T,
    seed: u64,
) -> Result<GeneratedExperiment<T>> {
    ordered_pair(rho0, rho1, "rho")?;
    let (n, r) = lambda.dim();
    if sigma2.len() != n {
        return Err(Error::Dimension(format!("{} variances for {n} units", sigma2.len())));
    }
    if sigma2.iter().any(|&s| !(s > T::zero())) {
        return Err(Error::InvalidArgument("variances must be positive".into()));
    }
    let gram = lambda.t().dot(lambda);
    let scale = gram.diag().iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    for a in 0..r {
        for b in 0..r {
            if a != b && gram[[a, b]].abs() > T::lit(1e-8).max(T::epsilon() * T::lit(1e3)) * scale {
                return Err(Error::InvalidArgument(format!(
                    "loading columns {a} and {b} are not orthogonal"
                )));
            }
        }
    }
    let weighted = Array2::from_shape_fn((n, r), |(i, a)| sigma2[i] * lambda[[i, a]]);
    let core = lambda.t().dot(&weighted);
    finish(
        &core * rho1,
        &core * rho0,
        seed,
        format!("factor model: g(x) = ({rho1}/{rho0}) x"),
        true,
        Vec::new(),
    )
}

/// Erdős–Rényi graph with edge probability `p`.
pub fn random_graph<T: Scalar>(n: usize, p: f64, seed: u64) -> Array2<T> {
    let mut r = rng(seed);
    let mut g = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            if r.gen_bool(p) {
                g[[i, j]] = T::one();
                g[[j, i]] = T::one();
            }
        }
    }
    g
}

/// Standard normal `rows × cols` matrix.
pub fn gaussian_matrix<T: Scalar>(rows: usize, cols: usize, seed: u64) -> Array2<T> {
    let mut r = rng(seed);
    Array2::from_shape_fn((rows, cols), |_| T::lit(r.sample::<f64, _>(StandardNormal)))
}

/// `n × r` matrix with orthonormal columns (eigenvectors of a random
/// symmetric Gaussian matrix).
pub fn random_orthonormal<T: Scalar>(n: usize, r: usize, seed: u64) -> Result<Array2<T>> {
    if r > n {
        return Err(Error::InvalidArgument(format!("cannot fit {r} orthonormal columns in {n} rows")));
    }
    let a = gaussian_matrix::<T>(n, n, seed);
    let s = &a + &a.t();
    let spec = eig_sorted(&s)?;
    Ok(spec.vectors.slice(ndarray::s![.., ..r]).to_owned())
}

/// Sub-seed for the `attempt`-th redraw under a root seed.
pub fn attempt_seed(seed: u64, attempt: u64) -> u64 {
    let mut r = rng(seed);
    r.set_stream(attempt);
    r.gen()
}

/// Redraws until the experiment is certified rank invariant with simple
/// spectra on both arms.
pub fn draw_certified<T, F>(seed: u64, attempts: usize, mut make: F) -> Result<GeneratedExperiment<T>>
where
    T: Scalar,
    F: FnMut(u64) -> Result<GeneratedExperiment<T>>,
{
    for k in 0..attempts {
        let e = make(attempt_seed(seed, k as u64))?;
        if e.rank_invariant && e.simple_spectra()? {
            return Ok(e);
        }
    }
    Err(Error::Resample {
        retries: attempts,
        reason: "no draw was certified rank invariant with simple spectra".into(),
    })
}
