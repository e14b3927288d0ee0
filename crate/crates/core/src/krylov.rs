//! Right-preconditioned GMRES and BiCGStab with `x₀ = 0`.
//!
//! Residual histories are relative to `‖b‖`; convergence is only ever
//! declared after checking the true residual `‖b − Ax‖`.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{BlockSparseMatrix, BlockVector};
use crate::precond::Preconditioner;

const REORTH_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KrylovMethod {
    #[default]
    GmresFull,
    GmresRestarted(usize),
    Bicgstab,
}

impl fmt::Display for KrylovMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GmresFull => write!(f, "gmres"),
            Self::GmresRestarted(m) => write!(f, "gmres({m})"),
            Self::Bicgstab => write!(f, "bicgstab"),
        }
    }
}

impl FromStr for KrylovMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "gmres" | "gmres-full" => Ok(Self::GmresFull),
            "bicgstab" => Ok(Self::Bicgstab),
            _ => {
                let m = s
                    .strip_prefix("gmres(")
                    .and_then(|t| t.strip_suffix(')'))
                    .or_else(|| s.strip_prefix("gmres-restarted-"))
                    .and_then(|t| t.parse::<usize>().ok())
                    .filter(|&m| m > 0)
                    .ok_or_else(|| Error::InvalidSpec(format!("unknown Krylov method `{s}`")))?;
                Ok(Self::GmresRestarted(m))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub method: KrylovMethod,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            method: KrylovMethod::GmresFull,
            tol: 1e-8,
            max_iterations: 500,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidSpec(format!("tolerance must lie in (0, 1), got {}", self.tol)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidSpec("max iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Relative residual after each iteration; `history[0] = 1` for
    /// nonzero `b`. The last entry is the true residual when converged.
    pub history: Vec<f64>,
    /// True relative residual `‖b − Ax‖ / ‖b‖` of the returned iterate.
    pub final_residual: f64,
    #[serde(with = "duration_ms")]
    pub wall_time: Duration,
    /// Set when the iteration stopped on a numerical breakdown.
    pub breakdown: Option<String>,
}

mod duration_ms {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1e3)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?.max(0.0) / 1e3))
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn check_dims(a: &BlockSparseMatrix, b: &BlockVector, m: &Preconditioner) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidMatrix("Krylov solve needs a square matrix".into()));
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    if m.dim() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: m.dim(),
        });
    }
    Ok(())
}

fn true_residual(a: &BlockSparseMatrix, b: &[f64], x: &[f64], bnorm: f64) -> f64 {
    let mut r = vec![0.0; b.len()];
    a.residual_into(b, x, &mut r);
    norm(&r) / bnorm
}

fn zero_rhs_report(start: Instant) -> SolveReport {
    SolveReport {
        converged: true,
        iterations: 0,
        history: vec![0.0],
        final_residual: 0.0,
        wall_time: start.elapsed(),
        breakdown: None,
    }
}

/// Dispatches on `cfg.method`.
pub fn solve(a: &BlockSparseMatrix, b: &BlockVector, m: &Preconditioner, cfg: &SolveConfig) -> Result<(BlockVector, SolveReport)> {
    match cfg.method {
        KrylovMethod::Bicgstab => bicgstab(a, b, m, cfg),
        _ => gmres(a, b, m, cfg),
    }
}

/// GMRES with right preconditioning, full or restarted per `cfg.method`.
pub fn gmres(a: &BlockSparseMatrix, b: &BlockVector, m: &Preconditioner, cfg: &SolveConfig) -> Result<(BlockVector, SolveReport)> {
    let start = Instant::now();
    cfg.validate()?;
    check_dims(a, b, m)?;
    let n = b.len();
    let bs = b.as_slice();
    let bnorm = norm(bs);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((BlockVector::new(b.block_size(), x)?, zero_rhs_report(start)));
    }
    let restart = match cfg.method {
        KrylovMethod::GmresRestarted(k) => k.max(1),
        _ => cfg.max_iterations,
    };

    let mut history = vec![1.0];
    let mut iterations = 0;
    let mut r = bs.to_vec();
    let mut breakdown = None;
    let mut final_residual = 1.0;
    let mut converged = false;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];

    'outer: while iterations < cfg.max_iterations {
        let beta = norm(&r);
        let m_max = restart.min(cfg.max_iterations - iterations);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Column-major Hessenberg after rotations, column j has j+2 entries.
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m_max);
        let mut rot: Vec<(f64, f64)> = Vec::with_capacity(m_max);
        let mut g = vec![beta];
        let mut k = 0;
        let mut stop = false;
        while k < m_max {
            m.apply_into(&basis[k], &mut z)?;
            a.matvec_into(&z, &mut w);
            let wnorm0 = norm(&w);
            let mut col = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                axpy(-hij, v, &mut w);
            }
            let mut wnorm = norm(&w);
            let loss = basis.iter().map(|v| dot(&w, v).abs()).fold(0.0, f64::max);
            if wnorm > 0.0 && loss > REORTH_THRESHOLD * wnorm {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    col[i] += c;
                    axpy(-c, v, &mut w);
                }
                wnorm = norm(&w);
            }
            col[k + 1] = wnorm;
            for (i, &(c, s)) in rot.iter().enumerate() {
                let (u, v) = (col[i], col[i + 1]);
                col[i] = c * u + s * v;
                col[i + 1] = -s * u + c * v;
            }
            let (hk, hk1) = (col[k], col[k + 1]);
            let rho = hk.hypot(hk1);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (hk / rho, hk1 / rho) };
            col[k] = rho;
            col[k + 1] = 0.0;
            rot.push((c, s));
            let gk = g[k];
            g[k] = c * gk;
            g.push(-s * gk);
            h.push(col);
            k += 1;
            iterations += 1;
            let estimate = g[k].abs() / bnorm;
            history.push(estimate);

            let happy = wnorm <= f64::EPSILON * wnorm0.max(f64::MIN_POSITIVE);
            if estimate <= cfg.tol || happy || k == m_max || rho == 0.0 {
                let mut xk = x.clone();
                update(&h, &g, &basis, k, m, &mut z, &mut xk)?;
                let res = true_residual(a, bs, &xk, bnorm);
                if res <= cfg.tol {
                    x = xk;
                    final_residual = res;
                    *history.last_mut().unwrap() = res;
                    converged = true;
                    break 'outer;
                }
                if happy || rho == 0.0 {
                    x = xk;
                    final_residual = res;
                    breakdown = Some(format!("Arnoldi breakdown at iteration {iterations} with residual {res:.3e}"));
                    stop = true;
                    break;
                }
                if k == m_max {
                    x = xk;
                    final_residual = res;
                    break;
                }
            }
            if !happy {
                basis.push(w.iter().map(|v| v / wnorm).collect());
            }
        }
        if stop {
            break;
        }
        a.residual_into(bs, &x, &mut r);
    }
    let report = SolveReport {
        converged,
        iterations,
        history,
        final_residual,
        wall_time: start.elapsed(),
        breakdown,
    };
    Ok((BlockVector::new(b.block_size(), x)?, report))
}

/// `x += M V y` where `R y = g` for the leading `k×k` triangle.
fn update(h: &[Vec<f64>], g: &[f64], basis: &[Vec<f64>], k: usize, m: &Preconditioner, z: &mut [f64], x: &mut [f64]) -> Result<()> {
    let mut y = g[..k].to_vec();
    for i in (0..k).rev() {
        let mut s = y[i];
        for j in i + 1..k {
            s -= h[j][i] * y[j];
        }
        y[i] = if h[i][i] == 0.0 { 0.0 } else { s / h[i][i] };
    }
    let mut v = vec![0.0; x.len()];
    for (yi, bi) in y.iter().zip(basis) {
        axpy(*yi, bi, &mut v);
    }
    m.apply_into(&v, z)?;
    axpy(1.0, z, x);
    Ok(())
}

/// BiCGStab with right preconditioning. One iteration = one full step
/// (two preconditioner applications).
pub fn bicgstab(a: &BlockSparseMatrix, b: &BlockVector, m: &Preconditioner, cfg: &SolveConfig) -> Result<(BlockVector, SolveReport)> {
    let start = Instant::now();
    cfg.validate()?;
    check_dims(a, b, m)?;
    let n = b.len();
    let bs = b.as_slice();
    let bnorm = norm(bs);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((BlockVector::new(b.block_size(), x)?, zero_rhs_report(start)));
    }
    let mut r = bs.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut history = vec![1.0];
    let mut converged = false;
    let mut breakdown = None;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            breakdown = Some(format!("rho breakdown at iteration {iterations}"));
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m.apply_into(&p, &mut p_hat)?;
        a.matvec_into(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            breakdown = Some(format!("rho breakdown at iteration {iterations}"));
            break;
        }
        alpha = rho / denom;
        let mut s = r.clone();
        axpy(-alpha, &v, &mut s);
        iterations += 1;
        if norm(&s) / bnorm <= cfg.tol {
            let mut xk = x.clone();
            axpy(alpha, &p_hat, &mut xk);
            let res = true_residual(a, bs, &xk, bnorm);
            x = xk;
            history.push(res);
            if res <= cfg.tol {
                converged = true;
                break;
            }
            a.residual_into(bs, &x, &mut r);
            continue;
        }
        m.apply_into(&s, &mut s_hat)?;
        a.matvec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
        axpy(alpha, &p_hat, &mut x);
        axpy(omega, &s_hat, &mut x);
        r.copy_from_slice(&s);
        axpy(-omega, &t, &mut r);
        let est = norm(&r) / bnorm;
        history.push(est);
        if est <= cfg.tol {
            let res = true_residual(a, bs, &x, bnorm);
            if res <= cfg.tol {
                *history.last_mut().unwrap() = res;
                converged = true;
                break;
            }
            a.residual_into(bs, &x, &mut r);
        }
        if omega == 0.0 || !omega.is_finite() {
            breakdown = Some(format!("omega breakdown at iteration {iterations}"));
            break;
        }
    }
    let final_residual = true_residual(a, bs, &x, bnorm);
    let report = SolveReport {
        converged,
        iterations,
        history,
        final_residual,
        wall_time: start.elapsed(),
        breakdown,
    };
    Ok((BlockVector::new(b.block_size(), x)?, report))
}
