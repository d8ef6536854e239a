//! Dormand-Prince 8(5,3) with dense output on dynamically sized states.
//!
//! Step control and the continuous extension follow the classical DOP853
//! code (Hairer, Norsett, Wanner). One addition: a right-hand side that
//! reports a domain error (the state left the chart) rejects the step and
//! shrinks it, so trajectories are truncated at the chart boundary instead of
//! failing.

use nalgebra::DVector;

use crate::error::{FinslerError, Result};
use tableau::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: Option<f64>,
    pub max_steps: usize,
    /// Build the continuous extension for every accepted step.
    pub dense: bool,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol,
            ..Default::default()
        }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-9,
            h_max: None,
            max_steps: 100_000,
            dense: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub rhs_evals: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Rejections caused by stage values outside the domain.
    pub domain_rejections: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// The solution could not be continued past `t` without leaving the
    /// domain of the right-hand side.
    DomainExit { t: f64 },
}

/// Continuous extension on one accepted step `[t0, t0 + h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    cont: [DVector<f64>; 8],
}

impl DenseStep {
    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = if self.h >= 0.0 {
            (self.t0, self.t0 + self.h)
        } else {
            (self.t0 + self.h, self.t0)
        };
        t >= a && t <= b
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        let conpar = &c[4] + (&c[5] + (&c[6] + &c[7] * s) * s1) * s;
        &c[0] + (&c[1] + (&c[2] + (&c[3] + conpar * s1) * s) * s1) * s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    /// Accepted mesh, starting with the initial time.
    pub ts: Vec<f64>,
    pub ys: Vec<DVector<f64>>,
    /// One entry per accepted step when dense output was requested.
    pub dense: Vec<DenseStep>,
    pub stats: OdeStats,
    pub termination: Termination,
}

impl OdeSolution {
    pub fn t_end(&self) -> f64 {
        *self.ts.last().expect("non-empty mesh")
    }

    pub fn y_end(&self) -> &DVector<f64> {
        self.ys.last().expect("non-empty mesh")
    }

    /// Interpolated state; `None` outside the integrated range or without
    /// dense output.
    pub fn eval(&self, t: f64) -> Option<DVector<f64>> {
        if self.ts.len() == 1 {
            return (t == self.ts[0]).then(|| self.ys[0].clone());
        }
        if self.dense.is_empty() {
            return self.ts.iter().position(|&s| s == t).map(|i| self.ys[i].clone());
        }
        let forward = self.dense[0].h > 0.0;
        // steps are ordered along the direction of integration
        let idx = self.dense.partition_point(|d| {
            let end = d.t0 + d.h;
            if forward {
                end < t
            } else {
                end > t
            }
        });
        let step = self.dense.get(idx)?;
        step.contains(t).then(|| step.eval(t))
    }
}

fn combo(y: &DVector<f64>, h: f64, terms: &[(f64, &DVector<f64>)]) -> DVector<f64> {
    let mut out = y.clone();
    for (c, k) in terms {
        out.axpy(h * c, k, 1.0);
    }
    out
}

fn sum(terms: &[(f64, &DVector<f64>)]) -> DVector<f64> {
    let mut out = DVector::zeros(terms[0].1.len());
    for (c, k) in terms {
        out.axpy(*c, k, 1.0);
    }
    out
}

enum Attempt {
    Accepted {
        y_new: DVector<f64>,
        k_new: DVector<f64>,
        dense: Option<DenseStep>,
        err: f64,
    },
    Rejected {
        err: f64,
    },
    OutOfDomain,
}

/// Integrates `y' = f(t, y)` from `t0` to `tf` (either direction).
pub fn dop853<F>(mut f: F, t0: f64, y0: &DVector<f64>, tf: f64, opts: &OdeOptions) -> Result<OdeSolution>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(FinslerError::InvalidParameter("ODE tolerances must be positive".into()));
    }
    if !(t0.is_finite() && tf.is_finite()) || !y0.iter().all(|v| v.is_finite()) {
        return Err(FinslerError::Numeric("non-finite initial data".into()));
    }
    let mut stats = OdeStats::default();
    let mut sol = OdeSolution {
        ts: vec![t0],
        ys: vec![y0.clone()],
        dense: Vec::new(),
        stats,
        termination: Termination::Completed,
    };
    if tf == t0 {
        return Ok(sol);
    }

    let n = y0.len();
    let dir = (tf - t0).signum();
    let span = (tf - t0).abs();
    let h_max = opts.h_max.unwrap_or(span).min(span);
    let h_min = 1e-12 * span.max(1.0);

    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = f(t, &y)?;
    stats.rhs_evals += 1;

    let sk = |a: &DVector<f64>, i: usize| opts.atol + opts.rtol * a[i].abs();
    // initial step guess
    let mut h = {
        let dnf: f64 = (0..n).map(|i| (k1[i] / sk(&y, i)).powi(2)).sum();
        let dny: f64 = (0..n).map(|i| (y[i] / sk(&y, i)).powi(2)).sum();
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(h_max);
        let y1 = combo(&y, h * dir, &[(1.0, &k1)]);
        match f(t + h * dir, &y1) {
            Ok(k2) => {
                stats.rhs_evals += 1;
                let der2 = (0..n).map(|i| ((&k2 - &k1)[i] / sk(&y, i)).powi(2)).sum::<f64>().sqrt() / h;
                let der12 = der2.abs().max(dnf.sqrt());
                let h1 = if der12 <= 1e-15 {
                    (h * 1e-3).max(1e-6)
                } else {
                    (0.01 / der12).powf(1.0 / 8.0)
                };
                (100.0 * h).min(h1).min(h_max)
            }
            Err(e) if e.is_domain() => h * 1e-2,
            Err(e) => return Err(e),
        }
    } * dir;

    let mut last_rejected = false;

    loop {
        if (tf - t) * dir <= 1e-14 * tf.abs().max(1.0) {
            break;
        }
        if stats.accepted_steps + stats.rejected_steps >= opts.max_steps {
            return Err(FinslerError::Numeric(format!("ODE step budget {} exhausted at t = {t}", opts.max_steps)));
        }
        if h.abs() < 10.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(FinslerError::StepUnderflow { t });
        }
        if (t + 1.01 * h - tf) * dir > 0.0 {
            h = tf - t;
        }

        match attempt(&mut f, t, &y, &k1, h, opts, &mut stats)? {
            Attempt::OutOfDomain => {
                stats.domain_rejections += 1;
                h *= 0.25;
                last_rejected = true;
                if h.abs() < h_min {
                    sol.termination = Termination::DomainExit { t };
                    break;
                }
            }
            Attempt::Rejected { err } => {
                stats.rejected_steps += 1;
                let fac11 = err.powf(EXPO1);
                h /= FACC1.min(fac11 / SAFE);
                last_rejected = true;
            }
            Attempt::Accepted {
                y_new,
                k_new,
                dense,
                err,
            } => {
                stats.accepted_steps += 1;
                let fac11 = err.powf(EXPO1);
                let fac = FACC2.max(FACC1.min(fac11 / SAFE));
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = if dir > 0.0 { h_new.min(h) } else { h_new.max(h) };
                    last_rejected = false;
                }
                t += h;
                y = y_new;
                k1 = k_new;
                sol.ts.push(t);
                sol.ys.push(y.clone());
                if let Some(d) = dense {
                    sol.dense.push(d);
                }
                h = h_new.abs().min(h_max) * dir;
            }
        }
    }
    sol.stats = stats;
    Ok(sol)
}

fn attempt<F>(
    f: &mut F,
    t: f64,
    y: &DVector<f64>,
    k1: &DVector<f64>,
    h: f64,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> Result<Attempt>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    macro_rules! eval {
        ($t:expr, $y:expr) => {{
            stats.rhs_evals += 1;
            match f($t, &$y) {
                Ok(v) => v,
                Err(e) if e.is_domain() => return Ok(Attempt::OutOfDomain),
                Err(e) => return Err(e),
            }
        }};
    }

    let k2 = eval!(t + C2 * h, combo(y, h, &[(A21, k1)]));
    let k3 = eval!(t + C3 * h, combo(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = eval!(t + C4 * h, combo(y, h, &[(A41, k1), (A43, &k3)]));
    let k5 = eval!(t + C5 * h, combo(y, h, &[(A51, k1), (A53, &k3), (A54, &k4)]));
    let k6 = eval!(t + C6 * h, combo(y, h, &[(A61, k1), (A64, &k4), (A65, &k5)]));
    let k7 = eval!(t + C7 * h, combo(y, h, &[(A71, k1), (A74, &k4), (A75, &k5), (A76, &k6)]));
    let k8 = eval!(
        t + C8 * h,
        combo(y, h, &[(A81, k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)])
    );
    let k9 = eval!(
        t + C9 * h,
        combo(y, h, &[(A91, k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)])
    );
    let k10 = eval!(
        t + C10 * h,
        combo(
            y,
            h,
            &[(A101, k1), (A104, &k4), (A105, &k5), (A106, &k6), (A107, &k7), (A108, &k8), (A109, &k9)]
        )
    );
    let k11 = eval!(
        t + C11 * h,
        combo(
            y,
            h,
            &[
                (A111, k1),
                (A114, &k4),
                (A115, &k5),
                (A116, &k6),
                (A117, &k7),
                (A118, &k8),
                (A119, &k9),
                (A1110, &k10)
            ]
        )
    );
    let t_new = t + h;
    let yy1 = combo(
        y,
        h,
        &[
            (A121, k1),
            (A124, &k4),
            (A125, &k5),
            (A126, &k6),
            (A127, &k7),
            (A128, &k8),
            (A129, &k9),
            (A1210, &k10),
            (A1211, &k11),
        ],
    );
    let k12 = eval!(t_new, yy1);
    let kb = sum(&[
        (B1, k1),
        (B6, &k6),
        (B7, &k7),
        (B8, &k8),
        (B9, &k9),
        (B10, &k10),
        (B11, &k11),
        (B12, &k12),
    ]);
    let y_new = combo(y, h, &[(1.0, &kb)]);

    let n = y.len();
    let mut err = 0.0;
    let mut err2 = 0.0;
    for i in 0..n {
        let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        let e2 = kb[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
        err2 += (e2 / sk).powi(2);
        let e = ER1 * k1[i]
            + ER6 * k6[i]
            + ER7 * k7[i]
            + ER8 * k8[i]
            + ER9 * k9[i]
            + ER10 * k10[i]
            + ER11 * k11[i]
            + ER12 * k12[i];
        err += (e / sk).powi(2);
    }
    let mut deno = err + 0.01 * err2;
    if deno <= 0.0 {
        deno = 1.0;
    }
    let err = h.abs() * err * (1.0 / (deno * n as f64)).sqrt();
    if !err.is_finite() {
        return Err(FinslerError::Numeric(format!("non-finite error estimate at t = {t}")));
    }
    if err > 1.0 {
        return Ok(Attempt::Rejected { err });
    }

    let k_new = eval!(t_new, y_new);
    let dense = if opts.dense {
        let ydiff = &y_new - y;
        let bspl = k1 * h - &ydiff;
        let cont3 = bspl.clone();
        let cont4 = &ydiff - &k_new * h - &bspl;
        let c5 = sum(&[
            (D41, k1),
            (D46, &k6),
            (D47, &k7),
            (D48, &k8),
            (D49, &k9),
            (D410, &k10),
            (D411, &k11),
            (D412, &k12),
        ]);
        let c6 = sum(&[
            (D51, k1),
            (D56, &k6),
            (D57, &k7),
            (D58, &k8),
            (D59, &k9),
            (D510, &k10),
            (D511, &k11),
            (D512, &k12),
        ]);
        let c7 = sum(&[
            (D61, k1),
            (D66, &k6),
            (D67, &k7),
            (D68, &k8),
            (D69, &k9),
            (D610, &k10),
            (D611, &k11),
            (D612, &k12),
        ]);
        let c8 = sum(&[
            (D71, k1),
            (D76, &k6),
            (D77, &k7),
            (D78, &k8),
            (D79, &k9),
            (D710, &k10),
            (D711, &k11),
            (D712, &k12),
        ]);
        let k14 = eval!(
            t + C14 * h,
            combo(
                y,
                h,
                &[
                    (A141, k1),
                    (A147, &k7),
                    (A148, &k8),
                    (A149, &k9),
                    (A1410, &k10),
                    (A1411, &k11),
                    (A1412, &k12),
                    (A1413, &k_new)
                ]
            )
        );
        let k15 = eval!(
            t + C15 * h,
            combo(
                y,
                h,
                &[
                    (A151, k1),
                    (A156, &k6),
                    (A157, &k7),
                    (A158, &k8),
                    (A1511, &k11),
                    (A1512, &k12),
                    (A1513, &k_new),
                    (A1514, &k14)
                ]
            )
        );
        let k16 = eval!(
            t + C16 * h,
            combo(
                y,
                h,
                &[
                    (A161, k1),
                    (A166, &k6),
                    (A167, &k7),
                    (A168, &k8),
                    (A169, &k9),
                    (A1613, &k_new),
                    (A1614, &k14),
                    (A1615, &k15)
                ]
            )
        );
        let fin = |c: DVector<f64>, d13: f64, d14: f64, d15: f64, d16: f64| {
            (c + &k_new * d13 + &k14 * d14 + &k15 * d15 + &k16 * d16) * h
        };
        Some(DenseStep {
            t0: t,
            h,
            cont: [
                y.clone(),
                ydiff,
                cont3,
                cont4,
                fin(c5, D413, D414, D415, D416),
                fin(c6, D513, D514, D515, D516),
                fin(c7, D613, D614, D615, D616),
                fin(c8, D713, D714, D715, D716),
            ],
        })
    } else {
        None
    };
    Ok(Attempt::Accepted {
        y_new,
        k_new,
        dense,
        err,
    })
}


#[allow(clippy::excessive_precision, clippy::unreadable_literal, dead_code)]
mod tableau {
    pub const SAFE: f64 = 0.9;
    pub const EXPO1: f64 = 1.0 / 8.0;
    pub const FACC1: f64 = 1.0 / 0.33;
    pub const FACC2: f64 = 1.0 / 6.0;

    pub const A21: f64 = 5.26001519587677318785587544488E-2;
    pub const A31: f64 = 1.97250569845378994544595329183E-2;
    pub const A32: f64 = 5.91751709536136983633785987549E-2;
    pub const A41: f64 = 2.95875854768068491816892993775E-2;
    pub const A43: f64 = 8.87627564304205475450678981324E-2;
    pub const A51: f64 = 2.41365134159266685502369798665E-1;
    pub const A53: f64 = -8.84549479328286085344864962717E-1;
    pub const A54: f64 = 9.24834003261792003115737966543E-1;
    pub const A61: f64 = 3.7037037037037037037037037037E-2;
    pub const A64: f64 = 1.70828608729473871279604482173E-1;
    pub const A65: f64 = 1.25467687566822425016691814123E-1;
    pub const A71: f64 = 3.7109375E-2;
    pub const A74: f64 = 1.70252211019544039314978060272E-1;
    pub const A75: f64 = 6.02165389804559606850219397283E-2;
    pub const A76: f64 = -1.7578125E-2;
    pub const A81: f64 = 3.70920001185047927108779319836E-2;
    pub const A84: f64 = 1.70383925712239993810214054705E-1;
    pub const A85: f64 = 1.07262030446373284651809199168E-1;
    pub const A86: f64 = -1.53194377486244017527936158236E-2;
    pub const A87: f64 = 8.27378916381402288758473766002E-3;
    pub const A91: f64 = 6.24110958716075717114429577812E-1;
    pub const A94: f64 = -3.36089262944694129406857109825E0;
    pub const A95: f64 = -8.68219346841726006818189891453E-1;
    pub const A96: f64 = 2.75920996994467083049415600797E1;
    pub const A97: f64 = 2.01540675504778934086186788979E1;
    pub const A98: f64 = -4.34898841810699588477366255144E1;
    pub const A101: f64 = 4.77662536438264365890433908527E-1;
    pub const A104: f64 = -2.48811461997166764192642586468E0;
    pub const A105: f64 = -5.90290826836842996371446475743E-1;
    pub const A106: f64 = 2.12300514481811942347288949897E1;
    pub const A107: f64 = 1.52792336328824235832596922938E1;
    pub const A108: f64 = -3.32882109689848629194453265587E1;
    pub const A109: f64 = -2.03312017085086261358222928593E-2;
    pub const A111: f64 = -9.3714243008598732571704021658E-1;
    pub const A114: f64 = 5.18637242884406370830023853209E0;
    pub const A115: f64 = 1.09143734899672957818500254654E0;
    pub const A116: f64 = -8.14978701074692612513997267357E0;
    pub const A117: f64 = -1.85200656599969598641566180701E1;
    pub const A118: f64 = 2.27394870993505042818970056734E1;
    pub const A119: f64 = 2.49360555267965238987089396762E0;
    pub const A1110: f64 = -3.0467644718982195003823669022E0;
    pub const A121: f64 = 2.27331014751653820792359768449E0;
    pub const A124: f64 = -1.05344954667372501984066689879E1;
    pub const A125: f64 = -2.00087205822486249909675718444E0;
    pub const A126: f64 = -1.79589318631187989172765950534E1;
    pub const A127: f64 = 2.79488845294199600508499808837E1;
    pub const A128: f64 = -2.85899827713502369474065508674E0;
    pub const A129: f64 = -8.87285693353062954433549289258E0;
    pub const A1210: f64 = 1.23605671757943030647266201528E1;
    pub const A1211: f64 = 6.43392746015763530355970484046E-1;
    pub const A141: f64 = 5.61675022830479523392909219681E-2;
    pub const A147: f64 = 2.53500210216624811088794765333E-1;
    pub const A148: f64 = -2.46239037470802489917441475441E-1;
    pub const A149: f64 = -1.24191423263816360469010140626E-1;
    pub const A1410: f64 = 1.5329179827876569731206322685E-1;
    pub const A1411: f64 = 8.20105229563468988491666602057E-3;
    pub const A1412: f64 = 7.56789766054569976138603589584E-3;
    pub const A1413: f64 = -8.298E-3;
    pub const A151: f64 = 3.18346481635021405060768473261E-2;
    pub const A156: f64 = 2.83009096723667755288322961402E-2;
    pub const A157: f64 = 5.35419883074385676223797384372E-2;
    pub const A158: f64 = -5.49237485713909884646569340306E-2;
    pub const A1511: f64 = -1.08347328697249322858509316994E-4;
    pub const A1512: f64 = 3.82571090835658412954920192323E-4;
    pub const A1513: f64 = -3.40465008687404560802977114492E-4;
    pub const A1514: f64 = 1.41312443674632500278074618366E-1;
    pub const A161: f64 = -4.28896301583791923408573538692E-1;
    pub const A166: f64 = -4.69762141536116384314449447206E0;
    pub const A167: f64 = 7.68342119606259904184240953878E0;
    pub const A168: f64 = 4.06898981839711007970213554331E0;
    pub const A169: f64 = 3.56727187455281109270669543021E-1;
    pub const A1613: f64 = -1.39902416515901462129418009734E-3;
    pub const A1614: f64 = 2.9475147891527723389556272149E0;
    pub const A1615: f64 = -9.15095847217987001081870187138E0;
    pub const B1: f64 = 5.42937341165687622380535766363E-2;
    pub const B6: f64 = 4.45031289275240888144113950566E0;
    pub const B7: f64 = 1.89151789931450038304281599044E0;
    pub const B8: f64 = -5.8012039600105847814672114227E0;
    pub const B9: f64 = 3.1116436695781989440891606237E-1;
    pub const B10: f64 = -1.52160949662516078556178806805E-1;
    pub const B11: f64 = 2.01365400804030348374776537501E-1;
    pub const B12: f64 = 4.47106157277725905176885569043E-2;
    pub const BHH1: f64 = 0.244094488188976377952755905512E+00;
    pub const BHH2: f64 = 0.733846688281611857341361741547E+00;
    pub const BHH3: f64 = 0.220588235294117647058823529412E-01;
    pub const C2: f64 = 0.526001519587677318785587544488E-01;
    pub const C3: f64 = 0.789002279381515978178381316732E-01;
    pub const C4: f64 = 0.118350341907227396726757197510E+00;
    pub const C5: f64 = 0.281649658092772603273242802490E+00;
    pub const C6: f64 = 0.333333333333333333333333333333E+00;
    pub const C7: f64 = 0.25E+00;
    pub const C8: f64 = 0.307692307692307692307692307692E+00;
    pub const C9: f64 = 0.651282051282051282051282051282E+00;
    pub const C10: f64 = 0.6E+00;
    pub const C11: f64 = 0.857142857142857142857142857142E+00;
    pub const C14: f64 = 0.1E+00;
    pub const C15: f64 = 0.2E+00;
    pub const C16: f64 = 0.777777777777777777777777777778E+00;
    pub const ER1: f64 = 0.1312004499419488073250102996E-01;
    pub const ER6: f64 = -0.1225156446376204440720569753E+01;
    pub const ER7: f64 = -0.4957589496572501915214079952E+00;
    pub const ER8: f64 = 0.1664377182454986536961530415E+01;
    pub const ER9: f64 = -0.3503288487499736816886487290E+00;
    pub const ER10: f64 = 0.3341791187130174790297318841E+00;
    pub const ER11: f64 = 0.8192320648511571246570742613E-01;
    pub const ER12: f64 = -0.2235530786388629525884427845E-01;
    pub const D41: f64 = -0.84289382761090128651353491142E+01;
    pub const D46: f64 = 0.56671495351937776962531783590E+00;
    pub const D47: f64 = -0.30689499459498916912797304727E+01;
    pub const D48: f64 = 0.23846676565120698287728149680E+01;
    pub const D49: f64 = 0.21170345824450282767155149946E+01;
    pub const D410: f64 = -0.87139158377797299206789907490E+00;
    pub const D411: f64 = 0.22404374302607882758541771650E+01;
    pub const D412: f64 = 0.63157877876946881815570249290E+00;
    pub const D413: f64 = -0.88990336451333310820698117400E-01;
    pub const D414: f64 = 0.18148505520854727256656404962E+02;
    pub const D415: f64 = -0.91946323924783554000451984436E+01;
    pub const D416: f64 = -0.44360363875948939664310572000E+01;
    pub const D51: f64 = 0.10427508642579134603413151009E+02;
    pub const D56: f64 = 0.24228349177525818288430175319E+03;
    pub const D57: f64 = 0.16520045171727028198505394887E+03;
    pub const D58: f64 = -0.37454675472269020279518312152E+03;
    pub const D59: f64 = -0.22113666853125306036270938578E+02;
    pub const D510: f64 = 0.77334326684722638389603898808E+01;
    pub const D511: f64 = -0.30674084731089398182061213626E+02;
    pub const D512: f64 = -0.93321305264302278729567221706E+01;
    pub const D513: f64 = 0.15697238121770843886131091075E+02;
    pub const D514: f64 = -0.31139403219565177677282850411E+02;
    pub const D515: f64 = -0.93529243588444783865713862664E+01;
    pub const D516: f64 = 0.35816841486394083752465898540E+02;
    pub const D61: f64 = 0.19985053242002433820987653617E+02;
    pub const D66: f64 = -0.38703730874935176555105901742E+03;
    pub const D67: f64 = -0.18917813819516756882830838328E+03;
    pub const D68: f64 = 0.52780815920542364900561016686E+03;
    pub const D69: f64 = -0.11573902539959630126141871134E+02;
    pub const D610: f64 = 0.68812326946963000169666922661E+01;
    pub const D611: f64 = -0.10006050966910838403183860980E+01;
    pub const D612: f64 = 0.77771377980534432092869265740E+00;
    pub const D613: f64 = -0.27782057523535084065932004339E+01;
    pub const D614: f64 = -0.60196695231264120758267380846E+02;
    pub const D615: f64 = 0.84320405506677161018159903784E+02;
    pub const D616: f64 = 0.11992291136182789328035130030E+02;
    pub const D71: f64 = -0.25693933462703749003312586129E+02;
    pub const D76: f64 = -0.15418974869023643374053993627E+03;
    pub const D77: f64 = -0.23152937917604549567536039109E+03;
    pub const D78: f64 = 0.35763911791061412378285349910E+03;
    pub const D79: f64 = 0.93405324183624310003907691704E+02;
    pub const D710: f64 = -0.37458323136451633156875139351E+02;
    pub const D711: f64 = 0.10409964950896230045147246184E+03;
    pub const D712: f64 = 0.29840293426660503123344363579E+02;
    pub const D713: f64 = -0.43533456590011143754432175058E+02;
    pub const D714: f64 = 0.96324553959188282948394950600E+02;
    pub const D715: f64 = -0.39177261675615439165231486172E+02;
    pub const D716: f64 = -0.14972683625798562581422125276E+03;
}
