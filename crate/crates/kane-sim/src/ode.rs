//! Adaptive embedded Runge-Kutta integrator of order 8(5,3) (the Dormand-
//! Prince 13-stage pair with the combined 5th/3rd-order error estimator) on
//! complex state vectors.

use nalgebra::DVector;

use crate::spin::C64;
use crate::{Error, Result};

// Nodes.
const C2: f64 = 0.526001519587677318785587544488e-01;
const C3: f64 = 0.789002279381515978178381316732e-01;
const C4: f64 = 0.118350341907227396726757197510e+00;
const C5: f64 = 0.281649658092772603273242802490e+00;
const C6: f64 = 0.333333333333333333333333333333e+00;
const C7: f64 = 0.25e+00;
const C8: f64 = 0.307692307692307692307692307692e+00;
const C9: f64 = 0.651282051282051282051282051282e+00;
const C10: f64 = 0.6e+00;
const C11: f64 = 0.857142857142857142857142857142e+00;

// 8th-order solution weights.
const B1: f64 = 5.42937341165687622380535766363e-2;
const B6: f64 = 4.45031289275240888144113950566e0;
const B7: f64 = 1.89151789931450038304281599044e0;
const B8: f64 = -5.8012039600105847814672114227e0;
const B9: f64 = 3.1116436695781989440891606237e-1;
const B10: f64 = -1.52160949662516078556178806805e-1;
const B11: f64 = 2.01365400804030348374776537501e-1;
const B12: f64 = 4.47106157277725905176885569043e-2;

// 3rd-order error estimator weights.
const BHH1: f64 = 0.244094488188976377952755905512e+00;
const BHH2: f64 = 0.733846688281611857341361741547e+00;
const BHH3: f64 = 0.220588235294117647058823529412e-01;

// 5th-order error estimator weights.
const ER1: f64 = 0.1312004499419488073250102996e-01;
const ER6: f64 = -0.1225156446376204440720569753e+01;
const ER7: f64 = -0.4957589496572501915214079952e+00;
const ER8: f64 = 0.1664377182454986536961530415e+01;
const ER9: f64 = -0.3503288487499736816886487290e+00;
const ER10: f64 = 0.3341791187130174790297318841e+00;
const ER11: f64 = 0.8192320648511571246570742613e-01;
const ER12: f64 = -0.2235530786388629525884427845e-01;

// Stage coefficients.
const A21: f64 = 5.26001519587677318785587544488e-2;
const A31: f64 = 1.97250569845378994544595329183e-2;
const A32: f64 = 5.91751709536136983633785987549e-2;
const A41: f64 = 2.95875854768068491816892993775e-2;
const A43: f64 = 8.87627564304205475450678981324e-2;
const A51: f64 = 2.41365134159266685502369798665e-1;
const A53: f64 = -8.84549479328286085344864962717e-1;
const A54: f64 = 9.24834003261792003115737966543e-1;
const A61: f64 = 3.7037037037037037037037037037e-2;
const A64: f64 = 1.70828608729473871279604482173e-1;
const A65: f64 = 1.25467687566822425016691814123e-1;
const A71: f64 = 3.7109375e-2;
const A74: f64 = 1.70252211019544039314978060272e-1;
const A75: f64 = 6.02165389804559606850219397283e-2;
const A76: f64 = -1.7578125e-2;
const A81: f64 = 3.70920001185047927108779319836e-2;
const A84: f64 = 1.70383925712239993810214054705e-1;
const A85: f64 = 1.07262030446373284651809199168e-1;
const A86: f64 = -1.53194377486244017527936158236e-2;
const A87: f64 = 8.27378916381402288758473766002e-3;
const A91: f64 = 6.24110958716075717114429577812e-1;
const A94: f64 = -3.36089262944694129406857109825e0;
const A95: f64 = -8.68219346841726006818189891453e-1;
const A96: f64 = 2.75920996994467083049415600797e1;
const A97: f64 = 2.01540675504778934086186788979e1;
const A98: f64 = -4.34898841810699588477366255144e1;
const A101: f64 = 4.77662536438264365890433908527e-1;
const A104: f64 = -2.48811461997166764192642586468e0;
const A105: f64 = -5.90290826836842996371446475743e-1;
const A106: f64 = 2.12300514481811942347288949897e1;
const A107: f64 = 1.52792336328824235832596922938e1;
const A108: f64 = -3.32882109689848629194453265587e1;
const A109: f64 = -2.03312017085086261358222928593e-2;
const A111: f64 = -9.3714243008598732571704021658e-1;
const A114: f64 = 5.18637242884406370830023853209e0;
const A115: f64 = 1.09143734899672957818500254654e0;
const A116: f64 = -8.14978701074692612513997267357e0;
const A117: f64 = -1.85200656599969598641566180701e1;
const A118: f64 = 2.27394870993505042818970056734e1;
const A119: f64 = 2.49360555267965238987089396762e0;
const A1110: f64 = -3.0467644718982195003823669022e0;
const A121: f64 = 2.27331014751653820792359768449e0;
const A124: f64 = -1.05344954667372501984066689879e1;
const A125: f64 = -2.00087205822486249909675718444e0;
const A126: f64 = -1.79589318631187989172765950534e1;
const A127: f64 = 2.79488845294199600508499808837e1;
const A128: f64 = -2.85899827713502369474065508674e0;
const A129: f64 = -8.87285693353062954433549289258e0;
const A1210: f64 = 1.23605671757943030647266201528e1;
const A1211: f64 = 6.43392746015763530355970484046e-1;

// Step-size controller.
const SAFE: f64 = 0.9;
const ALPHA: f64 = 1.0 / 8.0;
const MIN_SCALE: f64 = 0.333;
const MAX_SCALE: f64 = 6.0;

/// Integration options.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 200_000_000,
        }
    }
}

/// Adaptive integrator carrying its state between `advance_to` calls, so a
/// trajectory can be sampled at exact times without restarting.
pub struct Dop853<F> {
    f: F,
    pub t: f64,
    pub y: DVector<C64>,
    dydt: DVector<C64>,
    h: f64,
    opts: OdeOptions,
    reject: bool,
    pub n_steps: u64,
    pub n_rejected: u64,
}

fn comb(y: &DVector<C64>, h: f64, terms: &[(f64, &DVector<C64>)]) -> DVector<C64> {
    let n = y.len();
    let mut out = y.clone();
    for &(c, v) in terms {
        let s = h * c;
        for i in 0..n {
            out[i] += s * v[i];
        }
    }
    out
}

impl<F: FnMut(f64, &DVector<C64>) -> DVector<C64>> Dop853<F> {
    pub fn new(mut f: F, t0: f64, y0: DVector<C64>, opts: OdeOptions) -> Self {
        let dydt = f(t0, &y0);
        Dop853 {
            f,
            t: t0,
            y: y0,
            dydt,
            h: 0.0,
            opts,
            reject: false,
            n_steps: 0,
            n_rejected: 0,
        }
    }

    fn error_scale(&self, i: usize, y_new: &DVector<C64>) -> f64 {
        self.opts.atol + self.opts.rtol * self.y[i].norm().max(y_new[i].norm())
    }

    /// Initial step-size guess from the local derivative magnitudes.
    fn initial_step(&mut self, t_end: f64) -> f64 {
        let n = self.y.len() as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..self.y.len() {
            let sk = self.opts.atol + self.opts.rtol * self.y[i].norm();
            d0 += (self.y[i].norm() / sk).powi(2);
            d1 += (self.dydt[i].norm() / sk).powi(2);
        }
        d0 = (d0 / n).sqrt();
        d1 = (d1 / n).sqrt();
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 {
            1e-6 * (t_end - self.t).abs()
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min((t_end - self.t).abs());
        if h0 == 0.0 {
            return 0.0;
        }
        // One explicit Euler probe to estimate the second derivative.
        let y1 = comb(&self.y, h0, &[(1.0, &self.dydt)]);
        let f1 = (self.f)(self.t + h0, &y1);
        let mut d2 = 0.0;
        for i in 0..self.y.len() {
            let sk = self.opts.atol + self.opts.rtol * self.y[i].norm();
            d2 += ((f1[i] - self.dydt[i]).norm() / sk).powi(2);
        }
        d2 = (d2 / n).sqrt() / h0;
        let dm = d1.max(d2);
        let h1 = if dm > 1e-15 {
            (0.01 / dm).powf(1.0 / 8.0)
        } else {
            (h0 * 1e-3).max(1e-6)
        };
        h0.min(h1).min((t_end - self.t).abs())
    }

    /// Advances to exactly `t_end`, calling `on_step(t, y)` after every
    /// accepted step.
    pub fn advance_to(
        &mut self,
        t_end: f64,
        mut on_step: impl FnMut(f64, &DVector<C64>),
    ) -> Result<()> {
        if t_end <= self.t {
            return Ok(());
        }
        if self.h == 0.0 {
            self.h = self.initial_step(t_end);
            if self.h == 0.0 {
                return Ok(());
            }
        }
        while self.t < t_end {
            if self.n_steps + self.n_rejected > self.opts.max_steps {
                return Err(Error::Integration {
                    t_reached: self.t,
                    message: format!("step budget {} exhausted", self.opts.max_steps),
                });
            }
            let h = self.h.min(t_end - self.t);
            let (y_new, err) = self.try_step(h);
            if err <= 1.0 {
                // Accept.
                let scale = if err == 0.0 {
                    MAX_SCALE
                } else {
                    (SAFE * err.powf(-ALPHA)).clamp(MIN_SCALE, MAX_SCALE)
                };
                let scale = if self.reject { scale.min(1.0) } else { scale };
                self.reject = false;
                self.t += h;
                self.dydt = (self.f)(self.t, &y_new);
                self.y = y_new;
                self.h = h * scale;
                self.n_steps += 1;
                on_step(self.t, &self.y);
            } else {
                let scale = MIN_SCALE.max(SAFE * err.powf(-ALPHA));
                self.h = h * scale;
                self.reject = true;
                self.n_rejected += 1;
                if self.h.abs() <= f64::EPSILON * self.t.abs() {
                    return Err(Error::Integration {
                        t_reached: self.t,
                        message: "step size underflow".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// One trial step of size `h`; returns the candidate state and the scaled
    /// error (accept when ≤ 1).
    fn try_step(&mut self, h: f64) -> (DVector<C64>, f64) {
        let t = self.t;
        let y = &self.y;
        let k1 = &self.dydt;

        let yt = comb(y, h, &[(A21, k1)]);
        let k2 = (self.f)(t + C2 * h, &yt);
        let yt = comb(y, h, &[(A31, k1), (A32, &k2)]);
        let k3 = (self.f)(t + C3 * h, &yt);
        let yt = comb(y, h, &[(A41, k1), (A43, &k3)]);
        let k4 = (self.f)(t + C4 * h, &yt);
        let yt = comb(y, h, &[(A51, k1), (A53, &k3), (A54, &k4)]);
        let k5 = (self.f)(t + C5 * h, &yt);
        let yt = comb(y, h, &[(A61, k1), (A64, &k4), (A65, &k5)]);
        let k6 = (self.f)(t + C6 * h, &yt);
        let yt = comb(y, h, &[(A71, k1), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = (self.f)(t + C7 * h, &yt);
        let yt = comb(
            y,
            h,
            &[(A81, k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)],
        );
        let k8 = (self.f)(t + C8 * h, &yt);
        let yt = comb(
            y,
            h,
            &[
                (A91, k1),
                (A94, &k4),
                (A95, &k5),
                (A96, &k6),
                (A97, &k7),
                (A98, &k8),
            ],
        );
        let k9 = (self.f)(t + C9 * h, &yt);
        let yt = comb(
            y,
            h,
            &[
                (A101, k1),
                (A104, &k4),
                (A105, &k5),
                (A106, &k6),
                (A107, &k7),
                (A108, &k8),
                (A109, &k9),
            ],
        );
        let k10 = (self.f)(t + C10 * h, &yt);
        let yt = comb(
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
                (A1110, &k10),
            ],
        );
        let k11 = (self.f)(t + C11 * h, &yt);
        let yt = comb(
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
        let k12 = (self.f)(t + h, &yt);

        let n = y.len();
        let mut ksum = DVector::<C64>::zeros(n);
        for i in 0..n {
            ksum[i] = B1 * k1[i]
                + B6 * k6[i]
                + B7 * k7[i]
                + B8 * k8[i]
                + B9 * k9[i]
                + B10 * k10[i]
                + B11 * k11[i]
                + B12 * k12[i];
        }
        let y_new = comb(y, h, &[(1.0, &ksum)]);

        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..n {
            let sk = self.error_scale(i, &y_new);
            let e3 = ksum[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
            let e5 = ER1 * k1[i]
                + ER6 * k6[i]
                + ER7 * k7[i]
                + ER8 * k8[i]
                + ER9 * k9[i]
                + ER10 * k10[i]
                + ER11 * k11[i]
                + ER12 * k12[i];
            err3 += (e3.norm() / sk).powi(2);
            err5 += (e5.norm() / sk).powi(2);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err5 * (1.0 / (n as f64 * deno)).sqrt();
        (y_new, err)
    }
}
