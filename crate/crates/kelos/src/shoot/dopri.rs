//! Dormand-Prince 5(4) stepper for the two-dimensional radial state
//! `(u, u')`, with the standard fourth-degree dense-output interpolant and a
//! PI step-size controller.

pub(crate) type State = [f64; 2];

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

// 5th-minus-4th order error weights
const EW: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// dense-output weights
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2;
/// Step shrink/growth bounds per attempt.
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Interpolation coefficients for one accepted step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseOutput {
    pub t_old: f64,
    pub h: f64,
    cont: [State; 5],
}

impl DenseOutput {
    /// Evaluate the interpolant at `t ∈ [t_old, t_old + h]`.
    pub fn eval(&self, t: f64) -> State {
        let s = if self.h == 0.0 { 0.0 } else { (t - self.t_old) / self.h };
        let s1 = 1.0 - s;
        let mut out = [0.0; 2];
        for i in 0..2 {
            let c = &self.cont;
            out[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])));
        }
        out
    }
}

pub(crate) struct AcceptedStep {
    pub t_new: f64,
    pub y_new: State,
    pub h_used: f64,
    pub dense: DenseOutput,
    /// Weighted local error estimate in state units (component 0 scale).
    pub error_estimate: f64,
}

pub(crate) enum StepOutcome {
    Accepted(AcceptedStep),
    Rejected,
    /// The right-hand side produced a non-finite value at the current state.
    NonFinite,
}

pub(crate) struct Dopri5<F: FnMut(f64, State) -> State> {
    rhs: F,
    pub t: f64,
    pub y: State,
    pub h: f64,
    k1: State,
    facold: f64,
    just_rejected: bool,
    pub rhs_evals: u64,
}

impl<F: FnMut(f64, State) -> State> Dopri5<F> {
    pub fn new(mut rhs: F, t0: f64, y0: State, h0: f64) -> Self {
        let k1 = rhs(t0, y0);
        Self {
            rhs,
            t: t0,
            y: y0,
            h: h0,
            k1,
            facold: 1e-4,
            just_rejected: false,
            rhs_evals: 1,
        }
    }

    /// Attempt one step of size at most `h_cap`; adapts `self.h` either way.
    pub fn step(&mut self, h_cap: f64, rtol: f64, atol: f64) -> StepOutcome {
        let h = self.h.min(h_cap);
        let (t, y) = (self.t, self.y);
        let mut k = [[0.0f64; 2]; 7];
        k[0] = self.k1;
        for stage in 0..6 {
            let mut yi = y;
            for i in 0..2 {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    acc += A[stage][j] * kj[i];
                }
                yi[i] += h * acc;
            }
            k[stage + 1] = (self.rhs)(t + C[stage] * h, yi);
        }
        self.rhs_evals += 6;

        let mut y_new = y;
        for i in 0..2 {
            let mut acc = 0.0;
            for j in 0..7 {
                acc += B[j] * k[j][i];
            }
            y_new[i] += h * acc;
        }
        // FSAL: stage 7 was evaluated at (t + h, ysti) with the b-row, which
        // equals y_new for this tableau
        let k_new = k[6];

        let mut err = 0.0;
        let mut scale0 = atol;
        for i in 0..2 {
            let sk = atol + rtol * y[i].abs().max(y_new[i].abs());
            let mut e = 0.0;
            for j in 0..7 {
                e += EW[j] * k[j][i];
            }
            err += (h * e / sk) * (h * e / sk);
            if i == 0 {
                scale0 = sk;
            }
        }
        err = (err / 2.0).sqrt();

        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            if !y.iter().all(|v| v.is_finite()) || !self.k1.iter().all(|v| v.is_finite()) {
                return StepOutcome::NonFinite;
            }
            self.h = h * FAC_MIN;
            self.just_rejected = true;
            return StepOutcome::Rejected;
        }

        let fac11 = err.powf(EXPO1);
        let fac = (fac11 / self.facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        if err <= 1.0 {
            self.facold = err.max(1e-4);
            let ydiff = [y_new[0] - y[0], y_new[1] - y[1]];
            let bspl = [h * k[0][0] - ydiff[0], h * k[0][1] - ydiff[1]];
            let mut cont4 = [0.0f64; 2];
            for i in 0..2 {
                let mut acc = 0.0;
                for j in 0..7 {
                    acc += D[j] * k[j][i];
                }
                cont4[i] = h * acc;
            }
            let dense = DenseOutput {
                t_old: t,
                h,
                cont: [
                    y,
                    ydiff,
                    bspl,
                    [
                        ydiff[0] - h * k_new[0] - bspl[0],
                        ydiff[1] - h * k_new[1] - bspl[1],
                    ],
                    cont4,
                ],
            };
            let mut h_next = h / fac;
            if self.just_rejected {
                h_next = h_next.min(h);
            }
            self.just_rejected = false;
            self.t = t + h;
            self.y = y_new;
            self.k1 = k_new;
            self.h = h_next;
            StepOutcome::Accepted(AcceptedStep {
                t_new: self.t,
                y_new,
                h_used: h,
                dense,
                error_estimate: err * scale0,
            })
        } else {
            self.h = h / (fac11 / SAFE).min(1.0 / FAC_MIN);
            self.just_rejected = true;
            StepOutcome::Rejected
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Drive the stepper over `[t0, t_end]`.
    fn integrate<F: FnMut(f64, State) -> State>(rhs: F, t0: f64, y0: State, t_end: f64) -> State {
        let mut s = Dopri5::new(rhs, t0, y0, 1e-6);
        while s.t < t_end {
            let cap = t_end - s.t;
            match s.step(cap, 1e-10, 1e-12) {
                StepOutcome::Accepted(_) | StepOutcome::Rejected => {}
                StepOutcome::NonFinite => panic!("non-finite"),
            }
        }
        s.y
    }

    #[test]
    fn harmonic_oscillator_period() {
        let tau = 2.0 * std::f64::consts::PI;
        let y = integrate(|_t, y| [y[1], -y[0]], 0.0, [1.0, 0.0], tau);
        assert!((y[0] - 1.0).abs() < 1e-9, "cos(2pi) = {}", y[0]);
        assert!(y[1].abs() < 1e-9, "sin(2pi) = {}", y[1]);
    }

    #[test]
    fn exponential_growth() {
        let y = integrate(|_t, y| [y[0], y[1]], 0.0, [1.0, 1.0], 1.0);
        let e = std::f64::consts::E;
        assert!((y[0] - e).abs() < 1e-9);
    }

    #[test]
    fn dense_output_matches_midpoint() {
        // y' = y: compare interpolant against exp on a stored step
        let mut s = Dopri5::new(|_t, y: State| y, 0.0, [1.0, 1.0], 1e-3);
        let dense = loop {
            match s.step(0.5, 1e-12, 1e-14) {
                StepOutcome::Accepted(acc) if acc.h_used > 1e-4 => break acc.dense,
                StepOutcome::Accepted(_) | StepOutcome::Rejected => {}
                StepOutcome::NonFinite => panic!(),
            }
        };
        let tm = dense.t_old + 0.5 * dense.h;
        let v = dense.eval(tm);
        assert!((v[0] - tm.exp()).abs() < 1e-10 * tm.exp(), "{} vs {}", v[0], tm.exp());
    }
}
