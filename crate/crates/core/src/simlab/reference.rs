//! Published rejection rates for the two simulation tables at level 0.05.

use serde::Serialize;

use crate::medtests::Method;

/// One published cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum RefValue {
    Value(f64),
    /// Printed as "<x".
    Below(f64),
    /// Not reported.
    Absent,
}

use RefValue::{Absent, Below, Value};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefRow {
    pub beta: f64,
    pub gamma: f64,
    pub n: usize,
    /// Sobel, maxP, product-normal, S, PS, ASQ.
    pub rates: [RefValue; 6],
    /// Relative efficiency against maxP for Sobel, S, PS, ASQ (power table only).
    pub efficiency: Option<[f64; 4]>,
}

impl RefRow {
    pub fn rate(&self, method: Method) -> RefValue {
        let i = Method::ALL.iter().position(|&m| m == method).expect("method listed");
        self.rates[i]
    }

    pub fn efficiency(&self, method: Method) -> Option<f64> {
        let e = self.efficiency?;
        match method {
            Method::Sobel => Some(e[0]),
            Method::S => Some(e[1]),
            Method::Ps => Some(e[2]),
            Method::Asq => Some(e[3]),
            _ => None,
        }
    }
}

const fn t1(beta: f64, gamma: f64, n: usize, rates: [RefValue; 6]) -> RefRow {
    RefRow { beta, gamma, n, rates, efficiency: None }
}

const fn t2(beta: f64, gamma: f64, n: usize, p: [RefValue; 5], e: [f64; 4]) -> RefRow {
    RefRow { beta, gamma, n, rates: [p[0], p[1], Absent, p[2], p[3], p[4]], efficiency: Some(e) }
}

/// Type I error rates: Sobel, maxP, product-normal, S, PS, ASQ.
pub const TYPE_I: [RefRow; 27] = [
    t1(0.0, 0.0, 100, [Below(0.001), Value(0.003), Value(0.054), Value(0.053), Value(0.026), Value(0.025)]),
    t1(0.0, 0.0, 500, [Below(0.001), Value(0.003), Value(0.048), Value(0.049), Value(0.025), Value(0.024)]),
    t1(0.0, 0.0, 1000, [Below(0.001), Value(0.003), Value(0.051), Value(0.049), Value(0.024), Value(0.024)]),
    t1(0.0, 0.1, 100, [Value(0.001), Value(0.008), Value(0.110), Value(0.049), Value(0.033), Value(0.032)]),
    t1(0.0, 0.1, 500, [Value(0.005), Value(0.028), Value(0.303), Value(0.050), Value(0.047), Value(0.047)]),
    t1(0.0, 0.1, 1000, [Value(0.012), Value(0.041), Value(0.459), Value(0.047), Value(0.047), Value(0.046)]),
    t1(0.0, 0.2, 100, [Value(0.004), Value(0.023), Value(0.261), Value(0.047), Value(0.042), Value(0.042)]),
    t1(0.0, 0.2, 500, [Value(0.029), Value(0.051), Value(0.613), Value(0.051), Value(0.051), Value(0.051)]),
    t1(0.0, 0.2, 1000, [Value(0.038), Value(0.048), Value(0.723), Value(0.048), Value(0.048), Value(0.048)]),
    t1(0.0, 0.3, 100, [Value(0.013), Value(0.042), Value(0.435), Value(0.051), Value(0.051), Value(0.050)]),
    t1(0.0, 0.3, 500, [Value(0.041), Value(0.052), Value(0.740), Value(0.052), Value(0.052), Value(0.052)]),
    t1(0.0, 0.3, 1000, [Value(0.044), Value(0.049), Value(0.814), Value(0.049), Value(0.049), Value(0.049)]),
    t1(0.0, 0.4, 100, [Value(0.023), Value(0.048), Value(0.564), Value(0.050), Value(0.050), Value(0.050)]),
    t1(0.0, 0.4, 500, [Value(0.045), Value(0.051), Value(0.801), Value(0.051), Value(0.051), Value(0.051)]),
    t1(0.0, 0.4, 1000, [Value(0.045), Value(0.048), Value(0.861), Value(0.048), Value(0.048), Value(0.048)]),
    t1(0.1, 0.0, 100, [Below(0.001), Value(0.004), Value(0.070), Value(0.049), Value(0.026), Value(0.026)]),
    t1(0.1, 0.0, 500, [Value(0.001), Value(0.009), Value(0.126), Value(0.050), Value(0.035), Value(0.035)]),
    t1(0.1, 0.0, 1000, [Value(0.002), Value(0.017), Value(0.191), Value(0.049), Value(0.042), Value(0.041)]),
    t1(0.2, 0.0, 100, [Value(0.001), Value(0.009), Value(0.116), Value(0.053), Value(0.035), Value(0.035)]),
    t1(0.2, 0.0, 500, [Value(0.006), Value(0.031), Value(0.307), Value(0.048), Value(0.046), Value(0.047)]),
    t1(0.2, 0.0, 1000, [Value(0.013), Value(0.042), Value(0.457), Value(0.048), Value(0.048), Value(0.047)]),
    t1(0.3, 0.0, 100, [Value(0.002), Value(0.016), Value(0.187), Value(0.048), Value(0.039), Value(0.038)]),
    t1(0.3, 0.0, 500, [Value(0.016), Value(0.046), Value(0.488), Value(0.048), Value(0.048), Value(0.049)]),
    t1(0.3, 0.0, 1000, [Value(0.030), Value(0.050), Value(0.626), Value(0.050), Value(0.050), Value(0.050)]),
    t1(0.4, 0.0, 100, [Value(0.005), Value(0.025), Value(0.268), Value(0.049), Value(0.045), Value(0.044)]),
    t1(0.4, 0.0, 500, [Value(0.028), Value(0.051), Value(0.615), Value(0.051), Value(0.052), Value(0.052)]),
    t1(0.4, 0.0, 1000, [Value(0.039), Value(0.049), Value(0.724), Value(0.049), Value(0.049), Value(0.049)]),
];

/// Power: Sobel, maxP, S, PS, ASQ; efficiency: Sobel, S, PS, ASQ relative to maxP.
pub const POWER: [RefRow; 27] = [
    t2(0.05, 0.03, 100, [Below(0.001), Value(0.003), Value(0.052), Value(0.028), Value(0.026)], [0.04, 20.02, 10.65, 9.85]),
    t2(0.05, 0.03, 500, [Value(0.001), Value(0.010), Value(0.054), Value(0.037), Value(0.035)], [0.07, 5.70, 3.87, 3.73]),
    t2(0.05, 0.03, 1000, [Value(0.002), Value(0.019), Value(0.064), Value(0.052), Value(0.050)], [0.10, 3.27, 2.67, 2.59]),
    t2(0.1, 0.1, 100, [Value(0.001), Value(0.011), Value(0.053), Value(0.039), Value(0.038)], [0.10, 4.69, 3.44, 3.38]),
    t2(0.1, 0.1, 500, [Value(0.033), Value(0.122), Value(0.148), Value(0.149), Value(0.148)], [0.27, 1.21, 1.21, 1.21]),
    t2(0.1, 0.1, 1000, [Value(0.152), Value(0.307), Value(0.317), Value(0.320), Value(0.317)], [0.49, 1.03, 1.04, 1.03]),
    t2(0.1, 0.2, 100, [Value(0.007), Value(0.037), Value(0.065), Value(0.061), Value(0.061)], [0.18, 1.73, 1.64, 1.64]),
    t2(0.1, 0.2, 500, [Value(0.132), Value(0.198), Value(0.198), Value(0.198), Value(0.198)], [0.67, 1.00, 1.00, 1.00]),
    t2(0.1, 0.2, 1000, [Value(0.311), Value(0.351), Value(0.351), Value(0.351), Value(0.351)], [0.89, 1.00, 1.00, 1.00]),
    t2(0.1, 0.3, 100, [Value(0.023), Value(0.066), Value(0.075), Value(0.075), Value(0.074)], [0.35, 1.14, 1.14, 1.13]),
    t2(0.1, 0.3, 500, [Value(0.175), Value(0.202), Value(0.202), Value(0.202), Value(0.202)], [0.87, 1.00, 1.00, 1.00]),
    t2(0.1, 0.3, 1000, [Value(0.327), Value(0.342), Value(0.342), Value(0.342), Value(0.342)], [0.96, 1.00, 1.00, 1.00]),
    t2(0.1, 0.4, 100, [Value(0.041), Value(0.076), Value(0.078), Value(0.078), Value(0.078)], [0.54, 1.02, 1.02, 1.02]),
    t2(0.1, 0.4, 500, [Value(0.190), Value(0.202), Value(0.202), Value(0.202), Value(0.202)], [0.94, 1.00, 1.00, 1.00]),
    t2(0.1, 0.4, 1000, [Value(0.337), Value(0.345), Value(0.345), Value(0.345), Value(0.345)], [0.98, 1.00, 1.00, 1.00]),
    t2(0.4, 0.1, 100, [Value(0.020), Value(0.083), Value(0.112), Value(0.111), Value(0.109)], [0.24, 1.36, 1.35, 1.32]),
    t2(0.4, 0.1, 500, [Value(0.485), Value(0.595), Value(0.595), Value(0.596), Value(0.596)], [0.82, 1.00, 1.00, 1.00]),
    t2(0.4, 0.1, 1000, [Value(0.860), Value(0.883), Value(0.883), Value(0.883), Value(0.883)], [0.97, 1.00, 1.00, 1.00]),
    t2(0.4, 0.2, 100, [Value(0.093), Value(0.242), Value(0.269), Value(0.274), Value(0.270)], [0.38, 1.11, 1.13, 1.11]),
    t2(0.4, 0.2, 500, [Value(0.971), Value(0.987), Value(0.987), Value(0.987), Value(0.987)], [0.98, 1.00, 1.00, 1.00]),
    t2(0.4, 0.2, 1000, [Value(1.000), Value(1.000), Value(1.000), Value(1.000), Value(1.000)], [1.00, 1.00, 1.00, 1.00]),
    t2(0.4, 0.3, 100, [Value(0.225), Value(0.414), Value(0.425), Value(0.428), Value(0.426)], [0.54, 1.03, 1.03, 1.03]),
    t2(0.4, 0.3, 500, [Value(0.992), Value(0.994), Value(0.994), Value(0.994), Value(0.994)], [1.00, 1.00, 1.00, 1.00]),
    t2(0.4, 0.3, 1000, [Value(1.000), Value(1.000), Value(1.000), Value(1.000), Value(1.000)], [1.00, 1.00, 1.00, 1.00]),
    t2(0.4, 0.4, 100, [Value(0.348), Value(0.485), Value(0.487), Value(0.488), Value(0.488)], [0.72, 1.00, 1.01, 1.00]),
    t2(0.4, 0.4, 500, [Value(0.993), Value(0.994), Value(0.994), Value(0.994), Value(0.994)], [1.00, 1.00, 1.00, 1.00]),
    t2(0.4, 0.4, 1000, [Value(1.000), Value(1.000), Value(1.000), Value(1.000), Value(1.000)], [1.00, 1.00, 1.00, 1.00]),
];
