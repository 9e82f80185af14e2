//! Crop-response surrogate: a full quadratic polynomial in yearly weather
//! features per crop and output channel, plus the seasonal evaporation
//! estimate used for replenishment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Number of weather features fed to the surrogate.
pub const N_FEATURES: usize = 7;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "precip_annual_mm",
    "precip_summer_mm",
    "precip_winter_mm",
    "solar_summer",
    "solar_winter",
    "tmax_mean_c",
    "tmin_mean_c",
];

/// Number of coefficients of a full quadratic in `f` variables.
pub const fn quadratic_len(f: usize) -> usize {
    1 + f + f * (f + 1) / 2
}

/// Yearly weather summary. Precipitation in mm, solar radiation as the
/// seasonal mean in MJ/m²/day, temperatures in °C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherYear<T> {
    pub year: i32,
    pub precip_annual: T,
    pub precip_summer: T,
    pub precip_winter: T,
    pub solar_summer: T,
    pub solar_winter: T,
    pub tmax_mean: T,
    pub tmin_mean: T,
}

impl<T: Scalar> WeatherYear<T> {
    pub fn features(&self) -> [T; N_FEATURES] {
        [
            self.precip_annual,
            self.precip_summer,
            self.precip_winter,
            self.solar_summer,
            self.solar_winter,
            self.tmax_mean,
            self.tmin_mean,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.features();
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("year {}: non-finite weather value", self.year)));
        }
        if self.precip_annual < T::zero() || self.precip_summer < T::zero() || self.precip_winter < T::zero() {
            return Err(Error::invalid(format!("year {}: negative precipitation", self.year)));
        }
        if self.precip_summer + self.precip_winter > self.precip_annual + T::lit(1e-6) {
            return Err(Error::invalid(format!(
                "year {}: seasonal precipitation exceeds the annual total",
                self.year
            )));
        }
        Ok(())
    }
}

/// The five per-crop, per-year outputs. Water quantities in mm, yield in
/// bushels per acre.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CropResponse<T> {
    pub transpiration: T,
    pub irrigation: T,
    pub evapotranspiration: T,
    pub season_precip: T,
    pub yield_bu_per_acre: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Transpiration,
    Irrigation,
    Evapotranspiration,
    SeasonPrecip,
    Yield,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::Transpiration,
        Channel::Irrigation,
        Channel::Evapotranspiration,
        Channel::SeasonPrecip,
        Channel::Yield,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Transpiration => "tr",
            Channel::Irrigation => "ir",
            Channel::Evapotranspiration => "et",
            Channel::SeasonPrecip => "p",
            Channel::Yield => "yield",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Channel::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl<T: Scalar> CropResponse<T> {
    pub fn get(&self, c: Channel) -> T {
        match c {
            Channel::Transpiration => self.transpiration,
            Channel::Irrigation => self.irrigation,
            Channel::Evapotranspiration => self.evapotranspiration,
            Channel::SeasonPrecip => self.season_precip,
            Channel::Yield => self.yield_bu_per_acre,
        }
    }

    pub fn set(&mut self, c: Channel, v: T) {
        match c {
            Channel::Transpiration => self.transpiration = v,
            Channel::Irrigation => self.irrigation = v,
            Channel::Evapotranspiration => self.evapotranspiration = v,
            Channel::SeasonPrecip => self.season_precip = v,
            Channel::Yield => self.yield_bu_per_acre = v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if Channel::ALL.iter().any(|&c| !(self.get(c) >= T::zero()) || !self.get(c).is_finite()) {
            return Err(Error::invalid("crop response fields must be finite and >= 0"));
        }
        if self.evapotranspiration < self.transpiration {
            return Err(Error::invalid("evapotranspiration must be >= transpiration"));
        }
        Ok(())
    }
}

/// Expands standardized features into the quadratic basis
/// `[1, z_0..z_{F-1}, z_i z_j (i <= j)]`.
pub fn quadratic_basis<T: Scalar>(z: &[T], out: &mut Vec<T>) {
    out.clear();
    out.push(T::one());
    out.extend_from_slice(z);
    for i in 0..z.len() {
        for j in i..z.len() {
            out.push(z[i] * z[j]);
        }
    }
}

/// Quadratic surrogate for one crop. Polynomials act on standardized
/// features `z = (f - center) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropSurrogate<T> {
    pub name: String,
    pub center: Vec<T>,
    pub scale: Vec<T>,
    /// Fitted feature range; evaluations outside it raise a domain warning.
    pub feature_min: Vec<T>,
    pub feature_max: Vec<T>,
    /// One coefficient vector per [`Channel`], in `Channel::ALL` order.
    pub channels: Vec<Vec<T>>,
}

impl<T: Scalar> CropSurrogate<T> {
    /// Surrogate whose coefficients act on the raw features directly and that
    /// never reports a domain warning.
    pub fn from_raw(name: impl Into<String>, channels: Vec<Vec<T>>) -> Result<Self> {
        let s = Self {
            name: name.into(),
            center: vec![T::zero(); N_FEATURES],
            scale: vec![T::one(); N_FEATURES],
            feature_min: vec![T::neg_infinity(); N_FEATURES],
            feature_max: vec![T::infinity(); N_FEATURES],
            channels,
        };
        s.validate()?;
        Ok(s)
    }

    /// Constant model: every channel is its intercept.
    pub fn constant(name: impl Into<String>, response: CropResponse<T>) -> Self {
        let len = quadratic_len(N_FEATURES);
        let channels = Channel::ALL
            .iter()
            .map(|&c| {
                let mut v = vec![T::zero(); len];
                v[0] = response.get(c);
                v
            })
            .collect();
        Self::from_raw(name, channels).expect("constant model is well formed")
    }

    pub fn validate(&self) -> Result<()> {
        let len = quadratic_len(N_FEATURES);
        if self.channels.len() != Channel::ALL.len() {
            return Err(Error::LengthMismatch {
                what: "surrogate channels",
                expected: Channel::ALL.len(),
                got: self.channels.len(),
            });
        }
        for c in &self.channels {
            if c.len() != len {
                return Err(Error::LengthMismatch {
                    what: "surrogate coefficients",
                    expected: len,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("crop `{}`: non-finite coefficient", self.name)));
            }
        }
        for v in [&self.center, &self.scale, &self.feature_min, &self.feature_max] {
            if v.len() != N_FEATURES {
                return Err(Error::LengthMismatch {
                    what: "surrogate feature vector",
                    expected: N_FEATURES,
                    got: v.len(),
                });
            }
        }
        if self.scale.iter().any(|s| !(*s > T::zero()) || !s.is_finite()) {
            return Err(Error::invalid(format!("crop `{}`: feature scales must be > 0", self.name)));
        }
        Ok(())
    }

    fn standardize(&self, f: &[T; N_FEATURES]) -> [T; N_FEATURES] {
        let mut z = [T::zero(); N_FEATURES];
        for i in 0..N_FEATURES {
            z[i] = (f[i] - self.center[i]) / self.scale[i];
        }
        z
    }

    pub fn in_domain(&self, f: &[T; N_FEATURES]) -> bool {
        (0..N_FEATURES).all(|i| f[i] >= self.feature_min[i] && f[i] <= self.feature_max[i])
    }

    /// Raw (unclamped) polynomial value of one channel.
    pub fn eval_channel(&self, c: Channel, f: &[T; N_FEATURES]) -> T {
        let z = self.standardize(f);
        let mut basis = Vec::with_capacity(quadratic_len(N_FEATURES));
        quadratic_basis(&z, &mut basis);
        dot(&self.channels[c.index()], &basis)
    }

    /// Coefficients re-expressed over the raw features, same basis order.
    pub fn raw_coefficients(&self, c: Channel) -> Vec<T> {
        let f = N_FEATURES;
        let q = &self.channels[c.index()];
        let u: Vec<T> = self.scale.iter().map(|s| T::one() / *s).collect();
        let v: Vec<T> = (0..f).map(|i| -self.center[i] / self.scale[i]).collect();
        let mut out = vec![T::zero(); quadratic_len(f)];
        out[0] = q[0];
        for i in 0..f {
            let b = q[1 + i];
            out[0] += b * v[i];
            out[1 + i] += b * u[i];
        }
        let mut idx = 1 + f;
        for i in 0..f {
            for j in i..f {
                let qij = q[idx];
                out[0] += qij * v[i] * v[j];
                out[1 + i] += qij * u[i] * v[j];
                out[1 + j] += qij * v[i] * u[j];
                out[idx] += qij * u[i] * u[j];
                idx += 1;
            }
        }
        out
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel<T> {
    pub crops: Vec<CropSurrogate<T>>,
}

impl<T: Scalar> SurrogateModel<T> {
    pub fn crop(&self, k: usize) -> Result<&CropSurrogate<T>> {
        self.crops.get(k).ok_or(Error::IndexOutOfRange {
            what: "crop",
            index: k,
            len: self.crops.len(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.crops.iter().try_for_each(|c| c.validate())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateEval<T> {
    pub response: CropResponse<T>,
    /// A channel evaluated below zero, or ET fell below TR, and was clamped.
    pub clamped: bool,
    /// Some feature lay outside the fitted range.
    pub out_of_domain: bool,
}

/// Evaluates crop `crop` of the surrogate for one weather year.
pub fn evaluate_surrogate<T: Scalar>(
    model: &SurrogateModel<T>,
    weather: &WeatherYear<T>,
    crop: usize,
) -> Result<SurrogateEval<T>> {
    let cs = model.crop(crop)?;
    let f = weather.features();
    let z = cs.standardize(&f);
    let mut basis = Vec::with_capacity(quadratic_len(N_FEATURES));
    quadratic_basis(&z, &mut basis);
    let mut response = CropResponse::default();
    let mut clamped = false;
    for c in Channel::ALL {
        let v = dot(&cs.channels[c.index()], &basis);
        if v < T::zero() {
            clamped = true;
            response.set(c, T::zero());
        } else {
            response.set(c, v);
        }
    }
    if response.evapotranspiration < response.transpiration {
        clamped = true;
        response.evapotranspiration = response.transpiration;
    }
    Ok(SurrogateEval {
        response,
        clamped,
        out_of_domain: !cs.in_domain(&f),
    })
}

/// One training sample: weather features and the observed crop response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRow<T> {
    pub features: [T; N_FEATURES],
    pub response: CropResponse<T>,
}

#[derive(Debug, Clone)]
pub struct SurrogateFit<T> {
    pub surrogate: CropSurrogate<T>,
    /// Root-mean-square training residual per channel.
    pub rmse: [T; 5],
    /// The expanded design was rank deficient and ridge regression was used.
    pub ridge_fallback: bool,
}

pub const RIDGE_LAMBDA: f64 = 1e-8;

/// Fits the quadratic surrogate of one crop by per-channel least squares on
/// standardized features.
pub fn fit_surrogate<T: Scalar>(rows: &[TrainingRow<T>], name: &str) -> Result<SurrogateFit<T>> {
    let n_params = quadratic_len(N_FEATURES);
    if rows.len() < n_params {
        return Err(Error::invalid(format!(
            "crop `{name}`: {} training rows, need at least {n_params}",
            rows.len()
        )));
    }
    if rows.iter().any(|r| r.features.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid(format!("crop `{name}`: non-finite training feature")));
    }
    let n = T::from_usize_lossy(rows.len());
    let mut center = vec![T::zero(); N_FEATURES];
    let mut scale = vec![T::zero(); N_FEATURES];
    let mut fmin = vec![T::infinity(); N_FEATURES];
    let mut fmax = vec![T::neg_infinity(); N_FEATURES];
    for j in 0..N_FEATURES {
        let mean = rows.iter().map(|r| r.features[j]).sum::<T>() / n;
        let var = rows.iter().map(|r| (r.features[j] - mean).powi(2)).sum::<T>() / n;
        center[j] = mean;
        scale[j] = if var > T::zero() { var.sqrt() } else { T::one() };
        for r in rows {
            fmin[j] = fmin[j].min(r.features[j]);
            fmax[j] = fmax[j].max(r.features[j]);
        }
    }
    let mut surrogate = CropSurrogate {
        name: name.to_string(),
        center,
        scale,
        feature_min: fmin,
        feature_max: fmax,
        channels: Vec::new(),
    };
    let mut design = Vec::with_capacity(rows.len() * n_params);
    let mut basis = Vec::with_capacity(n_params);
    for r in rows {
        let z = surrogate.standardize(&r.features);
        quadratic_basis(&z, &mut basis);
        design.extend_from_slice(&basis);
    }
    let mut rmse = [T::zero(); 5];
    let mut ridge_fallback = false;
    for c in Channel::ALL {
        let y: Vec<T> = rows.iter().map(|r| r.response.get(c)).collect();
        let sol = linalg::lstsq(&design, rows.len(), n_params, &y, T::lit(RIDGE_LAMBDA))
            .ok_or_else(|| Error::invalid("least-squares system malformed"))?;
        ridge_fallback |= sol.ridge;
        let sse: T = design
            .chunks(n_params)
            .zip(&y)
            .map(|(row, yi)| (dot(row, &sol.coeffs) - *yi).powi(2))
            .sum();
        rmse[c.index()] = (sse / n).sqrt();
        surrogate.channels.push(sol.coeffs);
    }
    Ok(SurrogateFit {
        surrogate,
        rmse,
        ridge_fallback,
    })
}

/// Annual evaporation (mm) assuming the in-season share of evaporation equals
/// the in-season share of precipitation.
pub fn estimate_evaporation<T: Scalar>(responses: &[CropResponse<T>], precip_annual: T) -> Result<T> {
    let season_precip: T = responses.iter().map(|r| r.season_precip).sum();
    if !(season_precip > T::zero()) {
        return Err(Error::invalid("total in-season precipitation is zero; evaporation ratio undefined"));
    }
    let residual: T = responses.iter().map(|r| r.evapotranspiration - r.transpiration).sum();
    Ok(precip_annual * residual / season_precip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn weather(vals: [f64; N_FEATURES]) -> WeatherYear<f64> {
        WeatherYear {
            year: 2000,
            precip_annual: vals[0],
            precip_summer: vals[1],
            precip_winter: vals[2],
            solar_summer: vals[3],
            solar_winter: vals[4],
            tmax_mean: vals[5],
            tmin_mean: vals[6],
        }
    }

    fn random_features(rng: &mut ChaCha8Rng) -> [f64; N_FEATURES] {
        [
            rng.gen_range(300.0..700.0),
            rng.gen_range(150.0..400.0),
            rng.gen_range(50.0..180.0),
            rng.gen_range(18.0..25.0),
            rng.gen_range(8.0..14.0),
            rng.gen_range(18.0..23.0),
            rng.gen_range(4.0..9.0),
        ]
    }

    /// Direct evaluation of a raw-feature quadratic, independent of the
    /// standardized machinery.
    fn poly_raw(coeffs: &[f64], f: &[f64; N_FEATURES]) -> f64 {
        let mut v = coeffs[0];
        for i in 0..N_FEATURES {
            v += coeffs[1 + i] * f[i];
        }
        let mut idx = 1 + N_FEATURES;
        for i in 0..N_FEATURES {
            for j in i..N_FEATURES {
                v += coeffs[idx] * f[i] * f[j];
                idx += 1;
            }
        }
        v
    }

    fn generator(rng: &mut ChaCha8Rng, base: f64) -> Vec<f64> {
        let mut c = vec![0.0; quadratic_len(N_FEATURES)];
        c[0] = base;
        for v in c.iter_mut().skip(1).take(N_FEATURES) {
            *v = rng.gen_range(-0.5..0.5);
        }
        for v in c.iter_mut().skip(1 + N_FEATURES) {
            *v = rng.gen_range(-1e-3..1e-3);
        }
        c
    }

    #[test]
    fn constant_model_returns_intercepts() {
        let r = CropResponse {
            transpiration: 300.0,
            irrigation: 250.0,
            evapotranspiration: 400.0,
            season_precip: 200.0,
            yield_bu_per_acre: 150.0,
        };
        let model = SurrogateModel {
            crops: vec![CropSurrogate::constant("corn", r)],
        };
        for f in [[0.0; 7], [500.0, 300.0, 100.0, 20.0, 10.0, 21.0, 6.0]] {
            let e = evaluate_surrogate(&model, &weather(f), 0).unwrap();
            assert_eq!(e.response, r);
            assert!(!e.clamped && !e.out_of_domain);
        }
        assert!(matches!(
            evaluate_surrogate(&model, &weather([0.0; 7]), 1),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn negative_channel_is_clamped() {
        let r = CropResponse {
            transpiration: 300.0,
            irrigation: -5.0,
            evapotranspiration: 400.0,
            season_precip: 200.0,
            yield_bu_per_acre: 150.0,
        };
        let model = SurrogateModel {
            crops: vec![CropSurrogate::constant("corn", r)],
        };
        let e = evaluate_surrogate(&model, &weather([1.0; 7]), 0).unwrap();
        assert_eq!(e.response.irrigation, 0.0);
        assert!(e.clamped);
    }

    #[test]
    fn et_raised_to_tr() {
        let r = CropResponse {
            transpiration: 300.0,
            irrigation: 10.0,
            evapotranspiration: 250.0,
            season_precip: 200.0,
            yield_bu_per_acre: 150.0,
        };
        let model = SurrogateModel {
            crops: vec![CropSurrogate::constant("corn", r)],
        };
        let e = evaluate_surrogate(&model, &weather([1.0; 7]), 0).unwrap();
        assert_eq!(e.response.evapotranspiration, 300.0);
        assert!(e.clamped);
    }

    #[test]
    fn fit_recovers_generating_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gens: Vec<Vec<f64>> = [300.0, 250.0, 400.0, 200.0, 150.0]
            .iter()
            .map(|&b| generator(&mut rng, b))
            .collect();
        let n_rows = 2 * quadratic_len(N_FEATURES);
        let rows: Vec<TrainingRow<f64>> = (0..n_rows)
            .map(|_| {
                let f = random_features(&mut rng);
                let mut response = CropResponse::default();
                for c in Channel::ALL {
                    response.set(c, poly_raw(&gens[c.index()], &f));
                }
                TrainingRow { features: f, response }
            })
            .collect();
        let fit = fit_surrogate(&rows, "corn").unwrap();
        assert!(!fit.ridge_fallback);
        for c in Channel::ALL {
            assert!(fit.rmse[c.index()] <= 1e-8, "rmse {:?}", fit.rmse);
            let raw = fit.surrogate.raw_coefficients(c);
            for (a, b) in raw.iter().zip(&gens[c.index()]) {
                assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
            }
        }
        // evaluation at fresh points equals the generator
        for _ in 0..20 {
            let f = random_features(&mut rng);
            for c in Channel::ALL {
                let got = fit.surrogate.eval_channel(c, &f);
                let want = poly_raw(&gens[c.index()], &f);
                assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0));
            }
        }
        // training inputs are reproduced
        for r in &rows {
            for c in Channel::ALL {
                assert!((fit.surrogate.eval_channel(c, &r.features) - r.response.get(c)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn constant_column_gives_intercept_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<TrainingRow<f64>> = (0..80)
            .map(|_| TrainingRow {
                features: random_features(&mut rng),
                response: CropResponse {
                    transpiration: 42.0,
                    irrigation: 42.0,
                    evapotranspiration: 42.0,
                    season_precip: 42.0,
                    yield_bu_per_acre: 42.0,
                },
            })
            .collect();
        let fit = fit_surrogate(&rows, "sorghum").unwrap();
        for c in Channel::ALL {
            let raw = fit.surrogate.raw_coefficients(c);
            assert!((raw[0] - 42.0).abs() < 1e-9);
            let std = &fit.surrogate.channels[c.index()];
            assert!((std[0] - 42.0).abs() < 1e-9);
            assert!(std[1..].iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn duplicated_rows_fit_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<TrainingRow<f64>> = (0..50)
            .map(|_| {
                let f = random_features(&mut rng);
                let noise: f64 = rng.gen_range(-5.0..5.0);
                TrainingRow {
                    features: f,
                    response: CropResponse {
                        transpiration: 0.3 * f[1] + noise,
                        irrigation: 400.0 - 0.5 * f[1] + noise,
                        evapotranspiration: 0.6 * f[1] + 50.0,
                        season_precip: 0.9 * f[1],
                        yield_bu_per_acre: 150.0 + f[5] - noise,
                    },
                }
            })
            .collect();
        let doubled: Vec<_> = rows.iter().chain(rows.iter()).copied().collect();
        let a = fit_surrogate(&rows, "x").unwrap();
        let b = fit_surrogate(&doubled, "x").unwrap();
        for c in Channel::ALL {
            for (p, q) in a.surrogate.channels[c.index()].iter().zip(&b.surrogate.channels[c.index()]) {
                assert!((p - q).abs() < 1e-7 * p.abs().max(1.0), "{p} vs {q}");
            }
            assert!((a.rmse[c.index()] - b.rmse[c.index()]).abs() < 1e-8);
        }
    }

    #[test]
    fn fit_errors_and_ridge_fallback() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let few: Vec<_> = (0..10)
            .map(|_| TrainingRow {
                features: random_features(&mut rng),
                response: CropResponse::default(),
            })
            .collect();
        assert!(fit_surrogate(&few, "x").is_err());

        // a feature that is constant makes the expanded design rank deficient
        let rows: Vec<_> = (0..60)
            .map(|_| {
                let mut f = random_features(&mut rng);
                f[4] = 10.0;
                TrainingRow {
                    features: f,
                    response: CropResponse {
                        transpiration: 1.0 + f[0] * 0.01,
                        ..CropResponse::default()
                    },
                }
            })
            .collect();
        let fit = fit_surrogate(&rows, "x").unwrap();
        assert!(fit.ridge_fallback);
        assert!(fit.rmse[0] < 1e-5);
    }

    #[test]
    fn domain_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<_> = (0..40)
            .map(|_| TrainingRow {
                features: random_features(&mut rng),
                response: CropResponse {
                    transpiration: 1.0,
                    irrigation: 1.0,
                    evapotranspiration: 2.0,
                    season_precip: 1.0,
                    yield_bu_per_acre: 1.0,
                },
            })
            .collect();
        let fit = fit_surrogate(&rows, "x").unwrap();
        let model = SurrogateModel {
            crops: vec![fit.surrogate],
        };
        let inside = weather(rows[0].features);
        assert!(!evaluate_surrogate(&model, &inside, 0).unwrap().out_of_domain);
        let mut outside = rows[0].features;
        outside[0] = 5000.0;
        assert!(evaluate_surrogate(&model, &weather(outside), 0).unwrap().out_of_domain);
    }

    fn resp(tr: f64, et: f64, p: f64) -> CropResponse<f64> {
        CropResponse {
            transpiration: tr,
            irrigation: 0.0,
            evapotranspiration: et,
            season_precip: p,
            yield_bu_per_acre: 0.0,
        }
    }

    #[test]
    fn evaporation_examples() {
        let same = [resp(100.0, 100.0, 50.0), resp(80.0, 80.0, 60.0)];
        assert_eq!(estimate_evaporation(&same, 500.0).unwrap(), 0.0);

        // sum P_k = 250, sum (ET - TR) = 100, P = 500 -> E = 200
        let r = [resp(100.0, 160.0, 150.0), resp(50.0, 90.0, 100.0)];
        assert!((estimate_evaporation(&r, 500.0).unwrap() - 200.0).abs() < 1e-12);
        assert!((estimate_evaporation(&r, 1000.0).unwrap() - 400.0).abs() < 1e-12);

        let dry = [resp(100.0, 160.0, 0.0)];
        assert!(estimate_evaporation(&dry, 500.0).is_err());
    }

    #[test]
    fn replenishment_from_evaporation_fixture() {
        // P = 482.6 mm; responses give sum(ET - TR) = 180, sum P_k = 300
        let r = [resp(300.0, 400.0, 200.0), resp(120.0, 200.0, 100.0)];
        let e_mm = estimate_evaporation(&r, 482.6).unwrap();
        let rep = crate::hydro::net_replenishment(0.4826, e_mm / 1000.0).unwrap();
        let hand = 0.4826 - 0.4826 * 180.0 / 300.0;
        assert!((rep - hand).abs() < 1e-12);
    }

    #[test]
    fn weather_validation() {
        let ok = weather([500.0, 300.0, 150.0, 20.0, 10.0, 20.0, 5.0]);
        assert!(ok.validate().is_ok());
        let neg = weather([500.0, -1.0, 150.0, 20.0, 10.0, 20.0, 5.0]);
        assert!(neg.validate().is_err());
        let over = weather([400.0, 300.0, 150.0, 20.0, 10.0, 20.0, 5.0]);
        assert!(over.validate().is_err());
    }
}
