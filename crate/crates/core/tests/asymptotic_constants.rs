use cfou::asymptotics::{
    const_cb, const_cb_abc, const_d, const_sigma2, d_closed_form, limiting_covariance,
    six_region_integrals, Pairing, Route,
};
use cfou::ou_sim::ModelParams;
use statrs::function::gamma::gamma;

fn params(h: f64, lambda: f64, omega: f64, a: f64) -> ModelParams {
    ModelParams::new(lambda, omega, a, h).unwrap()
}

#[test]
fn brownian_limit_of_d() {
    for lambda in [0.5, 1.0, 3.0] {
        for omega in [0.0, 1.5] {
            let p = params(0.5 + 1e-6, lambda, omega, 1.0);
            let v = p.h.alpha() * d_closed_form(&p).re;
            let target = 1.0 / (2.0 * lambda);
            assert!((v - target).abs() < 1e-4 * target, "{v} vs {target}");
        }
    }
}

#[test]
fn d_is_real_for_every_omega() {
    for omega in [-3.0, -0.2, 0.0, 0.7, 5.0] {
        let d = d_closed_form(&params(0.63, 1.3, omega, 1.0));
        assert!(d.im.abs() <= 1e-12 * d.norm());
        assert!(d.re > 0.0);
    }
}

#[test]
fn omega_flip_symmetry() {
    let (h, lambda, omega) = (0.62, 0.9, 1.3);
    let plus = params(h, lambda, omega, 1.0);
    let minus = params(h, lambda, -omega, 1.0);
    let s_plus = const_sigma2(&plus).unwrap().value.re;
    let s_minus = const_sigma2(&minus).unwrap().value.re;
    assert!((s_plus - s_minus).abs() < 1e-9 * s_plus);
    let c_plus = const_cb(&plus).unwrap().value;
    let c_minus = const_cb(&minus).unwrap().value;
    assert!((c_plus - c_minus.conj()).norm() < 1e-9 * c_plus.norm());
    assert!(c_plus.im.abs() > 1e-3);
}

#[test]
fn real_drift_has_no_b() {
    let c = limiting_covariance(&params(0.6, 1.0, 0.0, 1.0)).unwrap();
    assert!(c.b.abs() < 1e-12 * c.c.abs());
    assert!(c.cov[0][1].abs() < 1e-12);
    let r = const_cb_abc(&params(0.6, 1.0, 0.0, 1.0)).unwrap();
    assert_eq!(r.route, Route::ExponentialAbc);
    assert!(r.value.im.abs() < 1e-12 * r.value.re.abs());
}

#[test]
fn covariance_is_psd_on_a_scan() {
    for &h in &[0.52, 0.58, 0.64, 0.7, 0.74] {
        for &lambda in &[0.3, 1.0, 4.0] {
            for &omega in &[0.0, 0.4, -2.0, 6.0] {
                let c = limiting_covariance(&params(h, lambda, omega, 1.0)).unwrap();
                assert!(c.sigma2 > 0.0 && c.d > 0.0);
                assert!(c.sigma2 >= c.c.hypot(c.b), "h={h} λ={lambda} ω={omega}: {c:?}");
                assert!(c.is_psd());
            }
        }
    }
}

#[test]
fn separated_regions_approach_closed_form() {
    let p = params(0.6, 1.0, 0.5, 1.0);
    let h = p.h.value();
    let g = p.gamma();
    let target = p.h.alpha().powi(2) * gamma(2.0 * h - 1.0).powi(2)
        / (2.0 * p.lambda * g.norm().powf(4.0 * h - 2.0));
    let gaps: Vec<f64> = [50.0, 100.0, 200.0]
        .iter()
        .map(|&t| {
            let r = six_region_integrals(&p, t, Pairing::Modulus).unwrap();
            assert_eq!(r.values[0], r.values[1]);
            assert!((r.values[2] - r.values[3]).norm() < 1e-9 * r.values[2].norm());
            (r.values[2].re - target).abs()
        })
        .collect();
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
    assert!(gaps[2] < 0.02 * target);
}

#[test]
fn time_rescaling_exponents() {
    let (h, lambda, omega, a) = (0.64, 0.8, 0.6, 1.3);
    let base = limiting_covariance(&params(h, lambda, omega, a)).unwrap();
    for kappa in [0.5, 3.0] {
        let p = params(h, kappa * lambda, kappa * omega, a * kappa.powf(2.0 * h));
        let c = limiting_covariance(&p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let s = kappa * base.cov[i][j];
                assert!((c.cov[i][j] - s).abs() < 1e-8 * s.abs().max(1e-300));
                let sn = kappa.powf(1.0 - 2.0 * h) * base.cov_nominal[i][j];
                assert!((c.cov_nominal[i][j] - sn).abs() < 1e-8 * sn.abs());
            }
        }
    }
}

#[test]
fn regression_baseline() {
    let c = limiting_covariance(&params(0.6, 1.0, 0.5, 1.0)).unwrap();
    let expect = [
        [1.4297703237882067, -0.24388106589523434],
        [-0.24388106589523434, 0.7869594715486841],
    ];
    for i in 0..2 {
        for j in 0..2 {
            assert!((c.cov[i][j] - expect[i][j]).abs() < 1e-8 * expect[i][j].abs(), "{:?}", c.cov);
        }
    }
    assert!(c.is_psd());
    assert!(c.cov[0][0] * c.cov[1][1] > c.cov[0][1].powi(2));
}

#[test]
fn brownian_special_case() {
    let p = params(0.5, 2.0, 0.7, 1.0);
    let c = limiting_covariance(&p).unwrap();
    assert_eq!(c.cov_nominal, [[0.5, 0.0], [0.0, 0.5]]);
    assert_eq!(c.cov, [[2.0, 0.0], [0.0, 2.0]]);
}

#[test]
fn out_of_range_hurst_rejected() {
    for h in [0.5, 0.75, 0.8] {
        let p = params(h, 1.0, 0.0, 1.0);
        assert!(const_sigma2(&p).is_err());
        assert!(const_cb(&p).is_err());
    }
    assert!(const_d(&params(0.5, 1.0, 0.0, 1.0)).is_err());
    let high = const_d(&params(0.85, 1.0, 0.7, 1.0)).unwrap();
    assert!(high.relative_gap() < 1e-6);
    assert!(limiting_covariance(&params(0.8, 1.0, 0.0, 1.0)).is_err());
}
