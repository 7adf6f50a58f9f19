use num_bigint::BigInt;
use proptest::prelude::*;
use wht_core::model::{Color, ModelParams};
use wht_core::oracle::{tables_for, wgn_oracle, Shape};
use wht_core::ring::{Ring, Q};
use wht_core::spectral::solve_system;

fn rational() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=4).prop_filter("nonzero", |(n, _)| *n != 0).prop_map(|(n, d)| Q::new(BigInt::from(n), BigInt::from(d)))
}

/// Up to two colors per side with distinct parameters, and `p`, `q` of length two.
fn model() -> impl Strategy<Value = ModelParams<Q>> {
    (
        prop::collection::vec(rational(), 0..=2),
        prop::collection::vec(rational(), 0..=1),
        prop::collection::vec(rational(), 2),
        prop::collection::vec(rational(), 2),
    )
        .prop_filter("at least one color, distinct parameters", |(num, den, _, _)| {
            let all: Vec<&Q> = num.iter().chain(den).collect();
            !all.is_empty() && all.iter().enumerate().all(|(i, a)| all[..i].iter().all(|b| a != b && **a != -(*b).clone()))
        })
        .prop_map(|(num, den, p, q)| ModelParams::new(num, den, p, q))
}

fn shape(p: &ModelParams<Q>) -> Shape {
    Shape { m: p.m() as usize, r: p.r() as usize, exp: p.u_exp.is_some() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn disk_and_cylinder_match_enumeration(params in model()) {
        let order = 3;
        let tables = tables_for(shape(&params), order, 0).unwrap();
        let sd = match solve_system(&params, order) {
            Ok(sd) => sd,
            // degenerate leading data is reported, not solved
            Err(_) => { prop_assume!(false); unreachable!() }
        };
        prop_assert_eq!(sd.w01().unwrap(), wgn_oracle(&tables, &params, 0, 1, order).unwrap());
        prop_assert_eq!(sd.w02().unwrap(), wgn_oracle(&tables, &params, 0, 2, order).unwrap());
    }

    #[test]
    fn artificial_pole_pairs_cancel(params in model(), v in rational()) {
        let order = 4;
        prop_assume!(params.num.iter().chain(&params.den).all(|c| c.u != v && c.u != -v.clone()));
        let Ok(sd) = solve_system(&params, order) else { prop_assume!(false); unreachable!() };
        let mut padded = params.clone();
        padded.num.push(Color { u: v.clone(), mult: 1 });
        padded.den.push(Color { u: v, mult: 1 });
        let sp = solve_system(&padded, order).unwrap();
        prop_assert_eq!(sp.h().unwrap(), sd.h().unwrap());
        prop_assert_eq!(sp.w01().unwrap(), sd.w01().unwrap());
        prop_assert_eq!(sp.w02().unwrap(), sd.w02().unwrap());
    }

    #[test]
    fn zero_color_is_invisible(params in model()) {
        let order = 4;
        let Ok(sd) = solve_system(&params, order) else { prop_assume!(false); unreachable!() };
        let mut padded = params.clone();
        padded.num.push(Color { u: Q::zero(), mult: 1 });
        let sp = solve_system(&padded, order).unwrap();
        prop_assert_eq!(sp.phi(order).unwrap(), sd.phi(order).unwrap());
        prop_assert_eq!(sp.w01().unwrap(), sd.w01().unwrap());
    }
}
