use onsager_core::exactmath::scalar::{frac, int};
use onsager_core::exactmath::UniPoly;
use onsager_core::isingpoly::{assemble_f, assemble_f_from, GridPolicy, ZMeasurements};

fn times_n(inner: &[i64], den: i64) -> UniPoly {
    let mut c = vec![0];
    c.extend_from_slice(inner);
    UniPoly::from_ints(&c).scale(&frac(1, den))
}

#[test]
fn polynomials_through_order_twenty() {
    let f = assemble_f(20, &GridPolicy::for_order(20)).unwrap();
    let expected = [
        UniPoly::zero(),
        times_n(&[1], 1),
        times_n(&[2], 1),
        times_n(&[9, 1], 2),
        times_n(&[12, 2], 1),
        times_n(&[224, 39, 1], 6),
        times_n(&[130, 21, 1], 1),
        times_n(&[11766, 1715, 102, 1], 24),
        times_n(&[5876, 776, 49, 1], 3),
        times_n(&[980904, 118830, 7415, 210, 1], 120),
    ];
    for (p, want) in f.polynomials.iter().zip(&expected) {
        assert_eq!(&p.poly, want, "p_{}", p.edge_count);
    }
    let a = [
        int(0),
        int(1),
        int(2),
        frac(9, 2),
        int(12),
        frac(112, 3),
        int(130),
        frac(1961, 4),
        frac(5876, 3),
        frac(40871, 5),
    ];
    for (k, a) in a.iter().enumerate() {
        assert_eq!(f.series.coeff(2 * k + 2), a);
    }
}

#[test]
fn independent_widths_agree() {
    let order = 12;
    let narrow = ZMeasurements::collect(&GridPolicy::odd_family(7, 6), order).unwrap();
    let wide = ZMeasurements::collect(&GridPolicy::odd_family(9, 6), order).unwrap();
    let a = assemble_f_from(&narrow, order).unwrap();
    let b = assemble_f_from(&wide, order).unwrap();
    assert_eq!(a, b);
    let mixed = GridPolicy { families: vec![(7, vec![9, 11]), (9, vec![13, 15]), (11, vec![11, 17])] };
    let c = assemble_f(order, &mixed).unwrap();
    assert_eq!(a.series, c.series);
}
