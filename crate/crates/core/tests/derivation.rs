use onsager_core::duality::{change_to_z, fbar_series, ChangeOfVariable};
use onsager_core::exactmath::scalar::frac;
use onsager_core::guess::{guess_rational, onsager_g_reference, ratios, rescale, verify_closed_form};
use onsager_core::isingpoly::{assemble_f, GridPolicy};

#[test]
fn from_polygons_to_the_closed_form() {
    let f = assemble_f(20, &GridPolicy::for_order(20)).unwrap();
    let fbar = fbar_series(&f.series).unwrap();
    assert_eq!(*fbar.coeff(2), frac(-1, 1));
    assert_eq!(*fbar.coeff(4), frac(3, 2));
    let g = change_to_z(&fbar, &ChangeOfVariable::default()).unwrap();
    assert!(g.is_well_formed());
    let want = [
        (1, 4),
        (9, 32),
        (25, 48),
        (1225, 1024),
        (3969, 1280),
        (17787, 2048),
        (184041, 7168),
        (41409225, 524288),
        (147744025, 589824),
        (2133423721, 2621440),
    ];
    for (r, &(n, d)) in want.iter().enumerate() {
        assert_eq!(*g.b(r + 1), frac(-n, d), "b_{}", 2 * r + 2);
    }
    let guess = guess_rational(&ratios(&g.bs()).unwrap(), 3);
    assert_eq!(guess.guess().unwrap().canonical(), "r*(2*r+1)^2/(r+1)^3");
    assert!(verify_closed_form(&g).all_match());
    assert_eq!(rescale(&onsager_g_reference(20).unwrap(), &frac(1, 2)), g.series);
}
