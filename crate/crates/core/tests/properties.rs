use proptest::prelude::*;
use sbforge::construct::{eta_of_g, g_of_eta, hol_of_g, nf_mul};
use sbforge::fpalg::{build_frame, validate_prime_pair};
use sbforge::holo::Holomorph;
use std::sync::OnceLock;

fn hol351() -> &'static Holomorph {
    static H: OnceLock<Holomorph> = OnceLock::new();
    H.get_or_init(|| Holomorph::new(build_frame(validate_prime_pair(3, 13).unwrap()).unwrap()).unwrap())
}

proptest! {
    #[test]
    fn n_mul_associative(a in 0u32..351, b in 0u32..351, c in 0u32..351) {
        let h = hol351();
        let (a, b, c) = (h.n_elem(a), h.n_elem(b), h.n_elem(c));
        prop_assert_eq!(h.n_mul(&h.n_mul(&a, &b), &c), h.n_mul(&a, &h.n_mul(&b, &c)));
    }

    #[test]
    fn aut_apply_is_homomorphism(x in 0u32..2106, a in 0u32..351, b in 0u32..351) {
        let h = hol351();
        let al = h.aut_from_index(x);
        let (a, b) = (h.n_elem(a), h.n_elem(b));
        prop_assert_eq!(h.aut_apply(&al, &h.n_mul(&a, &b)), h.n_mul(&h.aut_apply(&al, &a), &h.aut_apply(&al, &b)));
    }

    #[test]
    fn aut_compose_matches_application(x in 0u32..2106, y in 0u32..2106, a in 0u32..351) {
        let h = hol351();
        let (f, g) = (h.aut_from_index(x), h.aut_from_index(y));
        let a = h.n_elem(a);
        prop_assert_eq!(h.aut_apply(&h.aut_compose(&f, &g), &a), h.aut_apply(&f, &h.aut_apply(&g, &a)));
        prop_assert_eq!(h.aut_compose(&f, &h.aut_inv(&f)), h.aut_identity());
    }

    #[test]
    fn normal_form_roundtrip_and_product(a in 0u32..351, b in 0u32..351) {
        let h = hol351();
        let (ea, eb) = (h.n_elem(a), h.n_elem(b));
        let (fa, fb) = (g_of_eta(h, &ea), g_of_eta(h, &eb));
        prop_assert_eq!(eta_of_g(h, &fa), ea);
        let prod = h.hol_mul(&hol_of_g(h, &fa), &hol_of_g(h, &fb));
        prop_assert_eq!(hol_of_g(h, &nf_mul(h, &fa, &fb)), prod);
    }
}
