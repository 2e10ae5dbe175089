//! Values frozen from independent high-precision evaluations (mpmath at 40
//! digits for the constants, nested adaptive quadrature for `‖T ψ_k‖`).

use approx::assert_relative_eq;
use bergnorm::bounds::{ln_a_displayed, ln_b_displayed, ln_d_displayed, ln_d_proof_assembled, ln_d_tilde_displayed};
use bergnorm::operators::{bracket_t_norm, BracketConfig};
use bergnorm::params::Params;

struct Frozen {
    n: usize,
    alpha: f64,
    p: f64,
    m: u32,
    d: f64,
    d_tilde: f64,
    d_proof: f64,
    a: f64,
    b: f64,
}

const CONSTANTS: [Frozen; 3] = [
    Frozen {
        n: 2,
        alpha: 1.0,
        p: 2.0,
        m: 1,
        d: 0.12804498718678842,
        d_tilde: 0.091460705133420299,
        d_proof: 0.63365835274863836,
        a: 3.9269908169872415,
        b: 0.075026359679758839,
    },
    Frozen {
        n: 3,
        alpha: 1.5,
        p: 2.5,
        m: 2,
        d: 0.00057734003674591556,
        d_tilde: 9.1939436351754194e-5,
        d_proof: 0.51801080962232499,
        a: 6.0078988883269074,
        b: 0.033602784826061299,
    },
    Frozen {
        n: 4,
        alpha: 0.5,
        p: 4.0,
        m: 1,
        d: 0.29275437507277284,
        d_tilde: 0.0011485740002768979,
        d_proof: 0.33632504287179842,
        a: 29.508675416349603,
        b: 0.018141038838354563,
    },
];

#[test]
fn displayed_and_assembled_constants() {
    for f in &CONSTANTS {
        let p = Params::new(f.n, f.alpha, f.p, f.m).unwrap();
        assert_relative_eq!(ln_d_displayed(&p).unwrap().exp(), f.d, max_relative = 1e-12);
        assert_relative_eq!(ln_d_tilde_displayed(&p).unwrap().exp(), f.d_tilde, max_relative = 1e-12);
        assert_relative_eq!(ln_d_proof_assembled(&p).unwrap().exp(), f.d_proof, max_relative = 1e-12);
        assert_relative_eq!(ln_a_displayed(&p).unwrap().exp(), f.a, max_relative = 1e-12);
        assert_relative_eq!(ln_b_displayed(&p).unwrap().exp(), f.b, max_relative = 1e-12);
    }
}

#[test]
fn t_image_of_psi_on_the_disc() {
    // (p, alpha, m, ‖T ψ_k‖_{L^p(dv_{pm-n})}) at n = 2
    let frozen = [(2.0, 1.0, 1, 0.7919643759233714), (1.5, 0.5, 1, 0.7644297818006249), (4.0, 2.0, 1, 0.6675515969873154)];
    let config = BracketConfig { trials: 0, ..BracketConfig::default() };
    for (p, alpha, m, value) in frozen {
        let params = Params::new(2, alpha, p, m).unwrap();
        let b = bracket_t_norm(&params, &config).unwrap();
        assert_relative_eq!(b.paper_witness_image_norm, value, max_relative = 1e-6);
        assert_relative_eq!(b.paper_witness_quotient, value, max_relative = 1e-6);
    }
}
