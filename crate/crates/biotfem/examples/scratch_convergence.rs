use biotfem::biot::manufactured::run_convergence_case;
use biotfem::biot::Discretization;

fn main() {
    let disc = std::env::args().nth(1).map(|s| Discretization::parse(&s).unwrap()).unwrap_or(Discretization::TaylorHood);
    let max_n: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(16);
    let mut prev: Option<[f64; 4]> = None;
    let mut n = 4;
    while n <= max_n {
        let c = run_convergence_case(disc, n, 1.0).unwrap();
        let e = [c.errors.pt_l2, c.errors.pp_l2, c.errors.u_h1, c.errors.pp_1k];
        let rates: Vec<String> = match prev {
            Some(p) => e.iter().zip(&p).map(|(a, b)| format!("{:.2}", (b / a).log2())).collect(),
            None => vec!["-".into(); 4],
        };
        println!("N={n:3} steps={:5} t={:6.1}s  pt={:.3e}({}) pp={:.3e}({}) uH1={:.3e}({}) pp1k={:.3e}({})",
            c.steps, c.seconds, e[0], rates[0], e[1], rates[1], e[2], rates[2], e[3], rates[3]);
        prev = Some(e);
        n *= 2;
    }
}
