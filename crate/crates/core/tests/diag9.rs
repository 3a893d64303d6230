use num_complex::Complex64;
use twomode::hilbert::HilbertSpace;
use twomode::models::{build_model, ModelSpec, NumberFunction};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn dense_eigen_error_structure() {
    let two = HilbertSpace::new(2, 6, 6).unwrap();
    let spec = ModelSpec::IntensityDependent {
        omega: 1.0,
        omega0: 0.9,
        lambda: c(0.5, 0.0),
        f: NumberFunction::Affine { c0: 1.0, c1: 0.2, c2: 0.0 },
        g: NumberFunction::Affine { c0: 1.0, c1: 0.0, c2: 0.3 },
        interaction_picture: true,
    };
    let model = build_model(&spec, &two).unwrap();
    let dense = model.hamiltonian.to_dense();
    let eig = nalgebra::SymmetricEigen::new(dense.clone());
    let v = &eig.eigenvectors;
    let ortho = (v.adjoint() * v
        - nalgebra::DMatrix::<Complex64>::identity(v.ncols(), v.ncols()))
    .iter()
    .map(|x| x.norm())
    .fold(0.0, f64::max);
    let hv = &dense * v;
    let mut worst_val = 0.0_f64;
    let mut worst_resid = 0.0_f64;
    for i in 0..v.ncols() {
        let vi = v.column(i);
        let rayleigh = (vi.adjoint() * hv.column(i))[(0, 0)].re;
        worst_val = worst_val.max((rayleigh - eig.eigenvalues[i]).abs());
        let resid = (hv.column(i) - vi * c(eig.eigenvalues[i], 0.0))
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        worst_resid = worst_resid.max(resid);
    }
    let hnorm = dense.iter().map(|x| x.norm()).fold(0.0, f64::max);
    println!(
        "dim {}: ‖V†V−I‖max = {ortho:.2e}, max |rayleigh − λ| = {worst_val:.2e}, max residual ‖Hv−λv‖max = {worst_resid:.2e}, max |H| entry = {hnorm:.2}",
        v.ncols()
    );
}
