use wg_elast::analysis::{convergence_rates, error_energy, error_l2};
use wg_elast::assembly::{assemble, AssemblyOptions};
use wg_elast::cases::{CoefficientField, ManufacturedCase};
use wg_elast::dofmap::build_dof_map;
use wg_elast::mesh::{gen_rect_mesh, tag_interface};
use wg_elast::solve::{solve, SolverKind};

fn sweep(k: usize, r: usize, stab: bool, mu0: f64, l0: f64, levels: std::ops::RangeInclusive<u32>) {
    let case = ManufacturedCase::example2(CoefficientField::new(mu0, l0).unwrap());
    let mut l2 = Vec::new();
    let mut en = Vec::new();
    println!("--- k={k} r={r} stabilizer={stab} mu0={mu0} lambda0={l0}");
    for level in levels {
        let n = 1usize << (level - 1);
        let mut mesh = gen_rect_mesh(n).unwrap();
        tag_interface(&mut mesh).unwrap();
        let dm = build_dof_map(&mesh, k, &case, 0).unwrap();
        let mut opts = AssemblyOptions::new(k).with_r(r);
        if !stab { opts = opts.without_stabilizer(); }
        let system = assemble(&mesh, &dm, &case, opts).unwrap();
        match solve(&system, SolverKind::Direct) {
            Ok(sol) => {
                let u_h = dm.reconstruct(&sol.free);
                let e_l2 = error_l2(&mesh, &dm, &case, &u_h, 0).unwrap();
                let e_en = error_energy(&mesh, &dm, &case, &u_h, r, 0).unwrap();
                println!("  level {level} n={n:3} L2 {:.3e} energy {:.3e}", e_l2, e_en);
                l2.push(e_l2); en.push(e_en);
            }
            Err(e) => { println!("  level {level} n={n:3} SOLVE FAILED: {e}"); return; }
        }
    }
    println!("  L2 rates:     {:?}", convergence_rates(&l2).iter().map(|r| r.map(|v| (v*100.0).round()/100.0)).collect::<Vec<_>>());
    println!("  energy rates: {:?}", convergence_rates(&en).iter().map(|r| r.map(|v| (v*100.0).round()/100.0)).collect::<Vec<_>>());
}

fn main() {
    sweep(2, 4, false, 1.0, 1.0, 3..=5);
    sweep(2, 5, false, 1.0, 1.0, 3..=5);
    sweep(3, 5, false, 1.0, 1.0, 3..=4); sweep(3, 6, false, 1.0, 1.0, 3..=4);
}
