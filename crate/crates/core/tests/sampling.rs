use lnnd_core::geometry::{ball_mass, radial_tail};
use lnnd_core::nng::vacancy_event;
use lnnd_core::process::{
    count_in_region, coupled_means, poissonize, sample_cloud, sample_coupled, CoupledPart, Region,
};
use lnnd_core::stats::{binomial_se, chi_square_sf, ks_statistic, ks_critical_1pct, mean, variance};
use lnnd_core::{Dimension, SeedRecord};

fn dim(d: u32) -> Dimension {
    Dimension::new(d).unwrap()
}

#[test]
fn cloud_mean_and_radial_law() {
    let n = 100_000;
    let cloud = sample_cloud(dim(2), n, SeedRecord::new(11, 0));
    for axis in 0..2 {
        let m = cloud.points().map(|p| p[axis]).sum::<f64>() / n as f64;
        assert!(m.abs() < 4.0 / (n as f64).sqrt(), "axis {axis} mean {m}");
    }
    let radii: Vec<f64> = cloud.points().map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt()).collect();
    let ks = ks_statistic(&radii, |r| 1.0 - radial_tail(r, dim(2)).unwrap());
    assert!(ks < ks_critical_1pct(n), "ks {ks}");
}

#[test]
fn same_seed_same_cloud() {
    let a = sample_cloud(dim(3), 500, SeedRecord::new(4, 2));
    let b = sample_cloud(dim(3), 500, SeedRecord::new(4, 2));
    assert_eq!(a.coords(), b.coords());
    assert!(sample_cloud(dim(3), 0, SeedRecord::new(4, 2)).is_empty());
}

#[test]
fn poisson_counts_have_mean_n() {
    let reps = 10_000;
    let counts: Vec<f64> = (0..reps)
        .map(|r| poissonize(dim(2), &[100.0], SeedRecord::new(21, r)).unwrap()[0].len() as f64)
        .collect();
    let m = mean(&counts);
    assert!((m - 100.0).abs() < 4.0 * (100.0f64 / reps as f64).sqrt(), "mean {m}");
    assert!((variance(&counts) / 100.0 - 1.0).abs() < 0.1);
}

#[test]
fn poisson_family_is_nested() {
    let grid = [20.0, 50.0, 400.0];
    let clouds = poissonize(dim(2), &grid, SeedRecord::new(5, 1)).unwrap();
    for w in clouds.windows(2) {
        assert!(w[0].len() <= w[1].len());
        assert_eq!(w[0].coords(), &w[1].coords()[..w[0].coords().len()]);
    }
}

fn poisson_pmf(k: usize, lambda: f64) -> f64 {
    let ln = k as f64 * lambda.ln() - lambda - lnnd_core::special::ln_factorial(k as u64);
    ln.exp()
}

#[test]
fn ball_counts_are_poisson() {
    let d = dim(2);
    let radius = 1.0;
    let lambda = 50.0 * ball_mass(0.0, radius, d).unwrap();
    let reps = 10_000;
    let region = Region::centered_ball(d, radius);
    let mut hist = vec![0usize; 200];
    for r in 0..reps {
        let cloud = &poissonize(d, &[50.0], SeedRecord::new(33, r)).unwrap()[0];
        hist[count_in_region(cloud, &region).unwrap()] += 1;
    }
    // Bins with expected count >= 5, tails merged into the end bins.
    let expected: Vec<f64> = (0..200).map(|k| reps as f64 * poisson_pmf(k, lambda)).collect();
    let lo = expected.iter().position(|&e| e >= 5.0).unwrap();
    let hi = expected.iter().rposition(|&e| e >= 5.0).unwrap();
    let mut obs: Vec<f64> = (lo..=hi).map(|k| hist[k] as f64).collect();
    let mut exp: Vec<f64> = expected[lo..=hi].to_vec();
    obs[0] += hist[..lo].iter().sum::<usize>() as f64;
    exp[0] += expected[..lo].iter().sum::<f64>();
    let last = obs.len() - 1;
    obs[last] += hist[hi + 1..].iter().sum::<usize>() as f64;
    exp[last] = reps as f64 - expected[..hi].iter().sum::<f64>();
    let stat: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e).powi(2) / e).sum();
    let p = chi_square_sf(stat, (obs.len() - 1) as f64);
    assert!(p > 0.01, "chi2 {stat} on {} bins, p {p}", obs.len());
}

#[test]
fn disjoint_region_counts_are_independent() {
    let d = dim(2);
    let inner = Region::centered_ball(d, 0.8);
    let outer = Region::OutsideBall { center: vec![0.0, 0.0], radius: 1.5 };
    let reps = 10_000;
    let pairs: Vec<(usize, usize)> = (0..reps)
        .map(|r| {
            let c = &poissonize(d, &[60.0], SeedRecord::new(44, r)).unwrap()[0];
            (count_in_region(c, &inner).unwrap(), count_in_region(c, &outer).unwrap())
        })
        .collect();
    let med = |v: Vec<usize>| {
        let mut v = v;
        v.sort();
        v[v.len() / 2]
    };
    let ma = med(pairs.iter().map(|p| p.0).collect());
    let mb = med(pairs.iter().map(|p| p.1).collect());
    let mut table = [[0f64; 2]; 2];
    for (a, b) in pairs {
        table[(a >= ma) as usize][(b >= mb) as usize] += 1.0;
    }
    let total = reps as f64;
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let row: f64 = table[i].iter().sum();
            let col = table[0][j] + table[1][j];
            let e = row * col / total;
            stat += (table[i][j] - e).powi(2) / e;
        }
    }
    assert!(chi_square_sf(stat, 1.0) > 0.01, "chi2 {stat}");
}

#[test]
fn coupled_triple_counts() {
    let n = 10_000;
    let reps = 10_000u64;
    let (mean_minus, _) = coupled_means(n);
    let mut minus = Vec::with_capacity(reps as usize);
    let mut failures = 0;
    for r in 0..reps {
        let t = sample_coupled(dim(2), n, SeedRecord::new(55, r)).unwrap();
        assert!(t.n_minus <= t.n_minus + t.extra);
        if !t.coupling_holds() {
            failures += 1;
        }
        minus.push(t.n_minus as f64);
    }
    assert!((failures as f64 / reps as f64) < 0.01, "{failures} failures");
    let m = mean(&minus);
    assert!((m - mean_minus).abs() < 4.0 * (mean_minus / reps as f64).sqrt(), "mean {m} vs {mean_minus}");
}

#[test]
fn coupling_matches_set_inclusion() {
    for r in 0..50 {
        let t = sample_coupled(dim(2), 40, SeedRecord::new(66, r)).unwrap();
        let (pm, x, pp) = (t.cloud(CoupledPart::Minus), t.cloud(CoupledPart::Fixed), t.cloud(CoupledPart::Plus));
        let contains = |big: &[f64], small: &[f64]| small.chunks(2).all(|p| big.chunks(2).any(|q| q == p));
        assert_eq!(t.coupling_holds(), contains(x.coords(), pm.coords()) && contains(pp.coords(), x.coords()));
        assert_eq!(t.increment_coords().len() / 2, t.extra);
    }
}

#[test]
fn vacancy_frequency_matches_masses() {
    let d = dim(2);
    let (center, r_in, r_out) = ([2.5, 0.0], 0.1, 0.3);
    let p = ball_mass(2.5, r_out, d).unwrap() - ball_mass(2.5, r_in, d).unwrap();
    let n = 1000;
    let exact = (1.0 - p).powi(n as i32);
    let reps = 4000;
    let hits = (0..reps)
        .filter(|&r| vacancy_event(&sample_cloud(d, n, SeedRecord::new(77, r)), &center, r_in, r_out).unwrap())
        .count();
    let freq = hits as f64 / reps as f64;
    assert!((freq - exact).abs() <= 3.0 * binomial_se(exact, reps as usize), "{freq} vs {exact}");
}
