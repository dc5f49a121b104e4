use drivestyle::dataset::LabeledDataset;
use drivestyle::features::FeatureTable;
use drivestyle::selection::{nca_fit, select, NcaParams};
use drivestyle::sensor::{Label, ManeuverKind};
use drivestyle::synth::generate_corpus;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const DIM: usize = 22;

/// Feature `informative` separates the classes with a margin; every other
/// column is standard normal noise.
fn planted(seed: u64, n: usize, informative: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let positive = i % 2 == 1;
        let mut row: Vec<f64> = (0..DIM).map(|_| rng.sample(StandardNormal)).collect();
        let offset = rng.random_range(0.5..1.5);
        row[informative] = if positive { offset } else { -offset };
        x.push(row);
        y.push(if positive { Label::Dangerous } else { Label::Safe });
    }
    (x, y)
}

/// Leave-one-out 1-nearest-neighbour accuracy on the given columns.
fn loo_1nn(x: &[Vec<f64>], y: &[Label], cols: &[usize]) -> f64 {
    let correct = (0..x.len())
        .filter(|&i| {
            let nearest = (0..x.len())
                .filter(|&j| j != i)
                .min_by(|&a, &b| {
                    let d = |j: usize| cols.iter().map(|&c| (x[i][c] - x[j][c]).powi(2)).sum::<f64>();
                    d(a).total_cmp(&d(b))
                })
                .unwrap();
            y[nearest] == y[i]
        })
        .count();
    correct as f64 / x.len() as f64
}

#[test]
fn planted_feature_is_the_only_selection() {
    let informative = 6;
    let (x, y) = planted(7, 200, informative);
    // oracle: only the planted column classifies perfectly on its own
    let single: Vec<f64> = (0..DIM).map(|c| loo_1nn(&x, &y, &[c])).collect();
    assert_eq!(single[informative], 1.0);
    assert!(single.iter().enumerate().all(|(c, a)| c == informative || *a < 0.75));

    let ds = LabeledDataset::new(&x, &y).unwrap();
    let fw = nca_fit(&ds, &NcaParams::default()).unwrap();
    assert_eq!(select(&fw, 0.1), vec![informative + 1], "{:?}", fw.weights);
}

// At lambda = 0.01 a 200-point noise sample still overfits in about a
// quarter of the seeds; 0.02 is the smallest penalty tried that keeps the
// false selection rate under 5%.
#[test]
fn pure_noise_selects_nothing() {
    let mut empty = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..200).map(|_| (0..DIM).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let y: Vec<Label> = (0..200).map(|i| if i % 2 == 0 { Label::Safe } else { Label::Dangerous }).collect();
        let ds = LabeledDataset::new(&x, &y).unwrap();
        let params = NcaParams {
            lambda: Some(0.02),
            ..NcaParams::default()
        };
        if select(&nca_fit(&ds, &params).unwrap(), 0.1).is_empty() {
            empty += 1;
        }
    }
    assert!(empty >= 95, "only {empty}/100 noise datasets selected nothing");
}

#[test]
fn duplicated_column_keeps_selection_quality() {
    let (x, y) = planted(11, 120, 3);
    let dup: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.push(r[3]);
            r
        })
        .collect();
    let cols = |raw: &[Vec<f64>]| -> Vec<usize> {
        let ds = LabeledDataset::new(raw, &y).unwrap();
        select(&nca_fit(&ds, &NcaParams::default()).unwrap(), 0.1)
            .into_iter()
            .map(|c| c - 1)
            .collect()
    };
    let original = cols(&x);
    let doubled = cols(&dup);
    assert!(!doubled.is_empty());
    let a = loo_1nn(&x, &y, &original);
    let b = loo_1nn(&dup, &y, &doubled);
    assert!((a - b).abs() <= 0.02, "{a} vs {b}");
}

#[test]
fn rescaling_a_raw_column_keeps_the_selected_set() {
    let (x, y) = planted(5, 100, 0);
    let scaled: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r[4] = 250.0 * r[4] - 17.0;
            r
        })
        .collect();
    let pick = |raw: &[Vec<f64>]| select(&nca_fit(&LabeledDataset::new(raw, &y).unwrap(), &NcaParams::default()).unwrap(), 0.1);
    assert_eq!(pick(&x), pick(&scaled));
}

#[test]
fn turning_corpus_selects_duration() {
    let table = FeatureTable::wavelet(&generate_corpus(ManeuverKind::Turn, 120, 1)).unwrap();
    let ds = LabeledDataset::from_table(&table).unwrap();
    let fw = nca_fit(&ds, &NcaParams::default()).unwrap();
    let chosen = select(&fw, 0.1);
    assert!(chosen.contains(&1), "{chosen:?} from {:?}", fw.weights);
}
