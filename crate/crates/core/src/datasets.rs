//! Small bundled datasets.

use crate::basegen::Points;

const IRIS_CSV: &str = include_str!("../data/iris.csv");

/// Fisher's iris data: 150 samples, 4 features, 3 classes (labels 0..3).
pub fn iris() -> (Points, Vec<usize>) {
    let mut rows = Vec::with_capacity(150);
    let mut labels = Vec::with_capacity(150);
    for line in IRIS_CSV.lines().filter(|l| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        let (features, class) = fields.split_at(4);
        rows.push(
            features
                .iter()
                .map(|f| f.parse::<f64>().expect("bundled iris features are numeric"))
                .collect::<Vec<_>>(),
        );
        labels.push(class[0].parse().expect("bundled iris labels are integers"));
    }
    let points = Points::from_rows(&rows).expect("bundled iris data is rectangular");
    (points, labels)
}
