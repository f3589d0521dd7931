//! Planar serial manipulators and the expert-to-learner pose dataset.
//!
//! Joint angles are relative: link `j` points along `θ_1 + … + θ_j`. The
//! ground-truth learner pose for an expert pose puts the learner's end
//! effector on the expert's and minimizes the squared distance between
//! corresponding arc-length samples of the two arms.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::{Error, LabeledDataset, Points, Result};

/// Arc-length samples per arm in the link-distance objective.
pub const ARC_SAMPLES: usize = 20;
/// Allowed end-effector mismatch between expert and learner.
pub const EE_TOL: f64 = 1e-6;
const REACH_TOL: f64 = 1e-9;
const STRAIGHT_TOL: f64 = 1e-12;
const STARTS: usize = 8;

/// Maps an angle to `(−π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a - TAU * math::ceil((a - PI) / TAU);
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArmConfig {
    link_lengths: Vec<f64>,
    joint_angles: Vec<f64>,
}

impl ArmConfig {
    pub fn new(link_lengths: Vec<f64>, joint_angles: Vec<f64>) -> Result<Self> {
        check_lengths(&link_lengths)?;
        if joint_angles.len() != link_lengths.len() {
            return Err(Error::LengthMismatch {
                left: link_lengths.len(),
                right: joint_angles.len(),
            });
        }
        if joint_angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::param("joint_angles", "angles must be finite"));
        }
        let joint_angles = joint_angles.into_iter().map(normalize_angle).collect();
        Ok(Self {
            link_lengths,
            joint_angles,
        })
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    pub fn joint_angles(&self) -> &[f64] {
        &self.joint_angles
    }

    pub fn total_length(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// Absolute link directions.
    pub fn absolute_angles(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.joint_angles
            .iter()
            .map(|a| {
                acc += a;
                acc
            })
            .collect()
    }

    /// Positions of the joints after each link; the last is the end effector.
    pub fn forward_kinematics(&self) -> Vec<[f64; 2]> {
        let mut p = [0.0, 0.0];
        self.absolute_angles()
            .iter()
            .zip(&self.link_lengths)
            .map(|(a, l)| {
                p[0] += l * math::cos(*a);
                p[1] += l * math::sin(*a);
                p
            })
            .collect()
    }

    pub fn end_effector(&self) -> [f64; 2] {
        self.forward_kinematics()
            .last()
            .copied()
            .unwrap_or([0.0, 0.0])
    }

    /// `count` points equally spaced by arc length, excluding the base and
    /// ending at the end effector.
    pub fn arc_samples(&self, count: usize) -> Vec<[f64; 2]> {
        polyline_samples(&self.link_lengths, &self.absolute_angles(), count)
    }
}

fn check_lengths(lengths: &[f64]) -> Result<()> {
    if lengths.is_empty() {
        return Err(Error::param(
            "link_lengths",
            "an arm needs at least one link",
        ));
    }
    if lengths.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Error::param(
            "link_lengths",
            "link lengths must be positive and finite",
        ));
    }
    Ok(())
}

fn polyline_samples(lengths: &[f64], absolute: &[f64], count: usize) -> Vec<[f64; 2]> {
    let total: f64 = lengths.iter().sum();
    let mut out = Vec::with_capacity(count);
    let mut link = 0;
    let mut start = [0.0, 0.0];
    let mut covered = 0.0;
    for k in 1..=count {
        let s = total * k as f64 / count as f64;
        while link + 1 < lengths.len() && s > covered + lengths[link] {
            start[0] += lengths[link] * math::cos(absolute[link]);
            start[1] += lengths[link] * math::sin(absolute[link]);
            covered += lengths[link];
            link += 1;
        }
        let t = s - covered;
        out.push([
            start[0] + t * math::cos(absolute[link]),
            start[1] + t * math::sin(absolute[link]),
        ]);
    }
    out
}

/// Sum of squared distances between matching arc-length samples.
pub fn link_distance(expert: &ArmConfig, learner: &ArmConfig) -> f64 {
    sample_distance(&expert.arc_samples(ARC_SAMPLES), learner)
}

fn sample_distance(expert_samples: &[[f64; 2]], learner: &ArmConfig) -> f64 {
    let ours = learner.arc_samples(expert_samples.len());
    expert_samples
        .iter()
        .zip(&ours)
        .map(|(a, b)| (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]))
        .sum()
}

/// Learner pose whose first link points along `theta1` and whose last two
/// links reach `target` analytically, with the elbow bent to the side given
/// by `elbow_sign`. `None` if the target is out of range for that first link.
pub fn pose_with_first_angle(
    lengths: &[f64],
    target: [f64; 2],
    theta1: f64,
    elbow_sign: f64,
) -> Option<ArmConfig> {
    let &[l1, l2, l3] = lengths else { return None };
    let p = [l1 * math::cos(theta1), l1 * math::sin(theta1)];
    let [a2, a3] = two_link_ik(p, target, l2, l3, elbow_sign)?;
    let angles = vec![theta1, a2 - theta1, a3 - a2];
    ArmConfig::new(lengths.to_vec(), angles).ok()
}

/// Absolute directions of two links of lengths `l2`, `l3` from `base` to
/// `target`.
fn two_link_ik(
    base: [f64; 2],
    target: [f64; 2],
    l2: f64,
    l3: f64,
    elbow_sign: f64,
) -> Option<[f64; 2]> {
    let v = [target[0] - base[0], target[1] - base[1]];
    let d = math::sqrt(v[0] * v[0] + v[1] * v[1]);
    let slack = REACH_TOL * (l2 + l3);
    if d > l2 + l3 + slack || d < (l2 - l3).abs() - slack {
        return None;
    }
    let beta = math::atan2(v[1], v[0]);
    let cos_gamma = if d > 0.0 {
        ((d * d + l2 * l2 - l3 * l3) / (2.0 * d * l2)).clamp(-1.0, 1.0)
    } else {
        1.0
    };
    let a2 = beta + elbow_sign * math::acos(cos_gamma);
    let q = [base[0] + l2 * math::cos(a2), base[1] + l2 * math::sin(a2)];
    let a3 = math::atan2(target[1] - q[1], target[0] - q[0]);
    Some([a2, a3])
}

/// The one-dimensional family of learner poses reaching a fixed target.
#[derive(Clone, Copy, Debug)]
enum Chart {
    /// `θ_1 = φ + α·sin ψ`; the elbow side follows the sign of `cos ψ`, so the
    /// two branches join where the distal pair is fully stretched.
    Arc { phi: f64, alpha: f64 },
    /// `θ_1 = ψ` free, fixed elbow side.
    Circle { elbow_sign: f64 },
}

impl Chart {
    fn pose(&self, lengths: &[f64], target: [f64; 2], psi: f64) -> Option<ArmConfig> {
        match *self {
            Chart::Arc { phi, alpha } => {
                let sign = if math::cos(psi) >= 0.0 { 1.0 } else { -1.0 };
                pose_with_first_angle(lengths, target, phi + alpha * math::sin(psi), sign)
            }
            Chart::Circle { elbow_sign } => pose_with_first_angle(lengths, target, psi, elbow_sign),
        }
    }
}

/// Ground-truth learner pose for an expert pose.
pub fn ground_truth_pose(expert: &ArmConfig, learner_lengths: &[f64]) -> Result<(ArmConfig, f64)> {
    check_lengths(learner_lengths)?;
    let total: f64 = learner_lengths.iter().sum();
    let expert_total = expert.total_length();
    if (total - expert_total).abs() > REACH_TOL * expert_total {
        return Err(Error::param(
            "learner_lengths",
            alloc::format!(
                "learner total length {total} differs from expert total length {expert_total}"
            ),
        ));
    }
    let target = expert.end_effector();
    let reach = math::sqrt(target[0] * target[0] + target[1] * target[1]);
    if reach > total + REACH_TOL {
        return Err(Error::Unreachable {
            distance: reach,
            reach: total,
        });
    }
    let expert_samples = expert.arc_samples(ARC_SAMPLES);
    let phi = math::atan2(target[1], target[0]);

    if reach >= total - STRAIGHT_TOL {
        let mut angles = vec![0.0; learner_lengths.len()];
        angles[0] = phi;
        let pose = ArmConfig::new(learner_lengths.to_vec(), angles)?;
        let fit = sample_distance(&expert_samples, &pose);
        return Ok((pose, fit));
    }

    match learner_lengths.len() {
        2 => {
            let mut best: Option<(ArmConfig, f64)> = None;
            for sign in [1.0, -1.0] {
                if let Some([a1, a2]) = two_link_ik(
                    [0.0, 0.0],
                    target,
                    learner_lengths[0],
                    learner_lengths[1],
                    sign,
                ) {
                    let pose = ArmConfig::new(learner_lengths.to_vec(), vec![a1, a2 - a1])?;
                    let fit = sample_distance(&expert_samples, &pose);
                    best = pick(best, (pose, fit));
                }
            }
            best.ok_or(Error::Unreachable {
                distance: reach,
                reach: total,
            })
        }
        3 => three_link(&expert_samples, learner_lengths, target, reach, phi),
        k => Err(Error::param(
            "learner_lengths",
            alloc::format!("learner arms need 2 or 3 links, got {k}"),
        )),
    }
}

fn three_link(
    expert_samples: &[[f64; 2]],
    lengths: &[f64],
    target: [f64; 2],
    reach: f64,
    phi: f64,
) -> Result<(ArmConfig, f64)> {
    let (l1, outer) = (lengths[0], lengths[1] + lengths[2]);
    // ‖e − l1·u(θ1)‖ ≤ l2 + l3  ⇔  cos(θ1 − φ) ≥ c
    let c = if reach > 0.0 {
        (reach * reach + l1 * l1 - outer * outer) / (2.0 * l1 * reach)
    } else {
        f64::NEG_INFINITY
    };
    let mut starts: Vec<(Chart, f64)> = Vec::with_capacity(STARTS);
    if c <= -1.0 {
        for sign in [1.0, -1.0] {
            for k in 0..STARTS / 2 {
                starts.push((
                    Chart::Circle { elbow_sign: sign },
                    phi + TAU * k as f64 / (STARTS / 2) as f64,
                ));
            }
        }
    } else {
        let alpha = math::acos(c.min(1.0));
        for k in 0..STARTS {
            starts.push((Chart::Arc { phi, alpha }, TAU * k as f64 / STARTS as f64));
        }
    }

    let mut best: Option<(ArmConfig, f64)> = None;
    for (chart, psi0) in starts {
        let f = |psi: f64| match chart.pose(lengths, target, psi) {
            Some(pose) => sample_distance(expert_samples, &pose),
            None => f64::INFINITY,
        };
        if !f(psi0).is_finite() {
            continue;
        }
        let psi = descend(f, psi0);
        if let Some(pose) = chart.pose(lengths, target, psi) {
            let fit = sample_distance(expert_samples, &pose);
            best = pick(best, (pose, fit));
        }
    }
    best.ok_or(Error::Unreachable {
        distance: reach,
        reach: lengths.iter().sum(),
    })
}

fn pick(
    current: Option<(ArmConfig, f64)>,
    candidate: (ArmConfig, f64),
) -> Option<(ArmConfig, f64)> {
    match current {
        None => Some(candidate),
        Some(cur) => {
            let tie = (candidate.1 - cur.1).abs() <= 1e-12 * cur.1.max(1e-300);
            let better = if tie {
                candidate
                    .0
                    .joint_angles
                    .iter()
                    .zip(&cur.0.joint_angles)
                    .find(|(a, b)| a != b)
                    .is_some_and(|(a, b)| a < b)
            } else {
                candidate.1 < cur.1
            };
            Some(if better { candidate } else { cur })
        }
    }
}

/// Damped Newton descent on a scalar function with central differences.
fn descend(f: impl Fn(f64) -> f64, mut x: f64) -> f64 {
    const H1: f64 = 1e-6;
    const H2: f64 = 1e-4;
    let mut fx = f(x);
    for _ in 0..200 {
        let g = (f(x + H1) - f(x - H1)) / (2.0 * H1);
        if !g.is_finite() || g.abs() <= 1e-11 * fx.max(1.0) {
            break;
        }
        let curv = (f(x + H2) - 2.0 * fx + f(x - H2)) / (H2 * H2);
        let mut step = if curv.is_finite() && curv > 0.0 {
            -g / curv
        } else {
            -g.signum() * 0.1
        };
        step = step.clamp(-0.5, 0.5);
        let mut moved = false;
        for _ in 0..60 {
            let fy = f(x + step);
            if fy < fx {
                x += step;
                fx = fy;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    x
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoseSample {
    pub expert_angles: Vec<f64>,
    pub learner_angles: Vec<f64>,
    pub end_effector: [f64; 2],
    pub fit_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub expert_lengths: Vec<f64>,
    pub learner_lengths: Vec<f64>,
    /// Expert angles are uniform on `(−angle_range, angle_range]`.
    pub angle_range: f64,
    /// Draws per sample before giving up.
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            expert_lengths: vec![0.6; 5],
            learner_lengths: vec![1.0; 3],
            angle_range: PI,
            max_attempts: 16,
        }
    }
}

/// Sample `index` of the stream seeded by `seed`, with the number of draws it
/// took. Independent of every other index.
pub fn generate_sample(
    index: u64,
    seed: u64,
    cfg: &GeneratorConfig,
) -> Result<(PoseSample, usize)> {
    check_lengths(&cfg.expert_lengths)?;
    check_lengths(&cfg.learner_lengths)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut last_err = Error::NoViableCandidate;
    for attempt in 1..=cfg.max_attempts.max(1) {
        let angles: Vec<f64> = cfg
            .expert_lengths
            .iter()
            .map(|_| cfg.angle_range * (1.0 - 2.0 * rng.random::<f64>()))
            .collect();
        let expert = ArmConfig::new(cfg.expert_lengths.clone(), angles)?;
        match ground_truth_pose(&expert, &cfg.learner_lengths) {
            Ok((learner, fit)) => {
                let e = expert.end_effector();
                let l = learner.end_effector();
                if math::dist(&e, &l) <= EE_TOL {
                    let sample = PoseSample {
                        expert_angles: expert.joint_angles,
                        learner_angles: learner.joint_angles,
                        end_effector: e,
                        fit_residual: fit,
                    };
                    return Ok((sample, attempt));
                }
                last_err = Error::Unreachable {
                    distance: math::dist(&e, &l),
                    reach: EE_TOL,
                };
            }
            Err(err @ Error::Unreachable { .. }) => last_err = err,
            Err(err) => return Err(err),
        }
    }
    Err(last_err)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationReport {
    pub samples: Vec<PoseSample>,
    /// Total draws, including rejected ones.
    pub attempts: usize,
}

impl GenerationReport {
    pub fn failure_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            (self.attempts - self.samples.len()) as f64 / self.attempts as f64
        }
    }

    pub fn to_dataset(&self) -> Result<LabeledDataset> {
        let inputs = Points::from_rows(
            &self
                .samples
                .iter()
                .map(|s| s.expert_angles.as_slice())
                .collect::<Vec<_>>(),
        )?;
        let labels = Points::from_rows(
            &self
                .samples
                .iter()
                .map(|s| s.learner_angles.as_slice())
                .collect::<Vec<_>>(),
        )?;
        LabeledDataset::new(inputs, labels)
    }
}

/// Collects already generated samples in index order.
pub fn assemble(results: Vec<(PoseSample, usize)>) -> GenerationReport {
    let attempts = results.iter().map(|r| r.1).sum();
    GenerationReport {
        samples: results.into_iter().map(|r| r.0).collect(),
        attempts,
    }
}

/// `n` samples: expert angles as inputs, ground-truth learner angles as labels.
pub fn generate_dataset(
    n: usize,
    seed: u64,
    cfg: &GeneratorConfig,
) -> Result<(LabeledDataset, GenerationReport)> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let results = (0..n as u64)
        .map(|i| generate_sample(i, seed, cfg))
        .collect::<Result<Vec<_>>>()?;
    let report = assemble(results);
    Ok((report.to_dataset()?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fk_examples() {
        let arm = ArmConfig::new(vec![1.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(
            arm.forward_kinematics(),
            vec![[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]
        );
        let one = ArmConfig::new(vec![1.0], vec![PI / 2.0]).unwrap();
        let p = one.end_effector();
        assert!(close(p[0], 0.0, 1e-15) && close(p[1], 1.0, 1e-15));
    }

    #[test]
    fn normalization_range() {
        for a in [-10.0, -PI, -3.0, 0.0, 1.0, PI, 3.5, 7.0 * PI, -7.0 * PI] {
            let r = normalize_angle(a);
            assert!(r > -PI && r <= PI, "{a} -> {r}");
            let k = (a - r) / TAU;
            assert!(close(k, k.round(), 1e-12));
            assert_eq!(normalize_angle(r), r);
        }
        assert_eq!(normalize_angle(-PI), PI);
    }

    #[test]
    fn arc_samples_follow_links() {
        let arm = ArmConfig::new(vec![1.0, 1.0], vec![0.0, PI / 2.0]).unwrap();
        let s = arm.arc_samples(4);
        let want = [[0.5, 0.0], [1.0, 0.0], [1.0, 0.5], [1.0, 1.0]];
        for (a, b) in s.iter().zip(&want) {
            assert!(
                close(a[0], b[0], 1e-15) && close(a[1], b[1], 1e-15),
                "{a:?} vs {b:?}"
            );
        }
    }

    #[test]
    fn straight_expert_gives_straight_learner() {
        let expert = ArmConfig::new(vec![0.6; 5], vec![0.0; 5]).unwrap();
        let (pose, fit) = ground_truth_pose(&expert, &[1.0; 3]).unwrap();
        assert_eq!(pose.joint_angles(), &[0.0, 0.0, 0.0]);
        assert!(fit < 1e-25);
    }

    #[test]
    fn rejects_mismatched_totals() {
        let expert = ArmConfig::new(vec![0.6; 5], vec![0.3; 5]).unwrap();
        assert!(ground_truth_pose(&expert, &[1.0, 1.0]).is_err());
        assert!(matches!(
            ground_truth_pose(&expert, &[0.75; 4]),
            Err(Error::InvalidParameter {
                name: "learner_lengths",
                ..
            })
        ));
    }

    #[test]
    fn two_link_learner_reaches() {
        let expert = ArmConfig::new(vec![0.5; 4], vec![0.4, -0.2, 0.9, 0.1]).unwrap();
        let (pose, _) = ground_truth_pose(&expert, &[1.0, 1.0]).unwrap();
        let (a, b) = (pose.end_effector(), expert.end_effector());
        assert!(math::dist(&a, &b) < 1e-9);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeneratorConfig::default();
        let (a, ra) = generate_dataset(5, 11, &cfg).unwrap();
        let (b, rb) = generate_dataset(5, 11, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        let (c, _) = generate_dataset(5, 12, &cfg).unwrap();
        assert_ne!(a, c);
        let (one, _) = generate_dataset(1, 11, &cfg).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.input(0), a.input(0));
    }
}
