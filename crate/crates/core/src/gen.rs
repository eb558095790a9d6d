//! Trace generators: the orthogonal-vectors construction and seeded random
//! traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trace::{OpSpec, Trace};
use crate::Error;

/// Two sets of 0/1 vectors of a common dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OvInstance {
    pub a: Vec<Vec<bool>>,
    pub b: Vec<Vec<bool>>,
    pub d: usize,
}

impl OvInstance {
    pub fn new(a: Vec<Vec<bool>>, b: Vec<Vec<bool>>) -> Result<Self, Error> {
        let d = a
            .iter()
            .chain(&b)
            .map(Vec::len)
            .next()
            .ok_or_else(|| Error::OvFormat("no vectors".into()))?;
        if d == 0 {
            return Err(Error::OvFormat("dimension must be at least 1".into()));
        }
        if let Some(v) = a.iter().chain(&b).find(|v| v.len() != d) {
            return Err(Error::OvFormat(format!("vector of length {} in dimension {d}", v.len())));
        }
        Ok(OvInstance { a, b, d })
    }

    /// One vector per line as a 0/1 string; the sets are separated by `--`.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut sets: [Vec<Vec<bool>>; 2] = [Vec::new(), Vec::new()];
        let mut which = 0;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if line == "--" {
                if which == 1 {
                    return Err(Error::OvFormat("more than one `--` separator".into()));
                }
                which = 1;
                continue;
            }
            let v = line
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Error::OvFormat(format!("bad vector `{line}`"))),
                })
                .collect::<Result<Vec<bool>, Error>>()?;
            sets[which].push(v);
        }
        if which == 0 {
            return Err(Error::OvFormat("missing `--` separator".into()));
        }
        let [a, b] = sets;
        Self::new(a, b)
    }

    pub fn to_text(&self) -> String {
        let row = |v: &Vec<bool>| v.iter().map(|&x| if x { '1' } else { '0' }).collect::<String>();
        let mut out = String::new();
        for v in &self.a {
            out += &row(v);
            out.push('\n');
        }
        out.push_str("--\n");
        for v in &self.b {
            out += &row(v);
            out.push('\n');
        }
        out
    }

    /// Direct scan for a pair of vectors with disjoint support.
    pub fn has_orthogonal_pair(&self) -> bool {
        self.a
            .iter()
            .any(|u| self.b.iter().any(|v| u.iter().zip(v).all(|(&x, &y)| !(x && y))))
    }

    pub fn random(rng: &mut impl Rng, max_len: usize, max_d: usize, density: f64) -> Self {
        let d = rng.gen_range(1..=max_d);
        let n = rng.gen_range(1..=max_len);
        let set = |rng: &mut dyn rand::RngCore| -> Vec<Vec<bool>> {
            (0..n).map(|_| (0..d).map(|_| rng.gen_bool(density)).collect()).collect()
        };
        let a = set(rng);
        let b = set(rng);
        OvInstance { a, b, d }
    }
}

/// Thread `tA` runs one clause per vector of `A`, then `tB` one per vector of
/// `B`. A clause acquires `l<j>` for every set coordinate `j` in ascending
/// order, writes `x` and releases in reverse.
pub fn gen_ov_trace(inst: &OvInstance) -> Trace {
    let mut trace = Trace::new();
    let names: Vec<String> = (1..=inst.d).map(|j| format!("l{j}")).collect();
    for (thread, set) in [("tA", &inst.a), ("tB", &inst.b)] {
        for v in set {
            let locks: Vec<&str> = (0..inst.d).filter(|&j| v[j]).map(|j| names[j].as_str()).collect();
            for l in &locks {
                trace.push(thread, OpSpec::Acquire(l), None);
            }
            trace.push(thread, OpSpec::Write("x"), None);
            for l in locks.iter().rev() {
                trace.push(thread, OpSpec::Release(l), None);
            }
        }
    }
    trace
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomConfig {
    pub threads: usize,
    pub locks: usize,
    pub vars: usize,
    pub events: usize,
    /// Probability that a step is a lock operation.
    pub lock_density: f64,
    /// Probability that an access is a read.
    pub read_ratio: f64,
    /// Start threads other than `T0` by forks from `T0` and join some of them.
    pub forks: bool,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig {
            threads: 4,
            locks: 3,
            vars: 4,
            events: 200,
            lock_density: 0.3,
            read_ratio: 0.5,
            forks: false,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Life {
    Unborn,
    Running,
    Joined,
}

/// Well-formed random trace with exactly `cfg.events` events: critical
/// sections nest properly and every lock is released by the end.
pub fn gen_random_trace(cfg: &RandomConfig, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Trace::new();
    let nthreads = cfg.threads.max(1);
    let tname: Vec<String> = (0..nthreads).map(|t| format!("T{t}")).collect();
    let lname: Vec<String> = (0..cfg.locks).map(|l| format!("l{l}")).collect();
    let vname: Vec<String> = (0..cfg.vars.max(1)).map(|x| format!("x{x}")).collect();

    let mut life = vec![if cfg.forks { Life::Unborn } else { Life::Running }; nthreads];
    life[0] = Life::Running;
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); nthreads];
    let mut free = vec![true; cfg.locks];
    let mut open = 0usize;

    while trace.len() < cfg.events {
        let remaining = cfg.events - trace.len();
        if remaining <= open {
            let t = (0..nthreads).find(|&t| !stacks[t].is_empty()).expect("an open lock");
            let l = stacks[t].pop().unwrap();
            free[l] = true;
            open -= 1;
            trace.push(&tname[t], OpSpec::Release(&lname[l]), None);
            continue;
        }
        let running: Vec<usize> = (0..nthreads).filter(|&t| life[t] == Life::Running).collect();
        let t = running[rng.gen_range(0..running.len())];

        if cfg.forks && t == 0 && rng.gen_bool(0.1) {
            let unborn: Vec<usize> = (1..nthreads).filter(|&c| life[c] == Life::Unborn).collect();
            let joinable: Vec<usize> = (1..nthreads)
                .filter(|&c| life[c] == Life::Running && stacks[c].is_empty())
                .collect();
            if !unborn.is_empty() && (joinable.is_empty() || rng.gen_bool(0.7)) {
                let c = unborn[rng.gen_range(0..unborn.len())];
                life[c] = Life::Running;
                trace.push(&tname[0], OpSpec::Fork(&tname[c]), None);
                continue;
            }
            if !joinable.is_empty() {
                let c = joinable[rng.gen_range(0..joinable.len())];
                life[c] = Life::Joined;
                trace.push(&tname[0], OpSpec::Join(&tname[c]), None);
                continue;
            }
        }

        if cfg.locks > 0 && rng.gen_bool(cfg.lock_density.clamp(0.0, 1.0)) {
            if !stacks[t].is_empty() && rng.gen_bool(0.5) {
                let l = stacks[t].pop().unwrap();
                free[l] = true;
                open -= 1;
                trace.push(&tname[t], OpSpec::Release(&lname[l]), None);
                continue;
            }
            let l = rng.gen_range(0..cfg.locks);
            if free[l] && remaining >= open + 2 {
                free[l] = false;
                stacks[t].push(l);
                open += 1;
                trace.push(&tname[t], OpSpec::Acquire(&lname[l]), None);
                continue;
            }
        }
        let x = &vname[rng.gen_range(0..vname.len())];
        if rng.gen_bool(cfg.read_ratio.clamp(0.0, 1.0)) {
            trace.push(&tname[t], OpSpec::Read(x), None);
        } else {
            trace.push(&tname[t], OpSpec::Write(x), None);
        }
    }
    trace
}
