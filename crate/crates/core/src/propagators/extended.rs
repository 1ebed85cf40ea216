//! Variational Lanczos stepping with basis recycling.
//!
//! Each step spans the subspace with the normalized Krylov powers
//! `Phi^(i) = H^i psi(t) / |H^i psi(t)|`, `i = 0..=m`, plus `n - m - 1`
//! normalized powers kept from earlier steps. Overlap and Hamiltonian
//! elements between two kept states are reused from the step that computed
//! them, so the only fresh Hamiltonian applications are the `m + 1` powers
//! of the current state. The basis is non-orthogonal; the subspace equation
//! is solved through a Cholesky factor of the overlap matrix.
//!
//! Kept states are chosen newest step first and, within a step, highest
//! power first. A kept state that turns out (nearly) linearly dependent on
//! the others is replaced by the next Krylov power of the current state,
//! at the price of one extra Hamiltonian application.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{inner, linear_combination, HermitianOperator, WaveState};
use crate::subspace::{
    evolve_subspace, thresholded_cholesky, CMatrix, SubspaceSystem, DEFAULT_DEPENDENCY_THRESHOLD,
};

/// Tuning of the recycled basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowConfig {
    /// Highest Krylov power of the current state computed each step.
    pub m: usize,
    /// Target subspace dimension.
    pub n: usize,
    /// Oldest step (in steps back) whose states may be reused.
    pub max_age: usize,
    /// Relative Cholesky pivot at or below which a state counts as dependent.
    pub threshold: f64,
    /// Highest Krylov power a replacement state may have. Defaults to `m + 4`.
    pub power_cap: Option<usize>,
    /// Drop dependent states and shrink `n` instead of replacing them.
    pub auto_shrink: bool,
}

impl WindowConfig {
    pub fn new(m: usize, n: usize, max_age: usize) -> Self {
        Self {
            m,
            n,
            max_age,
            threshold: DEFAULT_DEPENDENCY_THRESHOLD,
            power_cap: None,
            auto_shrink: false,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::WindowConfig("m must be >= 1".into()));
        }
        if self.n < self.m + 1 {
            return Err(Error::WindowConfig(format!(
                "n = {} is smaller than m + 1 = {}",
                self.n,
                self.m + 1
            )));
        }
        if self.max_age < 1 {
            return Err(Error::WindowConfig("max_age must be >= 1".into()));
        }
        if self.n > (self.max_age + 1) * (self.m + 1) {
            return Err(Error::WindowConfig(format!(
                "n = {} exceeds (K + 1)(m + 1) = {}",
                self.n,
                (self.max_age + 1) * (self.m + 1)
            )));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::WindowConfig(format!(
                "threshold {} outside [0, 1)",
                self.threshold
            )));
        }
        if self.power_cap() <= self.m {
            return Err(Error::WindowConfig("power cap must exceed m".into()));
        }
        Ok(())
    }

    pub fn power_cap(&self) -> usize {
        self.power_cap.unwrap_or(self.m + 4)
    }

    /// Matrix-vector products of a regular step without replacements.
    pub fn step_cost(&self) -> usize {
        self.m + 1
    }

    /// Matrix-vector products of the first step.
    pub fn first_step_cost(&self) -> usize {
        self.n
    }
}

/// One normalized basis state `Phi^(power)` created `age` steps ago.
#[derive(Clone, Debug)]
pub struct BasisEntry {
    pub state: WaveState,
    pub power: usize,
    pub age: usize,
    /// Norm of the unnormalized `H^power psi` at creation.
    pub raw_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Origin {
    Krylov,
    Recycled,
    Replacement,
}

/// Per-step bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepReport {
    /// Dimension of the subspace the step was solved in.
    pub dimension: usize,
    pub matvecs: usize,
    /// Dependent states swapped for higher Krylov powers.
    pub replacements: usize,
    /// Dependent states removed without a substitute.
    pub dropped: usize,
}

/// Subspace under assembly for the current step.
pub struct StepBasis {
    entries: Vec<BasisEntry>,
    origins: Vec<Origin>,
    overlap: CMatrix,
    hamiltonian: CMatrix,
    /// normalized powers `Phi^(0), Phi^(1), ...` of the current state
    chain: Vec<WaveState>,
    /// `|H Phi^(i)|` for each link computed so far
    gains: Vec<f64>,
    raw_norms: Vec<f64>,
    /// set once `H Phi^(last)` came back exactly zero
    broken: bool,
    next_power: usize,
    power_cap: usize,
    replacements: usize,
    dropped: usize,
    matvecs: usize,
}

impl StepBasis {
    fn start<H: HermitianOperator + ?Sized>(
        h: &H,
        psi: &WaveState,
        powers: usize,
        power_cap: usize,
    ) -> Result<Self> {
        let mut phi0 = psi.clone();
        let norm = phi0.normalize()?;
        let mut basis = Self {
            entries: Vec::new(),
            origins: Vec::new(),
            overlap: CMatrix::zeros(0, 0),
            hamiltonian: CMatrix::zeros(0, 0),
            chain: vec![phi0],
            gains: Vec::new(),
            raw_norms: vec![norm],
            broken: false,
            next_power: powers,
            power_cap,
            replacements: 0,
            dropped: 0,
            matvecs: 0,
        };
        // powers 0..powers-1 enter the basis; one more link gives H Phi^(powers-1)
        for _ in 0..powers {
            if !basis.extend_chain(h)? {
                break;
            }
        }
        Ok(basis)
    }

    /// Computes `H Phi^(last)`. Returns false once the chain has terminated.
    fn extend_chain<H: HermitianOperator + ?Sized>(&mut self, h: &H) -> Result<bool> {
        if self.broken {
            return Ok(false);
        }
        let last = self.chain.len() - 1;
        let mut w = h.apply(&self.chain[last])?;
        self.matvecs += 1;
        let g = w.norm();
        self.gains.push(g);
        if g == 0.0 {
            self.broken = true;
            return Ok(false);
        }
        w.scale(Complex64::new(1.0 / g, 0.0));
        self.raw_norms.push(self.raw_norms[last] * g);
        self.chain.push(w);
        Ok(true)
    }

    fn dim(&self) -> usize {
        self.entries.len()
    }

    fn grow(&mut self) {
        let k = self.dim();
        let mut s = CMatrix::zeros(k + 1, k + 1);
        let mut hm = CMatrix::zeros(k + 1, k + 1);
        s.view_mut((0, 0), (k, k)).copy_from(&self.overlap);
        hm.view_mut((0, 0), (k, k)).copy_from(&self.hamiltonian);
        self.overlap = s;
        self.hamiltonian = hm;
    }

    /// Appends `Phi^(power)` of the current state and computes its column.
    fn push_chain_entry(&mut self, power: usize, origin: Origin) -> Result<()> {
        self.grow();
        self.entries.push(BasisEntry {
            state: self.chain[power].clone(),
            power,
            age: 0,
            raw_norm: self.raw_norms[power],
        });
        self.origins.push(origin);
        self.fill_column(self.dim() - 1)
    }

    /// Appends a kept state together with its cached block against the
    /// kept states already present.
    fn push_recycled(&mut self, entry: BasisEntry, cached: &[(usize, Complex64, Complex64)]) {
        self.grow();
        let b = self.dim();
        for &(a, s, hm) in cached {
            self.overlap[(a, b)] = s;
            self.hamiltonian[(a, b)] = hm;
            if a != b {
                self.overlap[(b, a)] = s.conj();
                self.hamiltonian[(b, a)] = hm.conj();
            }
        }
        self.entries.push(entry);
        self.origins.push(Origin::Recycled);
    }

    /// `<bra|Phi^(p)>` and `<bra|H Phi^(p)>`, using `H Phi^(p) = g_p Phi^(p+1)`.
    fn chain_elements(&self, bra: &WaveState, p: usize) -> Result<(Complex64, Complex64)> {
        let s = inner(bra, &self.chain[p])?;
        let hm = match self.gains.get(p) {
            Some(&g) if g > 0.0 => inner(bra, &self.chain[p + 1])? * g,
            Some(_) => Complex64::default(),
            None => unreachable!("chain link for power {p} not computed"),
        };
        Ok((s, hm))
    }

    /// Row and column of the chain entry at `b` against everything present.
    fn fill_column(&mut self, b: usize) -> Result<()> {
        let p = self.entries[b].power;
        for a in 0..self.dim() {
            let (s, hm) = self.chain_elements(&self.entries[a].state, p)?;
            self.overlap[(a, b)] = s;
            self.hamiltonian[(a, b)] = hm;
            if a == b {
                continue;
            }
            if self.origins[a] == Origin::Recycled {
                self.overlap[(b, a)] = s.conj();
                self.hamiltonian[(b, a)] = hm.conj();
            } else {
                let (s, hm) = self.chain_elements(&self.entries[b].state, self.entries[a].power)?;
                self.overlap[(b, a)] = s;
                self.hamiltonian[(b, a)] = hm;
            }
        }
        Ok(())
    }

    fn remove(&mut self, indices: &[usize]) {
        let keep: Vec<usize> = (0..self.dim()).filter(|i| !indices.contains(i)).collect();
        self.overlap = CMatrix::from_fn(keep.len(), keep.len(), |i, j| {
            self.overlap[(keep[i], keep[j])]
        });
        self.hamiltonian = CMatrix::from_fn(keep.len(), keep.len(), |i, j| {
            self.hamiltonian[(keep[i], keep[j])]
        });
        let mut idx = 0;
        self.entries.retain(|_| {
            idx += 1;
            !indices.contains(&(idx - 1))
        });
        let mut idx = 0;
        self.origins.retain(|_| {
            idx += 1;
            !indices.contains(&(idx - 1))
        });
    }

    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    /// Symmetrized overlap/Hamiltonian pair of the current basis.
    pub fn system(&self) -> Result<SubspaceSystem> {
        SubspaceSystem::new(self.overlap.clone(), self.hamiltonian.clone())
    }

    fn flagged(&self, threshold: f64) -> Result<Vec<usize>> {
        let sys = self.system()?;
        Ok(thresholded_cholesky(&sys.overlap, threshold)?.dependent)
    }

    fn drop_dependent(&mut self, flagged: &[usize]) {
        self.dropped += flagged.len();
        self.remove(flagged);
    }
}

/// Swaps each flagged state for the next unused Krylov power of the current
/// state, `H^(m+1+r) psi` for `r = 0, 1, ...`. Every replacement costs one
/// Hamiltonian application for the matrix elements of the new state.
///
/// Returns the number of replacements made. Fails once a replacement would
/// need a power above the cap.
pub fn replace_dependent<H: HermitianOperator + ?Sized>(
    basis: &mut StepBasis,
    h: &H,
    flagged: &[usize],
) -> Result<usize> {
    if flagged.is_empty() {
        return Ok(0);
    }
    basis.remove(flagged);
    let mut made = 0;
    for _ in flagged {
        let power = basis.next_power;
        if power > basis.power_cap {
            return Err(Error::DependencyUnresolved {
                remaining: flagged.len() - made,
                cap: basis.power_cap,
            });
        }
        if power >= basis.chain.len() {
            // Krylov chain terminated: no further directions exist
            basis.dropped += flagged.len() - made;
            break;
        }
        if basis.gains.len() <= power {
            basis.extend_chain(h)?;
        }
        basis.push_chain_entry(power, Origin::Replacement)?;
        basis.next_power += 1;
        basis.replacements += 1;
        made += 1;
    }
    Ok(made)
}

/// Sliding collection of basis states carried between steps.
#[derive(Clone, Debug)]
pub struct BasisWindow {
    config: WindowConfig,
    target_n: usize,
    /// kept states, newest step first and highest power first
    entries: Vec<BasisEntry>,
    overlap: CMatrix,
    hamiltonian: CMatrix,
    scratch_top: Option<WaveState>,
    primed: bool,
    steps: u64,
    replacements: u64,
    dropped: u64,
    last_dimension: usize,
}

impl BasisWindow {
    pub fn new(config: WindowConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            target_n: config.n,
            entries: Vec::new(),
            overlap: CMatrix::zeros(0, 0),
            hamiltonian: CMatrix::zeros(0, 0),
            scratch_top: None,
            primed: false,
            steps: 0,
            replacements: 0,
            dropped: 0,
            last_dimension: 0,
        })
    }

    pub fn config(&self) -> &WindowConfig {
        &self.config
    }

    /// Kept states available for the next step.
    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    /// Cached overlap block of the kept states.
    pub fn cached_overlap(&self) -> &CMatrix {
        &self.overlap
    }

    pub fn cached_hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    /// Highest-power state of the last step, needed only for its matrix
    /// elements.
    pub fn scratch_top(&self) -> Option<&WaveState> {
        self.scratch_top.as_ref()
    }

    pub fn is_primed(&self) -> bool {
        self.primed
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn replacements(&self) -> u64 {
        self.replacements
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// Subspace dimension used by the most recent step.
    pub fn last_dimension(&self) -> usize {
        self.last_dimension
    }

    /// Current target dimension (smaller than `config.n` after auto-shrink).
    pub fn target_dimension(&self) -> usize {
        self.target_n
    }

    /// Advances `psi` by `dt`, priming the window on the first call.
    pub fn step<H: HermitianOperator + ?Sized>(
        &mut self,
        h: &H,
        psi: &WaveState,
        dt: f64,
    ) -> Result<(WaveState, StepReport)> {
        if self.primed {
            self.regular_step(h, psi, dt)
        } else {
            self.first_step(h, psi, dt)
        }
    }

    fn first_step<H: HermitianOperator + ?Sized>(
        &mut self,
        h: &H,
        psi: &WaveState,
        dt: f64,
    ) -> Result<(WaveState, StepReport)> {
        let n = self.target_n;
        let mut basis = StepBasis::start(h, psi, n, self.config.power_cap().max(n))?;
        for p in 0..basis.chain.len().min(n) {
            basis.push_chain_entry(p, Origin::Krylov)?;
        }
        // every state is a Krylov power of psi0: dependence means the
        // powers have (numerically) stopped adding directions
        let flagged = basis.flagged(self.config.threshold)?;
        basis.drop_dependent(&flagged);
        self.finish(basis, psi, dt)
    }

    fn regular_step<H: HermitianOperator + ?Sized>(
        &mut self,
        h: &H,
        psi: &WaveState,
        dt: f64,
    ) -> Result<(WaveState, StepReport)> {
        let m = self.config.m;
        let mut basis = StepBasis::start(h, psi, m + 1, self.config.power_cap())?;
        for p in 0..basis.chain.len().min(m + 1) {
            basis.push_chain_entry(p, Origin::Krylov)?;
        }
        let n_fresh = basis.dim();
        let n_recycled = self.target_n.saturating_sub(m + 1).min(self.entries.len());
        for r in 0..n_recycled {
            let cached: Vec<_> = (0..=r)
                .map(|q| (n_fresh + q, self.overlap[(q, r)], self.hamiltonian[(q, r)]))
                .collect();
            basis.push_recycled(self.entries[r].clone(), &cached);
            basis.fill_recycled_row(n_fresh + r)?;
        }

        loop {
            let flagged = basis.flagged(self.config.threshold)?;
            if flagged.is_empty() {
                break;
            }
            let krylov_dependent = flagged.iter().any(|&i| basis.origins[i] == Origin::Krylov);
            if krylov_dependent {
                // invariant Krylov space: extra powers cannot help
                basis.drop_dependent(&flagged);
                break;
            }
            if self.config.auto_shrink {
                self.target_n = (self.target_n - flagged.len()).max(m + 1);
                basis.drop_dependent(&flagged);
                break;
            }
            replace_dependent(&mut basis, h, &flagged)?;
        }
        self.finish(basis, psi, dt)
    }

    /// Solves the subspace equation, forms the new state and slides the
    /// window.
    fn finish(
        &mut self,
        basis: StepBasis,
        psi: &WaveState,
        dt: f64,
    ) -> Result<(WaveState, StepReport)> {
        let sys = basis.system()?;
        let mut c0 = vec![Complex64::default(); basis.dim()];
        c0[0] = Complex64::new(psi.norm(), 0.0);
        let c = evolve_subspace(&sys, &c0, dt)?;
        let states: Vec<&WaveState> = basis.entries.iter().map(|e| &e.state).collect();
        let next = linear_combination(&c, &states)?;

        let report = StepReport {
            dimension: basis.dim(),
            matvecs: basis.matvecs,
            replacements: basis.replacements,
            dropped: basis.dropped,
        };

        // slide: age everything, keep what the next step can use
        let keep_count = self.target_n.saturating_sub(self.config.m + 1);
        let mut order: Vec<usize> = (0..basis.dim())
            .filter(|&i| basis.entries[i].age < self.config.max_age)
            .collect();
        order.sort_by(|&a, &b| {
            let (ea, eb) = (&basis.entries[a], &basis.entries[b]);
            ea.age.cmp(&eb.age).then(eb.power.cmp(&ea.power))
        });
        order.truncate(keep_count);
        self.overlap = CMatrix::from_fn(order.len(), order.len(), |i, j| {
            sys.overlap[(order[i], order[j])]
        });
        self.hamiltonian = CMatrix::from_fn(order.len(), order.len(), |i, j| {
            sys.hamiltonian[(order[i], order[j])]
        });
        let top = basis.chain.len() - 1;
        self.scratch_top = (top > 0).then(|| basis.chain[top].clone());
        self.entries = order
            .iter()
            .map(|&i| {
                let mut e = basis.entries[i].clone();
                e.age += 1;
                e
            })
            .collect();

        self.primed = true;
        self.steps += 1;
        self.replacements += report.replacements as u64;
        self.dropped += report.dropped as u64;
        self.last_dimension = report.dimension;
        Ok((next, report))
    }

    /// Inserts a copy of kept state `index` right after it. Test hook for
    /// exercising the dependency handling.
    #[doc(hidden)]
    pub fn duplicate_entry(&mut self, index: usize) {
        let k = self.entries.len();
        let map: Vec<usize> = (0..=k)
            .map(|i| if i <= index { i } else { i - 1 })
            .collect();
        self.overlap = CMatrix::from_fn(k + 1, k + 1, |i, j| self.overlap[(map[i], map[j])]);
        self.hamiltonian =
            CMatrix::from_fn(k + 1, k + 1, |i, j| self.hamiltonian[(map[i], map[j])]);
        let e = self.entries[index].clone();
        self.entries.insert(index + 1, e);
    }
}

impl StepBasis {
    /// Elements between recycled state `b` and the Krylov states already
    /// present come from fresh inner products; this fills them.
    fn fill_recycled_row(&mut self, b: usize) -> Result<()> {
        for a in 0..self.dim() {
            if self.origins[a] == Origin::Recycled {
                continue;
            }
            let (s, hm) = self.chain_elements(&self.entries[b].state, self.entries[a].power)?;
            self.overlap[(b, a)] = s;
            self.overlap[(a, b)] = s.conj();
            self.hamiltonian[(b, a)] = hm;
            self.hamiltonian[(a, b)] = hm.conj();
        }
        Ok(())
    }
}

/// Free-function form of [`BasisWindow::step`] on a primed window.
pub fn extended_step<H: HermitianOperator + ?Sized>(
    window: &mut BasisWindow,
    h: &H,
    psi: &WaveState,
    dt: f64,
) -> Result<(WaveState, StepReport)> {
    if !window.is_primed() {
        return Err(Error::WindowConfig(
            "window has not been primed by a first step".into(),
        ));
    }
    window.step(h, psi, dt)
}

/// First step from `psi0`: the basis is the `n` normalized powers
/// `H^i psi0`, `i < n`. Returns `psi(dt)` and the primed window.
pub fn first_step_basis<H: HermitianOperator + ?Sized>(
    h: &H,
    psi0: &WaveState,
    config: WindowConfig,
    dt: f64,
) -> Result<(WaveState, BasisWindow)> {
    let mut window = BasisWindow::new(config)?;
    let (psi, _) = window.step(h, psi0, dt)?;
    Ok((psi, window))
}
