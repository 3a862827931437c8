//! Quasi-static closed-circuit liquid redistribution among chambers.
//!
//! A sealed gripper is a fixed budget of liquid shared by a contact chamber
//! and two gripping chambers through short identical tubes. Tube losses are
//! neglected, so at every instant the circuit holds one shared pressure and
//! the only state is how the liquid splits among the chambers, each of
//! which answers pressure with a volume according to its own traced
//! pressure-volume characteristic. Residual air that could not be purged is
//! lumped into a single linear parasitic compliance.
//!
//! Equilibrium is a one-dimensional root solve: find the shared pressure at
//! which the chamber volumes plus the compliance-stored volume add up to
//! the liquid budget. A characteristic is multivalued in general, so each
//! node also carries a branch tag naming the monotone piece it currently
//! rides. When the balance drives a node past the end of its branch and
//! that end is a fold, the node jumps branches: it lands on the nearest
//! stable branch, nearest in volume at the frozen fold pressure, and the
//! shared pressure is then re-solved with the liquid budget unchanged, so
//! every snap is isochoric at the network level even though the jumping
//! node itself changes volume at the expense of its neighbors. Nodes that
//! fold simultaneously, like the two identical gripping chambers, jump in
//! the same round, which keeps the cascade deterministic and symmetric.
//!
//! An object pressing on the contact chamber is modeled by prescribing
//! that node's volume: the membrane is pushed back to wherever the object
//! holds it, its characteristic temporarily overridden by the contact
//! force, while the displaced liquid loads the rest of the circuit.

use crate::error::{Error, Result};
use crate::path::EquilibriumPath;
use crate::scalar::{of, Real};

/// One point of a pressure-volume characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharSample<T> {
    pub volume_mm3: T,
    pub pressure_kpa: T,
    /// Stability flag carried over from the trace or the ingested curve.
    pub stable: bool,
}

/// A maximal run of samples with strictly monotone pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct BranchSpan {
    /// Inclusive sample range; boundary samples are shared with the
    /// neighboring branches.
    start: usize,
    end: usize,
    stable: bool,
}

/// A sampled pressure-volume curve split into monotone-pressure branches.
///
/// Branch boundaries sit at the interior pressure extrema of the sample
/// sequence. A branch counts as stable when all its strictly interior
/// samples are stable; a two-sample branch falls back to both endpoint
/// flags, which keeps marginal fold samples from deciding alone.
#[derive(Debug, Clone, PartialEq)]
pub struct PvCharacteristic<T> {
    samples: Vec<CharSample<T>>,
    branches: Vec<BranchSpan>,
}

impl<T: Real> PvCharacteristic<T> {
    pub fn from_samples(samples: Vec<CharSample<T>>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Ingest(format!(
                "a characteristic needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.volume_mm3.is_finite() || !s.pressure_kpa.is_finite() {
                return Err(Error::NonFinite { context: format!("characteristic sample {i}") });
            }
            if s.volume_mm3 <= T::zero() {
                return Err(Error::Ingest(format!(
                    "sample {i} has non-positive volume {}",
                    s.volume_mm3
                )));
            }
        }
        for i in 1..samples.len() {
            if samples[i].pressure_kpa == samples[i - 1].pressure_kpa {
                return Err(Error::Ingest(format!(
                    "flat pressure segment at sample {i}; the curve cannot be \
                     inverted there"
                )));
            }
        }
        let branches = Self::split_branches(&samples);
        Ok(Self { samples, branches })
    }

    /// Build from a traced equilibrium path, keeping its stability flags.
    pub fn from_path(path: &EquilibriumPath<T>) -> Result<Self> {
        Self::from_samples(
            path.samples()
                .iter()
                .map(|s| CharSample {
                    volume_mm3: s.volume_mm3,
                    pressure_kpa: s.pressure_kpa,
                    stable: s.stable,
                })
                .collect(),
        )
    }

    fn split_branches(samples: &[CharSample<T>]) -> Vec<BranchSpan> {
        let mut bounds = vec![0];
        for i in 1..samples.len() - 1 {
            let d1 = samples[i].pressure_kpa - samples[i - 1].pressure_kpa;
            let d2 = samples[i + 1].pressure_kpa - samples[i].pressure_kpa;
            if d1 * d2 < T::zero() {
                bounds.push(i);
            }
        }
        bounds.push(samples.len() - 1);
        bounds
            .windows(2)
            .map(|w| {
                let (start, end) = (w[0], w[1]);
                let stable = if end - start >= 2 {
                    samples[start + 1..end].iter().all(|s| s.stable)
                } else {
                    samples[start].stable && samples[end].stable
                };
                BranchSpan { start, end, stable }
            })
            .collect()
    }

    /// Same curve with pressures and volumes scaled; the branch structure
    /// and stability flags are unchanged.
    pub fn scaled(&self, pressure_factor: T, volume_factor: T) -> Result<Self> {
        if !(pressure_factor > T::zero()) || !(volume_factor > T::zero()) {
            return Err(Error::Ingest(
                "characteristic scale factors must be positive".into(),
            ));
        }
        Self::from_samples(
            self.samples
                .iter()
                .map(|s| CharSample {
                    volume_mm3: s.volume_mm3 * volume_factor,
                    pressure_kpa: s.pressure_kpa * pressure_factor,
                    stable: s.stable,
                })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[CharSample<T>] {
        &self.samples
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn branch_is_stable(&self, branch: usize) -> bool {
        self.branches[branch].stable
    }

    /// Pressure range of a branch as `(low, high)`.
    pub fn branch_pressure_range(&self, branch: usize) -> (T, T) {
        let b = self.branches[branch];
        let (pa, pb) = (self.samples[b.start].pressure_kpa, self.samples[b.end].pressure_kpa);
        (pa.min(pb), pa.max(pb))
    }

    /// Volume range of a branch as `(low, high)`.
    pub fn branch_volume_range(&self, branch: usize) -> (T, T) {
        let b = self.branches[branch];
        let (lo, hi) = (b.start, b.end);
        let mut vmin = T::infinity();
        let mut vmax = T::neg_infinity();
        for s in &self.samples[lo..=hi] {
            vmin = vmin.min(s.volume_mm3);
            vmax = vmax.max(s.volume_mm3);
        }
        (vmin, vmax)
    }

    pub fn min_volume_mm3(&self) -> T {
        self.samples.iter().map(|s| s.volume_mm3).fold(T::infinity(), T::min)
    }

    pub fn max_volume_mm3(&self) -> T {
        self.samples.iter().map(|s| s.volume_mm3).fold(T::neg_infinity(), T::max)
    }

    pub fn first_stable_branch(&self) -> Option<usize> {
        self.branches.iter().position(|b| b.stable)
    }

    pub fn last_stable_branch(&self) -> Option<usize> {
        self.branches.iter().rposition(|b| b.stable)
    }

    /// Pressure at the fold terminating the first stable branch, when the
    /// curve has one: the snap-through threshold of a chamber at rest.
    pub fn snap_pressure_kpa(&self) -> Option<T> {
        let b = self.first_stable_branch()?;
        let idx = self.fold_above(b)?;
        Some(self.samples[idx].pressure_kpa)
    }

    /// Volume on a branch at the given pressure, clamped to the branch's
    /// pressure range.
    pub fn volume_at(&self, branch: usize, p_kpa: T) -> T {
        let b = self.branches[branch];
        let rising = self.samples[b.end].pressure_kpa > self.samples[b.start].pressure_kpa;
        let (p_lo, p_hi) = self.branch_pressure_range(branch);
        let p = p_kpa.max(p_lo).min(p_hi);
        for j in b.start..b.end {
            let (pa, pb) = (self.samples[j].pressure_kpa, self.samples[j + 1].pressure_kpa);
            let inside = if rising { pa <= p && p <= pb } else { pb <= p && p <= pa };
            if inside {
                let f = (p - pa) / (pb - pa);
                let (va, vb) = (self.samples[j].volume_mm3, self.samples[j + 1].volume_mm3);
                return va + f * (vb - va);
            }
        }
        // The clamp above guarantees some segment contains p.
        self.samples[b.end].volume_mm3
    }

    /// Fold sample index at the high-pressure end of a branch, when that
    /// end is an interior fold rather than the curve's boundary.
    fn fold_above(&self, branch: usize) -> Option<usize> {
        let b = self.branches[branch];
        let rising = self.samples[b.end].pressure_kpa > self.samples[b.start].pressure_kpa;
        let idx = if rising { b.end } else { b.start };
        (idx > 0 && idx < self.samples.len() - 1).then_some(idx)
    }

    /// Fold sample index at the low-pressure end of a branch, when interior.
    fn fold_below(&self, branch: usize) -> Option<usize> {
        let b = self.branches[branch];
        let rising = self.samples[b.end].pressure_kpa > self.samples[b.start].pressure_kpa;
        let idx = if rising { b.start } else { b.end };
        (idx > 0 && idx < self.samples.len() - 1).then_some(idx)
    }
}

/// What a chamber does in the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChamberRole {
    /// Touched by the object; its displaced liquid triggers the others.
    Contact,
    /// Everts to clamp the object.
    Gripping,
}

/// One chamber of the circuit with its current state.
#[derive(Debug, Clone)]
pub struct ChamberNode<T> {
    id: String,
    role: ChamberRole,
    characteristic: PvCharacteristic<T>,
    branch: usize,
    volume_mm3: T,
    /// Volume at assembly; contact displacement is prescribed relative to
    /// this baseline.
    assembly_volume_mm3: T,
    /// When an object pins the membrane the volume is prescribed and the
    /// node leaves the free pressure balance.
    prescribed_mm3: Option<T>,
}

impl<T: Real> ChamberNode<T> {
    /// Node starting on the first stable branch at its first sample.
    pub fn at_rest(id: &str, role: ChamberRole, characteristic: PvCharacteristic<T>) -> Result<Self> {
        let branch = characteristic.first_stable_branch().ok_or_else(|| {
            Error::Network(format!("node '{id}': characteristic has no stable branch"))
        })?;
        let b = characteristic.branches[branch];
        let volume_mm3 = characteristic.samples[b.start].volume_mm3;
        Ok(Self {
            id: id.into(),
            role,
            characteristic,
            branch,
            volume_mm3,
            assembly_volume_mm3: volume_mm3,
            prescribed_mm3: None,
        })
    }

    /// Node starting already snapped through: on the last stable branch at
    /// zero pressure, the way the paper's contact chamber is assembled.
    pub fn pre_snapped(
        id: &str,
        role: ChamberRole,
        characteristic: PvCharacteristic<T>,
    ) -> Result<Self> {
        let branch = characteristic.last_stable_branch().ok_or_else(|| {
            Error::Network(format!("node '{id}': characteristic has no stable branch"))
        })?;
        let (p_lo, p_hi) = characteristic.branch_pressure_range(branch);
        if p_lo > T::zero() || p_hi < T::zero() {
            return Err(Error::Network(format!(
                "node '{id}': the snapped branch does not cross zero pressure, \
                 so a relaxed pre-snapped state does not exist"
            )));
        }
        let volume_mm3 = characteristic.volume_at(branch, T::zero());
        Ok(Self {
            id: id.into(),
            role,
            characteristic,
            branch,
            volume_mm3,
            assembly_volume_mm3: volume_mm3,
            prescribed_mm3: None,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn role(&self) -> ChamberRole {
        self.role
    }

    pub fn volume_mm3(&self) -> T {
        self.volume_mm3
    }

    pub fn branch(&self) -> usize {
        self.branch
    }

    /// Volume the node held right after network assembly; displacement
    /// prescriptions are measured from here.
    pub fn assembly_volume_mm3(&self) -> T {
        self.assembly_volume_mm3
    }

    pub fn characteristic(&self) -> &PvCharacteristic<T> {
        &self.characteristic
    }

    pub fn is_prescribed(&self) -> bool {
        self.prescribed_mm3.is_some()
    }

    fn effective_volume(&self, p_kpa: T) -> T {
        match self.prescribed_mm3 {
            Some(v) => v,
            None => self.characteristic.volume_at(self.branch, p_kpa),
        }
    }
}

/// One isochoric branch jump of a node during a cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapEvent<T> {
    pub node_id: String,
    /// Equilibration step counter of the network when the event fired.
    pub step: usize,
    pub pressure_before_kpa: T,
    pub pressure_after_kpa: T,
    pub volume_before_mm3: T,
    pub volume_after_mm3: T,
}

/// One sampled instant of an injection run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T> {
    pub t_s: T,
    pub total_liquid_mm3: T,
    pub pressure_kpa: T,
    /// Volumes in the network's node order.
    pub node_volumes_mm3: Vec<T>,
    /// Snap events fired during this step.
    pub n_events: usize,
}

/// Time-stamped record of an injection run.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTrace<T> {
    pub node_ids: Vec<String>,
    pub rows: Vec<TraceRow<T>>,
}

/// The closed circuit: chambers, liquid budget, parasitic compliance, and
/// the shared pressure.
#[derive(Debug, Clone)]
pub struct HydraulicNetwork<T> {
    nodes: Vec<ChamberNode<T>>,
    total_liquid_mm3: T,
    parasitic_compliance_mm3_per_kpa: T,
    pressure_kpa: T,
    step: usize,
}

/// Cascades that have not settled after this many jump rounds are reported
/// as diverged.
const MAX_CASCADE_ROUNDS: usize = 32;

const BISECTION_ITERS: usize = 160;

enum BalanceOutcome<T> {
    Root(T),
    /// The budget needs more volume than any free branch offers at its
    /// high-pressure end; the listed nodes bind there.
    BindAbove(Vec<usize>),
    /// The budget needs less volume than the free branches hold at their
    /// low-pressure end.
    BindBelow(Vec<usize>),
}

impl<T: Real> HydraulicNetwork<T> {
    /// Assemble and equilibrate a circuit. The initial node states must be
    /// consistent with the liquid budget: assembly must find a common
    /// pressure without any node snapping.
    pub fn assemble(
        nodes: Vec<ChamberNode<T>>,
        total_liquid_mm3: T,
        parasitic_compliance_mm3_per_kpa: T,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Network("a network needs at least one node".into()));
        }
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if nodes[i].id == nodes[j].id {
                    return Err(Error::Network(format!("duplicate node id '{}'", nodes[i].id)));
                }
            }
        }
        if !total_liquid_mm3.is_finite() || total_liquid_mm3 <= T::zero() {
            return Err(Error::Network(format!(
                "total liquid volume must be positive, got {total_liquid_mm3}"
            )));
        }
        if !parasitic_compliance_mm3_per_kpa.is_finite()
            || parasitic_compliance_mm3_per_kpa < T::zero()
        {
            return Err(Error::Network(
                "parasitic compliance must be finite and non-negative".into(),
            ));
        }
        let mut net = Self {
            nodes,
            total_liquid_mm3,
            parasitic_compliance_mm3_per_kpa,
            pressure_kpa: T::zero(),
            step: 0,
        };
        let events = net.equilibrate_cascade()?;
        if !events.is_empty() {
            return Err(Error::Network(format!(
                "assembly is not quiescent: equilibration snapped node '{}'",
                events[0].node_id
            )));
        }
        for node in &mut net.nodes {
            node.assembly_volume_mm3 = node.volume_mm3;
        }
        Ok(net)
    }

    /// The paper's default circuit: a pre-snapped contact chamber and two
    /// gripping chambers at rest, sized so the relaxed assembly sits at
    /// zero pressure, with no parasitic compliance.
    pub fn standard_gripper(
        contact: PvCharacteristic<T>,
        gripping: PvCharacteristic<T>,
    ) -> Result<Self> {
        let nodes = vec![
            ChamberNode::pre_snapped("contact", ChamberRole::Contact, contact)?,
            ChamberNode::at_rest("grip1", ChamberRole::Gripping, gripping.clone())?,
            ChamberNode::at_rest("grip2", ChamberRole::Gripping, gripping)?,
        ];
        let total = nodes.iter().fold(T::zero(), |acc, n| acc + n.volume_mm3);
        Self::assemble(nodes, total, T::zero())
    }

    pub fn pressure_kpa(&self) -> T {
        self.pressure_kpa
    }

    pub fn total_liquid_mm3(&self) -> T {
        self.total_liquid_mm3
    }

    pub fn parasitic_compliance_mm3_per_kpa(&self) -> T {
        self.parasitic_compliance_mm3_per_kpa
    }

    pub fn nodes(&self) -> &[ChamberNode<T>] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Result<&ChamberNode<T>> {
        self.nodes
            .iter()
            .find(|n| n.id == id)
            .ok_or_else(|| Error::Network(format!("no node named '{id}'")))
    }

    /// Sum of chamber volumes plus the compliance-stored volume; equals
    /// the liquid budget at every equilibrium.
    pub fn stored_volume_mm3(&self) -> T {
        self.nodes.iter().fold(T::zero(), |acc, n| acc + n.volume_mm3)
            + self.parasitic_compliance_mm3_per_kpa * self.pressure_kpa
    }

    /// Press an object into a node: its volume is prescribed to the
    /// assembly volume minus `displaced_mm3`, and the circuit
    /// re-equilibrates, cascading any snap-through jumps. Zero displacement
    /// releases the node back to its characteristic.
    pub fn with_contact_displacement(
        &self,
        node_id: &str,
        displaced_mm3: T,
    ) -> Result<(Self, Vec<SnapEvent<T>>)> {
        if !displaced_mm3.is_finite() || displaced_mm3 < T::zero() {
            return Err(Error::Network(format!(
                "displaced volume must be non-negative, got {displaced_mm3}"
            )));
        }
        let idx = self
            .nodes
            .iter()
            .position(|n| n.id == node_id)
            .ok_or_else(|| Error::Network(format!("no node named '{node_id}'")))?;
        let mut net = self.clone();
        net.step += 1;
        if displaced_mm3 == T::zero() {
            net.nodes[idx].prescribed_mm3 = None;
        } else {
            let v = self.nodes[idx].assembly_volume_mm3 - displaced_mm3;
            let (vmin, vmax) = (
                self.nodes[idx].characteristic.min_volume_mm3(),
                self.nodes[idx].characteristic.max_volume_mm3(),
            );
            if v < vmin || v > vmax {
                return Err(Error::OutOfCoverage(format!(
                    "displacing {displaced_mm3} mm^3 pushes node '{node_id}' to \
                     {v} mm^3, outside its characteristic range [{vmin}, {vmax}]"
                )));
            }
            net.nodes[idx].prescribed_mm3 = Some(v);
            net.nodes[idx].volume_mm3 = v;
        }
        let events = net.equilibrate_cascade()?;
        Ok((net, events))
    }

    /// Quasi-static injection: the liquid budget grows at the given flow
    /// over `steps` equal increments, re-equilibrating after each. A zero
    /// increment leaves the state bit-for-bit untouched. If an increment
    /// makes the balance infeasible the trace is truncated at the last
    /// feasible state.
    pub fn inject(
        &self,
        flow_mm3_per_s: T,
        duration_s: T,
        steps: usize,
    ) -> Result<(Self, NetworkTrace<T>, Vec<SnapEvent<T>>)> {
        if !(flow_mm3_per_s >= T::zero()) || !(duration_s >= T::zero()) {
            return Err(Error::Network(
                "flow and duration must be non-negative and finite".into(),
            ));
        }
        let mut net = self.clone();
        let mut events = Vec::new();
        let node_ids: Vec<String> = self.nodes.iter().map(|n| n.id.clone()).collect();
        let mut rows = vec![net.trace_row(T::zero(), 0)];
        if duration_s > T::zero() && steps > 0 {
            let dt = duration_s / of::<T>(steps as f64);
            let dv = flow_mm3_per_s * dt;
            for k in 1..=steps {
                let t = dt * of::<T>(k as f64);
                if dv == T::zero() {
                    rows.push(net.trace_row(t, 0));
                    continue;
                }
                let mut trial = net.clone();
                trial.step += 1;
                trial.total_liquid_mm3 = trial.total_liquid_mm3 + dv;
                match trial.equilibrate_cascade() {
                    Ok(step_events) => {
                        rows.push(trial.trace_row(t, step_events.len()));
                        events.extend(step_events);
                        net = trial;
                    }
                    Err(Error::InfeasibleVolume(_)) | Err(Error::OutOfCoverage(_)) => break,
                    Err(e) => return Err(e),
                }
            }
        }
        Ok((net, NetworkTrace { node_ids, rows }, events))
    }

    fn trace_row(&self, t_s: T, n_events: usize) -> TraceRow<T> {
        TraceRow {
            t_s,
            total_liquid_mm3: self.total_liquid_mm3,
            pressure_kpa: self.pressure_kpa,
            node_volumes_mm3: self.nodes.iter().map(|n| n.volume_mm3).collect(),
            n_events,
        }
    }

    fn budget_mismatch(&self, p: T) -> T {
        let held = self
            .nodes
            .iter()
            .fold(T::zero(), |acc, n| acc + n.effective_volume(p));
        held + self.parasitic_compliance_mm3_per_kpa * p - self.total_liquid_mm3
    }

    /// Bracket the shared pressure over the free nodes' current branches
    /// and either bisect to the root or report which nodes bind.
    fn balance(&self) -> Result<BalanceOutcome<T>> {
        let free: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].prescribed_mm3.is_none())
            .collect();
        if free.is_empty() {
            let c = self.parasitic_compliance_mm3_per_kpa;
            if c > T::zero() {
                let held = self
                    .nodes
                    .iter()
                    .fold(T::zero(), |acc, n| acc + n.effective_volume(T::zero()));
                return Ok(BalanceOutcome::Root((self.total_liquid_mm3 - held) / c));
            }
            return Err(Error::Network(
                "every node is volume-prescribed and there is no compliance \
                 to set the pressure"
                    .into(),
            ));
        }

        let mut p_lo = T::neg_infinity();
        let mut p_hi = T::infinity();
        for &i in &free {
            let (lo, hi) = self.nodes[i].characteristic.branch_pressure_range(self.nodes[i].branch);
            p_lo = p_lo.max(lo);
            p_hi = p_hi.min(hi);
        }
        let p_tol = of::<T>(1e-12) * (T::one() + p_lo.abs().max(p_hi.abs()));
        let v_tol = of::<T>(1e-9) * self.total_liquid_mm3.abs().max(T::one());

        let bind = |edge: T, upper: bool| -> Vec<usize> {
            free.iter()
                .copied()
                .filter(|&i| {
                    let (lo, hi) =
                        self.nodes[i].characteristic.branch_pressure_range(self.nodes[i].branch);
                    let end = if upper { hi } else { lo };
                    (end - edge).abs() <= p_tol
                })
                .collect()
        };

        if p_lo > p_hi + p_tol {
            // Disjoint branch pressure ranges: whichever node caps the
            // upper end must leave its branch for overlap to exist.
            return Ok(BalanceOutcome::BindAbove(bind(p_hi, true)));
        }
        let g_hi = self.budget_mismatch(p_hi);
        if g_hi < -v_tol {
            return Ok(BalanceOutcome::BindAbove(bind(p_hi, true)));
        }
        let g_lo = self.budget_mismatch(p_lo);
        if g_lo > v_tol {
            return Ok(BalanceOutcome::BindBelow(bind(p_lo, false)));
        }
        // Roots touching a bracket end are taken exactly; the relaxed
        // assembly sits at zero pressure this way, bit for bit.
        if g_lo >= T::zero() {
            return Ok(BalanceOutcome::Root(p_lo));
        }
        if g_hi <= T::zero() {
            return Ok(BalanceOutcome::Root(p_hi));
        }

        let (mut a, mut b) = (p_lo, p_hi);
        let mut ga = g_lo;
        for _ in 0..BISECTION_ITERS {
            let m = of::<T>(0.5) * (a + b);
            let gm = self.budget_mismatch(m);
            if gm == T::zero() {
                return Ok(BalanceOutcome::Root(m));
            }
            if (ga < T::zero()) == (gm < T::zero()) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        Ok(BalanceOutcome::Root(of::<T>(0.5) * (a + b)))
    }

    /// Solve the balance, jumping folded nodes between rounds until the
    /// circuit settles.
    fn equilibrate_cascade(&mut self) -> Result<Vec<SnapEvent<T>>> {
        let mut events: Vec<SnapEvent<T>> = Vec::new();
        for _ in 0..MAX_CASCADE_ROUNDS {
            match self.balance()? {
                BalanceOutcome::Root(p) => {
                    self.pressure_kpa = p;
                    for node in &mut self.nodes {
                        node.volume_mm3 = node.effective_volume(p);
                    }
                    for ev in &mut events {
                        ev.pressure_after_kpa = p;
                        let node = self.nodes.iter().find(|n| n.id == ev.node_id);
                        ev.volume_after_mm3 =
                            node.map_or(ev.volume_after_mm3, |n| n.volume_mm3);
                    }
                    return Ok(events);
                }
                BalanceOutcome::BindAbove(binding) => {
                    if binding.is_empty() {
                        return Err(Error::InfeasibleVolume(
                            "the liquid budget exceeds what the current branches \
                             hold at their highest common pressure and no node \
                             can bind there"
                                .into(),
                        ));
                    }
                    for i in binding {
                        self.jump_node(i, true, &mut events)?;
                    }
                }
                BalanceOutcome::BindBelow(binding) => {
                    if binding.is_empty() {
                        return Err(Error::InfeasibleVolume(
                            "the liquid budget is below what the current branches \
                             hold at their lowest common pressure and no node can \
                             bind there"
                                .into(),
                        ));
                    }
                    for i in binding {
                        self.jump_node(i, false, &mut events)?;
                    }
                }
            }
        }
        Err(Error::CascadeDiverged { rounds: MAX_CASCADE_ROUNDS })
    }

    /// Move a node off the fold at the given end of its branch onto the
    /// stable branch nearest in volume at the frozen fold pressure.
    fn jump_node(&mut self, i: usize, upper: bool, events: &mut Vec<SnapEvent<T>>) -> Result<()> {
        let node = &self.nodes[i];
        let ch = &node.characteristic;
        let fold = if upper { ch.fold_above(node.branch) } else { ch.fold_below(node.branch) };
        let Some(fold_idx) = fold else {
            return Err(Error::InfeasibleVolume(format!(
                "node '{}' runs off the end of its characteristic",
                node.id
            )));
        };
        let v_fold = ch.samples[fold_idx].volume_mm3;
        let p_fold = ch.samples[fold_idx].pressure_kpa;

        let mut best: Option<(T, usize)> = None;
        for b in 0..ch.n_branches() {
            if b == node.branch || !ch.branch_is_stable(b) {
                continue;
            }
            let gap = (ch.volume_at(b, p_fold) - v_fold).abs();
            if best.map_or(true, |(g, _)| gap < g) {
                best = Some((gap, b));
            }
        }
        let Some((_, landing)) = best else {
            return Err(Error::InfeasibleVolume(format!(
                "node '{}' folded at {p_fold} kPa with no stable branch to land on",
                node.id
            )));
        };

        events.push(SnapEvent {
            node_id: node.id.clone(),
            step: self.step,
            pressure_before_kpa: p_fold,
            pressure_after_kpa: p_fold,
            volume_before_mm3: v_fold,
            volume_after_mm3: v_fold,
        });
        let node = &mut self.nodes[i];
        node.branch = landing;
        node.volume_mm3 = node.characteristic.volume_at(landing, p_fold);
        Ok(())
    }
}
