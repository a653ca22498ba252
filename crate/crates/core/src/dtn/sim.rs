//! Store-and-forward execution of the bundle layer over a contact plan.
//!
//! Every node holds bundles until the routed next-hop contact opens; routes
//! are recomputed at each hop arrival (and whenever the head of a queue no
//! longer fits its window) using the actual current time. TTL is checked at
//! creation, at each hop arrival, and at the queue head. Event ordering is
//! fully deterministic: ties break on (time, kind, node ids, bundle id).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::route::compute_route;
use super::{Bundle, DeliveryOutcome, DeliveryRecord, DtnError, Hop};
use crate::orbit::{Contact, NodeId};

type LinkKey = (NodeId, NodeId);

/// Reject plans with overlapping windows on the same directed link.
pub fn validate_plan(plan: &[Contact]) -> Result<(), DtnError> {
    let mut by_link: HashMap<LinkKey, Vec<usize>> = HashMap::new();
    for (i, c) in plan.iter().enumerate() {
        by_link.entry((c.origin, c.destination)).or_default().push(i);
    }
    for list in by_link.values_mut() {
        list.sort_by(|&a, &b| plan[a].t_start.total_cmp(&plan[b].t_start));
        for w in list.windows(2) {
            if plan[w[1]].t_start < plan[w[0]].t_end {
                return Err(DtnError::OverlappingContacts(w[0], w[1]));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Arrival,
    Service,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    t: f64,
    kind: EventKind,
    a: NodeId,
    b: NodeId,
    flight: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.t
            .total_cmp(&other.t)
            .then_with(|| (self.kind == EventKind::Service).cmp(&(other.kind == EventKind::Service)))
            .then_with(|| self.a.cmp(&other.a))
            .then_with(|| self.b.cmp(&other.b))
            .then_with(|| self.flight.cmp(&other.flight))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct Flight {
    bundle: Bundle,
    hops: Vec<Hop>,
    done: bool,
}

/// A bundle that reached its destination endpoint, surfaced by
/// [`DtnSim::drain_delivered`].
#[derive(Debug, Clone)]
pub struct Delivered {
    pub bundle: Bundle,
    pub t_delivered: f64,
}

/// Incremental bundle-layer simulation; drive with `inject` + `advance_to`,
/// or use [`simulate`] for one-shot runs.
pub struct DtnSim<'a> {
    plan: &'a [Contact],
    contacts_by_link: HashMap<LinkKey, Vec<usize>>,
    flights: Vec<Flight>,
    records: Vec<Option<DeliveryRecord>>,
    queues: HashMap<LinkKey, Vec<usize>>,
    busy_until: HashMap<LinkKey, f64>,
    events: BinaryHeap<Reverse<Event>>,
    delivered_pending: Vec<Delivered>,
}

impl<'a> DtnSim<'a> {
    pub fn new(plan: &'a [Contact]) -> Result<Self, DtnError> {
        validate_plan(plan)?;
        let mut contacts_by_link: HashMap<LinkKey, Vec<usize>> = HashMap::new();
        for (i, c) in plan.iter().enumerate() {
            contacts_by_link.entry((c.origin, c.destination)).or_default().push(i);
        }
        for list in contacts_by_link.values_mut() {
            list.sort_by(|&a, &b| plan[a].t_start.total_cmp(&plan[b].t_start));
        }
        Ok(Self {
            plan,
            contacts_by_link,
            flights: Vec::new(),
            records: Vec::new(),
            queues: HashMap::new(),
            busy_until: HashMap::new(),
            events: BinaryHeap::new(),
            delivered_pending: Vec::new(),
        })
    }

    /// Hand a bundle to its source node's bundle agent at `t_created`.
    pub fn inject(&mut self, bundle: Bundle) {
        let node = bundle.source;
        let t = bundle.t_created;
        let flight = self.flights.len();
        self.flights.push(Flight { bundle, hops: Vec::new(), done: false });
        self.records.push(None);
        self.events.push(Reverse(Event { t, kind: EventKind::Arrival, a: node, b: node, flight }));
    }

    /// Process all events up to and including time `t`.
    pub fn advance_to(&mut self, t: f64) {
        while let Some(&Reverse(ev)) = self.events.peek() {
            if ev.t > t {
                break;
            }
            self.events.pop();
            match ev.kind {
                EventKind::Arrival => self.on_arrival(ev.t, ev.a, ev.flight),
                EventKind::Service => self.on_service(ev.t, (ev.a, ev.b)),
            }
        }
    }

    /// Bundles delivered since the previous drain, in delivery order.
    pub fn drain_delivered(&mut self) -> Vec<Delivered> {
        std::mem::take(&mut self.delivered_pending)
    }

    /// Run the event queue dry and return one terminal record per bundle,
    /// in injection order.
    pub fn finish(mut self) -> Vec<DeliveryRecord> {
        self.advance_to(f64::INFINITY);
        self.records
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.unwrap_or_else(|| panic!("bundle {i} left without terminal record")))
            .collect()
    }

    fn finish_flight(&mut self, flight: usize, outcome: DeliveryOutcome, t: Option<f64>) {
        let f = &mut self.flights[flight];
        f.done = true;
        let b = &f.bundle;
        self.records[flight] = Some(DeliveryRecord {
            bundle_id: b.bundle_id,
            priority: b.priority,
            outcome,
            t_delivered: if outcome == DeliveryOutcome::Delivered { t } else { None },
            latency_s: if outcome == DeliveryOutcome::Delivered {
                t.map(|t| t - b.t_created)
            } else {
                None
            },
            hops: f.hops.clone(),
        });
        if outcome == DeliveryOutcome::Delivered {
            self.delivered_pending
                .push(Delivered { bundle: f.bundle.clone(), t_delivered: t.unwrap() });
        }
    }

    fn on_arrival(&mut self, t: f64, node: NodeId, flight: usize) {
        if self.flights[flight].done {
            return;
        }
        let b = &self.flights[flight].bundle;
        // a copy not tagged for this node is discarded silently, no record
        if b.next_hop_tag.is_some_and(|tag| tag != node) {
            self.flights[flight].done = true;
            return;
        }
        if t - b.t_created > b.ttl_s {
            self.finish_flight(flight, DeliveryOutcome::DroppedTtl, None);
            return;
        }
        if node == b.destination {
            self.finish_flight(flight, DeliveryOutcome::Delivered, Some(t));
            return;
        }
        self.route_and_enqueue(t, node, flight);
    }

    /// Route `flight` out of `node` at time `t`; queue it on the chosen link
    /// or record it unroutable.
    fn route_and_enqueue(&mut self, t: f64, node: NodeId, flight: usize) {
        let b = &self.flights[flight].bundle;
        match compute_route(self.plan, node, b.destination, t, b.size_bits) {
            None => self.finish_flight(flight, DeliveryOutcome::Unroutable, None),
            Some(route) => {
                let first = &self.plan[route.contacts[0]];
                let link = (node, first.destination);
                self.flights[flight].bundle.next_hop_tag = Some(first.destination);
                self.enqueue(link, flight);
                self.schedule_service(t.max(first.t_start), link);
            }
        }
    }

    fn enqueue(&mut self, link: LinkKey, flight: usize) {
        let key = |f: &Flight| (f.bundle.priority, f.bundle.t_created, f.bundle.bundle_id);
        let k = key(&self.flights[flight]);
        let q = self.queues.entry(link).or_default();
        let pos = q.partition_point(|&other| {
            let o = &self.flights[other];
            (o.bundle.priority, o.bundle.t_created, o.bundle.bundle_id) <= k
        });
        q.insert(pos, flight);
    }

    fn schedule_service(&mut self, t: f64, link: LinkKey) {
        self.events.push(Reverse(Event {
            t,
            kind: EventKind::Service,
            a: link.0,
            b: link.1,
            flight: 0,
        }));
    }

    /// First contact on `link` that has not closed by `t`.
    fn next_contact(&self, link: LinkKey, t: f64) -> Option<usize> {
        self.contacts_by_link
            .get(&link)?
            .iter()
            .copied()
            .find(|&ci| self.plan[ci].t_end > t)
    }

    fn on_service(&mut self, t: f64, link: LinkKey) {
        if self.busy_until.get(&link).is_some_and(|&b| b > t) {
            return; // transmission in progress; completion reschedules
        }
        loop {
            let Some(&flight) = self.queues.get(&link).and_then(|q| q.first()) else {
                return;
            };
            let b = &self.flights[flight].bundle;
            // TTL at queue head
            if t - b.t_created > b.ttl_s {
                self.queues.get_mut(&link).unwrap().remove(0);
                self.finish_flight(flight, DeliveryOutcome::DroppedTtl, None);
                continue;
            }
            let Some(ci) = self.next_contact(link, t) else {
                // link never opens again: route out of here or give up
                self.queues.get_mut(&link).unwrap().remove(0);
                self.route_and_enqueue(t, link.0, flight);
                continue;
            };
            let c = &self.plan[ci];
            if c.t_start > t {
                self.schedule_service(c.t_start, link);
                return;
            }
            let tx = b.size_bits / c.data_rate_bps;
            if t + tx <= c.t_end {
                // transmit; one bundle per directed link at a time
                self.queues.get_mut(&link).unwrap().remove(0);
                let t_arrival = t + tx + c.range_light_s;
                self.flights[flight].hops.push(Hop {
                    from: link.0,
                    to: link.1,
                    t_tx_start: t,
                    t_tx_end: t + tx,
                    t_arrival,
                });
                self.busy_until.insert(link, t + tx);
                self.events.push(Reverse(Event {
                    t: t_arrival,
                    kind: EventKind::Arrival,
                    a: link.1,
                    b: link.1,
                    flight,
                }));
                self.schedule_service(t + tx, link);
                return;
            }
            // head no longer fits the remaining window: re-route it now
            self.queues.get_mut(&link).unwrap().remove(0);
            let dest = self.flights[flight].bundle.destination;
            let size = self.flights[flight].bundle.size_bits;
            match compute_route(self.plan, link.0, dest, t, size) {
                None => {
                    self.finish_flight(flight, DeliveryOutcome::Unroutable, None);
                    continue;
                }
                Some(route) => {
                    let first = &self.plan[route.contacts[0]];
                    let new_link = (link.0, first.destination);
                    self.flights[flight].bundle.next_hop_tag = Some(first.destination);
                    self.enqueue(new_link, flight);
                    self.schedule_service(t.max(first.t_start), new_link);
                    if new_link == link {
                        // waiting for this link's next window; nothing more now
                        return;
                    }
                    continue;
                }
            }
        }
    }
}

/// One-shot execution: inject all traffic, run to completion, return one
/// terminal record per bundle in input order.
pub fn simulate(traffic: &[Bundle], plan: &[Contact]) -> Result<Vec<DeliveryRecord>, DtnError> {
    let mut sim = DtnSim::new(plan)?;
    for b in traffic {
        ttl_checked(b)?;
        sim.inject(b.clone());
    }
    Ok(sim.finish())
}

fn ttl_checked(b: &Bundle) -> Result<(), DtnError> {
    super::ttl_for_priority(b.priority).map(drop)
}

/// Independent post-hoc audit of the per-link capacity invariant: every
/// transmission fits inside a contact window, transmissions on a directed
/// link never overlap, and the bits sent within each contact respect
/// rate x duration.
pub fn audit_link_capacity(records: &[DeliveryRecord], plan: &[Contact]) -> Result<(), String> {
    let mut per_link: HashMap<LinkKey, Vec<(f64, f64)>> = HashMap::new();
    let mut per_contact_tx: HashMap<usize, f64> = HashMap::new();
    for r in records {
        for h in &r.hops {
            let containing = plan.iter().enumerate().position(|(_, c)| {
                c.origin == h.from
                    && c.destination == h.to
                    && c.t_start <= h.t_tx_start + 1e-9
                    && h.t_tx_end <= c.t_end + 1e-9
            });
            let Some(ci) = containing else {
                return Err(format!(
                    "transmission {:?} of bundle {} fits no contact window",
                    h, r.bundle_id
                ));
            };
            *per_contact_tx.entry(ci).or_default() += h.t_tx_end - h.t_tx_start;
            per_link.entry((h.from, h.to)).or_default().push((h.t_tx_start, h.t_tx_end));
        }
    }
    for (ci, tx_total) in per_contact_tx {
        let c = &plan[ci];
        let budget = c.t_end - c.t_start;
        if tx_total > budget + 1e-6 {
            return Err(format!("contact {ci} oversubscribed: {tx_total} s of {budget} s"));
        }
    }
    for (link, mut spans) in per_link {
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 - 1e-9 {
                return Err(format!("overlapping transmissions on link {link:?}"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::route::tests::contact;
    use super::super::{latency_stats, BundlePayload};
    use super::*;

    fn bundle(id: u64, src: u16, dst: u16, priority: u8, t: f64) -> Bundle {
        Bundle::new(
            id,
            NodeId::Sat(src),
            NodeId::Sat(dst),
            2000.0,
            priority,
            t,
            BundlePayload::default(),
        )
        .unwrap()
    }

    #[test]
    fn one_hop_latency_is_tx_plus_propagation() {
        let plan = vec![contact(0.0, 10_000.0, NodeId::Sat(0), NodeId::Sat(1), 1000.0, 0.02)];
        let recs = simulate(&[bundle(0, 0, 1, 1, 5.0)], &plan).unwrap();
        assert_eq!(recs[0].outcome, DeliveryOutcome::Delivered);
        assert!((recs[0].latency_s.unwrap() - 2.02).abs() < 1e-12);
        assert_eq!(recs[0].hops.len(), 1);
    }

    #[test]
    fn tight_window_waits_for_next_contact() {
        // created 1 s before the only open window ends; 2 s transmission
        // cannot fit, so the bundle waits for the next window
        let s = NodeId::Sat;
        let plan = vec![
            contact(0.0, 6.0, s(0), s(1), 1000.0, 0.0),
            contact(100.0, 200.0, s(0), s(1), 1000.0, 0.0),
        ];
        let recs = simulate(&[bundle(0, 0, 1, 1, 5.0)], &plan).unwrap();
        assert_eq!(recs[0].outcome, DeliveryOutcome::Delivered);
        assert_eq!(recs[0].t_delivered, Some(102.0));
        // with no later window and a priority-1 TTL, it drops instead
        let short_plan = vec![contact(0.0, 6.0, s(0), s(1), 1000.0, 0.0)];
        let recs = simulate(&[bundle(0, 0, 1, 1, 5.0)], &short_plan).unwrap();
        assert_eq!(recs[0].outcome, DeliveryOutcome::Unroutable);
    }

    #[test]
    fn priority_one_preempts_queue_order() {
        // both bundles waiting before the window opens; priority 1 goes first
        // even though priority 5 was created earlier
        let s = NodeId::Sat;
        let plan = vec![contact(10.0, 1000.0, s(0), s(1), 1000.0, 0.0)];
        let traffic = vec![bundle(0, 0, 1, 5, 0.0), bundle(1, 0, 1, 1, 0.5)];
        let recs = simulate(&traffic, &plan).unwrap();
        let lat5 = recs[0].latency_s.unwrap();
        let lat1 = recs[1].latency_s.unwrap();
        assert_eq!(recs[1].t_delivered, Some(12.0));
        assert_eq!(recs[0].t_delivered, Some(14.0));
        assert!(lat5 >= lat1 + 2.0 - 0.5 - 1e-9);
    }

    #[test]
    fn wrong_next_hop_tag_discarded_silently() {
        let plan = vec![contact(0.0, 100.0, NodeId::Sat(0), NodeId::Sat(1), 1000.0, 0.0)];
        let mut sim = DtnSim::new(&plan).unwrap();
        let mut b = bundle(0, 0, 1, 1, 0.0);
        // a stray copy tagged for a different node
        b.next_hop_tag = Some(NodeId::Sat(9));
        sim.inject(b);
        sim.advance_to(f64::INFINITY);
        assert!(sim.drain_delivered().is_empty());
        // no terminal record is produced for a discarded copy
        assert!(sim.records[0].is_none());
    }

    #[test]
    fn ttl_expiry_at_queue_head_and_arrival() {
        let s = NodeId::Sat;
        // window opens long after the priority-1 TTL of 900 s
        let plan = vec![contact(2000.0, 3000.0, s(0), s(1), 1000.0, 0.0)];
        let recs = simulate(&[bundle(0, 0, 1, 1, 0.0)], &plan).unwrap();
        assert_eq!(recs[0].outcome, DeliveryOutcome::DroppedTtl);
        assert!(recs[0].hops.is_empty());
    }

    #[test]
    fn unroutable_is_a_value() {
        let recs = simulate(&[bundle(0, 0, 1, 1, 0.0)], &[]).unwrap();
        assert_eq!(recs[0].outcome, DeliveryOutcome::Unroutable);
    }

    #[test]
    fn self_destination_delivers_immediately() {
        let recs = simulate(&[bundle(0, 3, 3, 4, 7.0)], &[]).unwrap();
        assert_eq!(recs[0].outcome, DeliveryOutcome::Delivered);
        assert_eq!(recs[0].latency_s, Some(0.0));
    }

    #[test]
    fn overlapping_plan_rejected() {
        let s = NodeId::Sat;
        let plan = vec![
            contact(0.0, 100.0, s(0), s(1), 1000.0, 0.0),
            contact(50.0, 150.0, s(0), s(1), 1000.0, 0.0),
        ];
        assert_eq!(simulate(&[], &plan), Err(DtnError::OverlappingContacts(0, 1)));
    }

    #[test]
    fn multi_hop_relay_and_rerouting() {
        let s = NodeId::Sat;
        // direct link closes before the bundle is created; relay via sat 1
        let plan = vec![
            contact(0.0, 5.0, s(0), s(2), 1000.0, 0.0),
            contact(0.0, 100.0, s(0), s(1), 1000.0, 0.0),
            contact(0.0, 100.0, s(1), s(2), 1000.0, 0.01),
        ];
        let recs = simulate(&[bundle(0, 0, 2, 4, 10.0)], &plan).unwrap();
        assert_eq!(recs[0].outcome, DeliveryOutcome::Delivered);
        assert_eq!(recs[0].hops.len(), 2);
        assert!((recs[0].latency_s.unwrap() - 4.01).abs() < 1e-12);
    }

    fn random_scenario(seed: u64) -> (Vec<Bundle>, Vec<Contact>) {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_pcg::Pcg64::seed_from_u64(seed);
        let n_nodes = 3 + rng.random_range(0..4) as u16;
        let plan: Vec<Contact> = (0..15 + rng.random_range(0..10))
            .map(|_| {
                let a = rng.random_range(0..n_nodes);
                let mut b = rng.random_range(0..n_nodes);
                if b == a {
                    b = (b + 1) % n_nodes;
                }
                let t0 = rng.random::<f64>() * 400.0;
                contact(
                    t0,
                    t0 + 5.0 + rng.random::<f64>() * 100.0,
                    NodeId::Sat(a),
                    NodeId::Sat(b),
                    1000.0,
                    rng.random::<f64>() * 0.02,
                )
            })
            .collect();
        // overlapping same-link windows would be rejected; merge by shifting
        let mut plan = plan;
        plan.sort_by(|a, b| {
            (a.origin, a.destination)
                .cmp(&(b.origin, b.destination))
                .then(a.t_start.total_cmp(&b.t_start))
        });
        let mut cleaned: Vec<Contact> = Vec::new();
        for c in plan {
            if let Some(last) = cleaned.last() {
                if last.origin == c.origin
                    && last.destination == c.destination
                    && c.t_start < last.t_end
                {
                    continue;
                }
            }
            cleaned.push(c);
        }
        let traffic: Vec<Bundle> = (0..40)
            .map(|i| {
                let a = rng.random_range(0..n_nodes);
                let mut b = rng.random_range(0..n_nodes);
                if b == a {
                    b = (b + 1) % n_nodes;
                }
                bundle(i, a, b, 1 + rng.random_range(0..15) as u8, rng.random::<f64>() * 300.0)
            })
            .collect();
        (traffic, cleaned)
    }

    #[test]
    fn conservation_capacity_and_expiry_invariants() {
        for seed in 0..20 {
            let (traffic, plan) = random_scenario(seed);
            let recs = simulate(&traffic, &plan).unwrap();
            // conservation: one terminal record per injected bundle
            assert_eq!(recs.len(), traffic.len());
            for (r, b) in recs.iter().zip(&traffic) {
                assert_eq!(r.bundle_id, b.bundle_id);
                if r.outcome == DeliveryOutcome::Delivered {
                    // no delivery after expiry
                    assert!(r.latency_s.unwrap() <= b.ttl_s, "late delivery, seed {seed}");
                }
            }
            audit_link_capacity(&recs, &plan).unwrap();
        }
    }

    #[test]
    fn deterministic_records() {
        let (traffic, plan) = random_scenario(7);
        let a = simulate(&traffic, &plan).unwrap();
        let b = simulate(&traffic, &plan).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_queue_priority_ordering_mean_latency() {
        // one congested link: priority 1 mean latency <= priority 15 mean
        let s = NodeId::Sat;
        let plan = vec![contact(0.0, 10_000.0, s(0), s(1), 1000.0, 0.0)];
        let mut traffic = Vec::new();
        for i in 0..30u64 {
            traffic.push(bundle(2 * i, 0, 1, 15, i as f64));
            traffic.push(bundle(2 * i + 1, 0, 1, 1, i as f64 + 0.25));
        }
        let recs = simulate(&traffic, &plan).unwrap();
        let stats = latency_stats(&recs);
        let mean = |p: usize| {
            let lats: Vec<f64> = recs
                .iter()
                .filter(|r| r.priority == p as u8 && r.outcome == DeliveryOutcome::Delivered)
                .map(|r| r.latency_s.unwrap())
                .collect();
            lats.iter().sum::<f64>() / lats.len() as f64
        };
        assert!(stats[0].delivered > 0 && stats[14].delivered > 0);
        assert!(mean(1) <= mean(15), "p1 {} vs p15 {}", mean(1), mean(15));
    }
}
