//! Classical configurations: per-node mode occupations plus emitted photons.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::Error;
use crate::mode::{ModeLabel, Polarization};

/// A photon emitted by one node into a numbered spatio-temporal slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhotonRecord {
    pub source_node: usize,
    pub polarization: Polarization,
    pub slot: u32,
}

impl Ord for PhotonRecord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.slot
            .cmp(&other.slot)
            .then(self.source_node.cmp(&other.source_node))
            .then(self.polarization.cmp(&other.polarization))
    }
}

impl PartialOrd for PhotonRecord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PhotonRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}@{}", self.source_node, self.polarization, self.slot)
    }
}

/// One basis configuration.
///
/// Each node stores an occupation bitmask over [`ModeLabel`]; photons are
/// kept sorted by slot so equal configurations compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisKet {
    nodes: Vec<u8>,
    photons: Vec<PhotonRecord>,
}

impl BasisKet {
    pub fn vacuum(num_nodes: usize) -> Self {
        BasisKet { nodes: alloc::vec![0; num_nodes], photons: Vec::new() }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn occupation_mask(&self, node: usize) -> u8 {
        self.nodes[node]
    }

    pub fn is_occupied(&self, node: usize, mode: ModeLabel) -> bool {
        self.nodes[node] & mode.bit() != 0
    }

    pub fn occupied_modes(&self, node: usize) -> impl Iterator<Item = ModeLabel> + '_ {
        let mask = self.nodes[node];
        ModeLabel::ALL.into_iter().filter(move |m| mask & m.bit() != 0)
    }

    pub fn with_mode(mut self, node: usize, mode: ModeLabel) -> Self {
        self.nodes[node] |= mode.bit();
        self
    }

    pub fn without_mode(mut self, node: usize, mode: ModeLabel) -> Self {
        self.nodes[node] &= !mode.bit();
        self
    }

    /// Occupied Rydberg modes at `node`.
    pub fn rydberg_modes(&self, node: usize) -> impl Iterator<Item = ModeLabel> + '_ {
        self.occupied_modes(node).filter(|m| m.is_rydberg())
    }

    pub fn photons(&self) -> &[PhotonRecord] {
        &self.photons
    }

    /// Next free slot id: one past the largest slot in use.
    pub fn next_slot(&self) -> u32 {
        self.photons.last().map_or(0, |p| p.slot + 1)
    }

    pub fn with_photon(mut self, photon: PhotonRecord) -> Self {
        let at = self.photons.partition_point(|p| p < &photon);
        self.photons.insert(at, photon);
        self
    }

    pub fn map_photons(mut self, mut f: impl FnMut(PhotonRecord) -> PhotonRecord) -> Self {
        for p in self.photons.iter_mut() {
            *p = f(*p);
        }
        self.photons.sort();
        self
    }

    /// Drops every photon for which `keep` is false.
    pub fn retain_photons(mut self, keep: impl FnMut(&PhotonRecord) -> bool) -> Self {
        self.photons.retain(keep);
        self
    }

    /// Concatenates node lists; the other ket's photons get shifted node and
    /// slot indices so slots stay unique.
    pub fn tensor(&self, other: &BasisKet) -> BasisKet {
        let offset = self.nodes.len();
        let slot_offset = self.next_slot();
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes);
        let mut photons = self.photons.clone();
        photons.extend(other.photons.iter().map(|p| PhotonRecord {
            source_node: p.source_node + offset,
            polarization: p.polarization,
            slot: p.slot + slot_offset,
        }));
        photons.sort();
        BasisKet { nodes, photons }
    }

    /// Same ket with `node`'s occupation replaced by `mask`.
    pub fn with_mask(mut self, node: usize, mask: u8) -> Self {
        self.nodes[node] = mask;
        self
    }
}

impl fmt::Display for BasisKet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, _) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "node{i}:{{")?;
            for (j, m) in self.occupied_modes(i).enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{m}")?;
            }
            f.write_str("}")?;
        }
        f.write_str(" | photons:[")?;
        for (j, p) in self.photons.iter().enumerate() {
            if j > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("]")
    }
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

impl FromStr for PhotonRecord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (node, rest) = s.split_once(':').ok_or_else(|| parse_err(alloc::format!("bad photon `{s}`")))?;
        let (pol, slot) = rest.split_once('@').ok_or_else(|| parse_err(alloc::format!("bad photon `{s}`")))?;
        Ok(PhotonRecord {
            source_node: node.trim().parse().map_err(|_| parse_err(alloc::format!("bad node in `{s}`")))?,
            polarization: pol.trim().parse()?,
            slot: slot.trim().parse().map_err(|_| parse_err(alloc::format!("bad slot in `{s}`")))?,
        })
    }
}

impl FromStr for BasisKet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (nodes_part, photon_part) =
            s.split_once('|').ok_or_else(|| parse_err(alloc::format!("missing `|` in ket `{s}`")))?;
        let mut nodes = Vec::new();
        for (i, tok) in nodes_part.split_whitespace().enumerate() {
            let body = tok
                .strip_prefix(alloc::format!("node{i}:").as_str())
                .and_then(|b| b.strip_prefix('{'))
                .and_then(|b| b.strip_suffix('}'))
                .ok_or_else(|| parse_err(alloc::format!("bad node token `{tok}`")))?;
            let mut mask = 0u8;
            for name in body.split(',').filter(|n| !n.is_empty()) {
                mask |= name.parse::<ModeLabel>()?.bit();
            }
            nodes.push(mask);
        }
        let list = photon_part
            .trim()
            .strip_prefix("photons:[")
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(|| parse_err(alloc::format!("bad photon list in `{s}`")))?;
        let mut photons = list
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<PhotonRecord>, _>>()?;
        photons.sort();
        Ok(BasisKet { nodes, photons })
    }
}
