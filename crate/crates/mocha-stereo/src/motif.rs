//! Motif mining over channel groups: the white-box attention stage.
//!
//! The idea: across the channels of a feature-map group, the same small 3x3
//! pattern tends to recur wherever the underlying structure (an edge, a
//! texture element) is real, while noise does not repeat. Each channel plane
//! is cut into non-overlapping 3x3 tiles; the tile at one grid position,
//! taken from every channel of a group, forms a set of length-9 sequences.
//! Those sequences become the nodes of a tiny directed graph in which every
//! node points at its nearest neighbor(s) by Euclidean distance. Nodes that
//! many others point at carry the recurring pattern, so each node's incoming
//! vote count weights its sequence in a weighted average, the *motif* for
//! that group and position.
//!
//! Votes are exact: node `c` distributes a total mass of 1, split `1/p` over
//! its `p` tied nearest neighbors (ties by exact equality of the stored
//! `f64` distances). Vote mass is tracked in rational arithmetic so the sum
//! over a graph equals the node count exactly, not merely within float
//! tolerance.
//!
//! [`mcga_apply`] runs the whole stage: every channel is analyzed with the
//! orthonormal Haar transform from [`crate::wavelet`], motifs are mined per
//! subband on each subband's own tile grid, the motif planes are assembled
//! into a pyramid and inverted, and the reconstructed spatial motif plane
//! multiplies each channel of its group elementwise. Output shape equals
//! input shape, one shared motif plane per group.

use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde_json::json;

use crate::error::{MochaError, Result};
use crate::scalar::Scalar;
use crate::tensor::{next_multiple, Tensor2, Tensor3};
use crate::wavelet::{dwt2, idwt2};

/// Length of a tile side; the only supported value is 3.
pub const WINDOW: usize = 3;
const SEQ_LEN: usize = WINDOW * WINDOW;

/// How motif averages are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Normalization {
    /// Divide vote weights by the total channel count over all groups
    /// (accepted config spellings: `total_channels`, `paper_nc`).
    #[serde(rename = "total_channels", alias = "paper_nc")]
    TotalChannels,
    /// Divide vote weights by their sum, making the motif a convex
    /// combination of the group's sequences.
    #[serde(rename = "convex_votes")]
    ConvexVotes,
}

/// Configuration of the motif attention stage.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct McgaConfig {
    /// Number of channel groups the feature tensor is split into.
    pub n_groups: usize,
    /// Tile side length; must be 3.
    pub window: usize,
    /// Weight normalization mode.
    pub normalization: Normalization,
    /// Wavelet analysis depth used when `wavelet` is true.
    pub levels: usize,
    /// Exclude a node's own (zero) distance when looking for its nearest
    /// neighbor. Disabling this makes every node vote for itself.
    pub self_exclusion: bool,
    /// Mine motifs on wavelet subbands (true) or directly on the spatial
    /// plane (false).
    pub wavelet: bool,
}

impl Default for McgaConfig {
    fn default() -> Self {
        Self {
            n_groups: 8,
            window: WINDOW,
            normalization: Normalization::TotalChannels,
            levels: 2,
            self_exclusion: true,
            wavelet: true,
        }
    }
}

impl McgaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window != WINDOW {
            return Err(MochaError::Config(format!(
                "tile window must be {WINDOW}, got {}",
                self.window
            )));
        }
        if self.n_groups == 0 {
            return Err(MochaError::Config("n_groups must be >= 1".into()));
        }
        if self.levels == 0 {
            return Err(MochaError::Config("wavelet levels must be >= 1".into()));
        }
        Ok(())
    }
}

/// One flattened 3x3 tile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSequence<T> {
    /// Channel the tile was cut from.
    pub channel: usize,
    /// Tile position in row-major grid order.
    pub position: usize,
    /// Tile values, row-major.
    pub values: [T; SEQ_LEN],
}

/// Shape of a plane's tile grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileGrid {
    /// Tile rows (padded height / 3).
    pub rows: usize,
    /// Tile columns (padded width / 3).
    pub cols: usize,
    /// Height of the plane before padding.
    pub source_height: usize,
    /// Width of the plane before padding.
    pub source_width: usize,
}

impl TileGrid {
    pub fn tile_count(&self) -> usize {
        self.rows * self.cols
    }
}

/// Cuts `plane` into non-overlapping 3x3 tiles, edge-padding the bottom and
/// right so both dimensions become multiples of 3. Tiles are emitted in
/// row-major grid order and each tile is flattened row-major. `channel` is
/// recorded on every produced sequence.
pub fn tile_patches<T: Scalar>(
    plane: &Tensor2<T>,
    channel: usize,
) -> Result<(Vec<PatchSequence<T>>, TileGrid)> {
    if plane.height() == 0 || plane.width() == 0 {
        return Err(MochaError::Dimension("cannot tile an empty plane".into()));
    }
    let padded = plane.pad_edge(
        next_multiple(plane.height(), WINDOW),
        next_multiple(plane.width(), WINDOW),
    )?;
    let grid = TileGrid {
        rows: padded.height() / WINDOW,
        cols: padded.width() / WINDOW,
        source_height: plane.height(),
        source_width: plane.width(),
    };
    let mut seqs = Vec::with_capacity(grid.tile_count());
    for ty in 0..grid.rows {
        for tx in 0..grid.cols {
            let mut values = [T::zero(); SEQ_LEN];
            for dy in 0..WINDOW {
                for dx in 0..WINDOW {
                    values[dy * WINDOW + dx] = padded.get(ty * WINDOW + dy, tx * WINDOW + dx);
                }
            }
            seqs.push(PatchSequence {
                channel,
                position: ty * grid.cols + tx,
                values,
            });
        }
    }
    Ok((seqs, grid))
}

/// Euclidean distance between two equal-length sequences, accumulated in
/// `f64` in index order.
pub fn euclidean_distance<T: Scalar>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(MochaError::Dimension(format!(
            "distance between sequences of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut acc = 0.0f64;
    for i in 0..a.len() {
        let d = a[i].to_acc() - b[i].to_acc();
        acc += d * d;
    }
    Ok(acc.sqrt())
}

/// Nearest-neighbor vote graph over one group's sequences at one position.
#[derive(Debug, Clone)]
pub struct MotifGraph<T> {
    group: usize,
    position: usize,
    sequences: Vec<[T; SEQ_LEN]>,
    /// Row-major `n x n` distance matrix.
    distances: Vec<f64>,
    /// Per node, the tied set of nearest-neighbor node indices (ascending).
    nearest: Vec<Vec<usize>>,
    /// Per node, exact incoming vote mass.
    votes: Vec<Rational64>,
}

impl<T: Scalar> MotifGraph<T> {
    pub fn group(&self) -> usize {
        self.group
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn node_count(&self) -> usize {
        self.sequences.len()
    }

    pub fn sequences(&self) -> &[[T; SEQ_LEN]] {
        &self.sequences
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.distances[a * self.node_count() + b]
    }

    pub fn nearest(&self) -> &[Vec<usize>] {
        &self.nearest
    }

    pub fn votes(&self) -> &[Rational64] {
        &self.votes
    }

    /// Vote mass per node as floats.
    pub fn weights(&self) -> Vec<f64> {
        self.votes
            .iter()
            .map(|v| v.to_f64().expect("vote mass fits in f64"))
            .collect()
    }

    /// Exact sum of all vote mass; equals the node count by construction.
    pub fn total_votes(&self) -> Rational64 {
        self.votes.iter().sum()
    }
}

/// Builds the vote graph for one group at one tile position.
///
/// All sequences must share the tile position; the node order is the order
/// of `seqs` (the group's channel order). Needs at least two nodes when
/// `self_exclusion` is on, one otherwise.
pub fn build_graph<T: Scalar>(
    seqs: &[PatchSequence<T>],
    cfg: &McgaConfig,
    group: usize,
) -> Result<MotifGraph<T>> {
    cfg.validate()?;
    if seqs.len() < 2 {
        return Err(MochaError::DegenerateGroup(format!(
            "a motif graph needs at least 2 sequences, got {}",
            seqs.len()
        )));
    }
    let position = seqs[0].position;
    if seqs.iter().any(|s| s.position != position) {
        return Err(MochaError::Structure(
            "all sequences of one graph must share a tile position".into(),
        ));
    }
    let n = seqs.len();
    let mut distances = vec![0.0f64; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d = euclidean_distance(&seqs[a].values, &seqs[b].values)?;
            if !d.is_finite() {
                return Err(MochaError::Numeric(
                    "non-finite distance; sequence values must be finite".into(),
                ));
            }
            distances[a * n + b] = d;
            distances[b * n + a] = d;
        }
    }

    let mut nearest = Vec::with_capacity(n);
    let mut votes = vec![Rational64::new(0, 1); n];
    for c in 0..n {
        let mut min = f64::INFINITY;
        for other in 0..n {
            if cfg.self_exclusion && other == c {
                continue;
            }
            let d = distances[c * n + other];
            if d < min {
                min = d;
            }
        }
        let tied: Vec<usize> = (0..n)
            .filter(|&other| !(cfg.self_exclusion && other == c))
            .filter(|&other| distances[c * n + other] == min)
            .collect();
        let share = Rational64::new(1, tied.len() as i64);
        for &t in &tied {
            votes[t] += share;
        }
        nearest.push(tied);
    }

    Ok(MotifGraph {
        group,
        position,
        sequences: seqs.iter().map(|s| s.values).collect(),
        distances,
        nearest,
        votes,
    })
}

/// Weighted average of a graph's sequences: the motif for its position.
///
/// With [`Normalization::TotalChannels`] the divisor is the all-group
/// channel count `node_count * n_groups`; with
/// [`Normalization::ConvexVotes`] it is the vote sum, making the result a
/// convex combination of the sequences.
pub fn extract_motif<T: Scalar>(graph: &MotifGraph<T>, cfg: &McgaConfig) -> Result<[T; SEQ_LEN]> {
    cfg.validate()?;
    let weights = graph.weights();
    let divisor = match cfg.normalization {
        Normalization::TotalChannels => (graph.node_count() * cfg.n_groups) as f64,
        Normalization::ConvexVotes => {
            let s: f64 = weights.iter().sum();
            if s <= 0.0 {
                return Err(MochaError::Numeric("vote sum must be positive".into()));
            }
            s
        }
    };
    let mut motif = [T::zero(); SEQ_LEN];
    for (k, m) in motif.iter_mut().enumerate() {
        let mut acc = 0.0f64;
        for (c, seq) in graph.sequences.iter().enumerate() {
            acc += weights[c] / divisor * seq[k].to_acc();
        }
        *m = T::from_acc(acc);
    }
    Ok(motif)
}

/// Lays motif tiles back onto a plane in row-major grid order and crops the
/// padding, undoing [`tile_patches`]' geometry.
pub fn stitch_motifs<T: Scalar>(motifs: &[[T; SEQ_LEN]], grid: &TileGrid) -> Result<Tensor2<T>> {
    if motifs.len() != grid.tile_count() {
        return Err(MochaError::Dimension(format!(
            "stitching {} tiles onto a {}x{} grid",
            motifs.len(),
            grid.rows,
            grid.cols
        )));
    }
    let mut padded = Tensor2::zeros(grid.rows * WINDOW, grid.cols * WINDOW);
    for (j, tile) in motifs.iter().enumerate() {
        let ty = j / grid.cols;
        let tx = j % grid.cols;
        for dy in 0..WINDOW {
            for dx in 0..WINDOW {
                padded.set(ty * WINDOW + dy, tx * WINDOW + dx, tile[dy * WINDOW + dx]);
            }
        }
    }
    padded.crop(grid.source_height, grid.source_width)
}

/// Callback receiving every graph the attention stage builds.
pub trait GraphObserver<T> {
    /// `subband` is a label like `"HL1"` or `"spatial"`.
    fn observe(&mut self, subband: &str, graph: &MotifGraph<T>);
}

struct NoopObserver;

impl<T> GraphObserver<T> for NoopObserver {
    fn observe(&mut self, _subband: &str, _graph: &MotifGraph<T>) {}
}

/// Motif plane for one group over one set of per-channel planes (all the
/// same shape): tile each channel, build one graph per tile position, and
/// stitch the motifs back into a plane.
fn group_motif_plane<T: Scalar>(
    planes: &[(usize, Tensor2<T>)],
    cfg: &McgaConfig,
    group: usize,
    subband: &str,
    observer: &mut dyn GraphObserver<T>,
) -> Result<Tensor2<T>> {
    let mut per_channel = Vec::with_capacity(planes.len());
    let mut grid: Option<TileGrid> = None;
    for (channel, plane) in planes {
        let (seqs, g) = tile_patches(plane, *channel)?;
        match grid {
            None => grid = Some(g),
            Some(prev) if prev == g => {}
            Some(prev) => {
                return Err(MochaError::Dimension(format!(
                    "tile grids differ within a group: {prev:?} vs {g:?}"
                )));
            }
        }
        per_channel.push(seqs);
    }
    let grid = grid.ok_or_else(|| MochaError::DegenerateGroup("empty group".into()))?;
    let mut motifs = Vec::with_capacity(grid.tile_count());
    let mut nodes = Vec::with_capacity(per_channel.len());
    for j in 0..grid.tile_count() {
        nodes.clear();
        nodes.extend(per_channel.iter().map(|seqs| seqs[j]));
        let graph = build_graph(&nodes, cfg, group)?;
        observer.observe(subband, &graph);
        motifs.push(extract_motif(&graph, cfg)?);
    }
    stitch_motifs(&motifs, &grid)
}

/// Runs the motif attention stage over a feature tensor.
///
/// The channel axis is split into `cfg.n_groups` equal groups (the channel
/// count must divide evenly and each group needs at least two channels). For
/// each group one motif plane is computed, via wavelet subbands or directly
/// on the spatial plane per `cfg.wavelet`, and multiplied elementwise into
/// every channel of that group. Output shape equals input shape.
pub fn mcga_apply<T: Scalar>(f: &Tensor3<T>, cfg: &McgaConfig) -> Result<Tensor3<T>> {
    mcga_apply_observed(f, cfg, &mut NoopObserver)
}

/// [`mcga_apply`] that reports every built graph to `observer`.
pub fn mcga_apply_observed<T: Scalar>(
    f: &Tensor3<T>,
    cfg: &McgaConfig,
    observer: &mut dyn GraphObserver<T>,
) -> Result<Tensor3<T>> {
    cfg.validate()?;
    if f.channels() % cfg.n_groups != 0 {
        return Err(MochaError::Config(format!(
            "{} channels cannot be split into {} equal groups",
            f.channels(),
            cfg.n_groups
        )));
    }
    let group_size = f.channels() / cfg.n_groups;
    if group_size < 2 {
        return Err(MochaError::DegenerateGroup(format!(
            "groups of {group_size} channel(s) cannot form motif graphs"
        )));
    }

    let mut out_planes = Vec::with_capacity(f.channels());
    for group in 0..cfg.n_groups {
        let channels: Vec<usize> = (group * group_size..(group + 1) * group_size).collect();
        let motif_plane = if cfg.wavelet {
            // Analyze each channel, mine one motif plane per subband on that
            // subband's own tile grid, and invert the motif pyramid.
            let pyramids = channels
                .iter()
                .map(|&c| dwt2(&f.channel_plane(c), cfg.levels))
                .collect::<Result<Vec<_>>>()?;
            let template = &pyramids[0];
            let motif_pyramid = template.map_subbands(|id, _| {
                let label = id.to_string();
                let planes: Vec<(usize, Tensor2<T>)> = channels
                    .iter()
                    .zip(&pyramids)
                    .map(|(&c, p)| {
                        let plane = p.subband(id).ok_or_else(|| {
                            MochaError::Structure(format!("pyramid lacks subband {id}"))
                        })?;
                        Ok((c, plane.clone()))
                    })
                    .collect::<Result<_>>()?;
                group_motif_plane(&planes, cfg, group, &label, observer)
            })?;
            idwt2(&motif_pyramid)?
        } else {
            let planes: Vec<(usize, Tensor2<T>)> = channels
                .iter()
                .map(|&c| (c, f.channel_plane(c)))
                .collect();
            group_motif_plane(&planes, cfg, group, "spatial", observer)?
        };
        for &c in &channels {
            out_planes.push((c, motif_plane.clone()));
        }
    }

    // Channels come out group by group in ascending order; multiply each by
    // its group's motif plane.
    let mut gated = Vec::with_capacity(f.channels());
    for (c, motif_plane) in out_planes {
        debug_assert_eq!(c, gated.len());
        gated.push(f.channel_plane(c).mul_elem(&motif_plane)?);
    }
    Tensor3::from_planes(&gated)
}

/// JSON description of one graph, as used by the debug dumps.
pub fn graph_to_json<T: Scalar>(
    graph: &MotifGraph<T>,
    subband: &str,
    include_distances: bool,
) -> serde_json::Value {
    let n = graph.node_count();
    let mut value = json!({
        "group": graph.group(),
        "subband": subband,
        "position": graph.position(),
        "node_count": n,
        "weights": graph.weights(),
        "nearest": graph.nearest(),
    });
    if include_distances {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..n).map(|b| graph.distance(a, b)).collect())
            .collect();
        value["distance_matrix"] = json!(rows);
    }
    value
}

/// GraphViz DOT rendering. Node fill intensity is proportional to vote
/// weight (heavier nodes darker); edges point from each node to its tied
/// nearest neighbors.
pub fn graph_to_dot<T: Scalar>(graph: &MotifGraph<T>, subband: &str) -> String {
    let weights = graph.weights();
    let max_w = weights.iter().cloned().fold(0.0, f64::max).max(1e-12);
    let mut s = String::new();
    s.push_str(&format!(
        "digraph motif_g{}_{}_p{} {{\n",
        graph.group(),
        subband,
        graph.position()
    ));
    s.push_str("  node [style=filled, fontcolor=gray20];\n");
    for (c, w) in weights.iter().enumerate() {
        // gray95 (light, no votes) down to gray40 (dark, heaviest).
        let shade = 95.0 - 55.0 * (w / max_w);
        s.push_str(&format!(
            "  n{c} [label=\"c{c}\\nw={w:.3}\", fillcolor=\"gray{}\"];\n",
            shade.round() as i64
        ));
    }
    for (c, tied) in graph.nearest().iter().enumerate() {
        for t in tied {
            s.push_str(&format!("  n{c} -> n{t};\n"));
        }
    }
    s.push_str("}\n");
    s
}

/// Finds the closest pair of length-`window` subsequences of `series`
/// (distinct start offsets), the 1-D analogue of the tile-graph nearest
/// neighbor search, using the same distance kernel. Ties resolve to the
/// first pair in scan order. Returns the two start offsets `(a, b)`, `a < b`.
pub fn motif_pair_1d<T: Scalar>(series: &[T], window: usize) -> Result<(usize, usize)> {
    if window == 0 {
        return Err(MochaError::Config("window must be >= 1".into()));
    }
    if series.len() < window + 1 {
        return Err(MochaError::Dimension(format!(
            "series of length {} has no two distinct windows of length {window}",
            series.len()
        )));
    }
    let count = series.len() - window + 1;
    let mut best = (0usize, 1usize);
    let mut best_d = f64::INFINITY;
    for a in 0..count {
        for b in (a + 1)..count {
            let d = euclidean_distance(&series[a..a + window], &series[b..b + window])?;
            if d < best_d {
                best_d = d;
                best = (a, b);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq<T: Scalar>(channel: usize, position: usize, v: T) -> PatchSequence<T> {
        PatchSequence {
            channel,
            position,
            values: [v; SEQ_LEN],
        }
    }

    #[test]
    fn distance_of_constant_sequences_by_hand() {
        let a = [0.0f64; 9];
        let b = [0.1f64; 9];
        let d = euclidean_distance(&a, &b).unwrap();
        assert!((d - 0.3).abs() < 1e-12, "d = {d}");
    }

    #[test]
    fn two_close_pairs_vote_for_each_other() {
        let cfg = McgaConfig {
            n_groups: 1,
            ..Default::default()
        };
        let seqs = [
            seq(0, 0, 0.0f64),
            seq(1, 0, 0.1),
            seq(2, 0, 10.0),
            seq(3, 0, 10.1),
        ];
        let g = build_graph(&seqs, &cfg, 0).unwrap();
        assert_eq!(g.nearest(), &[vec![1], vec![0], vec![3], vec![2]]);
        assert_eq!(g.weights(), vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(g.total_votes(), Rational64::from_integer(4));

        // Equal weights make both normalization modes average the sequences.
        for normalization in [Normalization::TotalChannels, Normalization::ConvexVotes] {
            let m = extract_motif(&g, &McgaConfig { normalization, ..cfg.clone() }).unwrap();
            for v in m {
                assert!((v - 5.05).abs() < 1e-12, "motif value {v}");
            }
        }
    }

    #[test]
    fn identical_sequences_split_votes_evenly() {
        let cfg = McgaConfig::default();
        let seqs = [seq(0, 0, 2.5f64), seq(1, 0, 2.5), seq(2, 0, 2.5)];
        let g = build_graph(&seqs, &cfg, 0).unwrap();
        for (c, tied) in g.nearest().iter().enumerate() {
            let expect: Vec<usize> = (0..3).filter(|&o| o != c).collect();
            assert_eq!(tied, &expect);
        }
        assert_eq!(g.votes(), &[Rational64::from_integer(1); 3]);
    }

    #[test]
    fn vote_mass_is_conserved_exactly() {
        let cfg = McgaConfig::default();
        // Mix of distinct values and exact duplicates to force tie splits.
        let vals = [1.0f64, 4.0, 4.0, 4.0, -2.0, 7.5, 7.5, 0.0, 0.25, 1.0];
        let seqs: Vec<_> = vals
            .iter()
            .enumerate()
            .map(|(c, &v)| seq(c, 3, v))
            .collect();
        let g = build_graph(&seqs, &cfg, 2).unwrap();
        assert_eq!(g.total_votes(), Rational64::from_integer(vals.len() as i64));
        let float_sum: f64 = g.weights().iter().sum();
        assert!((float_sum - vals.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn self_inclusion_makes_every_node_vote_itself() {
        let cfg = McgaConfig {
            self_exclusion: false,
            ..Default::default()
        };
        let seqs = [seq(0, 0, 1.0f64), seq(1, 0, 5.0), seq(2, 0, 9.0)];
        let g = build_graph(&seqs, &cfg, 0).unwrap();
        assert_eq!(g.nearest(), &[vec![0], vec![1], vec![2]]);
        assert_eq!(g.weights(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn permuting_nodes_permutes_weights_and_keeps_the_motif() {
        let cfg = McgaConfig {
            n_groups: 1,
            normalization: Normalization::ConvexVotes,
            ..Default::default()
        };
        let mut base = Vec::new();
        for (c, v) in [0.4f64, -1.0, 0.41, 2.0, 1.9].iter().enumerate() {
            base.push(seq(c, 0, *v));
        }
        let g = build_graph(&base, &cfg, 0).unwrap();
        let m = extract_motif(&g, &cfg).unwrap();

        let perm = [3usize, 0, 4, 1, 2];
        let permuted: Vec<_> = perm.iter().map(|&i| base[i]).collect();
        let gp = build_graph(&permuted, &cfg, 0).unwrap();
        let mp = extract_motif(&gp, &cfg).unwrap();

        let w = g.weights();
        let wp = gp.weights();
        for (slot, &src) in perm.iter().enumerate() {
            assert_eq!(wp[slot], w[src]);
        }
        for k in 0..SEQ_LEN {
            assert!((m[k] - mp[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_sequences_scales_motifs_not_weights() {
        let cfg = McgaConfig {
            n_groups: 1,
            ..Default::default()
        };
        let vals = [0.5f64, -0.25, 3.0, 2.75];
        let base: Vec<_> = vals.iter().enumerate().map(|(c, &v)| seq(c, 0, v)).collect();
        let scaled: Vec<_> = vals
            .iter()
            .enumerate()
            .map(|(c, &v)| seq(c, 0, v * 3.5))
            .collect();
        let g = build_graph(&base, &cfg, 0).unwrap();
        let gs = build_graph(&scaled, &cfg, 0).unwrap();
        assert_eq!(g.weights(), gs.weights());
        let m = extract_motif(&g, &cfg).unwrap();
        let ms = extract_motif(&gs, &cfg).unwrap();
        for k in 0..SEQ_LEN {
            assert!((ms[k] - 3.5 * m[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn one_node_is_degenerate() {
        let cfg = McgaConfig::default();
        assert!(matches!(
            build_graph(&[seq(0, 0, 1.0f32)], &cfg, 0),
            Err(MochaError::DegenerateGroup(_))
        ));
    }

    #[test]
    fn mixed_positions_are_rejected() {
        let cfg = McgaConfig::default();
        let seqs = [seq(0, 0, 1.0f32), seq(1, 1, 2.0)];
        assert!(matches!(
            build_graph(&seqs, &cfg, 0),
            Err(MochaError::Structure(_))
        ));
    }

    #[test]
    fn tiling_pads_a_4x4_plane_to_four_tiles() {
        let plane = Tensor2::<f32>::from_fn(4, 4, |y, x| (y * 4 + x) as f32);
        let (seqs, grid) = tile_patches(&plane, 7).unwrap();
        assert_eq!(grid.rows, 2);
        assert_eq!(grid.cols, 2);
        assert_eq!(seqs.len(), 4);
        assert!(seqs.iter().all(|s| s.channel == 7));
        assert_eq!(seqs[0].values, [0.0, 1.0, 2.0, 4.0, 5.0, 6.0, 8.0, 9.0, 10.0]);
        // Edge padding replicates column 3 and row 3.
        assert_eq!(seqs[1].values, [3.0, 3.0, 3.0, 7.0, 7.0, 7.0, 11.0, 11.0, 11.0]);
        assert_eq!(seqs[3].values[8], 15.0);
    }

    #[test]
    fn stitch_inverts_tiling() {
        let plane = Tensor2::<f32>::from_fn(5, 7, |y, x| (y * 7 + x) as f32 * 0.3 - 2.0);
        let (seqs, grid) = tile_patches(&plane, 0).unwrap();
        let tiles: Vec<[f32; SEQ_LEN]> = seqs.iter().map(|s| s.values).collect();
        let back = stitch_motifs(&tiles, &grid).unwrap();
        assert_eq!(back, plane);
    }

    #[test]
    fn constant_group_reconstructs_value_squared() {
        let v = 1.5f32;
        let f = Tensor3::filled(4, 9, 12, v);
        let cfg = McgaConfig {
            n_groups: 2,
            normalization: Normalization::ConvexVotes,
            ..Default::default()
        };
        let out = mcga_apply(&f, &cfg).unwrap();
        assert_eq!(out.channels(), 4);
        for &x in out.data() {
            assert!((x - v * v).abs() < 1e-5, "got {x}, want {}", v * v);
        }
    }

    #[test]
    fn total_channel_normalization_divides_by_group_count() {
        // One group: divisor equals group size, so a full-tie constant group
        // reproduces the common sequence exactly, like the convex mode.
        let v = -2.0f32;
        let f = Tensor3::filled(3, 6, 6, v);
        let cfg = McgaConfig {
            n_groups: 1,
            normalization: Normalization::TotalChannels,
            ..Default::default()
        };
        let out = mcga_apply(&f, &cfg).unwrap();
        for &x in out.data() {
            assert!((x - v * v).abs() < 1e-5);
        }
    }

    #[test]
    fn output_shape_matches_input_shape() {
        let f = Tensor3::<f32>::from_fn(8, 11, 13, |c, y, x| {
            ((c * 37 + y * 5 + x * 11) % 17) as f32 * 0.21 - 1.0
        });
        let cfg = McgaConfig {
            n_groups: 4,
            ..Default::default()
        };
        let out = mcga_apply(&f, &cfg).unwrap();
        assert_eq!(
            (out.channels(), out.height(), out.width()),
            (f.channels(), f.height(), f.width())
        );
    }

    #[test]
    fn group_split_must_be_even_and_nondegenerate() {
        let f = Tensor3::<f32>::zeros(6, 6, 6);
        let cfg = McgaConfig {
            n_groups: 4,
            ..Default::default()
        };
        assert!(matches!(mcga_apply(&f, &cfg), Err(MochaError::Config(_))));
        let cfg = McgaConfig {
            n_groups: 6,
            ..Default::default()
        };
        assert!(matches!(
            mcga_apply(&f, &cfg),
            Err(MochaError::DegenerateGroup(_))
        ));
    }

    #[test]
    fn permuting_channels_within_a_group_permutes_outputs() {
        let f = Tensor3::<f32>::from_fn(4, 6, 9, |c, y, x| {
            ((c * 13 + y * 7 + x) % 11) as f32 * 0.4 - 2.0
        });
        let cfg = McgaConfig {
            n_groups: 1,
            ..Default::default()
        };
        let out = mcga_apply(&f, &cfg).unwrap();

        let perm = [2usize, 0, 3, 1];
        let planes: Vec<Tensor2<f32>> = perm.iter().map(|&c| f.channel_plane(c)).collect();
        let fp = Tensor3::from_planes(&planes).unwrap();
        let outp = mcga_apply(&fp, &cfg).unwrap();
        for (slot, &src) in perm.iter().enumerate() {
            assert_eq!(outp.channel_data(slot), out.channel_data(src));
        }
    }

    #[test]
    fn spatial_mode_skips_the_wavelet() {
        let v = 0.75f32;
        let f = Tensor3::filled(2, 5, 5, v);
        let cfg = McgaConfig {
            n_groups: 1,
            normalization: Normalization::ConvexVotes,
            wavelet: false,
            ..Default::default()
        };
        let out = mcga_apply(&f, &cfg).unwrap();
        for &x in out.data() {
            assert!((x - v * v).abs() < 1e-6);
        }
    }

    #[test]
    fn observer_sees_every_graph() {
        struct Counter {
            graphs: usize,
            subbands: std::collections::BTreeSet<String>,
        }
        impl GraphObserver<f32> for Counter {
            fn observe(&mut self, subband: &str, _graph: &MotifGraph<f32>) {
                self.graphs += 1;
                self.subbands.insert(subband.to_string());
            }
        }
        let f = Tensor3::<f32>::from_fn(4, 12, 12, |c, y, x| (c + y + x) as f32 * 0.1);
        let cfg = McgaConfig {
            n_groups: 2,
            ..Default::default()
        };
        let mut counter = Counter {
            graphs: 0,
            subbands: Default::default(),
        };
        mcga_apply_observed(&f, &cfg, &mut counter).unwrap();
        // Level 1 subbands are 6x6 (4 tiles), level 2 subbands 3x3 (1 tile):
        // per group 3*4 + 4*1 = 16 graphs.
        assert_eq!(counter.graphs, 32);
        let expect: Vec<&str> = vec!["HH1", "HH2", "HL1", "HL2", "LH1", "LH2", "LL2"];
        let got: Vec<&str> = counter.subbands.iter().map(|s| s.as_str()).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn json_and_dot_dumps_are_well_formed() {
        let cfg = McgaConfig::default();
        let seqs = [seq(0, 5, 0.0f32), seq(1, 5, 0.1), seq(2, 5, 4.0)];
        let g = build_graph(&seqs, &cfg, 3).unwrap();
        let j = graph_to_json(&g, "HL1", true);
        assert_eq!(j["group"], 3);
        assert_eq!(j["subband"], "HL1");
        assert_eq!(j["position"], 5);
        assert_eq!(j["node_count"], 3);
        assert_eq!(j["weights"].as_array().unwrap().len(), 3);
        assert_eq!(j["distance_matrix"][0][0], 0.0);
        let no_dist = graph_to_json(&g, "HL1", false);
        assert!(no_dist.get("distance_matrix").is_none());

        let dot = graph_to_dot(&g, "HL1");
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches("->").count(), 3);
        // Nodes 0 and 1 point at each other and node 2's nearest is node 1,
        // so the weights are 1, 2, 0: node 1 darkest, node 2 lightest.
        assert!(dot.contains("n1 [label=\"c1\\nw=2.000\", fillcolor=\"gray40\"]"));
        assert!(dot.contains("n2 [label=\"c2\\nw=0.000\", fillcolor=\"gray95\"]"));
    }

    #[test]
    fn one_dimensional_motif_pair_matches_brute_force() {
        // Independent brute force with its own distance arithmetic.
        let series: Vec<f64> = (0..40)
            .map(|i| ((i * 7919 + 13) % 101) as f64 * 0.37 - 15.0)
            .collect();
        let window = 6;
        let mut best = (usize::MAX, usize::MAX);
        let mut best_d = f64::INFINITY;
        for a in 0..=(series.len() - window) {
            for b in (a + 1)..=(series.len() - window) {
                let mut acc = 0.0;
                for k in 0..window {
                    let d = series[a + k] - series[b + k];
                    acc += d * d;
                }
                let d = acc.sqrt();
                if d < best_d {
                    best_d = d;
                    best = (a, b);
                }
            }
        }
        assert_eq!(motif_pair_1d(&series, window).unwrap(), best);
    }

    #[test]
    fn short_series_is_a_dimension_error() {
        assert!(matches!(
            motif_pair_1d(&[1.0f32, 2.0, 3.0], 3),
            Err(MochaError::Dimension(_))
        ));
    }
}
