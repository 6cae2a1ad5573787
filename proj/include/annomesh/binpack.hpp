#ifndef ANNOMESH_BINPACK_HPP
#define ANNOMESH_BINPACK_HPP

// Storage cost of a tuple-to-agent assignment, modelled as variable cost and
// size bin packing. Bin i costs 1 / (|N_i| m_i) when selected, with every term
// capped at 1 (so isolated or full bins cost exactly 1); unused bins cost 0.

#include <cstddef>
#include <span>
#include <vector>

namespace annomesh::binpack {

struct Bin {
    std::size_t capacity = 0;   // M_i
    std::size_t neighbors = 0;  // |N_i|
};

/// Items with volumes, bins, and the bin index chosen for every item.
struct PackingInstance {
    std::vector<std::size_t> volumes;
    std::vector<Bin> bins;
    std::vector<std::size_t> assignment;
};

/// Capped cost of one bin holding `load` units; 0 for an unused bin.
double bin_cost(std::size_t neighbors, std::size_t capacity, std::size_t load);

/// Throws std::invalid_argument on an out-of-range bin index or a capacity violation.
double assignment_cost(const PackingInstance& instance);

/// Cost of per-bin loads under uniform capacity.
double load_cost(std::span<const std::size_t> loads, std::span<const std::size_t> neighbor_counts,
                 std::size_t capacity);

/// Minimum cost of packing `items` unit items into bins of uniform capacity,
/// by dynamic programming over bins. Exact; O(bins * items * capacity).
/// Throws std::invalid_argument when the items do not fit.
double optimal_cost(std::size_t items, std::span<const std::size_t> neighbor_counts, std::size_t capacity);

/// Same minimum by enumerating integer partitions of `items` into at most
/// |bins| parts no larger than capacity and pairing each partition's loads
/// with the bins. Exponential in the instance; meant for small instances.
double optimal_cost_by_partitions(std::size_t items, std::span<const std::size_t> neighbor_counts,
                                  std::size_t capacity);

/// Cheapest placement of a fixed multiset of loads onto the bins.
///
/// Isolated bins take empty loads first, then the largest loads. Full loads
/// go to the least connected remaining bins. The rest are paired in sorted
/// order (fewest neighbors with the smallest load, i.e. the most residual
/// memory), which the rearrangement inequality makes optimal.
double pair_loads(std::vector<std::size_t> loads, std::span<const std::size_t> neighbor_counts,
                  std::size_t capacity);

/// Minimum over every bijection of loads to bins. Factorial cost.
double pair_loads_exhaustive(std::vector<std::size_t> loads, std::span<const std::size_t> neighbor_counts,
                             std::size_t capacity);

/// Cost of the adversarial construction: one item on every isolated bin, as
/// many connected bins as possible filled to zero free memory (most connected
/// first), and the remainder on the least connected bin left.
double worst_cost(std::size_t items, std::span<const std::size_t> neighbor_counts, std::size_t capacity);

}  // namespace annomesh::binpack

#endif  // ANNOMESH_BINPACK_HPP
