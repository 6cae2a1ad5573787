#include "annomesh/binpack.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "annomesh/ensemble.hpp"

namespace annomesh::binpack {

namespace {

void check_fits(std::size_t items, std::size_t bins, std::size_t capacity) {
    if (items > bins * capacity) throw std::invalid_argument("binpack: items exceed total capacity");
}

}  // namespace

double bin_cost(std::size_t neighbors, std::size_t capacity, std::size_t load) {
    if (load == 0) return 0.0;
    if (load > capacity) throw std::invalid_argument("binpack: load exceeds capacity");
    const std::size_t free_memory = capacity - load;
    if (neighbors == 0 || free_memory == 0) return 1.0;
    return std::min(1.0, 1.0 / (static_cast<double>(neighbors) * static_cast<double>(free_memory)));
}

double assignment_cost(const PackingInstance& instance) {
    if (instance.assignment.size() != instance.volumes.size())
        throw std::invalid_argument("binpack: every item needs exactly one bin");
    std::vector<std::size_t> loads(instance.bins.size(), 0);
    for (std::size_t item = 0; item < instance.volumes.size(); ++item) {
        const std::size_t bin = instance.assignment[item];
        if (bin >= instance.bins.size()) throw std::invalid_argument("binpack: assignment to unknown bin");
        loads[bin] += instance.volumes[item];
    }
    double total = 0.0;
    for (std::size_t i = 0; i < loads.size(); ++i) {
        if (loads[i] > instance.bins[i].capacity) throw std::invalid_argument("binpack: capacity violated");
        total += bin_cost(instance.bins[i].neighbors, instance.bins[i].capacity, loads[i]);
    }
    return total;
}

double load_cost(std::span<const std::size_t> loads, std::span<const std::size_t> neighbor_counts,
                 std::size_t capacity) {
    if (loads.size() != neighbor_counts.size()) throw std::invalid_argument("binpack: loads and bins differ");
    double total = 0.0;
    for (std::size_t i = 0; i < loads.size(); ++i) total += bin_cost(neighbor_counts[i], capacity, loads[i]);
    return total;
}

double optimal_cost(std::size_t items, std::span<const std::size_t> neighbor_counts, std::size_t capacity) {
    check_fits(items, neighbor_counts.size(), capacity);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    // best[t]: cheapest way to place t items on the bins seen so far.
    std::vector<double> best(items + 1, kInf);
    best[0] = 0.0;
    for (std::size_t neighbors : neighbor_counts) {
        std::vector<double> next(items + 1, kInf);
        for (std::size_t placed = 0; placed <= items; ++placed) {
            if (best[placed] == kInf) continue;
            for (std::size_t load = 0; load <= capacity && placed + load <= items; ++load) {
                const double cost = best[placed] + bin_cost(neighbors, capacity, load);
                if (cost < next[placed + load]) next[placed + load] = cost;
            }
        }
        best = std::move(next);
    }
    return best[items];
}

double pair_loads(std::vector<std::size_t> loads, std::span<const std::size_t> neighbor_counts,
                  std::size_t capacity) {
    if (loads.size() > neighbor_counts.size()) throw std::invalid_argument("binpack: more loads than bins");
    loads.resize(neighbor_counts.size(), 0);
    std::sort(loads.begin(), loads.end());

    std::vector<std::size_t> connected;
    std::size_t isolated = 0;
    for (std::size_t n : neighbor_counts) {
        if (n == 0)
            ++isolated;
        else
            connected.push_back(n);
    }
    std::sort(connected.begin(), connected.end());

    double total = 0.0;
    // Isolated bins: empty loads from the front, otherwise the largest loads.
    const std::size_t empties = static_cast<std::size_t>(std::count(loads.begin(), loads.end(), 0));
    const std::size_t from_front = std::min(isolated, empties);
    const std::size_t from_back = isolated - from_front;
    total += static_cast<double>(from_back);
    std::vector<std::size_t> rest(loads.begin() + static_cast<std::ptrdiff_t>(from_front),
                                  loads.end() - static_cast<std::ptrdiff_t>(from_back));

    // Full loads cost 1 wherever they go; give them the least connected bins.
    const std::size_t full = static_cast<std::size_t>(std::count(rest.begin(), rest.end(), capacity));
    total += static_cast<double>(full);
    rest.resize(rest.size() - full);  // sorted, so full loads sit at the back
    for (std::size_t i = 0; i < rest.size(); ++i) total += bin_cost(connected[full + i], capacity, rest[i]);
    return total;
}

double pair_loads_exhaustive(std::vector<std::size_t> loads, std::span<const std::size_t> neighbor_counts,
                             std::size_t capacity) {
    if (loads.size() > neighbor_counts.size()) throw std::invalid_argument("binpack: more loads than bins");
    loads.resize(neighbor_counts.size(), 0);
    std::sort(loads.begin(), loads.end());
    double best = std::numeric_limits<double>::infinity();
    do {
        best = std::min(best, load_cost(loads, neighbor_counts, capacity));
    } while (std::next_permutation(loads.begin(), loads.end()));
    return best;
}

double optimal_cost_by_partitions(std::size_t items, std::span<const std::size_t> neighbor_counts,
                                  std::size_t capacity) {
    check_fits(items, neighbor_counts.size(), capacity);
    if (items == 0) return 0.0;
    const bool exhaustive = neighbor_counts.size() <= 8;
    double best = std::numeric_limits<double>::infinity();
    ensemble::for_each_partition(static_cast<int>(items), static_cast<int>(neighbor_counts.size()),
                                 static_cast<int>(capacity), [&](const std::vector<int>& parts) {
                                     std::vector<std::size_t> loads(parts.begin(), parts.end());
                                     const double cost =
                                         exhaustive ? pair_loads_exhaustive(std::move(loads), neighbor_counts, capacity)
                                                    : pair_loads(std::move(loads), neighbor_counts, capacity);
                                     best = std::min(best, cost);
                                 });
    return best;
}

double worst_cost(std::size_t items, std::span<const std::size_t> neighbor_counts, std::size_t capacity) {
    check_fits(items, neighbor_counts.size(), capacity);
    std::vector<std::size_t> connected;
    std::size_t isolated = 0;
    for (std::size_t n : neighbor_counts) {
        if (n == 0)
            ++isolated;
        else
            connected.push_back(n);
    }
    std::sort(connected.begin(), connected.end());

    std::size_t remaining = items;
    const std::size_t singles = std::min(remaining, isolated);
    double total = static_cast<double>(singles);
    remaining -= singles;

    const std::size_t filled = std::min(remaining / capacity, connected.size());
    total += static_cast<double>(filled);
    remaining -= filled * capacity;

    if (remaining > 0 && filled < connected.size()) {
        // Filled bins were taken from the most connected end.
        total += bin_cost(connected.front(), capacity, remaining);
    }
    // Otherwise the remainder tops up isolated bins, which already cost 1.
    return total;
}

}  // namespace annomesh::binpack
