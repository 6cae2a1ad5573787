#ifndef ANNOMESH_ENSEMBLE_HPP
#define ANNOMESH_ENSEMBLE_HPP

// Plurality-vote ensemble accuracy: integer partitions, multinomial
// coefficients, the closed-form success probability and a brute-force oracle.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace annomesh::ensemble {

using BigInt = boost::multiprecision::cpp_int;

/// Integer partition of n, kept in both part and multiplicity notation.
///
/// `parts` is nonincreasing and strictly positive. `multiplicities[j - 1]`
/// holds k_j, the number of parts equal to j, for j = 1 .. largest part.
struct Partition {
    std::vector<int> parts;
    std::vector<int> multiplicities;

    static Partition from_parts(std::vector<int> parts);

    int total() const;
    int length() const { return static_cast<int>(parts.size()); }
    int largest() const { return parts.empty() ? 0 : parts.front(); }
    int multiplicity(int part) const;

    bool operator==(const Partition&) const = default;
};

/// Calls `visit(parts)` for every partition of n with at most `max_parts`
/// parts, each no larger than `max_part`, in descending lexicographic order.
/// `parts` is only valid during the call.
template <class Visitor>
void for_each_partition(int n, int max_parts, int max_part, Visitor&& visit);

/// Every partition of n, descending lexicographic by parts.
std::vector<Partition> enumerate_partitions(int n);

/// Number of partitions of n, via the recurrence p(n, k) = p(n - k, k) + p(n, k - 1).
BigInt partition_count(int n);

BigInt binomial(int n, int k);

/// (sum parts)! / prod(parts_i!), exact.
BigInt multinomial_coefficient(std::span<const int> parts);

/// Per-class accuracy of a classifier over c classes.
struct ClassModel {
    std::vector<std::string> names;
    std::vector<double> accuracy;

    int class_count() const { return static_cast<int>(accuracy.size()); }
    int class_index(const std::string& name) const;
    void validate() const;

    /// BGA-DGCNN per-class accuracies on SceneNN PB-T50-RS (13 classes).
    static ClassModel scenenn_bga_dgcnn();
    /// Overall accuracy reported alongside the per-class table.
    static constexpr double kScenennOverallAccuracy = 0.757;
};

/// Vote counts per class. Index 0 is the correct class.
struct VoteTally {
    std::vector<int> counts;

    int total() const;
    int class_count() const { return static_cast<int>(counts.size()); }
};

/// Multinomial pmf of a tally when each vote is correct with probability p
/// and otherwise uniform over the c - 1 incorrect classes.
double pmf_phi(const VoteTally& tally, double p);

/// Number of tallies z with z_1 maximal whose sorted nonzero counts equal xi
/// (correct class holding a largest part). Zero when xi has more parts than
/// there are classes.
BigInt preimage_count(const Partition& xi, int class_count);

/// Probability that a uniform tie-break picks the correct class given shape xi.
double success_given_partition(const Partition& xi);

/// Closed-form probability that plurality voting over n votes picks the
/// correct class. Partitions longer than c are infeasible and skipped, which
/// extends the formula to n > c.
double ensemble_accuracy(int n, double p, int class_count);

/// Same quantity by enumerating all c^n ordered vote sequences.
/// Throws std::length_error when c^n exceeds kBruteForceLimit.
double brute_force_ensemble(int n, double p, int class_count);
inline constexpr std::uint64_t kBruteForceLimit = 100'000'000;

/// Smallest n <= n_max with ensemble_accuracy(n, p, c) >= target.
std::optional<int> min_votes_for_target(double p, int class_count, double target, int n_max);

/// Most frequent label; ties resolved uniformly at random with `rng`.
template <std::uniform_random_bit_generator Rng>
int plurality_vote(std::span<const int> labels, Rng& rng);

// ---------------------------------------------------------------------------

namespace detail {

template <class Visitor>
void partitions_rec(std::vector<int>& parts, int remaining, int max_parts, int max_part,
                    Visitor& visit) {
    if (remaining == 0) {
        visit(static_cast<const std::vector<int>&>(parts));
        return;
    }
    if (static_cast<int>(parts.size()) == max_parts) return;
    // The remaining parts (at most max_parts - size of them, each <= top)
    // must be able to cover `remaining`.
    const int slots = max_parts - static_cast<int>(parts.size());
    for (int top = std::min(remaining, max_part); top >= 1; --top) {
        if (static_cast<long long>(top) * slots < remaining) break;
        parts.push_back(top);
        partitions_rec(parts, remaining - top, max_parts, top, visit);
        parts.pop_back();
    }
}

}  // namespace detail

template <class Visitor>
void for_each_partition(int n, int max_parts, int max_part, Visitor&& visit) {
    if (n < 0) throw std::invalid_argument("for_each_partition: n must be nonnegative");
    std::vector<int> parts;
    parts.reserve(static_cast<std::size_t>(std::max(n, 1)));
    detail::partitions_rec(parts, n, max_parts, max_part, visit);
}

template <std::uniform_random_bit_generator Rng>
int plurality_vote(std::span<const int> labels, Rng& rng) {
    if (labels.empty()) throw std::invalid_argument("plurality_vote: no votes");
    std::vector<int> sorted(labels.begin(), labels.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<int> winners;
    int best = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const int count = static_cast<int>(j - i);
        if (count > best) {
            best = count;
            winners.assign(1, sorted[i]);
        } else if (count == best) {
            winners.push_back(sorted[i]);
        }
        i = j;
    }
    if (winners.size() == 1) return winners.front();
    std::uniform_int_distribution<std::size_t> pick(0, winners.size() - 1);
    return winners[pick(rng)];
}

}  // namespace annomesh::ensemble

#endif  // ANNOMESH_ENSEMBLE_HPP
